"""Model builders, the fuzz-case generator, and the low-temperature scan."""
import math

import numpy as np
import pytest

import gaugetherm as gt
from gaugetherm.linalg import eigh
from gaugetherm.models import _REQUIRED_PARAMS


class TestHamiltonians:
    def test_avoided_crossing_eigenvalues(self):
        delta, v = 2.0, 1.0
        for t in (-1.0, 0.0, 0.3, 1.0):
            h = gt.landau_zener(delta, v, t)
            w = np.linalg.eigvalsh(h)
            e = 0.5 * math.hypot(delta, v * t)
            assert w == pytest.approx([-e, e], abs=1e-12)
        assert np.allclose(gt.landau_zener(delta, v, 0.0), delta / 2 * np.array([[0, 1], [1, 0]]))

    def test_collective_spin_free_case(self):
        # J=0, N=2: pure Zeeman term, energies -B*m for m = -1, 0, 1
        h = gt.curie_weiss(0.0, 2, 1.0)
        assert np.allclose(h, np.diag([1.0, 0.0, -1.0]))

    def test_collective_spin_zero_field_levels(self):
        h = gt.curie_weiss(1.0, 4, 0.0)
        ds = gt.cluster_spectrum(eigh(h), gt.default_cluster_tol_abs(h))
        assert ds.energies == pytest.approx([-1.0, -0.25, 0.0], abs=1e-12)
        assert tuple(ds.mults) == (2, 2, 1)
        assert ds.energies[1] - ds.energies[0] == pytest.approx(0.75)

    def test_collective_spin_rejects_bad_size(self):
        with pytest.raises(ValueError):
            gt.curie_weiss(1.0, 0, 1.0)


class TestProtocolBuilders:
    def test_avoided_crossing_protocol(self):
        p = gt.landau_zener_protocol()
        assert p.label == "landau_zener"
        assert len(p.times) == 1001
        assert p.times[-1] == pytest.approx(1.0)
        assert np.allclose(p.hamiltonians[0], gt.landau_zener(2.0, 1.0, 0.0))
        assert np.allclose(p.hamiltonians[-1], gt.landau_zener(2.0, 1.0, 1.0))

    def test_field_ramp_protocol(self):
        p = gt.curie_weiss_protocol()
        assert p.label == "curie_weiss"
        assert len(p.times) == 2001
        assert p.hamiltonians.shape[1] == 51
        assert np.allclose(p.hamiltonians[0], gt.curie_weiss(1.0, 50, 2.0))
        assert np.allclose(p.hamiltonians[-1], gt.curie_weiss(1.0, 50, 0.0))

    def test_field_ramp_rejects_coarse_tolerance(self):
        # a clustering tolerance beating the smallest on-grid splitting would
        # silently merge +-m pairs before the field vanishes
        with pytest.raises(gt.ValidationError):
            gt.curie_weiss_protocol(nodes=101, cluster_tol_abs=1.0)


class TestRandomProtocol:
    def test_deterministic_per_seed(self):
        a = gt.random_protocol(4, 11, np.random.default_rng(5))
        b = gt.random_protocol(4, 11, np.random.default_rng(5))
        assert np.array_equal(a.hamiltonians, b.hamiltonians)

    def test_degenerate_endpoints(self):
        p = gt.random_protocol(5, 21, np.random.default_rng(7), degenerate=True)
        for j in (0, -1):
            w = np.sort(np.linalg.eigvalsh(p.hamiltonians[j]))
            assert np.min(np.diff(w)) < 1e-12
        w_mid = np.sort(np.linalg.eigvalsh(p.hamiltonians[10]))
        assert np.min(np.diff(w_mid)) > 1e-6

    def test_dimension_bounds(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            gt.random_protocol(1, 11, rng)
        with pytest.raises(ValueError):
            gt.random_protocol(9, 11, rng)
        with pytest.raises(ValueError):
            gt.random_protocol(4, 1, rng)


class TestThirdLawScan:
    def test_unique_ground_state_entropy_vanishes(self):
        scan = gt.third_law_scan(np.diag([0.0, 1.0]), np.geomspace(1.0, 1e6, 13))
        assert scan.ground_multiplicity == 1
        assert scan.gap == pytest.approx(1.0)
        assert np.all(np.diff(scan.s_gt) <= 1e-12)
        assert scan.s_gt[-1] == pytest.approx(0.0, abs=1e-12)

    def test_doubly_degenerate_ground_state(self):
        scan = gt.third_law_scan(np.diag([0.0, 0.0, 1.0]), np.geomspace(1.0, 1e6, 13))
        assert scan.ground_multiplicity == 2
        assert scan.s_gt[-1] == pytest.approx(math.log(2), abs=1e-12)

    def test_small_magnet_saturates_at_ln2(self):
        h = gt.curie_weiss(1.0, 4, 0.0)
        gap = 0.75
        scan = gt.third_law_scan(h, np.geomspace(0.1 / gap, 1e6 / gap, 25))
        assert scan.gap == pytest.approx(gap)
        assert scan.ground_multiplicity == 2
        assert abs(scan.s_gt[-1] - math.log(2)) < 1e-4
        assert np.all(np.diff(scan.s_gt) <= 1e-12)

    def test_beta_grid_validation(self):
        h = np.diag([0.0, 1.0])
        with pytest.raises(ValueError):
            gt.third_law_scan(h, [])
        with pytest.raises(ValueError):
            gt.third_law_scan(h, [2.0, 1.0])
        with pytest.raises(ValueError):
            gt.third_law_scan(h, [-1.0, 1.0])


class TestModelSpec:
    def test_missing_param_named(self):
        with pytest.raises(ValueError, match="delta"):
            gt.ModelSpec(name="landau_zener", params={"v": 1.0})

    def test_unknown_param_named(self):
        with pytest.raises(ValueError, match="ramp_rate"):
            gt.ModelSpec(
                name="landau_zener", params={"delta": 2.0, "v": 1.0, "ramp_rate": 3.0}
            )

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="ising"):
            gt.ModelSpec(name="ising", params={})

    def test_bad_scalars(self):
        good = {"delta": 2.0, "v": 1.0}
        with pytest.raises(ValueError):
            gt.ModelSpec(name="landau_zener", params=good, nodes=1)
        with pytest.raises(ValueError):
            gt.ModelSpec(name="landau_zener", params=good, beta=0.0)
        with pytest.raises(ValueError):
            gt.ModelSpec(name="landau_zener", params=good, t_final=0.0)

    def test_dispatch(self):
        for name, params in (
            ("landau_zener", {"delta": 2.0, "v": 1.0}),
            ("curie_weiss", {"j": 1.0, "n_spins": 8, "b_start": 2.0, "b_end": 1.0}),
            ("random", {"dim": 3, "degenerate": False}),
        ):
            spec = gt.ModelSpec(name=name, params=params, nodes=11, beta=1.0)
            p = gt.build_protocol(spec)
            assert p.label == name
            assert len(p.times) == 11
        spec = gt.ModelSpec(name="random", params={"dim": 3, "degenerate": False}, nodes=11, seed=4)
        a = gt.build_protocol(spec)
        b = gt.build_protocol(spec)
        assert np.array_equal(a.hamiltonians, b.hamiltonians)

    def test_required_params_registry_is_total(self):
        assert set(_REQUIRED_PARAMS) == {"landau_zener", "curie_weiss", "random"}
