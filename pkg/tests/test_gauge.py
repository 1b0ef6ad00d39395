"""Degeneracy clustering and twirl tests."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugetherm.gauge import (
    cluster_spectrum,
    default_cluster_tol_abs,
    sample_gauge_element,
    twirl,
    twirl_oracle,
)
from gaugetherm.linalg import ValidationError, eigh, haar_unitary, von_neumann_entropy

from test_linalg import random_density


def structure_of(h: np.ndarray, **kw):
    return cluster_spectrum(eigh(h), default_cluster_tol_abs(h), **kw)


def test_cluster_exact_degeneracy():
    ds = structure_of(np.diag([0.0, 0.0, 1.0]).astype(complex))
    assert tuple(ds.mults) == (2, 1)
    assert np.allclose(ds.energies, [0.0, 1.0])
    assert ds.degenerate
    p0 = ds.projector(0)
    assert np.allclose(p0 @ p0, p0, atol=1e-14)
    assert np.trace(p0).real == pytest.approx(2.0)
    # projector onto the split-off level is orthogonal to it
    assert np.allclose(p0 @ ds.projector(1), 0.0, atol=1e-14)


def test_cluster_near_degeneracy_tolerance():
    h = np.diag([0.0, 1e-13, 1.0]).astype(complex)
    assert tuple(structure_of(h).mults) == (2, 1)
    h2 = np.diag([0.0, 1e-3, 1.0]).astype(complex)
    assert tuple(structure_of(h2).mults) == (1, 1, 1)
    # widening the absolute tolerance merges the pair
    ds = cluster_spectrum(eigh(h2), 1e-2)
    assert tuple(ds.mults) == (2, 1)


def test_cluster_rejects_nonorthonormal_basis():
    es = eigh(np.diag([0.0, 1.0]).astype(complex))
    skewed = type(es)(eigenvalues=es.eigenvalues, eigenvectors=es.eigenvectors * 1.5)
    with pytest.raises(ValidationError):
        cluster_spectrum(skewed, 1e-9)


def test_twirl_block_mixing_hand_value():
    # d=3, levels (n=2, n=1); pure state spread p / (1-p) across the blocks
    h = np.diag([0.0, 0.0, 1.0]).astype(complex)
    ds = structure_of(h)
    p = 0.3
    psi = np.array([np.sqrt(p), 0.0, np.sqrt(1 - p)], dtype=complex)
    rho = np.outer(psi, psi.conj())
    assert np.allclose(twirl(rho, ds), np.diag([p / 2, p / 2, 1 - p]), atol=1e-14)


def test_twirl_properties_random_basis():
    rng = np.random.default_rng(10)
    u = haar_unitary(4, rng)
    h = u @ np.diag([0.0, 0.0, 1.0, 2.0]) @ u.conj().T
    h = (h + h.conj().T) / 2
    ds = structure_of(h)
    rho = random_density(4, rng)
    te = twirl(rho, ds)
    assert np.trace(te).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(te, twirl(te, ds), atol=1e-12)
    assert np.allclose(te @ h, h @ te, atol=1e-10)
    assert np.min(np.linalg.eigvalsh(te)) > -1e-12


def test_twirl_oracle_matches_exact():
    rng = np.random.default_rng(21)
    u = haar_unitary(3, rng)
    h = u @ np.diag([0.0, 0.0, 2.0]) @ u.conj().T
    h = (h + h.conj().T) / 2
    ds = structure_of(h)
    rho = random_density(3, rng)
    samples = 4000
    dev = np.max(np.abs(twirl_oracle(rho, ds, samples, rng) - twirl(rho, ds)))
    assert dev < 3 / np.sqrt(samples) + 1e-3


def test_gauge_element_structure():
    rng = np.random.default_rng(4)
    h = np.diag([0.0, 0.0, 1.0, 2.0]).astype(complex)
    ds = structure_of(h)
    g = sample_gauge_element(ds, rng)
    v = g.embedded
    assert np.allclose(v @ v.conj().T, np.eye(4), atol=1e-12)
    # commutes with every level projector, hence with H
    for k in range(ds.n_levels):
        pk = ds.projector(k)
        assert np.allclose(v @ pk, pk @ v, atol=1e-12)
    rho = random_density(4, rng)
    moved = v @ rho @ v.conj().T
    assert np.allclose(twirl(moved, ds), twirl(rho, ds), atol=1e-12)


@settings(deadline=None, max_examples=20)
@given(seed=st.integers(0, 10_000))
def test_twirl_is_entropy_nondecreasing(seed):
    rng = np.random.default_rng(seed)
    u = haar_unitary(4, rng)
    h = u @ np.diag([0.0, 0.0, 1.0, 1.0]) @ u.conj().T
    h = (h + h.conj().T) / 2
    ds = structure_of(h)
    rho = random_density(4, rng)
    assert von_neumann_entropy(twirl(rho, ds)) >= von_neumann_entropy(rho) - 1e-10
