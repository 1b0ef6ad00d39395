"""Builders for the two reference experiments and the fuzz-case generator.

The avoided-crossing sweep keeps a gap >= delta, so its level structure is
non-degenerate everywhere and coherence carries the whole story. The
collective-spin magnet lives in the maximal-spin sector (dimension N+1,
diagonal in the magnetization basis); its +-m levels merge as the field
reaches zero, and pairs of different |m| cross transiently at the field
values B = (J/N)|m1+m2| on the way down.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Protocol
from .gauge import CLUSTER_TOL_REL, cluster_spectrum, default_cluster_tol_abs
from .invariants import level_distribution, s_gauge
from .linalg import ValidationError, eigh, gibbs_state

_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# margin between the smallest field-induced splitting on a grid and the
# clustering tolerance below which the +-m structure cannot be trusted
SPLITTING_SAFETY = 10.0


def landau_zener(delta: float, v: float, t: float) -> np.ndarray:
    """(delta/2) sigma_x + (v t / 2) sigma_z."""
    return 0.5 * delta * _SIGMA_X + 0.5 * v * t * _SIGMA_Z


def curie_weiss(j_coupling: float, n_spins: int, b_field: float) -> np.ndarray:
    """-(J/N) J_z^2 - B J_z in the maximal-spin sector.

    Diagonal with entries -(J/N) m^2 - B m for m = -N/2 ... N/2 ascending.
    """
    if n_spins < 1:
        raise ValueError(f"n_spins must be >= 1, got {n_spins}")
    m = np.arange(n_spins + 1) - n_spins / 2.0
    return np.diag(-(j_coupling / n_spins) * m * m - b_field * m).astype(complex)


def landau_zener_protocol(
    *,
    delta: float = 2.0,
    v: float = 1.0,
    beta: float = 2.0,
    t_final: float = 1.0,
    nodes: int = 1001,
) -> Protocol:
    times = np.linspace(0.0, t_final, nodes)
    hams = np.stack([landau_zener(delta, v, t) for t in times])
    return Protocol(times=times, hamiltonians=hams, beta=beta, label="landau_zener")


def curie_weiss_protocol(
    *,
    j_coupling: float = 1.0,
    n_spins: int = 50,
    b_start: float = 2.0,
    b_end: float = 0.0,
    beta: float = 2.0,
    t_final: float = 5.0,
    nodes: int = 2001,
    cluster_tol_abs: float | None = None,
    cluster_tol_rel: float = CLUSTER_TOL_REL,
) -> Protocol:
    """Linear field ramp with a grid/tolerance compatibility check.

    The smallest +-m splitting at the last nonzero field on the grid is
    2 |B|; if that does not clear the clustering tolerance by a safe margin,
    the pair structure degrades before the field actually vanishes, so the
    pairing is rejected here rather than silently mis-clustered downstream.
    """
    times = np.linspace(0.0, t_final, nodes)
    b_grid = b_start + (times / t_final) * (b_end - b_start)
    hams = np.stack([curie_weiss(j_coupling, n_spins, b) for b in b_grid])
    nonzero = np.abs(b_grid) > 0.0
    if np.any(nonzero):
        j_min = int(np.flatnonzero(nonzero)[np.argmin(np.abs(b_grid[nonzero]))])
        h_min = hams[j_min]
        tol_abs = cluster_tol_abs if cluster_tol_abs is not None else default_cluster_tol_abs(h_min)
        tol = tol_abs + cluster_tol_rel * float(np.max(np.abs(np.diag(h_min).real)))
        splitting = 2.0 * float(np.min(np.abs(b_grid[nonzero])))
        if splitting <= SPLITTING_SAFETY * tol:
            raise ValidationError(
                f"field splitting {splitting:.3e} at node {j_min} does not clear "
                f"the clustering tolerance {tol:.3e}; refine the tolerance or coarsen the grid"
            )
    return Protocol(times=times, hamiltonians=hams, beta=beta, label="curie_weiss")


def _random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2.0


def _with_duplicate_eigenvalues(h: np.ndarray) -> np.ndarray:
    es = eigh(h)
    w = es.eigenvalues.copy()
    w[1] = w[0]
    if len(w) >= 4:
        w[3] = w[2]
    out = (es.eigenvectors * w) @ es.eigenvectors.conj().T
    return (out + out.conj().T) / 2.0


def random_protocol(
    dim: int,
    nodes: int,
    rng: np.random.Generator,
    *,
    degenerate: bool = False,
    beta: float = 1.0,
    t_final: float = 1.0,
) -> Protocol:
    """Linear ramp between two Gaussian Hermitian operators.

    With degenerate=True both endpoint operators get exactly duplicated
    eigenvalues (one pair, two for dim >= 4), so the t=0 and t=tau structures
    carry levels with n >= 2 while interior nodes stay generic.
    """
    if not 2 <= dim <= 8:
        raise ValueError(f"dim must be in [2, 8], got {dim}")
    if nodes < 2:
        raise ValueError(f"nodes must be >= 2, got {nodes}")
    h_a = _random_hermitian(dim, rng)
    h_end = _random_hermitian(dim, rng)
    if degenerate:
        h_a = _with_duplicate_eigenvalues(h_a)
        h_end = _with_duplicate_eigenvalues(h_end)
    times = np.linspace(0.0, t_final, nodes)
    ramp = (times / t_final)[:, None, None]
    hams = h_a[None, :, :] + ramp * (h_end - h_a)[None, :, :]
    return Protocol(times=times, hamiltonians=hams, beta=beta, label="random")


@dataclass(frozen=True)
class ThirdLawScan:
    """Invariant entropy of the thermal state along an inverse-temperature grid."""

    betas: np.ndarray
    s_gt: np.ndarray
    ground_multiplicity: int
    gap: float | None


def third_law_scan(h: np.ndarray, betas) -> ThirdLawScan:
    """s_gauge(gibbs_state(h, beta)) per beta.

    The series decreases in beta and saturates at ln(ground multiplicity)
    once 1/beta is well below the gap.
    """
    betas = np.asarray(betas, dtype=float)
    if betas.ndim != 1 or betas.size == 0:
        raise ValueError("betas must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(betas)) or np.any(betas <= 0):
        raise ValueError("betas must be finite and positive")
    if np.any(np.diff(betas) <= 0):
        raise ValueError("betas must be strictly ascending")
    ds = cluster_spectrum(eigh(h), default_cluster_tol_abs(h))
    out = np.empty_like(betas)
    for i, beta in enumerate(betas):
        rho, _ = gibbs_state(h, float(beta))
        out[i] = s_gauge(level_distribution(rho, ds))
    gap = float(ds.energies[1] - ds.energies[0]) if ds.n_levels > 1 else None
    return ThirdLawScan(
        betas=betas,
        s_gt=out,
        ground_multiplicity=int(ds.mults[0]),
        gap=gap,
    )


_REQUIRED_PARAMS = {
    "landau_zener": ("delta", "v"),
    "curie_weiss": ("j", "n_spins", "b_start", "b_end"),
    "random": ("dim", "degenerate"),
}


@dataclass(frozen=True)
class ModelSpec:
    """Resolved description of one protocol run."""

    name: str
    params: dict = field(default_factory=dict)
    nodes: int = 1001
    t_final: float = 1.0
    beta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.name not in _REQUIRED_PARAMS:
            raise ValueError(f"unknown model name '{self.name}'")
        required = _REQUIRED_PARAMS[self.name]
        for key in required:
            if key not in self.params:
                raise ValueError(f"model '{self.name}' is missing required param '{key}'")
        for key in self.params:
            if key not in required:
                raise ValueError(f"model '{self.name}' got unknown param '{key}'")
        if self.nodes < 2:
            raise ValueError(f"nodes must be >= 2, got {self.nodes}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")


def build_protocol(spec: ModelSpec) -> Protocol:
    if spec.name == "landau_zener":
        return landau_zener_protocol(
            delta=float(spec.params["delta"]),
            v=float(spec.params["v"]),
            beta=spec.beta,
            t_final=spec.t_final,
            nodes=spec.nodes,
        )
    if spec.name == "curie_weiss":
        return curie_weiss_protocol(
            j_coupling=float(spec.params["j"]),
            n_spins=int(spec.params["n_spins"]),
            b_start=float(spec.params["b_start"]),
            b_end=float(spec.params["b_end"]),
            beta=spec.beta,
            t_final=spec.t_final,
            nodes=spec.nodes,
        )
    rng = np.random.default_rng(spec.seed)
    return random_protocol(
        int(spec.params["dim"]),
        spec.nodes,
        rng,
        degenerate=bool(spec.params["degenerate"]),
        beta=spec.beta,
        t_final=spec.t_final,
    )
