"""Degeneracy structure of a spectrum, the thermodynamic gauge group it
generates, and the twirl map onto block-uniform states.

The gauge group of a Hamiltonian with level multiplicities (n^1, ..., n^L) is
U(n^1) x ... x U(n^L) acting inside the degenerate eigenspaces. Twirling
averages a state over that group: the result keeps only the level populations
and spreads each uniformly across its eigenspace.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    EigenSystem,
    ValidationError,
    haar_unitary,
    validate_density,
)

CLUSTER_TOL_REL = 1e-9
PROJECTOR_TOL = 1e-9


def default_cluster_tol_abs(H: np.ndarray) -> float:
    """Absolute gap tolerance scaled to the operator: 1e-9 * max(1, ||H||_max * dim)."""
    H = np.asarray(H)
    hmax = float(np.max(np.abs(H))) if H.size else 0.0
    return 1e-9 * max(1.0, hmax * H.shape[0])


@dataclass(frozen=True)
class DegeneracyStructure:
    """Clustered levels of a Hermitian spectrum.

    energies[k] is the multiplicity-weighted mean of the member eigenvalues,
    mults[k] the level dimension, and basis the unitary whose column slice
    for level k spans that eigenspace. Projectors are materialized on demand;
    storing them per level would dominate memory on long protocols.
    """

    energies: np.ndarray
    mults: np.ndarray
    basis: np.ndarray
    dim: int
    slices: tuple[slice, ...] = field(repr=False, default=())

    @property
    def n_levels(self) -> int:
        return len(self.mults)

    def projector(self, k: int) -> np.ndarray:
        cols = self.basis[:, self.slices[k]]
        return cols @ cols.conj().T

    @property
    def levels(self) -> list[tuple[float, int, np.ndarray]]:
        return [
            (float(self.energies[k]), int(self.mults[k]), self.projector(k))
            for k in range(self.n_levels)
        ]

    def level_hamiltonian(self) -> np.ndarray:
        """Sum_k eps^k Pi_k, the clustered representative of H."""
        w = np.concatenate(
            [np.full(int(n), e) for e, n in zip(self.energies, self.mults)]
        )
        return (self.basis * w) @ self.basis.conj().T

    @property
    def degenerate(self) -> bool:
        return bool(np.any(self.mults > 1))


def cluster_spectrum(
    es: EigenSystem, tol_abs: float, tol_rel: float = CLUSTER_TOL_REL
) -> DegeneracyStructure:
    """Greedy gap clustering of an ascending spectrum into degenerate levels.

    A new level starts whenever the gap to the previous eigenvalue exceeds
    tol_abs + tol_rel * spectral_radius. Exact model degeneracies sit at
    round-off scale, far below physical gaps, so the split is unambiguous for
    every protocol this library builds; ambiguous inputs fail validation.
    """
    if tol_abs < 0 or tol_rel < 0:
        raise ValueError("clustering tolerances must be nonnegative")
    w = np.asarray(es.eigenvalues, dtype=float)
    V = es.eigenvectors
    d = w.shape[0]
    spectral = float(np.max(np.abs(w))) if d else 0.0
    tol = tol_abs + tol_rel * spectral

    boundaries = [0]
    for i in range(1, d):
        if w[i] - w[i - 1] > tol:
            boundaries.append(i)
    boundaries.append(d)

    slices = tuple(slice(a, b) for a, b in zip(boundaries[:-1], boundaries[1:]))
    energies = np.array([float(w[s].mean()) for s in slices])
    mults = np.array([s.stop - s.start for s in slices], dtype=int)

    if int(mults.sum()) != d:
        raise ValidationError("level multiplicities do not sum to the dimension")
    if np.any(np.diff(energies) <= tol):
        raise ValidationError(
            "clustering tolerance cannot separate the level energies; "
            "tighten the tolerance or treat the levels as merged"
        )
    if float(np.max(np.abs(V.conj().T @ V - np.eye(d)))) > PROJECTOR_TOL:
        raise ValidationError("eigenbasis is not orthonormal within tolerance")
    return DegeneracyStructure(
        energies=energies, mults=mults, basis=V, dim=d, slices=slices
    )


def twirl(rho: np.ndarray, ds: DegeneracyStructure) -> np.ndarray:
    """Average rho over the gauge group: level populations spread uniformly.

    Computed from the projector formula sum_k Tr(Pi_k rho) Pi_k / n^k in the
    level basis, which is exact and O(d^3); Haar averaging lives only in
    twirl_oracle.
    """
    rho = validate_density(rho, check_psd=False)
    if rho.shape[0] != ds.dim:
        raise ValidationError(
            f"state dimension {rho.shape[0]} does not match structure dimension {ds.dim}"
        )
    B = ds.basis
    rb = B.conj().T @ rho @ B
    out = np.zeros_like(rb)
    for k, s in enumerate(ds.slices):
        p = float(np.real(np.trace(rb[s, s])))
        np.fill_diagonal(out[s, s], p / ds.mults[k])
    return B @ out @ B.conj().T


def twirl_oracle(
    rho: np.ndarray,
    ds: DegeneracyStructure,
    samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Monte Carlo twirl: average of V rho V^dag over Haar-sampled gauge elements.

    Converges to twirl(rho, ds) at O(1/sqrt(samples)); exists to certify the
    projector formula, not to replace it.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    acc = np.zeros_like(np.asarray(rho, dtype=complex))
    for _ in range(samples):
        V = sample_gauge_element(ds, rng).embedded
        acc += V @ rho @ V.conj().T
    return acc / samples


@dataclass(frozen=True)
class GaugeElement:
    """One element of the gauge group: per-level Haar blocks and the full-space embedding."""

    blocks: tuple[np.ndarray, ...]
    embedded: np.ndarray


def sample_gauge_element(ds: DegeneracyStructure, rng: np.random.Generator) -> GaugeElement:
    """Independent Haar unitary on each level, embedded via the eigenbasis."""
    blocks = tuple(haar_unitary(int(n), rng) for n in ds.mults)
    block_diag = np.zeros((ds.dim, ds.dim), dtype=complex)
    for s, b in zip(ds.slices, blocks):
        block_diag[s, s] = b
    B = ds.basis
    return GaugeElement(blocks=blocks, embedded=B @ block_diag @ B.conj().T)
