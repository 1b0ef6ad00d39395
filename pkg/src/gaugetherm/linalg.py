"""Dense Hermitian linear algebra: eigensystems, matrix functions, Gibbs states,
Haar unitaries, and the quantum-information distances used by the entropy bounds.

Conventions: hbar = k_B = 1, entropies in nats. All functions are pure and
operate on plain complex ndarrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
EIG_FLOOR = -1e-10
UNITARITY_TOL = 1e-10
# probabilities below this are treated as exact zeros in logarithms
PROB_FLOOR = 1e-14
# sigma eigenvalues below this count as null space in relative_entropy
SUPPORT_RANK_TOL = 1e-10


class ValidationError(ValueError):
    """An operator failed one of its structural invariants."""


def _max_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def validate_hermitian(H: np.ndarray, name: str = "operator") -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {H.shape}")
    scale = max(1.0, _max_norm(H))
    if _max_norm(H - H.conj().T) > HERMITICITY_TOL * scale:
        raise ValidationError(f"{name} is not Hermitian within tolerance")
    return H


def validate_density(rho: np.ndarray, name: str = "state", check_psd: bool = True) -> np.ndarray:
    rho = validate_hermitian(rho, name)
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"{name} trace is {tr:.3e}, expected 1")
    if check_psd:
        lo = float(np.linalg.eigvalsh(rho)[0])
        if lo < EIG_FLOOR:
            raise ValidationError(f"{name} has eigenvalue {lo:.3e} below {EIG_FLOOR}")
    return rho


def validate_unitary(U: np.ndarray, name: str = "unitary") -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    d = U.shape[0]
    if _max_norm(U @ U.conj().T - np.eye(d)) > UNITARITY_TOL:
        raise ValidationError(f"{name} is not unitary within tolerance")
    return U


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def eigh(H: np.ndarray) -> EigenSystem:
    """Full eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    H = validate_hermitian(H)
    w, V = np.linalg.eigh(H)
    return EigenSystem(eigenvalues=w, eigenvectors=V)


def expm_hermitian_scaled(H: np.ndarray, c: complex) -> np.ndarray:
    """exp(c*H) for Hermitian H via the spectral decomposition.

    With c purely imaginary this is the unitary propagator route used for
    every time step, so it must stay unitary to round-off.
    """
    es = eigh(H)
    w, V = es.eigenvalues, es.eigenvectors
    return (V * np.exp(c * w)) @ V.conj().T


def gibbs_state(H: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Thermal state e^{-beta H}/Z and ln Z.

    Eigenvalues are shifted by their minimum before exponentiating so that
    beta up to ~1e6 (third-law scans) cannot overflow; ln Z is returned with
    the shift restored.
    """
    if not (beta > 0) or not math.isfinite(beta):
        raise ValueError(f"beta must be positive and finite, got {beta}")
    es = eigh(H)
    w, V = es.eigenvalues, es.eigenvectors
    shifted = np.exp(-beta * (w - w[0]))
    Z = float(shifted.sum())
    rho = (V * (shifted / Z)) @ V.conj().T
    ln_z = math.log(Z) - beta * float(w[0])
    return rho, ln_z


def log_partition(energies: np.ndarray, mults: np.ndarray, beta: float) -> float:
    """ln Z from a clustered (energy, multiplicity) spectrum, shift-protected."""
    e = np.asarray(energies, dtype=float)
    n = np.asarray(mults, dtype=float)
    e0 = float(e.min())
    return math.log(float((n * np.exp(-beta * (e - e0))).sum())) - beta * e0


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x n unitary: complex Ginibre, QR, phase fix.

    The diagonal of R is rotated to the positive real axis, which removes the
    QR gauge freedom and makes the distribution exactly Haar.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return np.exp(2j * np.pi * rng.random()) * np.eye(1)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    q = q * (diag / np.abs(diag))
    return q


def _clamped_spectrum(rho: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(rho)
    return np.clip(w, 0.0, 1.0)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S_vN = -Tr(rho ln rho) in nats, with 0 ln 0 = 0."""
    w = _clamped_spectrum(rho)
    w = w[w > PROB_FLOOR]
    return float(-(w * np.log(w)).sum())


def shannon_entropy(p: np.ndarray) -> float:
    """Classical -sum p ln p with the 0 ln 0 = 0 convention."""
    p = np.asarray(p, dtype=float)
    p = p[p > PROB_FLOOR]
    return float(-(p * np.log(p)).sum())


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """S(rho||sigma) = Tr(rho ln rho) - Tr(rho ln sigma), in nats.

    If rho carries more than SUPPORT_RANK_TOL of probability on the null
    space of sigma the divergence is infinite and math.inf is returned as a
    sentinel for the caller to flag.
    """
    wr = _clamped_spectrum(rho)
    wr_pos = wr[wr > PROB_FLOOR]
    tr_rho_ln_rho = float((wr_pos * np.log(wr_pos)).sum())

    ws, Vs = np.linalg.eigh(sigma)
    ws = np.clip(ws, 0.0, 1.0)
    # probability mass of rho in each sigma eigendirection
    mass = np.real(np.einsum("ij,jk,ki->i", Vs.conj().T, rho, Vs))
    mass = np.clip(mass, 0.0, None)
    null = ws <= SUPPORT_RANK_TOL
    if float(mass[null].sum()) > SUPPORT_RANK_TOL:
        return math.inf
    keep = ~null
    tr_rho_ln_sigma = float((mass[keep] * np.log(ws[keep])).sum())
    return tr_rho_ln_rho - tr_rho_ln_sigma


def _sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


def _is_diagonal(a: np.ndarray) -> bool:
    off = a - np.diag(np.diag(a))
    return _max_norm(off) <= 1e-12 * max(1.0, _max_norm(a))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2.

    The matrix-square-root route is the source of truth. When both states are
    diagonal in the supplied basis the Bhattacharyya sum is computed as well
    and asserted against the general route; commuting inputs are the common
    case along twirled trajectories, so the agreement doubles as a self-test.
    """
    sr = _sqrtm_psd(rho)
    inner = sr @ sigma @ sr
    inner = (inner + inner.conj().T) / 2.0
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    f = float(np.sqrt(w).sum() ** 2)
    f = min(max(f, 0.0), 1.0)
    if _is_diagonal(rho) and _is_diagonal(sigma):
        p = np.clip(np.real(np.diag(rho)), 0.0, 1.0)
        q = np.clip(np.real(np.diag(sigma)), 0.0, 1.0)
        fast = float(np.sqrt(p * q).sum() ** 2)
        if abs(fast - f) > 1e-8:
            raise AssertionError(
                f"commuting fidelity fast path disagrees with general path: {fast} vs {f}"
            )
    return f


def bures_angle(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Bures angle arccos(sqrt(F)) in [0, pi/2]."""
    root = min(max(math.sqrt(fidelity(rho, sigma)), 0.0), 1.0)
    return math.acos(root)


def hermitianize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2.0
