"""Dense complex Hermitian linear algebra.

Operators are plain ``numpy`` arrays of dtype ``complex128``.  The helpers
here validate Hermiticity/positivity against the tolerances in
:mod:`steerkit.config` and return fresh arrays; inputs are never modified.

Tensor products follow the ``A (slow) x B (fast)`` convention of
:func:`numpy.kron`.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .config import Tolerances, resolve
from .errors import DimensionMismatch, NotHermitian, NotPSD, ZeroOperator


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # unitary, eigenvectors in columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def herm(m: np.ndarray) -> np.ndarray:
    """Hermitian part ``(M + M^dagger)/2``."""
    return 0.5 * (m + dag(m))


def as_operator(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def hermiticity_defect(m: np.ndarray) -> float:
    """Relative Frobenius norm of the anti-Hermitian part."""
    norm = np.linalg.norm(m)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(m - dag(m)) / norm)


def is_hermitian(m, tol: Tolerances | None = None) -> bool:
    return hermiticity_defect(np.asarray(m)) <= resolve(tol).herm_tol


def check_hermitian(m, tol: Tolerances | None = None) -> np.ndarray:
    arr = as_operator(m)
    defect = hermiticity_defect(arr)
    if defect > resolve(tol).herm_tol:
        raise NotHermitian(f"relative anti-Hermitian part {defect:.3e} exceeds herm_tol")
    return herm(arr)


def eig_hermitian(m, tol: Tolerances | None = None) -> SpectralDecomposition:
    """Eigen-decomposition with ascending eigenvalues.

    LAPACK's ``zheevd`` is deterministic for identical input bits, which is
    what makes equivalence certificates reproducible.
    """
    h = check_hermitian(m, tol)
    w, v = np.linalg.eigh(h)
    return SpectralDecomposition(w, v)


def min_eigenvalue(m) -> float:
    return float(np.linalg.eigvalsh(herm(np.asarray(m, dtype=complex)))[0])


def max_eigenvalue(m) -> float:
    return float(np.linalg.eigvalsh(herm(np.asarray(m, dtype=complex)))[-1])


def is_psd(m, tol: Tolerances | None = None) -> bool:
    return min_eigenvalue(m) >= -resolve(tol).psd_tol


def _psd_spectrum(m, tol: Tolerances | None) -> SpectralDecomposition:
    tol = resolve(tol)
    w, v = eig_hermitian(m, tol)
    if w.size and w[0] < -tol.psd_tol:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} below -psd_tol")
    return SpectralDecomposition(np.clip(w, 0.0, None), v)


def sqrt_psd(m, tol: Tolerances | None = None) -> np.ndarray:
    """Principal square root of a PSD operator."""
    w, v = _psd_spectrum(m, tol)
    return (v * np.sqrt(w)) @ v.conj().T


def _support(w: np.ndarray, rank_tol: float) -> np.ndarray:
    lam_max = w[-1] if w.size else 0.0
    if not lam_max > 0.0:
        raise ZeroOperator("operator has no positive eigenvalues")
    return w > rank_tol * lam_max


def pinv_sqrt(m, rank_tol: float | None = None, tol: Tolerances | None = None):
    """Inverse square root on the range, zero on its complement.

    Returns ``(M^{-1/2}, rank)``.
    """
    tol = resolve(tol)
    rank_tol = tol.rank_tol if rank_tol is None else rank_tol
    w, v = _psd_spectrum(m, tol)
    keep = _support(w, rank_tol)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (v * inv) @ v.conj().T, int(keep.sum())


def range_projector(m, rank_tol: float | None = None, tol: Tolerances | None = None):
    """Isometry onto the range of a PSD operator.

    Returns ``(P, rank)`` where ``P`` has shape ``(rank, dim)``, rows forming an
    orthonormal basis of ``ran(M)``; ``P P^dagger = 1`` and ``P^dagger P`` is
    the orthogonal projector onto the range.
    """
    tol = resolve(tol)
    rank_tol = tol.rank_tol if rank_tol is None else rank_tol
    w, v = _psd_spectrum(m, tol)
    keep = _support(w, rank_tol)
    return v[:, keep].conj().T.copy(), int(keep.sum())


def complement_isometry(p: np.ndarray) -> np.ndarray:
    """Rows spanning the orthogonal complement of the rows of ``p``."""
    dim = p.shape[1]
    proj = np.eye(dim) - dag(p) @ p
    w, v = np.linalg.eigh(herm(proj))
    return v[:, w > 0.5].conj().T.copy()


def partial_trace_A(rho, dA: int, dB: int) -> np.ndarray:
    """Trace out the first (slow-index) factor of an operator on ``A x B``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dA * dB, dA * dB):
        raise DimensionMismatch(f"operator of shape {rho.shape} is not on a {dA}x{dB} system")
    return np.einsum("ijik->jk", rho.reshape(dA, dB, dA, dB))


def partial_trace_B(rho, dA: int, dB: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dA * dB, dA * dB):
        raise DimensionMismatch(f"operator of shape {rho.shape} is not on a {dA}x{dB} system")
    return np.einsum("ijkj->ik", rho.reshape(dA, dB, dA, dB))


def real_embedding(h: np.ndarray) -> np.ndarray:
    """Map a complex ``n x n`` matrix to the real ``2n x 2n`` matrix [[Re, -Im], [Im, Re]]."""
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def from_real_embedding(y: np.ndarray) -> np.ndarray:
    """Left inverse of :func:`real_embedding` (up to a factor 2) for dual variables.

    For a real symmetric PSD ``Y`` of size ``2n`` this returns the PSD complex
    matrix ``W`` with ``<real_embedding(H), Y> = Re tr(H W)`` for every
    Hermitian ``H``.
    """
    n = y.shape[0] // 2
    y11, y12 = y[:n, :n], y[:n, n:]
    y21, y22 = y[n:, :n], y[n:, n:]
    return herm((y11 + y22) + 1j * (y21 - y12))


def hermitian_basis(d: int) -> np.ndarray:
    """Real-coefficient basis of ``d x d`` Hermitian matrices, shape ``(d*d, d, d)``.

    Ordering: diagonal units first, then for each ``k < l`` the symmetric
    ``E_kl + E_lk`` followed by the antisymmetric ``i E_kl - i E_lk``.  The
    coordinates of ``H`` are therefore its diagonal, then ``Re H_kl`` and
    ``Im H_kl``.
    """
    basis = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        basis.append(e)
    for k in range(d):
        for l in range(k + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[k, l] = s[l, k] = 1.0
            a = np.zeros((d, d), dtype=complex)
            a[k, l] = 1j
            a[l, k] = -1j
            basis.extend([s, a])
    return np.array(basis)


def hermitian_from_coords(coords: np.ndarray, d: int) -> np.ndarray:
    return np.tensordot(coords, hermitian_basis(d), axes=1)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return herm(rho / np.trace(rho).real)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return herm(g)
