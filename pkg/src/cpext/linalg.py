"""Dense complex-matrix kernel.

Choi matrices use the (output ⊗ input) tensor order with row-major
flattening: for a map ``T: M_din -> M_dout``

    C = sum_{jk} T(|j><k|) ⊗ |j><k|,      T(X) = tr_2[C (1 ⊗ X^T)].

All transposes are taken in the canonical basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotHermitianError, NotPSDError, NumericFailure

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-9
SQRT_TOL = 1e-10

YES, NO, MARGINAL = "yes", "no", "marginal"


# ---------------------------------------------------------------------------
# construction and validation


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size == 0:
        raise DimensionError(f"{name} is empty")
    if not np.all(np.isfinite(m)):
        raise DimensionError(f"{name} has non-finite entries")
    return m


def hermiticity_defect(a: np.ndarray) -> float:
    """Largest |A_jk - conj(A_kj)| relative to the operator norm (or 1)."""
    scale = max(1.0, float(np.linalg.norm(a, 2)))
    return float(np.max(np.abs(a - a.conj().T))) / scale


def as_hermitian(a, name: str = "matrix", tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate Hermiticity and return the canonically symmetrized copy.

    Raises:
        NotHermitianError: if the relative defect exceeds ``tol``.
    """
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got {m.shape}")
    defect = hermiticity_defect(m)
    if defect > tol:
        raise NotHermitianError(f"{name} is not Hermitian (defect {defect:.3g})")
    return hermitize(m)


def hermitize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def eigh(h: np.ndarray):
    """Hermitian eigendecomposition that surfaces LAPACK failures uniformly."""
    try:
        return np.linalg.eigh(hermitize(np.asarray(h, dtype=complex)))
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("eigendecomposition did not converge", {"error": str(exc)}) from exc


def eigvalsh(h: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(hermitize(np.asarray(h, dtype=complex)))
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("eigendecomposition did not converge", {"error": str(exc)}) from exc


def rank_tol(a: np.ndarray) -> float:
    """Numerical-rank threshold ``dim * eps * ||a||``."""
    a = np.asarray(a)
    norm = float(np.linalg.norm(a, 2)) if a.size else 0.0
    return max(a.shape) * np.finfo(float).eps * norm


# ---------------------------------------------------------------------------
# norms and spectral functionals


def trace_norm(h) -> float:
    return float(np.sum(np.abs(eigvalsh(h))))


def op_norm(h) -> float:
    return float(np.max(np.abs(eigvalsh(h))))


def min_eig(h) -> float:
    return float(eigvalsh(h)[0])


def psd_status(h, tol: float = PSD_TOL) -> str:
    """Three-valued PSD test: ``yes``, ``no`` or ``marginal`` (|min eig| <= tol)."""
    lam = min_eig(h)
    if lam > tol:
        return YES
    if lam < -tol:
        return NO
    return MARGINAL


def _check_psd(a, name: str, tol: float) -> tuple[np.ndarray, np.ndarray]:
    w, v = eigh(as_hermitian(a, name, tol=max(HERMITICITY_TOL, tol)))
    if w[0] < -tol:
        raise NotPSDError(f"{name} has eigenvalue {w[0]:.3g} < -{tol:g}")
    return np.clip(w, 0.0, None), v


def sqrt_psd(a, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix; eigenvalues in [-psd_tol, 0) clamp to 0."""
    w, v = _check_psd(a, "argument", psd_tol)
    return hermitize((v * np.sqrt(w)) @ v.conj().T)


def fidelity(a, b, psd_tol: float = PSD_TOL) -> float:
    """Generalized fidelity ``tr sqrt(A^1/2 B A^1/2)`` of unnormalized PSD matrices."""
    sa = sqrt_psd(a, psd_tol)
    _check_psd(b, "second argument", psd_tol)
    # singular values of sqrt(A) sqrt(B) equal the eigenvalues of sqrt(A^1/2 B A^1/2)
    sb = sqrt_psd(b, psd_tol)
    return float(np.sum(np.linalg.svd(sa @ sb, compute_uv=False)))


def support_projector(a, tol: float | None = None, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Orthogonal projector onto the span of eigenvectors with eigenvalue > tol."""
    w, v = _check_psd(a, "argument", psd_tol)
    if tol is None:
        tol = rank_tol(np.asarray(a))
    keep = v[:, w > tol]
    return keep @ keep.conj().T


def inf_ratio(a, b, psd_tol: float = PSD_TOL) -> float:
    """Largest ``lam`` with ``A - lam B`` PSD, or 0 if supp(B) is not inside supp(A).

    Raises:
        ValueError: if ``B`` is zero.
    """
    wa, va = _check_psd(a, "A", psd_tol)
    b = as_hermitian(b, "B", tol=max(HERMITICITY_TOL, psd_tol))
    _check_psd(b, "B", psd_tol)
    if np.allclose(b, 0, atol=0, rtol=0) or op_norm(b) == 0:
        raise ValueError("inf_ratio needs a nonzero B")
    tol = max(rank_tol(np.asarray(a)), np.finfo(float).tiny)
    on = wa > tol
    off = va[:, ~on]
    if off.shape[1]:
        leak = op_norm(off.conj().T @ b @ off)
        if leak > max(10 * rank_tol(b), 10 * tol):
            return 0.0
    u = va[:, on] / np.sqrt(wa[on])
    top = float(eigvalsh(u.conj().T @ b @ u)[-1])
    return 0.0 if top <= 0 else 1.0 / top


# ---------------------------------------------------------------------------
# tensor structure


def tensor(a, b) -> np.ndarray:
    """Kronecker product with row-major index pairing ((i1,i2),(j1,j2))."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(m, dims: tuple[int, int], which: int) -> np.ndarray:
    """Trace out factor ``which`` (1 or 2) of a matrix on ``C^d1 ⊗ C^d2``."""
    m = as_matrix(m)
    d1, d2 = dims
    if m.shape != (d1 * d2, d1 * d2):
        raise DimensionError(f"shape {m.shape} does not match dims {dims}")
    t = m.reshape(d1, d2, d1, d2)
    if which == 1:
        return np.einsum("ajak->jk", t)
    if which == 2:
        return np.einsum("ajbj->ab", t)
    raise ValueError("which must be 1 or 2")


def omega(d: int) -> np.ndarray:
    """Unnormalized maximally entangled projector ``|Ω><Ω|`` on ``C^d ⊗ C^d``."""
    v = np.eye(d, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix of a map ``M_din -> M_dout`` (output factor first)."""

    matrix: np.ndarray
    din: int
    dout: int

    def __post_init__(self):
        m = as_matrix(self.matrix, "Choi matrix")
        n = self.din * self.dout
        if m.shape != (n, n):
            raise DimensionError(f"Choi matrix must be {n}x{n}, got {m.shape}")
        object.__setattr__(self, "matrix", hermitize(m))

    def apply(self, x) -> np.ndarray:
        return apply_choi(self, x)

    def dual(self, y) -> np.ndarray:
        return dual_apply(self, y)

    def tr_out(self) -> np.ndarray:
        """``tr_1[C]``, which equals ``T*(1)^T``; identity iff trace preserving."""
        return partial_trace(self.matrix, (self.dout, self.din), 1)

    def min_eig(self) -> float:
        return min_eig(self.matrix)

    def eigenvalues(self) -> np.ndarray:
        return eigvalsh(self.matrix)


def _choi_parts(c) -> tuple[np.ndarray, int, int]:
    if not isinstance(c, ChoiMatrix):
        raise TypeError("expected a ChoiMatrix")
    return c.matrix, c.din, c.dout


def apply_choi(c: ChoiMatrix, x) -> np.ndarray:
    """``T(X) = tr_2[C (1 ⊗ X^T)]``."""
    m, din, dout = _choi_parts(c)
    x = as_matrix(x, "X")
    if x.shape != (din, din):
        raise DimensionError(f"X must be {din}x{din}, got {x.shape}")
    return np.einsum("ajbk,jk->ab", m.reshape(dout, din, dout, din), x)


def dual_apply(c: ChoiMatrix, y) -> np.ndarray:
    """Heisenberg-picture action ``T*(Y) = tr_1[C† (Y ⊗ 1)]^T``."""
    m, din, dout = _choi_parts(c)
    y = as_matrix(y, "Y")
    if y.shape != (dout, dout):
        raise DimensionError(f"Y must be {dout}x{dout}, got {y.shape}")
    t = m.conj().T.reshape(dout, din, dout, din)
    # tr_1[C†(Y⊗1)]_{jk} = sum_{ab} C†_{(a,j),(b,k)} Y_{ba}
    return np.einsum("ajbk,ba->jk", t, y).T


def choi_of(fn: Callable[[np.ndarray], np.ndarray], din: int, dout: int) -> ChoiMatrix:
    """Choi matrix of a linear map given as a callable on ``din x din`` matrices."""
    c = np.zeros((dout * din, dout * din), dtype=complex)
    for j in range(din):
        for k in range(din):
            e = np.zeros((din, din), dtype=complex)
            e[j, k] = 1
            c += np.kron(as_matrix(fn(e)), e)
    return ChoiMatrix(c, din, dout)


def choi_from_kraus(kraus: Iterable, din: int | None = None) -> ChoiMatrix:
    """Choi matrix of ``X -> sum_k K X K†``."""
    ks = [as_matrix(k, "Kraus operator") for k in kraus]
    dout, din_ = ks[0].shape
    if din is not None and din != din_:
        raise DimensionError("Kraus operators do not match din")
    c = np.zeros((dout * din_, dout * din_), dtype=complex)
    for k in ks:
        v = k.reshape(-1)
        c += np.outer(v, v.conj())
    return ChoiMatrix(c, din_, dout)


def identity_choi(d: int) -> ChoiMatrix:
    return ChoiMatrix(omega(d), d, d)


# ---------------------------------------------------------------------------
# Hermitian coordinates


@lru_cache(maxsize=64)
def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis of n×n Hermitian matrices under ``Re tr(A† B)``.

    Returns an array of shape ``(n*n, n, n)``; the order is diagonal units,
    then symmetric and antisymmetric off-diagonal pairs.
    """
    out = []
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1
        out.append(e)
    s = 1 / np.sqrt(2)
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[j, k] = e[k, j] = s
            out.append(e)
            f = np.zeros((n, n), dtype=complex)
            f[j, k] = -1j * s
            f[k, j] = 1j * s
            out.append(f)
    basis = np.array(out)
    basis.setflags(write=False)
    return basis


def herm_coords(h: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in :func:`hermitian_basis`."""
    h = np.asarray(h, dtype=complex)
    basis = hermitian_basis(h.shape[0])
    return np.real(np.einsum("kab,ba->k", basis, h))


def herm_from_coords(v: np.ndarray, n: int) -> np.ndarray:
    return np.einsum("k,kab->ab", np.asarray(v, dtype=float), hermitian_basis(n))


def inner(a, b) -> float:
    """Real Hilbert-Schmidt inner product ``Re tr(A† B)``."""
    return float(np.real(np.vdot(np.asarray(a), np.asarray(b))))


def hermitian_basis_of_span(mats: Sequence, tol: float | None = None) -> tuple[list[np.ndarray], bool]:
    """Orthonormal Hermitian basis of ``span{mats, mats†}``.

    Args:
        mats: nonempty list of equally sized square matrices.
        tol: singular-value cutoff; defaults to the numerical-rank threshold.

    Returns:
        ``(basis, was_hermitian)`` where the flag says whether ``span{mats}``
        was already closed under the adjoint.
    """
    ms = [as_matrix(m) for m in mats]
    if not ms:
        raise ValueError("empty list")
    n = ms[0].shape[0]
    if any(m.shape != (n, n) for m in ms):
        raise DimensionError("all matrices must share one square shape")
    cols = []
    for m in ms:
        cols.append(herm_coords((m + m.conj().T) / 2))
        cols.append(herm_coords((m - m.conj().T) / 2j))
    a = np.array(cols).T
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0:
        raise ValueError("all input matrices are zero")
    cut = rank_tol(a) if tol is None else tol
    r = int(np.sum(s > cut))
    basis = [herm_from_coords(u[:, k], n) for k in range(r)]
    flat = np.array([m.reshape(-1) for m in ms]).T
    sc = np.linalg.svd(flat, compute_uv=False)
    cplx_rank = int(np.sum(sc > (rank_tol(flat) if tol is None else tol)))
    return basis, cplx_rank == r


def real_embedding(h) -> np.ndarray:
    """``[[Re H, -Im H], [Im H, Re H]]``; PSD iff ``H`` is, spectrum doubled."""
    h = np.asarray(h, dtype=complex)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def real_unembedding(z: np.ndarray) -> np.ndarray:
    """Hermitian matrix whose embedding is the symmetric average of ``z``.

    Inverse of :func:`real_embedding` on its range, and the adjoint (up to a
    factor 2) on the full space of symmetric matrices.
    """
    n = z.shape[0] // 2
    z11, z12, z21, z22 = z[:n, :n], z[:n, n:], z[n:, :n], z[n:, n:]
    return hermitize(((z11 + z22) + 1j * (z21 - z12)) / 2)


# ---------------------------------------------------------------------------
# small helpers used across modules

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def ket(*amps) -> np.ndarray:
    return np.asarray(amps, dtype=complex)


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def is_density(rho, tol: float = PSD_TOL) -> bool:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if hermiticity_defect(rho) > max(HERMITICITY_TOL, tol):
        return False
    return min_eig(rho) >= -tol and abs(np.trace(rho).real - 1) <= tol


def commutator_norm(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.linalg.norm(a @ b - b @ a, 2))


def gen_eigvals(a, b) -> np.ndarray:
    """Finite real generalized eigenvalues of the Hermitian pencil (a, b)."""
    w = scipy.linalg.eigvals(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    w = w[np.isfinite(w)]
    return np.real(w[np.abs(w.imag) <= 1e-8 * (1 + np.abs(w.real))])
