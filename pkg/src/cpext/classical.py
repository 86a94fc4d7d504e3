"""Commuting inputs or outputs: polytope vertices, positivity, explicit extensions.

States that commute are probability vectors in a common eigenbasis. The
normalized part of their span is the polytope ``aff{rho_i} ∩ R_+^d``, and a
map on the span is positive iff it sends every vertex to a PSD matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .cpcheck import (
    CP,
    EXISTS,
    MARGINAL,
    NOT_CP,
    NOT_EXISTS,
    Witness,
    exact_cp_extension,
    gamma_sdp,
    preprocess,
    residuals,
)
from .errors import DimensionError, PreconditionError
from .extend import channel_extension, validate_channel
from .solver import DEFAULT_TOLERANCES, Tolerances

POSITIVE = "Positive"
NOT_POSITIVE = "NotPositive"
OUT_OF_RANGE = "OutOfGuaranteedRange"

COMMUTE_TOL = 1e-10
CLUSTER_TOL = 1e-8
MAX_DIM = 12
MAX_AFFINE_DIM = 6


# ---------------------------------------------------------------------------
# simultaneous diagonalization


def commuting(mats, tol: float = COMMUTE_TOL) -> bool:
    """Pairwise commutation after scaling each matrix to unit trace norm."""
    normed = []
    for m in mats:
        s = la.trace_norm(m)
        normed.append(m / s if s > 0 else m)
    return all(la.commutator_norm(a, b) <= tol for a, b in itertools.combinations(normed, 2))


def common_eigenbasis(mats, seed: int = 0) -> np.ndarray:
    """Unitary whose columns diagonalize every (commuting Hermitian) matrix.

    A random real combination is diagonalized; inside each cluster of
    near-equal eigenvalues the first matrix that is not yet scalar there is
    diagonalized in turn.
    """
    mats = [la.hermitize(la.as_matrix(m)) for m in mats]
    n = mats[0].shape[0]
    if all(np.max(np.abs(m - np.diag(np.diag(m)))) <= CLUSTER_TOL for m in mats):
        return np.eye(n, dtype=complex)
    rng = np.random.default_rng(seed)
    combo = sum(c * m for c, m in zip(rng.standard_normal(len(mats)), mats))
    w, v = la.eigh(combo)
    scale = max(1.0, float(np.max(np.abs(w))))
    cols, start = [], 0
    for k in range(1, n + 1):
        if k == n or w[k] - w[k - 1] > CLUSTER_TOL * scale:
            block = v[:, start:k]
            if block.shape[1] > 1:
                for m in mats:
                    sub = block.conj().T @ m @ block
                    if np.max(np.abs(sub - np.trace(sub) / sub.shape[0] * np.eye(sub.shape[0]))) > CLUSTER_TOL * scale:
                        _, u = la.eigh(sub)
                        block = block @ u
                        break
            cols.append(block)
            start = k
    return np.hstack(cols)


def as_probability_vectors(states, basis: np.ndarray | None = None):
    """Diagonals of commuting states in a common eigenbasis, and that basis."""
    states = [la.hermitize(la.as_matrix(s)) for s in states]
    if not commuting(states):
        raise PreconditionError("inputs do not commute")
    u = common_eigenbasis(states) if basis is None else basis
    vecs = [np.real(np.diag(u.conj().T @ s @ u)) for s in states]
    return vecs, u


# ---------------------------------------------------------------------------
# polytope vertices


@dataclass
class ClassicalPolytope:
    dim: int
    affine_basis: list
    extremes: list
    coefficients: list  # affine coefficients of each vertex over affine_basis

    def contains(self, x, tol: float = 1e-10) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < -tol) or abs(x.sum() - 1) > tol:
            return False
        base = self.affine_basis[0]
        dirs = np.array([b - base for b in self.affine_basis[1:]]).T
        if dirs.size == 0:
            return bool(np.max(np.abs(x - base)) <= tol)
        t, *_ = np.linalg.lstsq(dirs, x - base, rcond=None)
        return bool(np.max(np.abs(dirs @ t + base - x)) <= tol)


def _affine_reduce(vecs, tol: float = 1e-10):
    """Drop points that are affinely dependent on earlier ones."""
    keep = [vecs[0]]
    for v in vecs[1:]:
        dirs = np.array([k - keep[0] for k in keep[1:]] + [v - keep[0]]).T
        if np.linalg.matrix_rank(dirs, tol=tol) == dirs.shape[1]:
            keep.append(v)
    return keep


def polytope_extremes(vectors) -> ClassicalPolytope:
    """Vertices of ``aff{rho_i} ∩ R_+^d`` by enumerating active zero-sets.

    For affine dimension ``k`` every vertex is pinned down by ``k``
    coordinates set to zero; each candidate set is solved and kept if the
    point is nonnegative.

    Raises:
        ValueError: vectors not probability vectors, or beyond the
            enumeration cap (``d <= 12``, affine dimension ``<= 6``).
    """
    vecs = [np.asarray(v, dtype=float).reshape(-1) for v in vectors]
    if not vecs:
        raise ValueError("at least one vector is required")
    d = vecs[0].size
    for v in vecs:
        if v.size != d:
            raise DimensionError("vectors differ in length")
        if np.any(v < -1e-12) or abs(v.sum() - 1) > 1e-9:
            raise ValueError("inputs must be probability vectors")
    basis = _affine_reduce(vecs)
    k = len(basis) - 1
    if d > MAX_DIM or k > MAX_AFFINE_DIM:
        raise ValueError(f"vertex enumeration is capped at d <= {MAX_DIM} and affine dimension <= {MAX_AFFINE_DIM}")
    base = basis[0]
    dirs = np.array([b - base for b in basis[1:]]).T.reshape(d, k)
    found = []
    if k == 0:
        found.append(base.copy())
    else:
        for zs in itertools.combinations(range(d), k):
            sub = dirs[list(zs)]
            if np.linalg.matrix_rank(sub, tol=1e-12) < k:
                continue
            t = np.linalg.solve(sub, -base[list(zs)])
            x = base + dirs @ t
            if np.min(x) < -1e-12:
                continue
            x = np.where(np.abs(x) < 1e-13, 0.0, x)
            if not any(np.max(np.abs(x - f)) <= 1e-10 for f in found):
                found.append(x)
    found.sort(key=lambda x: tuple(-x))
    full = np.array(basis).T
    coeffs = []
    for x in found:
        a = np.vstack([full, np.ones(len(basis))])
        c, *_ = np.linalg.lstsq(a, np.append(x, 1.0), rcond=None)
        coeffs.append(c)
    return ClassicalPolytope(d, basis, found, coeffs)


# ---------------------------------------------------------------------------
# positivity on a commuting domain


def vector_to_state(vec, basis: np.ndarray) -> np.ndarray:
    """Probability vector in the given eigenbasis back to a density matrix."""
    return basis @ np.diag(np.asarray(vec, dtype=complex)) @ basis.conj().T


@dataclass
class PositivityResult:
    status: str  # Positive / NotPositive
    vertex: np.ndarray | None = None
    image: np.ndarray | None = None
    polytope: ClassicalPolytope | None = None
    min_eigs: list = field(default_factory=list)
    basis: np.ndarray | None = None

    def extreme_states(self) -> list:
        return [vector_to_state(x, self.basis) for x in self.polytope.extremes]


def _images_of(points, states_vec, outputs):
    """Linear images of probability vectors lying in span{states}."""
    a = np.array(states_vec).T
    out = []
    for x in points:
        c, *_ = np.linalg.lstsq(a, x, rcond=None)
        if np.max(np.abs(a @ c - x)) > 1e-9:
            raise ValueError("point outside the span of the inputs")
        out.append(sum(ci * y for ci, y in zip(c, outputs)))
    return out


def _split_pairs(pairs):
    pairs = list(pairs)
    preprocess(pairs)  # linearity and dimension checks
    xs = [la.hermitize(la.as_matrix(x)) for x, _ in pairs]
    ys = [la.hermitize(la.as_matrix(y)) for _, y in pairs]
    return xs, ys


def commuting_domain_positive(pairs, tol: Tolerances | None = None) -> PositivityResult:
    """Positivity of a map whose inputs are commuting states.

    Raises:
        PreconditionError: the inputs do not commute.
    """
    tol = tol or DEFAULT_TOLERANCES
    xs, ys = _split_pairs(pairs)
    vecs, u = as_probability_vectors(xs)
    poly = polytope_extremes(vecs)
    images = _images_of(poly.extremes, vecs, ys)
    eigs = [la.min_eig(im) for im in images]
    for x, im, e in zip(poly.extremes, images, eigs):
        if e < -tol.psd_tol:
            return PositivityResult(NOT_POSITIVE, vector_to_state(x, u), im, poly, eigs, u)
    return PositivityResult(POSITIVE, polytope=poly, min_eigs=eigs, basis=u)


# ---------------------------------------------------------------------------
# commuting range


@dataclass
class ClassicalExtension:
    status: str
    choi: la.ChoiMatrix | None = None
    certificate: Witness | None = None
    method: str = ""
    diagnostics: dict = field(default_factory=dict)


def pinch_choi(c: la.ChoiMatrix, basis: np.ndarray) -> la.ChoiMatrix:
    """Compose a map with the pinching onto the columns of ``basis`` (output side)."""
    m = np.zeros_like(c.matrix)
    for k in range(basis.shape[1]):
        p = np.kron(la.proj(basis[:, k]), np.eye(c.din))
        m = m + p @ c.matrix @ p
    return la.ChoiMatrix(la.hermitize(m), c.din, c.dout)


def commuting_range_cp_extension(pairs, tol: Tolerances | None = None) -> ClassicalExtension:
    """CP extension into the algebra generated by commuting output states.

    Positivity and complete positivity coincide for a commuting range, so the
    subspace check is the Γ problem; an extension is then found by the Choi
    feasibility system and pinched onto the common eigenbasis of the outputs.
    """
    tol = tol or DEFAULT_TOLERANCES
    xs, ys = _split_pairs(pairs)
    for x in xs:
        if not la.is_density(x):
            raise PreconditionError("inputs must be density matrices")
    if not commuting(ys):
        raise PreconditionError("outputs do not commute")
    spec = preprocess(list(zip(xs, ys)))
    verdict = gamma_sdp(spec, tol)
    if verdict.status == NOT_CP:
        return ClassicalExtension(NOT_CP, certificate=verdict.witness, method="gamma", diagnostics=verdict.diagnostics)
    if verdict.status != CP:
        return ClassicalExtension(MARGINAL, method="gamma", diagnostics=verdict.diagnostics)
    ext = exact_cp_extension(spec, tol)
    if ext.status != EXISTS:
        return ClassicalExtension(MARGINAL, method="feasibility", diagnostics=ext.diagnostics)
    basis = common_eigenbasis(ys)
    pinched = pinch_choi(ext.choi, basis)
    r = residuals(pinched, spec)
    ok = r["pairs"] <= tol.feas_tol * max(1.0, la.op_norm(pinched.matrix)) and r["min_eig"] >= -tol.psd_tol * max(1.0, la.op_norm(pinched.matrix))
    if not ok:
        return ClassicalExtension(MARGINAL, method="pinching", diagnostics={"validation": r})
    return ClassicalExtension(EXISTS, choi=pinched, method="pinching", diagnostics={"validation": r})


# ---------------------------------------------------------------------------
# commuting domain


def _projection_images(vecs, poly: ClassicalPolytope, trace_preserving: bool):
    """Images ``Pi(e_x)`` in span{rho_i} of a positive map fixing the span.

    Returns None when no closed-form construction is known for this shape.
    """
    d = poly.dim
    a = np.array(vecs).T
    rank = np.linalg.matrix_rank(a, tol=1e-10)
    if rank == d:
        return [np.eye(d)[x] for x in range(d)], "identity"
    if rank == 1:
        rho = vecs[0] / vecs[0].sum()
        return [rho.copy() for _ in range(d)], "state-preparation"
    if trace_preserving:
        return None
    ext = poly.extremes
    if len(ext) != rank:
        return None
    # each vertex owns a coordinate that vanishes on all other vertices
    images = [np.zeros(d) for _ in range(d)]
    for i, v in enumerate(ext):
        others = [u for j, u in enumerate(ext) if j != i]
        own = [x for x in range(d) if v[x] > 1e-12 and all(u[x] <= 1e-12 for u in others)]
        if not own:
            return None
        images[own[0]] = v / v[own[0]]
    return images, "vertex-projection"


def commuting_domain_extension(pairs, trace_preserving: bool = False, tol: Tolerances | None = None) -> ClassicalExtension:
    """Extension of a positive map on commuting input states.

    Within the guaranteed range (``d <= 3``; ``d <= 2`` with trace
    preservation) the extension ``T ∘ Π ∘ D`` is built explicitly, where
    ``D`` is the dephasing in the common eigenbasis and ``Π`` a positive
    projection onto the span of the inputs. Outside it the feasibility system
    decides: ``Exists`` if it finds a point, ``NotExists`` with a validated
    certificate, else ``OutOfGuaranteedRange``.

    Raises:
        PreconditionError: the map is not positive on the inputs' span, or
            the inputs do not commute.
    """
    tol = tol or DEFAULT_TOLERANCES
    xs, ys = _split_pairs(pairs)
    for x in xs:
        if not la.is_density(x):
            raise PreconditionError("inputs must be density matrices")
    pos = commuting_domain_positive(list(zip(xs, ys)), tol)
    if pos.status != POSITIVE:
        raise PreconditionError("the map is not positive on the span of the inputs")
    if trace_preserving:
        for y in ys:
            if abs(np.trace(y).real - 1) > 1e-9:
                raise PreconditionError("trace preservation requested but an output does not have unit trace")
    vecs, u = as_probability_vectors(xs)
    d, dout = xs[0].shape[0], ys[0].shape[0]
    spec = preprocess(list(zip(xs, ys)))
    guaranteed = d <= (2 if trace_preserving else 3)
    built = _projection_images(vecs, pos.polytope, trace_preserving) if guaranteed else None
    if built is not None:
        images, how = built
        outs = _images_of(images, vecs, ys)

        choi = la.choi_of(lambda x: _dephase_apply(x, u, outs), d, dout)
        if trace_preserving:
            ok, info = validate_channel(spec, choi, tol, atol=1e-9)
        else:
            r = residuals(choi, spec)
            ok = r["pairs"] <= 1e-9 and r["min_eig"] >= -tol.psd_tol
            info = r
        if ok:
            return ClassicalExtension(EXISTS, choi=choi, method=how, diagnostics={"validation": info})
    if trace_preserving:
        res = channel_extension(spec, tol)
        choi, cert = res.choi, res.certificate
    else:
        res = exact_cp_extension(spec, tol)
        choi, cert = res.choi, res.certificate
    diag = {"guaranteed_range": guaranteed, "sdp_status": res.status}
    if res.status == EXISTS:
        return ClassicalExtension(EXISTS, choi=choi, method="sdp", diagnostics=diag)
    if res.status == NOT_EXISTS:
        return ClassicalExtension(NOT_EXISTS, certificate=cert, method="sdp", diagnostics=diag)
    return ClassicalExtension(OUT_OF_RANGE, method="sdp", diagnostics=diag)


def _dephase_apply(x, u, outs):
    diag = np.diag(u.conj().T @ x @ u)
    return sum(dx * o for dx, o in zip(diag, outs))
