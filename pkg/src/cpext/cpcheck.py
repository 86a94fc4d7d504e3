"""Complete positivity on subspaces, best CP approximations, exact CP extensions.

A map is given by pairs ``X_i -> Y_i`` (plus optional Heisenberg-side pairs
``X'_j -> Y'_j`` meaning ``T*(X'_j) = Y'_j``). Witnesses are stated in the
input-first layout::

    M = H0 ⊗ 1 + sum_i X_i ⊗ H_i + sum_j G_j ⊗ X'_j^T          (PSD)
    v = tr H0 + sum_i tr(Y_i^T H_i) + sum_j tr(G_j Y'_j)       (< 0)

For any CP extension ``T`` with ``T*(1) = 1`` (when ``H0`` is present) one has
``<Ω|(T ⊗ id)(M)|Ω> = v``, which would have to be nonnegative; so a valid
witness rules out every extension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import DimensionError, IncompatibleError, NotLinearError, NumericFailure
from .solver import (
    DEFAULT_TOLERANCES,
    FEASIBLE,
    INFEASIBLE,
    MARGINAL,
    NUMERIC_FAILURE,
    OPTIMAL,
    Model,
    Tolerances,
    feasibility,
)

CP = "CompletelyPositive"
NOT_CP = "NotCP"

EXISTS = "Exists"
NOT_EXISTS = "NotExists"
UNDECIDED = "ApproxOnlyOrUndecided"

YES = "Yes"
NO = "No"

NO_PSD = "no-nonzero-PSD-in-span"
STRICTLY_POSITIVE = "strictly-positive-element-in-span"
SPANNED_BY_PSD = "spanned-by-PSD"
NO_GUARANTEE = "none"


class DeltaNorm(Enum):
    """Norm pairing of the approximation functional.

    ``SUM_TRACE`` is the default (sum of trace-norm errors, dual operator-norm
    ball). The alternatives keep the primal/dual pair consistent: the maximum
    over pairs dualizes to a joint budget on operator norms, and
    operator-norm errors dualize to a trace-norm ball.
    """

    SUM_TRACE = "sum-trace"
    MAX_TRACE = "max-trace"
    SUM_OPERATOR = "sum-operator"


# ---------------------------------------------------------------------------
# problem specification


@dataclass(frozen=True)
class MapSpec:
    din: int
    dout: int
    inputs: tuple
    outputs: tuple
    dual_inputs: tuple = ()
    dual_outputs: tuple = ()

    @property
    def pairs(self):
        return list(zip(self.inputs, self.outputs))

    @property
    def dual_pairs(self):
        return list(zip(self.dual_inputs, self.dual_outputs))

    def __len__(self):
        return len(self.inputs)

    def with_pairs(self, extra_pairs=(), extra_dual=()) -> "MapSpec":
        """Re-run preprocessing with additional constraints appended."""
        return preprocess(self.pairs + list(extra_pairs), self.dual_pairs + list(extra_dual))

    def with_trace_preservation(self) -> "MapSpec":
        return self.with_extra_dual_identity()

    def with_extra_dual_identity(self) -> "MapSpec":
        return preprocess(self.pairs, self.dual_pairs + [(np.eye(self.dout), np.eye(self.din))])


def _split_hermitian(x: np.ndarray, y: np.ndarray):
    """Hermitian and anti-Hermitian components of a pair (valid for *-preserving maps)."""
    out = []
    xh, yh = (x + x.conj().T) / 2, (y + y.conj().T) / 2
    xa, ya = (x - x.conj().T) / 2j, (y - y.conj().T) / 2j
    for a, b in ((xh, yh), (xa, ya)):
        if np.any(np.abs(a) > 0) or np.any(np.abs(b) > 0):
            out.append((a, b))
    return out


def preprocess(pairs, dual_pairs=None, tol: float = 1e-9) -> MapSpec:
    """Validate pairs, reduce inputs to an independent Hermitian set.

    Non-Hermitian pairs are replaced by their Hermitian and anti-Hermitian
    components, which is lossless for maps that commute with the adjoint (a
    property every CP map has).

    Raises:
        NotLinearError: dependent inputs with inconsistent outputs.
        IncompatibleError: Heisenberg-side pairs disagree with the data.
        DimensionError: inconsistent sizes.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("at least one pair is required")
    xs = [la.as_matrix(x, "input") for x, _ in pairs]
    ys = [la.as_matrix(y, "output") for _, y in pairs]
    din, dout = xs[0].shape[0], ys[0].shape[0]
    for x, y in zip(xs, ys):
        if x.shape != (din, din) or y.shape != (dout, dout):
            raise DimensionError("all inputs must be din×din and all outputs dout×dout")
    herm = []
    for x, y in zip(xs, ys):
        herm.extend(_split_hermitian(x, y))
    if not herm:
        raise ValueError("all pairs are zero")

    chosen_x, chosen_y, coords = [], [], []
    for x, y in herm:
        v = la.herm_coords(x)
        vnorm = float(np.linalg.norm(v))
        ynorm = la.op_norm(y) if np.any(y) else 0.0
        if coords:
            a = np.array(coords).T
            c, *_ = np.linalg.lstsq(a, v, rcond=None)
            resid = float(np.linalg.norm(a @ c - v))
        else:
            c, resid = np.zeros(0), vnorm
        if resid > tol * max(1.0, vnorm):
            chosen_x.append(la.hermitize(x))
            chosen_y.append(la.hermitize(y))
            coords.append(v)
            continue
        pred = sum((ci * yi for ci, yi in zip(c, chosen_y)), np.zeros((dout, dout), dtype=complex))
        scale = 1.0 + ynorm + sum(abs(ci) * la.op_norm(yi) for ci, yi in zip(c, chosen_y))
        if float(np.max(np.abs(pred - y))) > tol * scale:
            raise NotLinearError(
                "dependent input has an inconsistent output (the data is not linear or not Hermiticity-preserving)"
            )

    dxs, dys = [], []
    for xp, yp in list(dual_pairs or []):
        xp = la.as_matrix(xp, "dual input")
        yp = la.as_matrix(yp, "dual output")
        if xp.shape != (dout, dout) or yp.shape != (din, din):
            raise DimensionError("dual inputs must be dout×dout and dual outputs din×din")
        for a, b in _split_hermitian(xp, yp):
            dxs.append(la.hermitize(a))
            dys.append(la.hermitize(b))
    for xp, yp in zip(dxs, dys):
        for x, y in zip(chosen_x, chosen_y):
            lhs = np.trace(xp.conj().T @ y)
            rhs = np.trace(yp.conj().T @ x)
            scale = 1.0 + np.linalg.norm(xp) * np.linalg.norm(y) + np.linalg.norm(yp) * np.linalg.norm(x)
            if abs(lhs - rhs) > tol * scale:
                raise IncompatibleError(f"compatibility violated: {lhs:.6g} vs {rhs:.6g}")
    return MapSpec(din, dout, tuple(chosen_x), tuple(chosen_y), tuple(dxs), tuple(dys))


# ---------------------------------------------------------------------------
# witnesses


@dataclass
class Witness:
    """Dual certificate against complete positivity or extendability.

    ``H`` has one ``dout×dout`` matrix per pair, ``G`` one ``din×din`` matrix
    per Heisenberg-side pair, ``H0`` (``din×din``) is the trace-side block.
    ``bounded`` records whether ``||H_i|| <= 1`` is part of the claim and
    ``weight`` the trace-norm budget of ``H0`` if any.
    """

    H: list
    H0: np.ndarray | None = None
    G: list = field(default_factory=list)
    bounded: bool = False
    weight: float | None = None
    objective: float = float("nan")
    min_eig: float = float("nan")

    def matrix(self, spec: MapSpec) -> np.ndarray:
        return witness_matrix(spec, self)


def witness_matrix(spec: MapSpec, w: Witness) -> np.ndarray:
    n = spec.din * spec.dout
    m = np.zeros((n, n), dtype=complex)
    if w.H0 is not None:
        m += np.kron(w.H0, np.eye(spec.dout))
    for x, h in zip(spec.inputs, w.H):
        m += np.kron(x, h)
    for xp, g in zip(spec.dual_inputs, w.G):
        m += np.kron(g, xp.T)
    return m


def witness_objective(spec: MapSpec, w: Witness) -> float:
    v = 0.0
    if w.H0 is not None:
        v += np.trace(w.H0).real
    for y, h in zip(spec.outputs, w.H):
        v += np.trace(y.T @ h).real
    for yp, g in zip(spec.dual_outputs, w.G):
        v += np.trace(g @ yp).real
    return float(v)


def validate_witness(spec: MapSpec, w: Witness, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[bool, dict]:
    """Check a witness with plain eigenvalue arithmetic.

    Valid iff ``M`` is PSD within ``psd_tol``, the value is ``<= -margin_tol``
    and the declared norm bounds hold within ``psd_tol``.
    """
    if len(w.H) != len(spec.inputs) or len(w.G) != len(spec.dual_inputs):
        return False, {"reason": "witness does not match the number of pairs"}
    mineig = la.min_eig(witness_matrix(spec, w))
    obj = witness_objective(spec, w)
    info = {"min_eig": mineig, "objective": obj}
    ok = mineig >= -tol.psd_tol and obj <= -tol.margin_tol
    if w.bounded:
        hn = max((la.op_norm(h) for h in w.H), default=0.0)
        info["max_H_norm"] = hn
        ok = ok and hn <= 1 + tol.psd_tol
    if w.weight is not None and w.H0 is not None:
        tn = la.trace_norm(w.H0)
        info["H0_trace_norm"] = tn
        ok = ok and tn <= w.weight + tol.psd_tol
    w.objective, w.min_eig = obj, mineig
    return ok, info


# ---------------------------------------------------------------------------
# model helpers shared with the extension module


def adj_apply(x: np.ndarray):
    """Adjoint of ``C -> apply_choi(C, X)``: ``E -> E ⊗ X^T``."""
    xt = x.T
    return lambda e: np.kron(e, xt)


def adj_dual_apply(y: np.ndarray):
    """Adjoint of ``C -> dual_apply(C, Y)``: ``E -> Y ⊗ E^T``."""
    return lambda e: np.kron(y, e.T)


def adj_tr_out(dout: int):
    """Adjoint of ``C -> tr_1[C]``: ``E -> 1 ⊗ E``."""
    one = np.eye(dout)
    return lambda e: np.kron(one, e)


def adj_kron_left(x: np.ndarray, d2: int):
    """Adjoint of ``H -> X ⊗ H`` on the second factor: ``E -> tr_1[E (X ⊗ 1)]``."""
    d1 = x.shape[0]
    return lambda e: la.partial_trace(e @ np.kron(x, np.eye(d2)), (d1, d2), 1)


def adj_kron_right(xp: np.ndarray, d1: int):
    """Adjoint of ``G -> G ⊗ X'`` on the first factor: ``E -> tr_2[E (1 ⊗ X')]``."""
    d2 = xp.shape[0]
    return lambda e: la.partial_trace(e @ np.kron(np.eye(d1), xp), (d1, d2), 2)


def identity_adj(e):
    return e


def neg_identity_adj(e):
    return -e


def choi_from_point(var, point, spec: MapSpec) -> la.ChoiMatrix:
    return la.ChoiMatrix(Model.value(var, point), spec.din, spec.dout)


def psd_part(c: la.ChoiMatrix) -> la.ChoiMatrix:
    w, v = la.eigh(c.matrix)
    return la.ChoiMatrix((v * np.clip(w, 0, None)) @ v.conj().T, c.din, c.dout)


def residuals(c: la.ChoiMatrix, spec: MapSpec) -> dict:
    """Largest entrywise mismatch over pairs and Heisenberg-side pairs."""
    r = 0.0
    for x, y in spec.pairs:
        r = max(r, float(np.max(np.abs(c.apply(x) - y))))
    rd = 0.0
    for xp, yp in spec.dual_pairs:
        rd = max(rd, float(np.max(np.abs(c.dual(xp) - yp))))
    return {"pairs": r, "dual_pairs": rd, "min_eig": c.min_eig()}


# ---------------------------------------------------------------------------
# Γ and Δ


@dataclass
class CpVerdict:
    status: str
    gamma: float
    witness: Witness | None = None
    lower_bound: float = float("nan")
    diagnostics: dict = field(default_factory=dict)


def _add_norm_ball(m: Model, hs, n: int, norm: DeltaNorm):
    """Dual-side compactification matching the chosen primal norm."""
    if norm is DeltaNorm.SUM_TRACE:
        for h in hs:
            u, l_ = m.herm_psd(n), m.herm_psd(n)
            m.add_matrix_eq([(u, identity_adj), (h, identity_adj)], np.eye(n))
            m.add_matrix_eq([(l_, identity_adj), (h, neg_identity_adj)], np.eye(n))
    elif norm is DeltaNorm.MAX_TRACE:
        ts = []
        for h in hs:
            t = m.nonneg()
            ts.append(t)
            u, l_ = m.herm_psd(n), m.herm_psd(n)
            m.add_matrix_eq([(u, identity_adj), (h, identity_adj), (t, lambda e: -np.trace(e).real)], np.zeros((n, n)))
            m.add_matrix_eq([(l_, identity_adj), (h, neg_identity_adj), (t, lambda e: -np.trace(e).real)], np.zeros((n, n)))
        s = m.nonneg()
        m.add_eq({**{t: 1.0 for t in ts}, s: 1.0}, 1.0)
    else:
        for h in hs:
            a, b = m.herm_psd(n), m.herm_psd(n)
            m.add_matrix_eq([(h, identity_adj), (a, neg_identity_adj), (b, identity_adj)], np.zeros((n, n)))
            s = m.nonneg()
            m.add_eq({a: np.eye(n), b: np.eye(n), s: 1.0}, 1.0)


def gamma_sdp(spec: MapSpec, tol: Tolerances | None = None, norm: DeltaNorm = DeltaNorm.SUM_TRACE) -> CpVerdict:
    """Minimize ``sum tr(Y_i^T H_i)`` over ``sum X_i ⊗ H_i >= 0`` and a norm ball.

    Returns ``CompletelyPositive`` when the optimum is ``>= -margin_tol``,
    ``NotCP`` with a validated witness when it is below, ``Marginal`` when
    neither side can be certified.
    """
    tol = tol or DEFAULT_TOLERANCES
    m = Model()
    hs = [m.herm_free(spec.dout) for _ in spec.inputs]
    s = m.herm_psd(spec.din * spec.dout)
    m.add_matrix_eq(
        [(s, identity_adj)] + [(h, lambda e, x=x: -adj_kron_left(x, spec.dout)(e)) for h, x in zip(hs, spec.inputs)],
        np.zeros((spec.din * spec.dout,) * 2),
    )
    _add_norm_ball(m, hs, spec.dout, norm)
    m.minimize({h: y.T for h, y in zip(hs, spec.outputs)})
    _, sol = m.solve(tol)
    diag = {"solver_status": sol.status, **{k: v for k, v in sol.diagnostics.items() if not isinstance(v, list)}}
    if sol.primal is None:
        raise NumericFailure("Γ problem failed", diag)
    hvals = [Model.value(h, sol.primal) for h in hs]
    w = Witness(H=hvals, bounded=norm is DeltaNorm.SUM_TRACE)
    ok, info = validate_witness(spec, w, tol)
    gamma = w.objective
    lower = sol.dual_obj
    diag.update(info)
    if gamma < -tol.margin_tol and ok:
        return CpVerdict(NOT_CP, gamma, w, lower, diag)
    if sol.status in (OPTIMAL, MARGINAL) and lower >= -tol.margin_tol and gamma >= -tol.margin_tol:
        return CpVerdict(CP, min(gamma, 0.0) if gamma > -tol.margin_tol else gamma, None, lower, diag)
    if sol.status == NUMERIC_FAILURE:
        raise NumericFailure("Γ problem failed", diag)
    return CpVerdict(MARGINAL, gamma, None, lower, diag)


@dataclass
class DeltaResult:
    """Optimal value of the approximation problem and a near-optimal Choi matrix.

    ``upper_bound`` is the error actually attained by ``best_choi``;
    ``lower_bound`` is certified by a dual point. The infimum need not be
    attained, in which case ``delta`` is the dual-side value and
    ``attained`` is false.
    """

    delta: float
    best_choi: la.ChoiMatrix
    lower_bound: float
    upper_bound: float
    witness: Witness | None
    status: str
    attained: bool = True
    diagnostics: dict = field(default_factory=dict)


def _delta_errors(c: la.ChoiMatrix, spec: MapSpec, norm: DeltaNorm) -> float:
    errs = []
    for x, y in spec.pairs:
        r = c.apply(x) - y
        errs.append(la.op_norm(r) if norm is DeltaNorm.SUM_OPERATOR else la.trace_norm(r))
    return max(errs) if norm is DeltaNorm.MAX_TRACE else float(sum(errs))


def delta_sdp(spec: MapSpec, tol: Tolerances | None = None, norm: DeltaNorm = DeltaNorm.SUM_TRACE) -> DeltaResult:
    """Best CP approximation: minimize the summed trace-norm error over ``C >= 0``.

    ``delta`` is the error of the returned (PSD-projected) Choi matrix, so it is
    always an attained upper bound; ``lower_bound`` comes from the dual.
    """
    tol = tol or DEFAULT_TOLERANCES
    m = Model()
    n = spec.dout
    c = m.herm_psd(spec.din * spec.dout)
    groups, obj, caps = [], {}, []
    tmax = m.nonneg() if norm is DeltaNorm.MAX_TRACE else None
    for x, y in spec.pairs:
        p, q = m.herm_psd(n), m.herm_psd(n)
        if norm is DeltaNorm.SUM_OPERATOR:
            # -t 1 <= apply(C,X) - Y <= t 1 with P, Q the two slacks
            t = m.nonneg()
            g = m.add_matrix_eq(
                [(p, identity_adj), (c, lambda e, x=x: -adj_apply(x)(e)), (t, lambda e: -np.trace(e).real)], -y
            )
            m.add_matrix_eq(
                [(q, identity_adj), (c, adj_apply(x)), (t, lambda e: -np.trace(e).real)], y
            )
            obj[t] = 1.0
        else:
            g = m.add_matrix_eq([(p, identity_adj), (q, neg_identity_adj), (c, lambda e, x=x: -adj_apply(x)(e))], -y)
            if norm is DeltaNorm.MAX_TRACE:
                s = m.nonneg()
                m.add_eq({tmax: 1.0, p: -np.eye(n), q: -np.eye(n), s: -1.0}, 0.0)
            else:
                obj[p] = np.eye(n)
                obj[q] = np.eye(n)
        groups.append(g)
    if tmax is not None:
        obj[tmax] = 1.0
    m.minimize(obj)
    _, sol = m.solve(tol)
    diag = {"solver_status": sol.status, **{k: v for k, v in sol.diagnostics.items() if not isinstance(v, list)}}
    if sol.primal is None:
        raise NumericFailure("Δ problem failed", diag)
    best = psd_part(choi_from_point(c, sol.primal, spec))
    upper = _delta_errors(best, spec, norm)
    wit, lower = None, float("-inf")
    if sol.dual is not None:
        ks = [Model.row_dual(g, sol.dual[0]) for g in groups]
        cand = Witness(H=[k.T for k in ks], bounded=norm is DeltaNorm.SUM_TRACE)
        ok, _ = validate_witness(spec, cand, tol.with_overrides(margin_tol=-np.inf))
        if ok:
            wit, lower = cand, -cand.objective
    if sol.status != OPTIMAL or upper - max(lower, 0.0) > tol.gap_tol * (1 + upper):
        # the primal infimum may be unattained; the dual side is attained
        gv = gamma_sdp(spec, tol, norm)
        diag["gamma_status"] = gv.status
        if gv.status != MARGINAL and -gv.gamma > lower:
            lower = max(lower, -gv.gamma)
            wit = gv.witness or wit
    lower = max(lower, 0.0)
    attained = upper - lower <= max(tol.gap_tol, 1e-7) * (1 + upper)
    delta = upper if attained else lower
    return DeltaResult(delta, best, lower, upper, wit, sol.status, attained, diag)


# ---------------------------------------------------------------------------
# exact extensions


@dataclass
class ExtensionOutcome:
    status: str  # Exists / NotExists / ApproxOnlyOrUndecided
    choi: la.ChoiMatrix | None = None
    certificate: Witness | None = None
    diagnostics: dict = field(default_factory=dict)


def choi_constraint_model(spec: MapSpec, trace_preserving: bool = False):
    """Model of ``{C >= 0, T(X_i) = Y_i, T*(X'_j) = Y'_j}`` (plus ``tr_1 C = 1``)."""
    m = Model()
    c = m.herm_psd(spec.din * spec.dout)
    groups = [m.add_matrix_eq([(c, adj_apply(x))], y) for x, y in spec.pairs]
    dgroups = [m.add_matrix_eq([(c, adj_dual_apply(xp))], yp) for xp, yp in spec.dual_pairs]
    tgroup = m.add_matrix_eq([(c, adj_tr_out(spec.dout))], np.eye(spec.din)) if trace_preserving else None
    return m, c, groups, dgroups, tgroup


def farkas_witness(spec: MapSpec, y: np.ndarray, groups, dgroups, tgroup=None) -> Witness:
    """Turn a Farkas vector of the Choi system into a witness.

    The multipliers ``K`` satisfy ``sum K_i ⊗ X_i^T + ... <= 0`` in Choi layout;
    flipping the sign and transposing gives the input-first witness.
    """
    hs = [-Model.row_dual(g, y).T for g in groups]
    gs = [-Model.row_dual(g, y) for g in dgroups]
    h0 = -Model.row_dual(tgroup, y) if tgroup is not None else None
    if h0 is not None:
        h0 = h0.T
    return Witness(H=hs, G=gs, H0=h0)


def exact_cp_extension(spec: MapSpec, tol: Tolerances | None = None) -> ExtensionOutcome:
    """Decide whether some ``C >= 0`` reproduces every pair exactly.

    ``Exists`` carries a re-validated Choi matrix, ``NotExists`` a validated
    witness; everything else (including data whose best approximation error
    is zero but not attained) is ``ApproxOnlyOrUndecided``.
    """
    tol = tol or DEFAULT_TOLERANCES
    m, c, groups, dgroups, _ = choi_constraint_model(spec)
    p = m.build()
    res = feasibility(p, tol)
    diag = {k: v for k, v in res.diagnostics.items()}
    if res.status == FEASIBLE:
        choi = choi_from_point(c, res.point, spec)
        r = residuals(choi, spec)
        diag["validation"] = r
        scale = 1 + max([la.op_norm(y) for y in spec.outputs] + [1.0])
        if max(r["pairs"], r["dual_pairs"]) <= tol.feas_tol * scale and r["min_eig"] >= -tol.psd_tol * max(1.0, la.op_norm(choi.matrix)):
            return ExtensionOutcome(EXISTS, choi=choi, diagnostics=diag)
    elif res.status == INFEASIBLE:
        w = farkas_witness(spec, res.certificate, groups, dgroups)
        w = normalize_witness(w)
        ok, info = validate_witness(spec, w, tol)
        diag["validation"] = info
        if ok:
            return ExtensionOutcome(NOT_EXISTS, certificate=w, diagnostics=diag)
    return ExtensionOutcome(UNDECIDED, diagnostics=diag)


def normalize_witness(w: Witness) -> Witness:
    """Rescale an unbounded witness so its largest block has operator norm 1."""
    mats = list(w.H) + list(w.G) + ([w.H0] if w.H0 is not None else [])
    s = max((la.op_norm(x) for x in mats), default=0.0)
    if s == 0:
        return w
    return Witness(
        H=[h / s for h in w.H],
        G=[g / s for g in w.G],
        H0=None if w.H0 is None else w.H0 / s,
        bounded=w.bounded,
        weight=w.weight,
    )


# ---------------------------------------------------------------------------
# span structure and classification


@dataclass
class PsdSearch:
    status: str  # Yes / No / Marginal
    element: np.ndarray | None = None
    certificate: np.ndarray | None = None  # PD matrix orthogonal to the span
    value: float = float("nan")


def _span_model(basis):
    m = Model()
    n = basis[0].shape[0]
    coef = [m.free() for _ in basis]
    p = m.herm_psd(n)
    m.add_matrix_eq([(p, identity_adj)] + [(a, lambda e, b=b: -np.trace(e @ b).real) for a, b in zip(coef, basis)], np.zeros((n, n)))
    return m, p, coef


def contains_nonzero_psd(basis: Sequence, tol: Tolerances | None = None) -> PsdSearch:
    """Does the real span of Hermitian ``basis`` contain a nonzero PSD matrix?

    ``Yes`` returns a trace-one PSD element, ``No`` a positive definite matrix
    orthogonal to the span (which excludes any such element).
    """
    tol = tol or DEFAULT_TOLERANCES
    basis = [la.as_hermitian(b) for b in basis]
    n = basis[0].shape[0]
    m, p, _ = _span_model(basis)
    s = m.nonneg()
    m.add_eq({p: np.eye(n), s: 1.0}, 1.0)
    m.minimize({p: -np.eye(n)})
    _, sol = m.solve(tol)
    if sol.primal is not None and -sol.primal_obj >= 1 - 1e-6:
        elem = Model.value(p, sol.primal)
        resid = _span_residual(elem, basis)
        if la.min_eig(elem) >= -tol.psd_tol and resid <= 1e-7:
            return PsdSearch(YES, element=elem, value=-sol.primal_obj)
    # orthogonal complement: max t with W - t 1 >= 0, <W, B_k> = 0, tr W = n
    m2 = Model()
    wv = m2.herm_psd(n)
    t = m2.free()
    sl = m2.herm_psd(n)
    m2.add_matrix_eq([(sl, identity_adj), (wv, neg_identity_adj), (t, lambda e: np.trace(e).real)], np.zeros((n, n)))
    for b in basis:
        m2.add_eq({wv: b}, 0.0)
    m2.add_eq({wv: np.eye(n)}, float(n))
    m2.minimize({t: -1.0})
    _, sol2 = m2.solve(tol)
    if sol2.primal is not None:
        wmat = Model.value(wv, sol2.primal)
        ortho = max(abs(la.inner(wmat, b)) / max(1.0, np.linalg.norm(b)) for b in basis)
        if la.min_eig(wmat) > tol.margin_tol and ortho <= 1e-9:
            return PsdSearch(NO, certificate=wmat, value=0.0)
    return PsdSearch(MARGINAL, value=-sol.primal_obj if sol.primal is not None else float("nan"))


def _span_residual(x: np.ndarray, basis) -> float:
    a = np.array([la.herm_coords(b) for b in basis]).T
    v = la.herm_coords(x)
    c, *_ = np.linalg.lstsq(a, v, rcond=None)
    return float(np.linalg.norm(a @ c - v))


def strictly_positive_element(basis: Sequence, tol: Tolerances | None = None) -> tuple[str, np.ndarray | None, float]:
    """Search the span for ``P >= t 1`` with ``tr P = 1`` and maximal ``t``."""
    tol = tol or DEFAULT_TOLERANCES
    basis = [la.as_hermitian(b) for b in basis]
    n = basis[0].shape[0]
    m = Model()
    coef = [m.free() for _ in basis]
    t = m.free()
    sl = m.herm_psd(n)
    # sl = sum a_k B_k - t 1
    m.add_matrix_eq(
        [(sl, identity_adj), (t, lambda e: np.trace(e).real)]
        + [(a, lambda e, b=b: -np.trace(e @ b).real) for a, b in zip(coef, basis)],
        np.zeros((n, n)),
    )
    m.add_eq({a: np.trace(b).real for a, b in zip(coef, basis)}, 1.0)
    m.minimize({t: -1.0})
    _, sol = m.solve(tol)
    if sol.primal is None:
        return MARGINAL, None, float("nan")
    p = sum(Model.value(a, sol.primal) * b for a, b in zip(coef, basis))
    lam = la.min_eig(p)
    if lam > tol.margin_tol:
        return YES, p, lam
    if sol.dual_obj < -tol.margin_tol or -sol.primal_obj < -tol.margin_tol:
        return NO, None, lam
    return MARGINAL, None, lam


def psd_support_of_span(basis: Sequence, tol: Tolerances | None = None) -> np.ndarray | None:
    """Projector onto the joint support of all PSD elements of the span.

    Uses a maximal-rank PSD element, which interior-point iterates approach
    when maximizing the trace over the normalized PSD part of the span.
    """
    r = contains_nonzero_psd(basis, tol)
    if r.status != YES:
        return None
    w, v = la.eigh(r.element)
    keep = v[:, w > 1e-6 * max(w[-1], 1e-300)]
    return keep @ keep.conj().T


def spanned_by_psd(basis: Sequence, tol: Tolerances | None = None) -> bool:
    """True when the span equals the span of its PSD elements."""
    pr = psd_support_of_span(basis, tol)
    if pr is None:
        return False
    return all(np.max(np.abs(pr @ b @ pr - b)) <= 1e-7 * max(1.0, la.op_norm(b)) for b in basis)


@dataclass
class Classification:
    cp: CpVerdict
    guarantee: str
    extension: str
    sdp_extension: ExtensionOutcome | None = None
    psd_element: np.ndarray | None = None
    notes: list = field(default_factory=list)


def classify(spec: MapSpec, tol: Tolerances | None = None) -> Classification:
    """CP verdict plus which structural guarantee decides extendability."""
    tol = tol or DEFAULT_TOLERANCES
    verdict = gamma_sdp(spec, tol)
    basis = list(spec.inputs)
    psd = contains_nonzero_psd(basis, tol)
    notes = []
    if psd.status == NO:
        guarantee = NO_PSD
        notes.append("every map on a span without nonzero PSD elements is CP and has a CP extension")
    else:
        st, elem, _ = strictly_positive_element(basis, tol)
        if st == YES:
            guarantee = STRICTLY_POSITIVE
            psd = PsdSearch(YES, element=elem)
        elif psd.status == YES and spanned_by_psd(basis, tol):
            guarantee = SPANNED_BY_PSD
        else:
            guarantee = NO_GUARANTEE
    sdp = None
    if guarantee == NO_PSD:
        extension = EXISTS
    elif verdict.status == NOT_CP:
        extension = NOT_EXISTS
        notes.append("not CP on the subspace, so no CP extension")
    elif guarantee in (STRICTLY_POSITIVE, SPANNED_BY_PSD) and verdict.status == CP:
        extension = EXISTS
    else:
        sdp = exact_cp_extension(spec, tol)
        extension = sdp.status
    if spec.dual_pairs and sdp is None:
        # the structural guarantees only cover Schrödinger-side data
        sdp = exact_cp_extension(spec, tol)
        extension = sdp.status
        notes.append("Heisenberg-side constraints present; decided by the feasibility system")
    return Classification(verdict, guarantee, extension, sdp, psd.element, notes)


# ---------------------------------------------------------------------------
# unboundedness


@dataclass
class UnboundednessPoint:
    eps: float
    norm: float
    status: str


def unboundedness_diagnostic(
    spec: MapSpec, eps_schedule: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4), tol: Tolerances | None = None
) -> tuple[list[UnboundednessPoint], bool]:
    """Smallest ``||T*(1)||`` among CP maps with summed trace-norm error ``<= eps``.

    Returns the series and a flag that is true when it grows monotonically by
    at least a factor 10 over the schedule (the signature of approximations
    that cannot converge to an exact extension).
    """
    tol = tol or DEFAULT_TOLERANCES
    out = []
    for eps in eps_schedule:
        m = Model()
        n = spec.dout
        c = m.herm_psd(spec.din * spec.dout)
        tr_terms = {}
        for x, y in spec.pairs:
            p, q = m.herm_psd(n), m.herm_psd(n)
            m.add_matrix_eq([(p, identity_adj), (q, neg_identity_adj), (c, lambda e, x=x: -adj_apply(x)(e))], -y)
            tr_terms[p] = np.eye(n)
            tr_terms[q] = np.eye(n)
        s = m.nonneg()
        m.add_eq({**tr_terms, s: 1.0}, float(eps))
        t = m.free()
        sl = m.herm_psd(spec.din)
        # sl = t 1 - tr_1[C]
        m.add_matrix_eq(
            [(sl, identity_adj), (t, lambda e: -np.trace(e).real), (c, adj_tr_out(spec.dout))], np.zeros((spec.din,) * 2)
        )
        m.minimize({t: 1.0})
        _, sol = m.solve(tol)
        if sol.primal is None:
            out.append(UnboundednessPoint(float(eps), float("nan"), sol.status))
            continue
        choi = psd_part(choi_from_point(c, sol.primal, spec))
        out.append(UnboundednessPoint(float(eps), la.op_norm(choi.tr_out()), sol.status))
    norms = [pt.norm for pt in out]
    diverging = (
        len(norms) >= 2
        and all(np.isfinite(norms))
        and all(b >= a * (1 - 1e-6) for a, b in zip(norms, norms[1:]))
        and norms[-1] >= 10 * norms[0]
    )
    return out, diverging
