"""Channel (trace-preserving) extensions, probabilistic operations, unital scales.

The trace-preserving score is

    delta_tp = inf  w*lam + sum_i ||T(X_i) - Y_i||_1
               s.t. C >= 0,  -lam 1 <= tr_1[C] - 1 <= lam 1

and its dual is a witness with a trace-side block ``H0`` (``||H0||_1 <= w``,
``||H_i|| <= 1``). With the hard constraint ``tr_1[C] = 1`` the ``H0`` block
is unconstrained.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .cpcheck import (
    CP,
    EXISTS,
    MARGINAL,
    NOT_CP,
    NOT_EXISTS,
    DeltaNorm,
    MapSpec,
    Witness,
    _add_norm_ball,
    adj_apply,
    adj_dual_apply,
    adj_kron_left,
    adj_kron_right,
    adj_tr_out,
    choi_constraint_model,
    choi_from_point,
    farkas_witness,
    gamma_sdp,
    identity_adj,
    neg_identity_adj,
    normalize_witness,
    preprocess,
    psd_part,
    residuals,
    validate_witness,
)
from .errors import NumericFailure, PreconditionError
from .solver import (
    DEFAULT_TOLERANCES,
    FEASIBLE,
    INFEASIBLE,
    OPTIMAL,
    PRIMAL_INFEASIBLE,
    Model,
    Tolerances,
    check_point,
    feasibility,
    polish,
)

SUPPORT_INCOMPATIBLE = "SupportIncompatible"
MAXIMIN = "Maximin"
WEIGHTED = "Weighted"


# ---------------------------------------------------------------------------
# shared pieces


def _dual_witness(y: np.ndarray, groups, dgroups, tgroup) -> Witness:
    """Witness from the multipliers of a Δ-type model.

    The pair rows there read ``P - Q - T(X_i) = -Y_i``, so their multipliers
    enter with the opposite sign of a plain Farkas vector.
    """
    hs = [Model.row_dual(g, y).T for g in groups]
    gs = [-Model.row_dual(g, y) for g in dgroups]
    h0 = None if tgroup is None else -Model.row_dual(tgroup, y).T
    return Witness(H=hs, G=gs, H0=h0)


def _tp_errors(c: la.ChoiMatrix, spec: MapSpec, w: float | None) -> tuple[float, float]:
    """(summed trace-norm pair error, trace-preservation defect)."""
    err = float(sum(la.trace_norm(c.apply(x) - y) for x, y in spec.pairs))
    lam = la.op_norm(c.tr_out() - np.eye(spec.din))
    return err, lam


def _choi_point(c: la.ChoiMatrix):
    return [la.real_embedding(c.matrix)], np.zeros(0)


def _repair(spec: MapSpec, c: la.ChoiMatrix, trace_preserving: bool, tol: Tolerances):
    """Project onto the equality constraints and re-validate; returns a Choi or None."""
    m, var, *_ = choi_constraint_model(spec, trace_preserving)
    p = m.build()
    xs, xf = polish(p, *_choi_point(c))
    ok, info = check_point(p, xs, xf, tol)
    if not ok:
        return None, info
    fixed = choi_from_point(var, (xs, xf), spec)
    return fixed, info


def validate_channel(spec: MapSpec, c: la.ChoiMatrix, tol: Tolerances = DEFAULT_TOLERANCES, atol: float | None = None):
    """Independent check that ``c`` is a channel reproducing every pair."""
    atol = tol.feas_tol if atol is None else atol
    r = residuals(c, spec)
    tp = float(np.max(np.abs(c.tr_out() - np.eye(spec.din))))
    scale = max(1.0, la.op_norm(c.matrix))
    ok = r["pairs"] <= atol * scale and r["dual_pairs"] <= atol * scale and tp <= atol * scale
    ok = ok and r["min_eig"] >= -tol.psd_tol * scale
    return ok, {**r, "trace_defect": tp}


# ---------------------------------------------------------------------------
# weighted trace-preserving score


@dataclass
class TpExtensionResult:
    delta_tp: float
    lam: float
    best_choi: la.ChoiMatrix
    witness: Witness | None
    weight_w: float
    gamma_tp: float = float("nan")
    status: str = OPTIMAL
    diagnostics: dict = field(default_factory=dict)


def _tp_primal(spec: MapSpec, w: float | None, tol: Tolerances):
    """Primal of the trace-preserving score; ``w=None`` imposes ``tr_1[C] = 1`` exactly."""
    m = Model()
    n, din = spec.dout, spec.din
    c = m.herm_psd(din * n)
    groups, obj = [], {}
    for x, y in spec.pairs:
        p, q = m.herm_psd(n), m.herm_psd(n)
        groups.append(m.add_matrix_eq([(p, identity_adj), (q, neg_identity_adj), (c, lambda e, x=x: -adj_apply(x)(e))], -y))
        obj[p] = np.eye(n)
        obj[q] = np.eye(n)
    dgroups = [m.add_matrix_eq([(c, adj_dual_apply(xp))], yp) for xp, yp in spec.dual_pairs]
    tgroup = None
    if w is None:
        tgroup = m.add_matrix_eq([(c, adj_tr_out(n))], np.eye(din))
    else:
        lam = m.nonneg()
        u, v = m.herm_psd(din), m.herm_psd(din)
        tr = lambda e: -np.trace(e).real  # noqa: E731
        m.add_matrix_eq([(u, identity_adj), (lam, tr), (c, adj_tr_out(n))], np.eye(din))
        m.add_matrix_eq([(v, identity_adj), (lam, tr), (c, lambda e: -adj_tr_out(n)(e))], -np.eye(din))
        obj[lam] = float(w)
    m.minimize(obj)
    _, sol = m.solve(tol)
    return sol, c, groups, dgroups, tgroup


def _tp_dual(spec: MapSpec, w: float | None, tol: Tolerances):
    """Witness SDP: minimize the witness value over ``M >= 0`` and the norm balls."""
    m = Model()
    din, n = spec.din, spec.dout
    hs = [m.herm_free(n) for _ in spec.inputs]
    gs = [m.herm_free(din) for _ in spec.dual_inputs]
    s = m.herm_psd(din * n)
    maps = [(s, identity_adj)]
    maps += [(h, lambda e, x=x: -adj_kron_left(x, n)(e)) for h, x in zip(hs, spec.inputs)]
    maps += [(g, lambda e, xp=xp: -adj_kron_right(xp.T, din)(e)) for g, xp in zip(gs, spec.dual_inputs)]
    obj = {h: y.T for h, y in zip(hs, spec.outputs)}
    obj.update({g: yp for g, yp in zip(gs, spec.dual_outputs)})
    h0 = a = b = None
    if w is None:
        h0 = m.herm_free(din)
        maps.append((h0, lambda e: -adj_kron_right(np.eye(n), din)(e)))
        obj[h0] = np.eye(din)
    else:
        a, b = m.herm_psd(din), m.herm_psd(din)
        maps.append((a, lambda e: -adj_kron_right(np.eye(n), din)(e)))
        maps.append((b, lambda e: adj_kron_right(np.eye(n), din)(e)))
        slack = m.nonneg()
        m.add_eq({a: np.eye(din), b: np.eye(din), slack: 1.0}, float(w))
        obj[a] = np.eye(din)
        obj[b] = -np.eye(din)
    m.add_matrix_eq(maps, np.zeros((din * n,) * 2))
    _add_norm_ball(m, hs, n, DeltaNorm.SUM_TRACE)
    m.minimize(obj)
    _, sol = m.solve(tol)
    if sol.primal is None:
        return None, sol
    pt = sol.primal
    h0v = Model.value(h0, pt) if w is None else Model.value(a, pt) - Model.value(b, pt)
    wit = Witness(
        H=[Model.value(h, pt) for h in hs],
        G=[Model.value(g, pt) for g in gs],
        H0=h0v,
        bounded=True,
        weight=None if w is None else float(w),
    )
    return wit, sol


def _best_witness(spec: MapSpec, cands, tol: Tolerances):
    best, best_info = None, {}
    for cand in cands:
        if cand is None:
            continue
        ok, info = validate_witness(spec, cand, tol)
        if ok and (best is None or cand.objective < best.objective):
            best, best_info = cand, info
    return best, best_info


def cptp_delta(spec: MapSpec, w: float = 1.0, tol: Tolerances | None = None) -> TpExtensionResult:
    """Weighted distance of the data from any quantum channel.

    Solves the primal for the best Choi matrix and, separately, the dual for a
    witness; both values are reported and the witness is re-validated with
    ``||H_i|| <= 1`` and ``||H0||_1 <= w``.

    Args:
        spec: preprocessed map data.
        w: weight of the trace-preservation defect.
        tol: tolerance overrides.
    """
    if not w > 0:
        raise ValueError("w must be positive")
    tol = tol or DEFAULT_TOLERANCES
    sol, c, *_ = _tp_primal(spec, w, tol)
    diag = {"solver_status": sol.status}
    if sol.primal is None:
        raise NumericFailure("trace-preserving score failed", diag)
    best = psd_part(choi_from_point(c, sol.primal, spec))
    err, lam = _tp_errors(best, spec, w)
    upper = err + w * lam
    wit_dual, dsol = _tp_dual(spec, w, tol)
    diag["dual_status"] = dsol.status
    wit, info = _best_witness(spec, [wit_dual], tol)
    gamma = wit.objective if wit is not None else (dsol.primal_obj if dsol.primal is not None else float("nan"))
    if wit is None and wit_dual is not None:
        ok, info = validate_witness(spec, wit_dual, tol.with_overrides(margin_tol=-np.inf))
        if ok:
            gamma = wit_dual.objective
    diag["witness_check"] = info
    delta = upper
    if np.isfinite(gamma) and upper + gamma > 1e-7 * (1 + upper):
        # unattained-looking primal; the dual value is the certified score
        diag["primal_upper"] = upper
        delta = max(-gamma, 0.0)
    diag["duality_gap"] = abs(upper + gamma) if np.isfinite(gamma) else float("nan")
    if delta <= tol.margin_tol:
        wit = None
    return TpExtensionResult(delta, lam, best, wit, float(w), gamma, sol.status, diag)


# ---------------------------------------------------------------------------
# exact channel extension


@dataclass
class ChannelOutcome:
    status: str  # Exists / NotExists / Marginal
    choi: la.ChoiMatrix | None = None
    certificate: Witness | None = None
    diagnostics: dict = field(default_factory=dict)


def trace_mismatch_witness(spec: MapSpec) -> Witness | None:
    """Closed-form witness when some ``tr Y_i != tr X_i``.

    With ``H_i = c_i 1`` and ``H0 = -sum c_i X_i`` the witness matrix vanishes
    and the value is ``sum c_i (tr Y_i - tr X_i)``.
    """
    diffs = np.array([np.trace(y).real - np.trace(x).real for x, y in spec.pairs])
    top = float(np.max(np.abs(diffs)))
    if top == 0:
        return None
    cs = -diffs / top
    h0 = -sum(ci * x for ci, x in zip(cs, spec.inputs))
    return Witness(
        H=[ci * np.eye(spec.dout) for ci in cs],
        G=[np.zeros((spec.din, spec.din)) for _ in spec.dual_inputs],
        H0=h0,
        bounded=True,
    )


def channel_extension(spec: MapSpec, tol: Tolerances | None = None) -> ChannelOutcome:
    """Decide whether a quantum channel reproduces every pair exactly.

    The trace condition ``tr_1[C] = 1`` is imposed as a hard equality. The
    best approximating channel is computed together with its dual witness;
    an attained zero gives ``Exists`` with a polished, re-validated Choi
    matrix, a validated witness gives ``NotExists``. When neither side
    clears its tolerance the plain feasibility system is consulted before
    falling back to ``Marginal``.
    """
    tol = tol or DEFAULT_TOLERANCES
    diag: dict = {}
    traces = [abs(np.trace(y).real - np.trace(x).real) for x, y in spec.pairs]
    if max(traces) > tol.feas_tol * (1 + max(la.trace_norm(x) for x in spec.inputs)):
        w = trace_mismatch_witness(spec)
        ok, info = validate_witness(spec, w, tol)
        diag.update({"reason": "trace mismatch", "trace_gaps": traces, "validation": info})
        if ok:
            return ChannelOutcome(NOT_EXISTS, certificate=w, diagnostics=diag)

    sol, c, groups, dgroups, tgroup = _tp_primal(spec, None, tol)
    diag["solver_status"] = sol.status
    if sol.primal is not None:
        raw = choi_from_point(c, sol.primal, spec)
        err, lam = _tp_errors(psd_part(raw), spec, None)
        diag["best_error"] = err
        if err <= 1e2 * tol.margin_tol:
            fixed, info = _repair(spec, psd_part(raw), True, tol)
            diag["repair"] = info
            if fixed is not None:
                ok, vinfo = validate_channel(spec, fixed, tol)
                diag["validation"] = vinfo
                if ok:
                    return ChannelOutcome(EXISTS, choi=fixed, diagnostics=diag)
    cands = []
    if sol.dual is not None:
        cands.append(_dual_witness(sol.dual[0], groups, dgroups, tgroup))
        cands[-1].bounded = True
    wit, info = _best_witness(spec, cands, tol)
    if wit is None:
        wd, dsol = _tp_dual(spec, None, tol)
        diag["dual_status"] = dsol.status
        wit, info = _best_witness(spec, [wd], tol)
    if wit is not None:
        diag["validation"] = info
        return ChannelOutcome(NOT_EXISTS, certificate=wit, diagnostics=diag)

    m, var, groups, dgroups, tgroup = choi_constraint_model(spec, trace_preserving=True)
    res = feasibility(m.build(), tol)
    diag["feasibility"] = res.status
    if res.status == FEASIBLE:
        choi = choi_from_point(var, res.point, spec)
        ok, vinfo = validate_channel(spec, choi, tol)
        diag["validation"] = vinfo
        if ok:
            return ChannelOutcome(EXISTS, choi=choi, diagnostics=diag)
    elif res.status == INFEASIBLE:
        w = normalize_witness(farkas_witness(spec, res.certificate, groups, dgroups, tgroup))
        ok, info = validate_witness(spec, w, tol)
        diag["validation"] = info
        if ok:
            return ChannelOutcome(NOT_EXISTS, certificate=w, diagnostics=diag)
    return ChannelOutcome(MARGINAL, diagnostics=diag)


# ---------------------------------------------------------------------------
# unital scale


@dataclass
class UnitalScale:
    c_star: float | None
    bracket: tuple[float, float]
    witness_below: Witness | None = None
    diagnostics: dict = field(default_factory=dict)


def _scale_feasible(spec: MapSpec, c: float, tol: Tolerances) -> bool | None:
    aug = spec.with_pairs([(np.eye(spec.din), c * np.eye(spec.dout))])
    v = gamma_sdp(aug, tol)
    if v.status == CP:
        return True
    if v.status == NOT_CP:
        return False
    return None


def minimal_unital_scale(spec: MapSpec, tol: Tolerances | None = None, resolution: float = 1e-6, cap: float | None = None) -> UnitalScale:
    """Smallest ``c`` such that adding ``1 -> c 1`` keeps a CP extension.

    With the identity in the span, a CP extension exists iff the augmented
    map is CP on its span, and every CP map sending ``1`` to ``c 1`` has
    trace ``c dout`` on its Choi matrix. The set of feasible ``c`` is a closed
    half-line; it is bracketed in ``[0, 10 sum ||Y_i||]`` and bisected on the
    CP verdict of the augmented map.

    Raises:
        PreconditionError: inputs not traceless, or the identity already in
            their span.
    """
    tol = tol or DEFAULT_TOLERANCES
    for x in spec.inputs:
        if abs(np.trace(x)) > 1e-9 * max(1.0, la.op_norm(x)):
            raise PreconditionError("inputs must be traceless")
    basis = np.array([la.herm_coords(x) for x in spec.inputs]).T
    one = la.herm_coords(np.eye(spec.din, dtype=complex))
    coef, *_ = np.linalg.lstsq(basis, one, rcond=None)
    if np.linalg.norm(basis @ coef - one) <= 1e-9 * np.linalg.norm(one):
        raise PreconditionError("the identity already lies in the span of the inputs")
    hi = cap if cap is not None else 10.0 * sum(la.op_norm(y) for y in spec.outputs)
    lo = 0.0
    diag: dict = {"evaluations": 0}
    first = _scale_feasible(spec, hi, tol)
    diag["evaluations"] += 1
    if first is False:
        return UnitalScale(None, (lo, hi), diagnostics={**diag, "reason": "no finite scale below the cap"})
    if _scale_feasible(spec, lo, tol) is True:
        return UnitalScale(0.0, (0.0, 0.0), diagnostics=diag)
    diag["evaluations"] += 1
    # secant-style start: the direct optimum narrows the bracket before bisecting
    guess = _direct_scale(spec, tol)
    if guess is not None and lo < guess < hi:
        for probe, side in ((guess + resolution / 2, "hi"), (guess - resolution / 2, "lo")):
            ok = _scale_feasible(spec, probe, tol)
            diag["evaluations"] += 1
            if ok is True and side == "hi":
                hi = probe
            elif ok is False and side == "lo":
                lo = probe
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        ok = _scale_feasible(spec, mid, tol)
        diag["evaluations"] += 1
        if ok is False:
            lo = mid
        else:
            hi = mid
    aug = spec.with_pairs([(np.eye(spec.din), lo * np.eye(spec.dout))])
    below = gamma_sdp(aug, tol) if lo > 0 else None
    wit = below.witness if below is not None and below.status == NOT_CP else None
    return UnitalScale((lo + hi) / 2, (lo, hi), wit, diag)


def _direct_scale(spec: MapSpec, tol: Tolerances) -> float | None:
    """``min tr_1``-scale over Choi matrices reproducing the pairs with ``T(1) = c 1``."""
    m = Model()
    n = spec.dout
    c = m.herm_psd(spec.din * n)
    s = m.free()
    for x, y in spec.pairs:
        m.add_matrix_eq([(c, adj_apply(x))], y)
    m.add_matrix_eq([(c, adj_apply(np.eye(spec.din))), (s, lambda e: -np.trace(e).real)], np.zeros((n, n)))
    m.minimize({s: 1.0})
    _, sol = m.solve(tol)
    if sol.primal is None:
        return None
    return float(Model.value(s, sol.primal))


# ---------------------------------------------------------------------------
# probabilistic operations


@dataclass
class ProbabilisticResult:
    objective_kind: str
    value: float
    probs: list
    choi: la.ChoiMatrix | None
    status: str = OPTIMAL
    priors: list | None = None
    certificate: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def _check_states(pairs):
    out = []
    for rho, rho2 in pairs:
        for r, name in ((rho, "input state"), (rho2, "output state")):
            if not la.is_density(r):
                raise la.NotPSDError(f"{name} is not a density matrix")
        out.append((la.hermitize(la.as_matrix(rho)), la.hermitize(la.as_matrix(rho2))))
    dims = {(a.shape[0], b.shape[0]) for a, b in out}
    if len(dims) != 1:
        from .errors import DimensionError

        raise DimensionError("all input (output) states must share one dimension")
    return out


def _probabilistic(pairs, objective: str, priors=None, floor=None, equal: bool = False, tol: Tolerances | None = None):
    tol = tol or DEFAULT_TOLERANCES
    pairs = _check_states(pairs)
    din, dout = pairs[0][0].shape[0], pairs[0][1].shape[0]
    m = Model()
    c = m.herm_psd(din * dout)
    ps = [m.free() for _ in pairs]
    for (rho, rho2), p in zip(pairs, ps):
        m.add_matrix_eq([(c, adj_apply(rho)), (p, lambda e, r=rho2: -np.trace(e @ r).real)], np.zeros((dout, dout)))
    wslack = m.herm_psd(din)
    m.add_matrix_eq([(wslack, identity_adj), (c, adj_tr_out(dout))], np.eye(din))
    if equal:
        for p in ps[1:]:
            m.add_eq({p: 1.0, ps[0]: -1.0}, 0.0)
    if floor is not None:
        for p in ps:
            m.add_eq({p: 1.0, m.nonneg(): -1.0}, float(floor))
    if objective == MAXIMIN:
        q = m.free()
        for p in ps:
            m.add_eq({p: 1.0, q: -1.0, m.nonneg(): -1.0}, 0.0)
        m.minimize({q: -1.0})
    else:
        m.minimize({p: -float(pi) for p, pi in zip(ps, priors)})
    prob, sol = m.solve(tol)
    diag = {"solver_status": sol.status}
    if sol.status == PRIMAL_INFEASIBLE:
        return ProbabilisticResult(objective, float("nan"), [], None, INFEASIBLE, priors, sol.certificate, diag)
    if sol.primal is None:
        raise NumericFailure("probabilistic SDP failed", diag)
    choi = la.ChoiMatrix(psd_part(choi_from_point(c, sol.primal, MapSpec(din, dout, (), ()))).matrix, din, dout)
    # keep the trace-non-increasing property after the PSD projection
    top = la.op_norm(choi.tr_out())
    if top > 1:
        choi = la.ChoiMatrix(choi.matrix / top, din, dout)
    probs = [float(np.trace(choi.apply(rho)).real) for rho, _ in pairs]
    resid = max(float(np.max(np.abs(choi.apply(rho) - pr * rho2))) for (rho, rho2), pr in zip(pairs, probs))
    diag["pair_residual"] = resid
    if objective == MAXIMIN:
        value = min(probs)
    else:
        value = float(sum(pi * pr for pi, pr in zip(priors, probs)))
    status = OPTIMAL if sol.status == OPTIMAL else MARGINAL
    if floor is not None and min(probs) < floor - 1e-6:
        status = MARGINAL
    return ProbabilisticResult(objective, value, probs, choi, status, priors, None, diag)


def probabilistic_maximin(pairs, equal: bool = False, tol: Tolerances | None = None) -> ProbabilisticResult:
    """Quantum operation maximizing the smallest success probability.

    Args:
        pairs: ``(rho_i, rho'_i)`` density-matrix pairs.
        equal: additionally force all success probabilities to coincide.
        tol: tolerance overrides.
    """
    return _probabilistic(pairs, MAXIMIN, equal=equal, tol=tol)


def probabilistic_weighted(pairs, priors, floor: float | None = None, equal: bool = False, tol: Tolerances | None = None) -> ProbabilisticResult:
    """Quantum operation maximizing the prior-weighted success probability.

    ``status`` is ``Infeasible`` (with a Farkas certificate) when the floor
    ``p_i >= floor`` cannot be met.
    """
    priors = [float(p) for p in priors]
    if len(priors) != len(pairs) or min(priors) < 0 or abs(sum(priors) - 1) > 1e-9:
        raise ValueError("priors must be a probability vector, one entry per pair")
    if floor is not None and not 0 <= floor <= 1:
        raise ValueError("floor must lie in [0, 1]")
    return _probabilistic(pairs, WEIGHTED, priors=priors, floor=floor, equal=equal, tol=tol)


# ---------------------------------------------------------------------------
# Hilbert-metric criterion for two states


@dataclass
class HilbertCheck:
    status: str  # Exists / NotExists / SupportIncompatible
    lhs: float
    rhs: float
    marginal_support: bool = False
    diagnostics: dict = field(default_factory=dict)


def _support_leak(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """How far ``supp a`` sticks out of ``supp b``, with the rank threshold used."""
    w, v = la.eigh(b)
    tol = max(la.rank_tol(b), np.finfo(float).tiny)
    off = v[:, w <= tol]
    if off.shape[1] == 0:
        return 0.0, tol
    return la.op_norm(off.conj().T @ a @ off), tol


def _contained(a, b) -> tuple[bool, bool]:
    """(supp a within supp b, decision was on the boundary)."""
    leak, tol = _support_leak(a, b)
    if leak > 10 * max(tol, la.rank_tol(a)):
        return False, leak <= 1e-6
    return True, leak > 0 and leak > tol


def _spread(a, b) -> float:
    """``||a^{-1/2} b a^{-1/2}||`` with the convention ``0^{-1/2} = inf``."""
    r = la.inf_ratio(a, b)
    return float("inf") if r == 0 else 1.0 / r


def hilbert_metric_check(rho1, rho2, rho1p, rho2p) -> HilbertCheck:
    """Two-state criterion for a probabilistic operation with nonzero success.

    An operation exists iff the product of the two spreads of the inputs
    dominates that of the outputs. When the spreads allow it but a support
    inclusion among the inputs is lost on the outputs, the verdict is
    ``SupportIncompatible``.
    """
    mats = []
    for r, name in ((rho1, "rho1"), (rho2, "rho2"), (rho1p, "rho1'"), (rho2p, "rho2'")):
        if not la.is_density(r):
            raise la.NotPSDError(f"{name} is not a density matrix")
        mats.append(la.hermitize(la.as_matrix(r)))
    r1, r2, q1, q2 = mats
    lhs = _spread(r1, r2) * _spread(r2, r1)
    rhs = _spread(q1, q2) * _spread(q2, q1)
    ok = lhs == float("inf") or lhs >= rhs - 1e-9
    marginal = False
    incompatible = False
    for a, b, ap, bp in ((r1, r2, q1, q2), (r2, r1, q2, q1)):
        inc, m1 = _contained(a, b)
        incp, m2 = _contained(ap, bp)
        marginal = marginal or m1 or m2
        incompatible = incompatible or (inc and not incp)
    if not ok:
        return HilbertCheck(NOT_EXISTS, lhs, rhs, marginal)
    if incompatible:
        return HilbertCheck(SUPPORT_INCOMPATIBLE, lhs, rhs, marginal)
    return HilbertCheck(EXISTS, lhs, rhs, marginal)


__all__ = [
    "ChannelOutcome",
    "HilbertCheck",
    "ProbabilisticResult",
    "TpExtensionResult",
    "UnitalScale",
    "channel_extension",
    "cptp_delta",
    "hilbert_metric_check",
    "minimal_unital_scale",
    "preprocess",
    "probabilistic_maximin",
    "probabilistic_weighted",
    "trace_mismatch_witness",
    "validate_channel",
]
