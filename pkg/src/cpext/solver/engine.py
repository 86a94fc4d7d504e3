"""Interior-point backend, presolve, status mapping and certificate checks.

The homogeneous self-dual interior-point method of ``cvxopt.solvers.conelp``
does the numerical work; everything it returns is re-verified here with plain
numpy before a status is reported.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import cvxopt
import cvxopt.solvers
import numpy as np
import scipy.linalg

from .problem import (
    DEFAULT_TOLERANCES,
    DUAL_INFEASIBLE,
    FEASIBLE,
    INFEASIBLE,
    MARGINAL,
    NUMERIC_FAILURE,
    OPTIMAL,
    PRIMAL_INFEASIBLE,
    FeasibilityResult,
    SdpProblem,
    SdpSolution,
    Tolerances,
)

log = logging.getLogger(__name__)

# residuals below this (relative) are reported as Marginal rather than failure
_LOOSE = 1e-4


def _sym_min_eig(x: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((x + x.T) / 2)[0]) if x.size else 0.0


def _sym_max_eig(x: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((x + x.T) / 2)[-1]) if x.size else 0.0


def _scale(x: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0


# ---------------------------------------------------------------------------
# presolve


@dataclass
class _Reduced:
    rows: np.ndarray  # indices of kept rows
    row_scale: np.ndarray  # multipliers applied to kept rows
    free_map: np.ndarray  # (n_free, r_free): x_free = free_map @ z
    a_svec: np.ndarray  # reduced, scaled block part in svec coordinates
    a_free: np.ndarray
    b: np.ndarray


def _tri(n: int):
    return np.tril_indices(n)


def _svec_rows(ab: np.ndarray) -> np.ndarray:
    """Coefficients of row functionals on lower-triangle block coordinates."""
    n = ab.shape[-1]
    ia, ib = _tri(n)
    w = np.where(ia == ib, 1.0, 2.0)
    return ab[..., ia, ib] * w


def _unsvec(v: np.ndarray, n: int) -> np.ndarray:
    x = np.zeros((n, n))
    ia, ib = _tri(n)
    x[ia, ib] = v
    x[ib, ia] = v
    return x


def _full_a(p: SdpProblem) -> np.ndarray:
    parts = [_svec_rows(ab) for ab in p.a_blocks]
    parts.append(p.a_free)
    return np.hstack(parts) if parts else np.zeros((p.n_rows, 0))


def _presolve(p: SdpProblem, tol: Tolerances):
    """Drop dependent rows, detect inconsistent ones, reparametrize free columns.

    Returns ``(_Reduced, None)`` or ``(None, SdpSolution)`` when presolve alone
    decides the status.
    """
    m = p.n_rows
    a = _full_a(p)
    b = p.b.copy()
    if m == 0:
        rows = np.zeros(0, dtype=int)
    else:
        norms = np.linalg.norm(a, axis=1)
        zero = norms == 0
        if np.any(zero & (np.abs(b) > 0)):
            k = int(np.argmax(zero & (np.abs(b) > 0)))
            y = np.zeros(m)
            y[k] = 1.0 / b[k]
            return None, _infeasible_from_cert(p, y, "empty row with nonzero right-hand side")
        u, s, _ = np.linalg.svd(a, full_matrices=True)
        cut = max(1e-10 * (s[0] if s.size else 0.0), 1e-300)
        r = int(np.sum(s > cut))
        if r < m:
            un = u[:, r:]
            proj = un @ (un.T @ b)
            if np.linalg.norm(proj) > 1e-9 * (1 + np.linalg.norm(b)):
                y = proj / float(b @ proj)
                return None, _infeasible_from_cert(p, y, "inconsistent equality rows")
        if r == m:
            rows = np.arange(m)
        else:
            _, _, piv = scipy.linalg.qr(a.T, pivoting=True, mode="economic")
            rows = np.sort(piv[:r])
    nblk = a.shape[1] - p.n_free
    scale = 1.0 / np.maximum(np.linalg.norm(a[rows], axis=1), 1e-300) if rows.size else np.zeros(0)
    a_red = a[rows] * scale[:, None]
    b_red = b[rows] * scale
    a_svec, a_free = a_red[:, :nblk], a_red[:, nblk:]
    free_map = np.eye(p.n_free)
    if p.n_free:
        if a_free.shape[0]:
            _, sf, vt = np.linalg.svd(a_free, full_matrices=True)
        else:
            sf, vt = np.zeros(0), np.eye(p.n_free)
        rf = int(np.sum(sf > 1e-10 * (sf[0] if sf.size else 1.0))) if sf.size else 0
        if rf < p.n_free:
            null = vt[rf:].T
            leak = null.T @ p.c_free
            if np.linalg.norm(leak) > 1e-9 * (1 + np.linalg.norm(p.c_free)):
                ray = null @ leak
                ray = -ray / float(p.c_free @ ray)
                sol = SdpSolution(
                    DUAL_INFEASIBLE,
                    certificate=([np.zeros((n, n)) for n in p.block_dims], ray),
                    diagnostics={"reason": "objective moves along an unconstrained direction"},
                )
                return None, sol
            free_map = vt[:rf].T
        a_free = a_free @ free_map
    return _Reduced(rows, scale, free_map, a_svec, a_free, b_red), None


# ---------------------------------------------------------------------------
# certificate validation (independent arithmetic)


def check_farkas(p: SdpProblem, y: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[bool, dict]:
    """Validate ``b.y > 0``, ``A_free^T y = 0`` and ``A*(y)`` negative semidefinite.

    The vector is scaled by the larger of ``|b.y|`` and the total trace norm of
    its adjoint image before tolerances apply, so an adjoint image that only
    vanishes up to rounding is not inflated.
    """
    y = np.asarray(y, dtype=float)
    adj = p.adjoint_blocks(y)
    mass = sum(float(np.sum(np.abs(np.linalg.eigvalsh(m)))) for m in adj if m.size)
    mass += float(np.sum(np.abs(p.a_free.T @ y))) if p.n_free else 0.0
    by = float(p.b @ y)
    norm = max(mass, abs(by))
    if norm == 0:
        return False, {"reason": "zero certificate"}
    yn = y / norm
    adj = [m / norm for m in adj]
    info = {
        "b_dot_y": float(p.b @ yn),
        "max_eig": max([_sym_max_eig(m) for m in adj] or [0.0]),
        "free_residual": float(np.max(np.abs(p.a_free.T @ yn))) if p.n_free else 0.0,
    }
    ok = (
        info["b_dot_y"] > tol.margin_tol
        and info["max_eig"] <= tol.psd_tol
        and info["free_residual"] <= tol.feas_tol
    )
    return ok, info


def check_ray(p: SdpProblem, ray, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[bool, dict]:
    """Validate a primal improving ray: PSD, ``A(ray) = 0``, objective ``< 0``."""
    xs, xf = ray
    obj = p.objective(xs, xf)
    size = max([float(np.linalg.norm(x)) for x in xs] + [float(np.linalg.norm(xf)) if xf.size else 0.0, 1e-300])
    info = {
        "objective": obj / size,
        "min_eig": min([_sym_min_eig(x) / size for x in xs] or [0.0]),
        "residual": float(np.max(np.abs(p.apply_a(xs, xf)))) / size if p.n_rows else 0.0,
    }
    ok = info["objective"] < -tol.margin_tol and info["min_eig"] >= -tol.psd_tol and info["residual"] <= tol.feas_tol
    return ok, info


def _infeasible_from_cert(p: SdpProblem, y: np.ndarray, reason: str) -> SdpSolution:
    ok, info = check_farkas(p, y)
    status = PRIMAL_INFEASIBLE if ok else MARGINAL
    return SdpSolution(status, certificate=y if ok else None, diagnostics={"reason": reason, **info})


def kkt_report(p: SdpProblem, xs, xf, y) -> dict:
    """Relative KKT residuals of a primal-dual pair (no solver state used)."""
    slack = [c - m for c, m in zip(p.c_blocks, p.adjoint_blocks(y))]
    pobj = p.objective(xs, xf)
    dobj = float(p.b @ y)
    bs = _scale(p.b)
    cs = max([_scale(c) for c in p.c_blocks] + [_scale(p.c_free)])
    return {
        "primal_residual": float(np.max(np.abs(p.apply_a(xs, xf) - p.b))) / bs if p.n_rows else 0.0,
        "dual_residual": float(np.max(np.abs(p.a_free.T @ y - p.c_free))) / cs if p.n_free else 0.0,
        "primal_min_eig": min([_sym_min_eig(x) / _scale(x) for x in xs] or [0.0]),
        "dual_min_eig": min([_sym_min_eig(s) / _scale(s) for s in slack] or [0.0]),
        "primal_obj": pobj,
        "dual_obj": dobj,
        "gap": abs(pobj - dobj),
        "rel_gap": abs(pobj - dobj) / (1 + abs(pobj)),
        "slack": slack,
    }


# ---------------------------------------------------------------------------
# solve


def _cvx_options(tol: Tolerances, level: float) -> dict:
    t = min(level, tol.gap_tol * 0.1, tol.feas_tol * 0.1) if level <= 1e-9 else level
    return {
        "show_progress": False,
        "maxiters": int(tol.max_iters),
        "abstol": t,
        "reltol": t,
        "feastol": t,
        "refinement": 2,
    }


# backend tolerance ladder, tried in order when the backend stalls
_LEVELS = (1e-9, 1e-8, 1e-7)


def _usable(res) -> bool:
    """A stalled run whose own residual estimates are already small."""
    vals = [res.get(k) for k in ("primal infeasibility", "dual infeasibility", "relative gap")]
    vals = [v for v in vals if v is not None]
    return bool(vals) and max(abs(v) for v in vals) <= _LOOSE


def solve(p: SdpProblem, opts: Tolerances | None = None) -> SdpSolution:
    """Solve a standard-form SDP.

    Args:
        p: the problem.
        opts: tolerances and iteration cap.

    Returns:
        An :class:`SdpSolution`. ``Optimal`` is reported only when the KKT
        residuals recomputed from the returned point meet ``opts``; otherwise
        the status degrades to ``Marginal`` or ``NumericFailure``.
    """
    tol = opts or DEFAULT_TOLERANCES
    red, early = _presolve(p, tol)
    if early is not None:
        return early

    dims_l = [j for j, n in enumerate(p.block_dims) if n == 1]
    dims_s = [j for j, n in enumerate(p.block_dims) if n > 1]
    order = dims_l + dims_s
    nt = {j: p.block_dims[j] * (p.block_dims[j] + 1) // 2 for j in order}
    offs, pos = {}, 0
    for j in range(len(p.block_dims)):
        offs[j] = pos
        pos += p.block_dims[j] * (p.block_dims[j] + 1) // 2
    nblk = pos
    nz = red.free_map.shape[1]
    nx = nblk + nz

    c = np.concatenate([_svec_rows(cb[None])[0] for cb in p.c_blocks] + [p.c_free @ red.free_map])
    # G maps x to minus the stacked cone entries ('l' scalars, then full 's' blocks column-major)
    gi, gj, gv = [], [], []
    row = 0
    for j in dims_l:
        gi.append(int(row))
        gj.append(int(offs[j]))
        gv.append(-1.0)
        row += 1
    for j in dims_s:
        n = p.block_dims[j]
        ia, ib = _tri(n)
        for k, (a_, b_) in enumerate(zip(ia, ib)):
            gi.append(int(row + a_ + b_ * n))
            gj.append(int(offs[j] + k))
            gv.append(-1.0)
            if a_ != b_:
                gi.append(int(row + b_ + a_ * n))
                gj.append(int(offs[j] + k))
                gv.append(-1.0)
        row += n * n
    g = cvxopt.spmatrix(gv, gi, gj, (int(row), int(nx)))
    h = cvxopt.matrix(np.zeros(row))
    dims = {"l": len(dims_l), "q": [], "s": [p.block_dims[j] for j in dims_s]}
    a_mat = np.hstack([red.a_svec, red.a_free])
    kwargs = {}
    if a_mat.shape[0]:
        kwargs = {"A": cvxopt.matrix(a_mat), "b": cvxopt.matrix(red.b)}
    else:
        kwargs = {"A": cvxopt.spmatrix([], [], [], (0, nx)), "b": cvxopt.matrix(np.zeros(0), (0, 1))}
    res, errors = None, []
    for level in _LEVELS:
        try:
            res = cvxopt.solvers.conelp(cvxopt.matrix(c), g, h, dims, options=_cvx_options(tol, level), **kwargs)
        except (ArithmeticError, ValueError) as exc:
            errors.append(str(exc))
            res = None
            continue
        if res["status"] != "unknown" or _usable(res):
            break
    if res is None:
        return SdpSolution(NUMERIC_FAILURE, diagnostics={"error": "; ".join(errors)})

    def blocks_from(xv):
        xv = np.array(xv).reshape(-1)
        xs = [_unsvec(xv[offs[j] : offs[j] + nt[j]], p.block_dims[j]) for j in range(len(p.block_dims))]
        xf = red.free_map @ xv[nblk:] if p.n_free else np.zeros(0)
        return xs, xf

    def y_from(yv):
        y = np.zeros(p.n_rows)
        if yv is not None and red.rows.size:
            y[red.rows] = -np.array(yv).reshape(-1) * red.row_scale
        return y

    status = res["status"]
    diag = {"backend_status": status, "iterations": res.get("iterations")}
    if status == "primal infeasible":
        y = y_from(res["y"])
        ok, info = check_farkas(p, y, tol)
        diag.update(info)
        if ok:
            return SdpSolution(PRIMAL_INFEASIBLE, certificate=y, diagnostics=diag)
        return SdpSolution(MARGINAL, diagnostics=diag)
    if status == "dual infeasible":
        ray = blocks_from(res["x"])
        ok, info = check_ray(p, ray, tol)
        diag.update(info)
        if ok:
            return SdpSolution(DUAL_INFEASIBLE, certificate=ray, diagnostics=diag)
        return SdpSolution(MARGINAL, diagnostics=diag)
    if res["x"] is None or res["y"] is None:
        return SdpSolution(NUMERIC_FAILURE, diagnostics=diag)

    xs, xf = blocks_from(res["x"])
    y = y_from(res["y"])
    rep = kkt_report(p, xs, xf, y)
    slack = rep.pop("slack")
    diag.update(rep)
    good = (
        rep["primal_residual"] <= tol.feas_tol
        and rep["dual_residual"] <= tol.feas_tol
        and rep["primal_min_eig"] >= -tol.psd_tol
        and rep["dual_min_eig"] >= -tol.psd_tol
        and rep["rel_gap"] <= tol.gap_tol
    )
    loose = max(rep["primal_residual"], rep["dual_residual"], rep["rel_gap"], -rep["primal_min_eig"], -rep["dual_min_eig"])
    if good:
        st = OPTIMAL
    elif loose <= _LOOSE or status == "optimal":
        st = MARGINAL
    else:
        st = NUMERIC_FAILURE
    return SdpSolution(
        st,
        primal=(xs, xf),
        dual=(y, slack),
        primal_obj=rep["primal_obj"],
        dual_obj=rep["dual_obj"],
        gap=rep["gap"],
        diagnostics=diag,
    )


# ---------------------------------------------------------------------------
# feasibility


def _sym_basis_rows(n: int):
    """Unit functionals picking the lower-triangle entries of an n×n block."""
    ia, ib = _tri(n)
    out = np.zeros((ia.size, n, n))
    for k, (a_, b_) in enumerate(zip(ia, ib)):
        out[k, a_, b_] = out[k, b_, a_] = 0.5 if a_ != b_ else 1.0
    return out


def _farkas_problem(p: SdpProblem) -> SdpProblem:
    """max b.y  s.t.  S_j = -A_j*(y) PSD,  A_free^T y = 0,  sum tr S_j <= 1."""
    m = p.n_rows
    nb = len(p.block_dims)
    blocks = list(p.block_dims) + [1]
    row_blocks = [[] for _ in range(nb + 1)]
    row_free, rhs = [], []
    for j, n in enumerate(p.block_dims):
        unit = _sym_basis_rows(n)
        for u in unit:
            for jj in range(nb + 1):
                row_blocks[jj].append(u if jj == j else np.zeros((blocks[jj], blocks[jj])))
            row_free.append(np.einsum("kab,ab->k", p.a_blocks[j], u))
            rhs.append(0.0)
    for f in range(p.n_free):
        for jj in range(nb + 1):
            row_blocks[jj].append(np.zeros((blocks[jj], blocks[jj])))
        row_free.append(p.a_free[:, f])
        rhs.append(0.0)
    for jj in range(nb + 1):
        row_blocks[jj].append(np.eye(blocks[jj]))
    row_free.append(np.zeros(m))
    rhs.append(1.0)
    return SdpProblem(
        blocks,
        m,
        [np.zeros((n, n)) for n in blocks],
        -p.b,
        [np.array(rb) for rb in row_blocks],
        np.array(row_free),
        np.array(rhs),
    )


def _residual_problem(p: SdpProblem, bound: float) -> SdpProblem:
    """min sum |A(X) - b|  s.t.  X PSD,  sum tr X_j <= bound."""
    m = p.n_rows
    blocks = list(p.block_dims) + [1] * (2 * m + 1)
    a_blocks = [np.concatenate([ab, np.eye(n)[None]], axis=0) for ab, n in zip(p.a_blocks, p.block_dims)]
    for k in range(m):
        for sign in (-1.0, 1.0):
            col = np.zeros((m + 1, 1, 1))
            col[k] = sign
            a_blocks.append(col)
    last = np.zeros((m + 1, 1, 1))
    last[m] = 1.0
    a_blocks.append(last)
    c_blocks = [np.zeros((n, n)) for n in p.block_dims] + [np.ones((1, 1))] * (2 * m) + [np.zeros((1, 1))]
    return SdpProblem(
        blocks,
        p.n_free,
        c_blocks,
        np.zeros(p.n_free),
        a_blocks,
        np.vstack([p.a_free, np.zeros((1, p.n_free))]),
        np.concatenate([p.b, [bound]]),
    )


def polish(p: SdpProblem, xs, xf):
    """Smallest Frobenius correction that restores the equality rows exactly."""
    r = p.apply_a(xs, xf) - p.b
    if not p.n_rows or not np.any(r):
        return xs, xf
    gram = p.a_free @ p.a_free.T if p.n_free else np.zeros((p.n_rows, p.n_rows))
    for ab in p.a_blocks:
        flat = ab.reshape(p.n_rows, -1)
        gram = gram + flat @ flat.T
    mu = np.linalg.lstsq(gram, -r, rcond=1e-12)[0]
    xs2 = [x + m for x, m in zip(xs, p.adjoint_blocks(mu))]
    xf2 = xf + p.a_free.T @ mu if p.n_free else xf
    return xs2, xf2


def check_point(p: SdpProblem, xs, xf, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[bool, dict]:
    res = float(np.max(np.abs(p.apply_a(xs, xf) - p.b))) if p.n_rows else 0.0
    info = {
        "residual": res,
        "min_eig": min([_sym_min_eig(x) for x in xs] or [0.0]),
    }
    scale = max([_scale(x) for x in xs] + [1.0])
    ok = res <= tol.feas_tol * (1 + float(np.max(np.abs(p.b), initial=0))) and info["min_eig"] >= -tol.psd_tol * scale
    return ok, info


def feasibility(p: SdpProblem, opts: Tolerances | None = None, trace_bound: float | None = None) -> FeasibilityResult:
    """Decide whether the constraint set of ``p`` (objective ignored) is nonempty.

    Three phases: presolve consistency, a trace-normalized Farkas problem that
    looks for a separating certificate, and a trace-bounded least-residual
    problem that looks for a point. When neither side validates the result is
    ``Marginal``; in particular weakly infeasible systems land there.

    Args:
        p: the constraint system.
        opts: tolerances.
        trace_bound: cap on the total trace of the PSD blocks in the residual
            phase; default ``100 * max(1, ||b||_1)``.
    """
    tol = opts or DEFAULT_TOLERANCES
    diag: dict = {}
    red, early = _presolve(p, tol)
    if early is not None:
        if early.status == PRIMAL_INFEASIBLE:
            return FeasibilityResult(INFEASIBLE, certificate=early.certificate, diagnostics=early.diagnostics)
        diag["presolve"] = early.diagnostics

    if p.n_rows:
        fk = solve(_farkas_problem(p), tol)
        diag["farkas_status"] = fk.status
        if fk.primal is not None:
            y = fk.primal[1]
            diag["farkas_value"] = float(p.b @ y)
            ok, info = check_farkas(p, y, tol)
            diag["farkas_check"] = info
            if ok and float(p.b @ y) > tol.margin_tol:
                return FeasibilityResult(INFEASIBLE, certificate=y, diagnostics=diag)

    bound = trace_bound if trace_bound is not None else 1e2 * max(1.0, float(np.sum(np.abs(p.b))))
    rp = solve(_residual_problem(p, bound), tol)
    diag["residual_status"] = rp.status
    if rp.primal is None:
        if rp.status == NUMERIC_FAILURE:
            diag["note"] = "residual phase failed"
        return FeasibilityResult(MARGINAL, diagnostics=diag)
    nb = len(p.block_dims)
    xs, xf = rp.primal[0][:nb], rp.primal[1]
    diag["min_residual"] = float(rp.primal_obj)
    if rp.primal_obj <= tol.feas_tol * (1 + float(np.max(np.abs(p.b), initial=0))):
        xs2, xf2 = polish(p, xs, xf)
        ok, info = check_point(p, xs2, xf2, tol)
        diag["point_check"] = info
        if ok:
            return FeasibilityResult(FEASIBLE, point=(xs2, xf2), diagnostics=diag)
    return FeasibilityResult(MARGINAL, point=(xs, xf), diagnostics=diag)
