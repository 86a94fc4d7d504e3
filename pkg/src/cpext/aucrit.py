"""Two-state criteria: trace-norm condition, qubit fidelity
criterion with an explicit channel, and certified higher-dimensional
counterexamples."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import linalg as la
from .cpcheck import EXISTS, MARGINAL, NOT_EXISTS, preprocess
from .errors import DimensionError, NumericFailure, PreconditionError
from .extend import cptp_delta
from .serialize import decode_matrix, load_data
from .solver import DEFAULT_TOLERANCES, Tolerances

HOLDS = "Holds"
FAILS = "Fails"
VALID = "Valid"
INVALID = "Invalid"

AU_TOL = 1e-8
AU_EXACT = 1e-12  # below -AU_EXACT but above -AU_TOL is Marginal
GRID = 512


@dataclass
class AuInstance:
    rho1: np.ndarray
    rho2: np.ndarray
    rho1p: np.ndarray
    rho2p: np.ndarray

    def __post_init__(self):
        for name in ("rho1", "rho2", "rho1p", "rho2p"):
            m = la.as_matrix(getattr(self, name))
            if not la.is_density(m):
                raise la.NotPSDError(f"{name} is not a density matrix")
            setattr(self, name, la.hermitize(m))
        if self.rho1.shape != self.rho2.shape or self.rho1p.shape != self.rho2p.shape:
            raise DimensionError("states on the same side must share a dimension")

    @property
    def d(self) -> int:
        return self.rho1.shape[0]

    @property
    def dp(self) -> int:
        return self.rho1p.shape[0]

    @property
    def pairs(self):
        return [(self.rho1, self.rho1p), (self.rho2, self.rho2p)]

    def spec(self):
        return preprocess(self.pairs)


@dataclass
class AuWitnessPackage:
    H0: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    objective_bound: float
    eps_range: tuple | None = None


# ---------------------------------------------------------------------------
# trace-norm condition


@dataclass
class AuResult:
    status: str  # Holds / Fails / Marginal
    min_value: float
    p: float
    t: float
    diagnostics: dict = field(default_factory=dict)


def _f(inst: AuInstance, p: float) -> float:
    return la.trace_norm(p * inst.rho1 - (1 - p) * inst.rho2) - la.trace_norm(p * inst.rho1p - (1 - p) * inst.rho2p)


def _breakpoints(a, b) -> list:
    """Values of p at which ``p a - (1-p) b`` changes rank."""
    out = []
    for lam in la.gen_eigvals(a, b):  # a v = lam b v  ->  p = 1/(1+lam)
        if lam >= 0:
            out.append(1.0 / (1.0 + lam))
    for lam in la.gen_eigvals(b, a):
        if lam >= 0:
            out.append(lam / (1.0 + lam))
    return out


def au_condition(inst: AuInstance, au_tol: float = AU_TOL, grid: int = GRID) -> AuResult:
    """Evaluate ``min_p f(p)`` with ``f(p) = ||p r1 - (1-p) r2||_1 - ||p r1' - (1-p) r2'||_1``.

    The grid is refined at every rank change of either pencil and around the
    lowest samples by a bounded scalar minimization.
    """
    pts = set(np.linspace(0.0, 1.0, grid).tolist())
    pts.update(_breakpoints(inst.rho1, inst.rho2))
    pts.update(_breakpoints(inst.rho1p, inst.rho2p))
    ps = np.array(sorted(p for p in pts if 0.0 <= p <= 1.0))
    fs = np.array([_f(inst, p) for p in ps])
    best_p, best_f = float(ps[np.argmin(fs)]), float(fs.min())
    for k in np.argsort(fs)[:6]:
        lo, hi = ps[max(k - 1, 0)], ps[min(k + 1, len(ps) - 1)]
        if hi <= lo:
            continue
        r = minimize_scalar(lambda p: _f(inst, p), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if r.fun < best_f:
            best_p, best_f = float(r.x), float(r.fun)
    t = best_p / (1 - best_p) if best_p < 1 else float("inf")
    diag = {"n_points": int(ps.size)}
    if best_f < -au_tol:
        return AuResult(FAILS, best_f, best_p, t, diag)
    if best_f < -AU_EXACT:
        return AuResult(MARGINAL, best_f, best_p, t, diag)
    return AuResult(HOLDS, best_f, best_p, t, diag)


# ---------------------------------------------------------------------------
# fidelity criterion and the qubit construction


@dataclass
class FidelityResult:
    status: str  # Exists / NotExists
    a: float
    b: float
    failed: str | None = None  # which condition failed
    slacks: dict = field(default_factory=dict)


def _require_qubit_domain(inst: AuInstance):
    if inst.d > 2:
        raise PreconditionError("the fidelity criterion is only sufficient for input dimension <= 2")


def fidelity_criterion(inst: AuInstance, tol: Tolerances | None = None) -> FidelityResult:
    """Decide channel existence for two input states of dimension at most two.

    With ``a = inf(r1/r2)`` and ``b = inf(r2/r1)`` a channel exists iff
    ``r1' - a r2'`` and ``r2' - b r1'`` are PSD and the fidelity of this
    pair is at least that of ``r1 - a r2`` and ``r2 - b r1``.
    """
    tol = tol or DEFAULT_TOLERANCES
    _require_qubit_domain(inst)
    a = la.inf_ratio(inst.rho1, inst.rho2)
    b = la.inf_ratio(inst.rho2, inst.rho1)
    ap = inst.rho1p - a * inst.rho2p
    bp = inst.rho2p - b * inst.rho1p
    slacks = {"psd_first": la.min_eig(ap), "psd_second": la.min_eig(bp)}
    if slacks["psd_first"] < -tol.psd_tol:
        return FidelityResult(NOT_EXISTS, a, b, "psd_first", slacks)
    if slacks["psd_second"] < -tol.psd_tol:
        return FidelityResult(NOT_EXISTS, a, b, "psd_second", slacks)
    f_out = la.fidelity(_clip(ap), _clip(bp))
    f_in = la.fidelity(_clip(inst.rho1 - a * inst.rho2), _clip(inst.rho2 - b * inst.rho1))
    slacks["fidelity"] = f_out - f_in
    if f_out < f_in - 1e-9:
        return FidelityResult(NOT_EXISTS, a, b, "fidelity", slacks)
    return FidelityResult(EXISTS, a, b, None, slacks)


def _clip(m: np.ndarray) -> np.ndarray:
    w, v = la.eigh(m)
    return (v * np.clip(w, 0, None)) @ v.conj().T


def _top_vector(m: np.ndarray) -> np.ndarray:
    w, v = la.eigh(m)
    return v[:, -1]


def _validate_channel_on(inst: AuInstance, c: la.ChoiMatrix) -> dict:
    err = max(float(np.max(np.abs(c.apply(x) - y))) for x, y in inst.pairs)
    tp = float(np.max(np.abs(c.tr_out() - np.eye(inst.d))))
    return {"pairs": err, "trace": tp, "min_eig": c.min_eig()}


def construct_qubit_channel(inst: AuInstance, tol: Tolerances | None = None) -> la.ChoiMatrix:
    """Explicit channel for an instance that passes :func:`fidelity_criterion`.

    A Stinespring isometry maps the two pure states hidden in the inputs
    onto purifications of the corresponding output parts, tensored with
    two-dimensional auxiliary states that absorb the leftover overlap.

    Raises:
        PreconditionError: the criterion does not hold.
        NumericFailure: the constructed channel does not validate.
    """
    tol = tol or DEFAULT_TOLERANCES
    crit = fidelity_criterion(inst, tol)
    if crit.status != EXISTS:
        raise PreconditionError(f"criterion not satisfied ({crit.failed})")
    d, dp = inst.d, inst.dp
    if d == 1 or np.max(np.abs(inst.rho1 - inst.rho2)) <= 1e-12:
        c = la.ChoiMatrix(np.kron(inst.rho1p, np.eye(d)), d, dp)
    else:
        a, b = crit.a, crit.b
        psi1 = _top_vector(inst.rho1 - a * inst.rho2)
        psi2 = _top_vector(inst.rho2 - b * inst.rho1)
        ov = np.vdot(psi1, psi2)
        if abs(ov) > 0:
            psi2 = psi2 * np.exp(-1j * np.angle(ov))
        s = abs(ov)
        sig1 = _clip((inst.rho1p - a * inst.rho2p) / (1 - a))
        sig2 = _clip((inst.rho2p - b * inst.rho1p) / (1 - b))
        r1, r2 = la.sqrt_psd(sig1), la.sqrt_psd(sig2)
        u, sv, vh = np.linalg.svd(r1 @ r2)
        a1, a2 = r1, r2 @ (vh.conj().T @ u.conj().T)
        fid = float(np.sum(sv))
        r = 0.0 if fid <= 1e-14 else min(1.0, s / fid)
        phi1 = np.array([1.0, 0.0], dtype=complex)
        phi2 = np.array([r, np.sqrt(max(0.0, 1 - r * r))], dtype=complex)
        t1 = np.kron(a1.reshape(-1), phi1)
        t2 = np.kron(a2.reshape(-1), phi2)
        v = np.column_stack([t1, t2]) @ np.linalg.inv(np.column_stack([psi1, psi2]))
        vr = v.reshape(dp, 2 * dp, d)
        c = la.choi_from_kraus([vr[:, m, :] for m in range(2 * dp)], din=d)
    info = _validate_channel_on(inst, c)
    if info["pairs"] > 1e-8 or info["trace"] > 1e-8 or info["min_eig"] < -tol.psd_tol:
        raise NumericFailure("constructed channel failed validation", info)
    return c


# ---------------------------------------------------------------------------
# witnesses and counterexamples


@dataclass
class WitnessCheck:
    status: str  # Valid / Invalid
    objective: float
    min_eig: float
    reason: str | None = None
    eps_checks: list = field(default_factory=list)


def _witness_values(inst: AuInstance, h0, h1, h2):
    m = np.kron(h0, np.eye(inst.dp)) + np.kron(inst.rho1, h1) + np.kron(inst.rho2, h2)
    obj = np.trace(h0).real + np.trace(inst.rho1p @ h1.T).real + np.trace(inst.rho2p @ h2.T).real
    return float(obj), la.min_eig(m)


def verify_au_witness(inst: AuInstance, pkg: AuWitnessPackage, tol: Tolerances | None = None, eps_values=None) -> WitnessCheck:
    """Check a certificate that no channel maps the instance's inputs to its outputs.

    The shifted blocks ``H0 + eps*1`` are checked at ``eps_values`` or, if
    omitted, at eight points spanning ``pkg.eps_range``; each must keep
    ``M`` PSD with a value below ``-margin_tol``.
    """
    tol = tol or DEFAULT_TOLERANCES
    h0, h1, h2 = (la.as_matrix(h) for h in (pkg.H0, pkg.H1, pkg.H2))
    if h0.shape != (inst.d, inst.d) or h1.shape != (inst.dp, inst.dp) or h2.shape != (inst.dp, inst.dp):
        raise DimensionError("witness blocks do not match the instance")
    obj, me = _witness_values(inst, h0, h1, h2)
    if me < -tol.psd_tol:
        return WitnessCheck(INVALID, obj, me, "M is not PSD")
    if not pkg.objective_bound < -tol.margin_tol:
        return WitnessCheck(INVALID, obj, me, "declared bound is not negative")
    if obj > pkg.objective_bound:
        return WitnessCheck(INVALID, obj, me, "value exceeds the declared bound")
    if eps_values is None and pkg.eps_range is not None:
        lo, hi = pkg.eps_range
        eps_values = np.linspace(lo, hi, 8)
    checks = []
    for eps in eps_values if eps_values is not None else []:
        o, e = _witness_values(inst, h0 + eps * np.eye(inst.d), h1, h2)
        checks.append({"eps": float(eps), "objective": o, "min_eig": e})
        if e < -tol.psd_tol or o > -tol.margin_tol:
            return WitnessCheck(INVALID, obj, me, f"shifted variant fails at eps={eps}", checks)
    return WitnessCheck(VALID, obj, me, None, checks)


def transposed_qutrit_instance() -> AuInstance:
    r1 = np.array([[2, 1, 0], [1, 2, 1], [0, 1, 2]], dtype=complex) / 6
    r2 = np.array([[2, 1, 0], [1, 2, -1j], [0, 1j, 2]], dtype=complex) / 6
    return AuInstance(r1, r2, r1.T.copy(), r2.T.copy())


def shipped_witness_package() -> AuWitnessPackage:
    doc = load_data("qutrit_witness.json")
    return AuWitnessPackage(
        decode_matrix(doc["H0"], "$.H0"),
        decode_matrix(doc["H1"], "$.H1"),
        decode_matrix(doc["H2"], "$.H2"),
        float(doc["objective_bound"]),
        tuple(doc["eps_range"]),
    )


def unit_square_density(d: int, rng: np.random.Generator) -> np.ndarray:
    """``A A^dagger / tr`` with entries of ``A`` uniform on the complex unit square."""
    a = rng.uniform(size=(d, d)) + 1j * rng.uniform(size=(d, d))
    rho = a @ a.conj().T
    return la.hermitize(rho / np.trace(rho).real)


@dataclass
class SearchHit:
    trial: int
    instance: AuInstance
    delta_tp: float
    package: AuWitnessPackage
    check: WitnessCheck


@dataclass
class SearchReport:
    d: int
    trials: int
    seed: int
    hits: list
    deltas: list
    au_failures: list

    @property
    def hit_fraction(self) -> float:
        return len(self.hits) / self.trials


def _package_from(spec, wit) -> AuWitnessPackage | None:
    if wit is None or wit.H0 is None or len(wit.H) != 2:
        return None
    return AuWitnessPackage(wit.H0, wit.H[0], wit.H[1], float(wit.objective) + 1e-9)


def transpose_counterexample_search(d: int, trials: int, seed: int, w: float = 1.0, tol: Tolerances | None = None) -> SearchReport:
    """Sample pairs with transposed outputs and collect certified obstructions.

    Trial ``k`` draws from ``default_rng([seed, k])``, so results do not
    depend on evaluation order.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    tol = tol or DEFAULT_TOLERANCES
    hits, deltas, au_bad = [], [], []
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        r1, r2 = unit_square_density(d, rng), unit_square_density(d, rng)
        inst = AuInstance(r1, r2, r1.T.copy(), r2.T.copy())
        au = au_condition(inst)
        if au.status == FAILS:
            au_bad.append(k)
        spec = inst.spec()
        res = cptp_delta(spec, w, tol)
        deltas.append(res.delta_tp)
        if res.delta_tp <= tol.margin_tol or spec.inputs[0].shape != r1.shape:
            continue
        pkg = _package_from(spec, res.witness)
        if pkg is None:
            continue
        check = verify_au_witness(inst, pkg, tol)
        if check.status == VALID:
            hits.append(SearchHit(k, inst, res.delta_tp, pkg, check))
    return SearchReport(d, trials, seed, hits, deltas, au_bad)


def _pad(m: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=complex)
    out[: m.shape[0], : m.shape[1]] = m
    return out


def embed_counterexample(inst: AuInstance, d: int, dp: int) -> AuInstance:
    """Place the instance in the upper-left blocks of larger matrices."""
    if d < 3 or dp < 3 or d < inst.d or dp < inst.dp:
        raise DimensionError("target dimensions must be at least 3 and at least the current ones")
    return AuInstance(_pad(inst.rho1, d), _pad(inst.rho2, d), _pad(inst.rho1p, dp), _pad(inst.rho2p, dp))


def embed_witness(pkg: AuWitnessPackage, d: int, dp: int) -> AuWitnessPackage:
    """Zero-pad a witness; the shift range shrinks since ``tr(eps*1)`` grows with ``d``."""
    n = pkg.H0.shape[0]
    eps = None if pkg.eps_range is None else (pkg.eps_range[0] * n / d, pkg.eps_range[1] * n / d)
    return AuWitnessPackage(_pad(pkg.H0, d), _pad(pkg.H1, dp), _pad(pkg.H2, dp), pkg.objective_bound, eps)


def restrict(inst: AuInstance, d: int, dp: int) -> AuInstance:
    """Upper-left blocks; inverse of :func:`embed_counterexample`."""
    return AuInstance(inst.rho1[:d, :d], inst.rho2[:d, :d], inst.rho1p[:dp, :dp], inst.rho2p[:dp, :dp])
