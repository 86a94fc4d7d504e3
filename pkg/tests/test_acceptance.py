"""End-to-end acceptance checks, one test per criterion.

Each criterion is computed once (cached) so that the certificate recheck can
reuse every certificate produced by the others. A PASS/FAIL line per
criterion is printed and also collected for the terminal summary.
"""

import functools
import time

import numpy as np
import pytest

from conftest import apply_kraus, random_channel_kraus, random_density, random_hermitian, random_pair_instance
from cpext import linalg as la
from cpext.aucrit import (
    HOLDS,
    VALID,
    AuInstance,
    shipped_witness_package,
    au_condition,
    construct_qubit_channel,
    transposed_qutrit_instance,
    fidelity_criterion,
    transpose_counterexample_search,
    verify_au_witness,
)
from cpext.classical import (
    POSITIVE,
    commuting_domain_extension,
    commuting_domain_positive,
    polytope_extremes,
)
from cpext.cli import au_certificate, recheck_certificate, witness_certificate
from cpext.cpcheck import (
    CP,
    EXISTS,
    NOT_CP,
    NOT_EXISTS,
    delta_sdp,
    exact_cp_extension,
    gamma_sdp,
    preprocess,
    unboundedness_diagnostic,
    validate_witness,
)
from cpext.extend import (
    channel_extension,
    cptp_delta,
    hilbert_metric_check,
    minimal_unital_scale,
    probabilistic_maximin,
    validate_channel,
)
from cpext.fixtures import (
    diag_sigma_x_pairs,
    expansion_pairs,
    four_level_commuting_pairs,
    no_extension_pairs,
    pauli_cycle_pairs,
    pauli_swap_pairs,
    three_level_commuting_pairs,
    unequal_probability_pairs,
)
from cpext.solver import MARGINAL, OPTIMAL

I2 = np.eye(2)
RESULTS = {}


class Outcome:
    def __init__(self, number, checks, detail, certs, seconds):
        self.number = number
        self.checks = checks
        self.detail = detail
        self.certs = certs
        self.seconds = seconds

    @property
    def passed(self):
        return all(self.checks.values())

    def line(self):
        failed = [k for k, v in self.checks.items() if not v]
        tag = "PASS" if self.passed else "FAIL"
        extra = f" failed: {', '.join(failed)}" if failed else ""
        return f"criterion {self.number:>2} {tag} ({self.seconds:.1f}s) {self.detail}{extra}"


def criterion(number):
    def wrap(fn):
        @functools.cache
        def run():
            t0 = time.perf_counter()
            checks, detail, certs = fn()
            out = Outcome(number, checks, detail, certs, time.perf_counter() - t0)
            RESULTS[number] = out.line()
            print(out.line())
            return out

        return run

    return wrap


def _witness_cert(spec, w):
    return witness_certificate(spec, w)


# ---------------------------------------------------------------------------


@criterion(1)
def duality():
    rng = np.random.default_rng(101)
    worst, certs = 0.0, []
    for _ in range(100):
        d, dp = (int(v) for v in rng.choice([2, 3], size=2))
        n = int(rng.integers(1, 5))
        pairs = [(random_hermitian(d, rng), random_hermitian(dp, rng)) for _ in range(n)]
        spec = preprocess(pairs)
        g, dl = gamma_sdp(spec), delta_sdp(spec)
        worst = max(worst, abs(dl.delta + g.gamma) / (1 + abs(dl.delta)))
        if g.status == NOT_CP:
            certs.append(_witness_cert(spec, g.witness))
    checks = {"duality": worst <= 1e-6}
    return checks, f"max |delta+gamma|/(1+|delta|) = {worst:.2e}", certs


@criterion(2)
def cp_without_extension():
    certs = []
    g23 = gamma_sdp(preprocess(diag_sigma_x_pairs()))
    spec = preprocess(no_extension_pairs())
    g = gamma_sdp(spec)
    dl = delta_sdp(spec)
    ext = exact_cp_extension(spec)
    tp = cptp_delta(spec)
    if ext.status == NOT_EXISTS:
        certs.append(_witness_cert(spec, ext.certificate))
    if tp.witness is not None:
        certs.append(_witness_cert(spec, tp.witness))
    checks = {
        "gamma CP": g.status == CP and -1e-7 <= g.gamma <= 0 and g23.status == CP and -1e-7 <= g23.gamma <= 0,
        "delta": dl.delta <= 1e-6,
        "no Exists": ext.status != EXISTS,
        "tp score": tp.delta_tp > 1e-6,
    }
    return checks, f"gamma = {g.gamma:.1e}, delta = {dl.delta:.1e}, extension {ext.status}, delta_tp = {tp.delta_tp:.4f}", certs


@criterion(3)
def unboundedness():
    series, _ = unboundedness_diagnostic(preprocess(no_extension_pairs()), (1e-1, 1e-2, 1e-3))
    norms = [pt.norm for pt in series]
    checks = {"growth": norms[-1] >= 10 * norms[0]}
    return checks, "series " + ", ".join(f"{v:.3g}" for v in norms), []


@criterion(4)
def unital_scales():
    s12 = minimal_unital_scale(preprocess(pauli_swap_pairs()))
    s123 = minimal_unital_scale(preprocess(pauli_cycle_pairs()))
    spec123 = preprocess(pauli_cycle_pairs() + [(I2, I2)])
    spec12 = preprocess(pauli_swap_pairs() + [(I2, I2)])
    e123 = channel_extension(spec123)
    e12 = channel_extension(spec12)
    rank_ok = False
    if e123.status == EXISTS:
        w = np.sort(np.linalg.eigvalsh(e123.choi.matrix))[::-1]
        rank_ok = w[1] <= 1e-6
    wit_ok = e12.status == NOT_EXISTS and validate_witness(spec12, e12.certificate)[0]
    certs = [_witness_cert(spec12, e12.certificate)] if e12.status == NOT_EXISTS else []
    checks = {
        "c*(12) = 3": s12.c_star is not None and abs(s12.c_star - 3) <= 1e-4,
        "c*(123) = 1": s123.c_star is not None and abs(s123.c_star - 1) <= 1e-4,
        "cycle rank one": e123.status == EXISTS and rank_ok,
        "swap witness": wit_ok,
    }
    return checks, f"c* = {s12.c_star:.6f}, {s123.c_star:.6f}", certs


@criterion(5)
def expansion_example():
    pairs, _ = expansion_pairs(14 / 15)
    spec = preprocess(pairs)
    g = gamma_sdp(spec)
    ext = exact_cp_extension(spec)
    ch = channel_extension(spec)
    factor = la.trace_norm(pairs[1][1]) / la.trace_norm(pairs[1][0])
    choi_factor = la.trace_norm(ext.choi.apply(la.PAULI_Y)) / 2 if ext.choi is not None else float("nan")
    certs = [_witness_cert(spec, ch.certificate)] if ch.status == NOT_EXISTS else []
    checks = {
        "CP": g.status == CP,
        "extension": ext.status == EXISTS,
        "no channel": ch.status == NOT_EXISTS,
        "factor": abs(factor - np.sqrt(1044 / 900)) <= 1e-9,
        "choi factor": abs(choi_factor - np.sqrt(1044 / 900)) <= 1e-7,
    }
    return checks, f"factor = {factor:.12f}, from extension {choi_factor:.10f}", certs


@criterion(6)
def probabilistic_example():
    pairs = unequal_probability_pairs()
    r = probabilistic_maximin(pairs)
    eq = probabilistic_maximin(pairs, equal=True)
    (r1, q1), (r2, q2) = pairs
    h = hilbert_metric_check(r1, r2, q1, q2)
    checks = {
        "maximin": r.value >= 3 / 5 - 1e-6,
        "equal variant": eq.value <= 1e-6,
        "hilbert": h.status == EXISTS and abs(h.lhs - 2) <= 1e-9 and abs(h.rhs - 2) <= 1e-9,
    }
    return checks, f"value = {r.value:.6f}, equal = {eq.value:.1e}, lhs = {h.lhs:.12f}, rhs = {h.rhs:.12f}", []


@criterion(7)
def hilbert_agreement():
    rng = np.random.default_rng(707)
    agree = excluded = total = 0
    for _ in range(200):
        inst = random_pair_instance(rng, 2, 2)
        h = hilbert_metric_check(inst.rho1, inst.rho2, inst.rho1p, inst.rho2p)
        m = probabilistic_maximin(inst.pairs)
        total += 1
        # equality of the products is decided (it admits an operation), not marginal
        band = abs(min(m.probs) - 1e-6) <= 1e-7
        if h.marginal_support or band or m.status != OPTIMAL:
            excluded += 1
            continue
        agree += (h.status == EXISTS) == (min(m.probs) > 1e-6)
    decided = total - excluded
    checks = {"agreement": agree == decided, "exclusions": excluded <= 0.02 * total}
    return checks, f"{agree}/{decided} agree, {excluded} excluded", []


@criterion(8)
def commuting_fixtures():
    ok_guaranteed = True
    rng = np.random.default_rng(808)
    # guaranteed cases: qubit with trace preservation, qutrit without, rank one
    ks = random_channel_kraus(2, 2, rng)
    r1, r2 = np.diag([0.8, 0.2]).astype(complex), np.diag([0.1, 0.9]).astype(complex)
    cases = [
        ([(r1, apply_kraus(ks, r1)), (r2, apply_kraus(ks, r2))], True),
        ([(np.diag([0.3, 0.7, 0]).astype(complex), la.proj(np.array([1, 0]))), (np.diag([0.6, 0, 0.4]).astype(complex), I2 / 2)], False),
        ([(np.diag([0.2, 0.8]).astype(complex), la.proj(np.array([1, 1j]) / np.sqrt(2)))], True),
    ]
    for pairs, tp in cases:
        ext = commuting_domain_extension(pairs, trace_preserving=tp)
        spec = preprocess(pairs)
        if ext.status != EXISTS:
            ok_guaranteed = False
        elif tp:
            ok_guaranteed &= validate_channel(spec, ext.choi, atol=1e-9)[0]
        else:
            ok_guaranteed &= la.min_eig(ext.choi.matrix) >= -1e-9 and all(
                np.max(np.abs(ext.choi.apply(x) - y)) <= 1e-9 for x, y in spec.pairs
            )
    certs = []
    pa, pb = four_level_commuting_pairs(), three_level_commuting_pairs()
    va = [np.real(np.diag(x)) for x, _ in pa]
    vb = [np.real(np.diag(x)) for x, _ in pb]
    ea = polytope_extremes(va).extremes
    eb = polytope_extremes(vb).extremes

    def same(a, b):
        return len(a) == len(b) and all(any(np.max(np.abs(x - y)) <= 1e-12 for y in b) for x in a)

    xa = commuting_domain_extension(pa)
    xb = commuting_domain_extension(pb, trace_preserving=True)
    for pairs, x in ((pa, xa), (pb, xb)):
        if x.status == NOT_EXISTS:
            certs.append(_witness_cert(preprocess(pairs), x.certificate))
    tp_b = cptp_delta(preprocess(pb))
    if tp_b.witness is not None:
        certs.append(_witness_cert(preprocess(pb), tp_b.witness))
    checks = {
        "guaranteed cases": bool(ok_guaranteed),
        "extremes (a)": same(ea, va + [va[0] + va[2] - va[1]]),
        "extremes (b)": same(eb, vb),
        "positive": commuting_domain_positive(pa).status == POSITIVE and commuting_domain_positive(pb).status == POSITIVE,
        "SDP NotExists": xa.status == NOT_EXISTS and xb.status == NOT_EXISTS,
        "tp score (b)": tp_b.delta_tp > 1e-6,
    }
    return checks, f"|extremes| = {len(ea)}, {len(eb)}; delta_tp(b) = {tp_b.delta_tp:.4f}", certs


@criterion(9)
def trace_norm_equivalence():
    rng = np.random.default_rng(909)
    mismatch = marginal = 0
    certs = []
    for _ in range(500):
        inst = random_pair_instance(rng, 2, 2)
        spec = inst.spec()
        ch = channel_extension(spec)
        au = au_condition(inst)
        if MARGINAL in (ch.status, au.status):
            marginal += 1
            continue
        if ch.status == NOT_EXISTS:
            certs.append(_witness_cert(spec, ch.certificate))
        mismatch += (au.status == HOLDS) != (ch.status == EXISTS)
    checks = {"agreement": mismatch == 0, "marginal rate": marginal < 0.02 * 500}
    return checks, f"{mismatch} mismatches, {marginal} marginal of 500", certs


@criterion(10)
def fidelity_equivalence():
    rng = np.random.default_rng(1010)
    mismatch = marginal = built = bad_build = 0
    certs = []
    for _ in range(500):
        inst = random_pair_instance(rng, 2, int(rng.integers(2, 4)))
        spec = inst.spec()
        ch = channel_extension(spec)
        fc = fidelity_criterion(inst)
        if ch.status == MARGINAL:
            marginal += 1
            continue
        if ch.status == NOT_EXISTS:
            certs.append(_witness_cert(spec, ch.certificate))
        mismatch += fc.status != ch.status
        if fc.status == EXISTS:
            c = construct_qubit_channel(inst)
            built += 1
            ok = (
                max(np.max(np.abs(c.apply(x) - y)) for x, y in inst.pairs) <= 1e-8
                and np.max(np.abs(c.tr_out() - I2)) <= 1e-8
                and la.min_eig(c.matrix) >= -1e-9
            )
            bad_build += not ok
    checks = {"agreement": mismatch == 0, "marginal rate": marginal < 0.02 * 500, "constructions": bad_build == 0}
    return checks, f"{mismatch} mismatches, {marginal} marginal, {built} channels built ({bad_build} invalid)", certs


@criterion(11)
def transposed_qutrits():
    inst, pkg = transposed_qutrit_instance(), shipped_witness_package()
    au = au_condition(inst)
    chk = verify_au_witness(inst, pkg, eps_values=[0.1, 0.35, 0.69])
    spec = inst.spec()
    tp = cptp_delta(spec)
    certs = [au_certificate(inst, pkg, chk.objective, chk.min_eig)]
    if tp.witness is not None:
        certs.append(_witness_cert(spec, tp.witness))
    for e in (0.1, 0.35, 0.69):
        shifted = type(pkg)(pkg.H0 + e * np.eye(3), pkg.H1, pkg.H2, pkg.objective_bound)
        certs.append(au_certificate(inst, shifted, float("nan"), float("nan")))
    checks = {
        "holds": au.status == HOLDS,
        "witness": chk.status == VALID and chk.objective <= -2.2 + 1e-6 and chk.min_eig >= -1e-9,
        "shifted": len(chk.eps_checks) == 3 and all(c["min_eig"] >= -1e-9 for c in chk.eps_checks),
        "tp score": tp.delta_tp > 1e-6,
    }
    return checks, f"objective = {chk.objective:.4f}, min_eig = {chk.min_eig:.4f}, delta_tp = {tp.delta_tp:.5f}", certs


@criterion(12)
def random_search():
    rep = transpose_counterexample_search(3, 100, seed=2024)
    rep2 = transpose_counterexample_search(2, 20, seed=2024)
    reverify = all(verify_au_witness(h.instance, h.package).status == VALID for h in rep.hits)
    certs = [au_certificate(h.instance, h.package, h.check.objective, h.check.min_eig) for h in rep.hits]
    checks = {"hit fraction": rep.hit_fraction >= 0.95, "reverify": reverify, "qubits empty": rep2.hits == []}
    return checks, f"hit fraction {rep.hit_fraction:.2f}, qubit hits {len(rep2.hits)}", certs


ALL = [duality, cp_without_extension, unboundedness, unital_scales, expansion_example, probabilistic_example,
       hilbert_agreement, commuting_fixtures, trace_norm_equivalence, fidelity_equivalence, transposed_qutrits, random_search]


@criterion(13)
def certificates():
    total = failed = 0
    for fn in ALL:
        for cert in fn().certs:
            total += 1
            failed += not recheck_certificate(cert)
    return {"all recheck": failed == 0 and total > 0}, f"{total - failed}/{total} certificates recheck", []


# ---------------------------------------------------------------------------


@pytest.mark.parametrize("number", range(1, 13))
def test_criterion(number):
    out = ALL[number - 1]()
    assert out.passed, out.line()


def test_criterion_13_certificates():
    out = certificates()
    assert out.passed, out.line()


if __name__ == "__main__":
    for fn in ALL + [certificates]:
        fn()
