import numpy as np
import pytest

from conftest import apply_kraus, random_channel_kraus, random_density
from cpext import linalg as la
from cpext.cpcheck import EXISTS, NOT_EXISTS, preprocess, validate_witness
from cpext.extend import (
    SUPPORT_INCOMPATIBLE,
    channel_extension,
    cptp_delta,
    hilbert_metric_check,
    minimal_unital_scale,
    probabilistic_maximin,
    probabilistic_weighted,
    trace_mismatch_witness,
    validate_channel,
)
from cpext.fixtures import expansion_factor, expansion_pairs, pauli_cycle_pairs, pauli_swap_pairs, unequal_probability_pairs
from cpext.solver import INFEASIBLE

X, Y, Z = la.PAULI_X, la.PAULI_Y, la.PAULI_Z
I2 = np.eye(2)
PSI0 = np.diag([1.0, 0.0])
PSI1 = np.diag([0.0, 1.0])


def _units(d):
    out = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1
            out.append((e, e))
    return out


def test_identity_spec_has_zero_tp_score():
    r = cptp_delta(preprocess(_units(2)))
    assert r.delta_tp == pytest.approx(0, abs=1e-6)
    assert np.allclose(r.best_choi.matrix, la.omega(2), atol=1e-5)


def test_expansion_example_tp_score_positive():
    spec = preprocess(expansion_pairs()[0])
    r = cptp_delta(spec)
    assert r.delta_tp > 1e-6
    assert abs(r.delta_tp + r.gamma_tp) <= 1e-6 * (1 + r.delta_tp)
    ok, _ = validate_witness(spec, r.witness)
    assert ok


def test_expansion_factor_formula():
    p = 14 / 15
    assert expansion_factor(p) == pytest.approx(np.sqrt((9 * p**2 + 3 * p - 6) / 4), abs=1e-12)
    assert expansion_factor(p) == pytest.approx(np.sqrt(1044 / 900), abs=1e-9)


def test_tp_score_nondecreasing_in_w():
    spec = preprocess(expansion_pairs()[0])
    vals = [cptp_delta(spec, w).delta_tp for w in (0.01, 0.1, 1.0, 10.0, 100.0)]
    assert all(b >= a - 1e-7 for a, b in zip(vals, vals[1:]))


def test_large_w_matches_hard_constraint():
    # trace-matching data with no channel: a large penalty recovers the hard-constraint score
    spec = preprocess(expansion_pairs()[0])
    hard = cptp_delta(spec.with_trace_preservation(), 100.0)
    for w in (10.0, 100.0):
        soft = cptp_delta(spec, w)
        assert soft.delta_tp <= hard.delta_tp + 1e-6
    assert cptp_delta(spec, 100.0).delta_tp == pytest.approx(hard.delta_tp, abs=1e-5)


def test_tp_score_attained_when_zero(rng):
    ks = random_channel_kraus(2, 2, rng)
    pairs = [(r, apply_kraus(ks, r)) for r in (random_density(2, rng), random_density(2, rng))]
    spec = preprocess(pairs)
    r = cptp_delta(spec)
    assert r.delta_tp <= 1e-7
    for x, y in spec.pairs:
        assert np.max(np.abs(r.best_choi.apply(x) - y)) <= 1e-6


def test_cycle_has_unitary_channel():
    out = channel_extension(preprocess(pauli_cycle_pairs() + [(I2, I2)]))
    assert out.status == EXISTS
    w = np.sort(np.linalg.eigvalsh(out.choi.matrix))[::-1]
    assert w[1] <= 1e-6
    u = (I2 - 1j * X - 1j * Y - 1j * Z) / 2
    assert np.allclose(out.choi.apply(X), u @ X @ u.conj().T, atol=1e-6)


def test_swap_has_no_unital_channel():
    spec = preprocess(pauli_swap_pairs() + [(I2, I2)])
    out = channel_extension(spec)
    assert out.status == NOT_EXISTS
    ok, _ = validate_witness(spec, out.certificate)
    assert ok


def test_expansion_example_has_no_channel():
    spec = preprocess(expansion_pairs()[0])
    out = channel_extension(spec)
    assert out.status == NOT_EXISTS
    ok, _ = validate_witness(spec, out.certificate)
    assert ok


def test_random_channel_data_extends(rng):
    for _ in range(3):
        ks = random_channel_kraus(2, 3, rng)
        pairs = [(r, apply_kraus(ks, r)) for r in (random_density(2, rng), random_density(2, rng, rank=1))]
        spec = preprocess(pairs)
        out = channel_extension(spec)
        assert out.status == EXISTS
        ok, _ = validate_channel(spec, out.choi)
        assert ok


def test_trace_mismatch_closed_form():
    spec = preprocess([(PSI0, 2 * PSI1)])
    w = trace_mismatch_witness(spec)
    ok, _ = validate_witness(spec, w)
    assert ok and w.objective < 0
    assert channel_extension(spec).status == NOT_EXISTS


@pytest.mark.parametrize(
    "pairs,expected",
    [
        (pauli_swap_pairs(), 3.0),
        (pauli_cycle_pairs(), 1.0),
        ([(X, X), (Y, Y), (Z, Z)], 1.0),
    ],
)
def test_minimal_unital_scale(pairs, expected):
    r = minimal_unital_scale(preprocess(pairs))
    assert r.c_star == pytest.approx(expected, abs=1e-4)
    assert r.bracket[0] <= r.c_star <= r.bracket[1]


def test_identity_task_succeeds_with_certainty(rng):
    pairs = [(r, r) for r in (random_density(2, rng), random_density(2, rng))]
    assert probabilistic_maximin(pairs).value == pytest.approx(1, abs=1e-6)
    assert probabilistic_weighted(pairs, [0.3, 0.7]).value == pytest.approx(1, abs=1e-6)


def test_unequal_probabilities_example():
    pairs = unequal_probability_pairs()
    r = probabilistic_maximin(pairs)
    assert r.value >= 3 / 5 - 1e-6
    for (rho, rho2), p in zip(pairs, r.probs):
        assert np.allclose(r.choi.apply(rho), p * rho2, atol=1e-6)
    assert la.op_norm(r.choi.tr_out()) <= 1 + 1e-9
    assert probabilistic_maximin(pairs, equal=True).value <= 1e-6


def test_unequal_probabilities_grid_cross_check():
    # a floor on both probabilities is feasible exactly up to the maximin value
    pairs = unequal_probability_pairs()
    best = probabilistic_maximin(pairs).value
    for p in np.linspace(0.5, 0.8, 7):
        r = probabilistic_weighted(pairs, [0.5, 0.5], floor=float(p))
        feasible = r.status != INFEASIBLE
        if abs(p - best) > 1e-4:
            assert feasible == (p < best)


def test_weighted_example_and_floor():
    pairs = unequal_probability_pairs()
    assert probabilistic_weighted(pairs, [0.5, 0.5]).value >= 19 / 30 - 1e-6
    r = probabilistic_weighted(pairs, [0.5, 0.5], floor=0.99, equal=True)
    assert r.status == INFEASIBLE


def test_weighted_rejects_bad_priors():
    with pytest.raises(ValueError):
        probabilistic_weighted(unequal_probability_pairs(), [0.7, 0.7])


def test_hilbert_identity_task(rng):
    a, b = random_density(2, rng), random_density(2, rng)
    h = hilbert_metric_check(a, b, a, b)
    assert h.status == EXISTS
    assert h.lhs == pytest.approx(h.rhs)


def test_hilbert_example_equality():
    (r1, q1), (r2, q2) = unequal_probability_pairs()
    h = hilbert_metric_check(r1, r2, q1, q2)
    assert h.status == EXISTS
    assert h.lhs == pytest.approx(2, abs=1e-9)
    assert h.rhs == pytest.approx(2, abs=1e-9)


def test_hilbert_identical_inputs_distinct_outputs():
    h = hilbert_metric_check(I2 / 2, I2 / 2, PSI0, PSI1)
    assert h.status == NOT_EXISTS
    assert h.lhs == pytest.approx(1) and h.lhs < h.rhs


def test_hilbert_lost_support_inclusion():
    # pure input inside the support of a mixed one, outputs orthogonal
    h = hilbert_metric_check(PSI0, I2 / 2, PSI0, PSI1)
    assert h.status in (SUPPORT_INCOMPATIBLE, NOT_EXISTS)
    assert h.status != EXISTS


def test_hilbert_agrees_with_maximin(rng):
    agree = 0
    for _ in range(25):
        r1, r2, q1, q2 = (random_density(2, rng) for _ in range(4))
        h = hilbert_metric_check(r1, r2, q1, q2)
        m = probabilistic_maximin([(r1, q1), (r2, q2)])
        agree += (h.status == EXISTS) == (m.value > 1e-6)
    assert agree == 25
