import numpy as np
import pytest

from conftest import random_channel_kraus, random_hermitian
from cpext import linalg as la
from cpext.cpcheck import (
    CP,
    EXISTS,
    NO,
    NO_PSD,
    NOT_CP,
    NOT_EXISTS,
    STRICTLY_POSITIVE,
    UNDECIDED,
    YES,
    DeltaNorm,
    Witness,
    classify,
    contains_nonzero_psd,
    delta_sdp,
    exact_cp_extension,
    gamma_sdp,
    preprocess,
    unboundedness_diagnostic,
    validate_witness,
)
from cpext.errors import IncompatibleError, NotLinearError
from cpext.fixtures import diag_sigma_x_pairs, expansion_pairs, no_extension_pairs

X, Y, Z = la.PAULI_X, la.PAULI_Y, la.PAULI_Z
PSI0 = np.diag([1.0, 0.0])
PSI1 = np.diag([0.0, 1.0])


def test_redundant_pair_removed():
    spec = preprocess([(X, Z), (2 * X, 2 * Z)])
    assert len(spec) == 1
    assert np.allclose(spec.inputs[0] / la.op_norm(spec.inputs[0]), X)


def test_conflicting_images_rejected():
    with pytest.raises(NotLinearError):
        preprocess([(X, Z), (2 * X, Z)])


def test_trace_preservation_precondition():
    ok = preprocess([(PSI0, PSI1)], dual_pairs=[(np.eye(2), np.eye(2))])
    assert len(ok.dual_pairs) == 1
    with pytest.raises(IncompatibleError):
        preprocess([(PSI0, 2 * PSI1)], dual_pairs=[(np.eye(2), np.eye(2))])


def test_pauli_span_always_cp(rng):
    for _ in range(3):
        pairs = [(p, random_hermitian(2, rng)) for p in (X, Y, Z)]
        v = gamma_sdp(preprocess(pairs))
        assert v.status == CP
        assert -1e-7 <= v.gamma <= 0


def test_projector_sigma_x_map_is_cp():
    v = gamma_sdp(preprocess(diag_sigma_x_pairs()))
    assert v.status == CP


def test_negative_image_has_hand_witness():
    spec = preprocess([(PSI0, -PSI0)])
    hand = Witness(H=[PSI0.astype(complex)], bounded=True)
    ok, _ = validate_witness(spec, hand)
    assert ok and hand.objective == pytest.approx(-1)
    v = gamma_sdp(spec)
    assert v.status == NOT_CP
    assert v.gamma == pytest.approx(-1, abs=1e-6)
    ok, _ = validate_witness(spec, v.witness)
    assert ok


def test_delta_truncates_negative_part():
    r = delta_sdp(preprocess([(PSI0, -PSI0)]))
    assert r.delta == pytest.approx(1, abs=1e-6)
    assert np.allclose(r.best_choi.apply(PSI0), 0, atol=1e-6)


def test_delta_identity_spec_returns_omega():
    units = []
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1
            units.append((e, e))
    r = delta_sdp(preprocess(units))
    assert r.delta == pytest.approx(0, abs=1e-6)
    assert np.allclose(r.best_choi.matrix, la.omega(2), atol=1e-5)


@pytest.mark.parametrize("norm", list(DeltaNorm))
def test_duality_under_each_norm(rng, norm):
    pairs = [(random_hermitian(2, rng), random_hermitian(2, rng)) for _ in range(2)]
    spec = preprocess(pairs)
    g = gamma_sdp(spec, norm=norm)
    d = delta_sdp(spec, norm=norm)
    assert abs(d.delta + g.gamma) <= 1e-6 * (1 + abs(d.delta))


def test_cp_implies_zero_delta(rng):
    ks = random_channel_kraus(2, 3, rng)
    pairs = []
    for _ in range(2):
        x = random_hermitian(2, rng)
        pairs.append((x, sum(k @ x @ k.conj().T for k in ks)))
    spec = preprocess(pairs)
    assert gamma_sdp(spec).status == CP
    assert delta_sdp(spec).delta <= 1e-6


def test_no_extension_example_never_exists():
    spec = preprocess(no_extension_pairs())
    assert gamma_sdp(spec).status == CP
    assert delta_sdp(spec).delta <= 1e-6
    out = exact_cp_extension(spec)
    assert out.status in (NOT_EXISTS, UNDECIDED)
    if out.status == NOT_EXISTS:
        ok, _ = validate_witness(spec, out.certificate)
        assert ok


def test_strictly_positive_span_extends():
    pairs, _ = expansion_pairs()
    spec = preprocess(pairs)
    out = exact_cp_extension(spec)
    assert out.status == EXISTS
    for x, y in spec.pairs:
        assert np.max(np.abs(out.choi.apply(x) - y)) <= 1e-8
    assert la.min_eig(out.choi.matrix) >= -1e-9


def test_density_spanned_extends(rng):
    ks = random_channel_kraus(2, 2, rng)
    pairs = []
    for v in ([1, 0], [1, 1], [1, 1j]):
        rho = la.proj(np.array(v, dtype=complex) / np.linalg.norm(v))
        pairs.append((rho, sum(k @ rho @ k.conj().T for k in ks)))
    assert exact_cp_extension(preprocess(pairs)).status == EXISTS


@pytest.mark.parametrize(
    "basis,expected",
    [([X, Y, Z], NO), ([PSI0, X], YES), ([Z], NO)],
)
def test_contains_nonzero_psd(basis, expected):
    r = contains_nonzero_psd(basis)
    assert r.status == expected
    if expected == YES:
        assert la.min_eig(r.element) >= -1e-9
    else:
        # positive definite and orthogonal to every basis element
        assert la.min_eig(r.certificate) > 0
        assert all(abs(np.trace(r.certificate @ b)) <= 1e-8 for b in basis)


def test_classify_pauli_span(rng):
    c = classify(preprocess([(p, random_hermitian(2, rng)) for p in (X, Y, Z)]))
    assert c.guarantee == NO_PSD and c.extension == EXISTS


def test_classify_projector_sigma_x():
    c = classify(preprocess(no_extension_pairs()))
    assert c.cp.status == CP
    assert c.extension in (NOT_EXISTS, UNDECIDED)


def test_classify_strictly_positive():
    pairs, _ = expansion_pairs()
    c = classify(preprocess(pairs))
    assert c.guarantee == STRICTLY_POSITIVE and c.extension == EXISTS


def test_unboundedness_series_grows():
    series, diverging = unboundedness_diagnostic(preprocess(no_extension_pairs()), (1e-1, 1e-2, 1e-3))
    norms = [pt.norm for pt in series]
    assert diverging
    assert norms[-1] >= 10 * norms[0]


def test_unboundedness_constant_for_fixed_map():
    series, diverging = unboundedness_diagnostic(preprocess([(PSI0, PSI0)]), (1e-1, 1e-2, 1e-3))
    assert not diverging
    # the error budget lets the unit shrink by exactly eps
    assert all(pt.norm == pytest.approx(1 - pt.eps, abs=1e-5) for pt in series)
