import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_hermitian
from cpext import linalg as la
from cpext.errors import DimensionError, NotHermitianError, NotPSDError
from cpext.fixtures import approximating_kraus, expansion_pairs

X, Y, Z = la.PAULI_X, la.PAULI_Y, la.PAULI_Z
I2 = np.eye(2)
PSI0 = np.diag([1.0, 0.0])
PSI1 = np.diag([0.0, 1.0])


def test_tensor_identity():
    assert np.allclose(la.tensor(I2, I2), np.eye(4))


def test_tensor_xx_permutes_basis():
    m = la.tensor(X, X)
    # |00>,|01>,|10>,|11> -> |11>,|10>,|01>,|00>
    assert np.allclose(m, np.fliplr(np.eye(4)))


def test_omega_pauli_expansion():
    expected = (np.kron(X, X) - np.kron(Y, Y) + np.kron(Z, Z) + np.kron(I2, I2)) / 2
    assert np.allclose(la.omega(2), expected)


def test_partial_trace_product(rng):
    a, b = random_hermitian(2, rng), random_hermitian(3, rng)
    assert np.allclose(la.partial_trace(np.kron(a, b), (2, 3), 2), a * np.trace(b))
    assert np.allclose(la.partial_trace(np.kron(a, b), (2, 3), 1), b * np.trace(a))


def test_partial_trace_omega_marginal():
    assert np.allclose(la.partial_trace(la.omega(2), (2, 2), 1), I2)


def test_partial_trace_linear_combination(rng):
    f0, f1 = random_hermitian(3, rng), random_hermitian(3, rng)
    m = np.kron(PSI0, f0) + np.kron(X, f1)
    assert np.allclose(la.partial_trace(m, (2, 3), 2), PSI0 * np.trace(f0) + X * np.trace(f1))


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionError):
        la.partial_trace(np.eye(5), (2, 2), 1)


def test_identity_choi_acts_as_identity(rng):
    c = la.ChoiMatrix(la.omega(2), 2, 2)
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    assert np.allclose(c.apply(x), x)
    assert np.allclose(c.dual(x), x)


def test_approximating_map_on_projector():
    eps = 0.3
    c = la.choi_from_kraus(approximating_kraus(eps), din=2)
    assert np.allclose(c.apply(PSI0), PSI0 + eps**2 * PSI1)
    assert np.allclose(c.apply(X), Z)


def test_approximating_map_dual_unit():
    eps = 0.3
    c = la.choi_from_kraus(approximating_kraus(eps), din=2)
    assert np.allclose(c.dual(I2), np.diag([1 + eps**2, (1 + 1 / eps**2) / 4]))


def test_maximally_mixed_choi_is_trace_map(rng):
    c = la.ChoiMatrix(np.eye(4, dtype=complex), 2, 2)
    x = random_hermitian(2, rng)
    assert np.allclose(c.apply(x), np.trace(x) * I2)


@pytest.mark.parametrize("din,dout", [(2, 2), (2, 3), (3, 2)])
def test_adjoint_identity(rng, din, dout):
    a = rng.standard_normal((din * dout, din * dout)) + 1j * rng.standard_normal((din * dout, din * dout))
    c = la.ChoiMatrix(a @ a.conj().T, din, dout)
    x = rng.standard_normal((din, din)) + 1j * rng.standard_normal((din, din))
    y = rng.standard_normal((dout, dout)) + 1j * rng.standard_normal((dout, dout))
    lhs = np.trace(y.conj().T @ c.apply(x))
    rhs = np.trace(c.dual(y).conj().T @ x)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


def test_choi_of_round_trip(rng):
    k = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))

    def fn(x):
        return k @ x @ k.conj().T + np.trace(x) * np.eye(3)

    c = la.choi_of(fn, 2, 3)
    for _ in range(3):
        x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        assert np.allclose(c.apply(x), fn(x), atol=1e-10)


def test_norms_of_sigma_z():
    assert la.trace_norm(Z) == pytest.approx(2)
    assert la.op_norm(Z) == pytest.approx(1)
    assert la.min_eig(Z) == pytest.approx(-1)


def test_trace_norm_diagonal_difference():
    assert la.trace_norm(np.diag([1 / 3, 2 / 3]) - np.diag([1 / 5, 4 / 5])) == pytest.approx(4 / 15)


def test_shipped_witness_matrix_psd():
    from cpext.aucrit import shipped_witness_package, transposed_qutrit_instance

    inst, pkg = transposed_qutrit_instance(), shipped_witness_package()
    m = np.kron(pkg.H0, np.eye(3)) + np.kron(inst.rho1, pkg.H1) + np.kron(inst.rho2, pkg.H2)
    assert la.min_eig(m) >= 0


@pytest.mark.parametrize(
    "a,root",
    [(np.eye(2), np.eye(2)), (np.diag([4.0, 9.0]), np.diag([2.0, 3.0]))],
)
def test_sqrt_psd_closed_form(a, root):
    assert np.allclose(la.sqrt_psd(a), root)


def test_sqrt_psd_round_trip_on_expansion_operator():
    p = 14 / 15
    k = 0.5 * np.array([[3 * p - 1, 2], [2, 3 * p + 2]])
    r = la.sqrt_psd(k)
    assert np.max(np.abs(r @ r - k)) <= 1e-12
    _, kh = expansion_pairs(p)
    assert np.allclose(kh, r)


def test_sqrt_psd_rejects_negative():
    with pytest.raises(NotPSDError):
        la.sqrt_psd(np.diag([1.0, -0.1]))


def test_fidelity_values():
    rho = np.array([[0.7, 0.2j], [-0.2j, 0.3]])
    assert la.fidelity(rho, rho) == pytest.approx(1)
    assert la.fidelity(PSI0, PSI1) == pytest.approx(0, abs=1e-12)
    assert la.fidelity(PSI0, I2 / 2) == pytest.approx(1 / np.sqrt(2))


def test_fidelity_symmetric_and_bounded(rng):
    for _ in range(20):
        a = random_density(3, rng) * rng.uniform(0.5, 2)
        b = random_density(3, rng, rank=2)
        f = la.fidelity(a, b)
        assert f == pytest.approx(la.fidelity(b, a), rel=1e-9)
        assert f**2 <= np.trace(a).real * np.trace(b).real + 1e-12


def test_inf_ratio_values():
    a = random_density(2, np.random.default_rng(1))
    assert la.inf_ratio(a, a) == pytest.approx(1)
    assert la.inf_ratio(PSI0, I2 / 2) == 0
    assert la.inf_ratio(np.diag([1 / 3, 2 / 3]), np.diag([1 / 5, 4 / 5])) == pytest.approx(5 / 6)


def test_inf_ratio_rejects_zero():
    with pytest.raises(ValueError):
        la.inf_ratio(I2, np.zeros((2, 2)))


def test_inf_ratio_leaves_singular_difference(rng):
    for _ in range(20):
        a, b = random_density(3, rng), random_density(3, rng)
        lam = la.inf_ratio(a, b)
        assert abs(la.min_eig(a - lam * b)) <= 1e-9


def test_support_projector():
    assert np.allclose(la.support_projector(np.eye(3)), np.eye(3))
    assert np.allclose(la.support_projector(np.diag([1.0, 0.0])), np.diag([1.0, 0.0]))
    # Ψ0 plus a strictly positive element of span{Ψ0, σx} has full support
    assert np.allclose(la.support_projector(PSI0 + (PSI0 + 0.4 * X + PSI1)), I2)


def test_span_basis_examples():
    basis, herm = la.hermitian_basis_of_span([X])
    assert herm and len(basis) == 1
    basis, herm = la.hermitian_basis_of_span([np.array([[0, 1], [0, 0]], dtype=complex)])
    assert not herm and len(basis) == 2
    basis, herm = la.hermitian_basis_of_span([PSI0, X])
    assert herm and len(basis) == 2


def test_span_basis_spans_and_is_independent(rng):
    mats = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(3)]
    basis, _ = la.hermitian_basis_of_span(mats)
    coords = np.array([la.herm_coords(b) for b in basis])
    assert np.linalg.cond(coords @ coords.T) < 1e8
    for m in mats:
        for part in ((m + m.conj().T) / 2, (m - m.conj().T) / 2j):
            c, *_ = np.linalg.lstsq(coords.T, la.herm_coords(part), rcond=None)
            assert np.max(np.abs(coords.T @ c - la.herm_coords(part))) <= 1e-10


def test_span_basis_rejects_zero():
    with pytest.raises(ValueError):
        la.hermitian_basis_of_span([np.zeros((2, 2))])


def test_real_embedding_examples():
    assert np.allclose(la.real_embedding(Z), np.diag([1, -1, 1, -1]))
    assert np.allclose(np.sort(np.linalg.eigvalsh(la.real_embedding(Y))), [-1, -1, 1, 1])


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=1, max_value=4))
def test_real_embedding_preserves_spectrum(seed, d):
    h = random_hermitian(d, np.random.default_rng(seed))
    w = np.linalg.eigvalsh(h)
    we = np.linalg.eigvalsh(la.real_embedding(h))
    assert np.allclose(np.sort(np.repeat(w, 2)), we, atol=1e-10)
    assert np.allclose(la.real_unembedding(la.real_embedding(h)), h)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_norm_inequalities(seed):
    h = random_hermitian(3, np.random.default_rng(seed))
    assert la.trace_norm(h) >= la.op_norm(h) >= 0
    p = h @ h
    assert la.trace_norm(p) == pytest.approx(np.trace(p).real)


def test_hermiticity_rejected_not_repaired():
    with pytest.raises(NotHermitianError):
        la.as_hermitian(np.array([[1, 1e-6], [0, 1]]))


def test_psd_status_three_valued():
    assert la.psd_status(np.eye(2)) == "yes"
    assert la.psd_status(np.diag([1, -1.0])) == "no"
    assert la.psd_status(np.diag([1, -1e-12])) == "marginal"
