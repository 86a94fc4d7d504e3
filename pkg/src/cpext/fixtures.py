"""Named reference problems, emitted as problem documents for the command line."""

from __future__ import annotations

import numpy as np

from . import linalg as la
from .serialize import encode_matrix, load_data

PROBLEM_SCHEMA = "cpext-problem/1"

PSI0 = np.diag([1.0, 0.0]).astype(complex)
PSI1 = np.diag([0.0, 1.0]).astype(complex)
X, Y, Z = la.PAULI_X, la.PAULI_Y, la.PAULI_Z


def _doc(mode: str, description: str, pairs=(), **extra) -> dict:
    doc = {
        "schema": PROBLEM_SCHEMA,
        "mode": mode,
        "description": description,
        "pairs": [{"input": encode_matrix(x), "output": encode_matrix(y)} for x, y in pairs],
    }
    doc.update(extra)
    return doc


def _ket_proj(*amps) -> np.ndarray:
    v = np.array(amps, dtype=complex)
    return la.proj(v / np.linalg.norm(v))


# ---------------------------------------------------------------------------
# map data used by several fixtures


def diag_sigma_x_pairs(p_out=None, b_out=None):
    """Projector onto |0> and sigma_x, with images ``P >= 0`` and an arbitrary ``B``."""
    p_out = np.array([[2, 1], [1, 1]], dtype=complex) if p_out is None else p_out
    b_out = Y if b_out is None else b_out
    return [(PSI0, p_out), (X, b_out)]


def no_extension_pairs():
    """|0><0| -> |0><0| and sigma_x -> sigma_z: CP on the span, no CP extension."""
    return [(PSI0, PSI0), (X, Z)]


def approximating_kraus(eps: float):
    """Kraus operators of CP maps that converge to the no-extension data as ``eps -> 0``."""
    k1 = np.array([[1, 0.5], [0, 0]], dtype=complex)
    k2 = np.array([[0, 0], [eps, -0.5 / eps]], dtype=complex)
    return [k1, k2]


def expansion_pairs(p: float = 14 / 15):
    """Conjugation by ``K^{1/2}``: CP, but it expands the trace norm of sigma_y."""
    k = 0.5 * np.array([[3 * p - 1, 2], [2, 3 * p + 2]], dtype=complex)
    kh = la.sqrt_psd(k)
    rho = np.diag([p, 1 - p]).astype(complex)
    return [(rho, kh @ rho @ kh), (Y, kh @ Y @ kh)], kh


def expansion_factor(p: float = 14 / 15) -> float:
    _, kh = expansion_pairs(p)
    return la.trace_norm(kh @ Y @ kh) / la.trace_norm(Y)


def pinched_expansion_pairs(p: float = 14 / 15, t: float = 0.2):
    """The expansion map followed by pinching onto the sigma_y eigenbasis.

    Inputs are the states ``rho`` and ``rho + t sigma_y`` spanning the same
    subspace as before; outputs are diagonal in the sigma_y basis.
    """
    pairs, _ = expansion_pairs(p)
    (rho, a), (_, b) = pairs
    plus, minus = _ket_proj(1, 1j), _ket_proj(1, -1j)

    def pinch(m):
        return plus @ m @ plus + minus @ m @ minus

    return [(rho, pinch(a)), (rho + t * Y, pinch(a + t * b))]


def pauli_cycle_pairs():
    return [(X, Y), (Y, Z), (Z, X)]


def pauli_swap_pairs():
    return [(X, Y), (Y, X), (Z, Z)]


def unequal_probability_pairs():
    r1, r2 = np.diag([1 / 3, 2 / 3]), np.diag([0.2, 0.8])
    q1, q2 = np.diag([0.5, 0.5]), np.diag([1 / 3, 2 / 3])
    return [(r1.astype(complex), q1.astype(complex)), (r2.astype(complex), q2.astype(complex))]


def four_level_commuting_pairs():
    """Three commuting states in dimension 4 with a positive map that has no CP extension."""
    r1 = np.diag([1, 1, 0, 0]) / 2
    r2 = np.diag([0, 1, 1, 0]) / 2
    r3 = np.diag([0, 0, 1, 1]) / 2
    outs = [_ket_proj(1, 0), _ket_proj(1, 1), _ket_proj(0, 1)]
    return [(r.astype(complex), o) for r, o in zip((r1, r2, r3), outs)]


def three_level_commuting_pairs():
    """Two commuting qutrit states sent to orthogonal pure states: positive, no channel."""
    r1 = np.diag([0.5, 0.5, 0]).astype(complex)
    r2 = np.diag([0.5, 0, 0.5]).astype(complex)
    return [(r1, _ket_proj(1, 0)), (r2, _ket_proj(0, 1))]


def transposed_qutrit_pairs():
    r1 = np.array([[2, 1, 0], [1, 2, 1], [0, 1, 2]], dtype=complex) / 6
    r2 = np.array([[2, 1, 0], [1, 2, -1j], [0, 1j, 2]], dtype=complex) / 6
    return [(r1, r1.T.copy()), (r2, r2.T.copy())]


# ---------------------------------------------------------------------------
# registry


def _projector_sigma_x():
    return _doc("cp-check", "span{|0><0|, sigma_x} with |0><0| -> P >= 0, sigma_x -> B: CP on the span", diag_sigma_x_pairs())


def _divergent_approximation():
    return _doc(
        "approx",
        "CP on the span without an extension; the approximation error tends to zero without being attained",
        no_extension_pairs(),
    )


def _no_cp_extension():
    return _doc("cp-extend", "|0><0| -> |0><0|, sigma_x -> sigma_z: CP on the span but no CP extension", no_extension_pairs())


def _trace_norm_expansion():
    pairs, _ = expansion_pairs()
    return _doc("channel", "conjugation by K^(1/2) at p = 14/15: CP extension exists, channel extension does not", pairs)


def _pauli_swap_unital():
    return _doc("channel", "Pauli swap x<->y on span{sigma_x, sigma_y, sigma_z} plus identity -> identity", pauli_swap_pairs() + [(np.eye(2), np.eye(2))])


def _pauli_cycle_unital():
    return _doc("channel", "cyclic Pauli permutation plus identity -> identity", pauli_cycle_pairs() + [(np.eye(2), np.eye(2))])


def _unequal_success():
    return _doc("probabilistic", "diagonal qubit states: distinct success probabilities possible, equal ones not", unequal_probability_pairs(), objective="maximin", equal=False)


def _commuting_four_level():
    return _doc("classical", "commuting states in dimension 4: positive on the span, no CP extension", four_level_commuting_pairs(), kind="domain", trace_preserving=False)


def _commuting_three_level():
    return _doc("classical", "commuting qutrit states to orthogonal pure states: positive, no channel", three_level_commuting_pairs(), kind="domain", trace_preserving=True)


def _transposed_qutrits():
    return _doc("channel", "qutrit states and their transposes: trace-norm condition holds, no channel", transposed_qutrit_pairs())


def _shipped_witness():
    doc = load_data("qutrit_witness.json")
    witness = {k: doc[k] for k in ("H0", "H1", "H2", "objective_bound", "eps_range")}
    return _doc("witness-verify", "shipped witness against a channel for the transposed qutrit pair", transposed_qutrit_pairs(), witness=witness)


FIXTURES = {
    "ex2.3": _projector_sigma_x,
    "ex4.4": _divergent_approximation,
    "ex5.4": _no_cp_extension,
    "ex5.5": _trace_norm_expansion,
    "ex5.9-T12": _pauli_swap_unital,
    "ex5.9-T123": _pauli_cycle_unital,
    "ex6.2": _unequal_success,
    "prop6.4a": _commuting_four_level,
    "prop6.4b": _commuting_three_level,
    "eq38": _transposed_qutrits,
    "appendixB": _shipped_witness,
}


def fixture_names() -> list:
    return list(FIXTURES)


def fixture(name: str) -> dict:
    """Problem document for a named fixture.

    Raises:
        KeyError: unknown name.
    """
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
    return FIXTURES[name]()
