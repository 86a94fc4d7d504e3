import numpy as np
import pytest

from cpext import linalg as la


def random_density(d, rng, rank=None):
    k = d if rank is None else rank
    a = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    r = a @ a.conj().T
    return r / np.trace(r).real


def random_hermitian(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def random_channel_kraus(d, dp, rng, k=2):
    ks = [rng.standard_normal((dp, d)) + 1j * rng.standard_normal((dp, d)) for _ in range(k)]
    s = sum(kk.conj().T @ kk for kk in ks)
    w, v = np.linalg.eigh(s)
    inv = v @ np.diag(w**-0.5) @ v.conj().T
    return [kk @ inv for kk in ks]


def apply_kraus(ks, x):
    return sum(k @ x @ k.conj().T for k in ks)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def paulis():
    return la.PAULI_X, la.PAULI_Y, la.PAULI_Z


def random_pair_instance(rng, d=2, dp=2):
    """Two-state instance drawn from a mix that exercises both verdicts.

    A third of the draws use independent random states, a third push random
    inputs through a random channel and the rest perturb such images.
    """
    from cpext.aucrit import AuInstance

    r1, r2 = random_density(d, rng), random_density(d, rng)
    kind = rng.integers(3)
    if kind == 0:
        q1, q2 = random_density(dp, rng), random_density(dp, rng)
    else:
        ks = random_channel_kraus(d, dp, rng, k=int(rng.integers(1, 4)))
        q1, q2 = apply_kraus(ks, r1), apply_kraus(ks, r2)
        if kind == 2:
            mix = rng.uniform(0.0, 0.3)
            q1 = (1 - mix) * q1 + mix * random_density(dp, rng)
    return AuInstance(r1, r2, q1, q2)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
