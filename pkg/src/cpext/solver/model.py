"""Small builder that turns Hermitian-matrix models into :class:`SdpProblem`.

Variables:

* :meth:`Model.herm_psd` -- complex Hermitian PSD matrix ``C``. Stored as a
  real symmetric block ``Z`` of twice the size with
  ``C = ((Z11 + Z22) + i (Z21 - Z12)) / 2``, so ``<G, C> = <emb(G), Z> / 2``.
* :meth:`Model.nonneg` -- scalar ``>= 0`` (1×1 block).
* :meth:`Model.free` -- unconstrained real scalar.
* :meth:`Model.herm_free` -- unconstrained Hermitian matrix, coordinates in
  :func:`cpext.linalg.hermitian_basis`.

Linear functionals are dicts ``{var: coeff}`` where the coefficient is a
Hermitian matrix for matrix variables and a float for scalar ones, meaning
``sum <coeff, var>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..linalg import herm_coords, herm_from_coords, hermitian_basis, real_embedding, real_unembedding
from . import engine
from .problem import SdpProblem, SdpSolution, Tolerances


@dataclass(frozen=True, eq=False)
class HermPSD:
    block: int
    n: int


@dataclass(frozen=True, eq=False)
class NonNeg:
    block: int


@dataclass(frozen=True, eq=False)
class Free:
    index: int


@dataclass(frozen=True, eq=False)
class HermFree:
    start: int
    n: int


@dataclass(frozen=True)
class RowGroup:
    start: int
    stop: int
    n: int  # 0 for a scalar row


class Model:
    def __init__(self):
        self.block_dims: list[int] = []
        self.n_free = 0
        self._rows: list[tuple[dict, float]] = []
        self._obj: dict = {}

    # -- variables ---------------------------------------------------------
    def herm_psd(self, n: int) -> HermPSD:
        self.block_dims.append(2 * n)
        return HermPSD(len(self.block_dims) - 1, n)

    def nonneg(self) -> NonNeg:
        self.block_dims.append(1)
        return NonNeg(len(self.block_dims) - 1)

    def free(self) -> Free:
        self.n_free += 1
        return Free(self.n_free - 1)

    def herm_free(self, n: int) -> HermFree:
        self.n_free += n * n
        return HermFree(self.n_free - n * n, n)

    # -- constraints -------------------------------------------------------
    def minimize(self, terms: dict) -> None:
        self._obj = dict(terms)

    def add_eq(self, terms: dict, rhs: float) -> RowGroup:
        self._rows.append((dict(terms), float(rhs)))
        return RowGroup(len(self._rows) - 1, len(self._rows), 0)

    def add_matrix_eq(self, maps: list[tuple[object, Callable]], rhs: np.ndarray) -> RowGroup:
        """Impose ``sum_t L_t(v_t) = rhs`` for Hermitian ``m×m`` matrices.

        Args:
            maps: pairs ``(var, adjoint)`` where ``adjoint(E)`` returns the
                coefficient of ``var`` in the functional ``<E, L_t(var)>``.
            rhs: Hermitian right-hand side.
        """
        rhs = np.asarray(rhs, dtype=complex)
        m = rhs.shape[0]
        start = len(self._rows)
        for e in hermitian_basis(m):
            terms: dict = {}
            for var, adj in maps:
                coef = adj(e)
                if var in terms:
                    terms[var] = terms[var] + coef
                else:
                    terms[var] = coef
            self._rows.append((terms, float(np.real(np.trace(e @ rhs)))))
        return RowGroup(start, len(self._rows), m)

    # -- assembly ----------------------------------------------------------
    def _scatter(self, terms: dict, blocks: list[np.ndarray], free: np.ndarray) -> None:
        for var, coef in terms.items():
            if isinstance(var, HermPSD):
                blocks[var.block] += real_embedding(np.asarray(coef, dtype=complex)) / 2
            elif isinstance(var, NonNeg):
                blocks[var.block][0, 0] += float(np.real(coef))
            elif isinstance(var, Free):
                free[var.index] += float(np.real(coef))
            elif isinstance(var, HermFree):
                free[var.start : var.start + var.n * var.n] += herm_coords(np.asarray(coef, dtype=complex))
            else:
                raise TypeError(f"unknown variable {var!r}")

    def build(self) -> SdpProblem:
        m = len(self._rows)
        a_blocks = [np.zeros((m, n, n)) for n in self.block_dims]
        a_free = np.zeros((m, self.n_free))
        b = np.zeros(m)
        for k, (terms, rhs) in enumerate(self._rows):
            bl = [a[k] for a in a_blocks]
            self._scatter(terms, bl, a_free[k])
            b[k] = rhs
        c_blocks = [np.zeros((n, n)) for n in self.block_dims]
        c_free = np.zeros(self.n_free)
        self._scatter(self._obj, c_blocks, c_free)
        return SdpProblem(list(self.block_dims), self.n_free, c_blocks, c_free, a_blocks, a_free, b)

    def solve(self, opts: Tolerances | None = None) -> tuple[SdpProblem, SdpSolution]:
        p = self.build()
        return p, engine.solve(p, opts)

    # -- decoding ----------------------------------------------------------
    @staticmethod
    def value(var, point) -> np.ndarray | float:
        """Value of ``var`` in a primal point ``(blocks, free)``."""
        xs, xf = point
        if isinstance(var, HermPSD):
            return real_unembedding(xs[var.block])
        if isinstance(var, NonNeg):
            return float(xs[var.block][0, 0])
        if isinstance(var, Free):
            return float(xf[var.index])
        if isinstance(var, HermFree):
            return herm_from_coords(xf[var.start : var.start + var.n * var.n], var.n)
        raise TypeError(f"unknown variable {var!r}")

    @staticmethod
    def row_dual(group: RowGroup, y: np.ndarray) -> np.ndarray | float:
        """Multiplier of a constraint group: Hermitian matrix or scalar."""
        seg = y[group.start : group.stop]
        if group.n == 0:
            return float(seg[0])
        return herm_from_coords(seg, group.n)

    @staticmethod
    def slack_value(var: HermPSD, slacks: list[np.ndarray]) -> np.ndarray:
        """Complex dual slack attached to a Hermitian PSD variable."""
        return 2 * real_unembedding(slacks[var.block])
