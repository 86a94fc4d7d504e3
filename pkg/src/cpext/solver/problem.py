"""Canonical standard-form SDP and its solution record.

Primal (minimization)::

    min  sum_j <C_j, X_j> + c_free . x
    s.t. sum_j <A_kj, X_j> + A_free[k] . x = b_k     for every row k
         X_j real symmetric PSD

Dual::

    max  b . y
    s.t. S_j = C_j - sum_k y_k A_kj  PSD,   A_free^T y = c_free

Complex Hermitian data enters through the real embedding handled by
:mod:`cpext.solver.model`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

OPTIMAL = "Optimal"
PRIMAL_INFEASIBLE = "PrimalInfeasible"
DUAL_INFEASIBLE = "DualInfeasible"
MARGINAL = "Marginal"
NUMERIC_FAILURE = "NumericFailure"

FEASIBLE = "Feasible"
INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class Tolerances:
    """Solver tolerances; every public operation accepts an override."""

    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    psd_tol: float = 1e-9
    margin_tol: float = 1e-7
    max_iters: int = 60

    def with_overrides(self, **kw) -> "Tolerances":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {
            "feas_tol": self.feas_tol,
            "gap_tol": self.gap_tol,
            "psd_tol": self.psd_tol,
            "margin_tol": self.margin_tol,
            "max_iters": self.max_iters,
        }


DEFAULT_TOLERANCES = Tolerances()


@dataclass
class SdpProblem:
    """Standard-form SDP with symmetric PSD blocks and free scalars."""

    block_dims: list[int]
    n_free: int
    c_blocks: list[np.ndarray]
    c_free: np.ndarray
    a_blocks: list[np.ndarray]  # one (m, n, n) array per block
    a_free: np.ndarray  # (m, n_free)
    b: np.ndarray  # (m,)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.size
        self.c_free = np.asarray(self.c_free, dtype=float).reshape(-1)
        self.a_free = np.asarray(self.a_free, dtype=float).reshape(m, self.n_free)
        if len(self.block_dims) != len(self.c_blocks) or len(self.block_dims) != len(self.a_blocks):
            raise ValueError("block data length mismatch")
        if self.c_free.size != self.n_free:
            raise ValueError("c_free length must equal n_free")
        for n, cb, ab in zip(self.block_dims, self.c_blocks, self.a_blocks):
            if cb.shape != (n, n) or ab.shape != (m, n, n):
                raise ValueError("block coefficient shape mismatch")
            if not (np.allclose(cb, cb.T, atol=1e-12) and np.allclose(ab, ab.transpose(0, 2, 1), atol=1e-12)):
                raise ValueError("block coefficients must be symmetric")
        for arr in [self.b, self.c_free, self.a_free, *self.c_blocks, *self.a_blocks]:
            if not np.all(np.isfinite(arr)):
                raise ValueError("problem data must be finite")

    @property
    def n_rows(self) -> int:
        return self.b.size

    def apply_a(self, xs: list[np.ndarray], xf: np.ndarray) -> np.ndarray:
        """Row activities ``A(X, x)``."""
        out = self.a_free @ xf if self.n_free else np.zeros(self.n_rows)
        for ab, x in zip(self.a_blocks, xs):
            out = out + np.einsum("kab,ab->k", ab, x)
        return out

    def adjoint_blocks(self, y: np.ndarray) -> list[np.ndarray]:
        """``sum_k y_k A_kj`` for every block ``j``."""
        return [np.einsum("k,kab->ab", y, ab) for ab in self.a_blocks]

    def objective(self, xs, xf) -> float:
        val = float(self.c_free @ xf) if self.n_free else 0.0
        return val + sum(float(np.sum(c * x)) for c, x in zip(self.c_blocks, xs))

    def scaled(self, obj: float = 1.0, rows: float = 1.0) -> "SdpProblem":
        """Copy with the objective and all constraint rows multiplied by positive scalars."""
        return SdpProblem(
            list(self.block_dims),
            self.n_free,
            [obj * c for c in self.c_blocks],
            obj * self.c_free,
            [rows * a for a in self.a_blocks],
            rows * self.a_free,
            rows * self.b,
        )

    def to_json(self) -> str:
        """Debug dump for cross-checking against external solvers.

        Layout: ``{"block_dims", "n_free", "objective": {"blocks", "free"},
        "constraints": [{"blocks": [[j, matrix], ...], "free", "rhs"}]}``;
        only nonzero block coefficients are listed per row.
        """
        rows = []
        for k in range(self.n_rows):
            blocks = [
                [j, ab[k].tolist()] for j, ab in enumerate(self.a_blocks) if np.any(ab[k])
            ]
            rows.append({"blocks": blocks, "free": self.a_free[k].tolist(), "rhs": float(self.b[k])})
        doc = {
            "format": "cpext-sdp/1",
            "block_dims": list(self.block_dims),
            "n_free": self.n_free,
            "objective": {"blocks": [c.tolist() for c in self.c_blocks], "free": self.c_free.tolist()},
            "constraints": rows,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "SdpProblem":
        doc = json.loads(text)
        dims = doc["block_dims"]
        m = len(doc["constraints"])
        a_blocks = [np.zeros((m, n, n)) for n in dims]
        a_free = np.zeros((m, doc["n_free"]))
        b = np.zeros(m)
        for k, row in enumerate(doc["constraints"]):
            for j, mat in row["blocks"]:
                a_blocks[j][k] = np.array(mat)
            a_free[k] = row["free"]
            b[k] = row["rhs"]
        return cls(
            dims,
            doc["n_free"],
            [np.array(c, dtype=float) for c in doc["objective"]["blocks"]],
            np.array(doc["objective"]["free"], dtype=float),
            a_blocks,
            a_free,
            b,
        )


@dataclass
class SdpSolution:
    """Outcome of :func:`cpext.solver.solve`.

    ``primal`` holds ``(blocks, free)``, ``dual`` holds ``(y, slack_blocks)``.
    For ``PrimalInfeasible`` the certificate is a vector ``y`` with
    ``b.y = 1``, ``A_free^T y = 0`` and every ``sum_k y_k A_kj`` negative
    semidefinite; for ``DualInfeasible`` it is a primal ray ``(blocks, free)``
    with ``A(ray) = 0`` and objective ``-1``.
    """

    status: str
    primal: tuple[list[np.ndarray], np.ndarray] | None = None
    dual: tuple[np.ndarray, list[np.ndarray]] | None = None
    primal_obj: float = float("nan")
    dual_obj: float = float("nan")
    gap: float = float("nan")
    certificate: Any = None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class FeasibilityResult:
    status: str  # Feasible / Infeasible / Marginal
    point: tuple[list[np.ndarray], np.ndarray] | None = None
    certificate: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
