import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger("solvers.standard_form")

LE, EQ, GE = "L", "E", "G"
SENSES = (LE, EQ, GE)


class StandardFormError(ValueError):
    """Raised when an LP is malformed"""


@dataclass
class StandardFormLP:
    """min (or max) c'x  s.t.  A x {<=,=,>=} b,  lb <= x <= ub

    Rows are stored as a CSR matrix, senses as one-letter codes (L, E, G).
    """
    c: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: Optional[np.ndarray] = None
    maximize: bool = False
    constant: float = 0.0
    row_tags: Optional[List[str]] = None
    col_names: Optional[List[str]] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.senses = np.asarray(self.senses, dtype="<U1")
        self.A = sp.csr_matrix(self.A, dtype=float)
        if self.integrality is None:
            self.integrality = np.zeros(self.c.shape[0], dtype=bool)
        else:
            self.integrality = np.asarray(self.integrality, dtype=bool)
        self.validate()

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]

    @property
    def has_integers(self) -> bool:
        return bool(self.integrality.any())

    def validate(self) -> None:
        m, n = self.A.shape
        if self.c.shape != (n,) or self.lb.shape != (n,) or self.ub.shape != (n,):
            raise StandardFormError(f"Column arrays do not match {n} columns")
        if self.b.shape != (m,) or self.senses.shape != (m,):
            raise StandardFormError(f"Row arrays do not match {m} rows")
        if self.integrality.shape != (n,):
            raise StandardFormError("Integrality mask does not match the column count")
        bad = set(np.unique(self.senses)) - set(SENSES)
        if bad:
            raise StandardFormError(f"Unknown row senses: {sorted(bad)}")
        if not np.all(np.isfinite(self.A.data)) or not np.all(np.isfinite(self.c)) or not np.all(np.isfinite(self.b)):
            raise StandardFormError("Coefficients must be finite")
        if np.any(self.lb > self.ub):
            j = int(np.argmax(self.lb > self.ub))
            raise StandardFormError(f"Column {j} has lower bound {self.lb[j]} above upper bound {self.ub[j]}")

    @classmethod
    def from_triples(
        cls,
        c: Sequence[float],
        triples: Sequence[Tuple[int, int, float]],
        senses: Sequence[str],
        b: Sequence[float],
        lb: Optional[Sequence[float]] = None,
        ub: Optional[Sequence[float]] = None,
        **kwargs,
    ) -> "StandardFormLP":
        n = len(c)
        m = len(b)
        if triples:
            rows, cols, vals = zip(*triples)
        else:
            rows, cols, vals = (), (), ()
        A = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
        lb = np.zeros(n) if lb is None else lb
        ub = np.full(n, np.inf) if ub is None else ub
        return cls(c=c, A=A, senses=senses, b=b, lb=lb, ub=ub, **kwargs)

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "StandardFormLP":
        return replace(self, lb=np.asarray(lb, dtype=float), ub=np.asarray(ub, dtype=float))

    def with_rhs(self, b: np.ndarray) -> "StandardFormLP":
        return replace(self, b=np.asarray(b, dtype=float))

    def with_rows(self, rows: sp.spmatrix, senses: Sequence[str], rhs: Sequence[float],
                  tags: Optional[List[str]] = None) -> "StandardFormLP":
        """Append rows; the column layout is unchanged."""
        if rows.shape[0] == 0:
            return self
        tags = tags if tags is not None else ["cut"] * rows.shape[0]
        row_tags = None if self.row_tags is None else list(self.row_tags) + list(tags)
        return replace(
            self,
            A=sp.vstack([self.A, sp.csr_matrix(rows)], format="csr"),
            senses=np.concatenate([self.senses, np.asarray(senses, dtype="<U1")]),
            b=np.concatenate([self.b, np.asarray(rhs, dtype=float)]),
            row_tags=row_tags,
        )

    def relaxed(self) -> "StandardFormLP":
        return replace(self, integrality=np.zeros(self.n_cols, dtype=bool))

    def as_minimization(self) -> "StandardFormLP":
        if not self.maximize:
            return self
        return replace(self, c=-self.c, constant=-self.constant, maximize=False)

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.constant

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x

    def max_violation(self, x: np.ndarray) -> float:
        """Largest bound or row violation of x, measured independently of any solver state."""
        act = self.row_activity(x)
        viol = np.zeros(self.n_rows)
        le = self.senses == LE
        ge = self.senses == GE
        eq = self.senses == EQ
        viol[le] = np.maximum(act[le] - self.b[le], 0.0)
        viol[ge] = np.maximum(self.b[ge] - act[ge], 0.0)
        viol[eq] = np.abs(act[eq] - self.b[eq])
        bound_viol = np.maximum(np.maximum(self.lb - x, x - self.ub), 0.0)
        worst = 0.0
        if viol.size:
            worst = float(viol.max())
        if bound_viol.size:
            worst = max(worst, float(bound_viol.max()))
        return worst

    def integrality_violation(self, x: np.ndarray) -> float:
        if not self.has_integers:
            return 0.0
        xi = x[self.integrality]
        return float(np.max(np.abs(xi - np.round(xi))))


@dataclass
class Basis:
    """Simplex basis over the augmented columns [A | slacks | artificials]."""
    basic: np.ndarray
    at_upper: np.ndarray
    art_sign: np.ndarray
    n_structural: int = field(default=0)

    def copy(self) -> "Basis":
        return Basis(self.basic.copy(), self.at_upper.copy(), self.art_sign.copy(), self.n_structural)


def farkas_gap(lp: StandardFormLP, y: np.ndarray) -> float:
    """Return y'b - max_{box} y'[A I]z for an infeasibility certificate y.

    A strictly positive value proves that no z within the column bounds and the
    row senses satisfies the constraints. Returns -inf when y has the wrong sign
    on an inequality row or meets an unbounded column with a nonzero weight.
    """
    y = np.array(y, dtype=float)
    tol = 1e-9
    le = lp.senses == LE
    ge = lp.senses == GE
    if np.any(y[le] > tol) or np.any(y[ge] < -tol):
        return -np.inf
    y[le] = np.minimum(y[le], 0.0)
    y[ge] = np.maximum(y[ge], 0.0)
    g = lp.A.T @ y
    best = 0.0
    for j, gj in enumerate(g):
        if abs(gj) <= tol:
            continue
        bound = lp.ub[j] if gj > 0 else lp.lb[j]
        if not np.isfinite(bound):
            return -np.inf
        best += gj * bound
    return float(y @ lp.b - best)
