import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np
import scipy.sparse as sp

from src.solvers.standard_form import EQ, GE, LE, StandardFormLP

logger = logging.getLogger("formulation.model")

# row and bound tags that carry no equation meaning
PLUMBING_TAGS = frozenset({"copy", "state", "cut", "initial"})


class BuildError(Exception):
    """Raised when a problem cannot be built from the given inputs"""
    pass


@dataclass(frozen=True)
class VariableIndex:
    """Identity of one column: what it is, for which subject, and where in the
    stage/block/profile/hour grid it lives (-1 where an axis does not apply)."""
    kind: str
    subject: str = ""
    stage: int = -1
    block: int = -1
    profile: int = -1
    hour: int = -1

    def __str__(self):
        axes = [self.subject] if self.subject else []
        for prefix, value in (("y", self.stage), ("b", self.block), ("o", self.profile), ("t", self.hour)):
            if value >= 0:
                axes.append(f"{prefix}{value}")
        return f"{self.kind}[{','.join(axes)}]"


@dataclass
class ConstraintRecord:
    coeffs: Dict[int, float]
    sense: str
    rhs: float
    tag: str


@dataclass
class LinearProblem:
    """Indexed MILP under construction.

    Columns are addressed by VariableIndex, rows carry an equation tag and
    bounds that encode an equation carry bound tags on their column.
    """
    name: str = "problem"
    variables: List[VariableIndex] = field(default_factory=list)
    lb: List[float] = field(default_factory=list)
    ub: List[float] = field(default_factory=list)
    integer: List[bool] = field(default_factory=list)
    cost: Dict[int, float] = field(default_factory=lambda: defaultdict(float))
    constant: float = 0.0
    constraints: List[ConstraintRecord] = field(default_factory=list)
    bound_tags: Dict[int, Set[str]] = field(default_factory=lambda: defaultdict(set))
    objective_tags: Set[str] = field(default_factory=set)
    _index: Dict[VariableIndex, int] = field(default_factory=dict)

    @property
    def n_cols(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    def add_var(self, index: VariableIndex, lb: float = 0.0, ub: float = math.inf, integer: bool = False,
                bound_tag: Optional[str] = None) -> int:
        if index in self._index:
            raise BuildError(f"duplicate variable {index}")
        if lb > ub:
            raise BuildError(f"variable {index} has lower bound {lb} above upper bound {ub}")
        col = len(self.variables)
        self.variables.append(index)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.integer.append(bool(integer))
        self._index[index] = col
        if bound_tag:
            self.bound_tags[col].add(bound_tag)
        return col

    def col(self, index: VariableIndex) -> int:
        return self._index[index]

    def find(self, index: VariableIndex) -> Optional[int]:
        return self._index.get(index)

    def tag_bound(self, col: int, tag: str) -> None:
        self.bound_tags[col].add(tag)

    def fix(self, col: int, value: float, tag: Optional[str] = None) -> None:
        self.lb[col] = self.ub[col] = float(value)
        if tag:
            self.bound_tags[col].add(tag)

    def add_cost(self, col: int, coef: float, tags: Iterable[str] = ()) -> None:
        if coef == 0.0:
            return
        if not math.isfinite(coef):
            raise BuildError(f"non-finite cost on {self.variables[col]}")
        self.cost[col] += coef
        self.objective_tags.update(tags)

    def add_row(self, coeffs: Dict[int, float], sense: str, rhs: float, tag: str) -> int:
        if not tag:
            raise BuildError("every row needs a tag")
        clean = {}
        for col, value in coeffs.items():
            if not math.isfinite(value):
                raise BuildError(f"non-finite coefficient on {self.variables[col]} in row tagged {tag}")
            if value != 0.0:
                clean[col] = clean.get(col, 0.0) + value
        if not math.isfinite(rhs):
            raise BuildError(f"non-finite right-hand side in row tagged {tag}")
        self.constraints.append(ConstraintRecord(clean, sense, float(rhs), tag))
        return len(self.constraints) - 1

    def rows_tagged(self, tag: str) -> List[int]:
        return [r for r, c in enumerate(self.constraints) if c.tag == tag]

    def cols_of_kind(self, kind: str) -> List[int]:
        return [c for c, v in enumerate(self.variables) if v.kind == kind]

    def tag_census(self) -> Set[str]:
        """Equation tags present in rows, column bounds and the objective."""
        tags = {c.tag for c in self.constraints}
        for col_tags in self.bound_tags.values():
            tags.update(col_tags)
        tags.update(self.objective_tags)
        return tags - PLUMBING_TAGS

    def to_standard_form(self) -> StandardFormLP:
        rows, cols, vals = [], [], []
        for r, con in enumerate(self.constraints):
            for c, v in con.coeffs.items():
                rows.append(r)
                cols.append(c)
                vals.append(v)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_cols))
        c = np.zeros(self.n_cols)
        for col, value in self.cost.items():
            c[col] = value
        return StandardFormLP(
            c=c,
            A=A,
            senses=[con.sense for con in self.constraints],
            b=[con.rhs for con in self.constraints],
            lb=self.lb,
            ub=self.ub,
            integrality=self.integer,
            constant=self.constant,
            row_tags=[con.tag for con in self.constraints],
            col_names=[str(v) for v in self.variables],
        )

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(v * x[c] for c, v in self.cost.items())) + self.constant


def evaluate_rows(problem: LinearProblem, x: np.ndarray, tol: float = 1e-6,
                  skip: Iterable[str] = ()) -> Dict[str, float]:
    """Re-evaluate every row, bound and integrality mark directly from the records.

    Returns the largest violation per row tag, plus "bounds" and "integrality"
    entries; the solver's own bookkeeping is not consulted. Rows whose tag is
    in `skip` are ignored.
    """
    skip = set(skip)
    worst: Dict[str, float] = defaultdict(float)
    for con in problem.constraints:
        if con.tag in skip:
            continue
        act = sum(v * x[c] for c, v in con.coeffs.items())
        if con.sense == LE:
            viol = act - con.rhs
        elif con.sense == GE:
            viol = con.rhs - act
        else:
            viol = abs(act - con.rhs)
        worst[con.tag] = max(worst[con.tag], viol, 0.0)
    lb = np.asarray(problem.lb)
    ub = np.asarray(problem.ub)
    worst["bounds"] = float(max(0.0, np.max(lb - x, initial=0.0), np.max(x - ub, initial=0.0)))
    ints = np.asarray(problem.integer, dtype=bool)
    worst["integrality"] = float(np.max(np.abs(x[ints] - np.round(x[ints])), initial=0.0))
    violations = {tag: v for tag, v in worst.items() if v > tol}
    if violations:
        logger.debug(f"Re-verification found violations: {violations}")
    return dict(worst)


def max_violation(report: Dict[str, float]) -> Tuple[str, float]:
    tag = max(report, key=report.get) if report else ""
    return tag, report.get(tag, 0.0)
