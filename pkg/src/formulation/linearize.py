from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from src.formulation.model import BuildError, LinearProblem
from src.solvers.standard_form import GE, LE


@dataclass(frozen=True)
class LineRatings:
    """Ratings of one right-of-way for one hour, in p.u."""
    static_existing: float = 0.0
    static_new: float = 0.0
    dtr_existing: float = 0.0
    dtr_new: float = 0.0

    def capacity(self, line: int, dtr: int) -> float:
        """Effective capacity for built-line and DTR flags in {0, 1}."""
        both = line * dtr
        return (self.static_existing * (1 - dtr) + self.static_new * (line - both)
                + self.dtr_existing * dtr + self.dtr_new * both)

    @property
    def peak(self) -> float:
        return max(self.static_existing + self.static_new, self.dtr_existing + self.dtr_new,
                   self.static_existing, self.dtr_existing)


def _terms(cols: Sequence[int], coef: float) -> Dict[int, float]:
    return {c: coef for c in cols}


def _merge(*parts: Dict[int, float]) -> Dict[int, float]:
    out: Dict[int, float] = {}
    for part in parts:
        for c, v in part.items():
            out[c] = out.get(c, 0.0) + v
    return out


def linearize_line_capacity(problem: LinearProblem, flow: int, ratings: LineRatings,
                            line: Sequence[int] = (), dtr: Sequence[int] = (),
                            product: Optional[int] = None) -> List[int]:
    """|f| <= S_E(1 - XD) + S_N(XL - V) + D_E XD + D_N V for one hour.

    `line` and `dtr` are the columns summing to the built-line and DTR flags,
    `product` the column standing for their conjunction.
    """
    r = ratings
    body = _merge(
        _terms(dtr, r.static_existing - r.dtr_existing),
        _terms(line, -r.static_new),
        {product: r.static_new - r.dtr_new} if product is not None else {},
    )
    rows = []
    for sign in (1.0, -1.0):
        rows.append(problem.add_row(_merge({flow: sign}, body), LE, r.static_existing, "49"))
    return rows


def link_product(problem: LinearProblem, product: int, line: Sequence[int], dtr: Sequence[int]) -> List[int]:
    """v = XL and XD for binaries."""
    problem.tag_bound(product, "53")
    return [
        problem.add_row(_merge({product: 1.0}, _terms(line, -1.0)), LE, 0.0, "50"),
        problem.add_row(_merge({product: 1.0}, _terms(dtr, -1.0)), LE, 0.0, "51"),
        problem.add_row(_merge({product: 1.0}, _terms(line, -1.0), _terms(dtr, -1.0)), GE, -1.0, "52"),
    ]


def sssc_big_m(ratings_peak: float, cut_in: float) -> float:
    """Flow big-M: twice the largest rating, widened to cover the cut-in offset."""
    return max(2.0 * ratings_peak, ratings_peak + cut_in + 1e-3)


def linearize_sssc(problem: LinearProblem, flow: int, injection: int, units: Sequence[int],
                   above: int, below: int, reactance: float, voltage: float, cut_in: float,
                   max_units: Optional[int], flow_big_m: float, margin: float = 1e-4) -> List[int]:
    """Bound the series injection by the installed units and switch it off
    while |f| <= C.

    `above` may be 1 only when f >= C + margin and `below` only when
    f <= -C - margin; the injection may be nonzero only when one of them is set.
    Flows strictly inside (C, C + margin) stay feasible with the device off, so
    `margin` is the resolution of the cut-in. It has to exceed the integrality
    tolerance times `flow_big_m`, or a nearly-1 flag would switch the device on
    at |f| = C.
    """
    if margin <= 0:
        raise BuildError(f"SSSC cut-in margin must be positive, got {margin}")
    if max_units is None:
        raise BuildError("SSSC unit upper bound is not set")
    if voltage <= 0 or reactance == 0 or cut_in < 0:
        raise BuildError(f"invalid SSSC data: V={voltage}, X={reactance}, C={cut_in}")
    x = abs(reactance)
    per_unit = voltage / x
    big_delta = max(max_units + 1.0, max_units * voltage + 1.0) / x
    M = flow_big_m
    units_term = _terms(units, -per_unit)
    return [
        problem.add_row(_merge({injection: 1.0}, units_term), LE, 0.0, "59"),
        problem.add_row(_merge({injection: -1.0}, units_term), LE, 0.0, "59"),
        problem.add_row({injection: -1.0, above: -big_delta, below: -big_delta}, LE, 0.0, "60a"),
        problem.add_row({injection: 1.0, above: -big_delta, below: -big_delta}, LE, 0.0, "60b"),
        problem.add_row({flow: 1.0, above: -M}, LE, cut_in + margin, "61"),
        problem.add_row({flow: -1.0, above: M}, LE, M - cut_in - margin, "62"),
        problem.add_row({flow: -1.0, below: -M}, LE, cut_in + margin, "63"),
        problem.add_row({flow: 1.0, below: M}, LE, M - cut_in - margin, "64"),
    ]
