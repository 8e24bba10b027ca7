"""Plain-text sparse standard form (.lpt).

Layout, one record per line, fields separated by single spaces:

    lpt 1
    name <problem name>
    sense min|max
    constant <value>
    columns <n>
    c <j> <name> <cost> <lower> <upper> <integer 0|1>     (n lines)
    rows <m>
    r <i> <L|E|G> <rhs> <tag>                             (m lines)
    nonzeros <k>
    a <i> <j> <value>                                     (k lines)

Infinite bounds are written as inf / -inf. Floats use repr, so a written
problem reads back bit-identical.
"""
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
import scipy.sparse as sp

from src.formulation.model import BuildError
from src.solvers.standard_form import StandardFormLP

logger = logging.getLogger("formulation.export")


def write_lpt(lp: StandardFormLP, path: Union[str, Path], name: str = "problem") -> Path:
    path = Path(path)
    names = lp.col_names or [f"x{j}" for j in range(lp.n_cols)]
    tags = lp.row_tags or ["-"] * lp.n_rows
    coo = lp.A.tocoo()
    lines: List[str] = [
        "lpt 1",
        f"name {name.replace(' ', '_')}",
        f"sense {'max' if lp.maximize else 'min'}",
        f"constant {lp.constant!r}",
        f"columns {lp.n_cols}",
    ]
    for j in range(lp.n_cols):
        lines.append(f"c {j} {names[j].replace(' ', '_')} {float(lp.c[j])!r} {float(lp.lb[j])!r} "
                     f"{float(lp.ub[j])!r} {int(lp.integrality[j])}")
    lines.append(f"rows {lp.n_rows}")
    for i in range(lp.n_rows):
        lines.append(f"r {i} {lp.senses[i]} {float(lp.b[i])!r} {tags[i]}")
    lines.append(f"nonzeros {coo.nnz}")
    for i, j, v in zip(coo.row, coo.col, coo.data):
        lines.append(f"a {int(i)} {int(j)} {float(v)!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    logger.info(f"✅ Wrote {lp.n_rows}x{lp.n_cols} problem to {path}")
    return path


def read_lpt(path: Union[str, Path]) -> StandardFormLP:
    path = Path(path)
    records = [line.split() for line in path.read_text().splitlines() if line.strip()]
    if not records or records[0] != ["lpt", "1"]:
        raise BuildError(f"{path}: not an lpt file")
    try:
        header = {r[0]: r[1] for r in records[1:] if r[0] in ("name", "sense", "constant", "columns", "rows")}
        n, m = int(header["columns"]), int(header["rows"])
        c, lb, ub = np.zeros(n), np.zeros(n), np.zeros(n)
        integrality = np.zeros(n, dtype=bool)
        names: List[str] = [""] * n
        senses: List[str] = [""] * m
        b = np.zeros(m)
        tags: List[str] = [""] * m
        rows, cols, vals = [], [], []
        for r in records:
            if r[0] == "c":
                j = int(r[1])
                names[j], c[j], lb[j], ub[j] = r[2], float(r[3]), float(r[4]), float(r[5])
                integrality[j] = r[6] == "1"
            elif r[0] == "r":
                i = int(r[1])
                senses[i], b[i], tags[i] = r[2], float(r[3]), r[4]
            elif r[0] == "a":
                rows.append(int(r[1]))
                cols.append(int(r[2]))
                vals.append(float(r[3]))
    except (KeyError, IndexError, ValueError) as e:
        raise BuildError(f"{path}: malformed lpt record ({e})") from e
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    return StandardFormLP(
        c=c, A=A, senses=senses, b=b, lb=lb, ub=ub, integrality=integrality,
        maximize=header["sense"] == "max", constant=float(header["constant"]),
        row_tags=tags, col_names=names,
    )
