"""Problem definitions read from TOML.

A problem file names a registry map and describes ``h``::

    map = "rosenbrock"
    x0 = [-1.2, 1.0]          # optional, registry default otherwise

    [h]
    family = "piecewise_quadratic"   # or max_affine, l1, abs, sum_of_squares
    centers = [[0.0, 0.0], [1.0, 0.0]]
    matrices = [[[1.0, 0.0], [0.0, 1.0]], [[-1.0, 0.0], [0.0, -1.0]]]
    offsets = [0.0, 0.0]

Matrices are row-major nested lists. A file holding only the ``[h]`` keys at
top level is accepted wherever an h specification is expected.
"""

from __future__ import annotations

import sys

import numpy as np

from .driver import Problem
from .errors import ContractViolation
from .oracle import MaxAffine, PiecewiseQuadratic, SelectionOracle, abs_value, l1_norm, sum_of_squares

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def read_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def selection_from_table(table: dict, p: int) -> SelectionOracle:
    family = table.get("family")
    if family == "piecewise_quadratic":
        oracle = PiecewiseQuadratic(table["centers"], table["matrices"], table["offsets"])
    elif family == "max_affine":
        oracle = MaxAffine(table["slopes"], table.get("intercepts"))
    elif family == "l1":
        oracle = l1_norm(p)
    elif family == "abs":
        oracle = abs_value()
    elif family == "sum_of_squares":
        oracle = sum_of_squares(p)
    else:
        raise ContractViolation(f"unknown h family {family!r}")
    if oracle.dimension != p:
        raise ContractViolation(f"h acts on R^{oracle.dimension} but the map has p={p}")
    return oracle


def h_table(data: dict) -> dict:
    return data["h"] if "h" in data else data


def problem_from_table(data: dict, map_name: str | None = None, h: dict | None = None) -> Problem:
    from .bench.registry import get_map

    name = map_name or data.get("map")
    if name is None:
        raise ContractViolation("problem needs a registry map name")
    rmap = get_map(name)
    for key, want in (("n", rmap.n), ("p", rmap.p)):
        if key in data and int(data[key]) != want:
            raise ContractViolation(f"{name} has {key}={want}, file says {data[key]}")
    x0 = np.asarray(data.get("x0", rmap.x0), dtype=float)
    oracle = selection_from_table(h if h is not None else h_table(data), rmap.p)
    return Problem(fun=rmap.fun, oracle=oracle, x0=x0, n=rmap.n, p=rmap.p, name=name,
                   jacobian=rmap.jacobian)


def load_problem(path) -> Problem:
    return problem_from_table(read_toml(path))


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(u) for u in v) + "]"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def dump_toml(data: dict) -> str:
    """Minimal TOML writer for flat keys plus one level of tables."""
    lines, tables = [], []
    for key, val in data.items():
        if isinstance(val, dict):
            tables.append((key, val))
        else:
            lines.append(f"{key} = {_fmt(val)}")
    for name, table in tables:
        lines.append(f"\n[{name}]")
        lines.extend(f"{k} = {_fmt(v)}" for k, v in table.items())
    return "\n".join(lines) + "\n"
