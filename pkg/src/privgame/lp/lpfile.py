"""Write a :class:`LinearProgram` in the CPLEX-style ``.lp`` text format."""

from __future__ import annotations

import io
import os
import re

import numpy as np

from .model import RELATION_SYMBOLS, LinearProgram

_NAME_OK = re.compile(r"[^A-Za-z0-9_.]")


def _names(lp: LinearProgram) -> list[str]:
    if lp.var_names is None:
        return [f"x{j}" for j in range(lp.num_vars)]
    return [_NAME_OK.sub("_", str(v)) for v in lp.var_names]


def _expr(coefs, idx, names) -> str:
    parts = []
    for k, (j, v) in enumerate(zip(idx, coefs)):
        sign = "-" if v < 0 else "+"
        mag = repr(abs(float(v)))
        if k == 0:
            parts.append(f"{'-' if v < 0 else ''}{mag} {names[j]}")
        else:
            parts.append(f"{sign} {mag} {names[j]}")
    return " ".join(parts) if parts else "0 " + (names[0] if names else "")


def _num(v: float) -> str:
    if np.isposinf(v):
        return "+inf"
    if np.isneginf(v):
        return "-inf"
    return repr(float(v))


def write_lp(lp: LinearProgram, target) -> None:
    """Write ``lp`` to a path or text stream (Objective, Subject To, Bounds, End)."""
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="ascii") as fh:
            write_lp(lp, fh)
        return
    names = _names(lp)
    out = target
    out.write(f"\\ {lp.num_vars} variables, {lp.num_constraints} constraints\n")
    out.write("Maximize\n" if lp.maximize else "Minimize\n")
    nz = np.flatnonzero(lp.objective)
    out.write(f" obj: {_expr(lp.objective[nz], nz, names)}\n")
    out.write("Subject To\n")
    A = lp.A
    for i in range(lp.num_constraints):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        sym = RELATION_SYMBOLS[int(lp.relations[i])]
        out.write(f" c{i}: {_expr(A.data[lo:hi], A.indices[lo:hi], names)} {sym} {_num(lp.rhs[i])}\n")
    out.write("Bounds\n")
    for j, name in enumerate(names):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo == 0.0 and np.isposinf(hi):
            continue
        if np.isneginf(lo) and np.isposinf(hi):
            out.write(f" {name} free\n")
        else:
            out.write(f" {_num(lo)} <= {name} <= {_num(hi)}\n")
    out.write("End\n")


def lp_to_string(lp: LinearProgram) -> str:
    buf = io.StringIO()
    write_lp(lp, buf)
    return buf.getvalue()
