"""CSV serialization of Newton traces and sweep results.

Floats are written with 17 significant digits so that every binary64 value
survives a write/read round trip unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .solver import NewtonTrace

TRACE_COLUMNS = ["k", "x_k", "residual", "step", "err", "t_k", "ratio_linear", "ratio_order"]
SWEEP_COLUMNS = ["x0_norm", "fraction", "converged", "iterations", "final_error", "envelope_ok",
                 "order_tail", "two_cycle", "q_bound_ok", "status"]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def parse_float(s: str) -> Optional[float]:
    return None if s == "" else float(s)


def trace_rows(trace: NewtonTrace, t: Optional[list] = None, p: Optional[float] = None) -> list:
    """One row per iterate; ratios compare consecutive errors ``||x_k - x*||``."""
    rows = []
    errs = trace.error_norms
    for k, x in enumerate(trace.iterates):
        row = {
            "k": k,
            "x_k": ";".join(fmt(c) for c in np.asarray(x).ravel()),
            "residual": trace.residual_norms[k],
            "step": trace.step_norms[k - 1] if k > 0 else None,
            "err": errs[k] if errs is not None else None,
            "t_k": t[k] if t is not None and k < len(t) else None,
            "ratio_linear": None,
            "ratio_order": None,
        }
        if errs is not None and k > 0 and errs[k - 1] > 0:
            row["ratio_linear"] = errs[k] / errs[k - 1]
            if p is not None:
                row["ratio_order"] = errs[k] / errs[k - 1] ** (p + 1)
        rows.append(row)
    return rows


def write_trace_csv(path, trace: NewtonTrace, t: Optional[list] = None,
                    p: Optional[float] = None, run: Optional[int] = None, append: bool = False) -> None:
    cols = (["run"] if run is not None else []) + TRACE_COLUMNS
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh)
        if not append:
            w.writerow(cols)
        for row in trace_rows(trace, t, p):
            vals = [row["k"], row["x_k"]] + [row[c] for c in TRACE_COLUMNS[2:]]
            out = [fmt(vals[0]), vals[1]] + [fmt(v) for v in vals[2:]]
            w.writerow(([str(run)] if run is not None else []) + out)


@dataclass
class TraceRecord:
    """A trace read back from CSV."""

    k: list
    iterates: list
    residual_norms: list
    step_norms: list
    error_norms: Optional[list]
    t: list
    ratio_linear: list
    ratio_order: list
    run: Optional[list] = None


def read_trace_csv(path) -> TraceRecord:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    errs = [parse_float(r["err"]) for r in rows]
    return TraceRecord(
        k=[int(r["k"]) for r in rows],
        iterates=[np.array([float(c) for c in r["x_k"].split(";")]) for r in rows],
        residual_norms=[float(r["residual"]) for r in rows],
        step_norms=[float(r["step"]) for r in rows if r["step"] != ""],
        error_norms=None if all(e is None for e in errs) else errs,
        t=[parse_float(r["t_k"]) for r in rows],
        ratio_linear=[parse_float(r["ratio_linear"]) for r in rows],
        ratio_order=[parse_float(r["ratio_order"]) for r in rows],
        run=[int(r["run"]) for r in rows] if rows and "run" in rows[0] else None,
    )


def write_sweep_csv(path, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for row in sorted(rows, key=lambda r: r["x0_norm"]):
            w.writerow([row["status"] if c == "status" else fmt(row.get(c)) for c in SWEEP_COLUMNS])


def read_sweep_csv(path) -> list:
    def conv(c, s):
        if s == "":
            return None
        if c in ("converged", "envelope_ok", "two_cycle", "q_bound_ok"):
            return s == "true"
        if c == "iterations":
            return int(s)
        if c == "status":
            return s
        return float(s)

    with open(path, newline="") as fh:
        return [{c: conv(c, r[c]) for c in SWEEP_COLUMNS} for r in csv.DictReader(fh)]

