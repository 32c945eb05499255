"""Run metrics and CSV artifacts: log regret, multi-run aggregation, writers.

Regret values are clamped away from -inf so emitted series stay finite even
when a run lands exactly on the optimum; the clamp is documented in a comment
line at the top of every CSV.  Aggregation reports the per-iteration mean and
standard error across runs.  All files are UTF-8, '.'-decimal, newline
terminated, with '#'-prefixed comment lines and at least nine significant
digits per number.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .anneal import RunTrace

REGRET_CLAMP = 1e-12
_FSTAR_SLACK = 1e-9


def log_regret(f_value: float, f_star: float) -> float:
    """Natural log of the optimality gap, clamped at ``1e-12``.

    A value more than ``1e-9`` below ``f_star`` signals a wrong reference
    optimum (or an infeasible report) and raises.
    """
    if f_value < f_star - _FSTAR_SLACK:
        raise ValueError(
            f"objective value {f_value!r} lies below the reference optimum "
            f"{f_star!r}; wrong f* or infeasible report")
    return math.log(max(f_value - f_star, REGRET_CLAMP))


def regret_series(values: np.ndarray, f_star: float) -> np.ndarray:
    return np.array([log_regret(float(v), f_star) for v in values])


def aggregate(traces: list, column: str = "best_value") -> tuple[np.ndarray, np.ndarray]:
    """Per-iteration mean and standard error of one trace column.

    ``column`` may be any per-iteration RunTrace field name.  Standard error
    is the sample standard deviation over runs divided by ``sqrt(#runs)``;
    a single run yields zeros.
    """
    if not traces:
        raise ValueError("need at least one trace to aggregate")
    columns = [np.asarray(getattr(t, column) if isinstance(t, RunTrace) else t)
               for t in traces]
    length = columns[0].size
    if any(col.size != length for col in columns):
        raise ValueError("traces have ragged lengths; cannot aggregate")
    stacked = np.vstack(columns)
    mean = stacked.mean(axis=0)
    if stacked.shape[0] == 1:
        return mean, np.zeros(length)
    stderr = stacked.std(axis=0, ddof=1) / math.sqrt(stacked.shape[0])
    return mean, stderr


def _fmt(x: float) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.12g}"


TRACE_COLUMNS = ("iteration", "value", "best_value", "log_regret", "step_size",
                 "temperature", "elapsed_s")


def write_trace_csv(trace: RunTrace, path, f_star: float | None = None,
                    burn_in: int = 0) -> None:
    """Write one run trace; regret column is NaN when no optimum is known.

    ``burn_in`` drops the leading iterations from the emitted rows only; it
    never changes any computed value.
    """
    if f_star is None:
        regret = np.full(len(trace), np.nan)
    else:
        regret = regret_series(trace.value, f_star)
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(f"# log_regret = ln(max(value - f_star, {REGRET_CLAMP:g})); "
                         f"f_star = {'unknown' if f_star is None else _fmt(f_star)}\n")
            handle.write(",".join(TRACE_COLUMNS) + "\n")
            for row in range(len(trace)):
                if trace.iteration[row] < burn_in:
                    continue
                handle.write(",".join([
                    str(int(trace.iteration[row])),
                    _fmt(trace.value[row]),
                    _fmt(trace.best_value[row]),
                    _fmt(regret[row]),
                    _fmt(trace.step_size[row]),
                    _fmt(trace.temperature[row]),
                    _fmt(trace.elapsed_s[row]),
                ]) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing trace CSV to {path}: {exc}") from exc


def write_aggregate_csv(mean: np.ndarray, stderr: np.ndarray, path,
                        burn_in: int = 0, label: str = "aggregate") -> None:
    """Write per-iteration mean and standard error columns."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(f"# {label}; standard error = sample std / sqrt(runs); "
                         f"first {burn_in} iterations excluded\n")
            handle.write("iteration,mean,stderr\n")
            for t in range(mean.size):
                if t < burn_in:
                    continue
                handle.write(f"{t},{_fmt(mean[t])},{_fmt(stderr[t])}\n")
    except OSError as exc:
        raise OSError(f"failed writing aggregate CSV to {path}: {exc}") from exc


def read_csv(path) -> dict[str, np.ndarray]:
    """Parse a CSV written by this module back into named float columns."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        rows = [line.rstrip("\n") for line in handle
                if line.strip() and not line.startswith("#")]
    header = rows[0].split(",")
    data = [[float(cell) for cell in line.split(",")] for line in rows[1:]]
    matrix = np.array(data) if data else np.empty((0, len(header)))
    return {name: matrix[:, idx] for idx, name in enumerate(header)}
