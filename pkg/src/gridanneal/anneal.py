"""Annealed optimization loops: coordinate sweeps, step refinement, baseline.

The main driver anneals a Boltzmann distribution over the discretized box.
Each iteration performs one synchronous sweep: every coordinate samples a new
value from its candidate window (all other coordinates frozen at their
previous values) through the kernel in :mod:`gridanneal.walker`, then the
objective is evaluated once at the assembled point and the step-size
controller decides whether to refine, deepen, or restore the mesh.

Randomness is injected through per-(iteration, dimension) streams derived
deterministically from the run seed, so results do not depend on how many
workers execute the sweep or in which order.  A classic single-proposal
Metropolis annealer on the same grid serves as the comparison baseline.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import walker
from .grid import DomainSpec, sample_initial
from .walker import _MIN_EXPONENT, NumericError, WeightTable

# Stream tags keeping the runs' RNG consumers disjoint.
_STREAM_INIT = 0
_STREAM_SWEEP = 1
_STREAM_MH = 2


@dataclass(frozen=True)
class AnnealConfig:
    """Run parameters shared by the main optimizer and the baseline."""

    iterations: int = 200
    t0: float = 100.0
    decay: float = 0.95
    p: int = 50
    q: int = 30
    mesh_factor: float = 2.0
    burn_in: int = 20
    workers: int = 1

    def validate(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not self.t0 > 0:
            raise ValueError(f"t0 must be positive, got {self.t0}")
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay must lie in (0, 1), got {self.decay}")
        if self.p < 1 or self.q < 1:
            raise ValueError(f"p and q must be >= 1, got p={self.p} q={self.q}")
        if not self.mesh_factor > 1.0:
            raise ValueError(f"mesh_factor must be > 1, got {self.mesh_factor}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class AnnealState:
    """Mutable optimizer state: current point, incumbent, clock."""

    current: np.ndarray
    best_point: np.ndarray
    best_value: float
    iteration: int
    temperature: float


@dataclass(frozen=True)
class RefineState:
    """State of the step-size controller.

    The controller shrinks the step by ``mesh_factor`` once ``p`` iterations
    have passed without improving on the incumbent while the current value
    sits inside the stagnation band around it.  While the step is reduced, a
    second counter waits for ``q`` further non-improving iterations and then
    either restores the base step (no real progress since the previous
    benchmark) or shrinks again (the refinement paid off).
    """

    step: float
    base_step: float
    best_value: float
    old_benchmark: float
    p: int = 50
    q: int = 30
    mesh_factor: float = 2.0
    reduced_flag: bool = False
    iteration_count: int = 0
    reduced_iteration_count: int = 0
    interval_floor: float = 1e-3


def stagnation_interval(best_value: float, floor: float = 1e-3) -> tuple[float, float]:
    """Closed band around the incumbent counting as "no significant change".

    Half-width is 10% of ``|best_value|``, floored so the band stays
    well-defined for incumbents at or near zero.
    """
    half = max(0.1 * abs(best_value), floor)
    return best_value - half, best_value + half


def adapt_refine(refine: RefineState, current_value: float) -> RefineState:
    """Advance the step-size controller by one observed objective value."""
    step = refine.step
    flag = refine.reduced_flag
    stale = refine.iteration_count
    stale_reduced = refine.reduced_iteration_count
    best = refine.best_value
    benchmark = refine.old_benchmark

    if current_value < best:
        benchmark = best
        stale = 0
        best = current_value
        if flag:
            stale_reduced = 0
    elif flag:
        stale_reduced += 1
    else:
        stale += 1

    lo, hi = stagnation_interval(best, refine.interval_floor)
    # Entering the reduced phase is a transition: while the flag is up, the
    # second counter below must be allowed to accumulate, otherwise the
    # restore branch is unreachable and the step collapses to zero.
    if not flag and stale >= refine.p and lo <= current_value <= hi:
        step = step / refine.mesh_factor
        flag = True
        stale_reduced = 0
    if flag and stale_reduced >= refine.q:
        if lo <= benchmark <= hi:
            step = refine.base_step
            flag = False
            stale_reduced = 0
        else:
            step = step / refine.mesh_factor
            stale_reduced = 0

    return replace(refine, step=step, reduced_flag=flag, iteration_count=stale,
                   reduced_iteration_count=stale_reduced, best_value=best,
                   old_benchmark=benchmark)


@dataclass
class RunTrace:
    """Per-iteration record of one run plus the final incumbent."""

    iteration: np.ndarray
    value: np.ndarray
    best_value: np.ndarray
    step_size: np.ndarray
    temperature: np.ndarray
    elapsed_s: np.ndarray
    best_point: np.ndarray
    n_evals: int
    burn_in: int = 0

    @property
    def best(self) -> float:
        return float(self.best_value[-1])

    def __len__(self) -> int:
        return self.iteration.size


def temperature_at(t: int, t0: float, decay: float) -> float:
    """Exponential cooling schedule ``t0 * decay**t``."""
    if not t0 > 0:
        raise ValueError(f"t0 must be positive, got {t0}")
    if not 0.0 < decay < 1.0:
        raise ValueError(f"decay must lie in (0, 1), got {decay}")
    return t0 * decay ** t


def _sweep_zetas(seed: int, t: int, n: int) -> np.ndarray:
    """One open-interval uniform draw per dimension from dedicated streams."""
    zetas = np.empty(n)
    for i in range(n):
        rng = np.random.default_rng((seed, _STREAM_SWEEP, t, i))
        z = rng.random()
        while z == 0.0:
            z = rng.random()
        zetas[i] = z
    return zetas


def gibbs_sweep(point: np.ndarray, center_value: float, objective, domain: DomainSpec,
                *, step: float, k: int, temperature: float, seed: int, t: int,
                workers: int = 1) -> tuple[np.ndarray, int]:
    """Sample a full new point, one coordinate at a time against ``point``.

    Every dimension is updated independently with all other coordinates
    frozen at their ``point`` values, so the n updates can run in any order
    or in parallel without changing the result.  ``center_value`` is the
    already-known objective value at ``point`` (each window reuses it for its
    center slot).  Returns the assembled new point and the number of fresh
    objective evaluations, which is at most ``n * (2k - 1)``.
    """
    if math.isnan(center_value):
        raise RuntimeError("objective is NaN at the current state; cannot sweep")
    n = point.size
    offsets = step * np.arange(-(k - 1), k, dtype=float)
    width = offsets.size
    c = k - 1
    windows = point[:, None] + offsets[None, :]
    mask = (windows >= domain.lower[:, None]) & (windows <= domain.upper[:, None])
    mask[:, c] = True
    zetas = _sweep_zetas(seed, t, n)

    if getattr(objective, "eval_many", None) is not None:
        return _sweep_batched(point, center_value, objective, windows, mask,
                              k, temperature, zetas)
    return _sweep_lazy(point, center_value, objective, windows, mask,
                       k, temperature, zetas, workers)


def _sweep_batched(point, center_value, objective, windows, mask, k, temperature,
                   zetas):
    n, width = windows.shape
    c = k - 1
    values = np.full((n, width), np.inf)
    values[:, c] = center_value
    todo = mask.copy()
    todo[:, c] = False
    dim_idx, slot_idx = np.nonzero(todo)
    n_evals = int(dim_idx.size)

    # Candidate rows differ from `point` in a single coordinate; build them in
    # chunks to bound peak memory at large n.
    chunk = max(1, int(2e7) // max(n, 1))
    for start in range(0, dim_idx.size, chunk):
        d = dim_idx[start:start + chunk]
        m = slot_idx[start:start + chunk]
        candidates = np.repeat(point[None, :], d.size, axis=0)
        candidates[np.arange(d.size), d] = windows[d, m]
        values[d, m] = objective.eval_many(candidates)

    feasible = np.isfinite(values) & mask
    shifted = np.where(feasible, values, np.nan)
    with np.errstate(invalid="ignore", all="ignore"):
        shift = np.nanmin(shifted, axis=1)
        exponents = np.maximum(-(values - shift[:, None]) / temperature,
                               _MIN_EXPONENT)
        weights = np.exp(exponents)
    weights[~feasible] = 0.0

    # Block masses and the per-slot transition probabilities, all rows at
    # once; with the conditioning slot at the center, block l covers slots
    # [l - k + 1, l] for l = k-1 .. 2k-2 and no boundary clamping occurs.
    prefix = np.concatenate([np.zeros((n, 1)), np.cumsum(weights, axis=1)], axis=1)
    masses = prefix[:, k:2 * k] - prefix[:, 0:k]
    inv_pad = np.concatenate([np.zeros((n, 1)), np.cumsum(1.0 / masses, axis=1)],
                             axis=1)
    r = np.arange(width)
    hi = np.minimum(r - c, 0) + k
    lo = np.maximum(r - c, 0)
    probs = weights / k * (inv_pad[:, hi] - inv_pad[:, lo])

    cumulative = np.cumsum(probs, axis=1)
    total = cumulative[:, -1]
    if np.any(np.abs(total - 1.0) > 1e-9):
        worst = int(np.argmax(np.abs(total - 1.0)))
        raise NumericError(
            f"window distribution for dimension {worst} sums to {total[worst]!r}")
    selected = (cumulative < zetas[:, None]).sum(axis=1)
    selected[selected >= width] = c
    new_point = windows[np.arange(n), selected]
    return new_point, n_evals


def _sweep_lazy(point, center_value, objective, windows, mask, k, temperature,
                zetas, workers):
    n, width = windows.shape
    c = k - 1

    def update(i: int) -> tuple[float, int]:
        def value_fn(m: int) -> float:
            candidate = point.copy()
            candidate[i] = windows[i, m]
            return objective(candidate)

        table = WeightTable(width, value_fn=value_fn, temperature=temperature,
                            blocked=~mask[i])
        table.set_value(c, center_value)
        idx = walker.sample_window(c, k, table, zetas[i])
        return float(windows[i, idx]), table.evaluations

    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(update, range(n)))
    else:
        results = [update(i) for i in range(n)]
    new_point = np.array([coord for coord, _ in results])
    n_evals = sum(evals for _, evals in results)
    return new_point, n_evals


def _resolve(objective, domain: DomainSpec | None) -> DomainSpec:
    if domain is None:
        domain = getattr(objective, "domain", None)
    if domain is None:
        raise ValueError("no domain given and the objective carries none")
    return domain


def _evaluate(objective, point: np.ndarray, where: str) -> float:
    value = float(objective(point))
    if math.isnan(value):
        raise RuntimeError(f"objective returned NaN at {where}: {point!r}")
    return value


def run_swiftnav(objective, domain: DomainSpec | None = None,
                 config: AnnealConfig | None = None, seed: int = 0) -> RunTrace:
    """Run the windowed-kernel annealer and return its trace.

    The domain's ``exploration``/``base_step`` set the window shape; the
    config sets the cooling schedule, the refinement thresholds, and the
    iteration budget.  Identical (config, seed) pairs produce identical
    traces regardless of worker count.
    """
    domain = _resolve(objective, domain)
    config = config or AnnealConfig()
    config.validate()
    k = domain.exploration
    started = time.perf_counter()

    rng = np.random.default_rng((seed, _STREAM_INIT))
    current = sample_initial(domain, rng)
    current_value = _evaluate(objective, current, "the initial point")
    n_evals = 1

    state = AnnealState(current=current, best_point=current.copy(),
                        best_value=current_value, iteration=0,
                        temperature=config.t0)
    refine = RefineState(step=domain.base_step, base_step=domain.base_step,
                         best_value=current_value, old_benchmark=current_value,
                         p=config.p, q=config.q, mesh_factor=config.mesh_factor)

    rows = [(0, current_value, state.best_value, refine.step, config.t0,
             time.perf_counter() - started)]
    for t in range(config.iterations):
        temperature = temperature_at(t, config.t0, config.decay)
        state.temperature = temperature
        new_point, evals = gibbs_sweep(
            state.current, current_value, objective, domain,
            step=refine.step, k=k, temperature=temperature,
            seed=seed, t=t, workers=config.workers)
        current_value = _evaluate(objective, new_point, f"iteration {t + 1}")
        n_evals += evals + 1
        state.current = new_point
        state.iteration = t + 1
        if current_value < state.best_value:
            state.best_value = current_value
            state.best_point = new_point.copy()
        refine = adapt_refine(refine, current_value)
        rows.append((t + 1, current_value, state.best_value, refine.step,
                     temperature_at(t + 1, config.t0, config.decay),
                     time.perf_counter() - started))

    return _trace_from_rows(rows, state.best_point, n_evals, config.burn_in)


def acceptance_probability(delta: float, temperature: float) -> float:
    """Metropolis acceptance probability ``min(1, exp(-delta / T))``."""
    if delta <= 0:
        return 1.0
    if not temperature > 0:
        return 0.0
    exponent = delta / temperature
    return math.exp(-exponent) if exponent < 745.0 else 0.0


def run_baseline_mh(objective, domain: DomainSpec | None = None,
                    config: AnnealConfig | None = None, seed: int = 0) -> RunTrace:
    """Classic simulated annealing on the same grid, for comparisons.

    One uniformly chosen single-coordinate move of one base step per
    iteration, Metropolis acceptance, the same cooling schedule, and no mesh
    refinement.  Out-of-box proposals are rejected without an evaluation.
    """
    domain = _resolve(objective, domain)
    config = config or AnnealConfig()
    config.validate()
    started = time.perf_counter()

    init_rng = np.random.default_rng((seed, _STREAM_INIT))
    current = sample_initial(domain, init_rng)
    current_value = _evaluate(objective, current, "the initial point")
    n_evals = 1
    best_point, best_value = current.copy(), current_value

    rng = np.random.default_rng((seed, _STREAM_MH))
    rows = [(0, current_value, best_value, domain.base_step, config.t0,
             time.perf_counter() - started)]
    for t in range(config.iterations):
        temperature = temperature_at(t, config.t0, config.decay)
        dim = int(rng.integers(domain.dims))
        direction = 1.0 if rng.integers(2) else -1.0
        proposal = current.copy()
        proposal[dim] += direction * domain.base_step
        if domain.lower[dim] <= proposal[dim] <= domain.upper[dim]:
            value = _evaluate(objective, proposal, f"iteration {t + 1}")
            n_evals += 1
            delta = value - current_value
            if delta <= 0 or rng.random() < acceptance_probability(delta, temperature):
                current, current_value = proposal, value
                if current_value < best_value:
                    best_value = current_value
                    best_point = current.copy()
        rows.append((t + 1, current_value, best_value, domain.base_step,
                     temperature_at(t + 1, config.t0, config.decay),
                     time.perf_counter() - started))

    return _trace_from_rows(rows, best_point, n_evals, config.burn_in)


def _trace_from_rows(rows, best_point, n_evals, burn_in) -> RunTrace:
    columns = list(zip(*rows))
    return RunTrace(
        iteration=np.array(columns[0], dtype=int),
        value=np.array(columns[1]),
        best_value=np.array(columns[2]),
        step_size=np.array(columns[3]),
        temperature=np.array(columns[4]),
        elapsed_s=np.array(columns[5]),
        best_point=np.asarray(best_point, dtype=float),
        n_evals=int(n_evals),
        burn_in=int(burn_in),
    )
