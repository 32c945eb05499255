"""Experiment driver: config files, multi-seed runs, CSV artifacts.

Configs are flat ``key = value`` text (UTF-8, ``#`` comments, commas or
newlines between pairs).  A compatibility reader also accepts the positional
row format ``<name> <dims> <k> <h> [lo,hi] <p> <mesh> <q>``.  Command-line
flags override file values.  Exit codes: 0 success, 1 run failure, 2
configuration failure.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import objectives, report
from .anneal import AnnealConfig, run_baseline_mh, run_swiftnav
from .grid import DomainSpec

WORKERS_ENV = "GRIDANNEAL_WORKERS"
ALGORITHMS = ("swiftnav", "mh-baseline")
_ALGO_ALIASES = {"swiftnav": "swiftnav", "mh": "mh-baseline",
                 "mh-baseline": "mh-baseline", "both": "both"}


class ConfigError(ValueError):
    """Invalid experiment configuration; maps to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    k: int
    h: float
    dims: int | None = None
    domain: tuple[float, float] | None = None
    p: int = 50
    q: int = 30
    mesh: float = 2.0
    t0: float = 100.0
    decay: float = 0.95
    iterations: int = 200
    burn_in: int = 20
    seeds: tuple[int, ...] = (0,)
    algorithm: str = "swiftnav"
    workers: int | None = None
    rho: float | None = None
    resolution: int | None = None

    def validate(self) -> None:
        if not self.problem:
            raise ConfigError("problem: a problem name is required")
        if self.k < 1:
            raise ConfigError(f"k: exploration parameter must be >= 1, got {self.k}")
        if not self.h > 0:
            raise ConfigError(f"h: step size must be positive, got {self.h}")
        if self.dims is not None and self.dims < 1:
            raise ConfigError(f"dims: must be >= 1, got {self.dims}")
        if self.domain is not None and not self.domain[0] <= self.domain[1]:
            raise ConfigError(f"domain: needs lo <= hi, got {self.domain}")
        if self.p < 1 or self.q < 1:
            raise ConfigError(f"p/q: must be >= 1, got p={self.p} q={self.q}")
        if not self.mesh > 1:
            raise ConfigError(f"mesh: refinement factor must be > 1, got {self.mesh}")
        if not self.t0 > 0:
            raise ConfigError(f"T0: must be positive, got {self.t0}")
        if not 0 < self.decay < 1:
            raise ConfigError(f"decay: must lie in (0, 1), got {self.decay}")
        if self.iterations < 1:
            raise ConfigError(f"iterations: must be >= 1, got {self.iterations}")
        if self.burn_in < 0:
            raise ConfigError(f"burn-in: must be >= 0, got {self.burn_in}")
        if not self.seeds:
            raise ConfigError("seeds: at least one seed is required")
        if self.algorithm not in (*ALGORITHMS, "both"):
            raise ConfigError(f"algorithm: unknown selector {self.algorithm!r}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")
        if self.rho is not None and not self.rho > 0:
            raise ConfigError(f"rho: penalty weight must be positive, got {self.rho}")
        if self.resolution is not None and self.resolution < 2:
            raise ConfigError(f"resolution: must be >= 2, got {self.resolution}")


def _split_pairs(text: str) -> list[str]:
    fragments: list[str] = []
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0]
        depth, current = 0, []
        for ch in line:
            if ch == "[":
                depth += 1
            elif ch == "]":
                depth -= 1
            if ch == "," and depth == 0:
                fragments.append("".join(current))
                current = []
            else:
                current.append(ch)
        fragments.append("".join(current))
    return [f.strip() for f in fragments if f.strip()]


def _parse_domain(text: str) -> tuple[float, float]:
    match = re.fullmatch(r"\[\s*([^\s,\]]+)\s*,\s*([^\s,\]]+)\s*\]", text.strip())
    if not match:
        raise ConfigError(f"domain: expected [lo,hi], got {text!r}")
    try:
        return float(match.group(1)), float(match.group(2))
    except ValueError:
        raise ConfigError(f"domain: malformed number in {text!r}") from None


def _parse_seeds(text: str) -> tuple[int, ...]:
    text = text.strip()
    try:
        if ".." in text:
            first, last = text.split("..", 1)
            return tuple(range(int(first), int(last) + 1))
        if "," in text or " " in text:
            return tuple(int(tok) for tok in text.replace(",", " ").split())
        count = int(text)
        return tuple(range(count))
    except ValueError:
        raise ConfigError(f"seeds: malformed seed list {text!r}") from None


def _parse_number(key: str, value: str, cast):
    try:
        return cast(value)
    except ValueError:
        raise ConfigError(f"{key}: malformed number {value!r}") from None


_KEY_ALIASES = {
    "dimensions": "dims", "dim": "dims", "n": "dims",
    "mu": "mesh", "f": "mesh",
    "t0": "t0", "iters": "iterations",
    "burn-in": "burn_in", "burnin": "burn_in",
    "algo": "algorithm",
}

_INT_KEYS = {"dims", "k", "p", "q", "iterations", "burn_in", "workers", "resolution"}
_FLOAT_KEYS = {"h", "mesh", "t0", "decay", "rho"}


def _parse_positional_row(line: str) -> dict:
    domain_match = re.search(r"\[[^\]]*\]", line)
    if not domain_match:
        raise ConfigError(f"positional row needs a [lo,hi] domain: {line!r}")
    domain = _parse_domain(domain_match.group(0))
    rest = (line[:domain_match.start()] + " " + line[domain_match.end():]).split()
    if len(rest) != 7:
        raise ConfigError(
            "positional row must read '<name> <dims> <k> <h> [lo,hi] <p> <mesh> <q>', "
            f"got {line!r}")
    name, dims, k, h, p, mesh, q = rest
    return {
        "problem": name.lower(),
        "dims": _parse_number("dims", dims, int),
        "k": _parse_number("k", k, int),
        "h": _parse_number("h", h, float),
        "domain": domain,
        "p": _parse_number("p", p, int),
        "mesh": _parse_number("mesh", mesh, float),
        "q": _parse_number("q", q, int),
    }


def parse_config(text: str) -> ExperimentConfig:
    """Parse experiment configuration text (key=value or positional row)."""
    values: dict = {}
    for pair in _split_pairs(text):
        if "=" not in pair:
            values.update(_parse_positional_row(pair))
            continue
        key, _, raw = pair.partition("=")
        key = key.strip().lower()
        key = _KEY_ALIASES.get(key, key)
        raw = raw.strip()
        if not raw:
            raise ConfigError(f"{key}: empty value")
        if key == "problem":
            values[key] = raw
        elif key == "domain":
            values[key] = _parse_domain(raw)
        elif key == "seeds":
            values[key] = _parse_seeds(raw)
        elif key == "seed":
            values["seeds"] = (_parse_number("seed", raw, int),)
        elif key == "algorithm":
            values[key] = _normalize_algorithm(raw)
        elif key in _INT_KEYS:
            values[key] = _parse_number(key, raw, int)
        elif key in _FLOAT_KEYS:
            values[key] = _parse_number(key, raw, float)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    if "problem" not in values:
        raise ConfigError("problem: a problem name is required")
    if "k" not in values:
        raise ConfigError("k: exploration parameter is required")
    if "h" not in values:
        raise ConfigError("h: step size is required")
    config = ExperimentConfig(**values)
    config.validate()
    return config


def _normalize_algorithm(raw: str) -> str:
    key = raw.strip().lower()
    if key not in _ALGO_ALIASES:
        raise ConfigError(f"algorithm: unknown selector {raw!r}")
    return _ALGO_ALIASES[key]


def serialize_config(config: ExperimentConfig) -> str:
    """Emit a config file that parses back to an equal configuration."""
    lines = [f"problem = {config.problem}", f"k = {config.k}", f"h = {config.h!r}"]
    if config.dims is not None:
        lines.append(f"dims = {config.dims}")
    if config.domain is not None:
        lines.append(f"domain = [{config.domain[0]!r},{config.domain[1]!r}]")
    lines += [f"p = {config.p}", f"q = {config.q}", f"mesh = {config.mesh!r}",
              f"t0 = {config.t0!r}", f"decay = {config.decay!r}",
              f"iterations = {config.iterations}", f"burn_in = {config.burn_in}",
              f"seeds = {','.join(str(s) for s in config.seeds)}",
              f"algorithm = {config.algorithm}"]
    if config.workers is not None:
        lines.append(f"workers = {config.workers}")
    if config.rho is not None:
        lines.append(f"rho = {config.rho!r}")
    if config.resolution is not None:
        lines.append(f"resolution = {config.resolution}")
    return "\n".join(lines) + "\n"


def build_objective(config: ExperimentConfig) -> objectives.Objective:
    options: dict = {}
    if config.rho is not None:
        options["rho"] = config.rho
    if config.resolution is not None:
        options["resolution"] = config.resolution
    try:
        return objectives.get_objective(config.problem, dims=config.dims, **options)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def build_domain(config: ExperimentConfig, objective: objectives.Objective) -> DomainSpec:
    if config.domain is None:
        lower, upper = objective.domain.lower, objective.domain.upper
    else:
        lower = np.full(objective.n, config.domain[0])
        upper = np.full(objective.n, config.domain[1])
    try:
        return DomainSpec(lower, upper, base_step=config.h, exploration=config.k)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _anneal_config(config: ExperimentConfig) -> AnnealConfig:
    return AnnealConfig(iterations=config.iterations, t0=config.t0,
                        decay=config.decay, p=config.p, q=config.q,
                        mesh_factor=config.mesh, burn_in=config.burn_in)


def _trace_path(out_dir: Path, config: ExperimentConfig, algorithm: str,
                seed: int) -> Path:
    problem = re.sub(r"[^A-Za-z0-9_.-]+", "_", config.problem)
    return out_dir / f"trace_{problem}_{algorithm}_seed{seed}.csv"


def _run_single(config: ExperimentConfig, algorithm: str, seed: int,
                out_dir: str) -> dict:
    """Run one (algorithm, seed) pair and write its trace CSV."""
    objective = build_objective(config)
    domain = build_domain(config, objective)
    runner = run_swiftnav if algorithm == "swiftnav" else run_baseline_mh
    trace = runner(objective, domain, _anneal_config(config), seed=seed)
    f_star = objective.known_optimum
    path = _trace_path(Path(out_dir), config, algorithm, seed)
    report.write_trace_csv(trace, path, f_star=f_star)
    best = trace.best
    return {
        "algorithm": algorithm,
        "seed": seed,
        "best_value": best,
        "log_regret": report.log_regret(best, f_star) if f_star is not None else math.nan,
        "elapsed_s": float(trace.elapsed_s[-1]),
        "best_value_column": np.asarray(trace.best_value),
        "value_column": np.asarray(trace.value),
        "best_point": np.asarray(trace.best_point),
    }


def run_experiment(config: ExperimentConfig, out_dir) -> list[dict]:
    """Run all seeds (and algorithms) of an experiment; write artifacts.

    Per-seed trace CSVs, a per-algorithm aggregate of the best-value column
    (burn-in applied), and a summary CSV with per-seed rows plus median/best
    rows land in ``out_dir``.  Seeds run in parallel when workers allow; the
    numeric artifacts do not depend on the worker count.
    """
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    algorithms = list(ALGORITHMS) if config.algorithm == "both" else [config.algorithm]
    workers = config.workers or int(os.environ.get(WORKERS_ENV, "1"))

    jobs = [(algorithm, seed) for algorithm in algorithms for seed in config.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_single_star,
                                    [(config, a, s, str(out)) for a, s in jobs]))
    else:
        results = [_run_single(config, a, s, str(out)) for a, s in jobs]

    summary_rows = []
    for algorithm in algorithms:
        rows = [r for r in results if r["algorithm"] == algorithm]
        mean, stderr = report.aggregate([r["best_value_column"] for r in rows])
        report.write_aggregate_csv(
            mean, stderr, out / f"aggregate_{algorithm}.csv",
            burn_in=config.burn_in,
            label=f"{config.problem} {algorithm}: mean best value over "
                  f"{len(rows)} seeds")
        bests = [r["best_value"] for r in rows]
        summary_rows.extend(rows)
        summary_rows.append({"algorithm": algorithm, "seed": "median",
                             "best_value": statistics.median(bests),
                             "log_regret": math.nan, "elapsed_s": math.nan})
        summary_rows.append({"algorithm": algorithm, "seed": "best",
                             "best_value": min(bests),
                             "log_regret": math.nan, "elapsed_s": math.nan})

    with (out / "summary.csv").open("w", encoding="utf-8", newline="") as handle:
        handle.write("algorithm,seed,best_value,log_regret,elapsed_s\n")
        for row in summary_rows:
            handle.write(f"{row['algorithm']},{row['seed']},"
                         f"{row['best_value']:.12g},{row['log_regret']:.12g},"
                         f"{row['elapsed_s']:.12g}\n")
    return results


def _run_single_star(args):
    return _run_single(*args)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridanneal",
        description="Grid-annealed global optimization experiments")
    parser.add_argument("--config", required=True, help="experiment config file")
    parser.add_argument("--seed", type=int, help="run a single seed")
    parser.add_argument("--seeds", help="seed range A..B or list, or a count")
    parser.add_argument("--iters", type=int, help="iteration budget override")
    parser.add_argument("--workers", type=int,
                        help=f"parallel seed workers (default ${WORKERS_ENV} or 1)")
    parser.add_argument("--algo", help="swiftnav | mh | both")
    parser.add_argument("--out", default="runs", help="output directory")
    parser.add_argument("--burn-in", type=int, dest="burn_in",
                        help="iterations excluded from aggregate CSVs")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
        overrides: dict = {}
        if args.seed is not None:
            overrides["seeds"] = (args.seed,)
        if args.seeds is not None:
            overrides["seeds"] = _parse_seeds(args.seeds)
        if args.iters is not None:
            overrides["iterations"] = args.iters
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.algo is not None:
            overrides["algorithm"] = _normalize_algorithm(args.algo)
        if args.burn_in is not None:
            overrides["burn_in"] = args.burn_in
        if overrides:
            config = replace(config, **overrides)
        config.validate()
        objective = build_objective(config)
        build_domain(config, objective)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        results = run_experiment(config, args.out)
    except Exception as exc:  # noqa: BLE001 - surface any run failure as exit 1
        print(f"run error: {exc}", file=sys.stderr)
        return 1

    for row in results:
        print(f"{row['algorithm']} seed={row['seed']}: "
              f"best={row['best_value']:.9g} "
              f"log_regret={row['log_regret']:.6g} "
              f"elapsed={row['elapsed_s']:.1f}s")
    print(f"artifacts written to {Path(args.out).resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
