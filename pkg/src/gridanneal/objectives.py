"""Benchmark objectives: test surfaces, penalty wrappers, minimax and SDP.

Every objective is a pure callable over a box domain; constrained problems
enter through quadratic penalties so the annealer only ever sees a plain
scalar function.  All built-ins support batched evaluation over rows of a
2-D array, which the sweep uses to score whole candidate sets at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DomainSpec
from .sdpa import SdpProblem, _jacobi_batch, parse_sdpa_sparse

DEFAULT_PENALTY = 1e4


def ackley(x, a: float = 20.0, b: float = 0.2, c: float = 2.0 * np.pi):
    x = np.asarray(x, dtype=float)
    rms = np.sqrt(np.mean(x * x, axis=-1))
    return (-a * np.exp(-b * rms) - np.exp(np.mean(np.cos(c * x), axis=-1))
            + a + np.e)


def levy(x):
    x = np.asarray(x, dtype=float)
    w = 1.0 + (x - 1.0) / 4.0
    head = np.sin(np.pi * w[..., 0]) ** 2
    middle = np.sum((w[..., :-1] - 1.0) ** 2
                    * (1.0 + 10.0 * np.sin(np.pi * w[..., :-1] + 1.0) ** 2),
                    axis=-1)
    tail = (w[..., -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[..., -1]) ** 2)
    return head + middle + tail


class Objective:
    """A deterministic scalar objective with an attached default domain."""

    def __init__(self, n: int, domain: DomainSpec, known_optimum: float | None = None,
                 optimizer: np.ndarray | None = None):
        self.n = n
        self.domain = domain
        self.known_optimum = known_optimum
        self.optimizer = None if optimizer is None else np.asarray(optimizer, float)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected a point of dimension {self.n}, got {x.shape}")
        return float(self.eval_many(x[None, :])[0])


class Ackley(Objective):
    def __init__(self, n: int, bounds: tuple[float, float] = (-10.0, 10.0),
                 base_step: float = 0.2, exploration: int = 30):
        domain = DomainSpec.uniform(n, bounds[0], bounds[1], base_step, exploration)
        super().__init__(n, domain, known_optimum=0.0, optimizer=np.zeros(n))

    def eval_many(self, points):
        return ackley(np.asarray(points, dtype=float))


class Levy(Objective):
    def __init__(self, n: int, bounds: tuple[float, float] = (-10.0, 10.0),
                 base_step: float = 0.2, exploration: int = 40):
        domain = DomainSpec.uniform(n, bounds[0], bounds[1], base_step, exploration)
        super().__init__(n, domain, known_optimum=0.0, optimizer=np.ones(n))

    def eval_many(self, points):
        return levy(np.asarray(points, dtype=float))


@dataclass(frozen=True)
class PenaltySpec:
    """Inequality residuals (feasible when <= 0) and their penalty weight."""

    residuals: tuple
    rho: float = DEFAULT_PENALTY

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"penalty weight must be positive, got {self.rho}")

    def penalty_many(self, points: np.ndarray) -> np.ndarray:
        total = np.zeros(points.shape[0])
        for residual in self.residuals:
            total += np.maximum(0.0, residual(points)) ** 2
        return self.rho * total

    def residual_values(self, x) -> np.ndarray:
        points = np.asarray(x, dtype=float)[None, :]
        return np.array([float(residual(points)[0]) for residual in self.residuals])


class PenalizedObjective(Objective):
    """``raw(x) + rho * sum_j max(0, g_j(x))**2``; equals ``raw`` when feasible."""

    def __init__(self, raw: Objective, spec: PenaltySpec):
        super().__init__(raw.n, raw.domain, known_optimum=raw.known_optimum,
                         optimizer=raw.optimizer)
        self.raw = raw
        self.spec = spec

    def eval_many(self, points):
        points = np.asarray(points, dtype=float)
        return self.raw.eval_many(points) + self.spec.penalty_many(points)


def penalize(raw: Objective, spec: PenaltySpec) -> PenalizedObjective:
    return PenalizedObjective(raw, spec)


class ProcessSynthesisMinlp(Objective):
    """Seven-variable process-synthesis program, penalty form.

    Variables are ordered ``(y1..y4, x1..x3)``.  The four y-variables are
    binary in the original program; here they share the continuous grid and a
    quadratic deviation penalty pulls them onto {0, 1}.  Reported solutions
    round the binaries before any feasibility audit.
    """

    N_CONSTRAINTS = 9

    def __init__(self, rho: float = DEFAULT_PENALTY, rho_binary: float = DEFAULT_PENALTY,
                 base_step: float = 0.2, exploration: int = 15):
        lower = np.zeros(7)
        upper = np.array([1.0, 1.0, 1.0, 1.0, 1.2, 1.8, 2.5])
        domain = DomainSpec(lower, upper, base_step, exploration)
        super().__init__(7, domain, known_optimum=4.57)
        self.rho = float(rho)
        self.rho_binary = float(rho_binary)

    @staticmethod
    def raw_many(points: np.ndarray) -> np.ndarray:
        y = points[:, :4]
        x = points[:, 4:]
        out = ((y[:, 0] - 1.0) ** 2 + (y[:, 1] - 2.0) ** 2 + (y[:, 2] - 1.0) ** 2
               + (x[:, 0] - 1.0) ** 2 + (x[:, 1] - 2.0) ** 2 + (x[:, 2] - 3.0) ** 2)
        y4 = y[:, 3]
        valid = y4 >= 0.0
        log_term = np.full(y4.shape, -np.inf)
        log_term[valid] = np.log1p(y4[valid])
        return out - log_term

    @staticmethod
    def constraints_many(points: np.ndarray) -> np.ndarray:
        """The nine inequality residuals, feasible when <= 0."""
        y1, y2, y3, y4 = (points[:, i] for i in range(4))
        x1, x2, x3 = (points[:, 4 + i] for i in range(3))
        return np.stack([
            y1 + y2 + y3 + x1 + x2 + x3 - 5.0,
            y2 ** 2 + x1 ** 2 + x2 ** 2 + x3 ** 2 - 5.5,
            y1 + x1 - 1.2,
            y2 + x2 - 1.8,
            y3 + x3 - 2.5,
            y4 + x1 - 1.2,
            y2 ** 2 + x2 ** 2 - 1.64,
            y3 ** 2 + x3 ** 2 - 4.25,
            y2 ** 2 + x3 ** 2 - 4.64,
        ], axis=1)

    def constraint_values(self, x) -> np.ndarray:
        return self.constraints_many(np.asarray(x, dtype=float)[None, :])[0]

    @staticmethod
    def round_binaries(x) -> np.ndarray:
        point = np.asarray(x, dtype=float).copy()
        point[:4] = np.round(point[:4])
        return point

    def eval_many(self, points):
        points = np.asarray(points, dtype=float)
        value = self.raw_many(points)
        residuals = self.constraints_many(points)
        value = value + self.rho * (np.maximum(0.0, residuals) ** 2).sum(axis=1)
        y = points[:, :4]
        value = value + self.rho_binary * ((y * (1.0 - y)) ** 2).sum(axis=1)
        return value


class QuarticProgram(Objective):
    """Two-variable quartic with two quadratic inequality constraints."""

    def __init__(self, rho: float = DEFAULT_PENALTY, base_step: float = 0.2,
                 exploration: int = 20):
        domain = DomainSpec.uniform(2, -8.0, 10.0, base_step, exploration)
        raw = _QuarticRaw(domain)
        self._penalized = penalize(raw, PenaltySpec(residuals=(
            lambda p: -p[:, 0] + p[:, 1] - 8.0,
            lambda p: p[:, 1] - p[:, 0] ** 2 - 2.0 * p[:, 0] + 2.0,
        ), rho=rho))
        super().__init__(2, domain)

    def constraint_values(self, x) -> np.ndarray:
        return self._penalized.spec.residual_values(x)

    def eval_many(self, points):
        return self._penalized.eval_many(np.asarray(points, dtype=float))


class _QuarticRaw(Objective):
    def __init__(self, domain):
        super().__init__(2, domain)

    def eval_many(self, points):
        x1, x2 = points[:, 0], points[:, 1]
        return x1 ** 4 - 14.0 * x1 ** 2 + 24.0 * x1 - x2 ** 2


_INNER_RADIUS_SQ = (1.0 / 3.0) ** 2
_OUTER_RADIUS_SQ = (2.0 / 3.0) ** 2


def cheb_member(y) -> np.ndarray | bool:
    """Membership in the pinched region inside the unit square."""
    y = np.asarray(y, dtype=float)
    y1, y2 = y[..., 0], y[..., 1]
    inside = ((y1 >= 0.0) & (y1 <= 1.0) & (y2 >= 0.0) & (y2 <= 1.0)
              & (y1 ** 2 + y2 ** 2 >= _INNER_RADIUS_SQ)
              & ((y1 - 1.0) ** 2 + y2 ** 2 >= _OUTER_RADIUS_SQ))
    return inside if inside.ndim else bool(inside)


class ChebyshevCenter(Objective):
    """Largest distance from ``x`` to the discretized pinched region.

    The region is sampled once on an axis-uniform grid of the unit square.
    Because the distance to a point set is maximized at a vertex of the set's
    convex hull, evaluation reduces the grid to its hull vertices; the value
    is identical to the maximum over the full grid.
    """

    def __init__(self, resolution: int = 2000, base_step: float = 0.1,
                 exploration: int = 15):
        if resolution < 2:
            raise ValueError(f"resolution must be >= 2, got {resolution}")
        domain = DomainSpec.uniform(2, 0.0, 1.0, base_step, exploration)
        super().__init__(2, domain)
        self.resolution = resolution
        axis = np.linspace(0.0, 1.0, resolution)
        g1, g2 = np.meshgrid(axis, axis, indexing="ij")
        points = np.column_stack([g1.ravel(), g2.ravel()])
        members = cheb_member(points)
        self.k_points = points[members]
        if self.k_points.shape[0] == 0:
            raise ValueError("membership grid is empty at this resolution")
        from scipy.spatial import ConvexHull

        hull = ConvexHull(self.k_points)
        self._hull = self.k_points[hull.vertices]

    def eval_many(self, points):
        points = np.asarray(points, dtype=float)
        d_sq = ((points[:, 0, None] - self._hull[None, :, 0]) ** 2
                + (points[:, 1, None] - self._hull[None, :, 1]) ** 2)
        return np.sqrt(d_sq.max(axis=1))


class SdpPenalty(Objective):
    """Linear cost plus a penalty on the most negative block eigenvalue.

    Evaluates ``costs @ x + rho * max(0, -lambda_min(sum_i x_i F_i - F_0))**2``
    with the eigenvalue taken blockwise (diagonal blocks contribute their
    smallest diagonal entry).  The default penalty weight is large enough
    that near-optimal points are pushed to eigenvalues above about -1e-6.
    """

    def __init__(self, problem: SdpProblem, rho: float = 1e10,
                 bounds: tuple[float, float] = (-4.0, 4.0),
                 base_step: float = 0.4, exploration: int = 20,
                 eig_tol: float = 1e-12):
        domain = DomainSpec.uniform(problem.m, bounds[0], bounds[1],
                                    base_step, exploration)
        super().__init__(problem.m, domain)
        if not rho > 0:
            raise ValueError(f"penalty weight must be positive, got {rho}")
        self.problem = problem
        self.rho = float(rho)
        self.eig_tol = float(eig_tol)
        self._diag_stacks = []
        self._dense_stacks = []
        m = problem.m
        for index, size in enumerate(problem.block_sizes):
            order = abs(size)
            if size < 0:
                self._diag_stacks.append((index, np.zeros((m + 1, order))))
            else:
                self._dense_stacks.append((index, np.zeros((m + 1, order, order))))
        by_block = {index: stack for index, stack in self._diag_stacks}
        by_block.update({index: stack for index, stack in self._dense_stacks})
        for matno, blkno, i, j, value in problem.entries:
            stack = by_block[blkno - 1]
            if stack.ndim == 2:
                stack[matno, i - 1] += value
            else:
                stack[matno, i - 1, j - 1] += value
                if i != j:
                    stack[matno, j - 1, i - 1] += value

    def min_eigenvalue_at(self, x) -> float:
        """Smallest assembled-block eigenvalue at one point."""
        x = np.asarray(x, dtype=float)
        return float(self._lambda_min(x[None, :])[0])

    def _lambda_min(self, points: np.ndarray) -> np.ndarray:
        lam = np.full(points.shape[0], np.inf)
        for _, stack in self._diag_stacks:
            diags = points @ stack[1:] - stack[0]
            lam = np.minimum(lam, diags.min(axis=1))
        for _, stack in self._dense_stacks:
            matrices = np.tensordot(points, stack[1:], axes=([1], [0])) - stack[0]
            values, _ = _jacobi_batch(matrices, self.eig_tol)
            lam = np.minimum(lam, values.min(axis=1))
        return lam

    def eval_many(self, points):
        points = np.asarray(points, dtype=float)
        linear = points @ self.problem.costs
        shortfall = np.maximum(0.0, -self._lambda_min(points))
        return linear + self.rho * shortfall ** 2


def get_objective(name: str, dims: int | None = None, **options) -> Objective:
    """Look up a benchmark objective by its registered name.

    Names: ``ackley``, ``levy`` (need ``dims``), ``minlp``, ``quartic``,
    ``chebyshev``, and ``sdp:<path>`` for an SDPA sparse file.
    """
    key = name.strip().lower()
    if key.startswith("sdp:"):
        path = name.strip()[4:]
        with open(path, "r", encoding="utf-8") as handle:
            problem = parse_sdpa_sparse(handle.read())
        objective = SdpPenalty(problem, **options)
    elif key == "ackley":
        if dims is None:
            raise ValueError("ackley needs an explicit dimension count")
        objective = Ackley(dims, **options)
    elif key == "levy":
        if dims is None:
            raise ValueError("levy needs an explicit dimension count")
        objective = Levy(dims, **options)
    elif key == "minlp":
        objective = ProcessSynthesisMinlp(**options)
    elif key == "quartic":
        objective = QuarticProgram(**options)
    elif key == "chebyshev":
        objective = ChebyshevCenter(**options)
    else:
        raise ValueError(f"unknown problem name {name!r}")
    if dims is not None and objective.n != dims:
        raise ValueError(f"problem {name!r} has dimension {objective.n}, "
                         f"config says {dims}")
    return objective
