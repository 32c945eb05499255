"""Box domains, their uniform discretization, and per-dimension candidate windows.

A search space is a compact box discretized with a scalar step size.  Each
coordinate update considers a symmetric window of ``2k - 1`` equally spaced
candidate values around the current coordinate, where ``k`` is the
exploration parameter.  Windows are regenerated from the current coordinate
and the *current* step, because the step size changes while a run refines
its mesh; candidates falling outside the box are kept (so the window always
has ``2k - 1`` slots) and receive zero sampling weight downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Relative slack used when counting grid points, so spans that are an exact
# multiple of the step (up to float noise, e.g. 1.2 / 0.2) keep their last
# grid point.
_GRID_EPS = 1e-9


@dataclass(frozen=True)
class DomainSpec:
    """A compact box with its discretization step and exploration parameter.

    ``lower``/``upper`` are per-dimension bounds (degenerate dimensions with
    ``lower == upper`` are allowed and contribute a single grid point),
    ``base_step`` is the initial mesh width and ``exploration`` the window
    half-width-plus-one ``k``.
    """

    lower: np.ndarray
    upper: np.ndarray
    base_step: float
    exploration: int

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or lower.ndim != 1 or lower.size == 0:
            raise ValueError("lower and upper must be equal-length 1-D vectors")
        if np.any(lower > upper):
            raise ValueError("every dimension needs lower <= upper")
        if not self.base_step > 0:
            raise ValueError(f"base_step must be positive, got {self.base_step}")
        spans = upper - lower
        positive = spans[spans > 0]
        if positive.size and self.base_step > positive.min() * (1 + _GRID_EPS):
            raise ValueError(
                f"base_step {self.base_step} exceeds the smallest box extent "
                f"{positive.min()}"
            )
        if self.exploration < 1:
            raise ValueError(f"exploration must be >= 1, got {self.exploration}")

    @property
    def dims(self) -> int:
        return self.lower.size

    @classmethod
    def uniform(cls, dims: int, lo: float, hi: float, base_step: float,
                exploration: int) -> "DomainSpec":
        """Box ``[lo, hi]`` replicated over ``dims`` dimensions."""
        return cls(np.full(dims, float(lo)), np.full(dims, float(hi)),
                   base_step, exploration)

    def grid_counts(self) -> np.ndarray:
        """Number of base-step grid points per dimension."""
        spans = self.upper - self.lower
        return np.floor(spans / self.base_step + _GRID_EPS).astype(int) + 1


@dataclass
class Window:
    """The ``2k - 1`` ascending candidate values for one coordinate.

    ``values[center_index]`` is the current coordinate.  Weights live in a
    separate table (see :mod:`gridanneal.walker`) and start unevaluated.
    """

    values: np.ndarray
    center_index: int = field(default=0)

    @property
    def size(self) -> int:
        return self.values.size


def neighbor_window(center: float, step: float, k: int) -> Window:
    """Build the symmetric candidate window around ``center``.

    Returns the values ``center - (k-1)*step, ..., center, ..., center +
    (k-1)*step`` in ascending order.  Spacing equals ``step`` and the window
    is symmetric about the center by construction (offsets are computed once
    and mirrored).
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    offsets = step * np.arange(-(k - 1), k, dtype=float)
    return Window(values=center + offsets, center_index=k - 1)


def in_bounds(x: float, dim: int, domain: DomainSpec) -> bool:
    """Whether ``x`` lies inside the (inclusive) bounds of dimension ``dim``."""
    if not 0 <= dim < domain.dims:
        raise ValueError(f"dimension index {dim} out of range")
    return bool(domain.lower[dim] <= x <= domain.upper[dim])


def sample_initial(domain: DomainSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw a uniform point on the base-step grid of the box.

    Each coordinate is ``lower[i] + j * base_step`` with ``j`` uniform over
    the admissible grid indices, clipped to the upper bound to absorb float
    drift on the last grid point.
    """
    counts = domain.grid_counts()
    idx = np.array([rng.integers(c) for c in counts], dtype=float)
    point = domain.lower + idx * domain.base_step
    return np.minimum(point, domain.upper)
