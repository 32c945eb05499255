"""Transition kernel over a window of candidates, driven by cached weights.

The kernel targets an unnormalized weight vector ``w`` over an ascending set
of candidate slots.  Conditioned on the current slot ``s`` it mixes, with
equal probability ``1/k``, over the ``k`` contiguous index blocks of length
(up to) ``k`` that contain ``s``, and samples a slot within the chosen block
proportionally to ``w``.  Marginalizing the block choice gives the transition
mass function

    p(r | s) = w[r] / k * sum_{l = max(r, s)}^{min(r, s) + k - 1} 1 / m(l),

where ``m(l)`` is the total weight of the block ending at slot ``l``.  The
normalization constant of ``w`` never appears: the kernel is invariant under
rescaling all weights by a positive constant, sums to one exactly, and is in
detailed balance with ``w``.

Weights are Boltzmann factors ``exp(-(f - shift) / T)`` of lazily evaluated
objective values.  The shift is the running minimum of the evaluated values,
which keeps every exponent nonpositive; exponents are additionally floored so
that feasible candidates never underflow to an exact zero weight at very low
temperatures (only out-of-bounds or infeasible slots have weight zero).
"""

from __future__ import annotations

import math

import numpy as np

# Largest magnitude allowed for the (nonpositive) Boltzmann exponent.  Keeps
# feasible weights positive: exp(-700) ~ 1e-304 is still a normal double.
_MIN_EXPONENT = -700.0


class NumericError(RuntimeError):
    """A weight table produced an inconsistent distribution."""


def stationary_weight(f_value: float, temperature: float, shift: float = 0.0) -> float:
    """Unnormalized Boltzmann weight ``exp(-(f_value - shift) / temperature)``.

    Non-finite objective values (``+inf`` or NaN, i.e. infeasible candidates)
    map to weight 0.  ``shift`` only rescales the whole window and is chosen
    by the caller to avoid overflow.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if math.isnan(f_value) or f_value == math.inf:
        return 0.0
    exponent = -(f_value - shift) / temperature
    if exponent > 700.0:
        return math.inf
    return math.exp(exponent)


class WeightTable:
    """Per-slot weights for one window, evaluated at most once per slot.

    Slots are either *blocked* (out of bounds: weight 0, never evaluated),
    *unevaluated*, or hold the objective value at their candidate.  Weights
    derive from the values with the running-minimum shift; when a new smaller
    value arrives, previously derived weights are rescaled in one vector op.
    """

    def __init__(self, size: int, value_fn=None, temperature: float | None = None,
                 blocked: np.ndarray | None = None):
        if size < 1:
            raise ValueError("table needs at least one slot")
        if value_fn is not None and not (temperature and temperature > 0):
            raise ValueError("lazy tables need a positive temperature")
        self.size = size
        self.temperature = temperature
        self._value_fn = value_fn
        self._values = np.full(size, np.nan)
        self._weights = np.full(size, np.nan)
        self._evaluated = np.zeros(size, dtype=bool)
        self.shift = math.inf
        self.evaluations = 0
        if blocked is not None:
            blocked = np.asarray(blocked, dtype=bool)
            self._weights[blocked] = 0.0
            self._evaluated[blocked] = True

    @classmethod
    def from_weights(cls, weights) -> "WeightTable":
        """Table with explicitly given nonnegative weights (no lazy layer)."""
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and nonnegative")
        table = cls(weights.size)
        table._weights = weights.astype(float).copy()
        table._evaluated[:] = True
        return table

    @classmethod
    def from_values(cls, values, temperature: float,
                    blocked: np.ndarray | None = None) -> "WeightTable":
        """Table with all objective values already evaluated."""
        values = np.asarray(values, dtype=float)
        table = cls(values.size, temperature=temperature, blocked=blocked)
        fill = ~table._evaluated
        table._values[fill] = values[fill]
        table._evaluated[:] = True
        table._refresh_weights()
        return table

    def _refresh_weights(self) -> None:
        values = self._values[self._evaluated]
        finite = values[np.isfinite(values)]
        new_shift = finite.min() if finite.size else math.inf
        if new_shift < self.shift:
            self.shift = float(new_shift)
            todo = self._evaluated.copy()
        else:
            todo = self._evaluated & np.isnan(self._weights)
        if not todo.any():
            return
        if self.shift == math.inf:
            self._weights[todo] = 0.0
            return
        vals = self._values[todo]
        with np.errstate(invalid="ignore"):
            exponents = np.maximum(-(vals - self.shift) / self.temperature,
                                   _MIN_EXPONENT)
            w = np.exp(exponents)
        # Infeasible candidates (NaN objective) and +inf both get weight 0;
        # blocked slots have a NaN value and stay at 0 through rescales.
        w[~np.isfinite(vals)] = 0.0
        self._weights[todo] = w

    def set_value(self, idx: int, value: float) -> None:
        """Record an already-known objective value without an evaluation."""
        if not 0 <= idx < self.size:
            raise ValueError(f"slot {idx} out of range")
        if self._evaluated[idx]:
            return
        self._values[idx] = float(value)
        self._evaluated[idx] = True
        self._refresh_weights()

    def ensure_range(self, lo: int, hi: int) -> None:
        """Evaluate every unevaluated slot in ``[lo, hi]`` (inclusive)."""
        pending = np.flatnonzero(~self._evaluated[lo:hi + 1]) + lo
        if pending.size == 0:
            return
        if self._value_fn is None:
            raise ValueError(f"slots {pending.tolist()} were never evaluated")
        for idx in pending:
            self._values[idx] = float(self._value_fn(int(idx)))
            self._evaluated[idx] = True
            self.evaluations += 1
        self._refresh_weights()

    def weight(self, idx: int) -> float:
        if not 0 <= idx < self.size:
            raise ValueError(f"slot {idx} out of range")
        self.ensure_range(idx, idx)
        return float(self._weights[idx])

    @property
    def weights(self) -> np.ndarray:
        """Current weight vector (NaN where a slot was never evaluated)."""
        return self._weights


def transition_prob(r: int, s: int, k: int, table: WeightTable) -> float:
    """Probability of moving to slot ``r`` conditioned on slot ``s``.

    Slots outside the support (``|r - s| >= k``) have probability 0.  The
    conditioning slot must have positive weight; every block consulted for a
    positive-weight ``r`` contains ``s``, so no block mass can vanish.
    """
    n = table.size
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not (0 <= r < n and 0 <= s < n):
        raise ValueError(f"slots ({r}, {s}) out of range for table of size {n}")
    if abs(r - s) >= k:
        return 0.0
    if not table.weight(s) > 0:
        raise ValueError(f"conditioning slot {s} has zero weight")
    w_r = table.weight(r)
    if w_r == 0.0:
        return 0.0
    lo, hi = max(r, s), min(r, s) + k - 1
    table.ensure_range(max(0, lo - k + 1), min(n - 1, hi))
    w = table.weights
    total = 0.0
    for l in range(lo, hi + 1):
        block = w[max(0, l - k + 1): min(l, n - 1) + 1]
        total += 1.0 / float(block.sum())
    return w_r / k * total


def window_distribution(s: int, k: int, table: WeightTable) -> np.ndarray:
    """Full transition distribution conditioned on slot ``s``.

    Component ``r`` equals ``transition_prob(r, s, k, table)``; the vector
    sums to one.  A total mass off by more than 1e-9 signals a corrupted
    weight table and raises :class:`NumericError`.
    """
    n = table.size
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0 <= s < n:
        raise ValueError(f"slot {s} out of range")
    if not table.weight(s) > 0:
        raise ValueError(f"conditioning slot {s} has zero weight")
    span_lo, span_hi = max(0, s - k + 1), min(n - 1, s + k - 1)
    table.ensure_range(span_lo, span_hi)
    w = table.weights[span_lo:span_hi + 1]

    prefix = np.concatenate(([0.0], np.cumsum(w)))
    ells = s + np.arange(k)
    block_lo = np.maximum(0, ells - k + 1) - span_lo
    block_hi = np.minimum(ells, n - 1) - span_lo
    masses = prefix[block_hi + 1] - prefix[block_lo]
    inv_pad = np.concatenate(([0.0], np.cumsum(1.0 / masses)))

    r = np.arange(span_lo, span_hi + 1)
    j_lo = np.maximum(r - s, 0)
    j_hi = np.minimum(r - s, 0) + k - 1
    sums = inv_pad[j_hi + 1] - inv_pad[j_lo]

    p = np.zeros(n)
    p[span_lo:span_hi + 1] = w / k * sums
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise NumericError(f"window distribution sums to {total!r}, not 1")
    return p


def sample_window(s: int, k: int, table: WeightTable, zeta: float) -> int:
    """Inverse-CDF draw from the window distribution conditioned on ``s``.

    Returns the smallest slot whose cumulative probability (in ascending slot
    order) reaches ``zeta``.  If float rounding leaves the total mass below
    ``zeta``, falls back to the conditioning slot.
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError(f"zeta must lie strictly inside (0, 1), got {zeta}")
    p = window_distribution(s, k, table)
    cumulative = np.cumsum(p)
    idx = int(np.searchsorted(cumulative, zeta, side="left"))
    if idx >= p.size:
        return s
    return idx
