"""Rescaled partial-sum paths, trimming decompositions, and jump projections.

Paths live in the cadlag step-function class: right-continuous, piecewise
constant between jumps, time domain [0, 1].  The limit candidates are the
nondecreasing step functions starting at 0 with at most r positive jumps, and
the admissible normalization exponents for a jump budget r form the half-open
window (1/((r+1)s), 1/(rs)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .observable import SingularObservable, TruncationSpec, Thresholds, thresholds, centering_constant


@dataclass
class CadlagStep:
    """Finite step function on [0,1]: value is initial_value on [0, t_1) and
    values[i] on [t_i, t_{i+1}).  Jump times are strictly increasing in (0, 1]."""

    jump_times: np.ndarray
    values: np.ndarray
    initial_value: float = 0.0

    def __post_init__(self):
        self.jump_times = np.asarray(self.jump_times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.jump_times.size != self.values.size:
            raise ValueError("one level per jump required")
        if self.jump_times.size:
            if np.any(np.diff(self.jump_times) <= 0):
                raise ValueError("jump times must be strictly increasing")
            if self.jump_times[0] <= 0 or self.jump_times[-1] > 1:
                raise ValueError("jump times must lie in (0, 1]")
            levels = np.concatenate([[self.initial_value], self.values])
            if np.any(np.diff(levels) == 0):
                raise ValueError("zero-size jumps are not allowed")

    @classmethod
    def constant(cls, v: float = 0.0) -> "CadlagStep":
        return cls(np.empty(0), np.empty(0), float(v))

    @classmethod
    def from_jumps(cls, times, sizes, initial_value: float = 0.0) -> "CadlagStep":
        times = np.asarray(times, dtype=float)
        order = np.argsort(times, kind="stable")
        times = times[order]
        sizes = np.asarray(sizes, dtype=float)[order]
        return cls(times, initial_value + np.cumsum(sizes), initial_value)

    @property
    def n_jumps(self) -> int:
        return self.jump_times.size

    def levels(self) -> np.ndarray:
        return np.concatenate([[self.initial_value], self.values])

    def jump_sizes(self) -> np.ndarray:
        return np.diff(self.levels())

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="right")
        out = self.levels()[idx]
        return out if out.ndim else float(out)

    def final_value(self) -> float:
        return float(self.levels()[-1])

    def to_csv_rows(self):
        ts = np.concatenate([[0.0], self.jump_times])
        vs = self.levels()
        return np.column_stack([ts, vs])


def build_WN(X, s: float, alpha: float, *, mean_value: float = 0.0) -> CadlagStep:
    """The rescaled partial-sum path W_N on the grid k/N.

    W_N(k/N) = (S_k - a_N(k/N)) / (N^(1/s) (ln N)^alpha) with the centering
    a_N(t) = N t * mean_value when s > 1 and 0 otherwise; constant between grid
    points (step interpolation).
    """
    X = np.asarray(X, dtype=float)
    N = X.size
    if N < 3:
        raise ValueError("need N >= 3")
    scale = N ** (1.0 / s) * math.log(N) ** alpha
    incr = (X - (mean_value if s > 1 else 0.0)) / scale
    keep = incr != 0.0
    k = np.nonzero(keep)[0]
    return CadlagStep((k + 1) / N, np.cumsum(incr)[k], 0.0)


class SplitSums(NamedTuple):
    s_big: np.ndarray      # prefix sums of centered terms at or above the cut
    s_small: np.ndarray    # prefix sums of centered terms below the cut
    b_big: float
    b_small: float
    cut: float


def split_S(X, N: int, s: float, delta: float, density=None,
            obs: Optional[SingularObservable] = None) -> SplitSums:
    """First trimming split at the level N^(1/s) (ln N)^delta.

    The prefix arrays carry the per-term centerings (zero when s <= 1,
    otherwise the restricted means, so both layers have mean zero).
    """
    X = np.asarray(X, dtype=float)[:N]
    cut = float(N) ** (1.0 / s) * math.log(N) ** delta
    big = X >= cut
    b_big = b_small = 0.0
    if s > 1:
        if obs is None:
            raise ValueError("centering for s > 1 needs the observable")
        b_big = centering_constant(obs, TruncationSpec("upper", u=cut), density)
        b_small = centering_constant(obs, TruncationSpec("lower", u=cut), density)
    s_big = np.cumsum(np.where(big, X, 0.0) - b_big)
    s_small = np.cumsum(np.where(big, 0.0, X) - b_small)
    return SplitSums(s_big, s_small, b_big, b_small, cut)


class BarSums(NamedTuple):
    s_low: np.ndarray      # terms below N^(1/s) (ln N)^(-D), centered
    s_mid: np.ndarray      # terms in [N^(1/s)(ln N)^(-D), N^(1/s)(ln N)^delta), centered
    b_low: float
    b_mid: float
    cuts: Thresholds


def split_bar(X, N: int, s: float, delta: float, D: float, density=None,
              obs: Optional[SingularObservable] = None,
              alpha: Optional[float] = None) -> BarSums:
    """Second split of the small-term layer at N^(1/s) (ln N)^(-D)."""
    if alpha is not None and not validate_D(D, s, alpha):
        raise ValueError(f"D={D} fails the admissibility inequality for s={s}, alpha={alpha}")
    X = np.asarray(X, dtype=float)[:N]
    cuts = thresholds(N, s, delta, D)
    low = X < cuts.lower
    mid = (X >= cuts.lower) & (X < cuts.upper)
    b_low = b_mid = 0.0
    if s > 1:
        if obs is None:
            raise ValueError("centering for s > 1 needs the observable")
        b_low = centering_constant(obs, TruncationSpec("lower", u=cuts.lower), density)
        b_mid = centering_constant(obs, TruncationSpec("band", l=cuts.lower, u=cuts.upper),
                                   density)
    s_low = np.cumsum(np.where(low, X, 0.0) - b_low)
    s_mid = np.cumsum(np.where(mid, X, 0.0) - b_mid)
    return BarSums(s_low, s_mid, b_low, b_mid, cuts)


@dataclass
class TrimmedSums:
    """All decomposition layers of one horizon, with the centering bookkeeping.

    Invariants (exact up to float association):
      S_n = S'_n + S''_n + n (b' + b'')
      S''_n = bar_n + bbar_n + n (bar_b + bbar_b - b'')
    """

    N: int
    s: float
    alpha: float
    delta: float
    D: float
    S: np.ndarray
    s_big: np.ndarray
    s_small: np.ndarray
    bar: np.ndarray
    bbar: np.ndarray
    b_big: float
    b_small: float
    bar_b: float
    bbar_b: float

    def scale(self) -> float:
        return self.N ** (1.0 / self.s) * math.log(self.N) ** self.alpha


def trimmed_sums(X, N: int, s: float, alpha: float, delta: float, D: float,
                 density=None, obs: Optional[SingularObservable] = None) -> TrimmedSums:
    X = np.asarray(X, dtype=float)[:N]
    sp = split_S(X, N, s, delta, density, obs)
    bb = split_bar(X, N, s, delta, D, density, obs, alpha=alpha)
    return TrimmedSums(N, s, alpha, delta, D, np.cumsum(X), sp.s_big, sp.s_small,
                       bb.s_low, bb.s_mid, sp.b_big, sp.b_small, bb.b_low, bb.b_mid)


def validate_D(D: float, s: float, alpha: float) -> bool:
    """Admissibility of the small-term cut exponent: D(1-s) + alpha > 1 below
    the integrability threshold, D(2-s) + 2 alpha > 3 in the finite-mean range."""
    if not (0.0 < s < 2.0) or alpha <= 0 or D <= 0:
        raise ValueError("need s in (0,2), alpha > 0, D > 0")
    if s < 1.0:
        return D * (1.0 - s) + alpha > 1.0
    return D * (2.0 - s) + 2.0 * alpha > 3.0


def alpha_window(r: int, s: float):
    """Admissible normalization exponents (1/((r+1)s), 1/(rs)] for jump budget r."""
    if r < 1 or not (0.0 < s < 2.0):
        raise ValueError("need r >= 1 and s in (0,2)")
    return 1.0 / ((r + 1) * s), 1.0 / (r * s)


def alpha_in_window(alpha: float, r: int, s: float) -> bool:
    lo, hi = alpha_window(r, s)
    return lo < alpha <= hi


def project_Hr(path: CadlagStep, r: Optional[int], jump_floor: float = 0.0) -> CadlagStep:
    """Keep the r largest positive jumps above jump_floor (earlier time wins
    ties), drop every other increment, and rebuild levels cumulatively from 0."""
    if r is not None and r < 0:
        raise ValueError("r must be >= 0 or None")
    if jump_floor < 0:
        raise ValueError("jump_floor must be >= 0")
    sizes = path.jump_sizes()
    times = path.jump_times
    pos = (sizes > 0) & (sizes > jump_floor)
    times, sizes = times[pos], sizes[pos]
    if r is not None and times.size > r:
        order = np.lexsort((times, -sizes))[:r]
        keep = np.sort(order)
        times, sizes = times[keep], sizes[keep]
    return CadlagStep(times, np.cumsum(sizes), 0.0)


def band_sum(X, N: int, j: int, s: float, delta: float, D: float) -> np.ndarray:
    """Prefix sums of the terms whose value falls in the j-th dyadic-log band
    [N^(1/s)(ln N)^(j delta), N^(1/s)(ln N)^((j+1) delta)), j = -q..0 with D = q delta.

    The half-open orientation matches the truncation split so the bands tile
    the mid window exactly.
    """
    q = D / delta
    if abs(q - round(q)) > 1e-9:
        raise ValueError("band sums need D to be an integer multiple of delta")
    q = int(round(q))
    if not (-q <= j <= 0):
        raise ValueError(f"band index must be in [-{q}, 0]")
    X = np.asarray(X, dtype=float)[:N]
    base = float(N) ** (1.0 / s)
    ln = math.log(N)
    lo = base * ln ** (j * delta)
    hi = base * ln ** ((j + 1) * delta)
    return np.cumsum(np.where((X >= lo) & (X < hi), X, 0.0))


def sup_remainder(s_small, N: int, s: float, alpha: float) -> float:
    """max_{n <= N} |S''_n| / (N^(1/s) (ln N)^alpha)."""
    if N < 3:
        raise ValueError("need N >= 3")
    s_small = np.asarray(s_small, dtype=float)[:N]
    return float(np.max(np.abs(s_small)) / (N ** (1.0 / s) * math.log(N) ** alpha))


def top_positive_jump_path(X, N: int, s: float, alpha: float, r: int,
                           *, drift: float = 0.0) -> CadlagStep:
    """Projection onto the r largest normalized increments without
    materializing the dense path.

    Equals project_Hr(build of the layer path, r) because non-exceedance
    increments are never positive: they are zero for s <= 1 and the negative
    centering drift for s > 1 (each retained jump then has size (X_k - drift)).
    """
    X = np.asarray(X, dtype=float)[:N]
    scale = N ** (1.0 / s) * math.log(N) ** alpha
    adj = X - drift
    pos = np.nonzero(adj > 0)[0]
    if pos.size > r:
        order = np.lexsort((pos, -adj[pos]))[:r]
        pos = np.sort(pos[order])
    sizes = adj[pos] / scale
    return CadlagStep((pos + 1) / N, np.cumsum(sizes), 0.0)
