"""Splittable seeding and digit-exact conditional samplers for linear maps.

Joint probabilities of shrinking targets sit at scales plain Monte Carlo
cannot resolve, so the estimators condition on membership in a preimage set
f^-k(A).  For a linear map that set is a disjoint union of m^k scaled copies
of A, and a uniform sample from it is exactly: k fresh uniform digits (the
branch) followed by a uniform sample of A itself, all expressed in base-m
digits so later orbit positions can be read off without precision loss.
"""

from __future__ import annotations

import math

import numpy as np


def rng_for(master_seed, *key) -> np.random.Generator:
    """Deterministic generator for a (seed, purpose, index...) tuple; results
    are independent of scheduling because every unit derives its own stream."""
    base = list(master_seed) if isinstance(master_seed, (list, tuple)) \
        else [master_seed]
    return np.random.default_rng([int(b) & 0xFFFFFFFF for b in base]
                                 + [int(k) for k in key])


def split_wrapping_arc(lo: float, hi: float):
    """Normalize an arc given by endpoints mod 1 into non-wrapping pieces."""
    lo %= 1.0
    width = hi - lo if hi >= lo else (hi % 1.0) - lo
    if width < 0:
        width %= 1.0
    hi = lo + width
    if hi <= 1.0:
        return [(lo, hi)]
    return [(lo, 1.0), (0.0, hi - 1.0)]


def sample_arc_digits(arcs, n: int, m: int, depth: int, rng) -> np.ndarray:
    """n exact uniform samples from a union of arcs, as (n, depth) base-m digits.

    Cells of width m^-T0 covering the chosen arc are drawn uniformly; interior
    cells are accepted outright and boundary cells are resolved against the
    fresh uniform tail, so accepted rows are uniform in the arc up to one
    float64 comparison at the arc endpoints.
    """
    arcs = [(float(lo), float(hi)) for lo, hi in arcs if hi > lo]
    if not arcs:
        raise ValueError("empty target")
    widths = np.array([hi - lo for lo, hi in arcs])
    wmin = widths.min()
    T0 = max(1, int(math.ceil(math.log(1.0 / wmin, m))) + 8)
    if T0 + 64 > depth:
        depth = T0 + 64
    out = np.empty((n, depth), dtype=np.uint8)
    tail_len = depth - T0
    kernel = (float(m) ** -np.arange(1, min(tail_len, 60) + 1)).astype(float)

    todo = np.arange(n)
    while todo.size:
        cnt = todo.size
        which = rng.choice(len(arcs), size=cnt, p=widths / widths.sum())
        tails = rng.integers(0, m, size=(cnt, tail_len), dtype=np.uint8)
        u_tail = tails[:, : kernel.size].astype(float) @ kernel
        ok = np.zeros(cnt, dtype=bool)
        cells = np.zeros(cnt, dtype=np.int64)
        mT = float(m) ** T0
        for ai, (lo, hi) in enumerate(arcs):
            sel = which == ai
            if not np.any(sel):
                continue
            c_lo = math.floor(lo * mT)
            c_hi = math.ceil(hi * mT) - 1
            c = rng.integers(c_lo, c_hi + 1, size=int(sel.sum()))
            y = (c + u_tail[sel]) / mT
            ok[sel] = (y >= lo) & (y < hi)
            cells[sel] = c
        good = np.nonzero(ok)[0]
        if good.size:
            rows = todo[good]
            cdigits = np.empty((good.size, T0), dtype=np.uint8)
            rem = cells[good].copy()
            for pos in range(T0 - 1, -1, -1):
                cdigits[:, pos] = rem % m
                rem //= m
            out[rows, :T0] = cdigits
            out[rows, T0:] = tails[good]
        todo = todo[~ok]
    return out


def preimage_digit_matrix(arcs, k: int, n: int, m: int, depth: int, rng) -> np.ndarray:
    """n exact uniform samples from f^-k(union of arcs) for the linear map ×m."""
    base = sample_arc_digits(arcs, n, m, depth, rng)
    if k == 0:
        return base
    branch = rng.integers(0, m, size=(n, k), dtype=np.uint8)
    return np.concatenate([branch, base], axis=1)


def points_at(digits: np.ndarray, m: int, positions) -> np.ndarray:
    """Orbit points f^pos(y) for each digit row, read as digit windows.

    positions are step counts; position 0 is the sampled point itself.
    Returns shape (n_rows, n_positions).
    """
    positions = np.atleast_1d(np.asarray(positions, dtype=int))
    window = 64 if m == 2 else int(math.ceil(64.0 / math.log2(m)))
    window = min(window, digits.shape[1] - int(positions.max()))
    if window < 30:
        raise ValueError("digit matrix too shallow for requested positions")
    kernel = (float(m) ** -np.arange(1, window + 1)).astype(float)
    out = np.empty((digits.shape[0], positions.size))
    for i, pos in enumerate(positions):
        out[:, i] = digits[:, pos: pos + window].astype(float) @ kernel
    return out
