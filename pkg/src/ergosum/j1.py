"""Skorokhod J1 distance on finite step functions, with an independent bracket oracle.

The distance is inf over strictly increasing time changes lambda of
||h1 o lambda - h2||_inf + ||lambda - id||_inf.  For step functions a time
change is determined (up to irrelevant wiggle) by where it sends the jumps of
h1: each jump is either matched exactly onto a jump of h2 (time charge: the
displacement) or placed inside one of h2's inter-jump intervals (time charge:
the distance from its own position to that interval), and the value term is
the worst mismatch among co-active level pairs along the resulting alignment.
j1_distance computes the exact infimum over the closure of that class with a
dynamic program over alignment paths; the finitely many achievable time
budgets are scanned so the sum of the two sup-norms is minimized exactly.

j1_oracle brackets the same quantity by entirely different means: an upper
bound from a search over piecewise-linear time changes with knots on a
lattice, and a lower bound from a family of J1-continuous functionals
(endpoint values, extrema, largest jump, and occupation measures of
super-level sets with a free-boundary correction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .errors import BudgetError
from .paths import CadlagStep


@dataclass
class Reparameterization:
    """Piecewise-linear increasing time change through the given knots."""

    knots_u: np.ndarray
    knots_v: np.ndarray

    def __post_init__(self):
        self.knots_u = np.asarray(self.knots_u, dtype=float)
        self.knots_v = np.asarray(self.knots_v, dtype=float)
        if self.knots_u[0] != 0.0 or self.knots_u[-1] != 1.0 \
                or self.knots_v[0] != 0.0 or self.knots_v[-1] != 1.0:
            raise ValueError("time change must fix 0 and 1")
        if np.any(np.diff(self.knots_u) < 0) or np.any(np.diff(self.knots_v) < 0):
            raise ValueError("knots must be increasing")

    def __call__(self, t):
        return np.interp(t, self.knots_u, self.knots_v)

    def sup_displacement(self) -> float:
        return float(np.max(np.abs(self.knots_u - self.knots_v)))

    @classmethod
    def identity(cls) -> "Reparameterization":
        return cls(np.array([0.0, 1.0]), np.array([0.0, 1.0]))

    def to_csv_rows(self) -> np.ndarray:
        return np.column_stack([self.knots_u, self.knots_v])


@dataclass
class J1Result:
    distance: float
    witness: Reparameterization
    value_metric: str
    matching: list


def _levels(path: CadlagStep, metric: str) -> np.ndarray:
    lv = path.levels()
    if metric == "compactified":
        return np.arctan(lv)
    if metric != "raw":
        raise ValueError(f"unknown value metric {metric!r}")
    return lv


def _vdist(a, b):
    """|a - b| with matching infinities at distance zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        d = np.abs(a - b)
    same_inf = np.isinf(a) & np.isinf(b) & (np.sign(a) == np.sign(b))
    d = np.where(same_inf, 0.0, d)
    return d if d.ndim else float(d)


def uniform_distance(h1: CadlagStep, h2: CadlagStep, value_metric: str = "raw") -> float:
    """sup_t of the pointwise value distance; exact on the merged jump grid."""
    pts = np.concatenate([[0.0], h1.jump_times, h2.jump_times])
    v1 = _levels(h1, value_metric)[np.searchsorted(h1.jump_times, pts, side="right")]
    v2 = _levels(h2, value_metric)[np.searchsorted(h2.jump_times, pts, side="right")]
    return float(np.max(_vdist(v1, v2)))


def j1_distance(h1: CadlagStep, h2: CadlagStep, value_metric: str = "raw",
                *, j_max: int = 32, budget: int = 10 ** 6) -> J1Result:
    """Exact J1 distance between two step functions.

    The distance is min over alignment paths of (max time charge + max value
    charge) on the (p+1) x (q+1) grid of level pairs.  A path moves by placing
    the next jump of h1 (time charge: its distance to the current inter-jump
    interval of h2), passing a jump of h2 (free), or matching a pair of jumps
    (time charge: their displacement); every visited grid cell charges the
    mismatch of its co-active levels.  The two maxes are combined exactly by
    scanning the finitely many achievable time budgets.
    """
    p, q = h1.n_jumps, h2.n_jumps
    if p > j_max or q > j_max:
        raise BudgetError(f"paths too jumpy: {p}, {q} jumps with j_max={j_max}")
    s = h1.jump_times
    t = h2.jump_times
    L1 = _levels(h1, value_metric)
    L2 = _levels(h2, value_metric)
    cellV = _vdist(L1[:, None], L2[None, :])
    tq = np.concatenate([[0.0], t, [1.0]])
    # placeT[i, j]: put jump i of h1 (1-based) strictly inside [t_j, t_{j+1}]
    placeT = np.zeros((p + 1, q + 1))
    if p:
        lo = tq[None, : q + 1]
        hi = tq[None, 1: q + 2]
        sv = s[:, None]
        placeT[1:, :] = np.maximum(0.0, np.maximum(lo - sv, sv - hi))
    matchT = np.full((p + 1, q + 1), np.inf)
    if p and q:
        matchT[1:, 1:] = np.abs(s[:, None] - t[None, :])
    budgets = np.unique(np.concatenate([[0.0], placeT.ravel(),
                                        matchT[np.isfinite(matchT)].ravel()]))
    if (p + 1) * (q + 1) * budgets.size > budget:
        raise BudgetError(f"alignment DP size exceeds budget {budget}")

    best_cost = math.inf
    best_pairs = []
    for T in budgets:
        if T >= best_cost:
            break
        V = np.full((p + 1, q + 1), math.inf)
        move = np.zeros((p + 1, q + 1), dtype=np.int8)  # 1=R (place), 2=D (pass), 3=X (match)
        V[0, 0] = cellV[0, 0]
        for i in range(p + 1):
            for j in range(q + 1):
                if i == 0 and j == 0:
                    continue
                cands = []
                if i > 0 and placeT[i, j] <= T:
                    cands.append((max(V[i - 1, j], cellV[i, j]), 1))
                if j > 0:
                    cands.append((max(V[i, j - 1], cellV[i, j]), 2))
                if i > 0 and j > 0 and matchT[i, j] <= T:
                    cands.append((max(V[i - 1, j - 1], cellV[i, j]), 3))
                if cands:
                    V[i, j], move[i, j] = min(cands)
        total = T + V[p, q]
        if total < best_cost:
            best_cost = total
            pairs = []
            i, j = p, q
            while i > 0 or j > 0:
                mv = move[i, j]
                if mv == 3:
                    pairs.append((i - 1, j - 1))
                    i, j = i - 1, j - 1
                elif mv == 1:
                    i -= 1
                else:
                    j -= 1
            best_pairs = pairs[::-1]

    pairs = best_pairs
    if pairs:
        ku = [0.0] + [min(max(t[j], 1e-12), 1.0 - 1e-12) for _, j in pairs] + [1.0]
        kv = [0.0] + [min(max(s[i], 1e-12), 1.0 - 1e-12) for i, _ in pairs] + [1.0]
        # strictify degenerate knots produced by closure matchings
        for a in range(1, len(ku)):
            ku[a] = max(ku[a], ku[a - 1] + 1e-12)
            kv[a] = max(kv[a], kv[a - 1] + 1e-12)
        ku[-1] = kv[-1] = 1.0
        witness = Reparameterization(np.array(ku), np.array(kv))
    else:
        witness = Reparameterization.identity()
    return J1Result(float(best_cost), witness, value_metric, pairs)


def is_j1_close(h1: CadlagStep, h2: CadlagStep, tol: float,
                value_metric: str = "raw") -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    return j1_distance(h1, h2, value_metric).distance <= tol


# ---------------------------------------------------------------------------
# bracket oracle
# ---------------------------------------------------------------------------

@dataclass
class OracleBracket:
    lower: float
    upper: float

    def contains(self, x: float, slack: float = 1e-9) -> bool:
        return self.lower - slack <= x <= self.upper + slack


def _grid_levels(path: CadlagStep, G: int, metric: str) -> np.ndarray:
    pts = np.arange(G + 1) / G
    return _levels(path, metric)[np.searchsorted(path.jump_times, pts, side="right")]


def _window_extrema(Lg: np.ndarray, jump_pos: np.ndarray, jump_lv: np.ndarray, G: int):
    """actmax/actmin[j, j'] = extrema of the levels the path takes on [j/G, j'/G);
    diagonal = the single level at j/G (flat segment of the time change)."""
    cell_hi = np.full(G + 1, -np.inf)
    cell_lo = np.full(G + 1, np.inf)
    for pos, lv in zip(jump_pos, jump_lv):
        c = int(math.floor(pos))
        if abs(pos - round(pos)) < 1e-12:
            continue  # grid-aligned jumps are already visible in Lg
        cell_hi[c] = max(cell_hi[c], lv)
        cell_lo[c] = min(cell_lo[c], lv)
    M_hi = np.maximum(Lg, np.append(cell_hi[: G], -np.inf))
    M_lo = np.minimum(Lg, np.append(cell_lo[: G], np.inf))
    actmax = np.full((G + 1, G + 1), -np.inf)
    actmin = np.full((G + 1, G + 1), np.inf)
    for j in range(G + 1):
        actmax[j, j] = actmin[j, j] = Lg[j]
        if j < G:
            actmax[j, j + 1:] = np.maximum.accumulate(M_hi[j: G])
            actmin[j, j + 1:] = np.minimum.accumulate(M_lo[j: G])
    return actmax, actmin


def _cell_cost_exact(i, j, jp, Lg1, L2seq, t2_off, s_pos, s_lv, G):
    """Exact sup mismatch on column i for a linear time-change segment j -> jp,
    when the second path jumps inside the cell.  Ties between a mapped crossing
    and a jump are treated as aligned (the knot can be nudged; see upper slack)."""
    cross = []
    if jp > j:
        for pos, lv in zip(s_pos, s_lv):
            if j < pos < jp:
                cross.append(((pos - j) / (jp - j), lv))
    ev1 = [(0.0, Lg1[j])] + cross
    ev2 = [(0.0, L2seq[0])] + [(off, lv) for off, lv in zip(t2_off, L2seq[1:])]
    out = 0.0
    a = b = 0
    cur1, cur2 = ev1[0][1], ev2[0][1]
    out = max(out, float(_vdist(cur1, cur2)))
    while a + 1 < len(ev1) or b + 1 < len(ev2):
        na = ev1[a + 1][0] if a + 1 < len(ev1) else math.inf
        nb = ev2[b + 1][0] if b + 1 < len(ev2) else math.inf
        if abs(na - nb) < 1e-9:
            a += 1
            b += 1
            cur1, cur2 = ev1[a][1], ev2[b][1]
        elif na < nb:
            a += 1
            cur1 = ev1[a][1]
        else:
            b += 1
            cur2 = ev2[b][1]
        out = max(out, float(_vdist(cur1, cur2)))
    return out


def _lattice_upper(h1: CadlagStep, h2: CadlagStep, G: int, metric: str) -> float:
    """min over lattice-knotted piecewise-linear time changes of the J1 objective."""
    Lg1 = _grid_levels(h1, G, metric)
    Lg2 = _grid_levels(h2, G, metric)
    L1 = _levels(h1, metric)
    L2 = _levels(h2, metric)
    s_pos = h1.jump_times * G
    s_lv = L1[1:]
    t_pos = h2.jump_times * G
    t_lv = L2[1:]
    actmax, actmin = _window_extrema(Lg1, s_pos, s_lv, G)
    tri = np.triu(np.ones((G + 1, G + 1), dtype=bool))

    # columns of the second path that contain interior jumps get exact tables
    incell = {}
    for pos, lv in zip(t_pos, t_lv):
        c = int(math.floor(pos))
        if abs(pos - round(pos)) < 1e-12:
            continue
        incell.setdefault(c, []).append((pos - c, lv))
    exact_cols = {}
    for c, jl in incell.items():
        jl.sort()
        offs = [o for o, _ in jl]
        seq = [Lg2[c]] + [v for _, v in jl]
        tbl = np.full((G + 1, G + 1), np.inf)
        for j in range(G + 1):
            for jp in range(j, G + 1):
                tbl[j, jp] = _cell_cost_exact(c, j, jp, Lg1, seq, offs, s_pos, s_lv, G)
        exact_cols[c] = tbl

    terminal = float(_vdist(Lg1[G], Lg2[G]))
    jj = np.arange(G + 1)
    columns = []
    for i in range(G):
        Ci = exact_cols.get(i)
        if Ci is None:
            Ci = np.maximum(actmax - Lg2[i], Lg2[i] - actmin)
        columns.append(np.where(tri, Ci, np.inf))
    best = math.inf
    for k in range(G + 1):
        if k / G >= best:
            break
        V = np.full(G + 1, np.inf)
        V[0] = 0.0
        feasible = True
        for i in range(G):
            M = np.maximum(V[:, None], columns[i])
            V = M.min(axis=0)
            V[np.abs(jj - (i + 1)) > k] = np.inf
            if not np.any(np.isfinite(V)):
                feasible = False
                break
        if feasible and np.isfinite(V[G]):
            best = min(best, max(float(V[G]), terminal) + k / G)
    return best + 2e-9  # slack for tie-snapped crossings


def _occupation_profile(path: CadlagStep, metric: str):
    lv = _levels(path, metric)
    times = np.concatenate([[0.0], path.jump_times, [1.0]])
    seg_len = np.diff(times)
    return lv[: seg_len.size], seg_len


def _measure_and_boundary(levels_seg, seg_len, c):
    keep = levels_seg >= c
    m = float(seg_len[keep].sum())
    b = 0
    prev = False
    tpos = np.concatenate([[0.0], np.cumsum(seg_len)])
    for i, k in enumerate(keep):
        if k and not prev and tpos[i] > 1e-15:
            b += 1
        if not k and prev and tpos[i] < 1.0 - 1e-15:
            b += 1
        prev = k
    return m, b


def _occupation_lower(h1: CadlagStep, h2: CadlagStep, metric: str) -> float:
    """Lower bound from super-level occupation times: a time change distorts the
    measure of a super-level set by at most (free boundary count) * ||lambda - id||,
    and a value error V shifts levels by at most V."""
    l1, s1 = _occupation_profile(h1, metric)
    l2, s2 = _occupation_profile(h2, metric)
    finite = [v for v in np.concatenate([l1, l2]) if math.isfinite(v)]
    if not finite:
        return 0.0
    lv_all = np.unique(finite)
    if lv_all.size == 1:
        cs = [lv_all[0]]
    else:
        cs = 0.5 * (lv_all[1:] + lv_all[:-1])
    profs = {}
    for c in cs:
        profs[c] = (_measure_and_boundary(l1, s1, c), _measure_and_boundary(l2, s2, c))

    def t_needed(V):
        T = 0.0
        for c in cs:
            (m1, b1), (m2, b2) = profs[c]
            m2v, _ = _measure_and_boundary(l2, s2, c + V)
            m1v, b1v = _measure_and_boundary(l1, s1, c + V)
            for excess, b in ((m2v - m1, b1), (m1v - m2, b1v)):
                if excess > 1e-12:
                    if b == 0:
                        return math.inf
                    T = max(T, excess / b)
        return T

    # breakpoints of V -> T(V) sit where c + V crosses a level, for c on the grid
    diffs = (lv_all[:, None] - np.asarray(cs)[None, :]).ravel()
    cands = np.unique(np.concatenate([[0.0], diffs[diffs > 0]]))
    best = cands[-1]  # beyond the largest gap T = 0
    for i, V in enumerate(cands):
        best = min(best, V + t_needed(V))
        if i + 1 < cands.size:
            mid = 0.5 * (V + cands[i + 1])
            best = min(best, V + t_needed(mid))
    return float(best)


def _functional_lower(h1: CadlagStep, h2: CadlagStep, metric: str) -> float:
    L1 = _levels(h1, metric)
    L2 = _levels(h2, metric)
    out = float(_vdist(L1[0], L2[0]))
    out = max(out, float(_vdist(L1[-1], L2[-1])))
    out = max(out, float(_vdist(np.max(L1), np.max(L2))))
    out = max(out, float(_vdist(np.min(L1), np.min(L2))))
    j1 = np.max(np.abs(np.diff(L1))) if h1.n_jumps else 0.0
    j2 = np.max(np.abs(np.diff(L2))) if h2.n_jumps else 0.0
    return max(out, 0.5 * abs(j1 - j2))


def j1_oracle(h1: CadlagStep, h2: CadlagStep, grid_resolution: int = 64,
              value_metric: str = "raw") -> OracleBracket:
    """Certified two-sided bracket for the J1 distance, independent of
    j1_distance's matching enumeration."""
    if grid_resolution < 8:
        raise ValueError("grid_resolution must be >= 8")
    upper = min(uniform_distance(h1, h2, value_metric),
                _lattice_upper(h1, h2, grid_resolution, value_metric))
    lower = max(_functional_lower(h1, h2, value_metric),
                _occupation_lower(h1, h2, value_metric))
    lower = min(lower, upper)
    return OracleBracket(lower, upper)
