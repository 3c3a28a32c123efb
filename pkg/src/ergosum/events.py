"""Shrinking-target events, separation indices, and multiple Borel-Cantelli statistics.

Targets come in three kinds sharing the scale rho_N = N^(1/s) (ln N)^t:
exceedance sets {phi > C rho_N}, value windows {phi/rho_N in [c-eps, c+eps]},
and the delayed-entry (tilde) variant of a window used at periodic singularity
points: out of the window for p0 = ceil(ln ln N) consecutive steps and in it
at step p0.  Hitting statistics of orbits in these sets feed the empirical
non-clustering conditions and the series classifier that decides between the
finite and infinite Borel-Cantelli regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientStatisticsError
from .maps import CircleMap, OrbitStream
from .observable import SingularObservable
from .sampling import points_at, preimage_digit_matrix, rng_for, sample_arc_digits


@dataclass(frozen=True)
class EventSpec:
    kind: str                      # "exceedance" | "window" | "tilde_window"
    t_exponent: float
    C: float = 1.0
    c: Optional[float] = None
    eps: Optional[float] = None
    period: Optional[int] = None   # period of the singularity point, tilde only

    def __post_init__(self):
        if self.kind not in ("exceedance", "window", "tilde_window"):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind == "exceedance":
            if self.C <= 0:
                raise ValueError("exceedance scale C must be positive")
        else:
            if self.c is None or self.eps is None or not (0.0 < self.eps < self.c):
                raise ValueError("window needs 0 < eps < c")

    def validate_window(self, gamma: float, s: float):
        """Periodic-point admissibility of the window half-width."""
        if self.period is not None:
            bound = (gamma ** (self.period / s) - 1.0) / (gamma ** (self.period / s) + 1.0) * self.c
            if not self.eps < bound:
                raise ValueError(
                    f"eps={self.eps} too wide for period {self.period}: need < {bound:.6g}")

    def rho(self, N: int, s: float) -> float:
        return float(N) ** (1.0 / s) * math.log(N) ** self.t_exponent

    def p0(self, N: int) -> int:
        if N < 16:
            raise ValueError("need N >= 16 so ln ln N >= 1")
        return int(math.ceil(math.log(math.log(N))))

    def value_bounds(self, N: int, s: float):
        """Kept phi-range: (C rho, inf) or the closed window [rho(c-eps), rho(c+eps)]."""
        r = self.rho(N, s)
        if self.kind == "exceedance":
            return self.C * r, math.inf
        return r * (self.c - self.eps), r * (self.c + self.eps)

    def membership(self, values, N: int, s: float):
        lo, hi = self.value_bounds(N, s)
        v = np.asarray(values, dtype=float)
        if self.kind == "exceedance":
            return v > lo
        return (v >= lo) & (v <= hi)


@dataclass(frozen=True)
class SeparationParams:
    """Gap thresholds: short-range s(N) = ceil(K ln N), long-range shat(N) = ceil(2 eps_hat N)."""

    K: float = 1.0
    eps_hat: float = 0.05

    def s_of(self, N: int) -> int:
        return int(math.ceil(self.K * math.log(N)))

    def hat_s_of(self, N: int) -> int:
        return int(math.ceil(2.0 * self.eps_hat * N))


@dataclass
class HitRecord:
    N: int
    times: np.ndarray    # 1-based step indices k with f^k y in the target
    values: np.ndarray   # phi at the membership step

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.size and (np.any(np.diff(self.times) <= 0) or self.times[-1] > self.N):
            raise ValueError("hit times must be strictly increasing and <= N")

    def min_gap(self) -> Optional[int]:
        return int(np.min(np.diff(self.times))) if self.times.size > 1 else None


def write_hits_csv(path: str, records: dict):
    """Hit records keyed by seed as CSV rows (seed, k, value)."""
    with open(path, "w") as f:
        f.write("seed,k,value\n")
        for seed in sorted(records):
            rec = records[seed]
            for k, v in zip(rec.times, rec.values):
                f.write(f"{seed},{k},{v!r}\n")


def target_arcs(spec: EventSpec, obs: SingularObservable, N: int, s: float):
    """The target as circle arcs (may wrap; returned as non-wrapping pieces).

    Exact for psi = 0; otherwise boundaries are located by root finding.
    """
    lo, hi = spec.value_bounds(N, s)
    um_lo, up_lo = obs.superlevel_radii(lo)
    x = obs.x
    if spec.kind == "exceedance":
        return _wrap_split(x - um_lo, x + up_lo)
    um_hi, up_hi = obs.superlevel_radii(hi)
    arcs = _wrap_split(x + up_hi, x + up_lo) + _wrap_split(x - um_lo, x - um_hi)
    return arcs


def _wrap_split(lo: float, hi: float):
    if hi <= lo:
        return []
    lo_m = lo % 1.0
    hi_m = lo_m + (hi - lo)
    if hi_m <= 1.0:
        return [(lo_m, hi_m)]
    return [(lo_m, 1.0), (0.0, hi_m - 1.0)]


def sigma(spec: EventSpec, obs: SingularObservable, N: int, s: float,
          density=None) -> float:
    """Target measure; Lebesgue arc length unless a density estimate is given."""
    arcs = target_arcs(spec, obs, N, s)
    if density is None:
        return float(sum(hi - lo for lo, hi in arcs))
    return density.arcs_measure(arcs)


def event_indicator(spec: EventSpec, obs: SingularObservable, N: int, y,
                    cmap: Optional[CircleMap] = None, s: Optional[float] = None):
    """Pointwise membership; the tilde variant follows the forward orbit of y."""
    s = obs.s if s is None else s
    if spec.kind != "tilde_window":
        return spec.membership(obs.eval(y), N, s)
    if cmap is None:
        raise ValueError("tilde events need the map")
    p0 = spec.p0(N)
    z = np.asarray(y, dtype=float)
    inside = spec.membership(obs.eval(z), N, s)
    bad = inside.copy()
    for _ in range(p0 - 1):
        z = cmap.step(z)
        bad |= spec.membership(obs.eval(z), N, s)
    z = cmap.step(z)
    fin = spec.membership(obs.eval(z), N, s)
    out = (~bad) & fin
    return out if out.ndim else bool(out)


def hits_from_values(spec: EventSpec, values: np.ndarray, N: int, s: float,
                     scale_N: Optional[int] = None) -> HitRecord:
    """Hit record from a precomputed value series phi(f^k y), k = 1..len(values).

    scale_N sets the target scale rho_N (defaults to the record horizon N; pass
    it explicitly when only a sub-window of a longer orbit is scanned).  For
    tilde windows the series must extend p0 steps beyond N.
    """
    values = np.asarray(values, dtype=float)
    sN = N if scale_N is None else scale_N
    if spec.kind != "tilde_window":
        base = spec.membership(values[:N], sN, s)
        ks = np.nonzero(base)[0] + 1
        return HitRecord(N, ks, values[ks - 1])
    p0 = spec.p0(sN)
    if values.size < N + p0:
        raise ValueError(f"tilde hits need {N + p0} values, got {values.size}")
    base = spec.membership(values, sN, s)
    csum = np.concatenate([[0], np.cumsum(base)])
    # hit at k: no membership at steps k..k+p0-1, membership at k+p0
    window_sums = csum[p0:] - csum[:-p0]          # sum over p0 consecutive steps
    cand = np.nonzero((window_sums[:N] == 0) & base[p0: N + p0])[0] + 1
    return HitRecord(N, cand, values[cand - 1 + p0])


def hits(spec: EventSpec, obs: SingularObservable, stream: OrbitStream, N: int,
         s: Optional[float] = None) -> HitRecord:
    """All k <= N with f^k y in the target, read from a fresh orbit stream."""
    if stream.step_count != 0:
        raise ValueError("hits needs a fresh stream (position 0)")
    s = obs.s if s is None else s
    extra = spec.p0(N) if spec.kind == "tilde_window" else 0
    pts = stream.take(N + extra)
    return hits_from_values(spec, obs.eval(pts), N, s)


def sep_index(times, sN: int) -> int:
    """Number of gaps (from k0 = 0) of at least sN in a sorted hit tuple."""
    times = np.asarray(times, dtype=np.int64)
    gaps = np.diff(np.concatenate([[0], times]))
    return int(np.count_nonzero(gaps >= sN))


def hat_sep_index(times, hat_sN: int) -> int:
    return sep_index(times, hat_sN)


def max_separated_subset(times, sN: int) -> int:
    """Largest tuple size with every gap (including from 0) at least sN; greedy."""
    last = 0
    count = 0
    for k in np.asarray(times, dtype=np.int64):
        if k - last >= sN:
            count += 1
            last = k
    return count


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def wilson_interval(k: int, n: int, z: float = 1.96):
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


@dataclass
class RatioEstimate:
    ratio: float
    ci_low: float
    ci_high: float
    numerator: float
    denominator: float
    n_samples: int
    n_hits: int

    def ci_contains(self, x: float) -> bool:
        return self.ci_low <= x <= self.ci_high


def _require_linear(cmap: CircleMap, what: str):
    if not cmap.is_linear:
        raise ValueError(f"{what} uses exact preimage enumeration; linear maps only")


_BATCH = 200_000


def joint_hit_ratio(cmap: CircleMap, arc_sets, ks, samples: int, seed,
                    *, min_expected: float = 50.0) -> RatioEstimate:
    """mu(  intersect_j f^-k_j (A_j) ) / prod_j Leb(A_j) by conditioning on the
    first constraint and testing the rest on exact digit orbits; unbiased for
    linear maps, where Lebesgue is invariant.  Processed in batches so digit
    matrices stay small."""
    _require_linear(cmap, "joint_hit_ratio")
    m = cmap.degree
    ks = list(ks)
    sig = [sum(hi - lo for lo, hi in arcs) for arcs in arc_sets]
    rest = float(np.prod(sig[1:])) if len(sig) > 1 else 1.0
    if len(ks) == 1:
        return RatioEstimate(1.0, 1.0, 1.0, sig[0], sig[0], 0, 0)
    expected = samples * rest
    if expected < min_expected:
        raise InsufficientStatisticsError(
            f"expected conditional hits {expected:.1f} < {min_expected}")
    rng = rng_for(seed, 0xA110) if not isinstance(seed, np.random.Generator) else seed
    depth = max(ks) - ks[0] + 80
    rel = [k - ks[0] for k in ks[1:]]
    hits_n = 0
    done = 0
    while done < samples:
        b = min(_BATCH, samples - done)
        digits = preimage_digit_matrix(arc_sets[0], ks[0], b, m, depth, rng)
        pts = points_at(digits[:, ks[0]:], m, rel)
        good = np.ones(b, dtype=bool)
        for col, arcs in enumerate(arc_sets[1:]):
            member = np.zeros(b, dtype=bool)
            for lo, hi in arcs:
                member |= (pts[:, col] >= lo) & (pts[:, col] < hi)
            good &= member
        hits_n += int(good.sum())
        done += b
    phat = hits_n / samples
    lo_ci, hi_ci = wilson_interval(hits_n, samples)
    return RatioEstimate(phat / rest, lo_ci / rest, hi_ci / rest,
                         sig[0] * phat, float(np.prod(sig)), samples, hits_n)


def estimate_M1(cmap: CircleMap, obs: SingularObservable, specs: Sequence[EventSpec],
                N: int, ks: Sequence[int], samples: int, seed,
                sep: Optional[SeparationParams] = None,
                *, min_expected: float = 50.0) -> RatioEstimate:
    """Joint-over-product ratio for a fully separated tuple; near 1 under (M1)."""
    ks = sorted(int(k) for k in ks)
    if len(ks) != len(specs) or ks[0] <= 0 or ks[-1] > N:
        raise ValueError("need one spec per time, 0 < k_1 < ... <= N")
    sep = sep or SeparationParams()
    if sep_index(ks, sep.s_of(N)) != len(ks):
        raise ValueError("tuple is not fully separated at s(N)")
    arc_sets = [target_arcs(sp, obs, N, obs.s) for sp in specs]
    return joint_hit_ratio(cmap, arc_sets, ks, samples, seed, min_expected=min_expected)


@dataclass
class M2Report:
    p_values: np.ndarray
    joint: np.ndarray            # mu-hat(Omega ∩ f^-p Omega)
    ci_low: np.ndarray
    ci_high: np.ndarray
    sigma: float
    theta_fit: float             # smallest theta with joint <= sigma * theta^p
    certified_zero_upto: int     # recurrence-free range from the Diophantine check
    n_samples: int

    @property
    def decays(self) -> bool:
        return self.theta_fit < 1.0


def estimate_M2(cmap: CircleMap, obs: SingularObservable, spec: EventSpec, N: int,
                p_values: Sequence[int], samples: int, seed,
                *, certified_zero_upto: int = 0) -> M2Report:
    """Gap decay of the pair probability mu(Omega ∩ f^-p Omega) by conditioning
    on the target and following the exact orbit p steps."""
    _require_linear(cmap, "estimate_M2")
    arcs = target_arcs(spec, obs, N, obs.s)
    sig = sum(hi - lo for lo, hi in arcs)
    p_values = np.asarray(sorted(p_values), dtype=int)
    rng = rng_for(seed, 0xB222)
    depth = int(p_values.max()) + 80
    counts = np.zeros(p_values.size, dtype=np.int64)
    done = 0
    while done < samples:
        b = min(_BATCH, samples - done)
        digits = sample_arc_digits(arcs, b, cmap.degree, depth, rng)
        pts = points_at(digits, cmap.degree, p_values)
        for i in range(p_values.size):
            member = np.zeros(b, dtype=bool)
            for lo, hi in arcs:
                member |= (pts[:, i] >= lo) & (pts[:, i] < hi)
            counts[i] += int(member.sum())
        done += b
    joint = np.empty(p_values.size)
    lo_ci = np.empty(p_values.size)
    hi_ci = np.empty(p_values.size)
    theta = 0.0
    for i, p in enumerate(p_values):
        k = int(counts[i])
        joint[i] = sig * k / samples
        l, h = wilson_interval(k, samples)
        lo_ci[i], hi_ci[i] = sig * l, sig * h
        if k:
            theta = max(theta, (k / samples) ** (1.0 / p))
    return M2Report(p_values, joint, lo_ci, hi_ci, sig, float(theta),
                    certified_zero_upto, samples)


def estimate_M4_star(cmap: CircleMap, obs: SingularObservable, spec: EventSpec,
                     N: int, r: int, sep: SeparationParams, samples: int,
                     seed, *, mode: str = "auto") -> RatioEstimate:
    """P(some fully separated r-tuple of hits occurs by time N) / (N sigma)^r."""
    sig = sigma(spec, obs, N, obs.s)
    denom = (N * sig) ** r
    sN = sep.s_of(N)
    count = 0
    for i in range(samples):
        stream = OrbitStream(cmap, mode, seed=rng_for(seed, 0xACE, i))
        rec = hits_from_values(spec, obs.eval(stream.take(N)), N, obs.s)
        if max_separated_subset(rec.times, sN) >= r:
            count += 1
    phat = count / samples
    lo, hi = wilson_interval(count, samples)
    return RatioEstimate(phat / denom if denom else 0.0,
                         lo / denom if denom else 0.0,
                         hi / denom if denom else 0.0,
                         phat, denom, samples, count)


def estimate_M4_intervals(cmap: CircleMap, obs: SingularObservable,
                          specs: Sequence[EventSpec], intervals, N: int,
                          sep: SeparationParams, samples: int, seed,
                          *, mode: str = "auto") -> RatioEstimate:
    """P(every window I_j catches a hit of its target by time N) over the
    product prediction N^r prod_j sigma_j |I_j|.

    Tilde specs are honored per window (the extra p0 orbit steps the pattern
    needs are read past each window end).
    """
    intervals = [(float(a), float(b)) for a, b in intervals]
    if len(intervals) != len(specs):
        raise ValueError("one interval per spec")
    pts = [0.0] + [a for a, _ in intervals]
    ends = [0.0] + [b for _, b in intervals]
    for i in range(1, len(pts)):
        if pts[i] < ends[i - 1]:
            raise ValueError("intervals must be sorted and disjoint (with I_0 = {0})")
    min_gap = min(pts[i] - ends[i - 1] for i in range(1, len(pts)))
    if min_gap <= sep.hat_s_of(N) / N:
        raise ValueError(
            f"interval separation {min_gap:.4g} must exceed hat_s(N)/N = {sep.hat_s_of(N) / N:.4g}")
    sigs = [sigma(sp, obs, N, obs.s) for sp in specs]
    denom = float(N ** len(specs) * np.prod([sg * (b - a) for sg, (a, b) in zip(sigs, intervals)]))
    count = 0
    for i in range(samples):
        stream = OrbitStream(cmap, mode, seed=rng_for(seed, 0xD4, i))
        ok = True
        pos = 0
        for sp, (a, b) in zip(specs, intervals):
            p0 = sp.p0(N) if sp.kind == "tilde_window" else 0
            k_lo = max(int(math.ceil(a * N)), 1)
            k_hi = int(math.floor(b * N))
            if k_lo > k_hi:
                ok = False
                break
            if k_lo - 1 > pos:
                stream.skip(k_lo - 1 - pos)
                pos = k_lo - 1
            n_take = k_hi - pos + p0
            vals = obs.eval(stream.take(n_take))
            pos += n_take
            horizon = k_hi - k_lo + 1
            rec = hits_from_values(sp, vals[: horizon + p0], horizon, obs.s,
                                   scale_N=N)
            if rec.times.size == 0:
                ok = False
                break
        if ok:
            count += 1
    phat = count / samples
    lo, hi = wilson_interval(count, samples)
    return RatioEstimate(phat / denom, lo / denom, hi / denom, phat, denom,
                         samples, count)


def estimate_M3_cross_scale(cmap: CircleMap, obs: SingularObservable,
                            spec: EventSpec, i_exp: int, j_exp: int,
                            sep: SeparationParams, samples: int, seed,
                            *, mode: str = "auto") -> RatioEstimate:
    """Cross-scale independence: hits of the scale-2^i target inside
    (2^i, 2^(i+1)] against hits of the scale-2^j target inside (2^j, 2^(j+1)].

    Estimates P(A ∩ B) / (P(A) P(B)); the non-clustering hypothesis across
    dyadic scales predicts a ratio of at most 1 + o(1).  Requires the block
    gap 2^j - 2^(i+1) to clear hat_s(2^(j+1)).
    """
    if j_exp - i_exp < 2:
        raise ValueError("need j - i >= 2")
    Ni, Nj = 2 ** i_exp, 2 ** j_exp
    if Nj - 2 * Ni < sep.hat_s_of(2 * Nj):
        raise ValueError("scale blocks too close for the long-range separation")
    hitA = np.zeros(samples, dtype=bool)
    hitB = np.zeros(samples, dtype=bool)
    for idx in range(samples):
        stream = OrbitStream(cmap, mode, seed=rng_for(seed, 0x313, idx))
        stream.skip(Ni)
        vA = obs.eval(stream.take(Ni))
        hitA[idx] = bool(np.any(spec.membership(vA, 2 * Ni, obs.s)))
        stream.skip(Nj - 2 * Ni)
        vB = obs.eval(stream.take(Nj))
        hitB[idx] = bool(np.any(spec.membership(vB, 2 * Nj, obs.s)))
    a = hitA.mean()
    b = hitB.mean()
    ab = (hitA & hitB).mean()
    denom = a * b
    if denom == 0.0:
        raise InsufficientStatisticsError("no marginal hits at these scales")
    infl = ((hitA & hitB) - ab) / denom \
        - ab * (hitA - a) / (a * a * b) - ab * (hitB - b) / (a * b * b)
    se = float(np.std(infl, ddof=1) / math.sqrt(samples))
    ratio = ab / denom
    return RatioEstimate(ratio, ratio - 1.96 * se, ratio + 1.96 * se,
                         ab, denom, samples, int((hitA & hitB).sum()))


@dataclass
class SrClassification:
    verdict: str                 # "finite" | "infinite"
    exponent: float              # t * s * r, the p-series exponent
    partial_sums: np.ndarray
    terms: np.ndarray


def classify_Sr(t_exponent: float, s: float, r: int, *, j_range=(1, 60),
                sigmas: Optional[np.ndarray] = None, a: float = 1.0,
                C: float = 1.0, rho0: float = 1.0) -> SrClassification:
    """Convergence of sum_j (2^j sigma_{rho_{2^j}})^r.

    With rho_N = N^(1/s)(ln N)^t and the tail law, (2^j sigma)^r is a constant
    times j^(-t s r): finite exactly when t*s*r > 1.  Numeric partial sums are
    reported alongside the symbolic verdict.
    """
    js = np.arange(j_range[0], j_range[1] + 1)
    if sigmas is None:
        rho = (2.0 ** js) ** (1.0 / s) * (js * math.log(2.0)) ** t_exponent
        sigmas = 2.0 * a ** s * rho0 * (C * rho) ** -s
    terms = (2.0 ** js * np.asarray(sigmas)) ** r
    exponent = t_exponent * s * r
    return SrClassification("finite" if exponent > 1.0 else "infinite",
                            exponent, np.cumsum(terms), terms)


def exceedance_level(N: int, eps: float, s: float, alpha: float) -> float:
    return eps * float(N) ** (1.0 / s) * math.log(N) ** alpha


def count_exceedances(X, N: int, eps: float, s: float, alpha: float) -> int:
    """#{k <= N : X_k > eps N^(1/s) (ln N)^alpha}."""
    X = np.asarray(X, dtype=float)[:N]
    return int(np.count_nonzero(X > exceedance_level(N, eps, s, alpha)))


def two_humps_scan(X, N: int, alpha_bar: float, alpha: float, eps_bar: float,
                   sN: int, *, s: float, r: Optional[int] = None) -> np.ndarray:
    """Pairs (n_bar, n_hat) with (ln N)^((alpha-alpha_bar)/2) <= |gap| <= 2 s(N)
    and both values above eps_bar N^(1/s) (ln N)^(alpha-1); boundary inclusive."""
    if not alpha_bar < alpha:
        raise ValueError("need alpha_bar < alpha")
    if r is not None and not alpha_bar > 1.0 / ((r + 1) * s):
        raise ValueError("alpha_bar below the admissible range for this jump budget")
    X = np.asarray(X, dtype=float)[:N]
    level = eps_bar * float(N) ** (1.0 / s) * math.log(N) ** (alpha - 1.0)
    idx = np.nonzero(X > level)[0] + 1
    g_lo = math.log(N) ** ((alpha - alpha_bar) / 2.0)
    g_hi = 2.0 * sN
    out = []
    for i in range(idx.size):
        for j in range(i + 1, idx.size):
            gap = idx[j] - idx[i]
            if gap > g_hi:
                break
            if gap >= g_lo:
                out.append((int(idx[i]), int(idx[j])))
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


@dataclass
class MomentEstimate:
    normalized: float            # E bbarS^m / (N^(m/s) (ln N)^(delta m)) [/ (lnln N)^m]
    raw_moment: float
    stderr: float
    band: tuple
    var_ratio: float             # Var(bar X) / (N^(2/s-1) (ln N)^(-D(2-s)))
    n_samples: int


def moment_estimate(cmap: CircleMap, obs: SingularObservable, N: int, j: int,
                    m_order: int, s: float, delta: float, D: float,
                    samples: int, seed, *, periodic_correction: bool = False,
                    var_samples: int = 10 ** 5) -> MomentEstimate:
    """Normalized m-th moment of the j-th band sum over independent orbits,
    with the truncated-variance envelope check of the small-term layer."""
    if samples < 100:
        raise InsufficientStatisticsError("need at least 100 orbit samples")
    base = float(N) ** (1.0 / s)
    ln = math.log(N)
    lo, hi = base * ln ** (j * delta), base * ln ** ((j + 1) * delta)
    sums = np.empty(samples)
    for i in range(samples):
        stream = OrbitStream(cmap, seed=rng_for(seed, 0x3107, i))
        vals = obs.eval(stream.take(N))
        sums[i] = vals[(vals >= lo) & (vals < hi)].sum()
    raw = float(np.mean(sums ** m_order))
    se = float(np.std(sums ** m_order, ddof=1) / math.sqrt(samples))
    norm = base ** m_order * ln ** (delta * m_order)
    if periodic_correction:
        norm *= math.log(ln) ** m_order
    rng = rng_for(seed, 0x7A6)
    y = rng.random(var_samples)
    xv = obs.eval(y)
    xbar = np.where(xv < base * ln ** (-D), xv, 0.0)
    env = float(N) ** (2.0 / s - 1.0) * ln ** (-D * (2.0 - s))
    var_ratio = float(np.var(xbar, ddof=1) / env)
    return MomentEstimate(raw / norm, raw, se / norm, (lo, hi), var_ratio, samples)
