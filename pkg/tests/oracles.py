"""Independent oracles used to freeze expected values in the tests.

Everything here is computed by a different route than the library code under
test: exact rational interval arithmetic for dyadic set measures under x -> m x,
closed-form power-law integrals for band moments, and direct binomial laws for
the i.i.d. surrogate.
"""

from fractions import Fraction

import numpy as np
from scipy import stats


def interval_intersection_length(a_lo, a_hi, b_lo, b_hi):
    lo = max(a_lo, b_lo)
    hi = min(a_hi, b_hi)
    return max(hi - lo, type(hi - lo)(0))


def preimage_measure_in(m: int, n: int, target_lo, target_hi, within_lo, within_hi):
    """Leb( within ∩ f^-n([target_lo, target_hi)) ) for f = x -> m x mod 1, exact.

    All endpoints are Fractions in [0, 1].  The preimage is the union of
    ([target] + j) / m^n over branches j; only branches overlapping `within`
    are visited.
    """
    t_lo, t_hi = Fraction(target_lo), Fraction(target_hi)
    w_lo, w_hi = Fraction(within_lo), Fraction(within_hi)
    mn = Fraction(m) ** n
    j_min = int((w_lo * mn - t_hi)) - 1
    j_max = int((w_hi * mn - t_lo)) + 1
    total = Fraction(0)
    for j in range(max(j_min, 0), min(j_max, int(mn) - 1) + 1):
        b_lo = (t_lo + j) / mn
        b_hi = (t_hi + j) / mn
        total += interval_intersection_length(w_lo, w_hi, b_lo, b_hi)
    return total


def exact_correlation(m: int, n: int, A, B):
    """E(1_A * 1_B o f^n) - mu(A) mu(B) for intervals A, B under x -> m x; exact."""
    a_lo, a_hi = (Fraction(v) for v in A)
    b_lo, b_hi = (Fraction(v) for v in B)
    joint = preimage_measure_in(m, n, b_lo, b_hi, a_lo, a_hi)
    return joint - (a_hi - a_lo) * (b_hi - b_lo)


def arc_return_measure(m: int, p: int, x, radius):
    """Leb( B(x, r) ∩ f^-p B(x, r) ) for f = x -> m x, exact rational."""
    x = Fraction(x)
    r = Fraction(radius)
    lo, hi = x - r, x + r
    total = Fraction(0)
    # unroll the circle: target arc may be approached from branch offsets around m^p x
    mp = Fraction(m) ** p
    j_min = int(lo * mp - hi) - 1
    j_max = int(hi * mp - lo) + 1
    for j in range(j_min, j_max + 1):
        b_lo = (lo + j) / mp
        b_hi = (hi + j) / mp
        total += interval_intersection_length(lo, hi, b_lo, b_hi)
    return total


def band_probability(a: float, s: float, lo: float, hi: float) -> float:
    """Leb{ y : phi(y) in [lo, hi) } for phi = a d(y,x)^(-1/s), psi = 0."""
    return 2.0 * ((a / lo) ** s - (a / hi) ** s)


def band_value_moments(a: float, s: float, lo: float, hi: float):
    """(E[X 1{band}], E[X^2 1{band}]) for the pure power observable under Lebesgue.

    Valid when lo exceeds the observable's minimum a 2^(1/s); uses the exact
    tail density s * 2 a^s x^(-s-1).
    """
    c = 2.0 * a ** s
    m1 = c * s / (1.0 - s) * (hi ** (1.0 - s) - lo ** (1.0 - s)) if s != 1.0 \
        else c * np.log(hi / lo)
    m2 = c * s / (2.0 - s) * (hi ** (2.0 - s) - lo ** (2.0 - s))
    return m1, m2


def iid_band_sum_second_moment(N: int, a: float, s: float, lo: float, hi: float) -> float:
    """E ( sum_{k<=N} X_k 1{X_k in band} )^2 for i.i.d. uniforms: N m2 + N(N-1) m1^2."""
    m1, m2 = band_value_moments(a, s, lo, hi)
    return N * m2 + N * (N - 1) * m1 ** 2


def binomial_count_pvalue(counts, N: int, sigma: float) -> float:
    """Chi-square goodness of fit of observed exceedance counts against
    Binomial(N, sigma), with cells pooled to expected >= 5."""
    counts = np.asarray(counts, dtype=int)
    kmax = int(counts.max()) + 1
    obs_hist = np.bincount(counts, minlength=kmax + 1).astype(float)
    pmf = stats.binom.pmf(np.arange(kmax + 1), N, sigma)
    pmf[-1] = 1.0 - pmf[:-1].sum()
    exp_hist = pmf * counts.size
    # pool tail cells until every expected count is >= 5
    while exp_hist.size > 2 and exp_hist[-1] < 5:
        exp_hist[-2] += exp_hist[-1]
        obs_hist[-2] += obs_hist[-1]
        exp_hist, obs_hist = exp_hist[:-1], obs_hist[:-1]
    stat = ((obs_hist - exp_hist) ** 2 / exp_hist).sum()
    return float(stats.chi2.sf(stat, df=obs_hist.size - 1))
