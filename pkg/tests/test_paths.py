import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import ergosum as E
from ergosum import paths
from ergosum.paths import CadlagStep


def test_cadlag_validation():
    with pytest.raises(ValueError):
        CadlagStep(np.array([0.5, 0.5]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        CadlagStep(np.array([0.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        CadlagStep(np.array([0.5]), np.array([0.0]))  # zero jump


def test_cadlag_evaluation():
    h = CadlagStep.from_jumps([0.25, 0.75], [1.0, -0.5], initial_value=0.5)
    assert h(0.0) == 0.5
    assert h(0.25) == 1.5       # right continuous
    assert h(0.5) == 1.5
    assert h(1.0) == 1.0
    assert np.allclose(h.jump_sizes(), [1.0, -0.5])


def test_build_wn_examples():
    assert paths.build_WN(np.zeros(8), 0.5, 1.5).n_jumps == 0
    N, s, alpha = 16, 0.5, 1.5
    X = np.zeros(N)
    X[7] = N ** (1 / s) * math.log(N) ** alpha
    w = paths.build_WN(X, s, alpha)
    assert np.allclose(w.jump_times, [0.5]) and np.allclose(w.values, [1.0])
    # s > 1 with constant terms equal to the mean: identically zero
    w2 = paths.build_WN(np.full(16, 3.7), 1.5, 0.6, mean_value=3.7)
    assert w2.n_jumps == 0


@given(st.floats(0.1, 10.0))
@settings(max_examples=20, deadline=None)
def test_build_wn_homogeneous(lam):
    rng = np.random.default_rng(0)
    X = rng.exponential(size=64)
    w1 = paths.build_WN(X, 0.5, 1.5)
    w2 = paths.build_WN(lam * X, 0.5, 1.5)
    assert np.allclose(w2.values, lam * w1.values)
    assert np.array_equal(w2.jump_times, w1.jump_times)


def _orbit_values(n, seed=1, a=1.0, s=0.5, x=0.618):
    stream = E.OrbitStream(E.doubling(), seed=seed)
    return E.SingularObservable(a, s, x).eval(stream.take(n))


def test_split_reconstruction_s_below_1():
    X = _orbit_values(2048)
    sp = paths.split_S(X, 2048, 0.5, 0.2)
    assert sp.b_big == 0.0 and sp.b_small == 0.0
    assert np.allclose(sp.s_big + sp.s_small, np.cumsum(X), rtol=1e-12)


def test_split_degenerate_cases():
    X = np.full(64, 2.0)
    sp = paths.split_S(X, 64, 0.5, 0.2)     # cut is huge: everything small
    assert np.allclose(sp.s_big, 0.0)
    spb = paths.split_S(X * 1e12, 64, 0.5, 0.2)
    assert np.allclose(spb.s_small, 0.0)


def test_trimmed_sums_invariants_s_above_1():
    obs = E.SingularObservable(1.0, 1.5, 0.618)
    X = _orbit_values(1024, a=1.0, s=1.5)
    ts = paths.trimmed_sums(X, 1024, 1.5, 0.7, 0.2, 4.0, obs=obs)
    n = np.arange(1, 1025)
    recon = ts.s_big + ts.s_small + n * (ts.b_big + ts.b_small)
    assert np.allclose(recon, ts.S, rtol=1e-9)
    recon2 = ts.bar + ts.bbar + n * (ts.bar_b + ts.bbar_b - ts.b_small)
    scale = np.maximum(np.abs(ts.s_small), 1.0)
    assert np.max(np.abs(ts.s_small - recon2) / scale) < 1e-9
    # at this scale the below-lower-cut layer is empty (min phi exceeds the cut)
    assert ts.b_big > 0 and ts.bbar_b > 0 and ts.bar_b == 0.0


def test_split_bar_requires_admissible_D():
    X = _orbit_values(256)
    with pytest.raises(ValueError):
        paths.split_bar(X, 256, 1.5, 0.2, D=2.0, alpha=0.7)  # 2*0.5+1.4 = 2.4 < 3
    paths.split_bar(X, 256, 1.5, 0.2, D=4.0, alpha=0.7,
                    obs=E.SingularObservable(1, 1.5, 0.618))


def test_validate_d_examples():
    assert paths.validate_D(1.0, 0.5, 1.5)
    assert not paths.validate_D(2.0, 1.5, 0.7)
    assert paths.validate_D(4.0, 1.5, 0.7)


def test_alpha_window_examples_and_tiling():
    assert paths.alpha_window(1, 0.5) == (1.0, 2.0)
    lo, hi = paths.alpha_window(2, 1.0)
    assert (lo, hi) == pytest.approx((1 / 3, 1 / 2))
    # consecutive windows tile (0, 1/s]
    s = 0.8
    edges = [paths.alpha_window(r, s) for r in range(1, 8)]
    for (lo1, _), (_, hi2) in zip(edges, edges[1:]):
        assert lo1 == pytest.approx(hi2)
    assert edges[0][1] == pytest.approx(1 / s)


def test_project_examples():
    p = CadlagStep.from_jumps([0.2, 0.5, 0.8], [5.0, 1.0, 3.0])
    pr = paths.project_Hr(p, 2)
    assert np.allclose(pr.jump_times, [0.2, 0.8])
    assert np.allclose(pr.jump_sizes(), [5.0, 3.0])
    assert paths.project_Hr(p, 0).n_jumps == 0
    assert paths.project_Hr(p, 5, jump_floor=10.0).n_jumps == 0
    # ties keep the earlier time
    tie = CadlagStep.from_jumps([0.3, 0.6], [2.0, 2.0])
    assert np.allclose(paths.project_Hr(tie, 1).jump_times, [0.3])


@given(st.integers(0, 6), st.lists(st.tuples(st.floats(0.01, 0.99),
                                             st.floats(-2, 2).filter(lambda v: abs(v) > 1e-3)),
                                   min_size=0, max_size=6, unique_by=lambda t: round(t[0], 3)))
@settings(max_examples=40, deadline=None)
def test_project_idempotent_monotone(r, jumps):
    path = CadlagStep.from_jumps([t for t, _ in jumps], [v for _, v in jumps]) \
        if jumps else CadlagStep.constant(0.0)
    pr = paths.project_Hr(path, r)
    assert pr.n_jumps <= r
    assert pr.initial_value == 0.0
    assert np.all(pr.jump_sizes() > 0)
    again = paths.project_Hr(pr, r)
    assert np.array_equal(again.jump_times, pr.jump_times)
    assert np.allclose(again.values, pr.values)
    # monotone in r: keeping r jumps contains the r-1 selection by size
    smaller = paths.project_Hr(path, max(r - 1, 0))
    assert set(np.round(smaller.jump_times, 12)) <= set(np.round(pr.jump_times, 12))


def test_band_sum_examples_and_tiling():
    X = _orbit_values(4096)
    N, s, delta, D = 4096, 0.5, 0.2, 1.0
    empty = paths.band_sum(np.full(N, 1.0), N, -2, s, delta, D)
    assert np.all(empty == 0.0)
    with pytest.raises(ValueError):
        paths.band_sum(X, N, 1, s, delta, D)
    with pytest.raises(ValueError):
        paths.band_sum(X, N, 0, s, delta, D=0.33)  # not an integer multiple of delta
    total = sum(paths.band_sum(X, N, j, s, delta, D) for j in range(-5, 1))
    th = E.thresholds(N, s, delta, D)
    mid = np.cumsum(np.where((X >= th.lower) & (X < th.upper), X, 0.0))
    assert np.array_equal(total, mid)


def test_band_sum_single_hit():
    N = 64
    s, delta, D = 0.5, 0.2, 1.0
    base = float(N) ** 2
    X = np.zeros(N)
    X[10] = base * math.log(N) ** 0.1   # inside band j = 0
    bs = paths.band_sum(X, N, 0, s, delta, D)
    assert bs[9] == 0.0 and bs[10] == X[10] and bs[-1] == X[10]


def test_sup_remainder():
    assert paths.sup_remainder(np.zeros(100), 100, 0.5, 1.5) == 0.0
    mono = np.arange(1, 101, dtype=float)
    scale = 100 ** 2 * math.log(100) ** 1.5
    assert paths.sup_remainder(mono, 100, 0.5, 1.5) == pytest.approx(100 / scale)
    with pytest.raises(ValueError):
        paths.sup_remainder(np.zeros(2), 2, 0.5, 1.5)


def test_count_matches_projection_jumps():
    from ergosum.events import count_exceedances
    X = _orbit_values(4096)
    N, s, alpha, eps = 4096, 0.5, 1.5, 0.1
    w = paths.build_WN(X, s, alpha)
    pj = paths.project_Hr(w, None, jump_floor=eps)
    assert count_exceedances(X, N, eps, s, alpha) == pj.n_jumps


def test_top_positive_jump_path_equals_projection():
    X = _orbit_values(4096)
    N, s, alpha, delta = 4096, 0.5, 1.5, 0.2
    cut = E.thresholds(N, s, delta, 1.0).upper
    big = np.where(X >= cut, X, 0.0)
    dense = paths.build_WN(big, s, alpha)
    assert np.allclose(paths.project_Hr(dense, 1).values,
                       paths.top_positive_jump_path(big, N, s, alpha, 1).values)
