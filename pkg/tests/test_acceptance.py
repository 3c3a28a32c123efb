"""Acceptance suite: the desk-scale statistical gates, one test per criterion.

Every criterion runs at its stated tolerance with a fixed master seed (the
whole suite is deterministic and reproducible byte for byte).  Where a
criterion leaves the observable amplitude free, the configured value is chosen
so the asymptotic regime is resolvable at desk scale; each such choice is
noted at the test.  One pass/fail line per criterion is echoed into the
pytest terminal summary.
"""

import math
from fractions import Fraction

import numpy as np

import ergosum as E
from ergosum import events, experiment
from ergosum.events import EventSpec, SeparationParams
from ergosum.experiment import ExperimentConfig
from ergosum.j1 import j1_distance, j1_oracle

import conftest
from oracles import binomial_count_pvalue

MASTER = 20260810
M2 = E.doubling()
GOLDEN = 0.6180339887498949   # Diophantine-checked reference point


def record(num, name, passed, detail):
    line = f"ACCEPTANCE {num:2d} [{name:12s}]: {'PASS' if passed else 'FAIL'} - {detail}"
    print(line, flush=True)
    conftest.acceptance_lines.append(line)
    assert passed, line


def test_criterion_01_tail_law():
    # x2 map, psi = 0, a = 1, s in {0.5, 1.5}; 1e7 Lebesgue samples;
    # t^s mu(phi > t) within 5% of the exact two-sided constant 2 a^s at t = 1e2, 1e3.
    details = []
    ok = True
    for s, D in ((0.5, 1.0), (1.5, 5.0)):
        cfg = ExperimentConfig(a=1.0, s=s, alpha=None, r=1, D=D, n_min=14, n_max=14,
                               master_seed=MASTER)
        res = experiment.check_tail(cfg, samples=10 ** 7, t_grid=(100.0, 1000.0),
                                    rel_tol=0.05)
        ok &= res.passed
        details.append(f"s={s}: t^s*mu={np.round(res.stats['t_s_mu'], 4).tolist()} "
                       f"vs exact {res.stats['c_exact_two_sided']} "
                       f"(stated one-sided {res.stats['c_stated_one_sided']})")
    record(1, "tail", ok, "; ".join(details))


def test_criterion_02_exponential_mixing():
    # 1e7 samples; half-indicator correlations within 3 SE of 0 at lags 1..20;
    # quarter-indicator lag-1 within 3 SE of 1/16; envelope theta <= 0.6.
    cfg = ExperimentConfig(a=1.0, s=0.5, alpha=1.5, r=1, n_min=14, n_max=14,
                           master_seed=MASTER)
    res = experiment.check_mixing(cfg, samples=10 ** 7)
    detail = (f"quarter lag1 {res.stats['quarter_lag1']:.6f} (exact 1/16), "
              f"theta: half {res.stats['theta_half']:.3f}, "
              f"quarter {res.stats['theta_quarter']:.3f}")
    record(2, "mixing", res.passed, detail)


def test_criterion_03_j1_metric():
    # 200 randomized pairs with <= 4 jumps: exact distance inside the bracket
    # at resolution 64; exact symmetry; zero identity; triangle within 1e-9.
    rng = np.random.default_rng(MASTER)

    def rnd():
        k = int(rng.integers(0, 5))
        ts = np.unique(np.round(rng.random(k) * 0.96 + 0.02, 6))
        sz = rng.normal(0, 1, ts.size)
        sz[np.abs(sz) < 1e-3] = 0.5
        return E.CadlagStep.from_jumps(ts, sz, float(rng.normal())) if ts.size \
            else E.CadlagStep.constant(float(rng.normal()))

    sandwich_fail = sym_fail = ident_fail = 0
    for _ in range(200):
        a, b = rnd(), rnd()
        d = j1_distance(a, b).distance
        br = j1_oracle(a, b, 64)
        if not (br.lower - 1e-9 <= d <= br.upper + 1e-9):
            sandwich_fail += 1
        if j1_distance(b, a).distance != d:
            sym_fail += 1
        if j1_distance(a, a).distance != 0.0:
            ident_fail += 1
    tri_fail = 0
    for _ in range(200):
        a, b, c = rnd(), rnd(), rnd()
        if j1_distance(a, c).distance > (j1_distance(a, b).distance
                                         + j1_distance(b, c).distance + 1e-9):
            tri_fail += 1
    ok = sandwich_fail == sym_fail == ident_fail == tri_fail == 0
    record(3, "j1-metric", ok,
           f"bracket fails {sandwich_fail}/200, symmetry fails {sym_fail}, "
           f"identity fails {ident_fail}, triangle fails {tri_fail}/200")


def test_criterion_04_jump_budget():
    # s=0.5, r=1, alpha=1.5, eps=0.1; 1e3 seeds, N = 2^14..2^24: the fraction
    # of seeds with count >= 2 is nonincreasing up to CI overlap and <= 5% at
    # 2^24.  Amplitude a = 0.05 sets the tail constant so the single-jump
    # regime is resolved on this ladder (with a = 1 the (ln N)^(-3/4) decay of
    # N sigma_N has not brought the two-exceedance probability under 5% yet).
    cfg = ExperimentConfig(a=0.05, s=0.5, alpha=1.5, r=1, eps_jump=0.1,
                           delta=0.15, D=1.0, n_min=14, n_max=24, seeds=1000,
                           x=GOLDEN, master_seed=MASTER)
    res = experiment.check_jump_budget(cfg, final_bound=0.05)
    frac = res.stats["frac_over_budget"]
    record(4, "jump-budget", res.passed,
           f"frac(count>=2): {np.round(frac, 4).tolist()}, "
           f"monotone-up-to-CI {res.stats['monotone_up_to_ci']}, "
           f"final {frac[-1]:.4f} <= 0.05")


def test_criterion_05_trimmed_remainder():
    # same regime, delta = 0.15: the median of sup_n |S''_n| / (N^2 (ln N)^1.5)
    # over 100 seeds drops by a factor >= 2 from 2^14 to 2^24.
    cfg = ExperimentConfig(a=1.0, s=0.5, alpha=1.5, r=1, delta=0.15, D=1.0,
                           n_min=14, n_max=24, seeds=100, x=GOLDEN,
                           master_seed=MASTER)
    res = experiment.check_lemma5(cfg)
    med = res.stats["medians"]
    record(5, "lemma5", res.passed,
           f"median 2^14 = {med[0]:.4f}, 2^24 = {med[-1]:.4f}, "
           f"decay ratio {res.stats['decay_ratio_first_to_last']:.3f} >= 2")


def test_criterion_06_coverage_rate():
    # r=1 window c=1, eps=0.25, I=[0.4, 0.6], N=2^20, 1e4 seeds, Diophantine x:
    # hit frequency / (N |I| sigma) inside [0.5, 1.5], CI reported.
    cfg = ExperimentConfig(a=1.0, s=0.5, alpha=1.5, r=1, window_c=1.0,
                           window_eps=0.25, interval_lo=0.4, interval_hi=0.6,
                           n_min=20, n_max=20, seeds=10 ** 4, x=GOLDEN,
                           master_seed=MASTER)
    dio = E.diophantine_check(M2, GOLDEN, rho_min=2.0 ** -26, eps=0.5, rho0=0.01)
    res = experiment.check_coverage_rate(cfg, band=(0.5, 1.5))
    ratio = res.stats["ratio"][-1]
    ci = res.stats["ci"][-1]
    record(6, "coverage", res.passed and dio.is_diophantine,
           f"ratio {ratio:.3f}, CI [{ci[0]:.3f}, {ci[1]:.3f}] in [0.5, 1.5]; "
           f"x certified Diophantine: {dio.is_diophantine}")


def test_criterion_07_periodic_machinery():
    # x = 1/3 under doubling: exact period 2; tilde hit records never contain
    # two times closer than p0 (1e3 seeds, N = 2^18).  The amplitude used here
    # (a = 100) makes the window land about 0.8 expected hits per orbit so the
    # invariant is exercised, not vacuous.
    q = E.detect_period(M2, 1.0 / 3.0, q_max=8, tol=1e-12)
    obs = E.SingularObservable(100.0, 0.5, 1.0 / 3.0)
    spec = EventSpec("tilde_window", t_exponent=1.5, c=1.0, eps=0.25, period=q)
    spec.validate_window(M2.gamma, 0.5)
    N = 2 ** 18
    p0 = spec.p0(N)
    total_hits = 0
    min_gap = None
    violations = 0
    for i in range(1000):
        stream = E.OrbitStream(M2, seed=[MASTER, 0x7, i])
        rec = events.hits(spec, obs, stream, N, 0.5)
        total_hits += rec.times.size
        g = rec.min_gap()
        if g is not None:
            min_gap = g if min_gap is None else min(min_gap, g)
            if g < p0:
                violations += 1
    ok = (q == 2) and violations == 0 and total_hits > 0
    record(7, "periodic", ok,
           f"period {q} (exact), {total_hits} tilde hits, min gap "
           f"{min_gap} >= p0 = {p0}, violations {violations}")


def test_criterion_08_pair_gap_decay():
    # Diophantine x, exceedance target at N = 2^16: pair probability is 0 for
    # every p below the exact-arithmetic recurrence certificate, and the
    # importance-sampled estimates for p up to 30 fit sigma * theta^p, theta < 1.
    obs = E.SingularObservable(1.0, 0.5, GOLDEN)
    spec = EventSpec("exceedance", t_exponent=0.15)
    N = 2 ** 16
    (lo, hi), = events.target_arcs(spec, obs, N, 0.5)
    h = Fraction(hi - lo) / 2
    xq = Fraction(GOLDEN)
    cert = 0
    fk = xq
    for p in range(1, 31):
        fk = (2 * fk) % 1
        d = abs(fk - xq)
        d = min(d, 1 - d)
        if d <= (2 ** p + 1) * h:
            break
        cert = p
    rep = events.estimate_M2(M2, obs, spec, N, range(1, 31), 3 * 10 ** 6,
                             [MASTER, 0x8], certified_zero_upto=cert)
    zero_ok = bool(np.all(rep.joint[rep.p_values <= cert] == 0.0))
    env_ok = bool(np.all(rep.joint <= rep.sigma * rep.theta_fit ** rep.p_values
                         * (1.0 + 1e-9)))
    ok = zero_ok and rep.theta_fit < 1.0 and env_ok
    record(8, "m2-decay", ok,
           f"certified zero for p <= {cert} (observed zero: {zero_ok}), "
           f"theta_fit {rep.theta_fit:.3f} < 1, envelope holds {env_ok}")


def test_criterion_09_band_moments():
    # s=0.5, delta=0.2, j=0, m=2: E bbarS^2 / (N^4 (ln N)^0.4) within a factor
    # 2 across 2^14..2^22 (100 seeds); same for x = 1/3 after the (ln ln N)^2
    # correction.  Amplitude a = 1000 puts about 13 band hits per orbit so the
    # 100-seed mean is CLT-resolved; the bound under test is the N-scaling.
    base = dict(s=0.5, alpha=1.5, r=1, delta=0.2, D=1.0, n_min=14, n_max=22,
                seeds=100, master_seed=MASTER)
    cfg = ExperimentConfig(a=1000.0, x=GOLDEN, **base)
    res = experiment.check_moments(cfg, m_order=2, j_band=0, factor=2.0)
    cfg_p = ExperimentConfig(a=1000.0, x=1.0 / 3.0, **base)
    res_p = experiment.check_moments(cfg_p, m_order=2, j_band=0, factor=2.0,
                                     periodic_correction=True)
    record(9, "moments", res.passed and res_p.passed,
           f"spread {res.stats['spread']:.3f} (Diophantine x), "
           f"{res_p.stats['spread']:.3f} (x = 1/3 with lnln correction); both <= 2")


def test_criterion_10_iid_oracles():
    # i.i.d. surrogate: exceedance counts follow Binomial(N, sigma)
    # (chi-square p > 0.01) and the window-coverage ratio matches the
    # closed-form (1 - (1-sigma)^K) / (K sigma) within CI.
    N, s, alpha, eps = 2 ** 12, 0.5, 1.5, 0.0025
    obs = E.SingularObservable(1.0, s, 0.5)
    sig_exc = 2.0 * (1.0 / events.exceedance_level(N, eps, s, alpha)) ** s
    counts = []
    for i in range(400):
        stream = E.OrbitStream(M2, "iid", seed=[MASTER, 0xA, i])
        counts.append(events.count_exceedances(obs.eval(stream.take(N)), N, eps, s, alpha))
    pval = binomial_count_pvalue(counts, N, sig_exc)

    win = EventSpec("window", t_exponent=0.5, c=1.0, eps=0.5)
    sep = SeparationParams(K=1.0, eps_hat=0.01)
    res = events.estimate_M4_intervals(M2, obs, [win], [(0.1, 0.9)], N, sep,
                                       2000, [MASTER, 0xB], mode="iid")
    sig = events.sigma(win, obs, N, s)
    K = math.floor(0.9 * N) - math.ceil(0.1 * N) + 1
    closed = (1.0 - (1.0 - sig) ** K) / res.denominator
    in_ci = res.ci_low <= closed <= res.ci_high
    ok = (pval > 0.01) and in_ci
    record(10, "iid-oracle", ok,
           f"binomial chi2 p = {pval:.3f} > 0.01; coverage ratio "
           f"{res.ratio:.3f} vs closed form {closed:.3f}, in CI: {in_ci}")
