"""Experiment configuration, reproducible seed fan-out, and the named checks.

A configuration is a flat human-editable key = value text file; its canonical
serialization is hashed so every report entry can point back at the exact
inputs that produced it.  All randomness flows through per-(seed, purpose)
generators, so results are independent of scheduling and thread count, and
per-seed work can be checkpointed and resumed.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field, asdict
from multiprocessing import get_context
from typing import Callable, Optional

import numpy as np

from . import events, paths
from .density import correlation_report, indicator
from .errors import ConfigError
from .maps import CircleMap, OrbitStream, detect_period, diophantine_check
from .observable import SingularObservable, tail_constant, thresholds
from .sampling import rng_for

CHECK_NAMES = ("tail", "mixing", "lemma5", "mbc", "moments", "twohumps", "diophantine")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    map_kind: str = "linear"
    map_m: int = 2
    map_eps: float = 0.0
    a: float = 1.0
    s: float = 0.5
    x: float = 0.6180339887498949
    psi_kind: str = "zero"
    psi_c: float = 0.0
    r: int = 1
    alpha: Optional[float] = None       # auto-picked inside the admissible window
    delta: float = 0.15
    D: float = 1.0
    n_min: int = 14
    n_max: int = 20
    seeds: int = 100
    master_seed: int = 20260810
    eps_jump: float = 0.1
    window_c: float = 1.0
    window_eps: float = 0.25
    interval_lo: float = 0.4
    interval_hi: float = 0.6
    out: str = "out"
    checks: tuple = ()

    def __post_init__(self):
        cmap = self.map()  # validates map parameters
        if self.alpha is None:
            lo, hi = paths.alpha_window(self.r, self.s)
            self.alpha = 0.5 * (lo + hi)
        if not (0.0 < self.alpha <= 1.0 / self.s):
            raise ConfigError(f"alpha={self.alpha} outside (0, 1/s]")
        if not paths.validate_D(self.D, self.s, self.alpha):
            raise ConfigError(f"D={self.D} fails the admissibility inequality")
        if self.n_min < 4 or self.n_max < self.n_min:
            raise ConfigError("need 4 <= n_min <= n_max")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        for c in self.checks:
            if c not in CHECK_NAMES:
                raise ConfigError(f"unknown check {c!r}; valid: {CHECK_NAMES}")
        _ = self.observable()

    def map(self) -> CircleMap:
        try:
            return CircleMap(self.map_kind, m=self.map_m, eps_pert=self.map_eps)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def observable(self) -> SingularObservable:
        try:
            return SingularObservable(self.a, self.s, self.x, self.psi_kind, self.psi_c)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def ladder(self) -> list:
        return [2 ** k for k in range(self.n_min, self.n_max + 1)]

    # -- serialization ------------------------------------------------------

    def canonical_text(self) -> str:
        d = asdict(self)
        d["checks"] = ",".join(d["checks"])
        lines = [f"{k} = {d[k]!r}" if isinstance(d[k], str) else f"{k} = {d[k]}"
                 for k in sorted(d)]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]

    def to_file(self, path: str):
        with open(path, "w") as f:
            f.write("# ergosum experiment configuration\n")
            f.write(self.canonical_text())

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        kv = {}
        with open(path) as f:
            for raw in f:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"bad config line: {raw.rstrip()}")
                k, v = (t.strip() for t in line.split("=", 1))
                kv[k] = v
        return cls.from_dict(kv)

    @classmethod
    def from_dict(cls, kv: dict) -> "ExperimentConfig":
        defaults = cls.__dataclass_fields__
        args = {}
        for k, v in kv.items():
            if k not in defaults:
                raise ConfigError(f"unknown config key {k!r}")
            if k == "checks":
                v = str(v).strip("'\"")
                args[k] = tuple(t for t in v.split(",") if t)
                continue
            typ = defaults[k].type
            try:
                if isinstance(v, str):
                    v = v.strip("'\"") if typ == "str" else v
                    if typ == "int":
                        v = int(v)
                    elif typ == "float" or typ == "Optional[float]":
                        v = None if v == "None" else float(v)
                args[k] = v
            except ValueError as e:
                raise ConfigError(f"bad value for {k}: {v}") from e
        try:
            return cls(**args)
        except TypeError as e:
            raise ConfigError(str(e)) from e


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    stats: dict
    samples: int
    ci: Optional[tuple] = None
    notes: str = ""


@dataclass
class Report:
    config_hash: str
    entries: list = field(default_factory=list)
    created: Optional[str] = None

    def add(self, result: CheckResult):
        self.entries.append(result)

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_json(self, with_timestamp: bool = True) -> str:
        payload = {
            "config_hash": self.config_hash,
            "entries": [asdict(e) for e in self.entries],
        }
        if with_timestamp:
            payload["created"] = self.created or time.strftime("%Y-%m-%dT%H:%M:%S")
        return json.dumps(payload, indent=2, default=_jsonable)

    def write(self, path: str, with_timestamp: bool = True):
        with open(path, "w") as f:
            f.write(self.to_json(with_timestamp))


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


# ---------------------------------------------------------------------------
# deterministic seed fan-out with optional checkpointing
# ---------------------------------------------------------------------------

def _run_kernel(job):
    fn, cfg_args, idx = job
    return idx, fn(cfg_args, idx)


def seed_map(fn: Callable, cfg_args: tuple, n_seeds: int, threads: int = 1,
             checkpoint: Optional[str] = None) -> list:
    """fn(cfg_args, seed_index) for every seed; order-independent, resumable.

    Results are merged by seed index so the outcome is byte-identical for any
    thread count.  With a checkpoint path, finished seeds are stored as JSON
    lines and skipped on the next run.
    """
    done = {}
    if checkpoint and os.path.exists(checkpoint):
        with open(checkpoint) as f:
            for line in f:
                rec = json.loads(line)
                done[rec["seed"]] = rec["result"]
    todo = [i for i in range(n_seeds) if i not in done]
    jobs = [(fn, cfg_args, i) for i in todo]
    if threads > 1 and len(jobs) > 1:
        with get_context("fork").Pool(threads) as pool:
            fresh = pool.map(_run_kernel, jobs, chunksize=max(1, len(jobs) // (4 * threads)))
    else:
        fresh = [_run_kernel(j) for j in jobs]
    sink = open(checkpoint, "a") if checkpoint else None
    try:
        for idx, res in fresh:
            done[idx] = res
            if sink:
                sink.write(json.dumps({"seed": idx, "result": res}, default=_jsonable) + "\n")
    finally:
        if sink:
            sink.close()
    return [done[i] for i in range(n_seeds)]


def _orbit_values(cfg: ExperimentConfig, idx: int, n: int, tag: int,
                  mode: str = "auto") -> np.ndarray:
    cmap = cfg.map()
    obs = cfg.observable()
    stream = OrbitStream(cmap, mode, seed=rng_for(cfg.master_seed, tag, idx))
    return obs.eval(stream.take(n))


# ---------------------------------------------------------------------------
# per-seed kernels (top level for picklability)
# ---------------------------------------------------------------------------

def _kernel_jump_counts(cfg_args, idx):
    """Exceedance counts per ladder N for one seed.

    For the exact base-2 stream with psi = 0 the exceedance test is an arc
    membership d(y, x) < radius(N), done on raw 64-bit digit windows.
    """
    cfg, mode = cfg_args
    cmap, obs = cfg.map(), cfg.observable()
    ladder = cfg.ladder()
    n_max = ladder[-1]
    stream = OrbitStream(cmap, mode, seed=rng_for(cfg.master_seed, 0x10, idx))
    levels = {N: events.exceedance_level(N, cfg.eps_jump, cfg.s, cfg.alpha) for N in ladder}
    radius = {N: (obs.a / levels[N]) ** obs.s for N in ladder}
    if obs.psi_kind == "zero" and stream.mode == "exact" and cmap.degree == 2:
        rmax = max(radius.values())
        times, pts = stream.scan_arcs(n_max, _arc_pieces(obs.x, rmax))
        from .maps import circle_dist
        hit_d = circle_dist(pts, obs.x)
        counts = [int(np.count_nonzero((times <= N) & (hit_d < radius[N]))) for N in ladder]
    elif obs.psi_kind == "zero":
        from .maps import circle_dist
        d = circle_dist(stream.take(n_max), obs.x)
        rmax = max(radius.values())
        hit_idx = np.nonzero(d < rmax)[0]
        hit_d = d[hit_idx]
        counts = [int(np.count_nonzero((hit_idx < N) & (hit_d < radius[N]))) for N in ladder]
    else:
        vals = obs.eval(stream.take(n_max))
        counts = [events.count_exceedances(vals, N, cfg.eps_jump, cfg.s, cfg.alpha)
                  for N in ladder]
    return counts


def _arc_pieces(x: float, r: float):
    lo, hi = x - r, x + r
    lo_m = lo % 1.0
    hi_m = lo_m + (hi - lo)
    if hi_m <= 1.0:
        return [(lo_m, hi_m)]
    return [(lo_m, 1.0), (0.0, hi_m - 1.0)]


def _kernel_sup_remainder(cfg_args, idx):
    """sup_remainder of the trimmed layer per ladder N for one seed."""
    cfg, b_small_by_n = cfg_args
    cmap, obs = cfg.map(), cfg.observable()
    ladder = cfg.ladder()
    stream = OrbitStream(cmap, "auto", seed=rng_for(cfg.master_seed, 0x15, idx))
    vals = obs.eval(stream.take(ladder[-1]))
    out = []
    for N in ladder:
        cut = thresholds(N, cfg.s, cfg.delta, cfg.D).upper
        b = b_small_by_n.get(str(N), 0.0) if isinstance(b_small_by_n, dict) else 0.0
        layer = np.where(vals[:N] < cut, vals[:N], 0.0) - b
        out.append(paths.sup_remainder(np.cumsum(layer), N, cfg.s, cfg.alpha))
    return out


def _kernel_band_sums(cfg_args, idx):
    """Band sum totals per ladder N for one seed (band index packed in cfg_args)."""
    cfg, j_band = cfg_args
    cmap, obs = cfg.map(), cfg.observable()
    ladder = cfg.ladder()
    stream = OrbitStream(cmap, "auto", seed=rng_for(cfg.master_seed, 0x1B, idx))
    vals = obs.eval(stream.take(ladder[-1]))
    out = []
    for N in ladder:
        base = float(N) ** (1.0 / cfg.s)
        ln = math.log(N)
        lo = base * ln ** (j_band * cfg.delta)
        hi = base * ln ** ((j_band + 1) * cfg.delta)
        v = vals[:N]
        out.append(float(v[(v >= lo) & (v < hi)].sum()))
    return out


def _kernel_window_hit(cfg_args, idx):
    """Did the window event fire inside the time interval at each ladder N?"""
    cfg, spec_kind = cfg_args
    cmap, obs = cfg.map(), cfg.observable()
    spec = events.EventSpec(spec_kind, t_exponent=cfg.alpha, c=cfg.window_c,
                            eps=cfg.window_eps)
    out = []
    for N in cfg.ladder():
        stream = OrbitStream(cmap, "auto", seed=rng_for(cfg.master_seed, 0x1C, idx, N))
        k_lo = max(int(math.ceil(cfg.interval_lo * N)), 1)
        k_hi = int(math.floor(cfg.interval_hi * N))
        p0 = spec.p0(N) if spec_kind == "tilde_window" else 0
        stream.skip(k_lo - 1)
        vals = obs.eval(stream.take(k_hi - k_lo + 1 + p0))
        rec = events.hits_from_values(spec, vals, k_hi - k_lo + 1, cfg.s, scale_N=N)
        out.append(int(rec.times.size > 0))
    return out


def _kernel_tilde_gaps(cfg_args, idx):
    """Minimal gap between tilde hits (or -1) plus the hit count, single N."""
    cfg, N, q = cfg_args
    cmap, obs = cfg.map(), cfg.observable()
    spec = events.EventSpec("tilde_window", t_exponent=cfg.alpha, c=cfg.window_c,
                            eps=cfg.window_eps, period=q)
    spec.validate_window(cmap.gamma, cfg.s)
    stream = OrbitStream(cmap, "auto", seed=rng_for(cfg.master_seed, 0x7D, idx))
    rec = events.hits(spec, obs, stream, N, cfg.s)
    g = rec.min_gap()
    return [g if g is not None else -1, int(rec.times.size)]


# ---------------------------------------------------------------------------
# named checks
# ---------------------------------------------------------------------------

def wilson(k, n, z=1.96):
    return events.wilson_interval(int(k), int(n), z)


def check_tail(cfg: ExperimentConfig, samples: int = 10 ** 7,
               t_grid=(100.0, 1000.0), rel_tol: float = 0.05) -> CheckResult:
    obs = cfg.observable()
    rng = rng_for(cfg.master_seed, 0x7A11)
    cmap = cfg.map()
    if cmap.is_linear:
        y = rng.random(samples)
    else:
        from .density import sample_invariant
        y = sample_invariant(cmap, samples, rng)
    fit = tail_constant(obs, y, t_grid)
    rel = np.abs(fit.values - fit.c_exact) / fit.c_exact
    passed = bool(np.all(rel <= rel_tol))
    return CheckResult(
        "tail", passed,
        {"t_grid": list(t_grid), "t_s_mu": fit.values, "c_fit": fit.c_fit,
         "c_exact_two_sided": fit.c_exact, "c_stated_one_sided": fit.c_one_sided,
         "note": "tail-law constant: fitted vs exact 2 a^s rho0; the one-sided "
                 "rho0 a^s convention is reported alongside, not hidden",
         "max_rel_err": float(rel.max()), "counts": fit.counts},
        samples)


def check_mixing(cfg: ExperimentConfig, samples: int = 10 ** 7,
                 lags=tuple(range(1, 21))) -> CheckResult:
    cmap = cfg.map()
    half = indicator([(0.0, 0.5)], "half")
    quarter = indicator([(0.0, 0.25)], "quarter")
    rep_h = correlation_report(cmap, half, half, lags, samples,
                               seed=rng_for(cfg.master_seed, 0x31).integers(2 ** 32))
    rep_q = correlation_report(cmap, quarter, quarter, lags, samples,
                               seed=rng_for(cfg.master_seed, 0x32).integers(2 ** 32))
    ok_half = bool(np.all(np.abs(rep_h.correlations) <= 3.0 * rep_h.stderrs))
    lag1 = rep_q.correlations[0]
    ok_quarter = abs(lag1 - 1.0 / 16.0) <= 3.0 * rep_q.stderrs[0]
    ok_theta = rep_h.fitted_theta <= 0.6 and rep_q.fitted_theta <= 0.6
    return CheckResult(
        "mixing", ok_half and ok_quarter and ok_theta,
        {"half_corr": rep_h.correlations, "half_se": rep_h.stderrs,
         "quarter_lag1": float(lag1), "quarter_lag1_exact": 1.0 / 16.0,
         "theta_half": rep_h.fitted_theta, "theta_quarter": rep_q.fitted_theta,
         "envelope_C": rep_h.fitted_C},
        samples)


def check_lemma5(cfg: ExperimentConfig, threads: int = 1,
                 checkpoint: Optional[str] = None) -> CheckResult:
    obs = cfg.observable()
    b_small = {}
    if cfg.s > 1.0:
        from .observable import TruncationSpec, centering_constant
        for N in cfg.ladder():
            cut = thresholds(N, cfg.s, cfg.delta, cfg.D).upper
            b_small[str(N)] = centering_constant(obs, TruncationSpec("lower", u=cut))
    rows = seed_map(_kernel_sup_remainder, (cfg, b_small), cfg.seeds, threads, checkpoint)
    arr = np.asarray(rows)
    medians = np.median(arr, axis=0)
    ratio = float(medians[0] / medians[-1]) if medians[-1] > 0 else math.inf
    return CheckResult(
        "lemma5", ratio >= 2.0,
        {"ladder": cfg.ladder(), "medians": medians, "decay_ratio_first_to_last": ratio},
        cfg.seeds)


def check_jump_budget(cfg: ExperimentConfig, threads: int = 1, final_bound: float = 0.05,
                      checkpoint: Optional[str] = None, mode: str = "auto") -> CheckResult:
    if not paths.alpha_in_window(cfg.alpha, cfg.r, cfg.s):
        raise ConfigError(f"alpha={cfg.alpha} outside the window for r={cfg.r}")
    rows = seed_map(_kernel_jump_counts, (cfg, mode), cfg.seeds, threads, checkpoint)
    counts = np.asarray(rows)                       # (seeds, ladder)
    over = counts >= cfg.r + 1
    frac = over.mean(axis=0)
    cis = [wilson(k, cfg.seeds) for k in over.sum(axis=0)]
    monotone = all(cis[i + 1][0] <= cis[i][1] + 1e-12 for i in range(len(cis) - 1))
    passed = monotone and frac[-1] <= final_bound
    hist = {str(N): np.bincount(counts[:, i], minlength=cfg.r + 3).tolist()
            for i, N in enumerate(cfg.ladder())}
    return CheckResult(
        "jump_budget", bool(passed),
        {"ladder": cfg.ladder(), "frac_over_budget": frac,
         "ci": cis, "monotone_up_to_ci": monotone, "final_bound": final_bound,
         "histograms": hist, "eps": cfg.eps_jump, "r": cfg.r},
        cfg.seeds)


def check_coverage_rate(cfg: ExperimentConfig, threads: int = 1,
                        band=(0.5, 1.5), checkpoint: Optional[str] = None) -> CheckResult:
    obs = cfg.observable()
    spec = events.EventSpec("window", t_exponent=cfg.alpha, c=cfg.window_c,
                            eps=cfg.window_eps)
    rows = seed_map(_kernel_window_hit, (cfg, "window"), cfg.seeds, threads, checkpoint)
    hitmat = np.asarray(rows)
    ladder = cfg.ladder()
    ratios, cis, preds = [], [], []
    for i, N in enumerate(ladder):
        sig = events.sigma(spec, obs, N, cfg.s)
        k_lo = max(int(math.ceil(cfg.interval_lo * N)), 1)
        k_hi = int(math.floor(cfg.interval_hi * N))
        pred = (k_hi - k_lo + 1) * sig
        k = int(hitmat[:, i].sum())
        lo, hi = wilson(k, cfg.seeds)
        ratios.append(k / cfg.seeds / pred)
        cis.append((lo / pred, hi / pred))
        preds.append(pred)
    final_ok = band[0] <= ratios[-1] <= band[1]
    return CheckResult(
        "coverage_rate", bool(final_ok),
        {"ladder": ladder, "ratio": ratios, "ci": cis, "predicted_rate": preds,
         "band": list(band), "window_c": cfg.window_c, "window_eps": cfg.window_eps,
         "interval": [cfg.interval_lo, cfg.interval_hi]},
        cfg.seeds)


def check_mbc(cfg: ExperimentConfig, samples: int = 200_000,
              max_samples: int = 5_000_000) -> CheckResult:
    cmap, obs = cfg.map(), cfg.observable()
    N = 2 ** min(cfg.n_max, 16)
    sepp = events.SeparationParams(K=1.0, eps_hat=0.05)
    sN = sepp.s_of(N)
    wspec = events.EventSpec("window", t_exponent=cfg.delta, c=cfg.window_c,
                             eps=cfg.window_eps)
    # size the conditional sample so the joint-hit precondition (>= 50) holds
    sig_w = events.sigma(wspec, obs, N, cfg.s)
    m1_samples = min(max(samples, int(60.0 / sig_w) + 1), max_samples)
    m1 = events.estimate_M1(cmap, obs, [wspec, wspec], N, [5 * sN, 10 * sN],
                            m1_samples, cfg.master_seed, sepp)
    dio = diophantine_check(cmap, cfg.x, rho_min=2.0 ** -26, eps=0.5, rho0=0.01)
    espec = events.EventSpec("exceedance", t_exponent=cfg.delta)
    arcs = events.target_arcs(espec, obs, N, cfg.s)
    width = max(hi - lo for lo, hi in arcs)
    cert = int(0.5 * abs(math.log(width))) if dio.is_diophantine else 0
    m2 = events.estimate_M2(cmap, obs, espec, N, range(1, 31), samples,
                            cfg.master_seed, certified_zero_upto=cert)
    zero_ok = bool(np.all(m2.joint[m2.p_values <= cert] == 0.0))
    m4 = events.estimate_M4_star(cmap, obs, espec, min(N, 2 ** 12), 1, sepp,
                                 400, cfg.master_seed)
    m3 = events.estimate_M3_cross_scale(cmap, obs, espec, min(cfg.n_max, 16) - 6,
                                        min(cfg.n_max, 16) - 2, sepp, 400,
                                        cfg.master_seed)
    sr_fin = events.classify_Sr(cfg.alpha, cfg.s, cfg.r + 1)
    sr_inf = events.classify_Sr(cfg.alpha, cfg.s, cfg.r)
    passed = (m1.ci_contains(1.0) and zero_ok and m2.decays
              and m4.ratio <= 1.5 and m3.ci_low <= 1.0)
    return CheckResult(
        "mbc", bool(passed),
        {"m1_ratio": m1.ratio, "m1_ci": (m1.ci_low, m1.ci_high),
         "m2_joint": m2.joint, "m2_theta": m2.theta_fit,
         "m2_certified_zero_upto": cert, "m2_zero_ok": zero_ok,
         "m4_star_ratio": m4.ratio,
         "m3_cross_scale_ratio": m3.ratio, "m3_ci": (m3.ci_low, m3.ci_high),
         "sr_above_budget": sr_fin.verdict, "sr_at_budget": sr_inf.verdict,
         "diophantine": dio.is_diophantine},
        samples)


def check_moments(cfg: ExperimentConfig, threads: int = 1, m_order: int = 2,
                  j_band: int = 0, factor: float = 2.0,
                  checkpoint: Optional[str] = None,
                  periodic_correction: bool = False) -> CheckResult:
    rows = seed_map(_kernel_band_sums, (cfg, j_band), cfg.seeds, threads, checkpoint)
    sums = np.asarray(rows)                         # (seeds, ladder)
    ladder = cfg.ladder()
    normalized = []
    for i, N in enumerate(ladder):
        norm = float(N) ** (m_order / cfg.s) * math.log(N) ** (cfg.delta * m_order)
        if periodic_correction:
            norm *= math.log(math.log(N)) ** m_order
        normalized.append(float(np.mean(sums[:, i] ** m_order)) / norm)
    spread = max(normalized) / min(normalized) if min(normalized) > 0 else math.inf
    return CheckResult(
        "moments", bool(spread <= factor),
        {"ladder": ladder, "normalized_moment": normalized, "spread": spread,
         "m": m_order, "band": j_band, "periodic_correction": periodic_correction},
        cfg.seeds)


def check_twohumps(cfg: ExperimentConfig, seeds: int = 200,
                   eps_bar: float = 0.01) -> CheckResult:
    """Frequency of the paired-exceedance pattern at the two ladder ends.

    eps_bar tunes the value floor so the pattern is rare but present at the
    small end (a vacuous 0-vs-0 or saturated 1-vs-1 comparison checks nothing).
    """
    cmap, obs = cfg.map(), cfg.observable()
    alpha_bar = 0.5 * (1.0 / ((cfg.r + 1) * cfg.s) + cfg.alpha)
    sepp = events.SeparationParams(K=1.0)
    freqs = []
    for N in (cfg.ladder()[0], cfg.ladder()[-1]):
        hits = 0
        for i in range(seeds):
            stream = OrbitStream(cmap, "auto", seed=rng_for(cfg.master_seed, 0x24, i, N))
            vals = obs.eval(stream.take(N))
            pairs = events.two_humps_scan(vals, N, alpha_bar, cfg.alpha, eps_bar,
                                          sepp.s_of(N), s=cfg.s, r=cfg.r)
            hits += int(pairs.shape[0] > 0)
        freqs.append(hits / seeds)
    decayed = freqs[-1] <= freqs[0] + 2.0 * math.sqrt(0.25 / seeds)
    return CheckResult(
        "twohumps", bool(decayed and freqs[0] < 1.0),
        {"N": [cfg.ladder()[0], cfg.ladder()[-1]], "frequency": freqs,
         "alpha_bar": alpha_bar, "eps_bar": eps_bar},
        seeds)


def check_diophantine(cfg: ExperimentConfig) -> CheckResult:
    cmap = cfg.map()
    q = detect_period(cmap, cfg.x, q_max=64, tol=1e-12)
    rep = diophantine_check(cmap, cfg.x, rho_min=2.0 ** -26, eps=0.5, rho0=0.01)
    consistent = (q is None) or (q > rep.k_max_tested) or (not rep.is_diophantine)
    return CheckResult(
        "diophantine", bool(consistent),
        {"x": cfg.x, "detected_period": q, "is_diophantine": rep.is_diophantine,
         "certified": rep.certified, "witnesses": rep.witnesses[:8],
         "k_max_tested": rep.k_max_tested},
        len(rep.rho_grid))


def run_check(cfg: ExperimentConfig, which: str, threads: int = 1,
              checkpoint_dir: Optional[str] = None) -> CheckResult:
    ck = None
    if checkpoint_dir:
        os.makedirs(checkpoint_dir, exist_ok=True)
        ck = os.path.join(checkpoint_dir, f"{cfg.config_hash()}_{which}.jsonl")
    if which == "tail":
        return check_tail(cfg)
    if which == "mixing":
        return check_mixing(cfg)
    if which == "lemma5":
        return check_lemma5(cfg, threads, ck)
    if which == "mbc":
        return check_mbc(cfg)
    if which == "moments":
        return check_moments(cfg, threads, checkpoint=ck)
    if which == "twohumps":
        return check_twohumps(cfg)
    if which == "diophantine":
        return check_diophantine(cfg)
    raise ConfigError(f"unknown check {which!r}")


# ---------------------------------------------------------------------------
# path bundles and ladder-level verification runners
# ---------------------------------------------------------------------------

def run_simulate_paths(cfg: ExperimentConfig, out_dir: Optional[str] = None,
                       dump_orbits: bool = False) -> dict:
    """Per (seed, N): the rescaled path, the trimmed-layer path, and its jump
    projection; written as CSV with a JSON index keyed by the config hash."""
    out_dir = out_dir or cfg.out
    os.makedirs(out_dir, exist_ok=True)
    cmap, obs = cfg.map(), cfg.observable()
    mean_value = 0.0
    if cfg.s > 1.0:
        from .observable import centering_constant
        mean_value = centering_constant(obs, None)
    index = {"config_hash": cfg.config_hash(), "paths": []}
    for idx in range(cfg.seeds):
        stream = OrbitStream(cmap, "auto", seed=rng_for(cfg.master_seed, 0x51, idx))
        pts = stream.take(cfg.ladder()[-1])
        vals = obs.eval(pts)
        if dump_orbits:
            orb = f"orbit_seed{idx}.csv"
            _write_csv(os.path.join(out_dir, orb), ["step", "point"],
                       np.column_stack([np.arange(1, pts.size + 1), pts]))
            index["paths"].append({"seed": idx, "orbit": orb})
        for N in cfg.ladder():
            w = paths.build_WN(vals[:N], cfg.s, cfg.alpha, mean_value=mean_value)
            cut = thresholds(N, cfg.s, cfg.delta, cfg.D).upper
            big = np.where(vals[:N] >= cut, vals[:N], 0.0)
            b_big = 0.0
            if cfg.s > 1.0:
                from .observable import TruncationSpec, centering_constant
                b_big = centering_constant(obs, TruncationSpec("upper", u=cut))
            wp = paths.top_positive_jump_path(big, N, cfg.s, cfg.alpha, N, drift=b_big)
            proj = paths.project_Hr(wp, cfg.r)
            fw = f"wn_seed{idx}_N{N}.csv"
            fp = f"wprime_seed{idx}_N{N}.csv"
            fj = f"proj_seed{idx}_N{N}.csv"
            _write_csv(os.path.join(out_dir, fw), ["t", "value"], w.to_csv_rows())
            _write_csv(os.path.join(out_dir, fp), ["t", "value"], wp.to_csv_rows())
            _write_csv(os.path.join(out_dir, fj), ["t", "value"], proj.to_csv_rows())
            index["paths"].append({"seed": idx, "N": N, "wn": fw, "wprime": fp,
                                   "projection": fj})
    with open(os.path.join(out_dir, "index.json"), "w") as f:
        json.dump(index, f, indent=2)
    return index


def _write_csv(path: str, header, rows):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in np.atleast_2d(rows):
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def run_verify_jump_budget(cfg: ExperimentConfig, threads: int = 1,
                           checkpoint_dir: Optional[str] = None,
                           mode: str = "auto") -> CheckResult:
    ck = None
    if checkpoint_dir:
        os.makedirs(checkpoint_dir, exist_ok=True)
        ck = os.path.join(checkpoint_dir, f"{cfg.config_hash()}_jump.jsonl")
    return check_jump_budget(cfg, threads, checkpoint=ck, mode=mode)


def run_verify_coverage(cfg: ExperimentConfig, target: "paths.CadlagStep",
                        tol: float = 0.3, threads: int = 1,
                        max_seeds: Optional[int] = None) -> CheckResult:
    """Per seed, the ladder points where the r-jump projection of the trimmed
    path is J1-close to the target, against the product-rate prediction."""
    from .j1 import j1_distance
    sizes = target.jump_sizes()
    times = target.jump_times
    if target.n_jumps > cfg.r:
        raise ConfigError("target has more jumps than the budget r")
    gaps = np.diff(np.concatenate([[0.0], times]))
    sepp = events.SeparationParams(K=1.0, eps_hat=cfg.window_eps)
    if np.any(gaps <= 2.0 * sepp.eps_hat):
        raise ConfigError("target jump times must be separated (and away from 0) "
                          "by more than 2 eps_hat")
    cmap, obs = cfg.map(), cfg.observable()
    n_seeds = max_seeds or cfg.seeds
    ladder = cfg.ladder()
    hits = np.zeros((n_seeds, len(ladder)), dtype=bool)
    for idx in range(n_seeds):
        stream = OrbitStream(cmap, "auto", seed=rng_for(cfg.master_seed, 0x5C, idx))
        vals = obs.eval(stream.take(ladder[-1]))
        for i, N in enumerate(ladder):
            cut = thresholds(N, cfg.s, cfg.delta, cfg.D).upper
            big = np.where(vals[:N] >= cut, vals[:N], 0.0)
            wp = paths.top_positive_jump_path(big, N, cfg.s, cfg.alpha, cfg.r)
            hits[idx, i] = j1_distance(wp, target).distance < tol
    freq = hits.mean(axis=0)
    preds = []
    for N in ladder:
        rate = 1.0
        for tm, sz in zip(times, sizes):
            spec = events.EventSpec("window", t_exponent=cfg.alpha, c=float(sz),
                                    eps=min(tol / 2, 0.9 * float(sz)))
            rate *= N * 2.0 * sepp.eps_hat * events.sigma(spec, obs, N, cfg.s)
        preds.append(rate if target.n_jumps else 1.0)
    return CheckResult(
        "coverage", True,
        {"ladder": ladder, "hit_frequency": freq, "predicted_rate": preds,
         "tol": tol, "target_jumps": target.n_jumps},
        n_seeds)
