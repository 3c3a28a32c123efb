import json
import os

import numpy as np
import pytest

import ergosum as E
from ergosum import cli, experiment, plots
from ergosum.errors import ConfigError
from ergosum.experiment import CheckResult, ExperimentConfig, Report


def small_cfg(**kw):
    base = dict(a=1.0, s=0.5, alpha=1.5, r=1, delta=0.2, D=1.0,
                n_min=8, n_max=10, seeds=4, master_seed=17)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_roundtrip_and_hash(tmp_path):
    cfg = small_cfg(checks=("tail", "mixing"))
    p = tmp_path / "exp.cfg"
    cfg.to_file(str(p))
    back = ExperimentConfig.from_file(str(p))
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()
    # canonical text is stable under reparse
    assert back.canonical_text() == cfg.canonical_text()


def test_config_validation_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig(s=0.5, alpha=3.0)            # alpha > 1/s
    with pytest.raises(ConfigError):
        ExperimentConfig(s=1.5, alpha=0.5, D=1.0)     # D inadmissible
    with pytest.raises(ConfigError):
        ExperimentConfig(n_min=2)
    with pytest.raises(ConfigError):
        ExperimentConfig(checks=("nope",))
    with pytest.raises(ConfigError):
        ExperimentConfig(map_kind="banana")


def test_config_auto_alpha():
    cfg = ExperimentConfig(s=0.5, r=1, alpha=None, D=1.0)
    lo, hi = E.alpha_window(1, 0.5)
    assert lo < cfg.alpha <= hi


def test_config_unknown_key(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(str(p))


def test_seed_map_determinism_and_checkpoint(tmp_path):
    cfg = small_cfg()
    ck = str(tmp_path / "ck.jsonl")
    r1 = experiment.seed_map(experiment._kernel_jump_counts, (cfg, "auto"),
                             cfg.seeds, threads=1, checkpoint=ck)
    # resumable: second run reads every seed from the checkpoint
    r2 = experiment.seed_map(experiment._kernel_jump_counts, (cfg, "auto"),
                             cfg.seeds, threads=1, checkpoint=ck)
    assert r1 == r2
    with open(ck) as f:
        assert len(f.readlines()) == cfg.seeds
    r3 = experiment.seed_map(experiment._kernel_jump_counts, (cfg, "auto"),
                             cfg.seeds, threads=1)
    assert r3 == r1


def test_simulate_paths_deterministic_bytes(tmp_path):
    cfg = small_cfg(seeds=2, n_min=8, n_max=8)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    experiment.run_simulate_paths(cfg, out1)
    experiment.run_simulate_paths(cfg, out2)
    names = sorted(os.listdir(out1))
    assert names == sorted(os.listdir(out2))
    for n in names:
        with open(os.path.join(out1, n), "rb") as f1, \
                open(os.path.join(out2, n), "rb") as f2:
            assert f1.read() == f2.read(), n
    idx = json.load(open(os.path.join(out1, "index.json")))
    assert idx["config_hash"] == cfg.config_hash()
    first = [e for e in idx["paths"] if "wn" in e][0]
    rows = open(os.path.join(out1, first["wn"])).read().splitlines()
    assert rows[0] == "t,value"


def test_jump_budget_small_run_and_iid():
    cfg = small_cfg(a=0.05, eps_jump=0.1, seeds=60, n_min=8, n_max=12)
    res = experiment.check_jump_budget(cfg)
    assert set(res.stats["histograms"]) == {str(N) for N in cfg.ladder()}
    res_iid = experiment.check_jump_budget(cfg, mode="iid")
    assert len(res_iid.stats["frac_over_budget"]) == len(cfg.ladder())


def test_run_check_dispatch_and_report(tmp_path):
    cfg = small_cfg()
    res = experiment.run_check(cfg, "diophantine")
    assert isinstance(res, CheckResult) and res.name == "diophantine"
    with pytest.raises(ConfigError):
        experiment.run_check(cfg, "unknown")
    rep = Report(cfg.config_hash())
    rep.add(res)
    out = tmp_path / "report.json"
    rep.write(str(out))
    payload = json.loads(out.read_text())
    assert payload["config_hash"] == cfg.config_hash()
    assert payload["entries"][0]["name"] == "diophantine"
    assert "created" in payload


def test_coverage_runner_zero_target():
    # r = 0 regime: alpha above 1/s, the trimmed path should stay near zero
    cfg = ExperimentConfig(a=1.0, s=0.5, alpha=1.9, r=1, delta=0.2, D=1.0,
                           n_min=10, n_max=12, seeds=6, master_seed=3)
    target = E.CadlagStep.constant(0.0)
    res = experiment.run_verify_coverage(cfg, target, tol=0.5)
    freq = np.asarray(res.stats["hit_frequency"])
    assert freq[-1] >= 0.5


def test_coverage_runner_preconditions():
    cfg = small_cfg()
    bad = E.CadlagStep.from_jumps([0.005], [1.0])   # jump time too close to 0
    with pytest.raises(ConfigError):
        experiment.run_verify_coverage(cfg, bad)
    toomany = E.CadlagStep.from_jumps([0.3, 0.6], [1.0, 1.0])
    with pytest.raises(ConfigError):
        experiment.run_verify_coverage(cfg, toomany)


def test_cli_roundtrip(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    small_cfg(seeds=2, n_min=8, n_max=8).to_file(str(cfg_file))
    out = str(tmp_path / "out")
    rc = cli.main(["--config", str(cfg_file), "--out", out, "simulate-paths"])
    assert rc == 0
    rc = cli.main(["--config", str(cfg_file), "--out", out, "check", "diophantine"])
    assert rc == 0
    rc = cli.main(["--config", str(cfg_file), "--out", out, "report"])
    assert rc == 0
    rc = cli.main(["--config", str(cfg_file), "--out", out, "plot"])
    assert rc == 0


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("map_kind = nonsense\n")
    assert cli.main(["--config", str(bad), "check", "tail"]) == 2
    missing = tmp_path / "nothing"
    assert cli.main(["--out", str(missing), "report"]) == 2


def test_cli_check_list_from_config(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    small_cfg(checks=("diophantine",)).to_file(str(cfg_file))
    out = str(tmp_path / "out")
    assert cli.main(["--config", str(cfg_file), "--out", out, "check"]) == 0
    empty = tmp_path / "empty.cfg"
    small_cfg().to_file(str(empty))
    assert cli.main(["--config", str(empty), "--out", out, "check"]) == 2


def test_plot_emission(tmp_path):
    cfg = small_cfg(a=0.05, seeds=30, n_min=8, n_max=10)
    res = experiment.check_jump_budget(cfg)
    rep = Report(cfg.config_hash())
    rep.add(res)
    files = plots.emit_plots(rep, str(tmp_path))
    assert files and all(os.path.exists(f) for f in files)
    head = open(files[0], "rb").read(200)
    assert b"<svg" in head or b"DOCTYPE svg" in head
    # empty report: no files, success
    assert plots.emit_plots(Report("deadbeef"), str(tmp_path / "empty")) == []


def test_report_pass_flags():
    rep = Report("abc")
    rep.add(CheckResult("x", True, {}, 1))
    assert rep.all_passed
    rep.add(CheckResult("y", False, {}, 1))
    assert not rep.all_passed


def test_seed_map_thread_count_invariance():
    cfg = small_cfg(seeds=6)
    serial = experiment.seed_map(experiment._kernel_jump_counts, (cfg, "auto"),
                                 cfg.seeds, threads=1)
    forked = experiment.seed_map(experiment._kernel_jump_counts, (cfg, "auto"),
                                 cfg.seeds, threads=2)
    assert serial == forked


def test_check_mbc_and_twohumps_run():
    cfg = ExperimentConfig(a=1.0, s=0.5, alpha=1.5, r=1, delta=0.2, D=1.0,
                           n_min=10, n_max=14, seeds=10, master_seed=7,
                           window_c=1.0, window_eps=0.4)
    res = experiment.check_mbc(cfg, samples=150_000)
    assert res.passed
    assert res.stats["m1_ci"][0] <= 1.0 <= res.stats["m1_ci"][1]
    assert res.stats["m2_zero_ok"] and res.stats["sr_at_budget"] == "infinite"
    res2 = experiment.check_twohumps(cfg, seeds=40)
    assert 0.0 <= res2.stats["frequency"][-1] <= 1.0


def test_cli_verify_jump_budget(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    small_cfg(a=0.05, seeds=25, n_min=8, n_max=10).to_file(str(cfg_file))
    out = str(tmp_path / "out")
    rc = cli.main(["--config", str(cfg_file), "--out", out, "verify-jump-budget"])
    assert rc in (0, 1)
    assert os.path.exists(os.path.join(out, "report.json"))
    # resumable second run hits the checkpoint
    rc2 = cli.main(["--config", str(cfg_file), "--out", out, "verify-jump-budget"])
    assert rc2 == rc


def test_cli_verify_coverage(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    ExperimentConfig(a=1.0, s=0.5, alpha=1.9, r=1, delta=0.2, D=1.0,
                     n_min=10, n_max=11, seeds=4, master_seed=3,
                     window_eps=0.1).to_file(str(cfg_file))
    out = str(tmp_path / "out")
    rc = cli.main(["--config", str(cfg_file), "--out", out, "verify-coverage",
                   "--target-jumps", "0.5:1.0", "--tol", "0.4"])
    assert rc == 0


def test_serializers(tmp_path):
    d = E.DensityEstimate.lebesgue(16)
    p = tmp_path / "density.csv"
    d.to_csv(str(p))
    rows = p.read_text().splitlines()
    assert rows[0] == "bin_center,density" and len(rows) == 17

    from ergosum.density import indicator
    rep = E.correlation_report(E.doubling(), indicator([(0.0, 0.25)]),
                               indicator([(0.0, 0.25)]), [1, 2], 10 ** 4, seed=1)
    payload = json.loads(rep.to_json())
    assert set(payload) >= {"lags", "values", "stderr", "fitted_C", "fitted_theta"}

    from ergosum.events import EventSpec, hits_from_values, write_hits_csv
    spec = EventSpec("exceedance", t_exponent=0.0, C=1e-9)
    rec = hits_from_values(spec, np.array([1.0, 2.0, 3.0]), 3, 1.0)
    f = tmp_path / "hits.csv"
    write_hits_csv(str(f), {0: rec})
    lines = f.read_text().splitlines()
    assert lines[0] == "seed,k,value" and len(lines) == 4

