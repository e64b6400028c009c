import io
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import HERE, fixture_paths, load
from wpcj.errors import ConfigError, DimensionError, InfeasibleProblem
from wpcj.harness import (CSV_HEADER, ComplexityModel, ExperimentSpec, ResultRecord, benchmark_scaling,
                          complexity_estimate, emit_csv, figure_spec, format_csv, loglog_fit, oracle_srm,
                          oracle_tpm, parse_csv, printed_closed_form, run_experiment, run_trial)
from wpcj.harness.cli import main, read_config_file
from wpcj.harness.fixtures import load_fixture, save_fixture
from wpcj.model import ChannelSet, SystemConfig, gamma_d_from, sample_channels
from wpcj.sdp_schemes import solve_b_cj_tpm

GOLDEN = os.path.join(HERE, "golden")
BASE = SystemConfig(M=8, N=4, p_bs_max=10.0, p_harvested=2.5e-3)


# -- ExperimentSpec ------------------------------------------------------------


@pytest.mark.parametrize("kw", [
    dict(figure_id="F7"),
    dict(schemes=("SRM", "QOSD")),
    dict(schemes=("SRM", "SRM")),
    dict(schemes=()),
    dict(sweep=("p_bs_dbm", (40, 30))),
    dict(sweep=("p_bs_dbm", ())),
    dict(sweep=("rician_k", (1, 2))),
    dict(sweep=("n_jammers", (2.5, 4))),
    dict(sweep=("n_jammers", (1, 4))),
    dict(trials=0),
    dict(seed=-1),
])
def test_spec_validation(kw):
    args = dict(figure_id="F2", schemes=("SRM",), sweep=("p_bs_dbm", (30, 40)), fixed=BASE)
    args.update(kw)
    with pytest.raises(ConfigError):
        ExperimentSpec(**args)


def test_spec_normalizes_names_and_values():
    s = ExperimentSpec("F3", ("srm", "lc-srm"), ("n_jammers", [4, 8]), BASE, trials=3)
    assert s.schemes == ("SRM", "LC-SRM")
    assert s.sweep.values == (4.0, 8.0)
    assert s.config_at(8).N == 8 and s.config_at(8).p_harvested == (2.5e-3,) * 8


def test_presets():
    f2 = figure_spec(2)
    assert f2.trials == 200
    assert f2.fixed.M == 8 and f2.fixed.N == 4 and f2.fixed.p_harvested[0] == 2.5e-3
    assert figure_spec("F6").fixed.rs_min == 2.0
    assert figure_spec(3).fixed.p_bs_max == 10.0
    assert figure_spec(5, gamma_e=1.0, theta1=0.1).theta1 == 0.1
    with pytest.raises(ConfigError):
        figure_spec(7)


# -- CSV -----------------------------------------------------------------------


def _rec(**kw):
    d = dict(scheme="SRM", sweep_variable="p_bs_dbm", sweep_value=30.0, mean_sr=1.5, sr_ci95=None,
             mean_bs_power_dbm=None, failures=0, mean_iterations=None, mean_wall_time_s=None)
    d.update(kw)
    return ResultRecord(**d)


def test_csv_header_and_single_record(tmp_path):
    path = tmp_path / "r.csv"
    emit_csv([_rec()], path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines == [",".join(CSV_HEADER), "SRM,p_bs_dbm,30,1.5,,,0,,"]


def test_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "r.csv")


def test_csv_six_significant_digits():
    text = format_csv([_rec(mean_sr=1.23456789, mean_bs_power_dbm=-12.3456789e-3)])
    assert text.splitlines()[1] == "SRM,p_bs_dbm,30,1.23457,,-0.0123457,0,,"


def test_parse_rejects_foreign_file():
    with pytest.raises(ValueError):
        parse_csv(io.StringIO("a,b\n1,2\n"))


sig6 = st.floats(-1e6, 1e6, allow_nan=False).map(lambda x: float(f"{x:.6g}"))
opt6 = st.none() | sig6


@settings(max_examples=100, deadline=None)
@given(st.lists(st.builds(_rec, scheme=st.sampled_from(["SRM", "LC-TPM", "ZF"]),
                          sweep_value=sig6, mean_sr=opt6, sr_ci95=opt6, mean_bs_power_dbm=opt6,
                          failures=st.integers(0, 500), mean_iterations=opt6,
                          mean_wall_time_s=opt6), min_size=1, max_size=6))
def test_csv_round_trip(records):
    assert parse_csv(io.StringIO(format_csv(records))) == records


def test_power_in_both_units():
    r = _rec(mean_bs_power_dbm=30.0)
    assert r.mean_bs_power_w == pytest.approx(1.0)
    assert _rec().mean_bs_power_w is None


# -- experiments -----------------------------------------------------------------


def _mini_f2():
    return figure_spec(2, trials=2, seed=7).replace(sweep=("p_bs_dbm", (30, 40)))


def test_golden_f2_mini_run(tmp_path):
    emit_csv(run_experiment(_mini_f2()), tmp_path / "f2.csv")
    with open(os.path.join(GOLDEN, "f2_mini.csv"), "rb") as fh:
        assert (tmp_path / "f2.csv").read_bytes() == fh.read()


def test_rerun_is_byte_identical():
    spec = figure_spec(6, trials=1, seed=3).replace(sweep=("n_jammers", (2, 4)))
    assert format_csv(run_experiment(spec)) == format_csv(run_experiment(spec))


def test_parallel_matches_serial():
    spec = figure_spec(2, trials=3, seed=1, schemes=("SRM", "ZF")).replace(sweep=("p_bs_dbm", (30, 40)))
    assert format_csv(run_experiment(spec)) == format_csv(run_experiment(spec.replace(workers=2)))


def test_record_layout():
    recs = run_experiment(figure_spec(6, trials=2, seed=0).replace(sweep=("n_jammers", (2, 4))))
    assert [(r.scheme, r.sweep_value) for r in recs] == [("TPM", 2), ("TPM", 4), ("LC-TPM", 2), ("LC-TPM", 4)]
    for r in recs:
        assert r.mean_bs_power_dbm is not None and r.mean_sr >= 0 and r.mean_wall_time_s is None
        assert (r.mean_iterations is not None) == (r.scheme == "LC-TPM")
        assert not r.violations


def test_failures_are_counted_not_raised():
    def boom(ch, cfg, opts):
        raise InfeasibleProblem("forced")

    cfg = BASE.replace(seed=0)
    res = run_trial(("SRM",), cfg, 0, {}, runners={"SRM": boom})
    assert not res["SRM"].ok and "forced" in res["SRM"].error


def test_common_random_numbers_prefix():
    cfg = BASE.replace(seed=4)
    for trial in range(5):
        small, big = sample_channels(cfg, trial), sample_channels(cfg.replace(M=12, N=16), trial)
        assert np.array_equal(big.h_bd[:8], small.h_bd)
        assert np.array_equal(big.h_cd[:4], small.h_cd)
        assert np.array_equal(big.h_ce[:4], small.h_ce)


def test_f2_means_nondecreasing():
    recs = run_experiment(figure_spec(2, trials=8, seed=2).replace(sweep=("p_bs_dbm", (30, 40, 50))))
    for name in ("SRM", "LC-SRM", "ZF"):
        m = [r.mean_sr for r in recs if r.scheme == name]
        assert all(b >= a - 1e-4 for a, b in zip(m, m[1:])), (name, m)


# -- complexity ----------------------------------------------------------------


_SLOW_CONVERGENCE = pytest.mark.xfail(
    strict=True, reason="formula gives 9.30 at N=64 (18% under 2^3.5); the M and N+4 offsets fade only by N=128")


@pytest.mark.parametrize("scheme,expo,n", [
    ("SRM", 6.5, 64), ("SRM", 6.5, 128), ("SRM", 6.5, 256), ("SRM", 6.5, 512),
    pytest.param("LC-SRM", 3.5, 64, marks=_SLOW_CONVERGENCE),
    ("LC-SRM", 3.5, 128), ("LC-SRM", 3.5, 256), ("LC-SRM", 3.5, 512),
])
def test_complexity_growth_ratio(scheme, expo, n):
    m = ComplexityModel.for_scheme(scheme, 8, 4)
    ratio = complexity_estimate(m, 8, 2 * n) / complexity_estimate(m, 8, n)
    assert ratio == pytest.approx(2 ** expo, rel=0.1)


def test_complexity_dimensions():
    assert ComplexityModel.for_scheme("LC-SRM", 8, 4).n_dim == 13
    assert ComplexityModel.for_scheme("SRM", 8, 4).n_dim == 81
    assert ComplexityModel.for_scheme("TPM", 8, 4).n_dim == 80
    assert ComplexityModel.for_scheme("LC-TPM", 8, 4).n_dim == 12
    with pytest.raises(ConfigError):
        complexity_estimate(ComplexityModel.for_scheme("SRM", 8, 4), 0, 4)


@pytest.mark.parametrize("M,N", [(8, 4), (3, 17), (1, 2)])
def test_constraint_count_matches_closed_forms(M, N):
    # two independent routes to the same operation count
    for scheme in ("SRM", "TPM", "LC-SRM"):
        generic = ComplexityModel.for_scheme(scheme, M, N, i_max=50).cost()
        assert generic == pytest.approx(printed_closed_form(scheme, M, N, i_max=50), rel=1e-12)
    # the typeset LC-TPM bracket uses sqrt(N+2) and n2 where the count gives sqrt(N+3) and n3
    generic = ComplexityModel.for_scheme("LC-TPM", M, N, i_max=50).cost()
    assert generic != pytest.approx(printed_closed_form("LC-TPM", M, N, i_max=50), rel=1e-6)


def test_loglog_fit_exact_power_law():
    x = np.array([2.0, 4.0, 8.0, 16.0])
    slope, r2 = loglog_fit(x, 3 * x ** 2.5)
    assert slope == pytest.approx(2.5) and r2 == pytest.approx(1.0)


def test_benchmark_constant_stub():
    res = benchmark_scaling("SRM", [4, 8, 16, 32], trials=3, runner=lambda ch, cfg: sum(range(20000)))
    assert abs(res.slope) <= 0.1
    with pytest.raises(ValueError):
        benchmark_scaling("SRM", [4, 8], runner=lambda ch, cfg: None)


def test_benchmark_counts_failures():
    def flaky(ch, cfg):
        if cfg.N == 8:
            raise InfeasibleProblem("forced")

    res = benchmark_scaling("SRM", [4, 8, 16], trials=2, runner=flaky)
    assert res.failures == 2 and len(res.seconds) == 3


# -- oracles ---------------------------------------------------------------------


def _no_wiretap(path):
    ch, cfg = load(path)
    return ChannelSet(ch.h_bd, np.zeros(2), ch.h_cd, ch.h_ce), cfg


def test_oracle_srm_without_wiretap():
    ch, cfg = _no_wiretap(fixture_paths()[0])
    got = oracle_srm(ch, cfg, grid=16)
    assert got == pytest.approx(cfg.p_bs_max * np.linalg.norm(ch.h_bd) ** 2 / cfg.sigma2, rel=1e-9)


def test_oracle_tpm_without_wiretap():
    ch, cfg = _no_wiretap(fixture_paths()[1])
    got = oracle_tpm(ch, cfg, grid=16)
    expect = gamma_d_from(cfg.rs_min, cfg.gamma_e) * cfg.sigma2 / np.linalg.norm(ch.h_bd) ** 2
    assert got == pytest.approx(expect, rel=1e-9)


@pytest.mark.parametrize("path", fixture_paths()[:3])
def test_oracle_grid_refinement_monotone(path):
    ch, cfg = load(path)
    assert oracle_srm(ch, cfg, grid=64) >= oracle_srm(ch, cfg, grid=32)
    assert oracle_tpm(ch, cfg, grid=64) <= oracle_tpm(ch, cfg, grid=32)


def test_oracle_size_limit():
    cfg = SystemConfig(M=3, N=2, p_bs_max=1.0, p_harvested=1e-3)
    with pytest.raises(DimensionError):
        oracle_srm(sample_channels(cfg, 0), cfg)


def test_oracle_and_solver_agree_on_infeasible_target():
    ch, cfg = load(fixture_paths()[0])
    ch = ChannelSet(ch.h_bd, ch.h_bd, ch.h_cd, ch.h_ce)  # eavesdropper sees the destination channel
    cfg = cfg.replace(rs_min=5.0, p_harvested=(1e-9, 1e-9))
    assert math.isinf(oracle_tpm(ch, cfg, grid=16))
    with pytest.raises(InfeasibleProblem):
        solve_b_cj_tpm(ch, cfg)


def test_fixture_round_trip(tmp_path):
    ch, cfg = load(fixture_paths()[4])
    save_fixture(tmp_path / "f.json", ch, cfg)
    ch2, cfg2 = load_fixture(tmp_path / "f.json")
    assert cfg2 == cfg
    for k in ("h_bd", "h_be", "h_cd", "h_ce"):
        assert np.array_equal(getattr(ch2, k), getattr(ch, k))


# -- CLI -------------------------------------------------------------------------


def test_cli_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = main(["run", "--figure", "2", "--schemes", "srm,zf", "--trials", "1", "--values", "30,40",
                 "--out", str(out)])
    assert code == 0
    recs = parse_csv(out)
    assert [r.scheme for r in recs] == ["SRM", "SRM", "ZF", "ZF"]


def test_cli_config_file_overridden_by_flags(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("figure = 2\nschemes = zf\ntrials = 1\nvalues = 30,35,40  # three points\n")
    assert read_config_file(conf)["values"] == "30,35,40"
    assert main(["run", "--config", str(conf), "--values", "30"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and lines[1].startswith("ZF,p_bs_dbm,30,")


@pytest.mark.parametrize("argv", [
    ["run"],
    ["run", "--figure", "9"],
    ["run", "--figure", "2", "--schemes", "qosd"],
    ["oracle", "--fixture", "/nonexistent.json"],
    ["bench"],
])
def test_cli_usage_and_io_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_cli_unknown_config_key(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("figure = 2\ncolour = blue\n")
    assert main(["run", "--config", str(conf)]) == 1


def test_cli_oracle(capsys):
    assert main(["oracle", "--fixture", fixture_paths()[0], "--grid", "32"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("srm") and "tpm" in out


def test_cli_violation_exit_code(monkeypatch, capsys):
    from wpcj.harness import experiment

    def loud(ch, cfg, opts):
        out = experiment._run_zf(ch, cfg, opts)
        return out._replace(design=out.design.__class__(out.design.v * 10, out.design.q_cov))

    monkeypatch.setitem(experiment.SCHEME_RUNNERS, "ZF", loud)
    assert main(["run", "--figure", "2", "--schemes", "zf", "--trials", "1", "--values", "30"]) == 2
    assert "invariant violated" in capsys.readouterr().err
