"""Monte-Carlo sweeps over the transmission schemes and CSV persistence.

Every trial index maps to one channel draw per sweep value.  Draws at
different ``M`` or ``N`` are prefixes of one another (see
:func:`wpcj.model.sample_channels`), so all schemes and all sweep values see
common random numbers.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from ..baselines import zero_forcing
from ..cccp_schemes import DEFAULT_I_MAX, DEFAULT_THETA1, DEFAULT_THETA2, EVE_SLACK, run_lc_b_cj_srm, run_lc_b_cj_tpm
from ..errors import ConfigError, WpcjError
from ..model import SystemConfig, TransmitDesign, check_feasibility, rates, sample_channels
from ..sdp_schemes import solve_b_cj_srm, solve_b_cj_tpm

SCHEME_NAMES = ("SRM", "TPM", "LC-SRM", "LC-TPM", "ZF")
SWEEP_VARIABLES = ("p_bs_dbm", "n_jammers", "m_antennas", "p_i_mw")
FIGURE_IDS = ("F2", "F3", "F4", "F5", "F6")
POWER_SCHEMES = ("TPM", "LC-TPM")
LC_SCHEMES = ("LC-SRM", "LC-TPM")

CSV_HEADER = ("scheme", "sweep_variable", "sweep_value", "mean_sr", "sr_ci95",
              "mean_bs_power_dbm", "failures", "mean_iterations", "mean_wall_time_s")

# per-trial invariant tolerances
SR_ORDER_SLACK = 1e-4
POWER_ORDER_SLACK = 1e-6
RS_SLACK = 1e-3
EVE_RTOL = 1e-6


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def sig6(x: float) -> float:
    """Round to 6 significant digits, the precision stored in result files."""
    return float(f"{x:.6g}")


class Sweep(NamedTuple):
    variable: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentSpec:
    figure_id: str
    schemes: tuple[str, ...]
    sweep: Sweep
    fixed: SystemConfig
    trials: int = 200
    seed: int = 0
    theta1: float = DEFAULT_THETA1
    theta2: float = DEFAULT_THETA2
    i_max: int = DEFAULT_I_MAX
    timing: bool = False  # wall time is not reproducible, so it is opt-in
    workers: int = 1

    def __post_init__(self):
        schemes = tuple(s.upper() for s in self.schemes)
        object.__setattr__(self, "schemes", schemes)
        sweep = Sweep(self.sweep[0], tuple(float(v) for v in self.sweep[1]))
        object.__setattr__(self, "sweep", sweep)
        if self.figure_id not in FIGURE_IDS:
            raise ConfigError(f"figure_id must be one of {FIGURE_IDS}, got {self.figure_id!r}")
        if not schemes or any(s not in SCHEME_NAMES for s in schemes) or len(set(schemes)) != len(schemes):
            raise ConfigError(f"schemes must be distinct names from {SCHEME_NAMES}, got {schemes}")
        if sweep.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}, got {sweep.variable!r}")
        if not sweep.values or any(b <= a for a, b in zip(sweep.values, sweep.values[1:])):
            raise ConfigError("sweep values must be nonempty and strictly increasing")
        if sweep.variable in ("n_jammers", "m_antennas") and any(v != int(v) for v in sweep.values):
            raise ConfigError(f"{sweep.variable} values must be integers")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be an unsigned integer")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        for v in sweep.values:
            self.config_at(v)  # surfaces invalid sweep points early

    def config_at(self, value: float) -> SystemConfig:
        var, cfg = self.sweep.variable, self.fixed.replace(seed=self.seed)
        if var == "p_bs_dbm":
            return cfg.replace(p_bs_max=dbm_to_watts(value))
        if var == "n_jammers":
            return cfg.replace(N=int(value))
        if var == "m_antennas":
            return cfg.replace(M=int(value))
        return cfg.replace(p_harvested=(value * 1e-3,) * cfg.N)

    def replace(self, **changes) -> "ExperimentSpec":
        import dataclasses

        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ResultRecord:
    scheme: str
    sweep_variable: str
    sweep_value: float
    mean_sr: float | None
    sr_ci95: float | None
    mean_bs_power_dbm: float | None
    failures: int
    mean_iterations: float | None
    mean_wall_time_s: float | None
    violations: tuple[str, ...] = field(default=(), compare=False, repr=False)

    @property
    def mean_bs_power_w(self) -> float | None:
        if self.mean_bs_power_dbm is None:
            return None
        return dbm_to_watts(self.mean_bs_power_dbm)


# -- scheme adapters ---------------------------------------------------------------


class Outcome(NamedTuple):
    design: TransmitDesign
    iterations: int | None


def _run_srm(ch, cfg, opts):
    return Outcome(solve_b_cj_srm(ch, cfg).design, None)


def _run_tpm(ch, cfg, opts):
    return Outcome(solve_b_cj_tpm(ch, cfg).design, None)


def _run_lc_srm(ch, cfg, opts):
    design, st = run_lc_b_cj_srm(ch, cfg, theta1=opts.get("theta1", DEFAULT_THETA1),
                                 i_max=opts.get("i_max", DEFAULT_I_MAX))
    return Outcome(design, st.iter)


def _run_lc_tpm(ch, cfg, opts):
    design, st = run_lc_b_cj_tpm(ch, cfg, theta2=opts.get("theta2", DEFAULT_THETA2),
                                 i_max=opts.get("i_max", DEFAULT_I_MAX))
    return Outcome(design, st.iter)


def _run_zf(ch, cfg, opts):
    return Outcome(zero_forcing(ch, cfg), None)


SCHEME_RUNNERS: dict[str, Callable] = {
    "SRM": _run_srm,
    "TPM": _run_tpm,
    "LC-SRM": _run_lc_srm,
    "LC-TPM": _run_lc_tpm,
    "ZF": _run_zf,
}


# -- one trial -------------------------------------------------------------------


class SchemeTrial(NamedTuple):
    ok: bool
    r_s: float
    power: float
    iterations: int | None
    seconds: float
    violations: tuple[str, ...]
    error: str = ""


def _design_violations(name: str, design: TransmitDesign, ch, cfg) -> list[str]:
    out = []
    feas = check_feasibility(design, cfg)
    # the power schemes are not bound by p_bs_max
    if not (feas.node_power_ok and feas.psd_ok and (feas.bs_power_ok or name in POWER_SCHEMES)):
        out.append(f"{name}: power limits violated by {feas.worst_violation:.3e}")
    r = rates(design, ch, cfg.sigma2)
    if name != "ZF":
        # LC iterates are accepted up to a relative EVE_SLACK above the cap
        rtol = EVE_RTOL if name in ("SRM", "TPM") else EVE_SLACK
        if r.sinr_e > cfg.gamma_e * (1.0 + rtol):
            out.append(f"{name}: eavesdropper SINR {r.sinr_e:.6g} above cap {cfg.gamma_e:.6g}")
    if name in POWER_SCHEMES and r.r_s < cfg.rs_min - RS_SLACK:
        out.append(f"{name}: secrecy rate {r.r_s:.6g} below target {cfg.rs_min:.6g}")
    return out


def run_trial(schemes: Sequence[str], cfg: SystemConfig, trial: int, opts: dict,
              runners: dict | None = None) -> dict[str, SchemeTrial]:
    """Run every scheme on the channels of ``trial``; failures are captured, not raised."""
    runners = runners or SCHEME_RUNNERS
    ch = sample_channels(cfg, trial)
    res: dict[str, SchemeTrial] = {}
    for name in schemes:
        t0 = time.perf_counter()
        try:
            out = runners[name](ch, cfg, opts)
        except (WpcjError, ArithmeticError, np.linalg.LinAlgError) as exc:
            res[name] = SchemeTrial(False, math.nan, math.nan, None, time.perf_counter() - t0, (),
                                    f"{type(exc).__name__}: {exc}")
            continue
        dt = time.perf_counter() - t0
        r = rates(out.design, ch, cfg.sigma2)
        viol = tuple(_design_violations(name, out.design, ch, cfg))
        res[name] = SchemeTrial(True, r.r_s, out.design.bs_power, out.iterations, dt, viol)
    # local optimum never beats the global one
    a, b = res.get("LC-SRM"), res.get("SRM")
    if a and b and a.ok and b.ok and a.r_s > b.r_s + SR_ORDER_SLACK:
        res["LC-SRM"] = a._replace(violations=a.violations + (
            f"LC-SRM: secrecy rate {a.r_s:.6g} above SRM {b.r_s:.6g}",))
    a, b = res.get("LC-TPM"), res.get("TPM")
    if a and b and a.ok and b.ok and a.power < b.power - POWER_ORDER_SLACK:
        res["LC-TPM"] = a._replace(violations=a.violations + (
            f"LC-TPM: power {a.power:.6g} below TPM {b.power:.6g}",))
    return res


def _task(args):
    schemes, cfg, trial, opts = args
    return run_trial(schemes, cfg, trial, opts)


# -- aggregation -------------------------------------------------------------------


def _opt(x: float | None) -> float | None:
    return None if x is None or not math.isfinite(x) else sig6(x)


def aggregate(name: str, spec: ExperimentSpec, value: float, trials: Sequence[SchemeTrial],
              ) -> ResultRecord:
    """Combine per-trial results in trial order (independent of completion order)."""
    ok = [t for t in trials if t.ok]
    sr = np.array([max(0.0, t.r_s) for t in ok])
    mean_sr = float(sr.mean()) if sr.size else None
    ci = 1.96 * float(sr.std(ddof=1)) / math.sqrt(sr.size) if sr.size >= 2 else None
    power = None
    if name in POWER_SCHEMES and ok:
        power = watts_to_dbm(float(np.mean([t.power for t in ok])))
    iters = float(np.mean([t.iterations for t in ok])) if name in LC_SCHEMES and ok else None
    wall = float(np.mean([t.seconds for t in trials])) if spec.timing and trials else None
    viol = tuple(v for t in trials for v in t.violations)
    return ResultRecord(name, spec.sweep.variable, sig6(value), _opt(mean_sr), _opt(ci), _opt(power),
                        len(trials) - len(ok), _opt(iters), _opt(wall), viol)


def run_experiment(spec: ExperimentSpec, progress: Callable[[str], None] | None = None
                   ) -> list[ResultRecord]:
    """Records ordered by scheme (as listed in the spec) then sweep value."""
    opts = {"theta1": spec.theta1, "theta2": spec.theta2, "i_max": spec.i_max}
    tasks = [(spec.schemes, spec.config_at(v), k, opts)
             for v in spec.sweep.values for k in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * spec.workers))))
    else:
        results = []
        for i, task in enumerate(tasks):
            results.append(_task(task))
            if progress and (i + 1) % spec.trials == 0:
                progress(f"{spec.sweep.variable}={spec.sweep.values[i // spec.trials]:g} done")
    records = []
    for name in spec.schemes:
        for j, v in enumerate(spec.sweep.values):
            block = results[j * spec.trials:(j + 1) * spec.trials]
            records.append(aggregate(name, spec, v, [r[name] for r in block]))
    return records


# -- figure presets ----------------------------------------------------------------


def figure_spec(figure: str | int, trials: int = 200, seed: int = 0, schemes: Iterable[str] | None = None,
                **overrides) -> ExperimentSpec:
    """Preset sweep for one of the five simulation figures.

    ``overrides`` may set any :class:`SystemConfig` field (``gamma_e``,
    ``rician_k``, ...) or the CCCP options ``theta1``, ``theta2``, ``i_max``
    and ``timing``/``workers``.
    """
    fid = f"F{figure}" if not str(figure).upper().startswith("F") else str(figure).upper()
    if fid not in FIGURE_PRESETS:
        raise ConfigError(f"unknown figure {figure!r}; expected one of {FIGURE_IDS}")
    preset = FIGURE_PRESETS[fid]
    run_keys = {"theta1", "theta2", "i_max", "timing", "workers"}
    run_opts = {k: overrides.pop(k) for k in list(overrides) if k in run_keys}
    fixed = preset["fixed"]
    if overrides:
        if "p_harvested" in overrides and np.isscalar(overrides["p_harvested"]):
            overrides["p_harvested"] = (float(overrides["p_harvested"]),) * fixed.N
        fixed = fixed.replace(**overrides)
    return ExperimentSpec(fid, tuple(schemes or preset["schemes"]), preset["sweep"], fixed,
                          trials=trials, seed=seed, **run_opts)


_P_I = 2.5e-3
FIGURE_PRESETS = {
    "F2": dict(schemes=("SRM", "LC-SRM", "ZF"), sweep=Sweep("p_bs_dbm", (30, 35, 40, 45, 50)),
               fixed=SystemConfig(M=8, N=4, p_bs_max=10.0, p_harvested=_P_I)),
    "F3": dict(schemes=("SRM", "LC-SRM", "ZF"), sweep=Sweep("n_jammers", (4, 8, 16, 32)),
               fixed=SystemConfig(M=8, N=4, p_bs_max=10.0, p_harvested=_P_I)),
    "F4": dict(schemes=("SRM", "LC-SRM", "ZF"), sweep=Sweep("m_antennas", (2, 4, 6, 8, 10, 12)),
               fixed=SystemConfig(M=8, N=4, p_bs_max=10.0, p_harvested=_P_I)),
    "F5": dict(schemes=("SRM", "LC-SRM", "ZF"), sweep=Sweep("p_i_mw", (1, 2, 4, 8, 16)),
               fixed=SystemConfig(M=8, N=4, p_bs_max=10.0, p_harvested=_P_I)),
    "F6": dict(schemes=("TPM", "LC-TPM"), sweep=Sweep("n_jammers", (2, 4, 8, 12, 16)),
               fixed=SystemConfig(M=8, N=4, p_bs_max=10.0, p_harvested=_P_I, rs_min=2.0)),
}


# -- CSV ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.6g}"


def format_csv(records: Sequence[ResultRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.scheme, r.sweep_variable] + [_fmt(getattr(r, k)) for k in CSV_HEADER[2:]])
    return buf.getvalue()


def emit_csv(records: Sequence[ResultRecord], path: str | os.PathLike) -> None:
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(records))


def parse_csv(source: str | os.PathLike | io.TextIOBase) -> list[ResultRecord]:
    """Inverse of :func:`emit_csv`; accepts a path or an open text stream."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("not a result file: header mismatch")

    def num(s):
        return None if s == "" else float(s)

    out = []
    for row in rows[1:]:
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"malformed row: {row}")
        d = dict(zip(CSV_HEADER, row))
        out.append(ResultRecord(d["scheme"], d["sweep_variable"], float(d["sweep_value"]), num(d["mean_sr"]),
                                num(d["sr_ci95"]), num(d["mean_bs_power_dbm"]), int(d["failures"]),
                                num(d["mean_iterations"]), num(d["mean_wall_time_s"])))
    return out
