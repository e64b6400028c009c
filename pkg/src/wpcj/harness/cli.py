"""Command-line entry point: ``run``, ``bench`` and ``oracle``.

Exit codes: 0 success, 1 I/O or hard solver failure, 2 when a checked
invariant is violated.  ``--config FILE`` reads flat ``key = value`` lines
whose keys are the long flag names; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from ..errors import WpcjError
from .experiment import SCHEME_NAMES, dbm_to_watts, emit_csv, figure_spec, format_csv, run_experiment

log = logging.getLogger("wpcj")

EXIT_OK, EXIT_FAILURE, EXIT_VIOLATION = 0, 1, 2
ORACLE_RTOL = 0.02


def _csv_list(kind):
    def parse(s: str):
        return [kind(x) for x in s.split(",") if x.strip()]
    return parse


def _schemes(s: str) -> list[str]:
    names = [x.strip().upper() for x in s.split(",") if x.strip()]
    bad = [n for n in names if n not in SCHEME_NAMES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown scheme(s) {bad}; choose from {','.join(SCHEME_NAMES).lower()}")
    return names


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key = value")
            k, v = (x.strip() for x in line.split("=", 1))
            out[k.lstrip("-").replace("_", "-")] = v
    return out


def _apply_config(sub: argparse.ArgumentParser, values: dict[str, str]) -> None:
    by_flag = {opt[2:]: a for a in sub._actions for opt in a.option_strings if opt.startswith("--")}
    defaults = {}
    for key, raw in values.items():
        if key == "config":
            continue
        action = by_flag.get(key)
        if action is None:
            raise ValueError(f"config file: unknown key {key!r}")
        if action.nargs == 0:  # store_true flags
            defaults[action.dest] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[action.dest] = action.type(raw) if action.type else raw
    sub.set_defaults(**defaults)


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; argparse's default 2 is reserved for violations
    def error(self, message):
        raise ValueError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wpcj", description="Cooperative-jamming secure transmission experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sp = ap.add_subparsers(dest="command", required=True)

    run = sp.add_parser("run", help="run a figure sweep and write a result CSV")
    run.add_argument("--config", help="flat key = value file mirroring these flags")
    run.add_argument("--figure", type=int, choices=range(2, 7), required=False)
    run.add_argument("--schemes", type=_schemes, help="comma list, e.g. srm,lc-srm,zf (default: figure preset)")
    run.add_argument("--trials", type=int, default=200)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", help="CSV path (default: stdout)")
    run.add_argument("--gamma-e", type=float, help="eavesdropper SINR cap (linear)")
    run.add_argument("--rician-k", type=float, help="Rician K-factor (linear)")
    run.add_argument("--sigma2", type=float, help="noise power in watts")
    run.add_argument("--p-bs-dbm", type=float, help="BS power budget in dBm for fixed-power figures")
    run.add_argument("--p-i-mw", type=float, help="harvested power per node in mW")
    run.add_argument("--rs-min", type=float, help="secrecy-rate target for the power schemes")
    run.add_argument("--values", type=_csv_list(float), help="override the sweep values")
    run.add_argument("--theta1", type=float)
    run.add_argument("--theta2", type=float)
    run.add_argument("--i-max", type=int)
    run.add_argument("--timing", action="store_true", help="fill the wall-time column (not reproducible)")
    run.add_argument("--workers", type=int, default=1)

    bench = sp.add_parser("bench", help="fit the wall-time exponent of one scheme in N")
    bench.add_argument("--config")
    bench.add_argument("--scheme", type=lambda s: _schemes(s)[0], required=False)
    bench.add_argument("--n", type=_csv_list(int), default=[4, 8, 16, 32])
    bench.add_argument("--m", type=int, default=8)
    bench.add_argument("--trials", type=int, default=3)
    bench.add_argument("--seed", type=int, default=0)

    orc = sp.add_parser("oracle", help="brute-force check of a stored (M, N <= 2) fixture")
    orc.add_argument("--config")
    orc.add_argument("--fixture", required=False)
    orc.add_argument("--grid", type=int, default=64)
    orc.add_argument("--which", choices=("srm", "tpm", "both"), default="both")
    return ap


def _cmd_run(args) -> int:
    if args.figure is None:
        raise ValueError("--figure is required")
    over = {}
    for key in ("gamma_e", "rician_k", "sigma2", "rs_min", "theta1", "theta2", "i_max"):
        if getattr(args, key) is not None:
            over[key] = getattr(args, key)
    if args.p_bs_dbm is not None:
        over["p_bs_max"] = dbm_to_watts(args.p_bs_dbm)
    if args.p_i_mw is not None:
        over["p_harvested"] = args.p_i_mw * 1e-3
    spec = figure_spec(args.figure, trials=args.trials, seed=args.seed, schemes=args.schemes,
                       timing=args.timing, workers=args.workers, **over)
    if args.values:
        spec = spec.replace(sweep=(spec.sweep.variable, tuple(args.values)))
    records = run_experiment(spec, progress=log.info)
    if args.out:
        emit_csv(records, args.out)
    else:
        sys.stdout.write(format_csv(records))
    failures = sum(r.failures for r in records)
    if failures:
        log.warning("%d scheme runs failed and were excluded from the means", failures)
    violations = [v for r in records for v in r.violations]
    for v in violations:
        print(f"invariant violated: {v}", file=sys.stderr)
    return EXIT_VIOLATION if violations else EXIT_OK


def _cmd_bench(args) -> int:
    from .complexity import benchmark_scaling

    if args.scheme is None:
        raise ValueError("--scheme is required")
    res = benchmark_scaling(args.scheme, args.n, M=args.m, trials=args.trials, seed=args.seed)
    print(f"scheme {res.scheme}  M={args.m}")
    for n, t in zip(res.n_values, res.seconds):
        print(f"  N={n:<5d} median {t:.4g} s")
    print(f"slope {res.slope:.3f}  R^2 {res.r2:.4f}  failures {res.failures}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    from ..sdp_schemes import solve_b_cj_srm, solve_b_cj_tpm
    from .fixtures import load_fixture
    from .oracle import oracle_srm, oracle_tpm

    if args.fixture is None:
        raise ValueError("--fixture is required")
    ch, cfg = load_fixture(args.fixture)
    bad = False
    if args.which in ("srm", "both"):
        ref = oracle_srm(ch, cfg, grid=args.grid)
        got = solve_b_cj_srm(ch, cfg).sinr_d
        gap = abs(got - ref) / ref
        bad |= gap > ORACLE_RTOL
        print(f"srm  oracle sinr_d {ref:.6g}  conic {got:.6g}  rel gap {gap:.3e}")
    if args.which in ("tpm", "both"):
        ref = oracle_tpm(ch, cfg, grid=args.grid)
        got = solve_b_cj_tpm(ch, cfg).bs_power
        gap = abs(got - ref) / got
        bad |= gap > ORACLE_RTOL
        print(f"tpm  oracle power {ref:.6g} W  conic {got:.6g} W  rel gap {gap:.3e}")
    return EXIT_VIOLATION if bad else EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        pre, _ = parser.parse_known_args(argv)
        cfg_path = getattr(pre, "config", None)
        if cfg_path:
            sub = parser._subparsers._group_actions[0].choices[pre.command]
            _apply_config(sub, read_config_file(cfg_path))
        args = parser.parse_args(argv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handler = {"run": _cmd_run, "bench": _cmd_bench, "oracle": _cmd_oracle}[args.command]
    try:
        return handler(args)
    except (OSError, ValueError, WpcjError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
