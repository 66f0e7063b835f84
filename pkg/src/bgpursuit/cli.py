"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bayesian_pursuit, classic_pursuit, config, experiments
from .bg_model import ModelParams, generate_trial, load_priors, save_priors, trial_rng
from .core_linalg import Dictionary, DimensionError, load_dictionary, read_vector_csv, write_matrix_csv, write_vector_csv
from .exact_oracle import objective_table, verify_theorem1
from .state import StopRule

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
ALL_ALGORITHMS = classic_pursuit.ALGORITHMS + bayesian_pursuit.ALGORITHMS
GEN_DATA_KEY = 0x6E0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _load_config(args) -> config.ExperimentConfig:
    if args.config is None:
        return config.parse_text("", "<defaults>", args.set)
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    return config.load(path, args.set)


def _float_arg(text: str) -> float:
    return config._float(text)


def _report_doc(report, y) -> dict:
    return {
        "algorithm": report.algorithm,
        "iterations": report.iterations,
        "stop_reason": report.stop_reason,
        "residual_norm": report.state.residual_norm,
        "y_norm": float(np.linalg.norm(y)),
        "support": [int(i) for i in report.state.support],
        "s_hat": [int(v) for v in report.s_hat],
        "x_hat": [float(v) for v in report.x_hat],
        "options": report.options,
    }


def cmd_solve(args) -> int:
    if args.algo not in ALL_ALGORITHMS:
        raise UsageError(f"unknown algorithm {args.algo!r}; valid ids: {', '.join(ALL_ALGORITHMS)}")
    for path in (args.dict, args.y, args.priors):
        if path is not None and not Path(path).is_file():
            raise UsageError(f"file not found: {path}")
    dictionary = load_dictionary(args.dict)
    y = read_vector_csv(args.y)
    if y.shape != (dictionary.n_rows,):
        raise DimensionError(f"{args.y}: {y.size} entries, dictionary {args.dict} has {dictionary.n_rows} rows")
    stop = StopRule(max_iter=args.max_iter, residual_floor=args.residual_floor)
    if args.algo in classic_pursuit.ALGORITHMS:
        report = classic_pursuit.run(args.algo, dictionary, y, stop, K=args.K, t_cfar=args.t_cfar)
    else:
        M = dictionary.n_cols
        if args.priors is not None:
            p = load_priors(args.priors)
            if p.shape != (M,):
                raise DimensionError(f"{args.priors}: {p.size} priors for {M} atoms")
        else:
            p = np.full(M, args.p)
        params = ModelParams(args.sigma2_w, args.sigma2_x, p)
        report = bayesian_pursuit.run(
            args.algo, dictionary, y, params, stop,
            adaptive_noise=args.adaptive_noise, K=args.K, P=args.P, forward_only=args.forward_only,
        )
    text = json.dumps(_report_doc(report, y), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _summary_path(args):
    return Path(args.summary) if args.summary else Path(args.out).with_suffix(".json")


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    rows = experiments.run_sweep(cfg, workers=args.workers)
    experiments.write_csv(rows, args.out)
    experiments.write_summary(_summary_path(args), cfg, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_phase(args) -> int:
    cfg = _load_config(args)
    points = experiments.phase_transition(cfg, workers=args.workers)
    experiments.write_phase_csv(points, args.out)
    experiments.write_summary(_summary_path(args), cfg)
    for p in points:
        where = experiments.NO_CROSSING if p.status != "crossing" else f"K/N={p.K_over_N:.4f}"
        print(f"{p.algorithm} N/M={p.N_over_M:g}: {where}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    passed = total = 0
    table_rows = []
    for inst in experiments.theorem1_instances(cfg):
        rep = verify_theorem1(inst.dictionary, inst.y, cfg.theorem_p, cfg.theorem_sigma2_w, cfg.theorem_sigma2_x)
        total += 1
        passed += rep.match
        kind = "noise-free" if inst.noise_free else "noisy"
        print(f"{'PASS' if rep.match else 'FAIL'} instance {inst.index} ({kind}, K={inst.K}, "
              f"|l0 set|={len(rep.l0_set)}, |map set|={len(rep.map_set)})")
        if args.table:
            for support, f, g in objective_table(inst.dictionary, inst.y, cfg.theorem_p, cfg.theorem_sigma2_w, cfg.theorem_sigma2_x):
                table_rows.append((inst.index, " ".join(map(str, support)), repr(f), repr(g)))
    if args.table:
        with Path(args.table).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("instance", "support", "f", "g"))
            w.writerows(table_rows)
    print(f"{'PASS' if passed == total else 'FAIL'} {passed}/{total}")
    return EXIT_OK if passed == total else EXIT_RUNTIME


def cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    K, sigma2_w = cfg.point(cfg.sweep_values[0])
    rng = trial_rng(cfg.master_seed, GEN_DATA_KEY)
    dictionary = Dictionary.gaussian(cfg.N, cfg.M, rng)
    truth = generate_trial(dictionary, K, rng, sigma2_x=cfg.sigma2_x, sigma2_w=sigma2_w)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "dict.csv", dictionary.data)
    truth.save(out / "truth")
    save_priors(out / "priors.csv", np.full(cfg.M, K / cfg.M))
    write_vector_csv(out / "y.csv", truth.y)
    print(f"wrote N={cfg.N}, M={cfg.M}, K={K} instance to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bgpursuit", description="Bayesian and classic pursuit for sparse recovery.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def config_args(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")

    p = sub.add_parser("solve", help="run one algorithm on a dictionary and observation")
    p.add_argument("--dict", required=True, help="dictionary CSV, one row per line")
    p.add_argument("--y", required=True, help="observation CSV, one value per line")
    p.add_argument("--algo", required=True, help=f"one of {', '.join(ALL_ALGORITHMS)}")
    p.add_argument("--sigma2-w", type=_float_arg, default=1e-4)
    p.add_argument("--sigma2-x", type=_float_arg, default=1.0, help="use inf for the flat prior")
    p.add_argument("--p", type=float, default=0.1, help="uniform occurrence probability")
    p.add_argument("--priors", help="per-atom occurrence probabilities CSV")
    p.add_argument("--K", type=int)
    p.add_argument("--P", type=int)
    p.add_argument("--adaptive-noise", action="store_true")
    p.add_argument("--forward-only", action="store_true")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--residual-floor", type=float, default=0.0)
    p.add_argument("--t-cfar", type=float, default=classic_pursuit.T_CFAR)
    p.add_argument("--out", help="report path (JSON); stdout when absent")
    p.set_defaults(func=cmd_solve)

    for name, func, help_text in (("sweep", cmd_sweep, "Monte-Carlo sweep to CSV"),
                                  ("phase", cmd_phase, "phase-transition crossings to CSV")):
        p = sub.add_parser(name, help=help_text)
        config_args(p)
        p.add_argument("--out", required=True, help="CSV output path")
        p.add_argument("--summary", help="summary JSON path (default: CSV path with .json)")
        p.add_argument("--workers", type=int, help="override the workers key")
        p.set_defaults(func=func)

    p = sub.add_parser("verify-theorem1", help="exhaustive l0 versus BG MAP comparison")
    config_args(p)
    p.add_argument("--table", help="write f(s) and g(s) for every support to this CSV")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen-data", help="write a seeded dictionary, observation and truth")
    config_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except config.ConfigError as exc:
        print("error: invalid configuration:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return EXIT_USAGE
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, FileNotFoundError) as exc:
        # DimensionError and CSV parse errors carry the file and line
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
