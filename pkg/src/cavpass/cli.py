"""Command-line entry point.

    cavpass run <config.ini>          run one configured scenario
    cavpass figure <name> --out DIR   reproduce a built-in figure sweep
    cavpass validate                  fast analytic-vs-numeric self checks

Global flags: --threads N (parallel sweep rows), --dt VALUE (override the
base integration step).  There is no --seed flag: nothing in the package
is randomized, and repeated runs of the same config are byte-identical.

Exit codes: 0 success, 1 failed validation checks, 2 configuration or
schema errors, 3 missing input file, 4 integrator non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

from .config import ConfigError, RunRequest, parse_config
from .dynamics import IntegrationError
from .experiments import (
    FIGURE_NAMES,
    SWEEP_HEADER,
    figure_tables,
    run_scenario,
)
from .selfcheck import run_validation

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_MISSING_FILE = 3
EXIT_NO_CONVERGENCE = 4


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12e}"
    return str(value)


def write_csv(path: str, header, rows) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _timeseries_rows(run, stride: int):
    n_atoms = run.positions.shape[0]
    header = ["t"] + [f"x{i + 1}" for i in range(n_atoms)] + [
        "norm_sq", "pop_target", "pop_initial", "pop_cavity_photon"]
    rows = []
    for k in range(0, len(run.times), stride):
        rows.append(
            [run.times[k]] + [run.positions[i, k] for i in range(n_atoms)]
            + [run.norm_sq[k], run.pop_target[k], run.pop_initial[k], run.pop_photon[k]]
        )
    return header, rows


def cmd_run(request: RunRequest) -> int:
    run = run_scenario(request.spec)
    summary_row = (
        request.spec.scenario, float("nan"), run.fidelity, run.p0,
        run.duration, run.dt_used, run.converged,
    )
    write_csv(request.summary_path, SWEEP_HEADER, [summary_row])
    written = [request.summary_path]
    if request.timeseries_path:
        header, rows = _timeseries_rows(run, request.timeseries_stride)
        write_csv(request.timeseries_path, header, rows)
        written.append(request.timeseries_path)
    print(f"scenario {request.spec.scenario}: F = {run.fidelity:.6f}, "
          f"P0 = {run.p0:.6f}, T = {run.duration:g}, dt = {run.dt_used:g}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_figure(name: str, out_dir: str, threads: int, dt: float | None) -> int:
    settings = None
    if dt is not None:
        from .experiments import DIRECT_SETTINGS, LAMBDA_SETTINGS

        base = DIRECT_SETTINGS if name in ("fig3", "fig4", "fig5") else LAMBDA_SETTINGS
        settings = replace(base, dt=dt)
    tables = figure_tables(name, threads=threads, settings=settings)
    os.makedirs(out_dir, exist_ok=True)
    for stem, header, rows in tables:
        path = os.path.join(out_dir, f"{stem}.csv")
        write_csv(path, header, rows)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(dt: float | None) -> int:
    results = run_validation(dt=dt)
    failed = 0
    for check in results:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: {check.detail}")
        failed += 0 if check.passed else 1
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return EXIT_CHECK_FAILED
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavpass",
        description="Conditional no-photon dynamics of atoms crossing an optical cavity",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="parallel workers for sweep rows")
    parser.add_argument("--dt", type=float, default=None,
                        help="override the base integration step")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario from a config file")
    p_run.add_argument("config")
    p_fig = sub.add_parser("figure", help="reproduce a built-in figure sweep")
    p_fig.add_argument("name", choices=FIGURE_NAMES)
    p_fig.add_argument("--out", default="figures")
    sub.add_parser("validate", help="run the analytic self-check suite")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            if not os.path.exists(args.config):
                print(f"error: config file not found: {args.config}", file=sys.stderr)
                return EXIT_MISSING_FILE
            request = parse_config(args.config)
            if args.dt is not None:
                request.spec.settings = replace(request.spec.settings, dt=args.dt)
            return cmd_run(request)
        if args.command == "figure":
            return cmd_figure(args.name, args.out, args.threads, args.dt)
        return cmd_validate(args.dt)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"error: integration did not converge: {exc} "
              f"(residual {exc.residual:.3e})", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
