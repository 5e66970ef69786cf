"""Command-line front end: run, sweep and validate scenarios."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .plots import write_figures
from .scenario import (
    SWEEPABLE,
    Scenario,
    ScenarioError,
    bundled_names,
    load_scenario,
    with_value,
)
from .simcore import TraceLog, run_closed_loop, run_open_loop_estimation, summarize

log = logging.getLogger("harmonic_rejection")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4

OUT_ENV = "HARMREJ_OUT"


def simulate(scn: Scenario) -> TraceLog:
    if scn.mode == "open_loop":
        return run_open_loop_estimation(scn.disturbance, scn.estimator, scn.sim)
    return run_closed_loop(scn)


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def write_summary(path: Path, summary: dict) -> None:
    lines = [f"{k} = {_fmt(v)}" for k, v in summary.items()]
    path.write_text("\n".join(lines) + "\n")


def run_to_dir(scn: Scenario, out_dir: Path, plots: bool = True) -> tuple[int, dict]:
    for msg in scn.plant.params.consistency_warnings():
        log.info("%s: %s", scn.name, msg)
    trace = simulate(scn)
    summary = {"scenario": scn.name, **summarize(trace)}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        trace.to_csv(out_dir / "trace.csv")
        write_summary(out_dir / "summary.txt", summary)
        if plots:
            write_figures(trace, out_dir, scn.mode)
    except OSError as exc:
        log.error("cannot write outputs: %s", exc)
        return EXIT_IO, summary
    if not trace.ok:
        log.error("%s: %s", scn.name, trace.diagnostic)
        return EXIT_DIVERGENCE, summary
    return EXIT_OK, summary


def _default_out(scn: Scenario, given: str | None) -> Path:
    if given:
        return Path(given)
    if scn.output_dir:
        return Path(scn.output_dir)
    return Path(os.environ.get(OUT_ENV, "out")) / scn.name


def _load(path: str) -> Scenario:
    return load_scenario(path)


def cmd_run(args) -> int:
    scn = _load(args.scenario)
    if args.seed is not None:
        scn = replace(scn, sim=replace(scn.sim, rng_seed=args.seed))
    out = _default_out(scn, args.out)
    code, summary = run_to_dir(scn, out, plots=not args.no_plots)
    for k, v in summary.items():
        print(f"{k:>20}: {_fmt(v)}")
    print(f"outputs written to {out}")
    return code


def _sweep_one(job):
    scn, out = job
    try:
        code, summary = run_to_dir(scn, out, plots=False)
    except Exception as exc:  # recorded per run; the sweep continues
        return EXIT_DIVERGENCE, {"scenario": scn.name, "status": "error", "diagnostic": str(exc)}
    return code, summary


def cmd_sweep(args) -> int:
    base = _load(args.scenario)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    out_root = _default_out(base, args.out)
    jobs, rows = [], []
    for v in values:
        try:
            scn = with_value(base, args.param, v)
        except ScenarioError as exc:
            rows.append({"value": v, "status": "invalid", "diagnostic": "; ".join(exc.problems)})
            continue
        scn = replace(scn, name=f"{base.name}_{args.param}_{v:g}")
        jobs.append((v, scn, out_root / f"{args.param}_{v:g}"))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_sweep_one, [(s, o) for _, s, o in jobs]))
    else:
        results = [_sweep_one((s, o)) for _, s, o in jobs]
    for (v, _, _), (code, summary) in zip(jobs, results):
        rows.append({"value": v, **summary})
    rows.sort(key=lambda r: values.index(r["value"]))
    out_root.mkdir(parents=True, exist_ok=True)
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    with open(out_root / "sweep.csv", "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=["param", *keys])
        wr.writeheader()
        for r in rows:
            wr.writerow({"param": args.param, **{k: _fmt(r.get(k)) for k in keys}})
    for r in rows:
        print(f"{args.param}={r['value']:g}: {r.get('status')}")
    print(f"sweep table written to {out_root / 'sweep.csv'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scn = _load(args.scenario)
    print(f"{scn.name}: valid ({scn.mode})")
    return EXIT_OK


def cmd_list(args) -> int:
    for name in bundled_names():
        scn = load_scenario(name)
        print(f"{name:<10} {scn.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harmrej", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario (file path or bundled name)")
    p.add_argument("scenario")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario once per parameter value")
    p.add_argument("scenario")
    p.add_argument("--param", required=True, choices=sorted(SWEEPABLE))
    p.add_argument("--values", required=True, help="comma separated, e.g. 0.5,0.9,1.8")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="load and validate a scenario")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("list-scenarios", help="list bundled scenarios")
    p.set_defaults(func=cmd_list)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ScenarioError as exc:
        for p in exc.problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
