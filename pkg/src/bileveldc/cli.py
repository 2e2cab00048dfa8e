"""Command-line interface: ``solve``, ``bench``, and ``profile``.

Exit codes: 0 on success, 1 on solver errors, 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .bench import BenchRow, BenchTable, METRICS, emit_reports, performance_profile
from .errors import BilevelDCError, EmptyTableError, InfeasibleInstanceError, ParseError
from .instances import load_instance, random_starts
from .penalty import Method, PenaltyParams, RunReport, run_penalty

_PARAM_TYPES = {f.name: f.type for f in fields(PenaltyParams)}


def _parse_params(pairs) -> PenaltyParams:
    params = PenaltyParams()
    for pair in pairs or []:
        if "=" not in pair:
            raise ParseError(f"--params entries look like key=value, got {pair!r}")
        key, _, raw = pair.partition("=")
        if key not in _PARAM_TYPES:
            raise ParseError(
                f"unknown parameter {key!r}; valid keys: {sorted(_PARAM_TYPES)}"
            )
        caster = int if _PARAM_TYPES[key] == "int" else float
        try:
            params = replace(params, **{key: caster(raw)})
        except ValueError:
            raise ParseError(f"cannot parse {raw!r} as {key}")
    return params


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    params = _parse_params(args.params)
    start = random_starts(instance, 1, args.seed)[0]
    report = run_penalty(instance, start, args.method, params)
    print(f"instance       {instance.name}")
    print(f"method         {report.method.value}")
    print(f"terminated     {report.terminated}")
    print(f"final value    {report.final_value:.10g}")
    print(f"outer iters    {report.outer_iters}")
    print(f"inner iters    {report.total_inner_iters}")
    print(f"duality gap    {report.final_gap:.3e}")
    print(f"stat residual  {report.stationarity_residual:.3e}")
    print(f"sigma final    {report.sigma_final:.6g}")
    print(f"wall time      {report.wall_time * 1e3:.1f} ms")
    print(f"x              {np.array2string(report.final_x, precision=6)}")
    return 0


def _cmd_bench(args) -> int:
    instance = load_instance(args.instance)
    params = _parse_params(args.params)
    methods = [m for m in args.methods.split(",") if m]
    from .bench import run_benchmark

    table = run_benchmark(instance, methods, args.runs, args.seed, params)
    paths = emit_reports(table, [], args.out)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _read_results_csv(path: Path) -> BenchTable:
    if not path.is_file():
        raise ParseError(f"{path}: no such file")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"method", "start", "seed", "fval", "outer", "inner", "gap",
                "resid", "terminated", "wall_ms"}
        if reader.fieldnames is None or not need.issubset(reader.fieldnames):
            raise ParseError(f"{path}: missing columns {sorted(need)}")
        rows = []
        for line in reader:
            try:
                method = Method.parse(line["method"])
                report = RunReport(
                    method=method,
                    start=np.zeros(0),
                    final_x=None,
                    final_y=None,
                    final_value=float(line["fval"]),
                    outer_iters=int(line["outer"]),
                    total_inner_iters=int(line["inner"]),
                    final_gap=float(line["gap"]),
                    stationarity_residual=float(line["resid"]),
                    terminated=bool(int(line["terminated"])),
                    sigma_final=np.nan,
                    wall_time=float(line["wall_ms"]) / 1e3,
                )
                rows.append(
                    BenchRow(method, int(line["start"]), int(line["seed"]), report)
                )
            except (KeyError, ValueError) as exc:
                raise ParseError(f"{path}: bad row {line}: {exc}")
    if not rows:
        raise EmptyTableError(f"{path}: no data rows")
    return BenchTable(instance_name=path.stem, seed=rows[0].seed, rows=rows)


def _cmd_profile(args) -> int:
    table = _read_results_csv(Path(args.infile))
    curves = performance_profile(table, args.metric, args.offset, args.pistar)
    paths = emit_reports(table, curves, args.out, log_tau=args.log_tau)
    for p in paths:
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bileveldc",
        description="Penalty-DC solver and benchmark harness for affine bilevel programs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="one run from a seeded random start")
    p_solve.add_argument("--instance", required=True, help="builtin name or JSON path")
    p_solve.add_argument("--method", required=True, choices=[m.value for m in Method])
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--params", nargs="*", metavar="k=v")
    p_solve.set_defaults(func=_cmd_solve)

    p_bench = sub.add_parser("bench", help="batch runs with shared random starts")
    p_bench.add_argument("--instance", required=True)
    p_bench.add_argument(
        "--methods", default="pbdc,pdc,pdg", help="comma list of methods"
    )
    p_bench.add_argument("--runs", type=int, default=100)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--params", nargs="*", metavar="k=v")
    p_bench.set_defaults(func=_cmd_bench)

    p_prof = sub.add_parser("profile", help="performance profiles from results.csv")
    p_prof.add_argument("--in", dest="infile", required=True)
    p_prof.add_argument("--metric", required=True, choices=list(METRICS))
    p_prof.add_argument("--offset", type=float, required=True)
    p_prof.add_argument("--pistar", type=float, required=True)
    p_prof.add_argument("--out", required=True)
    p_prof.add_argument("--log-tau", action="store_true")
    p_prof.set_defaults(func=_cmd_profile)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InfeasibleInstanceError, EmptyTableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BilevelDCError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
