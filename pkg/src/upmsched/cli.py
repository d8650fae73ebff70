"""Command-line interface: ``upmsched {gen,solve,bench,verify,oracle}``.

Settings are resolved as command-line flags, then the JSON config file given
by ``--config``, then the ``UPMSCHED_BACKEND`` environment variable (backend
only), then built-in defaults.  A config file looks like::

    {"solver": {"backend": "highs", "time_limit_s": 60}}
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .encoding import OBJECTIVES
from .instance import GenParams, InstanceFormatError, generate_instance, read_instance, write_instance
from .lbbd import RunConfig, run
from .oracle import OracleRefusal, brute_force_optimum
from .solver import BACKENDS, CapabilityError
from .subproblem import gantt_to_schedule, schedule_to_gantt, verify_timed_schedule

CSV_COLUMNS = ("instance", "R", "alg", "mode", "objective", "time_s", "N", "LB", "UB", "gap_pct")
BACKEND_ENV = "UPMSCHED_BACKEND"
DEFAULTS = {"backend": "fallback", "time_limit_s": 3600.0}

log = logging.getLogger("upmsched")


class CliError(Exception):
    pass


def version_string() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).resolve().parent)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config {path} is not valid JSON: {exc}") from exc
    solver = doc.get("solver", {})
    unknown = set(solver) - {"backend", "time_limit_s"}
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    return solver


def resolve_settings(args) -> dict:
    cfg = load_config(getattr(args, "config", None))
    out = dict(DEFAULTS)
    env = os.environ.get(BACKEND_ENV)
    if env:
        out["backend"] = env
    out.update(cfg)
    if getattr(args, "backend", None):
        out["backend"] = args.backend
    if getattr(args, "time_limit", None) is not None:
        out["time_limit_s"] = args.time_limit
    if out["backend"] not in BACKENDS:
        raise CliError(f"unknown solver backend {out['backend']!r}; choose from {sorted(BACKENDS)}")
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        if x == int(x):
            return str(int(x))
        return f"{x:.6g}"
    return str(x)


def result_row(inst, cfg: RunConfig, res) -> dict:
    return {
        "instance": inst.name, "R": inst.R, "alg": cfg.algorithm, "mode": cfg.mode,
        "objective": cfg.objective, "time_s": f"{res.wall_time_s:.3f}",
        "N": res.n_integer_solutions, "LB": _fmt(res.LB), "UB": _fmt(res.UB),
        "gap_pct": "inf" if math.isinf(res.gap_pct) else f"{res.gap_pct:.2f}",
    }


def csv_header_comment(seed) -> str:
    return f"# upmsched {version_string()} seed={seed}\n"


def _read_instance(path, R=None):
    try:
        inst = read_instance(path)
    except OSError as exc:
        raise CliError(f"cannot read instance {path}: {exc}") from exc
    except InstanceFormatError as exc:
        raise CliError(f"{path}: {exc}") from exc
    return inst if R is None else inst.with_resources(R)


def _config_from(args, settings, objective=None, alg=None, mode=None) -> RunConfig:
    return RunConfig(
        algorithm=alg or args.alg, mode=mode or args.mode, objective=objective or args.objective,
        time_limit_s=settings["time_limit_s"], use_valid_inequalities=not args.no_valid_ineq,
        warm_start=not args.no_warm_start, kopt_extension=args.kopt, seed=args.seed,
        backend=settings["backend"], parallelism=args.parallel)


# -- subcommands -------------------------------------------------------------

def cmd_gen(args) -> int:
    params = GenParams(args.jobs, args.machines, Fraction(args.r_fraction), args.alpha,
                       args.tau, seed=args.seed)
    try:
        inst = generate_instance(params)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    out = Path(args.out) if args.out else Path(f"{inst.name}_s{args.seed}.json")
    if out.is_dir() or (args.out and args.out.endswith(("/", "\\"))):
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"{inst.name}_s{args.seed}.json"
    write_instance(inst, out)
    print(out)
    return 0


def cmd_solve(args) -> int:
    settings = resolve_settings(args)
    inst = _read_instance(args.instance, args.R)
    cfg = _config_from(args, settings)
    try:
        res = run(inst, cfg)
    except (CapabilityError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    buf = io.StringIO()
    buf.write(csv_header_comment(args.seed))
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerow(result_row(inst, cfg, res))
    sys.stdout.write(buf.getvalue())
    log.info("status=%s cuts=%s", res.status, res.cuts_added)
    if args.schedule_out and res.incumbent is not None:
        doc = schedule_to_gantt(inst, res.incumbent, res.schedule, cfg.objective, res.UB)
        Path(args.schedule_out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return 0


def _bench_task(payload):
    path, R, cfg = payload
    inst = read_instance(path)
    if R is not None:
        inst = inst.with_resources(R)
    return result_row(inst, cfg, run(inst, cfg))


def _row_key(row) -> tuple:
    return (row["instance"], str(row["R"]), row["alg"], row["mode"], row["objective"])


def cmd_bench(args) -> int:
    settings = resolve_settings(args)
    root = Path(args.directory)
    files = sorted(root.glob("*.json")) if root.is_dir() else []
    if not files:
        raise CliError(f"no instance files in {root}")
    out = Path(args.out)
    done = set()
    if out.exists():
        with out.open(encoding="utf-8") as fh:
            rows = csv.DictReader(line for line in fh if not line.startswith("#"))
            done = {_row_key(r) for r in rows}
    tasks = []
    for path in files:
        inst = _read_instance(path)
        for R in (args.R or [None]):
            r_val = inst.R if R is None else R
            for alg in args.algs.split(","):
                for mode in args.modes.split(","):
                    for obj in args.objectives.split(","):
                        if obj == "sumT" and inst.d is None:
                            continue
                        cfg = _config_from(args, settings, obj, alg, mode)
                        try:
                            cfg.validate()
                        except (CapabilityError, ValueError) as exc:
                            raise CliError(str(exc)) from exc
                        if (inst.name, str(r_val), alg, mode, obj) in done:
                            continue
                        tasks.append((str(path), R, cfg))
    fresh = not out.exists() or out.stat().st_size == 0
    with out.open("a", encoding="utf-8", newline="") as fh:
        if fresh:
            fh.write(csv_header_comment(args.seed))
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        if fresh:
            writer.writeheader()
        if args.jobs_parallel > 1:
            with ProcessPoolExecutor(max_workers=args.jobs_parallel) as pool:
                for row in pool.map(_bench_task, tasks):
                    writer.writerow(row)
                    fh.flush()
        else:
            for task in tasks:
                writer.writerow(_bench_task(task))
                fh.flush()
    print(f"{len(tasks)} runs written to {out} ({len(done)} already present)")
    return 0


def cmd_verify(args) -> int:
    inst = _read_instance(args.instance)
    try:
        doc = json.loads(Path(args.schedule).read_text(encoding="utf-8"))
        if "R" in doc and args.R is None:
            inst = inst.with_resources(int(doc["R"]))
        elif args.R is not None:
            inst = inst.with_resources(args.R)
        asg, ts = gantt_to_schedule(doc, inst.n_jobs)
    except OSError as exc:
        raise CliError(f"cannot read schedule {args.schedule}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"malformed schedule {args.schedule}: {exc}") from exc
    problems = verify_timed_schedule(inst, asg, ts)
    for line in problems:
        print(line)
    if problems:
        return 1
    print("ok")
    return 0


def cmd_oracle(args) -> int:
    inst = _read_instance(args.instance, args.R)
    try:
        res = brute_force_optimum(inst, args.objective, max_jobs=args.max_jobs)
    except (OracleRefusal, ValueError) as exc:
        raise CliError(str(exc)) from exc
    print(f"value={_fmt(res.value)} assignment={res.assignment} "
          f"assignments_enumerated={res.n_assignments}")
    return 0


# -- parser ------------------------------------------------------------------

def _add_run_flags(p):
    p.add_argument("--alg", choices=("alg1", "alg2"), default="alg2")
    p.add_argument("--mode", choices=("iter", "bnc"), default="iter")
    p.add_argument("--objective", choices=OBJECTIVES, default="sumC")
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--backend", choices=sorted(BACKENDS), default=None)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--no-valid-ineq", action="store_true")
    p.add_argument("--no-warm-start", action="store_true")
    p.add_argument("--kopt", type=int, choices=(6, 8), default=None)
    p.add_argument("--parallel", type=int, default=1, help="neighbourhood workers")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="upmsched", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--jobs", type=int, required=True)
    g.add_argument("--machines", type=int, required=True)
    g.add_argument("--tau", type=float, default=0.5)
    g.add_argument("--alpha", type=int, default=0)
    g.add_argument("--r-fraction", default="2/5", help="2/5 or 3/5")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None, help="file or directory")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("instance")
    s.add_argument("--R", type=int, default=None, help="override the resource capacity")
    s.add_argument("--schedule-out", default=None, help="write the incumbent schedule here")
    _add_run_flags(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="solve every instance of a directory")
    b.add_argument("directory")
    b.add_argument("--out", default="bench.csv")
    b.add_argument("--algs", default="alg1,alg2")
    b.add_argument("--modes", default="iter")
    b.add_argument("--objectives", default="sumC,sumT")
    b.add_argument("--R", type=int, nargs="*", default=None)
    b.add_argument("--jobs-parallel", type=int, default=1)
    _add_run_flags(b)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="check a schedule file against an instance")
    v.add_argument("instance")
    v.add_argument("schedule")
    v.add_argument("--R", type=int, default=None)
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="brute-force optimum of a tiny instance")
    o.add_argument("instance")
    o.add_argument("--objective", choices=OBJECTIVES, default="sumC")
    o.add_argument("--R", type=int, default=None)
    o.add_argument("--max-jobs", type=int, default=7)
    o.set_defaults(func=cmd_oracle)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"upmsched: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())
