"""Command line interface.

Thin client over the HTTP service: by default the service app is mounted in
process, so no server needs to be running; `--server URL` points the same
commands at a remote instance. Files are always written on the client side.

Exit codes: 0 success, 2 usage or validation error (nothing written),
3 the run executed but was dominated by divergence or infeasibility,
1 unexpected failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from . import __version__
from .schemas import RunSpec

BENCHMARK_CHOICES = ("vanderpol", "unicycle", "bicycle")
CONTROLLER_CHOICES = ("lpv-sqp", "lpv-sqp-noncond", "qlmpc", "oracle")

OUTPUT_DIR_ENV = "LPVMPC_OUTPUT_DIR"


def _default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "results"))


def _add_run_overrides(parser: argparse.ArgumentParser) -> None:
    # Overridable fields default to None so a config file can fill them in;
    # an explicit flag always wins over the config file.
    parser.add_argument("--horizon", type=int, default=None,
                        help="prediction horizon override")
    parser.add_argument("--steps", type=int, default=None,
                        help="closed-loop step count override")
    parser.add_argument("--embedding", choices=("euler_exact", "rk4_exact"),
                        default=None, help="vanderpol model embedding")
    parser.add_argument("--step-tol", type=float, default=None,
                        help="SQP stopping tolerance on the increment norm")
    parser.add_argument("--schedule-tol", type=float, default=None,
                        help="qlmpc stopping tolerance on the schedule change")
    parser.add_argument("--max-iterations", type=int, default=None)
    parser.add_argument("--init-mode", choices=("zero", "warm_shift"),
                        default=None)
    parser.add_argument("--line-search", choices=("off", "merit_backtracking"),
                        default=None)
    parser.add_argument("--soft-constraints", action="store_true", default=None)
    parser.add_argument("--repeat", type=int, default=None,
                        help="repeat the run to average solve timings")
    parser.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpvmpc",
        description="closed-loop MPC benchmark runner",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--server", default=None, metavar="URL",
                        help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one closed-loop experiment")
    p_run.add_argument("--benchmark", "-b", choices=BENCHMARK_CHOICES,
                       default=None)
    p_run.add_argument("--controller", "-c", choices=CONTROLLER_CHOICES,
                       default=None)
    p_run.add_argument("--label", default=None,
                       help="basename for the output files")
    _add_run_overrides(p_run)
    p_run.add_argument("--config", type=Path, default=None,
                       help="JSON file with RunSpec fields; flags override it")
    p_run.add_argument("--output", "-o", type=Path, default=None,
                       help=f"output directory (default ${OUTPUT_DIR_ENV} or ./results)")
    p_run.add_argument("--quiet", action="store_true")

    p_cmp = sub.add_parser("compare", help="run several controllers on one benchmark")
    p_cmp.add_argument("--benchmark", "-b", choices=BENCHMARK_CHOICES,
                       default=None)
    p_cmp.add_argument("--controllers", default=None,
                       help="comma-separated controller list "
                            "(default: oracle,lpv-sqp,qlmpc)")
    _add_run_overrides(p_cmp)
    p_cmp.add_argument("--config", type=Path, default=None,
                       help="JSON file: shared RunSpec fields plus a 'runs' "
                            "list of per-run overrides")
    p_cmp.add_argument("--output", "-o", type=Path, default=None)
    p_cmp.add_argument("--quiet", action="store_true")

    sub.add_parser("selftest", help="run the invariant battery")

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)

    return parser


_OVERRIDE_FIELDS = (
    "horizon", "steps", "embedding", "step_tol", "schedule_tol",
    "max_iterations", "init_mode", "line_search", "soft_constraints",
    "repeat", "seed",
)


def _load_config(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise SystemExit(f"error: cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise SystemExit(f"error: config file is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise SystemExit("error: config file must hold a JSON object")
    return cfg


def _flag_overrides(args: argparse.Namespace) -> dict:
    out = {}
    for field in _OVERRIDE_FIELDS:
        value = getattr(args, field, None)
        if value is not None:
            out[field] = value
    return out


def _make_spec(fields: dict) -> RunSpec:
    try:
        return RunSpec(**fields)
    except ValidationError as exc:
        lines = "; ".join(
            f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}"
            for e in exc.errors()
        )
        raise SystemExit(f"error: invalid run spec: {lines}")


def _spec_from_args(args: argparse.Namespace) -> RunSpec:
    fields = _load_config(args.config)
    fields.pop("runs", None)
    fields.update(_flag_overrides(args))
    if args.benchmark is not None:
        fields["benchmark"] = args.benchmark
    if args.controller is not None:
        fields["controller"] = args.controller
    if args.label is not None:
        fields["label"] = args.label
    if "benchmark" not in fields:
        raise SystemExit("error: no benchmark given (flag or config file)")
    return _make_spec(fields)


def _compare_specs(args: argparse.Namespace) -> List[RunSpec]:
    cfg = _load_config(args.config)
    runs = cfg.pop("runs", None)
    shared = dict(cfg)
    shared.update(_flag_overrides(args))
    if args.benchmark is not None:
        shared["benchmark"] = args.benchmark
    if "benchmark" not in shared:
        raise SystemExit("error: no benchmark given (flag or config file)")

    if args.controllers is not None:
        names = [c.strip() for c in args.controllers.split(",") if c.strip()]
        if not names:
            raise SystemExit("error: empty controller list")
        runs = [{"controller": c} for c in names]
    elif runs is None:
        runs = [{"controller": c} for c in ("oracle", "lpv-sqp", "qlmpc")]
    if not isinstance(runs, list) or not all(isinstance(r, dict) for r in runs):
        raise SystemExit("error: config 'runs' must be a list of objects")
    return [_make_spec({**shared, **r}) for r in runs]


def _print_summary(result, write) -> None:
    s = result.summary
    write(f"  total cost          {s.total_cost:.6f}")
    write(f"  solve time mean/max {1e3 * s.tau_mean:.3f} / {1e3 * s.tau_max:.3f} ms"
          f" (std {1e3 * s.tau_std:.3f})")
    write(f"  mean SQP iterations {s.mean_sqp_iterations:.3f}")
    write(f"  worst status        {s.worst_status}")
    write(f"  converged fraction  {result.converged_fraction:.3f}")
    if result.clamp_events:
        write(f"  schedule clamps     {result.clamp_events}")


def _failure_step(result) -> Optional[str]:
    """Returns a message naming the first bad step, or None if healthy."""
    if result.truncated or result.summary.worst_status == "diverged":
        for r in result.records:
            if r.status == "diverged":
                return f"diverged at step {r.step} (t={r.t:g})"
        return f"diverged after step {result.records[-1].step}"
    infeasible = [r.step for r in result.records if r.status == "qp_infeasible"]
    if infeasible and len(infeasible) * 2 > len(result.records):
        return (f"QP infeasible on {len(infeasible)} of {len(result.records)} "
                f"steps, first at step {infeasible[0]}")
    return None


def _cmd_run(args: argparse.Namespace) -> int:
    from .client import ServiceClient, ServiceError
    from .reporting import write_run_csv, write_summary_json

    spec = _spec_from_args(args)
    out_dir = args.output if args.output is not None else _default_output_dir()
    write = (lambda *_: None) if args.quiet else print

    with ServiceClient(args.server) as client:
        try:
            result = client.run(spec)
        except ServiceError as exc:
            print(f"error: {exc.detail}", file=sys.stderr)
            return 2 if exc.status_code < 500 else 1

    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{spec.run_label}.csv"
    json_path = out_dir / f"{spec.run_label}-summary.json"
    write_run_csv(csv_path, result)
    write_summary_json(json_path, result.summary)

    write(f"{spec.benchmark} / {spec.controller}: {len(result.records)} steps")
    _print_summary(result, write)
    write(f"  wrote {csv_path}")
    write(f"  wrote {json_path}")

    failure = _failure_step(result)
    if failure is not None:
        print(f"run unhealthy: {failure}", file=sys.stderr)
        return 3
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    from .client import ServiceClient, ServiceError
    from .reporting import write_compare_report

    specs = _compare_specs(args)
    out_dir = args.output if args.output is not None else _default_output_dir()
    write = (lambda *_: None) if args.quiet else print

    with ServiceClient(args.server) as client:
        try:
            report = client.compare(specs)
        except ServiceError as exc:
            print(f"error: {exc.detail}", file=sys.stderr)
            return 2 if exc.status_code < 500 else 1

    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{report.benchmark}-compare.json"
    txt_path = out_dir / f"{report.benchmark}-compare.txt"
    write_compare_report(json_path, txt_path, report)

    write(report.table.rstrip())
    write(f"wrote {json_path}")
    write(f"wrote {txt_path}")
    return 0


def _cmd_selftest(_args: argparse.Namespace) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest() else 1


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "compare": _cmd_compare,
        "selftest": _cmd_selftest,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 2
        raise
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
