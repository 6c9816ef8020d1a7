"""Command-line entry points.

Thin wrappers over the library: ``run`` executes one scenario, ``compare``
runs the drilling head-to-head, ``sweep`` covers the delay/rate grid,
``audit`` re-checks a recorded trace, ``replay`` re-executes a recorded
interactive session, ``serve`` starts the streaming service.

Exit codes: 0 success, 2 configuration/validation error, 3 simulation
divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .arm import SimulationDiverged
from .config import (ConfigError, RunConfig, config_hash, load_config,
                     save_config, validate_config)
from .energy import audit_trace
from .scenarios import SCENARIO_DEFAULT_NOTE, default_config, run_scenario
from .trace import TraceError, export_plotdata, read_trace, write_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _load(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = default_config(args.scenario if hasattr(args, "scenario") and args.scenario
                             else "teleop_tracking")
    if getattr(args, "scenario", None):
        cfg.scenario = args.scenario
    if args.seed is not None:
        cfg.seed = args.seed
    if args.duration is not None:
        cfg.duration = args.duration
    return validate_config(cfg)


def _write_outputs(result, out: str | None) -> None:
    if out:
        out_path = Path(out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        base = out_path.with_suffix("") if out_path.suffix == ".csv" else out_path
        for name, tr in result.traces.items():
            suffix = "" if len(result.traces) == 1 else f"_{name}"
            write_trace(tr, Path(str(base) + suffix + ".csv"))
        Path(str(base) + "_metrics.json").write_text(
            json.dumps(result.metrics, indent=2, sort_keys=True, default=str))
    print(json.dumps(result.metrics, indent=2, sort_keys=True, default=str))


def cmd_run(args) -> int:
    cfg = _load(args)
    result = run_scenario(cfg)
    _write_outputs(result, args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    cfg.scenario = "exp1_drilling"
    if not args.config:
        cfg = default_config("exp1_drilling")
        if args.seed is not None:
            cfg.seed = args.seed
        if args.duration is not None:
            cfg.duration = args.duration
    result = run_scenario(cfg)
    m = result.metrics
    print(f"steady force: fic {m['fic_steady_force']:.2f} N vs ic "
          f"{m['ic_steady_force']:.2f} N; penetration: fic "
          f"{m['fic_penetration'] * 1000:.1f} mm vs ic {m['ic_penetration'] * 1000:.1f} mm")
    _write_outputs(result, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    delays = [float(v) for v in args.delays.split(",")]
    rates = [float(v) for v in args.rates.split(",")]
    rows = []
    for delay in delays:
        for rate in rates:
            cfg = _load(args)
            cfg.scenario = "teleop_tracking"
            cfg.channel.delay = delay
            cfg.channel.sample_rate = rate
            result = run_scenario(cfg)
            report = audit_trace(result.trace)
            rows.append({
                "delay": delay,
                "sample_rate": rate,
                "final_error_linear": result.metrics["final_error_linear"],
                "audit_ok": report.ok,
                "energy_bounded": report.energy_bounded,
            })
            print(f"delay={delay:5.2f}s rate={rate:7.1f}Hz  "
                  f"final err={result.metrics['final_error_linear']:.2e} m  "
                  f"audit={'ok' if report.ok else 'FAIL'}")
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                write_trace(result.trace, out / f"sweep_d{delay}_r{rate}.csv")
    if args.out:
        Path(args.out, "sweep_summary.json").write_text(
            json.dumps(rows, indent=2, sort_keys=True))
    failed = [r for r in rows if not r["audit_ok"]]
    return EXIT_OK if not failed else EXIT_DIVERGED


def cmd_audit(args) -> int:
    trace = read_trace(args.trace)
    report = audit_trace(trace)
    print(report.summary())
    if args.json:
        print(json.dumps(asdict(report), indent=2, sort_keys=True))
    return EXIT_OK if report.ok else EXIT_DIVERGED


def cmd_export(args) -> int:
    trace = read_trace(args.trace)
    export_plotdata(trace, args.kind, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    from .service.session import replay_session_file

    trace = replay_session_file(args.session)
    if args.out:
        write_trace(trace, args.out)
    print(f"replayed {len(trace)} steps")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    cfg = _load(args)
    cfg.scenario = "interactive"
    port = args.port or int(os.environ.get("FICSIM_PORT", "8732"))
    app = create_app(cfg)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return EXIT_OK


def cmd_init_config(args) -> int:
    cfg = default_config(args.scenario)
    save_config(cfg, args.out)
    print(f"wrote {args.out} (hash {config_hash(cfg)[:12]})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ficsim",
                                description="fractal-impedance tele-cooperation simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_arg=False):
        if scenario_arg:
            sp.add_argument("scenario", nargs="?", default=None,
                            help=SCENARIO_DEFAULT_NOTE)
        sp.add_argument("--config", help="YAML run configuration")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--duration", type=float, default=None)
        sp.add_argument("--out", help="output path prefix")

    sp = sub.add_parser("run", help="run one scenario")
    common(sp, scenario_arg=True)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("compare", help="drilling comparison: nonlinear vs constant stiffness")
    common(sp)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("sweep", help="delay x sample-rate robustness grid")
    common(sp)
    sp.add_argument("--delays", default="0,0.25,0.5,1.0")
    sp.add_argument("--rates", default="1000,100,20")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("audit", help="energy audit of a recorded trace")
    sp.add_argument("trace")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_audit)

    sp = sub.add_parser("export", help="extract plot series from a trace")
    sp.add_argument("trace")
    sp.add_argument("kind", choices=["force-profile", "path3d", "error-profile"])
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_export)

    sp = sub.add_parser("replay", help="re-run a recorded interactive session")
    sp.add_argument("session")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_replay)

    sp = sub.add_parser("serve", help="start the interactive streaming service")
    common(sp)
    sp.add_argument("--port", type=int, default=None,
                    help="default from FICSIM_PORT or 8732")
    sp.add_argument("--host", default="127.0.0.1")
    sp.set_defaults(fn=cmd_serve)

    sp = sub.add_parser("init-config", help="write a stock config for a scenario")
    sp.add_argument("scenario")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_init_config)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TraceError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"{exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
