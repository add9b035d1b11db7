"""Command line entry point.

    colabel simulate --config experiment.json --out results/
    colabel gen-data --spec blobs.json --out data.csv
    colabel replay results/run_seed0.jsonl
    colabel serve --port 8000 [--log-dir sessions/] [--ui-dir frontend/dist]

Exit codes: 0 success, 1 runtime failure (including replay FAIL), 2 bad
usage or config.
"""

import argparse
import json
import sys

from .errors import ColabelError, ConfigError, CorruptLog, RejectedInput

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def _load_json(path, what: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(what, f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(what, f"invalid JSON: {exc}") from None


def cmd_simulate(args) -> int:
    from .simulate import ExperimentConfig, run_experiment

    doc = _load_json(args.config, "config")
    exp = ExperimentConfig.from_dict(doc)
    summary = run_experiment(exp, args.out)
    for run in summary["runs"]:
        print(
            f"seed {run['seed']}: accuracy={run['final_accuracy']:.4f} "
            f"records={run['records']} challenges={run['challenges']} "
            f"phase={run['final_phase']}"
        )
    mean_acc = summary["mean"]["final_accuracy"]
    print(f"mean accuracy: {mean_acc:.4f}" if mean_acc is not None else "mean accuracy: n/a")
    print(f"wrote {len(summary['runs'])} log(s) and summary.json to {args.out}")
    return 0


def cmd_gen_data(args) -> int:
    from .stream import apply_drift, drift_spec_from_dict, gen_blobs, write_csv

    spec = _load_json(args.spec, "spec")
    try:
        schema, rows = gen_blobs(
            n=spec["n"],
            classes=spec.get("classes", 2),
            dims=spec.get("dims", 2),
            separation=spec.get("separation", 4.0),
            seed=spec.get("seed", 0),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError("spec", f"bad generator spec: {exc}") from None
    if spec.get("drift"):
        rows = apply_drift(rows, drift_spec_from_dict(spec["drift"]))
    write_csv(args.out, schema, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_replay(args) -> int:
    from .session import replay_log
    from .store import snapshot_hash

    try:
        session, recorded = replay_log(args.log)
    except CorruptLog as exc:
        print(f"FAIL: corrupt log at seq {exc.seq}: {exc.message}")
        return RUNTIME_ERROR
    computed = snapshot_hash(session.engine.snapshot())
    print(f"snapshot hash: {computed}")
    if recorded is None:
        print("FAIL: log has no recorded final hash")
        return RUNTIME_ERROR
    if computed != recorded:
        print(f"FAIL: recorded hash {recorded} does not match")
        return RUNTIME_ERROR
    print("PASS")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    settings = _load_json(args.config, "config") if args.config else {}
    log_dir = args.log_dir or settings.get("log_dir", "sessions")
    ui_dir = args.ui_dir or settings.get("ui_dir")
    host = args.host or settings.get("host", "127.0.0.1")
    app = create_app(log_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="colabel")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run seeded sessions against the simulated user")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-data", help="generate a labeled CSV stream")
    p.add_argument("--spec", required=True, help="generator spec JSON")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("replay", help="verify a session log by re-execution")
    p.add_argument("log", help="session JSONL file")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default=None)
    p.add_argument("--log-dir", default=None, help="where session JSONL files go")
    p.add_argument("--config", help="service settings JSON (log_dir, ui_dir, host)")
    p.add_argument("--ui-dir", help="static directory to mount at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except RejectedInput as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ColabelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
