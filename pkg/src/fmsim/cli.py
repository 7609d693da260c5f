"""Command-line entry point.

Subcommands: simulate (one episode), run-series (a test-case series),
evaluate (probability analysis over produced artifacts), report (re-render a
stored report), serve (interactive driver-in-the-loop session server).

Exit codes: 0 success / series PASS, 1 series FAIL, 2 configuration or
schema error, 3 episode error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, traceio
from .classify import classify_episode, detect_fm_online
from .drivers import DriverSpec, instantiate, scripted_from_session
from .errors import EpisodeInvalidError, FmsimError, ConfigError
from .metrics import (
    ContingencyCounts,
    ControllabilityResult,
    JointCounts,
    probability_report,
    render_probability_markdown,
    report_from_counts,
)
from .scenario import run_episode
from .testmanager import (
    TestReport,
    load_series,
    render_report,
    run_series,
    sim_config_from_dict,
)

EXIT_OK = 0
EXIT_SERIES_FAIL = 1
EXIT_CONFIG = 2
EXIT_EPISODE = 3


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _load_config(path: str | None):
    data = _load_json(path) if path else {}
    return sim_config_from_dict(data)


def cmd_simulate(args) -> int:
    try:
        config = _load_config(args.config)
        if args.session_log:
            payload = _load_json(args.session_log)
            if isinstance(payload, dict) and "actions" in payload:
                if "config" in payload and not args.config:
                    config = sim_config_from_dict(payload["config"])
                driver_spec = scripted_from_session(payload["actions"])
            else:
                driver_spec = scripted_from_session(payload)
        elif args.driver:
            driver_spec = DriverSpec.from_dict(_load_json(args.driver))
        else:
            raise ConfigError("one of --driver or --session-log is required")
        driver = instantiate(driver_spec, args.seed)
    except FmsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        trace = run_episode(config, driver)
        record, labels, ideal_at_to = classify_episode(
            trace, config.timeline.tor_time, args.tc_index, config
        )
        detector = detect_fm_online(trace, ideal_at_to, args.detector_seed or args.seed)
    except EpisodeInvalidError as exc:
        print(f"episode error: {exc}", file=sys.stderr)
        return EXIT_EPISODE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(traceio.render_trace_csv(trace), encoding="utf-8")
    (out / "events.jsonl").write_text(traceio.render_events_jsonl(trace), encoding="utf-8")
    (out / "record.csv").write_text(traceio.render_records_csv([record]), encoding="utf-8")
    labels_line = traceio.extended_line(record, labels, detector)
    (out / "labels.json").write_text(
        json.dumps(labels_line, indent=2) + "\n", encoding="utf-8"
    )
    print(f"episode complete: wrote trace.csv, events.jsonl, record.csv, labels.json to {out}")
    return EXIT_OK


def cmd_run_series(args) -> int:
    try:
        series = load_series(args.series)
    except FmsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report = run_series(series, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.csv").write_bytes(render_report(report, "csv"))
    (out / "report.json").write_bytes(render_report(report, "json"))
    (out / "report.md").write_bytes(render_report(report, "md"))
    rows = [
        (c.record, c.labels, c.detector)
        for c in report.cases
        if c.record is not None
    ]
    (out / "extended.jsonl").write_text(
        traceio.render_extended_jsonl(rows), encoding="utf-8"
    )
    print(
        f"series '{report.series_name}': {report.series_verdict.value} "
        f"({report.summary['completed']}/{report.summary['cases']} cases completed)"
    )
    return EXIT_OK if report.series_verdict.value == "PASS" else EXIT_SERIES_FAIL


def _evaluate_from_counts(data: dict):
    joint = JointCounts.from_dict(data["joint_counts"])
    cont = (
        ContingencyCounts.from_dict(data["contingency"])
        if data.get("contingency")
        else None
    )
    controllability = None
    if data.get("controllability"):
        provided = int(data["controllability"]["provided"])
        not_provided = int(data["controllability"]["not_provided"])
        n = provided + not_provided
        controllability = ControllabilityResult(
            provided_fraction=provided / n if n else None,
            not_provided_fraction=not_provided / n if n else None,
            n_applicable=n,
        )
    return report_from_counts(joint, cont, controllability)


def _evaluate_from_records(records_path: str, labels_path: str | None):
    from .classify import MisuseLabels, DetectorOutput, TestCaseRecord

    if labels_path is None:
        raise ConfigError("--labels is required when --records is a record CSV")
    text = Path(records_path).read_text(encoding="utf-8")
    records = traceio.parse_records_csv(text)
    if not records:
        raise ConfigError(f"no records in {records_path}")
    lines = traceio.parse_extended_jsonl(
        Path(labels_path).read_text(encoding="utf-8")
    )
    by_tc = {}
    for line in lines:
        by_tc[int(line["tc"])] = line
    missing = [r.tc for r in records if r.tc not in by_tc]
    if missing:
        raise ConfigError(f"labels missing for test cases {missing}")

    rows = []
    detector_rows = []
    have_flags = True
    for record in records:
        line = by_tc[record.tc]
        labels = MisuseLabels.from_dict(line)
        rows.append((labels, record))
        if line.get("fm_flagged") is None:
            have_flags = False
        else:
            detector = DetectorOutput(
                fm_flagged=int(line["fm_flagged"]),
                measured_delay=0.0,
                measured_swa_dev=0.0,
            )
            detector_rows.append((labels, detector, record))
    return probability_report(rows, detector_rows if have_flags else None)


def cmd_evaluate(args) -> int:
    try:
        records_path = Path(args.records)
        report = None
        if records_path.suffix == ".json":
            data = _load_json(args.records)
            if isinstance(data, dict) and "joint_counts" in data:
                report = _evaluate_from_counts(data)
        if report is None:
            report = _evaluate_from_records(args.records, args.labels)
    except (FmsimError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    stem = Path(args.out)
    if stem.suffix in (".json", ".md"):
        stem = stem.with_suffix("")
    stem.parent.mkdir(parents=True, exist_ok=True)
    json_path = stem.with_suffix(".json")
    md_path = stem.with_suffix(".md")
    json_path.write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    md_path.write_text(render_probability_markdown(report), encoding="utf-8")
    print(f"wrote {json_path} and {md_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = TestReport.from_dict(_load_json(args.report))
        payload = render_report(report, args.format)
    except (FmsimError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        Path(args.out).write_bytes(payload)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(payload.decode("utf-8"))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .server import SERVE_DT, create_app

    try:
        if args.config:
            base = _load_config(args.config)
        else:
            base = sim_config_from_dict({"dt": SERVE_DT})
    except FmsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    static_dir = Path(args.static).resolve() if args.static else None
    if static_dir is not None and not (static_dir / "index.html").exists():
        print(
            f"warning: no index.html under {static_dir}; serving a placeholder page",
            file=sys.stderr,
        )
    app = create_app(
        base_config=base,
        out_dir=Path(args.out).resolve(),
        static_dir=static_dir,
        time_scale=args.time_scale,
    )
    print(f"serving driver console on http://{args.host}:{args.port}/ (session at /session)")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmsim",
        description="Take-over misuse simulation and evaluation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a single episode")
    p.add_argument("--config", help="scenario config JSON (defaults used when omitted)")
    p.add_argument("--driver", help="driver spec JSON")
    p.add_argument("--session-log", help="recorded session log to replay as a scripted driver")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--detector-seed", type=int, default=None)
    p.add_argument("--tc-index", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run-series", help="run a test-case series")
    p.add_argument("--series", required=True, help="series config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="worker pool size")
    p.set_defaults(func=cmd_run_series)

    p = sub.add_parser("evaluate", help="probability analysis over produced artifacts")
    p.add_argument(
        "--records",
        required=True,
        help="records CSV, or a JSON fixture with joint_counts",
    )
    p.add_argument("--labels", help="extended results JSONL (required with a records CSV)")
    p.add_argument("--out", required=True, help="output path stem (.json/.md are written)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="re-render a stored report")
    p.add_argument("--report", required=True, help="report JSON produced by run-series")
    p.add_argument("--format", choices=["csv", "json", "md"], default="md")
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="interactive driver-in-the-loop server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--config", help="scenario config JSON (50 Hz default when omitted)")
    p.add_argument("--out", default="serve-out", help="directory for session records/logs")
    p.add_argument("--static", help="directory with built console assets")
    p.add_argument(
        "--time-scale",
        type=float,
        default=1.0,
        help="wall-clock pacing factor (1.0 = real time, 0 = no pacing)",
    )
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
