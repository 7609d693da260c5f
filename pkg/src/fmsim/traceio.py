"""Flat-file formats: trace CSV, event JSON lines, record CSV, extended
results JSON lines. All outputs are UTF-8 with LF line endings."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .classify import DetectorOutput, MisuseLabels, TestCaseRecord
from .scenario import (
    AdsMode,
    EpisodeTrace,
    EventKind,
    TraceEvent,
    TraceSample,
    VehicleState,
)

TRACE_HEADER = ["t", "s", "y", "heading", "speed", "swa", "mode", "driver_swa"]
RECORDS_HEADER = ["TC", "TO", "TO_t2", "delta_T2", "DelTO", "SWA", "H", "H_t3", "delta_T3"]


def _f6(v: float) -> str:
    return f"{v:.6f}"


def _f4(v: float) -> str:
    return f"{v:.4f}"


def render_trace_csv(trace: EpisodeTrace) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for sample in trace.samples:
        st = sample.state
        writer.writerow(
            [
                _f6(sample.t),
                _f6(st.s),
                _f6(st.y),
                _f6(st.heading),
                _f6(st.speed),
                _f6(st.swa),
                sample.mode.value,
                _f6(sample.driver_swa) if sample.driver_swa is not None else "",
            ]
        )
    return out.getvalue()


def render_events_jsonl(trace: EpisodeTrace) -> str:
    return "".join(
        json.dumps({"t": ev.t, "kind": ev.kind.value}) + "\n" for ev in trace.events
    )


def parse_trace_csv(text: str) -> list[TraceSample]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != TRACE_HEADER:
        raise ValueError(f"unexpected trace header: {header}")
    samples = []
    for row in reader:
        t, s, y, heading, speed, swa, mode, driver_swa = row
        samples.append(
            TraceSample(
                t=float(t),
                state=VehicleState(
                    s=float(s), y=float(y), heading=float(heading),
                    speed=float(speed), swa=float(swa),
                ),
                mode=AdsMode(mode),
                driver_swa=float(driver_swa) if driver_swa else None,
            )
        )
    return samples


def parse_events_jsonl(text: str) -> list[TraceEvent]:
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        events.append(TraceEvent(t=float(data["t"]), kind=EventKind(data["kind"])))
    return events


def load_trace(trace_path: Path, events_path: Path) -> EpisodeTrace:
    return EpisodeTrace(
        samples=parse_trace_csv(trace_path.read_text(encoding="utf-8")),
        events=parse_events_jsonl(events_path.read_text(encoding="utf-8")),
    )


def render_records_csv(records: list[TestCaseRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RECORDS_HEADER)
    for r in records:
        writer.writerow(
            [
                r.tc,
                r.to,
                _f4(r.to_t2),
                _f4(r.delta_t2),
                r.del_to,
                _f4(r.swa),
                r.h,
                _f4(r.h_t3),
                _f4(r.delta_t3),
            ]
        )
    return out.getvalue()


def parse_records_csv(text: str) -> list[TestCaseRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != RECORDS_HEADER:
        raise ValueError(f"unexpected records header: {header}")
    records = []
    for row in reader:
        tc, to, to_t2, delta_t2, del_to, swa, h, h_t3, delta_t3 = row
        records.append(
            TestCaseRecord(
                tc=int(tc),
                to=int(to),
                to_t2=float(to_t2),
                delta_t2=float(delta_t2),
                del_to=int(del_to),
                swa=float(swa),
                h=int(h),
                h_t3=float(h_t3),
                delta_t3=float(delta_t3),
            )
        )
    return records


def extended_line(
    record: TestCaseRecord, labels: MisuseLabels, detector: DetectorOutput | None
) -> dict:
    """One extended-results object: the record row plus labels and the
    detector flag."""
    line = record.to_dict()
    line.update(labels.to_dict())
    line["fm_flagged"] = detector.fm_flagged if detector is not None else None
    return line


def render_extended_jsonl(rows) -> str:
    return "".join(json.dumps(extended_line(*row)) + "\n" for row in rows)


def parse_extended_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]
