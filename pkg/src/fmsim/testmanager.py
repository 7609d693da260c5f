"""Test-case series management: load series configurations, execute them
through the simulator, answer the ten-question scenario checklist per case,
apply pass/fail criteria, and render reports."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from . import traceio
from .classify import (
    Controllability,
    DetectorOutput,
    MisuseLabels,
    TestCaseRecord,
    classify_episode,
    detect_fm_online,
)
from .drivers import DriverSpec, instantiate
from .errors import ConfigError, MismatchedInputsError
from .metrics import contingency, fmem
from .scenario import (
    EpisodeTrace,
    EventKind,
    RoadSpec,
    ScenarioTimeline,
    SimConfig,
    VehicleState,
    run_episode,
)

QUESTION_IDS = tuple(range(1, 11))

QUESTION_SUMMARIES = {
    1: "automated longitudinal and lateral control active",
    2: "unclear-marking zone entered during the lane change",
    3: "driver warning issued on entering the zone",
    4: "take-over request issued",
    5: "driver responded to the take-over request",
    6: "reduced-functionality mode with minimal risk maneuver",
    7: "take-over within the specified time",
    8: "steering response over- or understeered",
    9: "misuse led to a hazard (lane departure)",
    10: "driver handled the situation (controllability)",
}


class Answer(str, Enum):
    YES = "YES"
    NO = "NO"
    NA = "N/A"


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    FAILED = "FAILED"  # case crashed; distinct from a criteria FAIL


@dataclass(frozen=True)
class ChecklistResult:
    answers: dict[int, Answer]
    evidence: dict[int, str]

    def __post_init__(self):
        missing = [q for q in QUESTION_IDS if q not in self.answers]
        if missing:
            raise ValueError(f"checklist answers missing for questions {missing}")

    def to_dict(self) -> dict:
        return {
            "answers": {str(q): self.answers[q].value for q in QUESTION_IDS},
            "evidence": {str(q): self.evidence.get(q, "") for q in QUESTION_IDS},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChecklistResult":
        return cls(
            answers={int(q): Answer(a) for q, a in data["answers"].items()},
            evidence={int(q): e for q, e in data["evidence"].items()},
        )


@dataclass(frozen=True)
class TestCaseConfig:
    tc_index: int
    driver: DriverSpec
    seed: int
    detector_seed: int
    sim_overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SeriesConfig:
    name: str
    defaults: SimConfig
    cases: tuple[TestCaseConfig, ...]
    pass_criteria: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        errors = []
        if not self.cases:
            errors.append("series must contain at least one case")
        indices = [c.tc_index for c in self.cases]
        if len(set(indices)) != len(indices):
            dupes = sorted({i for i in indices if indices.count(i) > 1})
            errors.append(f"duplicate tc_index values: {dupes}")
        for q, required in self.pass_criteria.items():
            if q not in QUESTION_IDS:
                errors.append(f"pass criteria reference unknown question id {q}")
            if required not in ("YES", "NO", "any"):
                errors.append(
                    f"criterion for question {q} must be YES, NO or any, got {required!r}"
                )
        if errors:
            raise ConfigError("invalid series", errors)


@dataclass
class CaseResult:
    tc_index: int
    verdict: Verdict
    record: TestCaseRecord | None = None
    labels: MisuseLabels | None = None
    detector: DetectorOutput | None = None
    checklist: ChecklistResult | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "tc_index": self.tc_index,
            "verdict": self.verdict.value,
            "record": self.record.to_dict() if self.record else None,
            "labels": self.labels.to_dict() if self.labels else None,
            "detector": self.detector.to_dict() if self.detector else None,
            "checklist": self.checklist.to_dict() if self.checklist else None,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CaseResult":
        return cls(
            tc_index=data["tc_index"],
            verdict=Verdict(data["verdict"]),
            record=TestCaseRecord.from_dict(data["record"]) if data.get("record") else None,
            labels=MisuseLabels.from_dict(data["labels"]) if data.get("labels") else None,
            detector=DetectorOutput(**data["detector"]) if data.get("detector") else None,
            checklist=ChecklistResult.from_dict(data["checklist"])
            if data.get("checklist")
            else None,
            error=data.get("error"),
        )


@dataclass
class TestReport:
    series_name: str
    cases: list[CaseResult]
    series_verdict: Verdict
    summary: dict

    def completed(self) -> list[CaseResult]:
        return [c for c in self.cases if c.record is not None]

    def to_dict(self) -> dict:
        return {
            "series_name": self.series_name,
            "series_verdict": self.series_verdict.value,
            "summary": self.summary,
            "cases": [c.to_dict() for c in self.cases],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TestReport":
        return cls(
            series_name=data["series_name"],
            series_verdict=Verdict(data["series_verdict"]),
            summary=data["summary"],
            cases=[CaseResult.from_dict(c) for c in data["cases"]],
        )


# --- configuration loading -------------------------------------------------

_SIM_SCALAR_FIELDS = (
    "dt", "wheelbase", "steering_ratio", "mrm_grace", "mrm_decel",
    "vehicle_width", "kp", "kd", "kh",
)


def sim_config_from_dict(data: dict, base: SimConfig | None = None) -> SimConfig:
    """Build a SimConfig from (partial) JSON data over an optional base.

    When no explicit road is given the marking gap is placed so the vehicle
    reaches it at warning_time at its initial speed.
    """
    base = base or SimConfig()
    timeline_data = data.get("timeline", {})
    timeline = replace(base.timeline, **timeline_data) if timeline_data else base.timeline
    state_data = data.get("initial_state", {})
    initial = (
        replace(base.initial_state, **state_data) if state_data else base.initial_state
    )
    scalars = {k: data[k] for k in _SIM_SCALAR_FIELDS if k in data}
    if "road" in data:
        road = replace(base.road, **data["road"])
    else:
        gap_start = initial.s + initial.speed * timeline.warning_time
        road = RoadSpec(marking_gap_start=gap_start, marking_gap_end=gap_start + 300.0)
    return replace(
        base, road=road, timeline=timeline, initial_state=initial, **scalars
    )


def sim_config_to_dict(config: SimConfig) -> dict:
    return {
        **{k: getattr(config, k) for k in _SIM_SCALAR_FIELDS},
        "road": {
            "lane_width": config.road.lane_width,
            "marking_gap_start": config.road.marking_gap_start,
            "marking_gap_end": config.road.marking_gap_end,
        },
        "timeline": {
            "warning_time": config.timeline.warning_time,
            "tor_time": config.timeline.tor_time,
            "lane_change_start": config.timeline.lane_change_start,
            "episode_max_duration": config.timeline.episode_max_duration,
        },
        "initial_state": {
            "s": config.initial_state.s,
            "y": config.initial_state.y,
            "heading": config.initial_state.heading,
            "speed": config.initial_state.speed,
            "swa": config.initial_state.swa,
        },
    }


def load_series(path: str | Path) -> SeriesConfig:
    """Load and fully resolve a series configuration file.

    Validation problems are aggregated and raised together so a broken file
    is diagnosed in one pass.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse series file {path}: {exc}") from exc

    errors: list[str] = []
    name = data.get("name")
    if not isinstance(name, str) or not name:
        errors.append("series needs a non-empty 'name'")
        name = str(name)

    try:
        defaults = sim_config_from_dict(data.get("defaults", {}))
    except ConfigError as exc:
        errors.extend(f"defaults: {e}" for e in exc.errors)
        defaults = None

    criteria_raw = data.get("pass_criteria", {})
    criteria: dict[int, str] = {}
    if not isinstance(criteria_raw, dict):
        errors.append("'pass_criteria' must be an object mapping question id to answer")
    else:
        for key, value in criteria_raw.items():
            try:
                criteria[int(key)] = value
            except (TypeError, ValueError):
                errors.append(f"pass criteria key {key!r} is not a question id")

    cases: list[TestCaseConfig] = []
    raw_cases = data.get("cases")
    if not isinstance(raw_cases, list) or not raw_cases:
        errors.append("series needs a non-empty 'cases' list")
        raw_cases = []
    for i, raw in enumerate(raw_cases):
        label = f"case[{i}]"
        try:
            tc_index = int(raw["tc_index"])
            seed = int(raw["seed"])
            detector_seed = int(raw["detector_seed"])
        except (KeyError, TypeError, ValueError):
            errors.append(f"{label}: tc_index, seed and detector_seed are mandatory integers")
            continue
        try:
            driver = DriverSpec.from_dict(raw["driver"])
        except (KeyError, TypeError, ValueError, ConfigError) as exc:
            errors.append(f"{label}: invalid driver spec: {exc}")
            continue
        overrides = raw.get("sim_overrides", {})
        if defaults is not None:
            try:
                sim_config_from_dict(overrides, base=defaults)
            except ConfigError as exc:
                errors.extend(f"{label}: {e}" for e in exc.errors)
                continue
        cases.append(
            TestCaseConfig(
                tc_index=tc_index,
                driver=driver,
                seed=seed,
                detector_seed=detector_seed,
                sim_overrides=overrides,
            )
        )

    if errors:
        raise ConfigError(f"invalid series file {path}", errors)
    try:
        return SeriesConfig(
            name=name, defaults=defaults, cases=tuple(cases), pass_criteria=criteria
        )
    except ConfigError as exc:
        raise ConfigError(f"invalid series file {path}", exc.errors) from exc


# --- execution ---------------------------------------------------------------


def run_case(case: TestCaseConfig, defaults: SimConfig) -> CaseResult:
    """Run one test case through the full pipeline; failures are captured
    in the result instead of propagating."""
    try:
        config = sim_config_from_dict(case.sim_overrides, base=defaults)
        driver = instantiate(case.driver, case.seed)
        trace = run_episode(config, driver)
        record, labels, ideal_at_to = classify_episode(
            trace, config.timeline.tor_time, case.tc_index, config
        )
        detector = detect_fm_online(trace, ideal_at_to, case.detector_seed)
        checklist = evaluate_checklist(trace, record, labels, config)
        return CaseResult(
            tc_index=case.tc_index,
            verdict=Verdict.PASS,  # provisional; criteria applied series-wide
            record=record,
            labels=labels,
            detector=detector,
            checklist=checklist,
        )
    except Exception as exc:  # noqa: BLE001 - failure isolation per case
        return CaseResult(
            tc_index=case.tc_index,
            verdict=Verdict.FAILED,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_series(series: SeriesConfig, jobs: int = 1) -> TestReport:
    """Execute every case and assemble the report.

    Cases are independent; with jobs > 1 they run on a worker pool. Results
    are assembled in tc_index order, so the report does not depend on the
    execution interleaving.
    """
    ordered = sorted(series.cases, key=lambda c: c.tc_index)
    if jobs <= 1:
        results = [run_case(c, series.defaults) for c in ordered]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda c: run_case(c, series.defaults), ordered))

    verdicts = apply_criteria(results, series.pass_criteria)
    for result, verdict in zip(results, verdicts):
        if result.verdict != Verdict.FAILED:
            result.verdict = verdict
    series_verdict = (
        Verdict.PASS
        if all(r.verdict == Verdict.PASS for r in results)
        else Verdict.FAIL
    )
    return TestReport(
        series_name=series.name,
        cases=results,
        series_verdict=series_verdict,
        summary=summarize(results),
    )


def summarize(results: list[CaseResult]) -> dict:
    completed = [r for r in results if r.record is not None]
    labels = [r.labels for r in completed]
    summary = {
        "cases": len(results),
        "completed": len(completed),
        "crashed": sum(1 for r in results if r.verdict == Verdict.FAILED),
        "takeovers": sum(1 for r in completed if r.record.to == 1),
        "delayed_takeovers": sum(1 for r in completed if r.record.del_to == 1),
        "hazards": sum(1 for r in completed if r.record.h == 1),
        "misjudgments": sum(1 for l in labels if l.mj == 1),
        "false_recognitions": sum(1 for l in labels if l.fr == 1),
        "foreseeable_misuse": sum(1 for l in labels if l.fm == 1),
        "controllability_provided": sum(
            1 for l in labels if l.controllability == Controllability.PROVIDED
        ),
        "controllability_not_provided": sum(
            1 for l in labels if l.controllability == Controllability.NOT_PROVIDED
        ),
    }
    detector_rows = [
        (r.labels, r.detector, r.record) for r in completed if r.detector is not None
    ]
    if detector_rows:
        c = contingency(detector_rows)
        summary["contingency"] = c.to_dict()
        summary["fmem"] = fmem(c) if c.total else None
    return summary


# --- checklist ---------------------------------------------------------------


def evaluate_checklist(
    trace: EpisodeTrace,
    record: TestCaseRecord,
    labels: MisuseLabels,
    config: SimConfig,
) -> ChecklistResult:
    """Answer the ten scenario questions for one episode.

    Questions that presuppose a take-over (7, 8, 10) are N/A without one;
    question 6 (minimal risk maneuver) is N/A when the driver took over.
    """
    to_t = trace.event_time(EventKind.TAKE_OVER)
    record_to_t = record.to_t2 if record.to == 1 else None
    if (to_t is None) != (record_to_t is None) or (
        to_t is not None and abs(to_t - record_to_t) > 1e-9
    ):
        raise MismatchedInputsError(
            f"record take-over time {record_to_t} does not match trace {to_t}"
        )
    hazard = trace.first_hazard()
    if (hazard is not None) != (record.h == 1) or (
        hazard is not None and abs(hazard.t - record.h_t3) > 1e-9
    ):
        raise MismatchedInputsError("record hazard does not match trace")

    tl = config.timeline
    dt = config.dt
    answers: dict[int, Answer] = {}
    evidence: dict[int, str] = {}

    def yes_no(flag: bool) -> Answer:
        return Answer.YES if flag else Answer.NO

    first_mode_ok = bool(trace.samples) and trace.samples[0].mode.value == "AUTOMATED"
    answers[1] = yes_no(first_mode_ok)
    evidence[1] = f"initial mode {trace.samples[0].mode.value}" if trace.samples else "no samples"

    gap_t = trace.event_time(EventKind.GAP_ENTRY)
    from .scenario import LANE_CHANGE_DURATION

    in_window = gap_t is not None and (
        tl.lane_change_start - 1e-9 <= gap_t <= tl.lane_change_start + LANE_CHANGE_DURATION + 1e-9
    )
    answers[2] = yes_no(in_window)
    evidence[2] = f"marking-gap entry at {gap_t}" if gap_t is not None else "no gap entry"

    warn_t = trace.event_time(EventKind.WARNING)
    warn_ok = warn_t is not None and abs(warn_t - tl.warning_time) <= dt + 1e-9
    answers[3] = yes_no(warn_ok)
    evidence[3] = f"warning at {warn_t} (configured {tl.warning_time})"

    tor_t = trace.event_time(EventKind.TOR)
    tor_ok = tor_t is not None and abs(tor_t - tl.tor_time) <= dt + 1e-9
    answers[4] = yes_no(tor_ok)
    evidence[4] = f"take-over request at {tor_t} (configured {tl.tor_time})"

    answers[5] = yes_no(record.to == 1)
    evidence[5] = f"take-over at {record.to_t2}" if record.to else "no take-over"

    mrm_t = trace.event_time(EventKind.MRM_START)
    if record.to == 1:
        answers[6] = Answer.NA
        evidence[6] = "driver took over"
    else:
        answers[6] = yes_no(mrm_t is not None)
        evidence[6] = f"minimal risk maneuver at {mrm_t}" if mrm_t is not None else "no maneuver"

    if record.to == 1:
        answers[7] = yes_no(record.del_to == 0)
        evidence[7] = f"take-over delay {record.delta_t2:.4f} s"
        answers[8] = yes_no(labels.steer_class.value != "OK")
        evidence[8] = f"steering class {labels.steer_class.value}"
    else:
        answers[7] = Answer.NA
        evidence[7] = "no take-over"
        answers[8] = Answer.NA
        evidence[8] = "no take-over"

    answers[9] = yes_no(record.h == 1)
    evidence[9] = (
        f"{hazard.kind.value} at {hazard.t}" if hazard is not None else "no lane departure"
    )

    if labels.controllability == Controllability.NOT_APPLICABLE:
        answers[10] = Answer.NA
        evidence[10] = "controllability not applicable"
    else:
        answers[10] = yes_no(labels.controllability == Controllability.PROVIDED)
        evidence[10] = f"controllability {labels.controllability.value}"

    return ChecklistResult(answers=answers, evidence=evidence)


def apply_criteria(
    results: list[CaseResult], criteria: dict[int, str]
) -> list[Verdict]:
    """Per-case verdicts against the required checklist answers.

    An N/A answer only matches the "any" requirement. Crashed cases fail
    every non-empty criteria set.
    """
    verdicts = []
    for result in results:
        if result.checklist is None:
            verdicts.append(Verdict.FAILED)
            continue
        ok = True
        for q, required in criteria.items():
            if required == "any":
                continue
            if result.checklist.answers[q].value != required:
                ok = False
                break
        verdicts.append(Verdict.PASS if ok else Verdict.FAIL)
    return verdicts


def series_verdict(
    checklists: list[ChecklistResult], criteria: dict[int, str]
) -> tuple[Verdict, list[Verdict]]:
    """Stand-alone verdict computation over bare checklist results."""
    per_case = []
    for checklist in checklists:
        ok = all(
            required == "any" or checklist.answers[q].value == required
            for q, required in criteria.items()
        )
        per_case.append(Verdict.PASS if ok else Verdict.FAIL)
    overall = Verdict.PASS if all(v == Verdict.PASS for v in per_case) else Verdict.FAIL
    return overall, per_case


# --- rendering ---------------------------------------------------------------


def render_report(report: TestReport, fmt: str) -> bytes:
    """Serialize a report as csv (record table), json (full structure), or
    md (summary, verdict, table)."""
    if fmt == "csv":
        records = [c.record for c in report.cases if c.record is not None]
        return traceio.render_records_csv(records).encode("utf-8")
    if fmt == "json":
        return (json.dumps(report.to_dict(), indent=2) + "\n").encode("utf-8")
    if fmt == "md":
        return _render_report_md(report).encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def _render_report_md(report: TestReport) -> str:
    s = report.summary
    lines = [
        f"# Test report: {report.series_name}",
        "",
        "## Summary",
        "",
        f"- cases: {s['cases']} ({s['completed']} completed, {s['crashed']} crashed)",
        f"- take-overs: {s['takeovers']} ({s['delayed_takeovers']} delayed)",
        f"- hazards: {s['hazards']}",
        f"- misuse: {s['foreseeable_misuse']} "
        f"(misjudgment {s['misjudgments']}, false recognition {s['false_recognitions']})",
        f"- controllability: {s['controllability_provided']} provided / "
        f"{s['controllability_not_provided']} not provided",
    ]
    if "fmem" in s and s["fmem"] is not None:
        lines.append(f"- detection accuracy: {s['fmem']:.4f}")
    lines += [
        "",
        "## Verdict",
        "",
        f"Series verdict: **{report.series_verdict.value}**",
        "",
        "## Test cases",
        "",
        "| TC | TO | TO_t2 | delta_T2 | DelTO | SWA | H | H_t3 | delta_T3 | class | controllability | verdict |",
        "| --- | --- | --- | --- | --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for case in report.cases:
        if case.record is None:
            lines.append(
                f"| {case.tc_index} | - | - | - | - | - | - | - | - | - | - | "
                f"{case.verdict.value} ({case.error}) |"
            )
            continue
        r = case.record
        lines.append(
            f"| {r.tc} | {r.to} | {r.to_t2:.4f} | {r.delta_t2:.4f} | {r.del_to} "
            f"| {r.swa:.4f} | {r.h} | {r.h_t3:.4f} | {r.delta_t3:.4f} "
            f"| {case.labels.steer_class.value} | {case.labels.controllability.value} "
            f"| {case.verdict.value} |"
        )
    lines.append("")
    return "\n".join(lines)
