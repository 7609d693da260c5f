"""Campaign-level evaluation measures.

Joint event counts over labeled records, the conditional-probability ratios
in both the as-published arrangement (numerator and denominator as printed,
which can exceed 1) and the standard conditional form, detector accuracy
over the misuse confusion matrix, the take-over/hazard event tree, and
controllability rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classify import (
    DELAY_THRESHOLD,
    Controllability,
    DetectorOutput,
    MisuseLabels,
    TestCaseRecord,
)
from .errors import EmptyContingencyError, EmptyInputError, LengthMismatchError

NOT_A_PROBABILITY = "NOT_A_PROBABILITY"


@dataclass(frozen=True)
class JointCounts:
    """Counts of the joint take-over-timing / hazard / cause events.

    Rows are independent filters over the records; subset violations (a
    cause-conjunction row exceeding its parent row) are reported through
    consistency_flags rather than rejected, since externally supplied count
    tables may contain them.
    """

    n_total: int
    n_to_le_h: int
    n_mj_to_le_h: int
    n_to_gt_h: int
    n_mj_to_gt_h: int
    n_fr_to_gt_h: int

    def __post_init__(self):
        counts = (
            self.n_to_le_h,
            self.n_mj_to_le_h,
            self.n_to_gt_h,
            self.n_mj_to_gt_h,
            self.n_fr_to_gt_h,
        )
        if self.n_total < 0 or any(c < 0 for c in counts):
            raise ValueError("counts must be non-negative")
        if any(c > self.n_total for c in counts):
            raise ValueError("counts cannot exceed n_total")

    @property
    def consistency_flags(self) -> list[str]:
        flags = []
        if self.n_mj_to_le_h > self.n_to_le_h:
            flags.append(
                f"n_mj_to_le_h ({self.n_mj_to_le_h}) exceeds n_to_le_h ({self.n_to_le_h})"
            )
        if self.n_mj_to_gt_h > self.n_to_gt_h:
            flags.append(
                f"n_mj_to_gt_h ({self.n_mj_to_gt_h}) exceeds n_to_gt_h ({self.n_to_gt_h})"
            )
        if self.n_fr_to_gt_h > self.n_to_gt_h:
            flags.append(
                f"n_fr_to_gt_h ({self.n_fr_to_gt_h}) exceeds n_to_gt_h ({self.n_to_gt_h})"
            )
        return flags

    def percentages(self) -> dict[str, float]:
        def pct(c: int) -> float:
            return 100.0 * c / self.n_total

        return {
            "to_le_h": pct(self.n_to_le_h),
            "mj_to_le_h": pct(self.n_mj_to_le_h),
            "to_gt_h": pct(self.n_to_gt_h),
            "mj_to_gt_h": pct(self.n_mj_to_gt_h),
            "fr_to_gt_h": pct(self.n_fr_to_gt_h),
        }

    def to_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_to_le_h": self.n_to_le_h,
            "n_mj_to_le_h": self.n_mj_to_le_h,
            "n_to_gt_h": self.n_to_gt_h,
            "n_mj_to_gt_h": self.n_mj_to_gt_h,
            "n_fr_to_gt_h": self.n_fr_to_gt_h,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JointCounts":
        return cls(**{k: int(v) for k, v in data.items()})


@dataclass(frozen=True)
class ContingencyCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("contingency counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}

    @classmethod
    def from_dict(cls, data: dict) -> "ContingencyCounts":
        return cls(**{k: int(v) for k, v in data.items()})


@dataclass(frozen=True)
class RatioResult:
    """One computed ratio plus its validity flags."""

    name: str
    value: float | None
    valid: bool
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "valid": self.valid,
            "flags": list(self.flags),
        }


def _ratio(name: str, numerator: int, denominator: int) -> RatioResult:
    if denominator == 0:
        return RatioResult(name=name, value=None, valid=False, flags=("DIVISION_BY_ZERO",))
    value = numerator / denominator
    flags = (NOT_A_PROBABILITY,) if value > 1.0 else ()
    return RatioResult(name=name, value=value, valid=True, flags=flags)


def _is_delayed(record: TestCaseRecord) -> bool:
    return record.to == 1 and record.delta_t2 >= DELAY_THRESHOLD


def _is_timely(record: TestCaseRecord) -> bool:
    return record.to == 1 and record.delta_t2 < DELAY_THRESHOLD


def joint_counts(labeled: list[tuple[MisuseLabels, TestCaseRecord]]) -> JointCounts:
    """Exact joint counts over (labels, record) pairs."""
    if not labeled:
        raise EmptyInputError("cannot count over an empty campaign")
    n_to_le_h = n_mj_le = n_to_gt_h = n_mj_gt = n_fr_gt = 0
    for labels, record in labeled:
        hazard = record.h == 1
        if _is_timely(record) and hazard:
            n_to_le_h += 1
            if labels.mj:
                n_mj_le += 1
        if _is_delayed(record) and hazard:
            n_to_gt_h += 1
            if labels.mj:
                n_mj_gt += 1
            if labels.fr:
                n_fr_gt += 1
    return JointCounts(
        n_total=len(labeled),
        n_to_le_h=n_to_le_h,
        n_mj_to_le_h=n_mj_le,
        n_to_gt_h=n_to_gt_h,
        n_mj_to_gt_h=n_mj_gt,
        n_fr_to_gt_h=n_fr_gt,
    )


def cpa_as_written(counts: JointCounts) -> list[RatioResult]:
    """The published ratio arrangement: joint count of the conditioning
    events over the joint count including the cause.

    These are reciprocals of conditional probabilities and can exceed 1;
    such values are flagged rather than rejected.
    """
    return [
        _ratio("MJ_given_timely_to_hazard", counts.n_to_le_h, counts.n_mj_to_le_h),
        _ratio("MJ_given_delayed_to_hazard", counts.n_to_gt_h, counts.n_mj_to_gt_h),
        _ratio("FR_given_delayed_to_hazard", counts.n_to_gt_h, counts.n_fr_to_gt_h),
    ]


def cpa_standard(counts: JointCounts) -> list[RatioResult]:
    """Standard conditional probabilities of the causes given the
    conditioning events; values above 1 signal inconsistent input counts."""
    return [
        _ratio("MJ_given_timely_to_hazard", counts.n_mj_to_le_h, counts.n_to_le_h),
        _ratio("MJ_given_delayed_to_hazard", counts.n_mj_to_gt_h, counts.n_to_gt_h),
        _ratio("FR_given_delayed_to_hazard", counts.n_fr_to_gt_h, counts.n_to_gt_h),
    ]


def contingency(
    rows: list[tuple[MisuseLabels, DetectorOutput, TestCaseRecord]],
) -> ContingencyCounts:
    """Detector-vs-ground-truth cross tabulation.

    A row is positive in truth when the misuse label is set and positive in
    prediction when the detector flagged it.
    """
    tp = fp = tn = fn = 0
    for labels, detector, _record in rows:
        truth = labels.fm == 1
        pred = detector.fm_flagged == 1
        if truth and pred:
            tp += 1
        elif not truth and pred:
            fp += 1
        elif truth and not pred:
            fn += 1
        else:
            tn += 1
    return ContingencyCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def fmem(counts: ContingencyCounts) -> float:
    """Detector accuracy: correct calls over all calls."""
    total = counts.total
    if total == 0:
        raise EmptyContingencyError("cannot evaluate an empty contingency table")
    return (counts.tp + counts.tn) / total


@dataclass
class EventTreeNode:
    name: str
    count: int
    fraction: float  # of parent; 1.0 at the root
    children: list["EventTreeNode"] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "count": self.count,
            "fraction": self.fraction,
            "children": [c.to_dict() for c in self.children],
        }


@dataclass
class EventTree:
    root: EventTreeNode
    non_takeover_count: int  # episodes outside the take-over branches

    def to_dict(self) -> dict:
        return {"root": self.root.to_dict(), "non_takeover_count": self.non_takeover_count}


def build_event_tree(labeled: list[tuple[MisuseLabels, TestCaseRecord]]) -> EventTree:
    """Take-over-timing / hazard / false-recognition event tree.

    Level 2 splits take-over episodes on the delay threshold, level 3 on
    hazard presence, and the leaves split each cell by the false-recognition
    label so every node's children sum to its count. Episodes without a
    take-over are reported as a root annotation.
    """
    if not labeled:
        raise EmptyInputError("cannot build a tree over an empty campaign")
    takeover = [(lab, rec) for lab, rec in labeled if rec.to == 1]

    def frac(count: int, parent: int) -> float:
        return count / parent if parent > 0 else 0.0

    root = EventTreeNode(name="take-over episodes", count=len(takeover), fraction=1.0)
    for branch_name, pred in (
        ("TO <= 1.77s", _is_timely),
        ("TO > 1.77s", _is_delayed),
    ):
        branch_rows = [(lab, rec) for lab, rec in takeover if pred(rec)]
        branch = EventTreeNode(
            name=branch_name, count=len(branch_rows), fraction=frac(len(branch_rows), root.count)
        )
        for hazard_name, want_h in (("H", 1), ("no H", 0)):
            cell_rows = [(lab, rec) for lab, rec in branch_rows if rec.h == want_h]
            cell = EventTreeNode(
                name=hazard_name,
                count=len(cell_rows),
                fraction=frac(len(cell_rows), branch.count),
            )
            n_fr = sum(1 for lab, _ in cell_rows if lab.fr == 1)
            cell.children = [
                EventTreeNode(name="FR", count=n_fr, fraction=frac(n_fr, cell.count)),
                EventTreeNode(
                    name="no FR",
                    count=cell.count - n_fr,
                    fraction=frac(cell.count - n_fr, cell.count),
                ),
            ]
            branch.children.append(cell)
        root.children.append(branch)
    return EventTree(root=root, non_takeover_count=len(labeled) - len(takeover))


@dataclass(frozen=True)
class ControllabilityResult:
    provided_fraction: float | None
    not_provided_fraction: float | None
    n_applicable: int

    @property
    def valid(self) -> bool:
        return self.n_applicable > 0

    def to_dict(self) -> dict:
        return {
            "provided_fraction": self.provided_fraction,
            "not_provided_fraction": self.not_provided_fraction,
            "n_applicable": self.n_applicable,
        }


def controllability_rate(labels: list[MisuseLabels]) -> ControllabilityResult:
    """Fractions of provided / not-provided controllability over the
    episodes where controllability applies (a take-over happened)."""
    applicable = [l for l in labels if l.controllability != Controllability.NOT_APPLICABLE]
    n = len(applicable)
    if n == 0:
        return ControllabilityResult(None, None, 0)
    provided = sum(1 for l in applicable if l.controllability == Controllability.PROVIDED)
    return ControllabilityResult(
        provided_fraction=provided / n,
        not_provided_fraction=(n - provided) / n,
        n_applicable=n,
    )


@dataclass
class ProbabilityReport:
    """Everything the evaluation stage produces for one campaign."""

    joint: JointCounts
    cpa_as_written: list[RatioResult]
    cpa_standard: list[RatioResult]
    contingency: ContingencyCounts | None = None
    fmem_value: float | None = None
    controllability: ControllabilityResult | None = None
    tree: EventTree | None = None

    def to_dict(self) -> dict:
        return {
            "joint_counts": self.joint.to_dict(),
            "joint_percentages": self.joint.percentages(),
            "consistency_flags": self.joint.consistency_flags,
            "cpa_as_written": [r.to_dict() for r in self.cpa_as_written],
            "cpa_standard": [r.to_dict() for r in self.cpa_standard],
            "contingency": self.contingency.to_dict() if self.contingency else None,
            "fmem": self.fmem_value,
            "controllability": self.controllability.to_dict() if self.controllability else None,
            "event_tree": self.tree.to_dict() if self.tree else None,
        }


def probability_report(
    rows: list[tuple[MisuseLabels, TestCaseRecord]],
    detector_rows: list[tuple[MisuseLabels, DetectorOutput, TestCaseRecord]] | None = None,
) -> ProbabilityReport:
    """Full evaluation over labeled records (and detector outputs when
    available)."""
    counts = joint_counts(rows)
    report = ProbabilityReport(
        joint=counts,
        cpa_as_written=cpa_as_written(counts),
        cpa_standard=cpa_standard(counts),
        controllability=controllability_rate([lab for lab, _ in rows]),
        tree=build_event_tree(rows),
    )
    if detector_rows is not None:
        report.contingency = contingency(detector_rows)
        if report.contingency.total > 0:
            report.fmem_value = fmem(report.contingency)
    return report


def report_from_counts(
    joint: JointCounts,
    contingency_counts: ContingencyCounts | None = None,
    controllability: ControllabilityResult | None = None,
) -> ProbabilityReport:
    """Evaluation over externally supplied count tables (no per-record
    data, so no event tree)."""
    report = ProbabilityReport(
        joint=joint,
        cpa_as_written=cpa_as_written(joint),
        cpa_standard=cpa_standard(joint),
        contingency=contingency_counts,
        controllability=controllability,
    )
    if contingency_counts is not None and contingency_counts.total > 0:
        report.fmem_value = fmem(contingency_counts)
    return report


_CONDITION_LABELS = {
    "to_le_h": "TO <= 1.77s and H",
    "mj_to_le_h": "MJ and TO <= 1.77s and H",
    "to_gt_h": "TO > 1.77s and H",
    "mj_to_gt_h": "MJ and TO > 1.77s and H",
    "fr_to_gt_h": "FR and TO > 1.77s and H",
}


def render_probability_markdown(report: ProbabilityReport) -> str:
    """Two-decimal, table-shaped markdown rendering of a report."""
    j = report.joint
    pct = j.percentages()
    lines = [
        "# Probability analysis",
        "",
        f"Campaign size: {j.n_total} test cases",
        "",
        "## Joint event counts",
        "",
        "| Condition | Test cases | Percentage |",
        "| --- | --- | --- |",
    ]
    count_values = {
        "to_le_h": j.n_to_le_h,
        "mj_to_le_h": j.n_mj_to_le_h,
        "to_gt_h": j.n_to_gt_h,
        "mj_to_gt_h": j.n_mj_to_gt_h,
        "fr_to_gt_h": j.n_fr_to_gt_h,
    }
    for key, label in _CONDITION_LABELS.items():
        lines.append(f"| {label} | {count_values[key]} | {pct[key]:.2f}% |")
    if j.consistency_flags:
        lines.append("")
        lines.append("Consistency warnings:")
        for flag in j.consistency_flags:
            lines.append(f"- {flag}")

    def fmt(r: RatioResult) -> tuple[str, str]:
        if not r.valid:
            return "n/a", ",".join(r.flags)
        return f"{r.value:.2f}", ",".join(r.flags) if r.flags else ""

    lines += [
        "",
        "## Conditional probability analysis",
        "",
        "| Quantity | Likelihood ratio (as published) | Conditional probability | Flags |",
        "| --- | --- | --- | --- |",
    ]
    for written, standard in zip(report.cpa_as_written, report.cpa_standard):
        wv, wf = fmt(written)
        sv, sf = fmt(standard)
        flags = "; ".join(x for x in (wf, sf) if x) or "-"
        lines.append(f"| {written.name} | {wv} | {sv} | {flags} |")

    lines.append("")
    lines.append("## Detection accuracy")
    lines.append("")
    if report.contingency is not None and report.fmem_value is not None:
        c = report.contingency
        lines.append(
            f"TP={c.tp}, FP={c.fp}, TN={c.tn}, FN={c.fn}; accuracy = {report.fmem_value:.2f}"
        )
    else:
        lines.append("n/a (no detector outputs supplied)")

    lines.append("")
    lines.append("## Controllability")
    lines.append("")
    ctr = report.controllability
    if ctr is not None and ctr.valid:
        lines.append(
            f"Provided: {100 * ctr.provided_fraction:.2f}%  "
            f"Not provided: {100 * ctr.not_provided_fraction:.2f}%  "
            f"(over {ctr.n_applicable} applicable test cases)"
        )
    else:
        lines.append("n/a (no applicable test cases)")

    if report.tree is not None:
        lines.append("")
        lines.append("## Event tree")
        lines.append("")

        def walk(node: EventTreeNode, depth: int):
            indent = "  " * depth
            lines.append(
                f"{indent}- {node.name}: {node.count} ({100 * node.fraction:.2f}% of parent)"
            )
            for child in node.children:
                walk(child, depth + 1)

        walk(report.tree.root, 0)
        lines.append(f"- episodes without take-over: {report.tree.non_takeover_count}")

    lines += [
        "",
        "---",
        "",
        "Positive ground truth = misuse label set (delayed/absent take-over or "
        "over/understeer); positive prediction = detector flag. Detection "
        "accuracy is the orthodox cross-tabulation of the two.",
        "",
    ]
    return "\n".join(lines)
