"""Multiple-choice evaluation harness with per-topic breakdown.

Responses are free-form text; the answer letter is recovered by a
three-tier cascade (tagged block, labeled line, bare letter line), taking the
last occurrence within each tier. Unanswerable responses score as incorrect,
the way a blank exam response would. Accuracy is kept as an exact fraction so
``accuracy * total == correct`` holds as an integer identity.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .adapters import AdapterError, ModelAdapter
from .corpus import OPTION_LETTERS, Sample

_TAGGED_ANSWER_RE = re.compile(r"<answer>\s*([A-E])\s*</answer>")
_LABELED_ANSWER_RE = re.compile(
    r"\b(?:answer|cevap)\s*[:\-]\s*\(?([A-E])\)?(?![A-Za-z0-9])", re.IGNORECASE
)


def extract_answer(response: str) -> str | None:
    """Recover the chosen option letter from a free-form response.

    Cascade: (1) last well-formed ``<answer>X</answer>`` block; (2) last
    ``Answer: X`` / ``Cevap: X`` label; (3) last line consisting of exactly
    one capital letter A-E. Returns None when nothing matches.
    """
    tagged = _TAGGED_ANSWER_RE.findall(response)
    if tagged:
        return tagged[-1]
    labeled = _LABELED_ANSWER_RE.findall(response)
    if labeled:
        return labeled[-1].upper()
    bare = [line.strip() for line in response.splitlines() if line.strip() in OPTION_LETTERS]
    if bare:
        return bare[-1]
    return None


@dataclass(frozen=True)
class EvalVerdict:
    item_id: str
    extracted: str | None
    gold: str
    correct: bool
    unanswered: bool = False

    def to_record(self) -> dict[str, Any]:
        return {
            "item_id": self.item_id,
            "extracted": self.extracted,
            "gold": self.gold,
            "correct": self.correct,
            "unanswered": self.unanswered,
        }


@dataclass(frozen=True)
class TopicScore:
    total: int
    correct: int

    @property
    def accuracy(self) -> Fraction:
        return Fraction(self.correct, self.total) if self.total else Fraction(0)


@dataclass
class EvalReport:
    total: int
    correct: int
    unanswered: int
    verdicts: tuple[EvalVerdict, ...]
    per_topic: dict[str, TopicScore]
    # Raw responses stored by reference: keyed by item id, serialized to a
    # sidecar file rather than inlined in verdicts.
    responses: dict[str, str] = field(default_factory=dict)

    @property
    def accuracy(self) -> Fraction:
        return Fraction(self.correct, self.total) if self.total else Fraction(0)

    def to_record(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "correct": self.correct,
            "unanswered": self.unanswered,
            "accuracy": float(self.accuracy),
            "accuracy_percent": format_accuracy(self.accuracy),
            "per_topic": {
                topic: {"total": score.total, "correct": score.correct}
                for topic, score in sorted(self.per_topic.items())
            },
            "verdicts": [v.to_record() for v in self.verdicts],
        }


def format_accuracy(accuracy: Fraction | float) -> str:
    return f"{float(accuracy) * 100:.2f}%"


def evaluate(
    benchmark: Sequence[Sample],
    adapter: ModelAdapter,
    *,
    retries: int = 2,
    parallelism: int = 1,
) -> EvalReport:
    """Evaluate an adapter over a benchmark corpus.

    Every item must carry a gold answer and topic metadata. Adapter failures
    after ``retries`` extra tries mark the item unanswered (still counted in
    the denominator). Verdicts are ordered by item id.
    """
    for item in benchmark:
        if item.gold_answer is None:
            raise ValueError(f"benchmark item {item.id!r} lacks gold_answer")
        if item.meta is None or not item.meta.topic_id:
            raise ValueError(f"benchmark item {item.id!r} lacks meta.topic_id")

    def ask(item: Sample) -> tuple[str, str | None]:
        for _ in range(retries + 1):
            try:
                prompt = _benchmark_prompt(item)
                return item.id, adapter.answer(prompt, item.image_refs, item_id=item.id)
            except AdapterError:
                continue
        return item.id, None

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            raw = dict(pool.map(ask, benchmark))
    else:
        raw = dict(ask(item) for item in benchmark)

    verdicts: list[EvalVerdict] = []
    responses: dict[str, str] = {}
    topic_totals: dict[str, list[int]] = {}
    correct = 0
    unanswered = 0
    for item in sorted(benchmark, key=lambda s: s.id):
        response = raw[item.id]
        gold = item.gold_answer or ""
        if response is None:
            extracted = None
            failed = True
        else:
            responses[item.id] = response
            extracted = extract_answer(response)
            failed = False
        is_correct = extracted is not None and extracted == gold
        verdicts.append(
            EvalVerdict(
                item_id=item.id,
                extracted=extracted,
                gold=gold,
                correct=is_correct,
                unanswered=failed or extracted is None,
            )
        )
        topic = item.meta.topic_id  # type: ignore[union-attr]
        bucket = topic_totals.setdefault(topic, [0, 0])
        bucket[0] += 1
        if is_correct:
            bucket[1] += 1
            correct += 1
        if failed or extracted is None:
            unanswered += 1
    return EvalReport(
        total=len(benchmark),
        correct=correct,
        unanswered=unanswered,
        verdicts=tuple(verdicts),
        per_topic={t: TopicScore(total=c[0], correct=c[1]) for t, c in topic_totals.items()},
        responses=responses,
    )


def _benchmark_prompt(item: Sample) -> str:
    lines = [item.question_text]
    for letter, text in item.choices or ():
        lines.append(f"{letter}) {text}")
    return "\n".join(lines)


def rank_topics(report: EvalReport, k: int = 10) -> list[tuple[str, Fraction]]:
    """The k lowest-accuracy topics, ascending; ties break lexicographically."""
    if k > len(report.per_topic):
        raise ValueError(f"k={k} exceeds topic count {len(report.per_topic)}")
    ranked = sorted(
        ((topic, score.accuracy) for topic, score in report.per_topic.items()),
        key=lambda pair: (pair[1], pair[0]),
    )
    return ranked[:k]


@dataclass(frozen=True)
class LeaderboardRow:
    developer: str
    model: str
    type: str
    accuracy_percent: float

    def to_record(self) -> dict[str, Any]:
        return {
            "developer": self.developer,
            "model": self.model,
            "type": self.type,
            "accuracy_percent": self.accuracy_percent,
        }


# Published reference results on the 1,854-item YKSUniform benchmark, kept
# for regression display only; this harness does not reproduce them.
REFERENCE_LEADERBOARD: tuple[LeaderboardRow, ...] = (
    LeaderboardRow("Google", "Gemini 2.5 Flash", "Proprietary", 84.68),
    LeaderboardRow("Google", "Gemini 2.0 Flash", "Proprietary", 79.18),
    LeaderboardRow("METU", "EduMix-QMSA", "Open weights", 78.59),
    LeaderboardRow("OpenAI", "o3", "Proprietary", 74.48),
    LeaderboardRow("OpenAI", "GPT-5", "Proprietary", 73.19),
    LeaderboardRow("Google", "Gemini 2.0 Flash - Preview", "Proprietary", 71.19),
    LeaderboardRow("OpenAI", "o1", "Proprietary", 68.77),
    LeaderboardRow("Google", "Gemini 1.5 Flash", "Proprietary", 67.15),
    LeaderboardRow("Alibaba", "Qwen-2.5-VL-32B", "Open weights", 62.46),
    LeaderboardRow("OpenAI", "GPT-4.1", "Proprietary", 57.44),
    LeaderboardRow("Alibaba", "Qwen-2-VL-72B", "Open weights", 47.41),
    LeaderboardRow("Anthropic", "Claude 3.5 Sonnet", "Proprietary", 47.08),
    LeaderboardRow("xAI", "Grok 2 Vision (1212)", "Proprietary", 36.94),
)


def render_leaderboard(
    rows: Iterable[LeaderboardRow],
) -> tuple[str, list[LeaderboardRow]]:
    """Sort rows by accuracy descending (stable for ties) and render a table.

    Returns the markdown table and the sorted rows.
    """
    ordered = sorted(rows, key=lambda row: -row.accuracy_percent)
    header = ["| Developer | Model | Type | Accuracy |", "|---|---|---|---|"]
    lines = [
        f"| {row.developer} | {row.model} | {row.type} | {row.accuracy_percent:.2f}% |"
        for row in ordered
    ]
    return "\n".join(header + lines) + "\n", ordered


def leaderboard_rows_from_record(data: Sequence[Mapping[str, Any]]) -> list[LeaderboardRow]:
    return [
        LeaderboardRow(
            developer=str(row["developer"]),
            model=str(row["model"]),
            type=str(row["type"]),
            accuracy_percent=float(row["accuracy_percent"]),
        )
        for row in data
    ]


@dataclass(frozen=True)
class IntegrityCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class IntegrityReport:
    checks: tuple[IntegrityCheck, ...]

    @property
    def ok(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_record(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


def benchmark_integrity_check(
    benchmark: Sequence[Sample],
    *,
    expected_items: int | None = None,
    expected_topics: int | None = None,
    image_root: str | Path | None = None,
) -> IntegrityReport:
    """Structural checks on a benchmark corpus; failures are report entries."""
    checks: list[IntegrityCheck] = []
    item_count = len(benchmark)
    topics = {item.meta.topic_id for item in benchmark if item.meta is not None}
    if expected_items is not None:
        checks.append(
            IntegrityCheck(
                "item-count",
                item_count == expected_items,
                f"found {item_count}, expected {expected_items}",
            )
        )
    if expected_topics is not None:
        checks.append(
            IntegrityCheck(
                "topic-count",
                len(topics) == expected_topics,
                f"found {len(topics)}, expected {expected_topics}",
            )
        )
    bad_answers = [
        item.id for item in benchmark if item.gold_answer not in OPTION_LETTERS
    ]
    checks.append(
        IntegrityCheck(
            "answer-letters",
            not bad_answers,
            "all gold answers in A-E" if not bad_answers else f"bad answers on {bad_answers}",
        )
    )
    if image_root is not None:
        root = Path(image_root)
        dangling = [
            f"{item.id}:{ref}"
            for item in benchmark
            for ref in item.image_refs
            if not (root / ref).exists()
        ]
        checks.append(
            IntegrityCheck(
                "image-refs",
                not dangling,
                "all image refs resolve" if not dangling else f"dangling refs: {dangling}",
            )
        )
    return IntegrityReport(checks=tuple(checks))


def write_report(report: EvalReport, report_path: str | Path,
                 responses_path: str | Path | None = None) -> None:
    """Write report.json plus an optional raw-response sidecar."""
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    record = report.to_record()
    if responses_path is not None:
        responses_path = Path(responses_path)
        with open(responses_path, "w", encoding="utf-8", newline="\n") as handle:
            for item_id in sorted(report.responses):
                handle.write(
                    json.dumps(
                        {"item_id": item_id, "response": report.responses[item_id]},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        record["responses_file"] = str(responses_path)
    report_path.write_text(json.dumps(record, ensure_ascii=False, indent=2) + "\n")
