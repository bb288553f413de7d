"""Canonical sample types, validation, and JSONL corpus serialization.

A corpus is a ``.jsonl`` file: one JSON object per line, UTF-8, LF line
endings. Required keys are ``id``, ``question_text`` and ``source_tag``;
optional keys are ``image_refs``, ``choices``, ``gold_answer``, ``meta``,
``think``, ``solution`` and ``provenance``. In strict mode unknown keys are
rejected; in lenient mode they are preserved on the sample and written back
verbatim.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .tokenizers import Tokenizer

OPTION_LETTERS = ("A", "B", "C", "D", "E")
SOURCE_TAGS = ("CR", "MR", "CV")

_REQUIRED_KEYS = ("id", "question_text", "source_tag")
_OPTIONAL_KEYS = (
    "image_refs",
    "choices",
    "gold_answer",
    "meta",
    "think",
    "solution",
    "provenance",
)
_KNOWN_KEYS = frozenset(_REQUIRED_KEYS + _OPTIONAL_KEYS)
_META_KEYS = frozenset({"subject", "unit", "objective", "difficulty", "topic_id"})


class CorpusError(Exception):
    """Base class for corpus I/O failures."""


class CorpusReadError(CorpusError):
    """A line could not be parsed into a valid sample.

    Reads are atomic: the first bad line aborts the whole read.
    """

    def __init__(self, path: str | Path, line: int, field_name: str, message: str):
        self.path = str(path)
        self.line = line
        self.field_name = field_name
        super().__init__(f"{path}:{line}: field {field_name!r}: {message}")


@dataclass(frozen=True)
class Metadata:
    """Curriculum metadata attached to a sample."""

    subject: str
    unit: str
    objective: str
    topic_id: str
    difficulty: str | None = None

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "subject": self.subject,
            "unit": self.unit,
            "objective": self.objective,
            "topic_id": self.topic_id,
        }
        if self.difficulty is not None:
            record["difficulty"] = self.difficulty
        return record


@dataclass(frozen=True)
class Sample:
    """One question item.

    ``choices`` is stored as ordered (letter, text) pairs so that malformed
    inputs with duplicate letters stay representable for validation; helpers
    expose the mapping view. ``extras`` carries unknown keys preserved by
    lenient reads.
    """

    id: str
    question_text: str
    source_tag: str
    image_refs: tuple[str, ...] = ()
    choices: tuple[tuple[str, str], ...] | None = None
    gold_answer: str | None = None
    meta: Metadata | None = None
    think: str | None = None
    solution: str | None = None
    provenance: Mapping[str, Any] | None = None
    extras: Mapping[str, Any] | None = None

    def choices_map(self) -> dict[str, str]:
        return dict(self.choices or ())

    def topic_id(self) -> str | None:
        return self.meta.topic_id if self.meta is not None else None

    def with_provenance(self, key: str, value: Any) -> "Sample":
        merged = dict(self.provenance or {})
        merged[key] = value
        return replace(self, provenance=merged)


@dataclass(frozen=True)
class ValidationReport:
    """Every invariant a sample violates, as (rule_id, message) pairs."""

    sample_id: str
    violations: tuple[tuple[str, str], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class CorpusStats:
    item_count: int
    token_count: int
    per_source_counts: Mapping[str, int] = field(default_factory=dict)
    per_topic_counts: Mapping[str, int] = field(default_factory=dict)

    def __add__(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(
            item_count=self.item_count + other.item_count,
            token_count=self.token_count + other.token_count,
            per_source_counts=_merge_counts(self.per_source_counts, other.per_source_counts),
            per_topic_counts=_merge_counts(self.per_topic_counts, other.per_topic_counts),
        )

    def to_record(self) -> dict[str, Any]:
        return {
            "item_count": self.item_count,
            "token_count": self.token_count,
            "per_source_counts": dict(sorted(self.per_source_counts.items())),
            "per_topic_counts": dict(sorted(self.per_topic_counts.items())),
        }


def _merge_counts(a: Mapping[str, int], b: Mapping[str, int]) -> dict[str, int]:
    merged = dict(a)
    for key, count in b.items():
        merged[key] = merged.get(key, 0) + count
    return merged


def validate_sample(sample: Sample) -> ValidationReport:
    """Check every per-sample invariant; never raises.

    Rules: ``answer-range`` (gold answer must be A-E), ``choice-count``
    (2-5 options), ``choice-distinctness`` (no repeated letters),
    ``choice-sequence`` (consecutive letters starting at A), ``source-tag``
    (one of CR/MR/CV), ``meta-fields`` (subject/unit/objective non-empty),
    ``id-empty``.
    """
    violations: list[tuple[str, str]] = []
    if not sample.id:
        violations.append(("id-empty", "sample id must be a non-empty string"))
    if sample.source_tag not in SOURCE_TAGS:
        violations.append(
            ("source-tag", f"source_tag {sample.source_tag!r} not in {SOURCE_TAGS}")
        )
    if sample.gold_answer is not None and sample.gold_answer not in OPTION_LETTERS:
        violations.append(
            ("answer-range", f"gold_answer {sample.gold_answer!r} outside A-E")
        )
    if sample.choices is not None:
        letters = [letter for letter, _ in sample.choices]
        if not 2 <= len(letters) <= 5:
            violations.append(
                ("choice-count", f"{len(letters)} choices; expected between 2 and 5")
            )
        if len(set(letters)) != len(letters):
            dupes = sorted({l for l in letters if letters.count(l) > 1})
            violations.append(
                ("choice-distinctness", f"duplicate choice letters: {dupes}")
            )
        elif sorted(letters) != list(OPTION_LETTERS[: len(letters)]):
            violations.append(
                (
                    "choice-sequence",
                    f"choice letters {sorted(letters)} must be consecutive from A",
                )
            )
    if sample.meta is not None:
        for meta_field in ("subject", "unit", "objective"):
            if not getattr(sample.meta, meta_field):
                violations.append(
                    ("meta-fields", f"meta.{meta_field} must be non-empty")
                )
    return ValidationReport(sample_id=sample.id, violations=tuple(violations))


def sample_text(sample: Sample) -> str:
    """All textual content of a sample, used for token counting.

    Concatenates question text, choice lines, think and solution with
    newlines; metadata and the answer letter are excluded.
    """
    parts = [sample.question_text]
    for letter, text in sample.choices or ():
        parts.append(f"{letter}) {text}")
    if sample.think:
        parts.append(sample.think)
    if sample.solution:
        parts.append(sample.solution)
    return "\n".join(parts)


def compute_stats(corpus: Iterable[Sample], tokenizer: Tokenizer) -> CorpusStats:
    """Single-pass corpus statistics; additive over disjoint corpora."""
    item_count = 0
    token_count = 0
    per_source: dict[str, int] = {}
    per_topic: dict[str, int] = {}
    for sample in corpus:
        item_count += 1
        token_count += tokenizer(sample_text(sample))
        per_source[sample.source_tag] = per_source.get(sample.source_tag, 0) + 1
        topic = sample.topic_id()
        if topic is not None:
            per_topic[topic] = per_topic.get(topic, 0) + 1
    return CorpusStats(
        item_count=item_count,
        token_count=token_count,
        per_source_counts=per_source,
        per_topic_counts=per_topic,
    )


def sample_to_record(sample: Sample) -> dict[str, Any]:
    """Canonical JSON object for one sample, fixed key order."""
    record: dict[str, Any] = {
        "id": sample.id,
        "question_text": sample.question_text,
        "source_tag": sample.source_tag,
    }
    if sample.image_refs:
        record["image_refs"] = list(sample.image_refs)
    if sample.choices is not None:
        record["choices"] = {letter: text for letter, text in sample.choices}
    if sample.gold_answer is not None:
        record["gold_answer"] = sample.gold_answer
    if sample.meta is not None:
        record["meta"] = sample.meta.to_record()
    if sample.think is not None:
        record["think"] = sample.think
    if sample.solution is not None:
        record["solution"] = sample.solution
    if sample.provenance is not None:
        record["provenance"] = sample.provenance
    for key in sorted(sample.extras or {}):
        record[key] = sample.extras[key]  # type: ignore[index]
    return record


def sample_to_line(sample: Sample) -> str:
    return json.dumps(sample_to_record(sample), ensure_ascii=False)


def _parse_meta(raw: Any, path: str | Path, line_no: int) -> Metadata:
    if not isinstance(raw, dict):
        raise CorpusReadError(path, line_no, "meta", "must be an object")
    unknown = set(raw) - _META_KEYS
    if unknown:
        raise CorpusReadError(
            path, line_no, "meta", f"unknown metadata keys {sorted(unknown)}"
        )
    try:
        return Metadata(
            subject=str(raw["subject"]),
            unit=str(raw["unit"]),
            objective=str(raw["objective"]),
            topic_id=str(raw["topic_id"]),
            difficulty=str(raw["difficulty"]) if "difficulty" in raw else None,
        )
    except KeyError as exc:
        raise CorpusReadError(
            path, line_no, "meta", f"missing metadata key {exc.args[0]!r}"
        ) from None


def record_to_sample(
    record: Mapping[str, Any],
    *,
    strict: bool = True,
    path: str | Path = "<record>",
    line_no: int = 0,
    choice_pairs: Sequence[tuple[str, Any]] | None = None,
) -> Sample:
    """Build a Sample from a decoded JSON object.

    ``choice_pairs`` carries raw key/value ordering for the ``choices``
    object when the caller decoded with a pairs hook, so duplicate letters
    survive into validation instead of being collapsed by ``dict``.
    """
    for key in _REQUIRED_KEYS:
        if key not in record:
            raise CorpusReadError(path, line_no, key, "required key missing")
        if not isinstance(record[key], str):
            raise CorpusReadError(path, line_no, key, "must be a string")
    unknown = [key for key in record if key not in _KNOWN_KEYS]
    extras: dict[str, Any] | None = None
    if unknown:
        if strict:
            raise CorpusReadError(
                path, line_no, unknown[0], "unknown key (strict mode)"
            )
        extras = {key: record[key] for key in unknown}

    image_refs = record.get("image_refs", [])
    if not isinstance(image_refs, list) or not all(isinstance(r, str) for r in image_refs):
        raise CorpusReadError(path, line_no, "image_refs", "must be a list of strings")

    choices: tuple[tuple[str, str], ...] | None = None
    if "choices" in record:
        raw_choices = record["choices"]
        if choice_pairs is not None:
            pairs = choice_pairs
        elif isinstance(raw_choices, dict):
            pairs = list(raw_choices.items())
        else:
            raise CorpusReadError(path, line_no, "choices", "must be an object")
        if not all(isinstance(v, str) for _, v in pairs):
            raise CorpusReadError(path, line_no, "choices", "option texts must be strings")
        choices = tuple((str(k), str(v)) for k, v in pairs)

    gold = record.get("gold_answer")
    if gold is not None and not isinstance(gold, str):
        raise CorpusReadError(path, line_no, "gold_answer", "must be a string")

    meta = _parse_meta(record["meta"], path, line_no) if "meta" in record else None

    for key in ("think", "solution"):
        if key in record and not isinstance(record[key], str):
            raise CorpusReadError(path, line_no, key, "must be a string")

    return Sample(
        id=record["id"],
        question_text=record["question_text"],
        source_tag=record["source_tag"],
        image_refs=tuple(image_refs),
        choices=choices,
        gold_answer=gold,
        meta=meta,
        think=record.get("think"),
        solution=record.get("solution"),
        provenance=record.get("provenance"),
        extras=extras,
    )


class _PairsDict(dict):
    """dict that remembers the raw key/value pairs it was decoded from.

    JSON objects with duplicate keys collapse in a plain dict; keeping the
    pairs lets duplicate choice letters reach validation.
    """

    def __init__(self, pairs: list[tuple[str, Any]]):
        super().__init__(pairs)
        self.pairs = pairs


def read_corpus(path: str | Path, *, strict: bool = True) -> list[Sample]:
    """Read a JSONL corpus; atomic (any bad line raises, nothing is returned).

    Line-level failures report the 1-based line number and offending field.
    Sample ids must be unique within the file.
    """
    samples: list[Sample] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line, object_pairs_hook=_PairsDict)
            except json.JSONDecodeError as exc:
                raise CorpusReadError(path, line_no, "<json>", str(exc)) from None
            if not isinstance(record, dict):
                raise CorpusReadError(path, line_no, "<json>", "line is not an object")
            raw_choices = record.get("choices")
            choice_pairs = raw_choices.pairs if isinstance(raw_choices, _PairsDict) else None
            sample = record_to_sample(
                record,
                strict=strict,
                path=path,
                line_no=line_no,
                choice_pairs=choice_pairs,
            )
            if sample.id in seen_ids:
                raise CorpusReadError(path, line_no, "id", f"duplicate id {sample.id!r}")
            seen_ids.add(sample.id)
            samples.append(sample)
    return samples


def write_corpus(samples: Iterable[Sample], path: str | Path) -> None:
    """Write samples as canonical JSONL; line n corresponds to sample n."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for sample in samples:
            handle.write(sample_to_line(sample))
            handle.write("\n")
