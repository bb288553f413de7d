"""Journal-backed review queue state.

Persistence is an append-only JSONL journal of events (flag/decision) plus
periodic snapshot files. Recovery loads the newest snapshot and replays the
journal suffix; a torn final line (crash mid-write) is tolerated and dropped.
Every mutation is fsynced before it is acknowledged, serialized through a
single writer lock; reads hand out copies.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from ..corpus import (
    Sample,
    record_to_sample,
    sample_to_record,
    validate_sample,
)
from ..evalbench import EvalReport, rank_topics

FLAG_REASONS = ("filter_reject", "low_topic_accuracy", "repair_output", "manual")
_STATUSES = ("pending", "accepted", "edited", "discarded")


class ConflictError(Exception):
    """Decision raced another decision (status already set or stale version)."""


class ValidationFailed(Exception):
    def __init__(self, violations: Sequence[tuple[str, str]]):
        self.violations = list(violations)
        super().__init__(f"edit fails validation: {self.violations}")


class CriteriaError(Exception):
    """A flag criterion referenced a signal that was not supplied."""


@dataclass(frozen=True)
class LogEntry:
    timestamp: float
    reviewer_id: str
    action: str
    diff: Mapping[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "reviewer_id": self.reviewer_id,
            "action": self.action,
            "diff": dict(self.diff),
        }


@dataclass(frozen=True)
class ReviewItem:
    sample: Sample
    flags: tuple[str, ...] = ()
    status: str = "pending"
    decision_log: tuple[LogEntry, ...] = ()
    version: int = 0
    working: Sample | None = None  # edited copy; original stays in .sample

    @property
    def effective_sample(self) -> Sample:
        return self.working if self.working is not None else self.sample

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "sample": sample_to_record(self.sample),
            "flags": list(self.flags),
            "status": self.status,
            "decision_log": [entry.to_record() for entry in self.decision_log],
            "version": self.version,
        }
        if self.working is not None:
            record["working"] = sample_to_record(self.working)
        return record

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "ReviewItem":
        working = record.get("working")
        return cls(
            sample=record_to_sample(record["sample"], strict=False),
            flags=tuple(record.get("flags", ())),
            status=record.get("status", "pending"),
            decision_log=tuple(
                LogEntry(
                    timestamp=entry["timestamp"],
                    reviewer_id=entry["reviewer_id"],
                    action=entry["action"],
                    diff=entry.get("diff", {}),
                )
                for entry in record.get("decision_log", ())
            ),
            version=int(record.get("version", 0)),
            working=record_to_sample(working, strict=False) if working else None,
        )


@dataclass(frozen=True)
class ReviewQueueStats:
    pending: int = 0
    accepted: int = 0
    edited: int = 0
    discarded: int = 0

    @property
    def total(self) -> int:
        return self.pending + self.accepted + self.edited + self.discarded

    @property
    def decided(self) -> int:
        return self.total - self.pending

    def to_record(self) -> dict[str, Any]:
        return {
            "pending": self.pending,
            "accepted": self.accepted,
            "edited": self.edited,
            "discarded": self.discarded,
            "total": self.total,
            "decided": self.decided,
        }


@dataclass(frozen=True)
class FlagCriterion:
    """One flagging rule.

    kinds: ``manual`` (explicit ids), ``filter_reject`` (ids from a campaign
    report), ``repair_output`` (samples with repair provenance),
    ``low_topic_accuracy`` (samples in the k lowest-accuracy topics of an
    eval report).
    """

    kind: str
    ids: tuple[str, ...] = ()
    k: int = 10

    def __post_init__(self) -> None:
        if self.kind not in FLAG_REASONS:
            raise CriteriaError(f"unknown criterion kind {self.kind!r}")


def _matches(
    criterion: FlagCriterion, corpus: Sequence[Sample], eval_report: EvalReport | None
) -> set[str]:
    if criterion.kind in ("manual", "filter_reject"):
        return set(criterion.ids)
    if criterion.kind == "repair_output":
        matched = set()
        for sample in corpus:
            distill = (sample.provenance or {}).get("distill")
            if isinstance(distill, Mapping) and distill.get("phase") == "repair":
                matched.add(sample.id)
        return matched
    # low_topic_accuracy
    if eval_report is None:
        raise CriteriaError("low_topic_accuracy criterion requires an eval report")
    lowest = {topic for topic, _ in rank_topics(eval_report, criterion.k)}
    return {s.id for s in corpus if s.topic_id() in lowest}


def flag_samples(
    corpus: Sequence[Sample],
    criteria: Sequence[FlagCriterion],
    eval_report: EvalReport | None = None,
) -> dict[str, list[str]]:
    """Map sample id -> flag reasons for every sample matching any criterion.

    Pure computation; idempotent by construction (reasons are a set).
    """
    by_id: dict[str, set[str]] = {}
    corpus_ids = {sample.id for sample in corpus}
    for criterion in criteria:
        for item_id in _matches(criterion, corpus, eval_report):
            if item_id in corpus_ids:
                by_id.setdefault(item_id, set()).add(criterion.kind)
    return {item_id: sorted(reasons) for item_id, reasons in by_id.items()}


class ReviewStore:
    """Queue state over a journal directory.

    Layout: ``journal.jsonl`` (events) and ``snapshot-<n>.json`` files, where
    ``n`` is the number of journal events folded into the snapshot.
    """

    def __init__(self, state_dir: str | Path, snapshot_interval: int = 50):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.journal_path = self.state_dir / "journal.jsonl"
        self.snapshot_interval = snapshot_interval
        self._lock = threading.Lock()
        self._items: dict[str, ReviewItem] = {}
        self._event_count = 0
        self._recover()

    # -- persistence ------------------------------------------------------

    def _recover(self) -> None:
        snapshot_at = 0
        snapshot = self._latest_snapshot()
        if snapshot is not None:
            snapshot_at, items = snapshot
            self._items = items
        self._event_count = snapshot_at
        # replay the journal suffix past the snapshot
        for index, event in enumerate(self._read_journal_events()):
            if index < snapshot_at:
                continue
            self._apply(event)
            self._event_count = index + 1

    def _latest_snapshot(self) -> tuple[int, dict[str, ReviewItem]] | None:
        best: tuple[int, Path] | None = None
        for path in self.state_dir.glob("snapshot-*.json"):
            try:
                count = int(path.stem.split("-", 1)[1])
            except (IndexError, ValueError):
                continue
            if best is None or count > best[0]:
                best = (count, path)
        if best is None:
            return None
        count, path = best
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        items = {
            item_id: ReviewItem.from_record(record)
            for item_id, record in data.get("items", {}).items()
        }
        return count, items

    def _read_journal_events(self) -> Iterable[dict[str, Any]]:
        if not self.journal_path.exists():
            return
        with open(self.journal_path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
        for index, line in enumerate(lines):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                if index == len(lines) - 1:
                    # torn final write from a crash; drop it
                    return
                raise

    def _append_event(self, event: Mapping[str, Any]) -> None:
        line = json.dumps(event, ensure_ascii=False)
        with open(self.journal_path, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()
            os.fsync(handle.fileno())
        self._event_count += 1
        if self.snapshot_interval and self._event_count % self.snapshot_interval == 0:
            self._write_snapshot()

    def _write_snapshot(self) -> None:
        path = self.state_dir / f"snapshot-{self._event_count}.json"
        tmp = path.with_suffix(".tmp")
        payload = {
            "event_count": self._event_count,
            "items": {item_id: item.to_record() for item_id, item in self._items.items()},
        }
        tmp.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)

    # -- event application --------------------------------------------------

    def _apply(self, event: Mapping[str, Any]) -> None:
        kind = event.get("type")
        if kind == "flag":
            sample = record_to_sample(event["sample"], strict=False)
            reasons = [r for r in event.get("reasons", ()) if r in FLAG_REASONS]
            existing = self._items.get(sample.id)
            if existing is None:
                self._items[sample.id] = ReviewItem(
                    sample=sample, flags=tuple(sorted(set(reasons)))
                )
            else:
                merged = tuple(sorted(set(existing.flags) | set(reasons)))
                self._items[sample.id] = replace(existing, flags=merged)
        elif kind == "decision":
            self._apply_decision(event)
        else:
            raise ValueError(f"unknown journal event type {kind!r}")

    def _apply_decision(self, event: Mapping[str, Any]) -> None:
        item = self._items[event["item_id"]]
        action = event["action"]
        payload = event.get("payload") or {}
        entry = LogEntry(
            timestamp=event.get("timestamp", 0.0),
            reviewer_id=event.get("reviewer_id", ""),
            action=action,
            diff=payload.get("diff", {}),
        )
        if action == "accept":
            status, working = "accepted", item.working
        elif action == "discard":
            status, working = "discarded", item.working
        elif action == "edit":
            status = "edited"
            working = replace(
                item.sample,
                solution=payload.get("new_solution", item.sample.solution),
                gold_answer=payload.get("new_answer", item.sample.gold_answer),
            )
        else:
            raise ValueError(f"unknown decision action {action!r}")
        self._items[item.sample.id] = replace(
            item,
            status=status,
            working=working,
            version=item.version + 1,
            decision_log=item.decision_log + (entry,),
        )

    # -- public API -----------------------------------------------------------

    def flag(self, sample: Sample, reasons: Sequence[str]) -> ReviewItem:
        bad = [r for r in reasons if r not in FLAG_REASONS]
        if bad:
            raise CriteriaError(f"unknown flag reasons {bad}")
        with self._lock:
            already = self._items.get(sample.id)
            if already is not None and set(reasons) <= set(already.flags):
                return already  # idempotent re-flag, no new event
            event = {
                "type": "flag",
                "sample": sample_to_record(sample),
                "reasons": sorted(set(reasons)),
            }
            self._apply(event)
            self._append_event(event)
            return self._items[sample.id]

    def flag_from_criteria(
        self,
        corpus: Sequence[Sample],
        criteria: Sequence[FlagCriterion],
        eval_report: EvalReport | None = None,
    ) -> int:
        """Flag every matching sample; returns how many items are now queued."""
        matches = flag_samples(corpus, criteria, eval_report)
        by_id = {sample.id: sample for sample in corpus}
        for item_id in sorted(matches):
            self.flag(by_id[item_id], matches[item_id])
        return len(matches)

    def decide(
        self,
        item_id: str,
        action: str,
        reviewer_id: str,
        payload: Mapping[str, Any] | None = None,
        version: int | None = None,
    ) -> ReviewItem:
        """Apply one decision; raises ConflictError on races, ValidationFailed
        on bad edits, KeyError on unknown items."""
        payload = dict(payload or {})
        with self._lock:
            item = self._items.get(item_id)
            if item is None:
                raise KeyError(item_id)
            if item.status != "pending":
                raise ConflictError(f"item {item_id} already {item.status}")
            if version is not None and version != item.version:
                raise ConflictError(
                    f"stale version {version}; item {item_id} is at {item.version}"
                )
            if action == "edit":
                new_solution = payload.get("new_solution")
                new_answer = payload.get("new_answer")
                if new_solution is None and new_answer is None:
                    raise ValidationFailed([("edit-empty", "edit changes nothing")])
                candidate = replace(
                    item.sample,
                    solution=new_solution if new_solution is not None else item.sample.solution,
                    gold_answer=new_answer if new_answer is not None else item.sample.gold_answer,
                )
                report = validate_sample(candidate)
                if not report.ok:
                    raise ValidationFailed(report.violations)
                payload["diff"] = _edit_diff(item.sample, candidate)
            elif action not in ("accept", "discard"):
                raise ValidationFailed([("action", f"unknown action {action!r}")])
            event = {
                "type": "decision",
                "item_id": item_id,
                "action": action,
                "payload": payload,
                "reviewer_id": reviewer_id,
                "version": item.version,
                "timestamp": time.time(),
            }
            self._apply(event)
            self._append_event(event)
            return self._items[item_id]

    def get(self, item_id: str) -> ReviewItem:
        with self._lock:
            item = self._items.get(item_id)
            if item is None:
                raise KeyError(item_id)
            return item

    def items(self, status: str | None = None) -> list[ReviewItem]:
        with self._lock:
            items = sorted(self._items.values(), key=lambda item: item.sample.id)
        if status is not None:
            if status not in _STATUSES:
                raise ValueError(f"unknown status {status!r}")
            items = [item for item in items if item.status == status]
        return items

    def stats(self) -> ReviewQueueStats:
        with self._lock:
            counts = {status: 0 for status in _STATUSES}
            for item in self._items.values():
                counts[item.status] += 1
        return ReviewQueueStats(**counts)

    def snapshot_now(self) -> None:
        with self._lock:
            self._write_snapshot()


def _edit_diff(original: Sample, edited: Sample) -> dict[str, list[Any]]:
    diff: dict[str, list[Any]] = {}
    if original.solution != edited.solution:
        diff["solution"] = [original.solution, edited.solution]
    if original.gold_answer != edited.gold_answer:
        diff["gold_answer"] = [original.gold_answer, edited.gold_answer]
    return diff


def export_reviewed(
    store: ReviewStore, base_corpus: Sequence[Sample]
) -> tuple[list[Sample], ReviewQueueStats]:
    """Apply review outcomes to a corpus.

    Discarded items are removed; edited items are replaced by their working
    copies; still-pending items pass through unchanged apart from a
    provenance note carrying their flags.
    """
    exported: list[Sample] = []
    for sample in base_corpus:
        try:
            item = store.get(sample.id)
        except KeyError:
            exported.append(sample)
            continue
        if item.status == "discarded":
            continue
        if item.status == "edited" and item.working is not None:
            exported.append(
                item.working.with_provenance(
                    "review", {"status": "edited", "flags": list(item.flags)}
                )
            )
        elif item.status == "pending":
            exported.append(
                sample.with_provenance(
                    "review", {"status": "pending", "flags": list(item.flags)}
                )
            )
        else:  # accepted
            exported.append(
                sample.with_provenance(
                    "review", {"status": "accepted", "flags": list(item.flags)}
                )
            )
    return exported, store.stats()
