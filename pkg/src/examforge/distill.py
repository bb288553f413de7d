"""Teacher-model distillation campaigns with rejection filtering.

A campaign walks a corpus item by item. Each item gets up to
``primary_candidates`` teacher generations; the first candidate that passes
the keyword rejection filter is accepted. Items whose primaries all fail may
enter a fallback phase that injects an explanation transcript into the prompt
and regenerates up to ``fallback_candidates`` more; items failing both phases
are excluded. Adapter failures (network, after bounded retries) mark the item
errored, which is tracked separately from filter exclusion.

Repair campaigns rerun previously flagged items with a stricter acceptance
test: the candidate must pass the filter AND end with the item's gold answer.

The shipped ``rejection_keywords.txt`` is a documented placeholder list of
speculation/meta-commentary markers, not a canonical artifact.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .adapters import AdapterError, TeacherAdapter
from .config import load_config
from .corpus import Sample
from .evalbench import extract_answer
from .textfold import fold_text

CANDIDATE_CEILING = 64

DEFAULT_PRIMARY_PROMPT = (
    "Solve this multiple-choice question. Show your derivation and finish "
    "with the answer letter.\n\n{question}\n{choices}"
)
DEFAULT_FALLBACK_PROMPT = (
    DEFAULT_PRIMARY_PROMPT
    + "\n\nA reference explanation transcript follows; use it to ground your "
    "derivation.\n---\n{transcript}"
)

# Placeholder speculation/meta-commentary markers; campaigns normally load a
# curated list from config.
DEFAULT_REJECTION_KEYWORDS = (
    "belki",
    "muhtemelen",
    "sanırım",
    "emin değilim",
    "tahmin ediyorum",
    "as an ai",
    "i cannot",
    "i'm not sure",
    "probably",
    "perhaps",
    "i guess",
)


class RejectionListError(ValueError):
    pass


@dataclass(frozen=True)
class RejectionList:
    """Keyword screen for teacher outputs; folded substring matching."""

    keywords: tuple[str, ...]
    fold_case: bool = True
    fold_diacritics: bool = True

    def __post_init__(self) -> None:
        if any(not kw for kw in self.keywords):
            raise RejectionListError("rejection keywords must be non-empty strings")
        folded = [self._fold(kw) for kw in self.keywords]
        if len(set(folded)) != len(folded):
            dupes = sorted({f for f in folded if folded.count(f) > 1})
            raise RejectionListError(f"keywords duplicate after folding: {dupes}")

    def _fold(self, text: str) -> str:
        return fold_text(text, self.fold_case, self.fold_diacritics)

    def folded_keywords(self) -> tuple[str, ...]:
        return tuple(self._fold(kw) for kw in self.keywords)

    @classmethod
    def from_file(
        cls, path: str | Path, fold_case: bool = True, fold_diacritics: bool = True
    ) -> "RejectionList":
        """Load keywords from a plain text file (one per line, # comments)."""
        keywords = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                keywords.append(line)
        return cls(
            keywords=tuple(keywords),
            fold_case=fold_case,
            fold_diacritics=fold_diacritics,
        )


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    matched_keyword: str | None = None


def check_rejection(text: str, rejection: RejectionList) -> Verdict:
    """Reject iff any folded keyword occurs in the folded text.

    The first matching keyword in list order is reported.
    """
    folded_text = fold_text(text, rejection.fold_case, rejection.fold_diacritics)
    for keyword, folded_keyword in zip(rejection.keywords, rejection.folded_keywords()):
        if folded_keyword in folded_text:
            return Verdict(accepted=False, matched_keyword=keyword)
    return Verdict(accepted=True)


@dataclass(frozen=True)
class DistillationPolicy:
    """Candidate counts and fallback rules for one campaign."""

    primary_candidates: int = 1
    fallback_candidates: int = 0
    fallback_context: str = "none"  # none | transcript
    repair_max_candidates: int = 0

    def __post_init__(self) -> None:
        if self.primary_candidates < 1:
            raise ValueError("primary_candidates must be positive")
        if self.fallback_candidates < 0 or self.repair_max_candidates < 0:
            raise ValueError("candidate counts must be non-negative")
        for name in ("primary_candidates", "fallback_candidates", "repair_max_candidates"):
            if getattr(self, name) > CANDIDATE_CEILING:
                raise ValueError(f"{name} exceeds ceiling of {CANDIDATE_CEILING}")
        if self.fallback_context not in ("none", "transcript"):
            raise ValueError(f"unknown fallback_context {self.fallback_context!r}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "DistillationPolicy":
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def from_file(cls, path: str | Path) -> "DistillationPolicy":
        data = load_config(path)
        return cls.from_mapping(data.get("policy", data))


# Single-pass profile for book-derived corpora; multi-candidate profile with
# transcript fallback for question banks that ship video explanations.
POLICY_PROFILES: dict[str, DistillationPolicy] = {
    "CR": DistillationPolicy(
        primary_candidates=1,
        fallback_candidates=0,
        fallback_context="none",
        repair_max_candidates=20,
    ),
    "MR": DistillationPolicy(
        primary_candidates=8,
        fallback_candidates=3,
        fallback_context="transcript",
        repair_max_candidates=0,
    ),
}


@dataclass(frozen=True)
class ItemOutcome:
    """Result of distilling one item."""

    item_id: str
    status: str  # accepted | excluded | errored
    attempts: int
    phase: str | None = None  # primary | fallback | repair (when accepted)
    solution: str | None = None
    matched_keyword: str | None = None  # last rejection, for excluded items
    error: str | None = None

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


@dataclass(frozen=True)
class CampaignReport:
    """Bookkeeping with the conservation identity.

    primary_accepted + fallback_accepted + excluded + errored == total.
    """

    total: int
    primary_accepted: int
    fallback_accepted: int
    excluded: int
    errored: int = 0
    per_item_logs: tuple[ItemOutcome, ...] = ()

    @property
    def accepted_total(self) -> int:
        return self.primary_accepted + self.fallback_accepted

    def check_conservation(self) -> bool:
        return (
            self.primary_accepted + self.fallback_accepted + self.excluded + self.errored
            == self.total
        )

    def to_record(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "primary_accepted": self.primary_accepted,
            "fallback_accepted": self.fallback_accepted,
            "excluded": self.excluded,
            "errored": self.errored,
            "accepted_total": self.accepted_total,
            "per_item_logs": [
                {
                    "item_id": log.item_id,
                    "status": log.status,
                    "attempts": log.attempts,
                    "phase": log.phase,
                    "matched_keyword": log.matched_keyword,
                    "error": log.error,
                }
                for log in self.per_item_logs
            ],
        }


def _render_prompt(template: str, item: Sample, transcript: str | None = None) -> str:
    choices = "\n".join(f"{letter}) {text}" for letter, text in item.choices or ())
    return template.format(
        question=item.question_text, choices=choices, transcript=transcript or ""
    )


def distill_item(
    item: Sample,
    policy: DistillationPolicy,
    teacher: TeacherAdapter,
    rejection: RejectionList,
    transcript: str | None = None,
    *,
    primary_prompt: str = DEFAULT_PRIMARY_PROMPT,
    fallback_prompt: str = DEFAULT_FALLBACK_PROMPT,
) -> ItemOutcome:
    """Run the primary and (if configured) fallback phases for one item.

    Attempts count candidate generations across both phases; the first
    filter-passing candidate wins. The fallback phase runs only when the
    policy asks for transcript context and a transcript is available.
    """
    attempts = 0
    last_keyword: str | None = None
    prompt = _render_prompt(primary_prompt, item)
    phases: list[tuple[str, int, str]] = [("primary", policy.primary_candidates, prompt)]
    if policy.fallback_context == "transcript" and policy.fallback_candidates > 0:
        if transcript is not None:
            phases.append(
                (
                    "fallback",
                    policy.fallback_candidates,
                    _render_prompt(fallback_prompt, item, transcript),
                )
            )
    for phase, count, phase_prompt in phases:
        for _ in range(count):
            attempts += 1
            try:
                candidate = teacher.generate(
                    phase_prompt, item.image_refs, attempts, item_id=item.id
                )
            except AdapterError as exc:
                return ItemOutcome(
                    item_id=item.id,
                    status="errored",
                    attempts=attempts,
                    error=str(exc),
                )
            verdict = check_rejection(candidate, rejection)
            if verdict.accepted:
                return ItemOutcome(
                    item_id=item.id,
                    status="accepted",
                    attempts=attempts,
                    phase=phase,
                    solution=candidate,
                )
            last_keyword = verdict.matched_keyword
    return ItemOutcome(
        item_id=item.id,
        status="excluded",
        attempts=attempts,
        matched_keyword=last_keyword,
    )


def run_campaign(
    corpus: Sequence[Sample],
    policy: DistillationPolicy,
    teacher: TeacherAdapter,
    rejection: RejectionList,
    transcripts: Mapping[str, str] | None = None,
    *,
    parallelism: int = 1,
    primary_prompt: str = DEFAULT_PRIMARY_PROMPT,
    fallback_prompt: str = DEFAULT_FALLBACK_PROMPT,
) -> tuple[CampaignReport, list[Sample]]:
    """Distill a whole corpus; returns the report and the accepted corpus.

    Accepted samples carry the accepted solution plus phase/attempt
    provenance. Per-item logs are ordered by item id for reproducible output;
    accepted samples keep corpus order.
    """
    transcripts = transcripts or {}

    def work(item: Sample) -> ItemOutcome:
        return distill_item(
            item,
            policy,
            teacher,
            rejection,
            transcripts.get(item.id),
            primary_prompt=primary_prompt,
            fallback_prompt=fallback_prompt,
        )

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(work, corpus))
    else:
        outcomes = [work(item) for item in corpus]

    by_id = {outcome.item_id: outcome for outcome in outcomes}
    accepted_samples: list[Sample] = []
    counts = {"primary": 0, "fallback": 0, "excluded": 0, "errored": 0}
    for item, outcome in zip(corpus, outcomes):
        if outcome.accepted:
            counts[outcome.phase] += 1  # type: ignore[index]
            accepted_samples.append(
                replace(item, solution=outcome.solution).with_provenance(
                    "distill", {"phase": outcome.phase, "attempts": outcome.attempts}
                )
            )
        elif outcome.status == "errored":
            counts["errored"] += 1
        else:
            counts["excluded"] += 1
    report = CampaignReport(
        total=len(corpus),
        primary_accepted=counts["primary"],
        fallback_accepted=counts["fallback"],
        excluded=counts["excluded"],
        errored=counts["errored"],
        per_item_logs=tuple(by_id[item_id] for item_id in sorted(by_id)),
    )
    return report, accepted_samples


@dataclass(frozen=True)
class RepairReport:
    flagged: int
    recovered: int
    unrecovered: int
    errored: int = 0
    per_item_logs: tuple[ItemOutcome, ...] = ()

    def check_conservation(self) -> bool:
        return self.recovered + self.unrecovered + self.errored == self.flagged

    def to_record(self) -> dict[str, Any]:
        return {
            "flagged": self.flagged,
            "recovered": self.recovered,
            "unrecovered": self.unrecovered,
            "errored": self.errored,
            "per_item_logs": [
                {
                    "item_id": log.item_id,
                    "status": log.status,
                    "attempts": log.attempts,
                    "matched_keyword": log.matched_keyword,
                    "error": log.error,
                }
                for log in self.per_item_logs
            ],
        }


def repair_item(
    item: Sample,
    policy: DistillationPolicy,
    teacher: TeacherAdapter,
    rejection: RejectionList,
    *,
    prompt_template: str = DEFAULT_PRIMARY_PROMPT,
) -> ItemOutcome:
    """Regenerate a flagged item; acceptance needs filter pass AND the
    candidate's final answer letter to equal the item's gold answer."""
    attempts = 0
    last_keyword: str | None = None
    prompt = _render_prompt(prompt_template, item)
    for _ in range(policy.repair_max_candidates):
        attempts += 1
        try:
            candidate = teacher.generate(prompt, item.image_refs, attempts, item_id=item.id)
        except AdapterError as exc:
            return ItemOutcome(
                item_id=item.id, status="errored", attempts=attempts, error=str(exc)
            )
        verdict = check_rejection(candidate, rejection)
        if not verdict.accepted:
            last_keyword = verdict.matched_keyword
            continue
        if extract_answer(candidate) == item.gold_answer:
            return ItemOutcome(
                item_id=item.id,
                status="accepted",
                attempts=attempts,
                phase="repair",
                solution=candidate,
            )
    return ItemOutcome(
        item_id=item.id,
        status="excluded",
        attempts=attempts,
        matched_keyword=last_keyword,
    )


def run_repair(
    corpus_subset: Sequence[Sample],
    policy: DistillationPolicy,
    teacher: TeacherAdapter,
    rejection: RejectionList,
    *,
    parallelism: int = 1,
    prompt_template: str = DEFAULT_PRIMARY_PROMPT,
) -> tuple[RepairReport, list[Sample]]:
    """Repair a flagged subset; recovered samples carry repair provenance."""

    def work(item: Sample) -> ItemOutcome:
        return repair_item(item, policy, teacher, rejection, prompt_template=prompt_template)

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(work, corpus_subset))
    else:
        outcomes = [work(item) for item in corpus_subset]

    recovered_samples: list[Sample] = []
    counts = {"accepted": 0, "excluded": 0, "errored": 0}
    for item, outcome in zip(corpus_subset, outcomes):
        counts[outcome.status] += 1
        if outcome.accepted:
            recovered_samples.append(
                replace(item, solution=outcome.solution).with_provenance(
                    "distill", {"phase": "repair", "attempts": outcome.attempts}
                )
            )
    by_id = {outcome.item_id: outcome for outcome in outcomes}
    report = RepairReport(
        flagged=len(corpus_subset),
        recovered=counts["accepted"],
        unrecovered=counts["excluded"],
        errored=counts["errored"],
        per_item_logs=tuple(by_id[item_id] for item_id in sorted(by_id)),
    )
    return report, recovered_samples


def malformed_rate(flagged: int, total: int) -> float:
    """Fraction of flagged items; format with :func:`format_percent`."""
    if total <= 0:
        raise ValueError("total must be positive")
    if flagged < 0:
        raise ValueError("flagged must be non-negative")
    return flagged / total


def format_percent(ratio: float) -> str:
    """Render a ratio as a percentage with two decimals, e.g. '8.05%'."""
    return f"{ratio * 100:.2f}%"


def write_campaign_report(report: CampaignReport | RepairReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_record(), ensure_ascii=False, indent=2) + "\n")
