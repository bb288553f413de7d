"""Training mixtures, holdout splits, and masked-completion preparation.

Everything here is a pure function of (inputs, seed): mixes shuffle with a
seeded PRNG after sorting by id, splits sample from id-sorted pools, and
masking derives one PRNG per record from the plan seed and the record id, so
results are independent of processing order.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .corpus import SOURCE_TAGS, Sample
from .syntax import RenderedRecord
from .tokenizers import Tokenizer


class MixError(Exception):
    pass


class SplitError(Exception):
    pass


class MaskError(Exception):
    pass


@dataclass(frozen=True)
class MixSpec:
    """One training-mix configuration.

    ``exclude_fallback`` drops samples accepted only via the
    transcript-fallback distillation phase (the "no video" variant).
    """

    sources: tuple[str, ...]
    seed: int = 0
    dedupe: bool = True
    exclude_fallback: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        if not self.sources:
            raise MixError("mix spec needs at least one source")
        unknown = [tag for tag in self.sources if tag not in SOURCE_TAGS]
        if unknown:
            raise MixError(f"unknown source tags {unknown}; expected subset of {SOURCE_TAGS}")
        if not self.name:
            object.__setattr__(self, "name", "+".join(self.sources))


def enumerate_mix_experiments(seed: int = 0, dedupe: bool = True) -> list[MixSpec]:
    """The seven source-mix configurations benchmarked against each other."""
    return [
        MixSpec(sources=("CR", "MR", "CV"), seed=seed, dedupe=dedupe, name="CR+MR+CV"),
        MixSpec(sources=("CR", "CV"), seed=seed, dedupe=dedupe, name="CR+CV"),
        MixSpec(sources=("MR", "CV"), seed=seed, dedupe=dedupe, name="MR+CV"),
        MixSpec(sources=("MR", "CR"), seed=seed, dedupe=dedupe, name="MR+CR"),
        MixSpec(sources=("MR",), seed=seed, dedupe=dedupe, name="MR"),
        MixSpec(sources=("CR",), seed=seed, dedupe=dedupe, name="CR"),
        MixSpec(
            sources=("MR",),
            seed=seed,
            dedupe=dedupe,
            exclude_fallback=True,
            name="MR (No Video)",
        ),
    ]


def dedupe_key(question_text: str) -> str:
    """Content hash for dedupe: case-folded, whitespace-collapsed question."""
    normalized = re.sub(r"\s+", " ", question_text).strip().casefold()
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


def _distill_phase(sample: Sample) -> str | None:
    provenance = sample.provenance or {}
    distill = provenance.get("distill")
    if isinstance(distill, Mapping):
        phase = distill.get("phase")
        return str(phase) if phase is not None else None
    return None


def mix(
    corpora: Mapping[str, Sequence[Sample]], spec: MixSpec
) -> tuple[list[Sample], dict[str, Any]]:
    """Union the selected sources, dedupe, and shuffle deterministically.

    Returns the mixed corpus and a manifest record (spec, seed, per-source
    counts, dedupe drops). On duplicate question text the survivor is the
    sample with the lexicographically-first source tag (then first id).
    """
    missing = [tag for tag in spec.sources if tag not in corpora]
    if missing:
        raise MixError(f"no corpus supplied for sources {missing}")
    pool: list[Sample] = []
    per_source_counts: dict[str, int] = {}
    fallback_dropped = 0
    for tag in spec.sources:
        for sample in corpora[tag]:
            if sample.source_tag != tag:
                raise MixError(
                    f"sample {sample.id!r} has source_tag {sample.source_tag!r}, "
                    f"expected {tag!r}"
                )
            if spec.exclude_fallback and _distill_phase(sample) == "fallback":
                fallback_dropped += 1
                continue
            pool.append(sample)
            per_source_counts[tag] = per_source_counts.get(tag, 0) + 1

    dedupe_dropped = 0
    if spec.dedupe:
        best: dict[str, Sample] = {}
        for sample in pool:
            key = dedupe_key(sample.question_text)
            incumbent = best.get(key)
            if incumbent is None or (sample.source_tag, sample.id) < (
                incumbent.source_tag,
                incumbent.id,
            ):
                best[key] = sample
        dedupe_dropped = len(pool) - len(best)
        pool = list(best.values())

    pool.sort(key=lambda s: s.id)
    random.Random(spec.seed).shuffle(pool)
    manifest = {
        "spec": {
            "name": spec.name,
            "sources": list(spec.sources),
            "seed": spec.seed,
            "dedupe": spec.dedupe,
            "exclude_fallback": spec.exclude_fallback,
        },
        "seed": spec.seed,
        "per_source_counts": dict(sorted(per_source_counts.items())),
        "dedupe_dropped": dedupe_dropped,
        "fallback_dropped": fallback_dropped,
        "output_count": len(pool),
    }
    return pool, manifest


@dataclass(frozen=True)
class SplitSpec:
    holdout_count: int
    seed: int = 0
    stratify_by: str = "none"  # none | topic

    def __post_init__(self) -> None:
        if self.holdout_count < 1:
            raise SplitError("holdout_count must be positive")
        if self.stratify_by not in ("none", "topic"):
            raise SplitError(f"unknown stratify_by {self.stratify_by!r}")


def _largest_remainder_quotas(
    group_sizes: Mapping[str, int], holdout: int
) -> dict[str, int]:
    """Proportional allocation with largest-remainder rounding.

    Ties on remainder break toward larger groups, then lexicographic key.
    """
    total = sum(group_sizes.values())
    exact = {key: holdout * size / total for key, size in group_sizes.items()}
    quotas = {key: math.floor(value) for key, value in exact.items()}
    leftover = holdout - sum(quotas.values())
    order = sorted(
        group_sizes,
        key=lambda key: (-(exact[key] - quotas[key]), -group_sizes[key], key),
    )
    for key in order[:leftover]:
        quotas[key] += 1
    return quotas


def split_holdout(
    corpus: Sequence[Sample], spec: SplitSpec
) -> tuple[list[Sample], list[Sample]]:
    """Partition a corpus into (train, test) with |test| = holdout_count.

    Topic-stratified splits allocate per-topic holdout quotas proportionally
    (largest-remainder rounding) and require topic metadata on every sample.
    Output preserves corpus order within each side.
    """
    if spec.holdout_count >= len(corpus):
        raise SplitError(
            f"holdout_count {spec.holdout_count} must be smaller than corpus "
            f"size {len(corpus)}"
        )
    ids = [sample.id for sample in corpus]
    if len(set(ids)) != len(ids):
        raise SplitError("corpus has duplicate ids; cannot split")
    rng = random.Random(spec.seed)
    if spec.stratify_by == "topic":
        by_topic: dict[str, list[str]] = {}
        for sample in corpus:
            topic = sample.topic_id()
            if topic is None:
                raise SplitError(
                    f"sample {sample.id!r} lacks topic metadata; required for "
                    "stratified split"
                )
            by_topic.setdefault(topic, []).append(sample.id)
        quotas = _largest_remainder_quotas(
            {topic: len(members) for topic, members in by_topic.items()},
            spec.holdout_count,
        )
        test_ids: set[str] = set()
        for topic in sorted(by_topic):
            members = sorted(by_topic[topic])
            test_ids.update(rng.sample(members, quotas[topic]))
    else:
        test_ids = set(rng.sample(sorted(ids), spec.holdout_count))
    train = [sample for sample in corpus if sample.id not in test_ids]
    test = [sample for sample in corpus if sample.id in test_ids]
    return train, test


@dataclass(frozen=True)
class MaskPlan:
    ratio: float
    seed: int = 0
    rounding: str = "round"  # round | floor

    def __post_init__(self) -> None:
        if not 0.0 <= self.ratio <= 1.0:
            raise MaskError("mask ratio must be within [0, 1]")
        if self.rounding not in ("round", "floor"):
            raise MaskError(f"unknown rounding {self.rounding!r}")


@dataclass(frozen=True)
class MaskedRecord:
    """A rendered record plus mask metadata.

    ``mask_indices`` are completion-token indices (0-based, relative to the
    completion start); the text itself is never modified — the trainer owns
    token vocabulary and applies the masks.
    """

    sample_id: str
    text: str
    prompt_end_offset: int
    config: str
    mask_indices: tuple[int, ...]
    tokenizer_id: str

    def to_record(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "text": self.text,
            "prompt_end_offset": self.prompt_end_offset,
            "config": self.config,
            "mask_indices": list(self.mask_indices),
            "tokenizer_id": self.tokenizer_id,
        }


def _record_rng(seed: int, sample_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{sample_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _masked_count(ratio: float, n_tokens: int, rounding: str) -> int:
    if rounding == "floor":
        return math.floor(ratio * n_tokens)
    return math.floor(ratio * n_tokens + 0.5)


def mask_completions(
    records: Sequence[RenderedRecord],
    plan: MaskPlan,
    tokenizer: Tokenizer,
    tokenizer_id: str,
) -> list[MaskedRecord]:
    """Select masked completion-token indices for every record.

    k = rounding(ratio * n_completion_tokens) distinct indices per record,
    drawn by a per-record seeded PRNG; prompt-region tokens are never
    eligible.
    """
    masked: list[MaskedRecord] = []
    for record in records:
        if record.prompt_end_offset is None:  # defensive; RenderedRecord requires it
            raise MaskError(f"record {record.sample_id!r} lacks prompt_end_offset")
        completion = record.completion_text()
        n_tokens = tokenizer(completion)
        k = _masked_count(plan.ratio, n_tokens, plan.rounding)
        rng = _record_rng(plan.seed, record.sample_id)
        indices = tuple(sorted(rng.sample(range(n_tokens), k))) if k else ()
        masked.append(
            MaskedRecord(
                sample_id=record.sample_id,
                text=record.text,
                prompt_end_offset=record.prompt_end_offset,
                config=record.config,
                mask_indices=indices,
                tokenizer_id=tokenizer_id,
            )
        )
    return masked


def write_masked(records: Iterable[MaskedRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record.to_record(), ensure_ascii=False))
            handle.write("\n")
