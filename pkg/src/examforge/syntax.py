"""Tagged training-text composition and parsing.

Training text is a sequence of ``<tag>body</tag>`` blocks in the fixed
canonical order question, meta, think, solution, answer, restricted to the
components a :class:`SyntaxConfig` selects. Solution and answer are present
in every configuration. Blocks are separated by exactly one newline; the
parser tolerates arbitrary inter-block whitespace and, in compat mode, input
where a block is terminated by the next open tag rather than a close tag.

The question body is the question text plus one ``X) option`` line per
choice; the meta body is three labeled lines (subject, unit, objective); the
answer body is a single letter A-E.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import OPTION_LETTERS, Sample

COMPONENT_ORDER = ("Q", "M", "T", "S", "A")
COMPONENT_TAGS = {
    "Q": "question",
    "M": "meta",
    "T": "think",
    "S": "solution",
    "A": "answer",
}
TAG_COMPONENTS = {tag: comp for comp, tag in COMPONENT_TAGS.items()}
CANONICAL_TAGS = tuple(COMPONENT_TAGS[c] for c in COMPONENT_ORDER)

_ALL_TAG_TOKENS = tuple(
    token for tag in CANONICAL_TAGS for token in (f"<{tag}>", f"</{tag}>")
)


class TaggedTextError(Exception):
    """Base class for composition/parsing failures."""


class ComposeError(TaggedTextError):
    def __init__(self, component: str, sample_id: str, message: str):
        self.component = component
        self.sample_id = sample_id
        super().__init__(f"sample {sample_id!r}, component {component}: {message}")


class MissingFieldError(ComposeError):
    pass


class ParseError(TaggedTextError):
    """Parsing failure; ``kind`` and UTF-8 ``byte_offset`` locate it."""

    kind = "parse"

    def __init__(self, text: str, char_offset: int, message: str):
        self.byte_offset = len(text[:char_offset].encode("utf-8"))
        super().__init__(f"{message} (byte offset {self.byte_offset})")


class DuplicateTagError(ParseError):
    kind = "duplicate-tag"


class UnknownTagError(ParseError):
    kind = "unknown-tag"


class TagOrderError(ParseError):
    kind = "out-of-order"


class UnclosedTagError(ParseError):
    kind = "unclosed-tag"


class StrayTextError(ParseError):
    kind = "stray-text"


@dataclass(frozen=True)
class SyntaxConfig:
    """An ordered subset of Q, M, T, S, A; S and A always included."""

    components: tuple[str, ...]

    def __post_init__(self) -> None:
        unknown = [c for c in self.components if c not in COMPONENT_ORDER]
        if unknown:
            raise ValueError(f"unknown syntax components {unknown}")
        if len(set(self.components)) != len(self.components):
            raise ValueError(f"repeated syntax components in {self.components}")
        ordered = tuple(c for c in COMPONENT_ORDER if c in self.components)
        if "S" not in ordered or "A" not in ordered:
            raise ValueError("syntax config must include S and A")
        object.__setattr__(self, "components", ordered)

    @classmethod
    def parse(cls, spec: str) -> "SyntaxConfig":
        return cls(components=tuple(spec.strip().upper()))

    def __str__(self) -> str:
        return "".join(self.components)

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(COMPONENT_TAGS[c] for c in self.components)


def enumerate_experiment_configs() -> list[SyntaxConfig]:
    """The seven syntax configurations benchmarked against each other."""
    return [
        SyntaxConfig.parse(spec)
        for spec in ("QMSA", "QMTSA", "MTSA", "QSA", "QTSA", "TSA", "SA")
    ]


def _question_body(sample: Sample) -> str:
    lines = [sample.question_text]
    for letter, text in sample.choices or ():
        lines.append(f"{letter}) {text}")
    return "\n".join(lines)


def _meta_body(sample: Sample) -> str:
    meta = sample.meta
    assert meta is not None
    return f"subject: {meta.subject}\nunit: {meta.unit}\nobjective: {meta.objective}"


def project(sample: Sample, config: SyntaxConfig) -> dict[str, str]:
    """The component bodies a sample renders to under a config, keyed by tag.

    Raises :class:`MissingFieldError` when the sample lacks a required field.
    """
    bodies: dict[str, str] = {}
    for component in config.components:
        tag = COMPONENT_TAGS[component]
        if component == "Q":
            bodies[tag] = _question_body(sample)
        elif component == "M":
            if sample.meta is None:
                raise MissingFieldError("M", sample.id, "meta required but absent")
            bodies[tag] = _meta_body(sample)
        elif component == "T":
            if sample.think is None:
                raise MissingFieldError("T", sample.id, "think required but absent")
            bodies[tag] = sample.think
        elif component == "S":
            if sample.solution is None:
                raise MissingFieldError("S", sample.id, "solution required but absent")
            bodies[tag] = sample.solution
        else:  # A
            if sample.gold_answer is None:
                raise MissingFieldError("A", sample.id, "gold_answer required but absent")
            if sample.gold_answer not in OPTION_LETTERS:
                raise ComposeError(
                    "A", sample.id, f"gold_answer {sample.gold_answer!r} outside A-E"
                )
            bodies[tag] = sample.gold_answer
    return bodies


@dataclass(frozen=True)
class RenderedText:
    text: str
    config: SyntaxConfig
    sample_id: str


def compose(sample: Sample, config: SyntaxConfig) -> RenderedText:
    """Render a sample to tagged text; blocks joined by single newlines.

    Bodies must not contain canonical tag tokens — the format has no escape
    syntax, so such samples are rejected rather than silently producing
    unparseable text.
    """
    bodies = project(sample, config)
    for tag, body in bodies.items():
        for token in _ALL_TAG_TOKENS:
            if token in body:
                raise ComposeError(
                    TAG_COMPONENTS[tag],
                    sample.id,
                    f"body contains reserved token {token!r}",
                )
    text = "\n".join(f"<{tag}>{bodies[tag]}</{tag}>" for tag in config.tags)
    return RenderedText(text=text, config=config, sample_id=sample.id)


_OPEN_TAG_RE = re.compile("|".join(f"<{tag}>" for tag in CANONICAL_TAGS))


def parse(text: str, *, compat: bool = False) -> dict[str, str]:
    """Extract the ``{tag: body}`` map from tagged text.

    Strict mode requires explicit close tags; compat mode also accepts
    close-less blocks terminated by the next open tag or end of input.
    Distinct error kinds: duplicate-tag, unknown-tag, out-of-order,
    unclosed-tag, stray-text; all carry a byte offset.
    """
    result: dict[str, str] = {}
    pos = 0
    last_index = -1
    n = len(text)
    while pos < n:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        if text[pos] != "<":
            raise StrayTextError(text, pos, f"unexpected text {text[pos:pos+20]!r}")
        open_match = re.match(r"<([a-zA-Z][a-zA-Z0-9_-]*)>", text[pos:])
        if not open_match:
            raise UnknownTagError(text, pos, f"malformed tag at {text[pos:pos+20]!r}")
        tag = open_match.group(1)
        if tag not in TAG_COMPONENTS:
            raise UnknownTagError(text, pos, f"unknown tag <{tag}>")
        if tag in result:
            raise DuplicateTagError(text, pos, f"duplicate tag <{tag}>")
        index = CANONICAL_TAGS.index(tag)
        if index <= last_index:
            raise TagOrderError(
                text, pos, f"tag <{tag}> out of canonical order Q,M,T,S,A"
            )
        body_start = pos + open_match.end()
        close_token = f"</{tag}>"
        close_at = text.find(close_token, body_start)
        if close_at != -1:
            body, next_pos = text[body_start:close_at], close_at + len(close_token)
        elif compat:
            nxt = _OPEN_TAG_RE.search(text, body_start)
            end = nxt.start() if nxt else n
            body, next_pos = text[body_start:end].rstrip("\n"), end
        else:
            raise UnclosedTagError(text, pos, f"tag <{tag}> never closed")
        result[tag] = body
        last_index = index
        pos = next_pos
    return result


@dataclass(frozen=True)
class RenderedRecord:
    """One rendered training record with its prompt/completion boundary.

    ``prompt_end_offset`` is a UTF-8 byte offset into ``text``: everything
    before it (the question block and trailing newline, when present) is the
    prompt region, everything after is the completion region.
    """

    sample_id: str
    text: str
    prompt_end_offset: int
    config: str

    def completion_text(self) -> str:
        return self.text.encode("utf-8")[self.prompt_end_offset :].decode("utf-8")

    def to_record(self) -> dict[str, object]:
        return {
            "sample_id": self.sample_id,
            "text": self.text,
            "prompt_end_offset": self.prompt_end_offset,
            "config": self.config,
        }


def render_dataset(
    corpus: Iterable[Sample], config: SyntaxConfig
) -> tuple[list[RenderedRecord], list[tuple[str, str]]]:
    """Render a corpus to training records.

    The prompt region is the question block (image attachments travel
    separately by reference); all remaining components form the completion.
    Samples missing a required field are skipped and reported as
    ``(sample_id, reason)`` rather than failing the batch.
    """
    records: list[RenderedRecord] = []
    skipped: list[tuple[str, str]] = []
    for sample in corpus:
        try:
            rendered = compose(sample, config)
        except ComposeError as exc:
            skipped.append((sample.id, str(exc)))
            continue
        if "Q" in config.components:
            question_block = f"<question>{_question_body(sample)}</question>\n"
            offset = len(question_block.encode("utf-8"))
        else:
            offset = 0
        records.append(
            RenderedRecord(
                sample_id=sample.id,
                text=rendered.text,
                prompt_end_offset=offset,
                config=str(config),
            )
        )
    return records, skipped


def write_rendered(records: Sequence[RenderedRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record.to_record(), ensure_ascii=False))
            handle.write("\n")


def read_rendered(path: str | Path) -> list[RenderedRecord]:
    records: list[RenderedRecord] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            raw = json.loads(line)
            try:
                records.append(
                    RenderedRecord(
                        sample_id=raw["sample_id"],
                        text=raw["text"],
                        prompt_end_offset=int(raw["prompt_end_offset"]),
                        config=raw["config"],
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: bad rendered record: {exc}") from None
    return records
