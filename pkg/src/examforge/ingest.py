"""Article extraction from HTML/markdown study material.

The pipeline per document: locate the main article container (per-site
selector allowlist, falling back to a text-to-tag density heuristic), strip
boilerplate, convert to markdown with ``![](path)`` placeholders for images,
normalize math-renderer markup back to its source notation, capture the
paragraph before and after every image, register embedded slide decks, and
scan for labeled question/solution/answer blocks.

Slide decks are pre-rendered elsewhere; an embed is any element carrying a
``data-deck-id`` attribute plus ``data-page-count`` and ``data-page-prefix``,
from which page-image references are enumerated.

Parsing is stdlib-only (``html.parser``); documents are independent, so the
batch runner fans out over a bounded thread pool and merges reports
associatively.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .corpus import Sample
from .textfold import fold_text

logger = logging.getLogger(__name__)

_VOID_TAGS = frozenset(
    {"img", "br", "hr", "meta", "link", "input", "source", "area", "base", "col", "embed", "track", "wbr"}
)
_HEADINGS = {"h1": 1, "h2": 2, "h3": 3, "h4": 4, "h5": 5, "h6": 6}
_PARA_TAGS = frozenset({"p", "blockquote", "pre"})
_CONTAINER_TAGS = frozenset(
    {"div", "section", "article", "main", "body", "html", "figure", "header", "td", "th"}
)
_DEFAULT_CONTAINERS = ("article", "main", "#content", ".post-body", ".entry-content")
_DEFAULT_STRIP = (
    "nav",
    "footer",
    "aside",
    "header",
    "script",
    "style",
    "form",
    ".ads",
    ".advertisement",
    ".sidebar",
    "#sidebar",
    ".comments",
    ".share",
)


class IngestError(Exception):
    pass


class EmptyBodyError(IngestError):
    """No article container with text content was found."""


@dataclass(frozen=True)
class SiteRules:
    """Per-site extraction settings (container allowlist, triplet labels)."""

    container_selectors: tuple[str, ...] = _DEFAULT_CONTAINERS
    strip_selectors: tuple[str, ...] = _DEFAULT_STRIP
    question_labels: tuple[str, ...] = ("Soru", "Question")
    solution_labels: tuple[str, ...] = ("Çözüm", "Cozum", "Solution")
    answer_labels: tuple[str, ...] = ("Cevap", "Answer")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SiteRules":
        kwargs: dict[str, Any] = {}
        for name in cls.__dataclass_fields__:
            if name in data:
                kwargs[name] = tuple(data[name])
        return cls(**kwargs)


@dataclass(frozen=True)
class ImageContext:
    image_ref: str
    before_paragraph: str = ""
    after_paragraph: str = ""
    caption: str | None = None

    def to_record(self) -> dict[str, Any]:
        return {
            "image_ref": self.image_ref,
            "before_paragraph": self.before_paragraph,
            "after_paragraph": self.after_paragraph,
            "caption": self.caption,
        }


@dataclass(frozen=True)
class QsaTriplet:
    question: str
    solution: str
    answer: str

    def to_record(self) -> dict[str, Any]:
        return {"question": self.question, "solution": self.solution, "answer": self.answer}


@dataclass(frozen=True)
class SlideDeckRef:
    deck_id: str
    page_count: int
    page_image_refs: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.page_count < 1:
            raise IngestError(f"deck {self.deck_id!r}: page_count must be positive")
        if len(self.page_image_refs) != self.page_count:
            raise IngestError(
                f"deck {self.deck_id!r}: {len(self.page_image_refs)} page refs "
                f"for page_count {self.page_count}"
            )

    def to_record(self) -> dict[str, Any]:
        return {
            "deck_id": self.deck_id,
            "page_count": self.page_count,
            "page_image_refs": list(self.page_image_refs),
        }


@dataclass(frozen=True)
class ArticleDoc:
    doc_id: str
    markdown_body: str
    images: tuple[ImageContext, ...] = ()
    triplets: tuple[QsaTriplet, ...] = ()
    slide_refs: tuple[SlideDeckRef, ...] = ()


@dataclass(frozen=True)
class MathNormalization:
    text: str
    warning: bool = False


# ---------------------------------------------------------------------------
# Minimal DOM on html.parser


class _Node:
    __slots__ = ("tag", "attrs", "children", "parent")

    def __init__(self, tag: str, attrs: Mapping[str, str | None] | None = None):
        self.tag = tag
        self.attrs: dict[str, str] = {k: (v or "") for k, v in (attrs or {}).items()}
        self.children: list["_Node | str"] = []
        self.parent: "_Node | None" = None

    def append(self, child: "_Node | str") -> None:
        if isinstance(child, _Node):
            child.parent = self
        self.children.append(child)

    def classes(self) -> set[str]:
        return set(self.attrs.get("class", "").split())

    def walk(self) -> Iterable["_Node"]:
        yield self
        for child in self.children:
            if isinstance(child, _Node):
                yield from child.walk()

    def text(self) -> str:
        parts: list[str] = []
        for child in self.children:
            if isinstance(child, str):
                parts.append(child)
            else:
                parts.append(child.text())
        return "".join(parts)

    def tag_count(self) -> int:
        return sum(1 for _ in self.walk()) - 1


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = _Node("#document")
        self.stack = [self.root]

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        node = _Node(tag, dict(attrs))
        self.stack[-1].append(node)
        if tag not in _VOID_TAGS:
            self.stack.append(node)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        self.stack[-1].append(_Node(tag, dict(attrs)))

    def handle_endtag(self, tag: str) -> None:
        for index in range(len(self.stack) - 1, 0, -1):
            if self.stack[index].tag == tag:
                del self.stack[index:]
                return
        # stray close tag: ignore

    def handle_data(self, data: str) -> None:
        if data:
            self.stack[-1].append(data)


def parse_html(text: str) -> _Node:
    builder = _TreeBuilder()
    builder.feed(text)
    builder.close()
    return builder.root


def _matches_selector(node: _Node, selector: str) -> bool:
    selector = selector.strip()
    if selector.startswith("#"):
        return node.attrs.get("id") == selector[1:]
    if selector.startswith("."):
        return selector[1:] in node.classes()
    if "#" in selector:
        tag, _, ident = selector.partition("#")
        return node.tag == tag and node.attrs.get("id") == ident
    if "." in selector:
        tag, _, cls = selector.partition(".")
        return node.tag == tag and cls in node.classes()
    return node.tag == selector


def _select_first(root: _Node, selectors: Sequence[str]) -> _Node | None:
    for selector in selectors:
        for node in root.walk():
            if node.tag != "#document" and _matches_selector(node, selector):
                return node
    return None


def _strip_nodes(root: _Node, selectors: Sequence[str]) -> None:
    for node in list(root.walk()):
        node.children = [
            child
            for child in node.children
            if not (
                isinstance(child, _Node)
                and any(_matches_selector(child, sel) for sel in selectors)
            )
        ]


def _density_candidate(root: _Node) -> _Node | None:
    best: _Node | None = None
    best_score = 0.0
    for node in root.walk():
        if node.tag not in ("article", "main", "section", "div", "body"):
            continue
        text_len = len(re.sub(r"\s+", "", node.text()))
        if text_len == 0:
            continue
        score = text_len / (1 + node.tag_count())
        if score > best_score:
            best, best_score = node, score
    return best


# ---------------------------------------------------------------------------
# Math normalization


_MATH_CONTAINER_TAGS = frozenset({"math", "semantics", "annotation", "mrow"})


def _find_annotation(node: _Node) -> _Node | None:
    for descendant in node.walk():
        if descendant.tag == "annotation" and "tex" in descendant.attrs.get("encoding", ""):
            return descendant
    return None


def _is_math_node(node: _Node) -> bool:
    if node.tag == "math":
        return True
    return "katex" in node.classes() and node.tag in ("span", "div")


def normalize_math_markup(fragment: str) -> MathNormalization:
    """Recover source math notation from renderer markup.

    Plain text passes through unchanged. Renderer fragments yield the
    expression stored in their ``annotation`` node; fragments without one
    pass through as stripped text with the warning flag set.
    """
    if "<" not in fragment:
        return MathNormalization(text=fragment, warning=False)
    root = parse_html(fragment)
    annotation = _find_annotation(root)
    if annotation is not None:
        return MathNormalization(text=annotation.text().strip(), warning=False)
    logger.warning("unrecognized math fragment; passing text through")
    return MathNormalization(text=_collapse_ws(root.text()), warning=True)


def _normalize_math_node(node: _Node) -> str:
    annotation = _find_annotation(node)
    if annotation is not None:
        return annotation.text().strip()
    logger.warning("math element without annotation; passing text through")
    return _collapse_ws(node.text())


# ---------------------------------------------------------------------------
# Block extraction


def _collapse_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


@dataclass
class _Block:
    kind: str  # heading | para | listitem | image | deck
    text: str = ""
    level: int = 0
    image_ref: str = ""
    deck: SlideDeckRef | None = None


def _deck_from_node(node: _Node) -> SlideDeckRef:
    deck_id = node.attrs["data-deck-id"]
    try:
        page_count = int(node.attrs.get("data-page-count", "0"))
    except ValueError:
        raise IngestError(f"deck {deck_id!r}: non-integer data-page-count")
    prefix = node.attrs.get("data-page-prefix", f"decks/{deck_id}/page")
    ext = node.attrs.get("data-page-ext", ".png")
    refs = tuple(f"{prefix}{page}{ext}" for page in range(1, page_count + 1))
    return SlideDeckRef(deck_id=deck_id, page_count=page_count, page_image_refs=refs)


def _inline_text(node: _Node, pending: list[_Block]) -> str:
    """Flatten a subtree to inline text; images/decks inside are deferred."""
    parts: list[str] = []
    for child in node.children:
        if isinstance(child, str):
            parts.append(child)
            continue
        if "data-deck-id" in child.attrs:
            pending.append(_Block(kind="deck", deck=_deck_from_node(child)))
            continue
        if child.tag == "img":
            ref = child.attrs.get("src", "")
            if ref:
                pending.append(_Block(kind="image", image_ref=ref))
            continue
        if child.tag == "br":
            parts.append(" ")
            continue
        if _is_math_node(child):
            parts.append(f"${_normalize_math_node(child)}$")
            continue
        parts.append(_inline_text(child, pending))
    return "".join(parts)


def _has_block_descendant(node: _Node) -> bool:
    for child in node.children:
        if isinstance(child, _Node):
            if child.tag in _HEADINGS or child.tag in _PARA_TAGS or child.tag in (
                "ul",
                "ol",
                "li",
            ) or child.tag in _CONTAINER_TAGS:
                return True
    return False


def _emit_blocks(node: _Node, blocks: list[_Block]) -> None:
    if "data-deck-id" in node.attrs:
        blocks.append(_Block(kind="deck", deck=_deck_from_node(node)))
        return
    if node.tag == "img":
        ref = node.attrs.get("src", "")
        if ref:
            blocks.append(_Block(kind="image", image_ref=ref))
        return
    if node.tag in _HEADINGS:
        pending: list[_Block] = []
        text = _collapse_ws(_inline_text(node, pending))
        if text:
            blocks.append(_Block(kind="heading", text=text, level=_HEADINGS[node.tag]))
        blocks.extend(pending)
        return
    if node.tag in _PARA_TAGS:
        pending = []
        text = _collapse_ws(_inline_text(node, pending))
        if text:
            blocks.append(_Block(kind="para", text=text))
        blocks.extend(pending)
        return
    if node.tag == "li":
        pending = []
        text = _collapse_ws(_inline_text(node, pending))
        if text:
            blocks.append(_Block(kind="listitem", text=text))
        blocks.extend(pending)
        return
    if node.tag in ("ul", "ol"):
        for child in node.children:
            if isinstance(child, _Node) and child.tag == "li":
                _emit_blocks(child, blocks)
        return
    if node.tag in _CONTAINER_TAGS or node.tag == "#document":
        if not _has_block_descendant(node):
            pending = []
            text = _collapse_ws(_inline_text(node, pending))
            if text:
                blocks.append(_Block(kind="para", text=text))
            blocks.extend(pending)
            return
        for child in node.children:
            if isinstance(child, str):
                text = _collapse_ws(child)
                if text:
                    blocks.append(_Block(kind="para", text=text))
            else:
                _emit_blocks(child, blocks)
        return
    # Unhandled element (table, span at block level, ...): flatten as paragraph.
    pending = []
    text = _collapse_ws(_inline_text(node, pending))
    if text:
        blocks.append(_Block(kind="para", text=text))
    blocks.extend(pending)


def _blocks_to_markdown(blocks: Sequence[_Block]) -> str:
    lines: list[str] = []
    for block in blocks:
        if block.kind == "heading":
            lines.append("#" * block.level + " " + block.text)
        elif block.kind == "para":
            lines.append(block.text)
        elif block.kind == "listitem":
            lines.append("- " + block.text)
        elif block.kind == "image":
            lines.append(f"![]({block.image_ref})")
    return "\n\n".join(lines)


def _image_contexts(blocks: Sequence[_Block]) -> list[ImageContext]:
    contexts: list[ImageContext] = []
    seen: set[str] = set()
    textual = ("para", "listitem")
    for index, block in enumerate(blocks):
        if block.kind != "image":
            continue
        if block.image_ref in seen:
            continue
        seen.add(block.image_ref)
        before = ""
        for candidate in reversed(blocks[:index]):
            if candidate.kind in textual:
                before = candidate.text
                break
        after = ""
        for candidate in blocks[index + 1 :]:
            if candidate.kind in textual:
                after = candidate.text
                break
        contexts.append(
            ImageContext(image_ref=block.image_ref, before_paragraph=before, after_paragraph=after)
        )
    return contexts


def _dedupe_image_blocks(blocks: list[_Block]) -> list[_Block]:
    seen: set[str] = set()
    out: list[_Block] = []
    for block in blocks:
        if block.kind == "image":
            if block.image_ref in seen:
                logger.warning("duplicate image ref %s dropped", block.image_ref)
                continue
            seen.add(block.image_ref)
        out.append(block)
    return out


def extract_article(
    html_text: str, rules: SiteRules | None = None, doc_id: str = "doc"
) -> ArticleDoc:
    """Extract one document to an ArticleDoc (without triplets).

    Raises :class:`EmptyBodyError` when no container with text is found.
    """
    rules = rules or SiteRules()
    root = parse_html(html_text)
    _strip_nodes(root, rules.strip_selectors)
    container = _select_first(root, rules.container_selectors)
    if container is None:
        container = _density_candidate(root)
    if container is None or not _collapse_ws(container.text()):
        raise EmptyBodyError(f"{doc_id}: no article container with text content")
    blocks: list[_Block] = []
    _emit_blocks(container, blocks)
    blocks = _dedupe_image_blocks(blocks)
    body = _blocks_to_markdown(blocks)
    if not body.strip():
        raise EmptyBodyError(f"{doc_id}: article container is empty after extraction")
    decks = tuple(block.deck for block in blocks if block.kind == "deck" and block.deck)
    return ArticleDoc(
        doc_id=doc_id,
        markdown_body=body,
        images=tuple(_image_contexts(blocks)),
        slide_refs=decks,
    )


# ---------------------------------------------------------------------------
# Markdown input


_MD_IMAGE_RE = re.compile(r"^!\[[^\]]*\]\(([^)]+)\)\s*$")


def parse_markdown_article(md_text: str, doc_id: str = "doc") -> ArticleDoc:
    """Treat an already-markdown document as an article.

    Paragraphs are blank-line separated; standalone image lines become
    placeholders with the adjacent paragraphs as context.
    """
    blocks: list[_Block] = []
    for raw_block in re.split(r"\n\s*\n", md_text.strip()):
        chunk = raw_block.strip()
        if not chunk:
            continue
        image = _MD_IMAGE_RE.match(chunk)
        if image:
            blocks.append(_Block(kind="image", image_ref=image.group(1).strip()))
        elif chunk.startswith("#"):
            level = len(chunk) - len(chunk.lstrip("#"))
            blocks.append(
                _Block(kind="heading", text=chunk.lstrip("#").strip(), level=min(level, 6))
            )
        elif chunk.startswith("- "):
            for line in chunk.splitlines():
                blocks.append(_Block(kind="listitem", text=line[2:].strip()))
        else:
            blocks.append(_Block(kind="para", text=" ".join(chunk.split("\n"))))
    blocks = _dedupe_image_blocks(blocks)
    body = _blocks_to_markdown(blocks)
    if not body.strip():
        raise EmptyBodyError(f"{doc_id}: markdown document is empty")
    return ArticleDoc(
        doc_id=doc_id, markdown_body=body, images=tuple(_image_contexts(blocks))
    )


# ---------------------------------------------------------------------------
# Q/S/A triplets


@dataclass(frozen=True)
class TripletRules:
    question_labels: tuple[str, ...]
    solution_labels: tuple[str, ...]
    answer_labels: tuple[str, ...]

    @classmethod
    def from_site_rules(cls, rules: SiteRules) -> "TripletRules":
        return cls(
            question_labels=rules.question_labels,
            solution_labels=rules.solution_labels,
            answer_labels=rules.answer_labels,
        )


_LABEL_LINE_RE = re.compile(r"^([^:.)\-]{1,40}?)(?:\s+\d+)?\s*[:.)\-]\s*(.*)$")
_ANSWER_LETTER_RE = re.compile(r"\b([A-E])\b")


def _match_label(line: str, labels: Sequence[str]) -> str | None:
    """Return content after a label prefix ('Soru 3: ...'), or None.

    The prefix before the first separator must equal one of the labels under
    folding, so ordinary sentences containing a colon never match.
    """
    stripped = line.lstrip("#*- ").rstrip("* ")
    match = _LABEL_LINE_RE.match(stripped)
    if not match:
        return None
    prefix = fold_text(match.group(1).strip())
    for label in labels:
        if prefix == fold_text(label):
            return match.group(2).strip()
    return None


def extract_triplets(article: ArticleDoc, rules: TripletRules) -> list[QsaTriplet]:
    """Scan the article body for labeled Q/S/A blocks.

    Incomplete blocks (missing label, empty section, bad answer letter) are
    skipped and logged; a non-matching article yields the empty list.
    """
    triplets: list[QsaTriplet] = []
    question: list[str] | None = None
    solution: list[str] = []
    mode = ""

    def flush_incomplete(reason: str) -> None:
        if question is not None:
            logger.warning("%s: skipped incomplete Q/S/A block (%s)", article.doc_id, reason)

    for line in article.markdown_body.split("\n"):
        line = line.strip()
        if not line:
            continue
        q_content = _match_label(line, rules.question_labels)
        s_content = _match_label(line, rules.solution_labels)
        a_content = _match_label(line, rules.answer_labels)
        if q_content is not None:
            flush_incomplete("next question started")
            question = [q_content] if q_content else []
            solution = []
            mode = "question"
        elif s_content is not None and question is not None:
            solution = [s_content] if s_content else []
            mode = "solution"
        elif a_content is not None:
            if question is None:
                continue
            letter_match = _ANSWER_LETTER_RE.search(a_content)
            q_text = " ".join(question).strip()
            s_text = " ".join(solution).strip()
            if letter_match and q_text and s_text:
                triplets.append(
                    QsaTriplet(question=q_text, solution=s_text, answer=letter_match.group(1))
                )
            else:
                logger.warning(
                    "%s: skipped Q/S/A block (question=%r solution=%r answer=%r)",
                    article.doc_id,
                    bool(q_text),
                    bool(s_text),
                    a_content,
                )
            question = None
            solution = []
            mode = ""
        elif question is not None and mode == "question":
            question.append(line)
        elif question is not None and mode == "solution":
            solution.append(line)
    flush_incomplete("document ended")
    return triplets


# ---------------------------------------------------------------------------
# Site ingestion


@dataclass(frozen=True)
class IngestReport:
    markdowns: int = 0
    images: int = 0
    decks: int = 0
    deck_pages: int = 0
    triplets: int = 0
    failures: tuple[tuple[str, str], ...] = ()

    def __add__(self, other: "IngestReport") -> "IngestReport":
        return IngestReport(
            markdowns=self.markdowns + other.markdowns,
            images=self.images + other.images,
            decks=self.decks + other.decks,
            deck_pages=self.deck_pages + other.deck_pages,
            triplets=self.triplets + other.triplets,
            failures=self.failures + other.failures,
        )

    def to_record(self) -> dict[str, Any]:
        return {
            "markdowns": self.markdowns,
            "images": self.images,
            "decks": self.decks,
            "deck_pages": self.deck_pages,
            "triplets": self.triplets,
            "failures": [{"doc_id": d, "error": e} for d, e in self.failures],
        }


def ingest_document(path: str | Path, rules: SiteRules) -> ArticleDoc:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    doc_id = path.stem
    if path.suffix.lower() in (".md", ".markdown"):
        article = parse_markdown_article(text, doc_id=doc_id)
    else:
        article = extract_article(text, rules, doc_id=doc_id)
    triplets = extract_triplets(article, TripletRules.from_site_rules(rules))
    return ArticleDoc(
        doc_id=article.doc_id,
        markdown_body=article.markdown_body,
        images=article.images,
        triplets=tuple(triplets),
        slide_refs=article.slide_refs,
    )


def ingest_site(
    manifest: Sequence[str | Path],
    rules: SiteRules | None = None,
    out_dir: str | Path | None = None,
    *,
    jobs: int = 1,
) -> tuple[IngestReport, list[ArticleDoc]]:
    """Ingest a batch of documents; per-document failures never abort.

    When ``out_dir`` is given, writes ``articles.jsonl``,
    ``image_contexts.jsonl``, ``triplets.jsonl`` and ``decks.jsonl``.
    """
    rules = rules or SiteRules()

    def work(path: str | Path) -> tuple[str, ArticleDoc | None, str | None]:
        doc_id = Path(path).stem
        try:
            return doc_id, ingest_document(path, rules), None
        except (IngestError, OSError, UnicodeDecodeError) as exc:
            return doc_id, None, str(exc)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, manifest))
    else:
        results = [work(path) for path in manifest]

    articles: list[ArticleDoc] = []
    report = IngestReport()
    for doc_id, article, error in results:
        if article is None:
            report += IngestReport(failures=((doc_id, error or "unknown error"),))
            continue
        articles.append(article)
        report += IngestReport(
            markdowns=1,
            images=len(article.images),
            decks=len(article.slide_refs),
            deck_pages=sum(deck.page_count for deck in article.slide_refs),
            triplets=len(article.triplets),
        )
    articles.sort(key=lambda a: a.doc_id)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_jsonl(
            out / "articles.jsonl",
            ({"doc_id": a.doc_id, "markdown_body": a.markdown_body} for a in articles),
        )
        _write_jsonl(
            out / "image_contexts.jsonl",
            (
                {"doc_id": a.doc_id, **ctx.to_record()}
                for a in articles
                for ctx in a.images
            ),
        )
        _write_jsonl(
            out / "triplets.jsonl",
            (
                {"doc_id": a.doc_id, **triplet.to_record()}
                for a in articles
                for triplet in a.triplets
            ),
        )
        _write_jsonl(
            out / "decks.jsonl",
            ({"doc_id": a.doc_id, **deck.to_record()} for a in articles for deck in a.slide_refs),
        )
    return report, articles


def _write_jsonl(path: Path, records: Iterable[Mapping[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False))
            handle.write("\n")


def triplets_to_samples(
    articles: Sequence[ArticleDoc], *, id_prefix: str = "cv"
) -> list[Sample]:
    """Convert extracted triplets into corpus samples (source tag CV)."""
    samples: list[Sample] = []
    counter = 0
    for article in articles:
        for triplet in article.triplets:
            counter += 1
            samples.append(
                Sample(
                    id=f"{id_prefix}-{article.doc_id}-{counter:04d}",
                    question_text=triplet.question,
                    source_tag="CV",
                    solution=triplet.solution,
                    gold_answer=triplet.answer,
                    provenance={"origin": {"doc_id": article.doc_id, "kind": "native-triplet"}},
                )
            )
    return samples
