"""Option-tagged paragraph parsing and rendering.

An assessment paragraph arrives as plain text in which grammar slots are
marked up as ``<grammar>a/b/c</grammar>`` groups, exactly one option wrapped
in ``<correct>...</correct>``.  Parsing yields a structured paragraph from
which the student-facing display text, the grammatically correct rendering,
and the ordered list of scored grammar phrases are derived.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from enum import Enum
from typing import Union

GRAMMAR_OPEN = "<grammar>"
GRAMMAR_CLOSE = "</grammar>"
CORRECT_OPEN = "<correct>"
CORRECT_CLOSE = "</correct>"

_TAG_RE = re.compile(r"</?grammar>|</?correct>")


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class IssueKind(str, Enum):
    UNCLOSED_TAG = "unclosed-tag"
    MISSING_CORRECT = "missing-correct"
    MULTIPLE_CORRECT = "multiple-correct"
    FEWER_THAN_TWO_OPTIONS = "fewer-than-two-options"
    DUPLICATE_OPTION = "duplicate-option"
    EMPTY_OPTION = "empty-option"
    STRAY_TAG_TEXT = "stray-tag-text"


@dataclass(frozen=True)
class ValidationIssue:
    severity: Severity
    kind: IssueKind
    location: tuple[int, int]
    message: str

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def to_json_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "kind": self.kind.value,
            "location": list(self.location),
            "message": self.message,
        }


class TagSyntaxError(ValueError):
    """Raised when a paragraph cannot be parsed into a usable structure."""

    def __init__(self, issues: list[ValidationIssue]):
        self.issues = list(issues)
        summary = "; ".join(f"{i.kind.value}: {i.message}" for i in issues if i.is_error)
        super().__init__(summary or "invalid tagged paragraph")


@dataclass(frozen=True)
class FixedText:
    """A run of literal paragraph text between slots.

    ``text`` has internal whitespace collapsed to single spaces; a leading or
    trailing space records whether the run was separated from the adjacent
    slot in the source (needed to re-render punctuation that hugs a tag).
    """

    text: str

    @property
    def words(self) -> list[str]:
        return self.text.split()


@dataclass(frozen=True)
class GrammarSlot:
    """One option group: the displayed choices and which one is correct."""

    index: int
    options: tuple[str, ...]
    correct_index: int

    @property
    def correct_option(self) -> str:
        return self.options[self.correct_index]

    @property
    def wrong_options(self) -> tuple[str, ...]:
        return tuple(o for i, o in enumerate(self.options) if i != self.correct_index)


Segment = Union[FixedText, GrammarSlot]


@dataclass(frozen=True)
class TaggedParagraph:
    segments: tuple[Segment, ...]
    source_text: str

    @property
    def slots(self) -> tuple[GrammarSlot, ...]:
        return tuple(s for s in self.segments if isinstance(s, GrammarSlot))

    @property
    def slot_count(self) -> int:
        return sum(1 for s in self.segments if isinstance(s, GrammarSlot))


@dataclass(frozen=True)
class RenderedForms:
    """Derived views of a paragraph: display text, gold tokens, slot geometry."""

    display_text: str
    gold_tokens: tuple[str, ...]
    slot_spans: dict[int, tuple[int, int]]
    grammar_words: tuple[tuple[int, str], ...]

    @property
    def gold_text(self) -> str:
        return " ".join(self.gold_tokens)


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace tokens with edge punctuation stripped.

    Internal hyphens and apostrophes survive ("re-reading" is one token);
    tokens that are pure punctuation are dropped; digits pass through.
    """
    tokens = []
    for raw in text.lower().split():
        tok = raw.strip(string.punctuation)
        if tok:
            tokens.append(tok)
    return tokens


def _normalize_chunk(raw: str) -> str:
    """Collapse whitespace runs, keeping single-space margins where present."""
    core = " ".join(raw.split())
    if not core:
        return " " if raw else ""
    lead = " " if raw[0].isspace() else ""
    trail = " " if raw[-1].isspace() else ""
    return lead + core + trail


def _normalize_phrase(raw: str) -> str:
    return " ".join(raw.split())


def _split_group_options(body: str, offset: int) -> tuple[list[str], int | None, list[ValidationIssue]]:
    """Split a group body on "/" outside <correct> wraps; unwrap the correct one."""
    issues: list[ValidationIssue] = []
    span = (offset, offset + len(body))

    # Locate correct-tag wraps so option splitting ignores any "/" inside them.
    protected: list[tuple[int, int]] = []
    depth = 0
    open_at = 0
    for m in _TAG_RE.finditer(body):
        tag = m.group(0)
        if tag == CORRECT_OPEN:
            if depth > 0:
                issues.append(ValidationIssue(
                    Severity.ERROR, IssueKind.UNCLOSED_TAG, span,
                    "nested <correct> tag inside option group"))
                return [], None, issues
            depth = 1
            open_at = m.start()
        elif tag == CORRECT_CLOSE:
            if depth == 0:
                issues.append(ValidationIssue(
                    Severity.ERROR, IssueKind.STRAY_TAG_TEXT, span,
                    "</correct> without opening tag"))
                return [], None, issues
            depth = 0
            protected.append((open_at, m.end()))
        else:
            issues.append(ValidationIssue(
                Severity.ERROR, IssueKind.UNCLOSED_TAG, span,
                f"unexpected {tag} inside option group"))
            return [], None, issues
    if depth != 0:
        issues.append(ValidationIssue(
            Severity.ERROR, IssueKind.UNCLOSED_TAG, span,
            "<correct> tag never closed"))
        return [], None, issues

    def in_protected(i: int) -> bool:
        return any(a <= i < b for a, b in protected)

    parts: list[tuple[int, int]] = []
    start = 0
    for i, ch in enumerate(body):
        if ch == "/" and not in_protected(i):
            parts.append((start, i))
            start = i + 1
    parts.append((start, len(body)))

    options: list[str] = []
    correct_index: int | None = None
    for part_start, part_end in parts:
        raw = body[part_start:part_end]
        part_span = (offset + part_start, offset + part_end)
        if CORRECT_OPEN in raw:
            inner_start = raw.index(CORRECT_OPEN) + len(CORRECT_OPEN)
            inner_end = raw.index(CORRECT_CLOSE)
            outer = raw[:raw.index(CORRECT_OPEN)] + raw[inner_end + len(CORRECT_CLOSE):]
            if outer.strip():
                issues.append(ValidationIssue(
                    Severity.WARNING, IssueKind.STRAY_TAG_TEXT, part_span,
                    f"text outside <correct> wrap ignored: {outer.strip()!r}"))
            phrase = _normalize_phrase(raw[inner_start:inner_end])
            if correct_index is not None:
                issues.append(ValidationIssue(
                    Severity.ERROR, IssueKind.MULTIPLE_CORRECT, span,
                    "more than one <correct> option in group"))
            correct_index = len(options)
        else:
            phrase = _normalize_phrase(raw)
        if not phrase:
            issues.append(ValidationIssue(
                Severity.ERROR, IssueKind.EMPTY_OPTION, part_span,
                "empty option in group"))
            continue
        options.append(phrase)

    if len(options) < 2:
        issues.append(ValidationIssue(
            Severity.ERROR, IssueKind.FEWER_THAN_TWO_OPTIONS, span,
            f"group has {len(options)} option(s); at least 2 required"))
    if correct_index is None:
        issues.append(ValidationIssue(
            Severity.ERROR, IssueKind.MISSING_CORRECT, span,
            "group has no <correct> option"))

    seen: dict[str, int] = {}
    for i, opt in enumerate(options):
        if opt in seen:
            issues.append(ValidationIssue(
                Severity.WARNING, IssueKind.DUPLICATE_OPTION, span,
                f"option {opt!r} repeated in group"))
        seen.setdefault(opt, i)

    return options, correct_index, issues


def parse_tagged(text: str) -> TaggedParagraph:
    """Parse option-tagged text into a TaggedParagraph.

    Raises TagSyntaxError (carrying the full issue list) when the tag
    structure is broken: unbalanced tags, a group without exactly one
    <correct> option, fewer than two options, or empty options.  Duplicate
    options are tolerated here and surface as warnings via validate().
    """
    if not text or not text.strip():
        raise ValueError("paragraph text is empty")

    issues: list[ValidationIssue] = []
    segments: list[Segment] = []
    slot_index = 0
    pos = 0

    def emit_fixed(raw: str) -> None:
        chunk = _normalize_chunk(raw)
        if chunk:
            segments.append(FixedText(chunk))

    while pos < len(text):
        m = _TAG_RE.search(text, pos)
        if m is None:
            emit_fixed(text[pos:])
            break
        tag = m.group(0)
        if tag != GRAMMAR_OPEN:
            issues.append(ValidationIssue(
                Severity.ERROR, IssueKind.STRAY_TAG_TEXT, (m.start(), m.end()),
                f"{tag} outside a grammar group"))
            emit_fixed(text[pos:m.start()])
            pos = m.end()
            continue

        emit_fixed(text[pos:m.start()])
        body_start = m.end()
        close = text.find(GRAMMAR_CLOSE, body_start)
        next_open = text.find(GRAMMAR_OPEN, body_start)
        if close == -1 or (next_open != -1 and next_open < close):
            end = next_open if next_open != -1 else len(text)
            issues.append(ValidationIssue(
                Severity.ERROR, IssueKind.UNCLOSED_TAG, (m.start(), end),
                "grammar group never closed: " + text[m.start():min(end, m.start() + 40)] + "..."))
            pos = end
            continue

        body = text[body_start:close]
        options, correct_index, group_issues = _split_group_options(body, body_start)
        issues.extend(group_issues)
        if options and correct_index is not None and len(options) >= 2:
            segments.append(GrammarSlot(slot_index, tuple(options), correct_index))
            slot_index += 1
        pos = close + len(GRAMMAR_CLOSE)

    if any(i.is_error for i in issues):
        raise TagSyntaxError(issues)
    if not segments:
        raise ValueError("paragraph has no content")
    return TaggedParagraph(tuple(segments), text)


def to_tagged_text(p: TaggedParagraph) -> str:
    """Re-serialize segments in canonical tag syntax (normalized whitespace)."""
    out: list[str] = []
    for seg in p.segments:
        if isinstance(seg, FixedText):
            out.append(seg.text)
        else:
            rendered = "/".join(
                f"{CORRECT_OPEN}{opt}{CORRECT_CLOSE}" if i == seg.correct_index else opt
                for i, opt in enumerate(seg.options))
            out.append(f"{GRAMMAR_OPEN}{rendered}{GRAMMAR_CLOSE}")
    return "".join(out).strip()


def render_display(p: TaggedParagraph) -> str:
    """The student-facing paragraph: each slot shown as "(a/b/c)"."""
    out: list[str] = []
    for seg in p.segments:
        if isinstance(seg, FixedText):
            out.append(seg.text)
        else:
            out.append("(" + "/".join(seg.options) + ")")
    return "".join(out).strip()


def render_gold(p: TaggedParagraph) -> RenderedForms:
    """The grammatically correct rendering plus slot geometry.

    gold_tokens is the tokenization of the paragraph with every slot replaced
    by its correct phrase; slot_spans maps each slot to its token range there;
    grammar_words lists (slot index, correct phrase) in slot order.
    """
    gold_tokens: list[str] = []
    slot_spans: dict[int, tuple[int, int]] = {}
    grammar_words: list[tuple[int, str]] = []
    for seg in p.segments:
        if isinstance(seg, FixedText):
            gold_tokens.extend(tokenize(seg.text))
        else:
            start = len(gold_tokens)
            gold_tokens.extend(tokenize(seg.correct_option))
            slot_spans[seg.index] = (start, len(gold_tokens))
            grammar_words.append((seg.index, seg.correct_option))
    return RenderedForms(render_display(p), tuple(gold_tokens), slot_spans, tuple(grammar_words))


def _slot_location(p: TaggedParagraph, ordinal: int) -> tuple[int, int]:
    """Character span of the ordinal-th grammar group in the source, best effort."""
    pos = 0
    for _ in range(ordinal + 1):
        start = p.source_text.find(GRAMMAR_OPEN, pos)
        if start == -1:
            return (0, 0)
        pos = start + len(GRAMMAR_OPEN)
    end = p.source_text.find(GRAMMAR_CLOSE, start)
    return (start, end + len(GRAMMAR_CLOSE) if end != -1 else len(p.source_text))


def validate(p: TaggedParagraph) -> list[ValidationIssue]:
    """Check a parsed (or hand-built) paragraph for slot-level problems.

    Structural breakage (too few options, bad correct index, empty options)
    comes back as errors; duplicate options and options differing only by
    case come back as warnings.  Clean input yields an empty list.
    """
    issues: list[ValidationIssue] = []
    for ordinal, slot in enumerate(p.slots):
        loc = _slot_location(p, ordinal)
        if len(slot.options) < 2:
            issues.append(ValidationIssue(
                Severity.ERROR, IssueKind.FEWER_THAN_TWO_OPTIONS, loc,
                f"slot {slot.index} has {len(slot.options)} option(s)"))
        if not (0 <= slot.correct_index < len(slot.options)):
            issues.append(ValidationIssue(
                Severity.ERROR, IssueKind.MISSING_CORRECT, loc,
                f"slot {slot.index} correct_index {slot.correct_index} out of range"))
        for opt in slot.options:
            if not tokenize(opt):
                issues.append(ValidationIssue(
                    Severity.ERROR, IssueKind.EMPTY_OPTION, loc,
                    f"slot {slot.index} option {opt!r} has no tokens"))
        seen_exact: set[str] = set()
        seen_folded: dict[str, str] = {}
        for opt in slot.options:
            if opt in seen_exact:
                issues.append(ValidationIssue(
                    Severity.WARNING, IssueKind.DUPLICATE_OPTION, loc,
                    f"slot {slot.index} repeats option {opt!r}"))
            elif opt.lower() in seen_folded and seen_folded[opt.lower()] != opt:
                issues.append(ValidationIssue(
                    Severity.WARNING, IssueKind.DUPLICATE_OPTION, loc,
                    f"slot {slot.index} options {seen_folded[opt.lower()]!r} and {opt!r} differ only by case"))
            seen_exact.add(opt)
            seen_folded.setdefault(opt.lower(), opt)
    return issues
