"""Sentence splitting, variant enumeration, and the variant lattice.

Every option combination of a sentence is a possible spoken reading.  The
enumeration feeds language-model training; the lattice is the compact form
the constrained decoder searches.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from gramscore.paragraph import FixedText, GrammarSlot, Segment, TaggedParagraph, tokenize

SENTENCE_TERMINATORS = ".!?"
DEFAULT_VARIANT_CAP = 10_000


class SentenceBoundaryError(ValueError):
    """An option phrase contains a sentence terminator."""


class VariantCapExceededError(ValueError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"sentence has {count} variants, above the cap of {cap}")


@dataclass(frozen=True)
class SentenceUnit:
    """One sentence of a paragraph, with its slots kept at their global indices."""

    index: int
    segments: tuple[Segment, ...]

    @property
    def slots(self) -> tuple[GrammarSlot, ...]:
        return tuple(s for s in self.segments if isinstance(s, GrammarSlot))

    @property
    def variant_count(self) -> int:
        count = 1
        for slot in self.slots:
            count *= len(slot.options)
        return count

    @property
    def gold_tokens(self) -> list[str]:
        tokens: list[str] = []
        for seg in self.segments:
            if isinstance(seg, FixedText):
                tokens.extend(tokenize(seg.text))
            else:
                tokens.extend(tokenize(seg.correct_option))
        return tokens


@dataclass(frozen=True)
class Arc:
    """A token-labeled lattice edge; slot provenance is None on fixed text."""

    arc_id: int
    src: int
    dst: int
    token: str
    slot_index: int | None = None
    option_index: int | None = None


@dataclass(frozen=True)
class VariantLattice:
    """Acyclic single-source single-sink graph whose paths are the variants.

    Node ids ascend along every arc, so id order is a topological order.
    """

    num_nodes: int
    arcs: tuple[Arc, ...]
    sentence_index: int

    source = 0

    @property
    def sink(self) -> int:
        return self.num_nodes - 1

    @property
    def slot_arc_map(self) -> dict[int, dict[int, tuple[int, ...]]]:
        mapping: dict[int, dict[int, list[int]]] = {}
        for arc in self.arcs:
            if arc.slot_index is None:
                continue
            per_option = mapping.setdefault(arc.slot_index, {})
            per_option.setdefault(arc.option_index, []).append(arc.arc_id)
        return {
            slot: {opt: tuple(ids) for opt, ids in options.items()}
            for slot, options in mapping.items()
        }

    def arcs_from(self, node: int) -> list[Arc]:
        return [a for a in self.arcs if a.src == node]


def split_sentences(p: TaggedParagraph) -> list[SentenceUnit]:
    """Split a paragraph at sentence-final punctuation in fixed text.

    A slot is atomic: an option containing ``.``, ``!`` or ``?`` is rejected
    rather than split.
    """
    sentences: list[list[Segment]] = []
    current: list[Segment] = []

    def close() -> None:
        nonlocal current
        if any(isinstance(s, GrammarSlot) or tokenize(s.text) for s in current):
            sentences.append(current)
        current = []

    for seg in p.segments:
        if isinstance(seg, GrammarSlot):
            for opt in seg.options:
                if any(ch in SENTENCE_TERMINATORS for ch in opt):
                    raise SentenceBoundaryError(
                        f"slot {seg.index} option {opt!r} contains a sentence terminator")
            current.append(seg)
            continue
        text = seg.text
        start = 0
        i = 0
        while i < len(text):
            if text[i] in SENTENCE_TERMINATORS:
                while i + 1 < len(text) and text[i + 1] in SENTENCE_TERMINATORS:
                    i += 1
                piece = text[start:i + 1]
                if piece.strip():
                    current.append(FixedText(piece))
                close()
                start = i + 1
            i += 1
        rest = text[start:]
        if rest:
            current.append(FixedText(rest))
    close()
    return [SentenceUnit(i, tuple(segs)) for i, segs in enumerate(sentences)]


def enumerate_variants(s: SentenceUnit, cap: int = DEFAULT_VARIANT_CAP) -> list[list[str]]:
    """All option combinations as token sequences.

    Ordered lexicographically by (slot position, option index), so the first
    variant takes option 0 everywhere and the enumeration is reproducible.
    """
    count = s.variant_count
    if count > cap:
        raise VariantCapExceededError(count, cap)
    slots = s.slots
    variants: list[list[str]] = []
    for combo in itertools.product(*(range(len(sl.options)) for sl in slots)):
        chosen = iter(combo)
        tokens: list[str] = []
        for seg in s.segments:
            if isinstance(seg, FixedText):
                tokens.extend(tokenize(seg.text))
            else:
                tokens.extend(tokenize(seg.options[next(chosen)]))
        variants.append(tokens)
    return variants


def build_lattice(s: SentenceUnit) -> VariantLattice:
    """Compact lattice whose source-to-sink paths spell exactly the variants."""
    arcs: list[Arc] = []
    next_node = 1
    current = 0

    def add_arc(src: int, dst: int, token: str, slot: int | None, option: int | None) -> None:
        arcs.append(Arc(len(arcs), src, dst, token, slot, option))

    for seg in s.segments:
        if isinstance(seg, FixedText):
            for token in tokenize(seg.text):
                add_arc(current, next_node, token, None, None)
                current = next_node
                next_node += 1
        else:
            entry = current
            branch_ends: list[tuple[int, str, int]] = []  # (node before last token, last token, option)
            option_chains: list[list[tuple[int, int, str]]] = []
            for opt_i, opt in enumerate(seg.options):
                tokens = tokenize(opt)
                if not tokens:
                    raise ValueError(f"slot {seg.index} option {opt!r} has no tokens")
                node = entry
                chain: list[tuple[int, int, str]] = []
                for token in tokens[:-1]:
                    chain.append((node, next_node, token))
                    node = next_node
                    next_node += 1
                branch_ends.append((node, tokens[-1], opt_i))
                option_chains.append(chain)
            exit_node = next_node
            next_node += 1
            for opt_i, chain in enumerate(option_chains):
                for src, dst, token in chain:
                    add_arc(src, dst, token, seg.index, opt_i)
            for node, token, opt_i in branch_ends:
                add_arc(node, exit_node, token, seg.index, opt_i)
            current = exit_node

    if not arcs:
        raise ValueError("sentence has no tokens")
    return VariantLattice(next_node, tuple(arcs), s.index)


@dataclass(frozen=True)
class VariantCounts:
    per_sentence: tuple[int, ...]
    total: int


def variant_count(p: TaggedParagraph) -> VariantCounts:
    """Per-sentence variant products and their sum (readings are sentence-local)."""
    per_sentence = tuple(s.variant_count for s in split_sentences(p))
    return VariantCounts(per_sentence, sum(per_sentence))


def corpus_lines(p: TaggedParagraph, cap: int = DEFAULT_VARIANT_CAP) -> list[str]:
    """LM training corpus: every variant of every sentence, one line each."""
    lines: list[str] = []
    for sentence in split_sentences(p):
        for tokens in enumerate_variants(sentence, cap):
            lines.append(" ".join(tokens))
    return lines
