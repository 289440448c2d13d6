"""Hypothesis strategies shared by the property tests.

Synthetic paragraphs are built structure-first: we draw the intended
segments, then serialize them with ragged spacing, so every property test
knows the ground truth it should recover.
"""

from __future__ import annotations

from hypothesis import strategies as st

from gramscore.paragraph import FixedText, GrammarSlot, TaggedParagraph

WORDS = [
    "alpha", "bravo", "cedar", "delta", "ember", "frost", "gale", "harbor",
    "iris", "jasper", "kite", "lumen", "maple", "north", "opal", "pine",
    "quartz", "river", "stone", "tulip", "umber", "violet", "willow", "zephyr",
]

word = st.sampled_from(WORDS)
phrase = st.lists(word, min_size=1, max_size=3).map(" ".join)
fixed_run = st.lists(word, min_size=1, max_size=4).map(" ".join)
pad = st.sampled_from(["", " ", "  "])


@st.composite
def slot_spec(draw) -> tuple[tuple[str, ...], int]:
    options = draw(st.lists(phrase, min_size=2, max_size=4, unique=True))
    correct = draw(st.integers(min_value=0, max_value=len(options) - 1))
    return tuple(options), correct


@st.composite
def paragraph_case(draw, min_slots: int = 0, max_slots: int = 12):
    """(source_text, expected TaggedParagraph) with ragged tag spacing."""
    n_slots = draw(st.integers(min_value=min_slots, max_value=max_slots))
    lead = draw(fixed_run) + " "
    pieces = [lead]
    segs: list = [FixedText(lead)]
    for index in range(n_slots):
        options, correct = draw(slot_spec())
        rendered = []
        for i, opt in enumerate(options):
            body = draw(pad) + opt + draw(pad)
            if i == correct:
                body = draw(pad) + "<correct>" + opt + "</correct>" + draw(pad)
            rendered.append(body)
        pieces.append("<grammar>" + "/".join(rendered) + "</grammar>")
        segs.append(GrammarSlot(index, options, correct))
        gap = " " + draw(fixed_run) + " "
        pieces.append(gap)
        segs.append(FixedText(gap))
    text = "".join(pieces)
    expected = TaggedParagraph(tuple(segs), text)
    return text, expected


@st.composite
def sentence_case(draw, max_slots: int = 4, max_options: int = 4):
    """A single-sentence paragraph source with up to max_slots slots."""
    n_slots = draw(st.integers(min_value=0, max_value=max_slots))
    pieces = [draw(fixed_run)]
    option_lists = []
    for _ in range(n_slots):
        options = draw(st.lists(phrase, min_size=2, max_size=max_options, unique=True))
        correct = draw(st.integers(min_value=0, max_value=len(options) - 1))
        rendered = "/".join(
            f"<correct>{opt}</correct>" if i == correct else opt
            for i, opt in enumerate(options))
        pieces.append(f"<grammar>{rendered}</grammar>")
        pieces.append(draw(fixed_run))
        option_lists.append(options)
    return " ".join(pieces) + ".", option_lists
