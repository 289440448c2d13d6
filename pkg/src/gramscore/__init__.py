"""Spoken grammar assessment engine.

Pipeline: parse an option-tagged paragraph, enumerate its grammatical
variants, train a variant-biased n-gram model, decode a (simulated) spoken
rendition, and score the grammar slots against the gold rendering.
"""

from gramscore.decode import (
    ChannelConfig,
    NBestEntry,
    NBestList,
    Transcript,
    constrained_decode,
    decode_paragraph,
    load_transcript,
    rescore_nbest,
    simulate_asr,
    synthesize_reading,
)
from gramscore.lm import FusionConfig, NGramLM, fusion_score, read_arpa, train, write_arpa
from gramscore.paragraph import (
    FixedText,
    GrammarSlot,
    IssueKind,
    RenderedForms,
    Severity,
    TaggedParagraph,
    TagSyntaxError,
    ValidationIssue,
    parse_tagged,
    render_display,
    render_gold,
    to_tagged_text,
    tokenize,
    validate,
)
from gramscore.scoring import (
    Alignment,
    GrammarReport,
    align,
    cohort_report,
    g_score,
    grammar_error,
    wer,
)
from gramscore.variants import (
    SentenceUnit,
    VariantLattice,
    build_lattice,
    corpus_lines,
    enumerate_variants,
    split_sentences,
    variant_count,
)

__all__ = [
    "Alignment",
    "ChannelConfig",
    "FixedText",
    "FusionConfig",
    "GrammarReport",
    "GrammarSlot",
    "IssueKind",
    "NBestEntry",
    "NBestList",
    "NGramLM",
    "RenderedForms",
    "SentenceUnit",
    "Severity",
    "TaggedParagraph",
    "TagSyntaxError",
    "Transcript",
    "ValidationIssue",
    "VariantLattice",
    "align",
    "build_lattice",
    "cohort_report",
    "constrained_decode",
    "corpus_lines",
    "decode_paragraph",
    "enumerate_variants",
    "fusion_score",
    "g_score",
    "grammar_error",
    "load_transcript",
    "parse_tagged",
    "read_arpa",
    "render_display",
    "render_gold",
    "rescore_nbest",
    "simulate_asr",
    "split_sentences",
    "synthesize_reading",
    "to_tagged_text",
    "tokenize",
    "train",
    "validate",
    "variant_count",
    "wer",
    "write_arpa",
]
