"""Transcript sources: rescoring, constrained decoding, and channel simulation.

Acoustic evidence enters this desk-scale system two ways: as N-best lists
with acoustic log scores (rescored by shallow fusion), or as an observed
token sequence pushed through a noisy-channel dynamic program over the
variant lattice.  The simulator stands in for a recorded reading, including
the grammar-correcting bias a general-purpose recognizer shows on
deliberately wrong sentences.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from gramscore.lm import BOS, EOS, FusionConfig, NGramLM, fusion_score
from gramscore.paragraph import GrammarSlot, TaggedParagraph, render_gold, tokenize
from gramscore.scoring import OpKind, align
from gramscore.variants import VariantLattice, build_lattice, split_sentences

TRANSCRIPT_SOURCES = ("manual", "nbest-rescored", "constrained-decode", "simulator")
BIAS_MODES = ("none", "grammar-correcting")


@dataclass(frozen=True)
class Transcript:
    tokens: tuple[str, ...]
    source: str = "manual"

    def __post_init__(self):
        if self.source not in TRANSCRIPT_SOURCES:
            raise ValueError(f"unknown transcript source {self.source!r}")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class NBestEntry:
    tokens: tuple[str, ...]
    acoustic_log: float

    def __post_init__(self):
        if not math.isfinite(self.acoustic_log):
            raise ValueError("acoustic score must be finite")


@dataclass(frozen=True)
class NBestList:
    entries: tuple[NBestEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("N-best list is empty")

    @classmethod
    def from_json_dict(cls, payload: dict) -> "NBestList":
        if "entries" not in payload:
            raise ValueError('N-best payload must carry an "entries" array')
        entries = []
        for item in payload["entries"]:
            entries.append(NBestEntry(tuple(tokenize(item["text"])), float(item["acoustic_log"])))
        return cls(tuple(entries))


@dataclass(frozen=True)
class ChannelConfig:
    """Edit costs for the decoder plus noise rates for the simulator."""

    substitution_cost: float = 1.0
    insertion_cost: float = 1.0
    deletion_cost: float = 1.0
    p_sub: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0
    bias_mode: str = "none"

    def __post_init__(self):
        for name in ("substitution_cost", "insertion_cost", "deletion_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("p_sub", "p_del", "p_ins"):
            rate = getattr(self, name)
            if not (0.0 <= rate <= 1.0):
                raise ValueError(f"{name} must be within [0, 1]")
        if self.bias_mode not in BIAS_MODES:
            raise ValueError(f"unknown bias_mode {self.bias_mode!r}")


def rescore_nbest(nbest: NBestList, lm: NGramLM, cfg: FusionConfig) -> Transcript:
    """Pick the entry maximizing acoustic + gamma * LM; ties keep the earlier entry."""
    best_idx = 0
    best_score = None
    for idx, entry in enumerate(nbest.entries):
        combined = fusion_score(entry.acoustic_log, lm.score_sequence(entry.tokens), cfg)
        if best_score is None or combined > best_score:
            best_idx, best_score = idx, combined
    return Transcript(nbest.entries[best_idx].tokens, "nbest-rescored")


@dataclass(frozen=True)
class DecodeResult:
    transcript: Transcript
    slot_options: dict[int, int]
    objective: float


def constrained_decode(
    observed,
    lattice: VariantLattice,
    lm: NGramLM,
    cfg: FusionConfig | None = None,
    ch: ChannelConfig | None = None,
) -> DecodeResult:
    """Best lattice path under channel edit cost minus gamma * LM log score.

    The dynamic program runs over (lattice node, observed position, LM
    context), so its LM term equals score_sequence of the returned path
    exactly.  The output is always a legal variant; slot_options records
    which option each slot took.
    """
    cfg = cfg or FusionConfig()
    ch = ch or ChannelConfig()
    obs = list(getattr(observed, "tokens", observed))
    n_ctx = lm.order - 1
    start_ctx = (BOS,) * n_ctx

    arcs_from: dict[int, list] = {}
    for arc in lattice.arcs:
        arcs_from.setdefault(arc.src, []).append(arc)
    for node in arcs_from:
        arcs_from[node].sort(key=lambda a: (a.option_index if a.option_index is not None else -1,
                                            a.arc_id))

    def shift(ctx: tuple[str, ...], token: str) -> tuple[str, ...]:
        return (ctx + (token,))[1:] if n_ctx else ()

    # chart[(node, pos)] = {ctx: (cost, backpointer)}
    # backpointer = (prev_node, prev_pos, prev_ctx, arc or None)
    chart: dict[tuple[int, int], dict[tuple[str, ...], tuple[float, tuple | None]]] = {
        (0, 0): {start_ctx: (0.0, None)}}

    def relax(node: int, pos: int, ctx: tuple[str, ...], cost: float, bp: tuple) -> None:
        cell = chart.setdefault((node, pos), {})
        existing = cell.get(ctx)
        if existing is None or cost < existing[0] - 1e-12:
            cell[ctx] = (cost, bp)

    n_obs = len(obs)
    for node in range(lattice.num_nodes):
        for pos in range(n_obs + 1):
            cell = chart.get((node, pos))
            if not cell:
                continue
            for ctx in sorted(cell):
                cost, _ = cell[ctx]
                for arc in arcs_from.get(node, []):
                    lm_term = -cfg.gamma * lm.logprob(arc.token, ctx)
                    new_ctx = shift(ctx, arc.token)
                    if pos < n_obs:
                        step = 0.0 if obs[pos] == arc.token else ch.substitution_cost
                        relax(arc.dst, pos + 1, new_ctx,
                              cost + step + lm_term, (node, pos, ctx, arc, "consume"))
                    relax(arc.dst, pos, new_ctx,
                          cost + ch.deletion_cost + lm_term, (node, pos, ctx, arc, "skip"))
                if pos < n_obs:
                    relax(node, pos + 1, ctx,
                          cost + ch.insertion_cost, (node, pos, ctx, None, "insert"))

    final_cell = chart.get((lattice.sink, n_obs), {})
    if not final_cell:
        raise RuntimeError("decoder chart has no complete path")  # unreachable on valid lattices
    best_ctx = None
    best_total = None
    for ctx in sorted(final_cell):
        cost, _ = final_cell[ctx]
        total = cost - cfg.gamma * lm.logprob(EOS, ctx)
        if best_total is None or total < best_total - 1e-12:
            best_ctx, best_total = ctx, total

    path_arcs = []
    node, pos, ctx = lattice.sink, n_obs, best_ctx
    while True:
        _, bp = chart[(node, pos)][ctx]
        if bp is None:
            break
        prev_node, prev_pos, prev_ctx, arc, _kind = bp
        if arc is not None:
            path_arcs.append(arc)
        node, pos, ctx = prev_node, prev_pos, prev_ctx
    path_arcs.reverse()

    tokens = tuple(arc.token for arc in path_arcs)
    slot_options: dict[int, int] = {}
    for arc in path_arcs:
        if arc.slot_index is not None:
            slot_options[arc.slot_index] = arc.option_index
    return DecodeResult(Transcript(tokens, "constrained-decode"), slot_options, best_total)


def _paragraph_vocabulary(p: TaggedParagraph) -> list[str]:
    vocab = set()
    for seg in p.segments:
        if isinstance(seg, GrammarSlot):
            for opt in seg.options:
                vocab.update(tokenize(opt))
        else:
            vocab.update(tokenize(seg.text))
    return sorted(vocab)


def _apply_grammar_bias(tokens: list[str], p: TaggedParagraph) -> list[str]:
    """Rewrite slot regions that read as a wrong option into the correct one."""
    forms = render_gold(p)
    alignment = align(forms.gold_tokens, tokens)
    aligned_hyp: dict[int, int] = {}
    for op in alignment.ops:
        if op.kind in (OpKind.MATCH, OpKind.SUBSTITUTE):
            aligned_hyp[op.ref_pos] = op.hyp_pos

    slots = {slot.index: slot for slot in p.slots}
    replacements: list[tuple[int, int, list[str]]] = []
    for index, (start, end) in forms.slot_spans.items():
        hyp_positions = [aligned_hyp[pos] for pos in range(start, end) if pos in aligned_hyp]
        if not hyp_positions:
            continue
        lo, hi = min(hyp_positions), max(hyp_positions) + 1
        region = tokens[lo:hi]
        slot = slots[index]
        for wrong in slot.wrong_options:
            if region == tokenize(wrong) and region != tokenize(slot.correct_option):
                replacements.append((lo, hi, tokenize(slot.correct_option)))
                break
    for lo, hi, correct in sorted(replacements, reverse=True):
        tokens[lo:hi] = correct
    return tokens


def simulate_asr(truth, p: TaggedParagraph, ch: ChannelConfig, seed: int) -> Transcript:
    """Seeded corruption of a true reading, optionally grammar-correcting.

    With bias_mode "grammar-correcting", any slot read as one of its wrong
    options comes out silently corrected before the random channel noise is
    applied, reproducing the behavior of a recognizer whose language model
    has never seen the wrong sentences.
    """
    rng = random.Random(seed)
    tokens = list(getattr(truth, "tokens", truth))
    if ch.bias_mode == "grammar-correcting":
        tokens = _apply_grammar_bias(tokens, p)
    vocab = _paragraph_vocabulary(p)
    out: list[str] = []
    for token in tokens:
        if rng.random() < ch.p_del:
            continue
        if rng.random() < ch.p_sub:
            token = rng.choice(vocab)
        out.append(token)
        if rng.random() < ch.p_ins:
            out.append(rng.choice(vocab))
    return Transcript(tuple(out), "simulator")


def synthesize_reading(p: TaggedParagraph, skill: float, seed: int) -> list[list[str]]:
    """A simulated student's reading, one token list per sentence.

    Each slot is read correctly with probability ``skill``; otherwise one of
    its wrong options is spoken.  Fixed text is always read verbatim.
    """
    if not (0.0 <= skill <= 1.0):
        raise ValueError(f"skill must be within [0, 1], got {skill}")
    rng = random.Random(seed)
    sentences: list[list[str]] = []
    for unit in split_sentences(p):
        tokens: list[str] = []
        for seg in unit.segments:
            if isinstance(seg, GrammarSlot):
                if rng.random() < skill or len(seg.options) < 2:
                    tokens.extend(tokenize(seg.correct_option))
                else:
                    tokens.extend(tokenize(rng.choice(seg.wrong_options)))
            else:
                tokens.extend(tokenize(seg.text))
        sentences.append(tokens)
    return sentences


def decode_paragraph(
    p: TaggedParagraph,
    observed_sentences: list[list[str]],
    lm: NGramLM,
    cfg: FusionConfig | None = None,
    ch: ChannelConfig | None = None,
) -> tuple[Transcript, dict[int, int]]:
    """Constrained-decode each sentence; concatenated tokens plus slot choices."""
    units = split_sentences(p)
    if len(observed_sentences) != len(units):
        raise ValueError(
            f"expected {len(units)} observed sentences, got {len(observed_sentences)}")
    tokens: list[str] = []
    slot_options: dict[int, int] = {}
    for unit, observed in zip(units, observed_sentences):
        result = constrained_decode(observed, build_lattice(unit), lm, cfg, ch)
        tokens.extend(result.transcript.tokens)
        slot_options.update(result.slot_options)
    return Transcript(tuple(tokens), "constrained-decode"), slot_options


class TranscriptPayloadError(TypeError):
    pass


def load_transcript(source) -> Transcript:
    """Read a plain-text transcript from a path, bytes, or raw string.

    JSON N-best payloads are rejected with a pointer to the right loader.
    """
    if isinstance(source, Path):
        text = source.read_text("utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        candidate = Path(source)
        try:
            is_file = candidate.is_file()
        except OSError:
            is_file = False
        text = candidate.read_text("utf-8") if is_file else source
    else:
        raise TypeError(f"cannot load a transcript from {type(source).__name__}")

    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            payload = json.loads(stripped)
        except json.JSONDecodeError:
            payload = None
        if isinstance(payload, dict) and "entries" in payload:
            raise TranscriptPayloadError(
                "payload looks like an N-best list; load it with NBestList.from_json_dict")
    tokens = tokenize(text)
    if not tokens:
        raise ValueError("transcript is empty")
    return Transcript(tuple(tokens), "manual")
