"""Backoff n-gram language model over variant corpora.

Witten-Bell smoothing, expressed in exact backoff form: for a context h with
continuation total C and T distinct continuation types,

    p(w | h) = (c(h,w) + T * p(w | h')) / (C + T)      when c(h,w) > 0
    p(w | h) = T / (C + T) * p(w | h')                 otherwise

so the stored backoff weight of h is T / (C + T) and every context sums to
one exactly.  The unigram base interpolates with a uniform distribution over
the vocabulary (sentence-end and the unknown token included), which gives the
unknown token a small explicit probability.  Tokens outside the vocabulary
score at a floor strictly below every stored unigram, so no sequence is ever
driven to minus infinity.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

BOS_SENTINEL_LOG10 = -99.0
UNK_FLOOR_MARGIN = 2.0


class EmptyCorpusError(ValueError):
    pass


class ArpaFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass(frozen=True)
class FusionConfig:
    """Shallow-fusion weight: combined = acoustic + gamma * lm."""

    gamma: float = 0.5

    def __post_init__(self):
        if not (self.gamma >= 0):
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")


class NGramLM:
    """Immutable trained model; safe to score from concurrently."""

    def __init__(
        self,
        order: int,
        vocab: frozenset[str],
        probs: dict[tuple[str, ...], float],
        backoffs: dict[tuple[str, ...], float],
        unk_floor: float,
    ):
        self.order = order
        self.vocab = vocab
        self._probs = probs
        self._backoffs = backoffs
        self.unk_floor = unk_floor
        self._logprob_cached = lru_cache(maxsize=65536)(self._logprob_uncached)

    def __repr__(self):
        return f"NGramLM(order={self.order}, vocab={len(self.vocab)}, ngrams={len(self._probs)})"

    def stored_ngrams(self, k: int) -> list[tuple[str, ...]]:
        return sorted(g for g in self._probs if len(g) == k)

    def stored_contexts(self) -> list[tuple[str, ...]]:
        return sorted(self._backoffs)

    def backoff_weight(self, context: tuple[str, ...]) -> float:
        return self._backoffs.get(context, 0.0)

    def stored_logprob(self, gram: tuple[str, ...]) -> float | None:
        return self._probs.get(gram)

    def _logprob_uncached(self, word: str, context: tuple[str, ...]) -> float:
        if word not in self.vocab:
            return self.unk_floor
        acc = 0.0
        ctx = context
        while True:
            stored = self._probs.get(ctx + (word,))
            if stored is not None:
                return acc + stored
            if not ctx:
                return self.unk_floor
            acc += self._backoffs.get(ctx, 0.0)
            ctx = ctx[1:]

    def logprob(self, word: str, context: Sequence[str]) -> float:
        """log10 p(word | context), backing off through shorter contexts."""
        ctx = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        return self._logprob_cached(word, ctx)

    def score_sequence(self, tokens: Iterable[str]) -> float:
        """Total log10 probability of a sentence, end token included."""
        context = (BOS,) * (self.order - 1)
        total = 0.0
        for token in list(tokens) + [EOS]:
            total += self._logprob_cached(token, context)
            if self.order > 1:
                context = (context + (token,))[1:]
        return total


def _count_ngrams(sentences: list[list[str]], order: int):
    counts: dict[tuple[str, ...], int] = {}
    for sent in sentences:
        padded = [BOS] * (order - 1) + sent + [EOS]
        for i in range(order - 1, len(padded)):
            for k in range(1, order + 1):
                if k - 1 > i:
                    break
                counts[tuple(padded[i - k + 1:i + 1])] = counts.get(tuple(padded[i - k + 1:i + 1]), 0) + 1
    return counts


def train(corpus: Iterable[Sequence[str]], order: int = 3) -> NGramLM:
    """Train a Witten-Bell backoff model of the given order.

    The corpus is one token sequence per sentence; results depend only on the
    multiset of sentences, not their order.
    """
    if not (1 <= order <= 5):
        raise ValueError(f"order must be within 1..5, got {order}")
    sentences = [list(s) for s in corpus]
    if not sentences:
        raise EmptyCorpusError("training corpus is empty")
    for sent in sentences:
        for tok in sent:
            if not tok or tok in (BOS, EOS, UNK):
                raise ValueError(f"reserved or empty token in corpus: {tok!r}")

    counts = _count_ngrams(sentences, order)
    observed = sorted({g[0] for g in counts if len(g) == 1})
    vocab = frozenset(observed) | {EOS, UNK}
    vocab_list = sorted(vocab)

    # Continuation totals and distinct-continuation counts per context.
    context_total: dict[tuple[str, ...], int] = {}
    context_types: dict[tuple[str, ...], int] = {}
    for gram, c in counts.items():
        if len(gram) < 2:
            continue
        ctx = gram[:-1]
        context_total[ctx] = context_total.get(ctx, 0) + c
        context_types[ctx] = context_types.get(ctx, 0) + 1

    probs: dict[tuple[str, ...], float] = {}
    backoffs: dict[tuple[str, ...], float] = {}

    n_tokens = sum(c for g, c in counts.items() if len(g) == 1)
    n_types = len(observed)
    uniform = 1.0 / len(vocab_list)
    unigram_p: dict[str, float] = {}
    for w in vocab_list:
        p = (counts.get((w,), 0) + n_types * uniform) / (n_tokens + n_types)
        unigram_p[w] = p
        probs[(w,)] = math.log10(p)

    def lower_prob(word: str, context: tuple[str, ...]) -> float:
        # Probability under the already-built lower orders of the backoff
        # model itself; anything else would break per-context normalization.
        acc = 1.0
        while True:
            gram = context + (word,)
            if gram in probs:
                return acc * (10.0 ** probs[gram])
            if not context:
                return acc * uniform
            acc *= 10.0 ** backoffs.get(context, 0.0)
            context = context[1:]

    for k in range(2, order + 1):
        grams = sorted(g for g in counts if len(g) == k)
        for gram in grams:
            ctx = gram[:-1]
            total = context_total[ctx]
            types = context_types[ctx]
            p = (counts[gram] + types * lower_prob(gram[-1], ctx[1:])) / (total + types)
            probs[gram] = math.log10(p)
        for ctx in sorted(c for c in context_total if len(c) == k - 1):
            total = context_total[ctx]
            types = context_types[ctx]
            backoffs[ctx] = math.log10(types / (total + types))

    real_unigrams = [lp for (w,), lp in
                     ((g, lp) for g, lp in probs.items() if len(g) == 1)
                     if w != BOS]
    unk_floor = min(real_unigrams) - UNK_FLOOR_MARGIN
    return NGramLM(order, vocab, probs, backoffs, unk_floor)


def fusion_score(acoustic_log: float, lm_log: float, cfg: FusionConfig) -> float:
    """Shallow fusion: acoustic log score plus gamma times the LM log score."""
    if not (math.isfinite(acoustic_log) and math.isfinite(lm_log)):
        raise ValueError("fusion requires finite log scores")
    return acoustic_log + cfg.gamma * lm_log


def write_arpa(lm: NGramLM) -> bytes:
    """Serialize to the standard ARPA layout (log10, tab-separated)."""
    out = io.StringIO()
    grams_by_order: dict[int, list[tuple[str, ...]]] = {k: [] for k in range(1, lm.order + 1)}
    for gram in lm._probs:
        grams_by_order[len(gram)].append(gram)
    # Contexts that exist only as backoff carriers (runs of the start token)
    # still need entries so readers can attach their weights.
    for ctx in lm._backoffs:
        if ctx not in lm._probs and len(ctx) <= lm.order:
            grams_by_order.setdefault(len(ctx), []).append(ctx)
    if lm.order > 1 and (BOS,) not in lm._probs:
        grams_by_order[1].append((BOS,))

    out.write("\\data\\\n")
    for k in range(1, lm.order + 1):
        out.write(f"ngram {k}={len(set(grams_by_order[k]))}\n")
    out.write("\n")
    for k in range(1, lm.order + 1):
        out.write(f"\\{k}-grams:\n")
        for gram in sorted(set(grams_by_order[k])):
            logp = lm._probs.get(gram, BOS_SENTINEL_LOG10)
            line = f"{logp:.6f}\t{' '.join(gram)}"
            if k < lm.order and gram in lm._backoffs:
                line += f"\t{lm._backoffs[gram]:.6f}"
            out.write(line + "\n")
        out.write("\n")
    out.write("\\end\\\n")
    return out.getvalue().encode("utf-8")


def read_arpa(data: bytes) -> NGramLM:
    """Parse an ARPA byte stream back into a scoring-equivalent model."""
    lines = data.decode("utf-8").splitlines()
    declared: dict[int, int] = {}
    probs: dict[tuple[str, ...], float] = {}
    backoffs: dict[tuple[str, ...], float] = {}
    seen: dict[int, int] = {}

    i = 0
    n = len(lines)
    while i < n and lines[i].strip() != "\\data\\":
        if lines[i].strip():
            raise ArpaFormatError(i + 1, f"expected \\data\\ header, got {lines[i].strip()!r}")
        i += 1
    if i == n:
        raise ArpaFormatError(n, "missing \\data\\ header")
    i += 1
    while i < n and lines[i].strip():
        line = lines[i].strip()
        if not line.startswith("ngram "):
            raise ArpaFormatError(i + 1, f"expected ngram count line, got {line!r}")
        try:
            k_str, count_str = line[len("ngram "):].split("=")
            declared[int(k_str)] = int(count_str)
        except ValueError:
            raise ArpaFormatError(i + 1, f"malformed count line {line!r}") from None
        i += 1
    if not declared:
        raise ArpaFormatError(i + 1, "no ngram counts declared")
    order = max(declared)
    if sorted(declared) != list(range(1, order + 1)):
        raise ArpaFormatError(i + 1, "ngram orders are not contiguous from 1")

    current_k: int | None = None
    while i < n:
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "\\end\\":
            current_k = None
            break
        if line.startswith("\\") and line.endswith("-grams:"):
            try:
                current_k = int(line[1:-len("-grams:")])
            except ValueError:
                raise ArpaFormatError(i, f"bad section header {line!r}") from None
            if current_k not in declared:
                raise ArpaFormatError(i, f"section \\{current_k}-grams: was not declared")
            seen.setdefault(current_k, 0)
            continue
        if current_k is None:
            raise ArpaFormatError(i, f"entry outside any n-gram section: {line!r}")
        fields = line.split("\t")
        if len(fields) == 1:
            fields = line.split()
            fields = [fields[0], " ".join(fields[1:current_k + 1])] + fields[current_k + 1:]
        if len(fields) not in (2, 3):
            raise ArpaFormatError(i, f"expected 2 or 3 tab-separated fields, got {len(fields)}")
        try:
            logp = float(fields[0])
        except ValueError:
            raise ArpaFormatError(i, f"bad log probability {fields[0]!r}") from None
        gram = tuple(fields[1].split())
        if len(gram) != current_k:
            raise ArpaFormatError(i, f"{len(gram)}-token entry in \\{current_k}-grams: section")
        if logp > 0:
            raise ArpaFormatError(i, f"positive log probability {logp}")
        if gram[-1] != BOS:
            probs[gram] = logp
        if len(fields) == 3:
            try:
                backoffs[gram] = float(fields[2])
            except ValueError:
                raise ArpaFormatError(i, f"bad backoff weight {fields[2]!r}") from None
        seen[current_k] = seen.get(current_k, 0) + 1

    for k, count in declared.items():
        if seen.get(k, 0) != count:
            raise ArpaFormatError(
                len(lines), f"count mismatch: declared ngram {k}={count}, found {seen.get(k, 0)}")

    vocab = frozenset(g[0] for g in probs if len(g) == 1) | {EOS, UNK}
    real_unigrams = [lp for g, lp in probs.items() if len(g) == 1 and g[0] != BOS]
    if not real_unigrams:
        raise ArpaFormatError(len(lines), "no unigram probabilities present")
    unk_floor = min(real_unigrams) - UNK_FLOOR_MARGIN
    return NGramLM(order, vocab, probs, backoffs, unk_floor)
