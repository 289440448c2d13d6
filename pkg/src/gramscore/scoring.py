"""Alignment-based grammar scoring.

The hypothesis reading is aligned against the gold rendering with unit edit
costs; a slot earns credit only when every token of its correct phrase is
aligned as an exact match.  The grammar score is the number of credited
slots, and the assessment error is the absolute difference from the score of
a human-verified reading.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from gramscore.paragraph import RenderedForms


class OpKind(str, Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    INSERT = "insert"
    DELETE = "delete"


@dataclass(frozen=True)
class EditOp:
    kind: OpKind
    ref_pos: int | None
    hyp_pos: int | None


@dataclass(frozen=True)
class Alignment:
    ops: tuple[EditOp, ...]

    def count(self, kind: OpKind) -> int:
        return sum(1 for op in self.ops if op.kind == kind)

    @property
    def cost(self) -> int:
        return sum(1 for op in self.ops if op.kind != OpKind.MATCH)

    @property
    def matched_ref_positions(self) -> set[int]:
        return {op.ref_pos for op in self.ops if op.kind == OpKind.MATCH}


def _tokens_of(x) -> list[str]:
    tokens = getattr(x, "tokens", x)
    return list(tokens)


def align(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Minimal-cost edit alignment with unit costs.

    Backtrace ties are broken preferring match, then substitute, then delete,
    then insert, which pins down one canonical alignment per input pair.
    """
    ref = _tokens_of(ref)
    hyp = _tokens_of(hyp)
    n, m = len(ref), len(hyp)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = i
    for j in range(1, m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        row = dp[i]
        prev = dp[i - 1]
        ri = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (0 if ri == hyp[j - 1] else 1)
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)

    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dp[i][j] == dp[i - 1][j - 1]:
            ops.append(EditOp(OpKind.MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + 1:
            ops.append(EditOp(OpKind.SUBSTITUTE, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            ops.append(EditOp(OpKind.DELETE, i - 1, None))
            i -= 1
        else:
            ops.append(EditOp(OpKind.INSERT, None, j - 1))
            j -= 1
    ops.reverse()
    return Alignment(tuple(ops))


class EmptyReferenceError(ValueError):
    pass


def wer(ref, hyp) -> Fraction:
    """Word error rate: (substitutions + insertions + deletions) / |ref|."""
    ref_tokens = _tokens_of(ref)
    hyp_tokens = _tokens_of(hyp)
    if not ref_tokens:
        raise EmptyReferenceError("reference transcript is empty")
    alignment = align(ref_tokens, hyp_tokens)
    return Fraction(alignment.cost, len(ref_tokens))


@dataclass
class SlotCredit:
    index: int
    correct: str
    credited: bool
    observed: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "correct": self.correct,
            "credited": self.credited,
            "observed": list(self.observed),
        }


@dataclass
class GrammarReport:
    slots: tuple[SlotCredit, ...]
    score: int
    p1_size: int
    p2_size: int
    gold_score: int | None = None
    epsilon_g: int | None = None

    def to_json_dict(self) -> dict:
        out = {
            "score": self.score,
            "slots": [s.to_json_dict() for s in self.slots],
        }
        if self.epsilon_g is not None:
            out["epsilon_g"] = self.epsilon_g
        if self.gold_score is not None:
            out["gold_score"] = self.gold_score
        return out


def g_score(hyp, forms: RenderedForms) -> GrammarReport:
    """Score a hypothesis reading against the gold rendering.

    The reference-instance set p1 holds every gold token position that did
    not align as an exact match; a slot is credited when none of its span
    falls in p1, and the score is the number of credited slots.
    """
    hyp_tokens = _tokens_of(hyp)
    alignment = align(forms.gold_tokens, hyp_tokens)
    matched = alignment.matched_ref_positions
    p1_size = len(forms.gold_tokens) - len(matched)

    aligned_hyp: dict[int, int] = {}
    for op in alignment.ops:
        if op.kind in (OpKind.MATCH, OpKind.SUBSTITUTE):
            aligned_hyp[op.ref_pos] = op.hyp_pos

    credits: list[SlotCredit] = []
    for index, phrase in forms.grammar_words:
        start, end = forms.slot_spans[index]
        credited = all(pos in matched for pos in range(start, end))
        hyp_positions = [aligned_hyp[pos] for pos in range(start, end) if pos in aligned_hyp]
        if hyp_positions:
            observed = tuple(hyp_tokens[min(hyp_positions):max(hyp_positions) + 1])
        else:
            observed = ()
        credits.append(SlotCredit(index, phrase, credited, observed))

    score = sum(1 for c in credits if c.credited)
    return GrammarReport(tuple(credits), score, p1_size, score)


class ParagraphMismatchError(ValueError):
    pass


def grammar_error(report: GrammarReport, gold: GrammarReport) -> int:
    """Absolute score difference against the human-verified reading.

    Also written back into ``report`` so a serialized report carries its own
    error figure.
    """
    key = [(s.index, s.correct) for s in report.slots]
    gold_key = [(s.index, s.correct) for s in gold.slots]
    if key != gold_key:
        raise ParagraphMismatchError("reports cover different paragraphs")
    eps = abs(report.score - gold.score)
    report.gold_score = gold.score
    report.epsilon_g = eps
    return eps


@dataclass(frozen=True)
class CohortRow:
    student: str
    baseline_score: int
    baseline_eps: int
    clm_score: int
    clm_eps: int
    gold_score: int


@dataclass(frozen=True)
class CohortReport:
    rows: tuple[CohortRow, ...]
    baseline_total: int
    clm_total: int

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["student", "baseline_score", "baseline_eps",
                         "clm_score", "clm_eps", "gold"])
        for r in self.rows:
            writer.writerow([r.student, r.baseline_score, r.baseline_eps,
                             r.clm_score, r.clm_eps, r.gold_score])
        writer.writerow(["Total", "", self.baseline_total, "", self.clm_total, ""])
        return out.getvalue()

    def to_text(self) -> str:
        header = f"{'Student':<12} {'baseline':>12} {'constrained':>12} {'gold':>6}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.student:<12} {f'{r.baseline_score} ({r.baseline_eps})':>12} "
                f"{f'{r.clm_score} ({r.clm_eps})':>12} {r.gold_score:>6}")
        lines.append("-" * len(header))
        lines.append(f"{'Total':<12} {f'({self.baseline_total})':>12} "
                     f"{f'({self.clm_total})':>12} {'-':>6}")
        return "\n".join(lines)

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {
                    "student": r.student,
                    "baseline_score": r.baseline_score,
                    "baseline_eps": r.baseline_eps,
                    "clm_score": r.clm_score,
                    "clm_eps": r.clm_eps,
                    "gold": r.gold_score,
                }
                for r in self.rows
            ],
            "baseline_eps_total": self.baseline_total,
            "clm_eps_total": self.clm_total,
        }


def cohort_report(rows: Sequence[tuple[str, int, int, int]]) -> CohortReport:
    """Tabulate per-student scores for two systems against the gold score.

    Each input row is (student, baseline score, constrained-decode score,
    gold score); the per-system error columns and their totals are derived
    here rather than trusted from the caller.
    """
    if not rows:
        raise ValueError("cohort is empty")
    out: list[CohortRow] = []
    for student, baseline, clm, gold in rows:
        out.append(CohortRow(
            str(student), baseline, abs(baseline - gold), clm, abs(clm - gold), gold))
    return CohortReport(
        tuple(out),
        sum(r.baseline_eps for r in out),
        sum(r.clm_eps for r in out),
    )
