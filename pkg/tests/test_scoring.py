import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gramscore.paragraph import parse_tagged, render_gold, tokenize
from gramscore.scoring import (
    EmptyReferenceError,
    OpKind,
    ParagraphMismatchError,
    align,
    cohort_report,
    g_score,
    grammar_error,
    wer,
)

from .oracles import edit_distance, slot_scores
from .strategies import paragraph_case

token = st.sampled_from(["a", "b", "c", "d", "e"])
token_list = st.lists(token, min_size=0, max_size=10)

# Per-student cohort behavior reported for the recognizer comparison:
# (student, general-recognizer score, constrained-decode score, verified score).
REFERENCE_COHORT = [
    ("#1", 14, 15, 15),
    ("#2", 11, 11, 10),
    ("#3", 11, 9, 9),
    ("#4", 12, 13, 13),
    ("#5", 12, 12, 13),
    ("#6", 10, 12, 12),
    ("#7", 6, 8, 8),
    ("#8", 15, 12, 12),
    ("#10", 15, 16, 16),
    ("#11", 3, 3, 3),
    ("#12", 6, 8, 8),
    ("#13", 10, 12, 12),
    ("#14", 15, 15, 16),
    ("#15", 14, 15, 15),
    ("#16", 14, 14, 14),
    ("#17", 13, 13, 13),
]


class TestAlign:
    def test_identity(self):
        a = align(["a", "b", "c"], ["a", "b", "c"])
        assert [op.kind for op in a.ops] == [OpKind.MATCH] * 3
        assert a.cost == 0

    def test_single_substitution(self):
        a = align(["a", "b", "c"], ["a", "x", "c"])
        assert [op.kind for op in a.ops] == [OpKind.MATCH, OpKind.SUBSTITUTE, OpKind.MATCH]

    def test_insert_and_delete_positions(self):
        a = align(["a", "b"], ["b"])
        kinds = [op.kind for op in a.ops]
        assert kinds.count(OpKind.DELETE) == 1 and kinds.count(OpKind.MATCH) == 1

    def test_empty_sides(self):
        assert align([], []).ops == ()
        assert [op.kind for op in align(["a"], []).ops] == [OpKind.DELETE]
        assert [op.kind for op in align([], ["a"]).ops] == [OpKind.INSERT]

    def test_replay_transforms_ref_into_hyp(self):
        ref = ["x", "a", "b", "c"]
        hyp = ["a", "b", "y", "c", "z"]
        out = []
        for op in align(ref, hyp).ops:
            if op.kind in (OpKind.MATCH, OpKind.SUBSTITUTE, OpKind.INSERT):
                out.append(hyp[op.hyp_pos])
        assert out == hyp

    def test_cost_matches_oracle_on_random_pairs(self):
        rng = random.Random(20240917)
        vocab = ["a", "b", "c", "d", "e"]
        for _ in range(1000):
            ref = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
            hyp = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
            assert align(ref, hyp).cost == edit_distance(ref, hyp)

    @given(token_list, token_list)
    def test_cost_matches_oracle_property(self, ref, hyp):
        assert align(ref, hyp).cost == edit_distance(ref, hyp)


class TestWer:
    def test_identical_is_zero(self):
        assert wer(["a", "b", "c"], ["a", "b", "c"]) == 0

    def test_one_substitution(self):
        assert wer(["a", "b", "c"], ["a", "x", "c"]) == Fraction(1, 3)

    def test_insertions_can_reach_one(self):
        assert wer(["a", "b"], ["a", "b", "c", "d"]) == Fraction(2, 2) == 1

    def test_empty_reference_rejected(self):
        with pytest.raises(EmptyReferenceError):
            wer([], ["a"])

    @given(token_list.filter(bool), token_list, token)
    def test_appending_same_token_never_raises_error_count(self, ref, hyp, extra):
        base = wer(ref, hyp) * len(ref)
        extended = wer(ref + [extra], hyp + [extra]) * (len(ref) + 1)
        assert extended <= base


class TestGScore:
    def test_perfect_reading_credits_all(self, sample_forms):
        report = g_score(list(sample_forms.gold_tokens), sample_forms)
        assert report.score == 10
        assert report.p1_size == 0
        assert all(s.credited for s in report.slots)

    def test_wrong_article_loses_exactly_that_slot(self, sample_forms):
        hyp = list(sample_forms.gold_tokens)
        start, _ = sample_forms.slot_spans[0]
        assert hyp[start] == "a"
        hyp[start] = "an"
        report = g_score(hyp, sample_forms)
        assert report.score == 9
        assert not report.slots[0].credited
        assert report.slots[0].observed == ("an",)
        assert all(s.credited for s in report.slots[1:])
        assert report.p1_size == 1

    def test_non_slot_deletion_keeps_score(self, sample_forms):
        hyp = list(sample_forms.gold_tokens)
        hyp.remove("poetry")
        report = g_score(hyp, sample_forms)
        assert report.score == 10

    def test_multiword_phrase_needs_all_tokens(self, sample_forms):
        hyp = list(sample_forms.gold_tokens)
        start, end = sample_forms.slot_spans[2]
        assert list(sample_forms.gold_tokens[start:end]) == ["is", "punctuated"]
        del hyp[start]  # drop "is", keep "punctuated"
        report = g_score(hyp, sample_forms)
        assert not report.slots[2].credited
        assert report.score == 9

    def test_matches_oracle_on_random_paragraph_corruptions(self):
        rng = random.Random(7311)
        cases = 0
        while cases < 500:
            text, option_lists = _random_paragraph(rng)
            forms = render_gold(parse_tagged(text))
            hyp = _corrupt(list(forms.gold_tokens), rng)
            expected = slot_scores(list(forms.gold_tokens), forms.slot_spans, hyp)
            report = g_score(hyp, forms)
            assert {s.index: s.credited for s in report.slots} == expected
            assert report.score == sum(expected.values())
            cases += 1

    def test_matches_oracle_exhaustive_small(self):
        text = "one <grammar><correct>red</correct>/blue</grammar> fish and " \
               "<grammar>swim/<correct>swam</correct>/swum</grammar> away"
        forms = render_gold(parse_tagged(text))
        gold = list(forms.gold_tokens)
        assert len(gold) <= 12
        vocab = sorted(set(gold) | {"blue", "swim", "swum", "zz"})
        hyps = _all_edits_within(gold, vocab, distance=2)
        for hyp in hyps:
            expected = slot_scores(gold, forms.slot_spans, hyp)
            report = g_score(hyp, forms)
            assert {s.index: s.credited for s in report.slots} == expected

    @given(paragraph_case(min_slots=1, max_slots=5))
    def test_gold_reading_scores_full_marks(self, case):
        text, _ = case
        forms = render_gold(parse_tagged(text))
        report = g_score(list(forms.gold_tokens), forms)
        assert report.score == len(forms.grammar_words)

    def test_score_bounded(self, sample_forms):
        report = g_score(["nothing", "matches", "here"], sample_forms)
        assert 0 <= report.score <= len(sample_forms.grammar_words)
        assert report.score == 0


def _random_paragraph(rng: random.Random):
    words = ["cat", "dog", "sun", "sky", "run", "sit", "big", "old", "new", "far"]
    n_slots = rng.randint(1, 3)
    pieces = [rng.choice(words)]
    option_lists = []
    for _ in range(n_slots):
        options = rng.sample(["is", "are", "was", "were", "be", "am"], k=3)
        correct = rng.randrange(3)
        rendered = "/".join(
            f"<correct>{o}</correct>" if i == correct else o for i, o in enumerate(options))
        pieces.append(f"<grammar>{rendered}</grammar>")
        pieces.append(" ".join(rng.choice(words) for _ in range(rng.randint(1, 3))))
        option_lists.append(options)
    return " ".join(pieces) + ".", option_lists


def _corrupt(tokens: list[str], rng: random.Random) -> list[str]:
    pool = tokens + ["zz", "qq"]
    out = list(tokens)
    for _ in range(rng.randint(0, 3)):
        if not out:
            break
        action = rng.choice(["sub", "del", "ins"])
        pos = rng.randrange(len(out))
        if action == "sub":
            out[pos] = rng.choice(pool)
        elif action == "del":
            del out[pos]
        else:
            out.insert(pos, rng.choice(pool))
    return out


def _all_edits_within(tokens: list[str], vocab: list[str], distance: int) -> list[list[str]]:
    seen = {tuple(tokens)}
    frontier = [list(tokens)]
    for _ in range(distance):
        new_frontier = []
        for base in frontier:
            for pos in range(len(base)):
                for w in vocab:
                    cand = base[:pos] + [w] + base[pos + 1:]
                    if tuple(cand) not in seen:
                        seen.add(tuple(cand))
                        new_frontier.append(cand)
                cand = base[:pos] + base[pos + 1:]
                if tuple(cand) not in seen:
                    seen.add(tuple(cand))
                    new_frontier.append(cand)
            for pos in range(len(base) + 1):
                for w in vocab[:2]:
                    cand = base[:pos] + [w] + base[pos:]
                    if tuple(cand) not in seen:
                        seen.add(tuple(cand))
                        new_frontier.append(cand)
        frontier = new_frontier
    return [list(t) for t in seen]


class TestGrammarError:
    def test_off_by_one(self, sample_forms):
        hyp = list(sample_forms.gold_tokens)
        start, _ = sample_forms.slot_spans[0]
        hyp[start] = "an"
        report = g_score(hyp, sample_forms)
        gold = g_score(list(sample_forms.gold_tokens), sample_forms)
        assert grammar_error(report, gold) == 1
        assert report.epsilon_g == 1
        assert report.gold_score == 10

    def test_equal_scores_give_zero(self, sample_forms):
        a = g_score(list(sample_forms.gold_tokens), sample_forms)
        b = g_score(list(sample_forms.gold_tokens), sample_forms)
        assert grammar_error(a, b) == 0

    def test_mismatched_paragraphs_rejected(self, sample_forms):
        other = render_gold(parse_tagged("x <grammar><correct>p</correct>/q</grammar> y."))
        with pytest.raises(ParagraphMismatchError):
            grammar_error(g_score(["x"], other), g_score(["x"], sample_forms))


class TestCohortReport:
    def test_reference_rows_round_trip(self):
        report = cohort_report(REFERENCE_COHORT)
        assert report.baseline_total == 20
        assert report.clm_total == 3
        by_student = {r.student: r for r in report.rows}
        assert by_student["#1"].baseline_eps == 1
        assert by_student["#1"].clm_eps == 0
        assert by_student["#8"].baseline_eps == 3
        assert by_student["#11"].baseline_eps == 0

    def test_totals_match_independent_summation(self):
        report = cohort_report(REFERENCE_COHORT)
        assert report.baseline_total == sum(abs(b - g) for _, b, _, g in REFERENCE_COHORT)
        assert report.clm_total == sum(abs(c - g) for _, _, c, g in REFERENCE_COHORT)

    def test_single_row_all_equal(self):
        report = cohort_report([("s1", 5, 5, 5)])
        assert report.baseline_total == 0 and report.clm_total == 0

    def test_csv_layout(self):
        text = cohort_report(REFERENCE_COHORT).to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "student,baseline_score,baseline_eps,clm_score,clm_eps,gold"
        assert lines[-1].startswith("Total")
        assert len(lines) == len(REFERENCE_COHORT) + 2

    def test_text_layout_shows_parenthesized_errors(self):
        text = cohort_report(REFERENCE_COHORT).to_text()
        assert "14 (1)" in text
        assert "(20)" in text and "(3)" in text

    def test_empty_cohort_rejected(self):
        with pytest.raises(ValueError):
            cohort_report([])


def perturb_non_slot_tokens(gold, spans, rng, trial):
    """Mis-recognition noise away from the slots.

    Substitutions and insertions use fresh junk tokens; deletion trials stay
    deletion-only, because an insertion and a deletion flanking a slot can
    tie-shift the minimal alignment through it (see the boundary test below).
    """
    slot_positions = {pos for start, end in spans.values() for pos in range(start, end)}
    free = [i for i in range(len(gold)) if i not in slot_positions]
    hyp: list = list(gold)
    positions = rng.sample(free, rng.randint(1, 3))
    if rng.random() < 0.3:
        for pos in positions:
            hyp[pos] = None
    else:
        for k, pos in enumerate(positions):
            if rng.random() < 0.5:
                hyp[pos] = f"junk{trial}x{k}"
            else:
                hyp[pos] = (hyp[pos], f"junk{trial}x{k}")
    flattened = []
    for item in hyp:
        if item is None:
            continue
        if isinstance(item, tuple):
            flattened.extend(item)
        else:
            flattened.append(item)
    return flattened


class TestSlotLocality:
    def test_random_non_slot_perturbations_never_change_score(self, sample_forms):
        rng = random.Random(90125)
        gold = list(sample_forms.gold_tokens)
        for trial in range(1000):
            hyp = perturb_non_slot_tokens(gold, sample_forms.slot_spans, rng, trial)
            assert g_score(hyp, sample_forms).score == 10

    def test_known_boundary_insert_plus_delete_flanking_a_slot(self, sample_forms):
        # Inserting junk right before a slot token while deleting the token
        # right after it makes two minimal alignments tie; the canonical
        # backtrace then substitutes through the slot.  This is a property of
        # edit alignment itself (the independent oracle agrees), so it is
        # pinned here as expected behavior rather than hidden.
        gold = list(sample_forms.gold_tokens)
        start, end = sample_forms.slot_spans[4]  # single-token span
        hyp = gold[:start] + ["junkX"] + gold[start:end] + gold[end + 1:]
        report = g_score(hyp, sample_forms)
        expected = slot_scores(gold, sample_forms.slot_spans, hyp)
        assert {s.index: s.credited for s in report.slots} == expected
        assert not report.slots[4].credited
