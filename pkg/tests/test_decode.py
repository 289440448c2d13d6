import json
import random

import pytest

from gramscore.decode import (
    ChannelConfig,
    NBestEntry,
    NBestList,
    Transcript,
    TranscriptPayloadError,
    constrained_decode,
    decode_paragraph,
    load_transcript,
    rescore_nbest,
    simulate_asr,
    synthesize_reading,
)
from gramscore.lm import FusionConfig, train
from gramscore.paragraph import parse_tagged
from gramscore.variants import build_lattice, enumerate_variants, split_sentences

from .oracles import edit_distance
from .test_variants import iter_lattice_paths


@pytest.fixture(scope="module")
def first_sentence(sample_paragraph):
    return split_sentences(sample_paragraph)[0]


@pytest.fixture(scope="module")
def nine_variants(first_sentence):
    return enumerate_variants(first_sentence)


@pytest.fixture(scope="module")
def clm(nine_variants):
    return train(nine_variants, order=3)


@pytest.fixture(scope="module")
def gold_only_lm(sample_paragraph):
    return train([u.gold_tokens for u in split_sentences(sample_paragraph)], order=3)


@pytest.fixture(scope="module")
def first_lattice(first_sentence):
    return build_lattice(first_sentence)


GOLD_FIRST = "for a student studying poetry can be a roller coaster ride".split()


class TestRescore:
    def test_single_entry_wins(self, clm):
        nbest = NBestList((NBestEntry(tuple(GOLD_FIRST), -4.2),))
        assert rescore_nbest(nbest, clm, FusionConfig(3.0)).tokens == tuple(GOLD_FIRST)

    def test_gold_biased_lm_overrides_acoustics(self, gold_only_lm):
        spoken_wrong = "for a student study poetry can be a roller coaster ride".split()
        nbest = NBestList((
            NBestEntry(tuple(spoken_wrong), -1.0),
            NBestEntry(tuple(GOLD_FIRST), -1.2),
        ))
        picked = rescore_nbest(nbest, gold_only_lm, FusionConfig(1.0))
        assert picked.tokens == tuple(GOLD_FIRST)
        assert picked.source == "nbest-rescored"

    def test_variant_trained_lm_respects_acoustics(self, clm):
        spoken_wrong = "for a student study poetry can be a roller coaster ride".split()
        nbest = NBestList((
            NBestEntry(tuple(spoken_wrong), -1.0),
            NBestEntry(tuple(GOLD_FIRST), -1.2),
        ))
        picked = rescore_nbest(nbest, clm, FusionConfig(1.0))
        assert picked.tokens == tuple(spoken_wrong)

    def test_gamma_zero_is_acoustic_argmax(self, clm, nine_variants):
        rng = random.Random(5)
        entries = tuple(NBestEntry(tuple(v), -rng.uniform(0, 20)) for v in nine_variants)
        nbest = NBestList(entries)
        best = max(range(len(entries)), key=lambda i: entries[i].acoustic_log)
        assert rescore_nbest(nbest, clm, FusionConfig(0.0)).tokens == entries[best].tokens

    def test_tie_keeps_earlier_entry(self, clm):
        nbest = NBestList((
            NBestEntry(tuple(GOLD_FIRST), -2.0),
            NBestEntry(tuple(GOLD_FIRST), -2.0),
        ))
        assert rescore_nbest(nbest, clm, FusionConfig(0.5)).tokens == tuple(GOLD_FIRST)

    def test_empty_nbest_rejected(self):
        with pytest.raises(ValueError):
            NBestList(())


class TestConstrainedDecode:
    def test_identity_on_all_nine(self, nine_variants, first_lattice, clm):
        for variant in nine_variants:
            result = constrained_decode(variant, first_lattice, clm)
            assert list(result.transcript.tokens) == variant

    def test_gold_reading_reports_correct_options(self, first_lattice, clm, first_sentence):
        result = constrained_decode(GOLD_FIRST, first_lattice, clm)
        assert list(result.transcript.tokens) == GOLD_FIRST
        expected = {slot.index: slot.correct_index for slot in first_sentence.slots}
        assert result.slot_options == expected
        assert result.transcript.source == "constrained-decode"

    def test_recovers_wrong_variant_despite_corruption(self, nine_variants, first_lattice, clm,
                                                       first_sentence):
        slot_positions = {1, 3}  # token offsets of the two slots in these variants
        for variant in nine_variants:
            for pos in range(len(variant)):
                if pos in slot_positions:
                    continue
                corrupted = list(variant)
                corrupted[pos] = "xyzzy"
                result = constrained_decode(corrupted, first_lattice, clm)
                assert list(result.transcript.tokens) == variant, (variant, pos)

    def test_output_is_always_a_lattice_path(self, first_lattice, clm):
        legal = {tuple(tokens) for tokens, _ in iter_lattice_paths(first_lattice)}
        rng = random.Random(11)
        words = ["blorp", "a", "student", "ride", "zz", "poetry"]
        for _ in range(25):
            gibberish = [rng.choice(words) for _ in range(rng.randint(0, 14))]
            result = constrained_decode(gibberish, first_lattice, clm)
            assert result.transcript.tokens in legal

    def test_matches_brute_force_on_small_instances(self, clm):
        rng = random.Random(77)
        text = ("go <grammar><correct>up</correct>/down/over</grammar> the "
                "<grammar>hill/<correct>hills</correct>/hilly</grammar> and "
                "<grammar>rest/<correct>rests</correct>/resting</grammar> now")
        unit = split_sentences(parse_tagged(text))[0]
        lattice = build_lattice(unit)
        lm = train(enumerate_variants(unit), order=2)
        paths = [tokens for tokens, _ in iter_lattice_paths(lattice)]
        assert len(paths) == 27
        cfg = FusionConfig(0.7)
        words = ["go", "up", "down", "the", "hill", "hills", "rest", "now", "zzz"]
        for _ in range(30):
            observed = [rng.choice(words) for _ in range(rng.randint(0, 12))]
            result = constrained_decode(observed, lattice, lm, cfg)
            brute = min(
                edit_distance(path, observed) - cfg.gamma * lm.score_sequence(path)
                for path in paths)
            assert result.objective == pytest.approx(brute, abs=1e-9)

    def test_custom_channel_costs_shift_the_optimum(self, first_lattice, clm):
        # with deletions nearly free, an empty observation maps to some path
        result = constrained_decode(
            [], first_lattice, clm, FusionConfig(0.0),
            ChannelConfig(deletion_cost=0.01))
        assert len(result.transcript.tokens) > 0


class TestSimulator:
    def test_zero_noise_identity(self, sample_paragraph, sample_forms):
        truth = Transcript(tuple(sample_forms.gold_tokens), "manual")
        out = simulate_asr(truth, sample_paragraph, ChannelConfig(), seed=3)
        assert out.tokens == truth.tokens
        assert out.source == "simulator"

    def test_grammar_correcting_bias_rewrites_wrong_article(self):
        p = parse_tagged(
            "It was <grammar><correct>a</correct>/an/the</grammar> late afternoon "
            "probably on the 15th of February.")
        spoken = "it was the late afternoon probably on the 15th of february".split()
        out = simulate_asr(spoken, p, ChannelConfig(bias_mode="grammar-correcting"), seed=0)
        assert list(out.tokens) == "it was a late afternoon probably on the 15th of february".split()

    def test_bias_leaves_correct_reading_alone(self, sample_paragraph, sample_forms):
        truth = list(sample_forms.gold_tokens)
        out = simulate_asr(truth, sample_paragraph,
                           ChannelConfig(bias_mode="grammar-correcting"), seed=0)
        assert list(out.tokens) == truth

    def test_bias_corrects_every_wrong_slot(self, sample_paragraph, sample_forms):
        reading = synthesize_reading(sample_paragraph, skill=0.0, seed=21)
        flat = [tok for sent in reading for tok in sent]
        out = simulate_asr(flat, sample_paragraph,
                           ChannelConfig(bias_mode="grammar-correcting"), seed=0)
        assert list(out.tokens) == list(sample_forms.gold_tokens)

    def test_seeded_noise_replays(self, sample_paragraph, sample_forms):
        truth = list(sample_forms.gold_tokens)
        ch = ChannelConfig(p_sub=0.1, p_del=0.05, p_ins=0.05)
        first = simulate_asr(truth, sample_paragraph, ch, seed=42)
        second = simulate_asr(truth, sample_paragraph, ch, seed=42)
        other = simulate_asr(truth, sample_paragraph, ch, seed=43)
        assert first.tokens == second.tokens
        assert first.tokens != truth or other.tokens != truth

    def test_rates_validated(self):
        with pytest.raises(ValueError):
            ChannelConfig(p_sub=1.5)
        with pytest.raises(ValueError):
            ChannelConfig(substitution_cost=-1)
        with pytest.raises(ValueError):
            ChannelConfig(bias_mode="mystery")


class TestSynthesizeReading:
    def test_full_skill_reads_gold(self, sample_paragraph):
        sentences = synthesize_reading(sample_paragraph, skill=1.0, seed=9)
        units = split_sentences(sample_paragraph)
        assert [s for s in sentences] == [u.gold_tokens for u in units]

    def test_zero_skill_misses_every_slot(self, sample_paragraph):
        sentences = synthesize_reading(sample_paragraph, skill=0.0, seed=9)
        units = split_sentences(sample_paragraph)
        for spoken, unit in zip(sentences, units):
            assert spoken != unit.gold_tokens

    def test_deterministic_per_seed(self, sample_paragraph):
        a = synthesize_reading(sample_paragraph, skill=0.5, seed=4)
        b = synthesize_reading(sample_paragraph, skill=0.5, seed=4)
        assert a == b

    def test_reading_is_always_a_variant(self, sample_paragraph):
        units = split_sentences(sample_paragraph)
        legal = [
            {tuple(v) for v in enumerate_variants(u)} for u in units]
        for seed in range(10):
            for spoken, legal_set in zip(synthesize_reading(sample_paragraph, 0.5, seed), legal):
                assert tuple(spoken) in legal_set


class TestDecodeParagraph:
    def test_gold_reading_decodes_to_gold(self, sample_paragraph, sample_forms):
        lm = train([v for u in split_sentences(sample_paragraph)
                    for v in enumerate_variants(u)], order=3)
        reading = synthesize_reading(sample_paragraph, skill=1.0, seed=1)
        transcript, options = decode_paragraph(sample_paragraph, reading, lm)
        assert transcript.tokens == sample_forms.gold_tokens
        assert options == {s.index: s.correct_index for s in sample_paragraph.slots}

    def test_sentence_count_checked(self, sample_paragraph):
        lm = train([["a"]], order=1)
        with pytest.raises(ValueError):
            decode_paragraph(sample_paragraph, [["a"]], lm)


class TestLoadTranscript:
    def test_text_file(self, tmp_path):
        path = tmp_path / "reading.txt"
        path.write_text("For a student, studying poetry.")
        t = load_transcript(path)
        assert t.tokens == ("for", "a", "student", "studying", "poetry")
        assert t.source == "manual"

    def test_raw_string(self):
        assert load_transcript("Hello there").tokens == ("hello", "there")

    def test_nbest_payload_redirected(self):
        payload = json.dumps({"entries": [{"text": "a b", "acoustic_log": -1.0}]})
        with pytest.raises(TranscriptPayloadError):
            load_transcript(payload)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("   \n")
        with pytest.raises(ValueError):
            load_transcript(path)

    def test_nbest_json_round_trip(self):
        payload = {"entries": [
            {"text": "For a student", "acoustic_log": -1.5},
            {"text": "For an student", "acoustic_log": -1.0},
        ]}
        nbest = NBestList.from_json_dict(payload)
        assert len(nbest.entries) == 2
        assert nbest.entries[0].tokens == ("for", "a", "student")
