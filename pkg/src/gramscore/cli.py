"""Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 1 validation failure, 2 I/O failure, 3 configuration
problem.  Data goes to stdout (JSON with --json), diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from gramscore import genai, service
from gramscore.decode import (
    ChannelConfig,
    NBestList,
    Transcript,
    constrained_decode,
    load_transcript,
    rescore_nbest,
    simulate_asr,
    synthesize_reading,
)
from gramscore.lm import FusionConfig, fusion_score, read_arpa, train, write_arpa
from gramscore.paragraph import (
    TagSyntaxError,
    parse_tagged,
    render_display,
    render_gold,
    to_tagged_text,
    tokenize,
    validate,
)
from gramscore.scoring import cohort_report, g_score, grammar_error, wer
from gramscore.variants import (
    VariantCapExceededError,
    build_lattice,
    corpus_lines,
    enumerate_variants,
    split_sentences,
    variant_count,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_CONFIG = 3


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text("utf-8")
    except OSError as e:
        raise CommandError(EXIT_IO, f"cannot read {path}: {e}") from e


def _parse_paragraph(path: str):
    try:
        return parse_tagged(_read_text(path))
    except TagSyntaxError as e:
        details = "\n".join(f"  {i.severity.value}: {i.kind.value}: {i.message}" for i in e.issues)
        raise CommandError(EXIT_VALIDATION, f"{path} failed to parse:\n{details}") from e
    except ValueError as e:
        raise CommandError(EXIT_VALIDATION, f"{path}: {e}") from e


def _emit(args, payload: dict, plain: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(plain)


def _transcript_tokens(value: str) -> list[str]:
    path = Path(value)
    try:
        if path.is_file():
            return list(load_transcript(path).tokens)
    except OSError:
        pass
    tokens = tokenize(value)
    if not tokens:
        raise CommandError(EXIT_VALIDATION, "transcript is empty")
    return tokens


def cmd_parse(args) -> int:
    p = _parse_paragraph(args.file)
    issues = validate(p)
    payload = {
        "slot_count": p.slot_count,
        "slots": [
            {"index": s.index, "options": list(s.options), "correct_index": s.correct_index}
            for s in p.slots
        ],
        "warnings": [i.to_json_dict() for i in issues],
    }
    lines = [f"slots: {p.slot_count}"]
    for s in p.slots:
        lines.append(f"  [{s.index}] {'/'.join(s.options)}  (correct: {s.correct_option})")
    for i in issues:
        lines.append(f"  warning: {i.kind.value}: {i.message}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_display(args) -> int:
    p = _parse_paragraph(args.file)
    display = render_display(p)
    _emit(args, {"display_text": display}, display)
    return EXIT_OK


def cmd_gold(args) -> int:
    p = _parse_paragraph(args.file)
    forms = render_gold(p)
    payload = {
        "gold_text": forms.gold_text,
        "token_count": len(forms.gold_tokens),
        "grammar_words": [{"index": i, "phrase": phrase} for i, phrase in forms.grammar_words],
    }
    plain = forms.gold_text + "\n" + "\n".join(
        f"  [{i}] {phrase}" for i, phrase in forms.grammar_words)
    _emit(args, payload, plain)
    return EXIT_OK


def cmd_variants(args) -> int:
    p = _parse_paragraph(args.file)
    units = split_sentences(p)
    if args.sentence is not None:
        if not (0 <= args.sentence < len(units)):
            raise CommandError(EXIT_CONFIG,
                               f"--sentence {args.sentence} out of range (0..{len(units) - 1})")
        units = [units[args.sentence]]
    try:
        lines = [" ".join(v) for u in units for v in enumerate_variants(u, args.cap)]
    except VariantCapExceededError as e:
        raise CommandError(EXIT_VALIDATION, str(e)) from e
    counts = variant_count(p)
    payload = {"variants": lines, "count": len(lines),
               "per_sentence": list(counts.per_sentence), "total": counts.total}
    plain = "\n".join(lines) + f"\ncount: {len(lines)}"
    _emit(args, payload, plain)
    return EXIT_OK


def cmd_lm_train(args) -> int:
    text = _read_text(args.corpus)
    corpus = [line.split() for line in text.splitlines() if line.strip()]
    if not corpus:
        raise CommandError(EXIT_VALIDATION, f"{args.corpus} has no sentences")
    lm = train(corpus, order=args.order)
    try:
        Path(args.output).write_bytes(write_arpa(lm))
    except OSError as e:
        raise CommandError(EXIT_IO, f"cannot write {args.output}: {e}") from e
    _emit(args, {"order": lm.order, "vocabulary": len(lm.vocab), "output": args.output},
          f"trained order-{lm.order} model over {len(lm.vocab)} words -> {args.output}")
    return EXIT_OK


def _load_lm(path: str):
    from gramscore.lm import ArpaFormatError

    try:
        return read_arpa(Path(path).read_bytes())
    except OSError as e:
        raise CommandError(EXIT_IO, f"cannot read {path}: {e}") from e
    except ArpaFormatError as e:
        raise CommandError(EXIT_VALIDATION, f"{path}: {e}") from e


def cmd_lm_score(args) -> int:
    lm = _load_lm(args.model)
    tokens = _transcript_tokens(args.text)
    score = lm.score_sequence(tokens)
    _emit(args, {"log10_probability": score, "tokens": tokens}, f"{score:.6f}")
    return EXIT_OK


def cmd_rescore(args) -> int:
    lm = _load_lm(args.lm)
    try:
        payload = json.loads(_read_text(args.nbest))
        nbest = NBestList.from_json_dict(payload)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise CommandError(EXIT_VALIDATION, f"{args.nbest}: not a valid N-best payload: {e}") from e
    cfg = FusionConfig(args.gamma)
    picked = rescore_nbest(nbest, lm, cfg)
    scores = [
        {"text": " ".join(e.tokens),
         "acoustic_log": e.acoustic_log,
         "lm_log": lm.score_sequence(e.tokens),
         "combined": fusion_score(e.acoustic_log, lm.score_sequence(e.tokens), cfg)}
        for e in nbest.entries
    ]
    _emit(args, {"chosen": picked.text, "entries": scores}, picked.text)
    return EXIT_OK


def cmd_decode(args) -> int:
    p = _parse_paragraph(args.lattice_from)
    units = split_sentences(p)
    if not (0 <= args.sentence < len(units)):
        raise CommandError(EXIT_CONFIG,
                           f"--sentence {args.sentence} out of range (0..{len(units) - 1})")
    unit = units[args.sentence]
    lattice = build_lattice(unit)
    lm = train(enumerate_variants(unit), order=args.order)
    observed = _transcript_tokens(args.observed)
    result = constrained_decode(observed, lattice, lm, FusionConfig(args.gamma))
    payload = {
        "decoded": result.transcript.text,
        "slot_options": {str(k): v for k, v in sorted(result.slot_options.items())},
        "objective": result.objective,
    }
    _emit(args, payload, result.transcript.text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = _parse_paragraph(args.paragraph)
    ch = ChannelConfig(p_sub=args.p_sub, p_del=args.p_del, p_ins=args.p_ins,
                       bias_mode=args.bias)
    if args.truth:
        truth_tokens = _transcript_tokens(args.truth)
    else:
        truth_tokens = [t for sent in synthesize_reading(p, args.skill, args.seed) for t in sent]
    out = simulate_asr(Transcript(tuple(truth_tokens)), p, ch, args.seed)
    payload = {"truth": " ".join(truth_tokens), "observed": out.text, "seed": args.seed}
    _emit(args, payload, out.text)
    return EXIT_OK


def cmd_score(args) -> int:
    p = _parse_paragraph(args.paragraph)
    forms = render_gold(p)
    report = g_score(_transcript_tokens(args.hyp), forms)
    if args.gold_hyp:
        gold_report = g_score(_transcript_tokens(args.gold_hyp), forms)
        grammar_error(report, gold_report)
    payload = report.to_json_dict()
    lines = [f"score: {report.score} / {len(forms.grammar_words)}"]
    for s in report.slots:
        mark = "+" if s.credited else "-"
        lines.append(f"  {mark} [{s.index}] {s.correct}  observed: {' '.join(s.observed) or '(nothing)'}")
    if report.epsilon_g is not None:
        lines.append(f"gold score: {report.gold_score}  epsilon_g: {report.epsilon_g}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_wer(args) -> int:
    ref = _transcript_tokens(args.ref)
    hyp = _transcript_tokens(args.hyp)
    try:
        rate = wer(ref, hyp)
    except ValueError as e:
        raise CommandError(EXIT_VALIDATION, str(e)) from e
    payload = {"wer": float(rate), "numerator": rate.numerator, "denominator": rate.denominator}
    _emit(args, payload, f"{float(rate):.6f}")
    return EXIT_OK


def cmd_gen(args) -> int:
    request = genai.GenerationRequest(
        subject=args.subject, slot_count_range=(args.slots[0], args.slots[1]))
    if args.offline:
        paragraph = genai.offline_generate(args.seed, request)
        text = to_tagged_text(paragraph)
        _emit(args, {"paragraph": text, "slot_count": paragraph.slot_count,
                     "display_text": render_display(paragraph)}, text)
        return EXIT_OK
    client = genai.HttpChatClient.from_env()
    if client is None:
        raise CommandError(EXIT_CONFIG,
                           f"set {genai.ENV_ENDPOINT} (and friends) or pass --offline")
    try:
        record = genai.generate_paragraph(client, genai.PromptTemplate(), request)
    except genai.GenerationEndpointError as e:
        raise CommandError(EXIT_IO, str(e)) from e
    if not record.accepted:
        raise CommandError(EXIT_VALIDATION, record.failure_reason)
    text = to_tagged_text(record.paragraph)
    _emit(args, {"paragraph": text, "slot_count": record.paragraph.slot_count,
                 "attempts": len(record.attempts)}, text)
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        config = service.ServiceConfig.from_file(args.config) if args.config \
            else service.ServiceConfig()
    except (OSError, ValueError) as e:
        raise CommandError(EXIT_CONFIG, f"bad config: {e}") from e
    service.serve(config)
    return EXIT_OK


def cmd_cohort(args) -> int:
    store = service.SessionStore(args.store)
    rows = []
    for session in store.all_sessions():
        if session.cohort:
            c = session.cohort
            rows.append((c["student"], c["baseline_score"], c["clm_score"], c["gold_score"]))
    if not rows:
        raise CommandError(EXIT_VALIDATION, f"no scored simulation sessions in {args.store}")
    report = cohort_report(rows)
    if args.format == "csv":
        print(report.to_csv(), end="")
    elif args.format == "json" or getattr(args, "json", False):
        print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    else:
        print(report.to_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gramscore",
        description="Spoken grammar assessment pipeline, one subcommand per stage.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = add("parse", cmd_parse, "parse a tagged paragraph and list its slots")
    p.add_argument("file")

    p = add("display", cmd_display, "render the student-facing paragraph")
    p.add_argument("file")

    p = add("gold", cmd_gold, "render the correct reading and grammar words")
    p.add_argument("file")

    p = add("variants", cmd_variants, "enumerate variant readings")
    p.add_argument("file")
    p.add_argument("--sentence", type=int, default=None, help="restrict to one sentence")
    p.add_argument("--cap", type=int, default=10_000)

    p = add("lm-train", cmd_lm_train, "train a variant language model")
    p.add_argument("corpus", help="one sentence per line, tokens space-separated")
    p.add_argument("-o", "--output", required=True, help="ARPA output path")
    p.add_argument("--order", type=int, default=3)

    p = add("lm-score", cmd_lm_score, "score a sentence under a trained model")
    p.add_argument("model", help="ARPA model path")
    p.add_argument("text", help="transcript file or literal text")

    p = add("rescore", cmd_rescore, "shallow-fusion rescoring of an N-best list")
    p.add_argument("--nbest", required=True, help="JSON N-best payload path")
    p.add_argument("--lm", required=True, help="ARPA model path")
    p.add_argument("--gamma", type=float, default=0.5)

    p = add("decode", cmd_decode, "constrained decode against a sentence lattice")
    p.add_argument("--lattice-from", required=True, help="tagged paragraph file")
    p.add_argument("--observed", required=True, help="transcript file or literal text")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--sentence", type=int, default=0)
    p.add_argument("--order", type=int, default=3)

    p = add("simulate", cmd_simulate, "run the recognizer-channel simulator")
    p.add_argument("--paragraph", required=True)
    p.add_argument("--truth", help="transcript file or literal text; default synthesizes")
    p.add_argument("--skill", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-sub", type=float, default=0.0)
    p.add_argument("--p-del", type=float, default=0.0)
    p.add_argument("--p-ins", type=float, default=0.0)
    p.add_argument("--bias", choices=["none", "grammar-correcting"], default="none")

    p = add("score", cmd_score, "grammar-score a hypothesis reading")
    p.add_argument("--paragraph", required=True)
    p.add_argument("--hyp", required=True, help="transcript file or literal text")
    p.add_argument("--gold-hyp", help="human-verified transcript for epsilon_g")

    p = add("wer", cmd_wer, "word error rate between two transcripts")
    p.add_argument("ref")
    p.add_argument("hyp")

    p = add("gen", cmd_gen, "generate a fresh assessment paragraph")
    p.add_argument("--subject")
    p.add_argument("--offline", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slots", type=int, nargs=2, default=[8, 12], metavar=("LO", "HI"))

    p = add("serve", cmd_serve, "run the assessment HTTP service")
    p.add_argument("--config", help="YAML/JSON service config")

    p = add("cohort", cmd_cohort, "tabulate scored simulation sessions")
    p.add_argument("--store", required=True, help="JSON-lines session store path")
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CommandError as e:
        print(str(e), file=sys.stderr)
        return e.code
    except ValueError as e:
        print(str(e), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
