"""Assessment paragraph generation.

A chat endpoint is prompted with one exemplar paragraph in tag format and
asked for another like it; replies are parsed and validated, with a
corrective retry when the model returns broken markup.  An offline template
generator covers network-free operation and deterministic tests.
"""

from __future__ import annotations

import os
import random
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from gramscore.paragraph import (
    TaggedParagraph,
    TagSyntaxError,
    ValidationIssue,
    parse_tagged,
    validate,
)
from gramscore.samples import SAMPLE_PARAGRAPH

DEFAULT_FIRST_INSTRUCTION = (
    'The text between """ marks is a paragraph used for grammar assessment. '
    "Each <grammar> </grammar> group lists options separated by \"/\" and wraps "
    "exactly one correct option in <correct> </correct> tags."
)
DEFAULT_GENERATE_INSTRUCTION = "Generate a paragraph similar to the example shown."

ENV_ENDPOINT = "GRAMSCORE_LLM_ENDPOINT"
ENV_API_KEY = "GRAMSCORE_LLM_API_KEY"
ENV_MODEL = "GRAMSCORE_LLM_MODEL"
ENV_TIMEOUT = "GRAMSCORE_LLM_TIMEOUT"


class TemplateError(ValueError):
    pass


class GenerationEndpointError(RuntimeError):
    def __init__(self, attempt: int, cause: Exception):
        self.attempt = attempt
        super().__init__(f"chat endpoint failed on attempt {attempt}: {cause}")


@dataclass(frozen=True)
class PromptTemplate:
    exemplar: str = SAMPLE_PARAGRAPH
    instruction_first: str = DEFAULT_FIRST_INSTRUCTION
    instruction_generate: str = DEFAULT_GENERATE_INSTRUCTION


@dataclass(frozen=True)
class GenerationRequest:
    subject: str | None = None
    max_retries: int = 3
    slot_count_range: tuple[int, int] = (8, 12)

    def __post_init__(self):
        lo, hi = self.slot_count_range
        if not (0 < lo <= hi):
            raise ValueError(f"slot_count_range must be positive and ordered, got {self.slot_count_range}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass
class GenerationAttempt:
    response_text: str
    issues: list[ValidationIssue]
    slot_count: int | None

    @property
    def errors(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.is_error]


@dataclass
class GenerationRecord:
    attempts: list[GenerationAttempt] = field(default_factory=list)
    paragraph: TaggedParagraph | None = None
    failure_reason: str | None = None
    model_name: str | None = None
    started_at: float = 0.0
    finished_at: float = 0.0

    @property
    def accepted(self) -> bool:
        return self.paragraph is not None


class ChatClient(Protocol):
    model_name: str

    def complete(self, messages: list[dict[str, str]]) -> str: ...


class HttpChatClient:
    """Minimal chat-completion client: messages in, reply text out."""

    def __init__(self, endpoint: str, api_key: str = "", model: str = "", timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.model_name = model
        self.timeout = timeout

    @classmethod
    def from_env(cls) -> "HttpChatClient | None":
        endpoint = os.environ.get(ENV_ENDPOINT)
        if not endpoint:
            return None
        return cls(
            endpoint,
            os.environ.get(ENV_API_KEY, ""),
            os.environ.get(ENV_MODEL, ""),
            float(os.environ.get(ENV_TIMEOUT, "30")),
        )

    def complete(self, messages: list[dict[str, str]]) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {"model": self.model_name, "messages": messages}
        response = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
        response.raise_for_status()
        data = response.json()
        return data["choices"][0]["message"]["content"]


class ReplayClient:
    """Replays recorded responses; fixture format is a list of
    {"messages": [...], "response": "..."} objects."""

    def __init__(self, fixtures: list[dict], model_name: str = "replay"):
        self.model_name = model_name
        self._fixtures = list(fixtures)
        self.requests: list[list[dict[str, str]]] = []

    def complete(self, messages: list[dict[str, str]]) -> str:
        if not self._fixtures:
            raise RuntimeError("replay fixtures exhausted")
        self.requests.append([dict(m) for m in messages])
        return self._fixtures.pop(0)["response"]


class OfflineTemplateClient:
    """Chat-shaped wrapper over the offline generator, for network-free runs."""

    def __init__(self, seed: int):
        self.model_name = f"offline-template(seed={seed})"
        self._seed = seed
        self._calls = 0

    def complete(self, messages: list[dict[str, str]]) -> str:
        subject = _subject_from_messages(messages)
        text = offline_generate_text(self._seed + self._calls,
                                     GenerationRequest(subject=subject))
        self._calls += 1
        return text


def _subject_from_messages(messages: list[dict[str, str]]) -> str | None:
    for message in reversed(messages):
        content = message.get("content", "")
        if 'use subject "' in content:
            return content.split('use subject "', 1)[1].rsplit('"', 1)[0]
    return None


def build_prompt(t: PromptTemplate, r: GenerationRequest) -> list[dict[str, str]]:
    """One-shot prompt: the exemplar-bearing turn, then the generate turn."""
    try:
        exemplar = parse_tagged(t.exemplar)
    except (TagSyntaxError, ValueError) as e:
        raise TemplateError(f"exemplar does not parse: {e}") from e
    if exemplar.slot_count < 1:
        raise TemplateError("exemplar has no grammar slots")
    first = f'"""\n{t.exemplar}\n"""\n{t.instruction_first}'
    generate = t.instruction_generate
    if r.subject:
        generate = f'{generate.rstrip(".")}, use subject "{r.subject}".'
    return [
        {"role": "user", "content": first},
        {"role": "user", "content": generate},
    ]


def _check_reply(text: str) -> GenerationAttempt:
    try:
        paragraph = parse_tagged(text)
        issues = validate(paragraph)
    except TagSyntaxError as e:
        return GenerationAttempt(text, e.issues, None)
    except ValueError:
        return GenerationAttempt(text, [], None)  # empty or contentless reply
    return GenerationAttempt(text, issues, paragraph.slot_count)


def _corrective_message(attempt: GenerationAttempt, r: GenerationRequest) -> str:
    lo, hi = r.slot_count_range
    if attempt.errors:
        first = attempt.errors[0]
        return (f"That paragraph is not usable: {first.kind.value} ({first.message}). "
                "Regenerate it with balanced <grammar> and <correct> tags.")
    if attempt.slot_count is None:
        return "The reply had no usable paragraph text; generate just the paragraph."
    return (f"That paragraph has {attempt.slot_count} grammar groups; regenerate it "
            f"with between {lo} and {hi} groups.")


def generate_paragraph(client: ChatClient, t: PromptTemplate, r: GenerationRequest) -> GenerationRecord:
    """Prompt, parse, validate; retry with feedback until accepted or exhausted.

    A reply is accepted when it parses with zero error-severity issues and
    its slot count falls within the requested window.  Warnings (duplicate
    options) are recorded but do not block acceptance.
    """
    record = GenerationRecord(model_name=getattr(client, "model_name", None),
                              started_at=time.time())
    messages = build_prompt(t, r)
    lo, hi = r.slot_count_range
    for attempt_no in range(1 + r.max_retries):
        try:
            text = client.complete(messages)
        except Exception as e:
            record.finished_at = time.time()
            raise GenerationEndpointError(attempt_no + 1, e) from e
        attempt = _check_reply(text)
        record.attempts.append(attempt)
        if not attempt.errors and attempt.slot_count is not None and lo <= attempt.slot_count <= hi:
            record.paragraph = parse_tagged(text)
            record.finished_at = time.time()
            return record
        messages = messages + [
            {"role": "assistant", "content": text},
            {"role": "user", "content": _corrective_message(attempt, r)},
        ]
    issues = "; ".join(
        f"attempt {i + 1}: " + (a.errors[0].kind.value if a.errors else f"{a.slot_count} slots")
        for i, a in enumerate(record.attempts))
    record.failure_reason = f"no acceptable paragraph after {len(record.attempts)} attempt(s): {issues}"
    record.finished_at = time.time()
    return record


# ---------------------------------------------------------------------------
# Offline template generator
# ---------------------------------------------------------------------------

TOPICS = [
    "gardening", "astronomy", "chess", "baking", "sailing", "photography",
    "pottery", "birdwatching", "calligraphy", "archery", "juggling", "weaving",
    "beekeeping", "origami", "carpentry", "stargazing",
]

# Each entry is (fixed-text template, slots), a slot being (options, correct index).
# Templates are authored so exactly one option is grammatical in context.
_SENTENCES: list[tuple[str, list[tuple[tuple[str, ...], int]]]] = [
    ("For {0} newcomer, {topic} can feel overwhelming at first.",
     [(("a", "an", "the"), 0)]),
    ("Learning about {topic} {0} a rewarding pursuit.",
     [(("are", "is", "were"), 1)]),
    ("Most people {0} {topic} harder than it looks.",
     [(("find", "finds", "finding"), 0)]),
    ("There {0} many ways to approach {topic}.",
     [(("is", "are", "being"), 1)]),
    ("Anyone {0} in {topic} should start with the basics.",
     [(("interest", "interested", "interesting"), 1)]),
    ("Progress {0} on steady practice more than on talent.",
     [(("depend", "depends", "depending"), 1)]),
    ("The habits {0} matter most come from repetition.",
     [(("that", "those", "what"), 0)]),
    ("A good mentor {0} the early stages much easier.",
     [(("make", "makes", "making"), 1)]),
    ("Enthusiasts often speak {0} the quiet joy it brings.",
     [(("in", "of", "at"), 1)]),
    ("Lasting skill {0} built on small daily efforts.",
     [(("was", "is", "am"), 1)]),
    ("Each session {0} you a little sharper than before.",
     [(("leave", "leaves", "leaving"), 1)]),
    ("Setbacks {0} part of the process, not a verdict.",
     [(("are", "is", "was"), 0)]),
    ("With {0} little patience, improvement {1} faster than expected.",
     [(("a", "an", "the"), 0), (("come", "comes", "coming"), 1)]),
    ("Those who {0} through the plateau look back {1} pride.",
     [(("persists", "persist", "persisting"), 1), (("in", "with", "by"), 1)]),
    ("Sharing what you learn {0} the lessons stick {1} longer.",
     [(("help", "helps", "helping"), 1), (("much", "far", "most"), 1)]),
    ("The community around {topic} {0} newcomers warmly.",
     [(("welcome", "welcomes", "welcoming"), 1)]),
]


def _render_slot(options: tuple[str, ...], correct: int, rng: random.Random) -> str:
    order = list(range(len(options)))
    rng.shuffle(order)
    rendered = "/".join(
        f"<correct>{options[i]}</correct>" if i == correct else options[i]
        for i in order)
    return f"<grammar>{rendered}</grammar>"


def offline_generate_text(seed: int, r: GenerationRequest | None = None) -> str:
    """Deterministic tag-format paragraph from the built-in skeleton bank."""
    r = r or GenerationRequest()
    rng = random.Random(seed)
    topic = (r.subject or rng.choice(TOPICS)).strip().lower() or rng.choice(TOPICS)
    lo, hi = r.slot_count_range
    target = rng.randint(lo, hi)

    one_slot = [s for s in _SENTENCES if len(s[1]) == 1]
    two_slot = [s for s in _SENTENCES if len(s[1]) == 2]
    rng.shuffle(one_slot)
    rng.shuffle(two_slot)
    # Always open with a topic-bearing sentence so the subject shows up.
    topical = next(i for i, s in enumerate(one_slot) if "{topic}" in s[0])
    chosen: list[tuple[str, list[tuple[tuple[str, ...], int]]]] = [one_slot.pop(topical)]
    remaining = target - 1
    while remaining >= 2 and two_slot and rng.random() < 0.4:
        chosen.append(two_slot.pop())
        remaining -= 2
    while remaining > 0:
        if not one_slot:
            raise RuntimeError("template bank exhausted")  # bank sized for hi <= 16
        chosen.append(one_slot.pop())
        remaining -= 1
    rng.shuffle(chosen)

    sentences = []
    for template, slots in chosen:
        rendered_slots = [_render_slot(options, correct, rng) for options, correct in slots]
        sentences.append(template.format(*rendered_slots, topic=topic))
    return " ".join(sentences)


def offline_generate(seed: int, r: GenerationRequest | None = None) -> TaggedParagraph:
    """Parse-clean deterministic paragraph; slot count within the requested range."""
    return parse_tagged(offline_generate_text(seed, r))
