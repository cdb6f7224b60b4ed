"""Story prompt to validated dance plan via a pluggable text provider.

The provider contract is send-text/receive-text with a timeout. Three
implementations ship: a deterministic offline stub, a recorded-transcript
player for the reference scenarios, and a hosted OpenAI-style client kept
outside every acceptance path.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources
from typing import Mapping, Protocol, Sequence

import jsonschema

from .elements import REGION_NAMES, SixElementsAdjustment
from .library import LibraryManifest, find_by_tags

PLAN_SCHEMA_ID = "storydance/plan-v1"
MAX_SELECTIONS = 12
MAX_PROMPT_CHARS = 2000


# ---------------------------------------------------------------------------
# Errors

class GenerationError(Exception):
    pass


class ProviderUnavailable(GenerationError):
    pass


class ProviderTimeout(GenerationError):
    pass


class NoJsonFound(GenerationError):
    pass


@dataclass(frozen=True)
class ValidationIssue:
    path: str      # JSON path into the candidate document, '' for the root
    code: str      # schema keyword or referential code such as unknown_movement
    message: str

    def render(self) -> str:
        return f"{self.path or '(root)'}: {self.message}"


class SchemaViolation(GenerationError):
    def __init__(self, issues: Sequence[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(i.render() for i in self.issues))

    @property
    def paths(self) -> list[str]:
        return [i.path for i in self.issues]


class RetriesExhausted(GenerationError):
    def __init__(self, history: Sequence[str], exchanges: "list[ProviderExchange]"):
        self.history = list(history)
        self.exchanges = exchanges
        super().__init__(
            f"no valid plan after {len(history)} attempt(s): "
            + " | ".join(history))


class InvalidPrompt(ValueError):
    pass


# ---------------------------------------------------------------------------
# Domain types

@dataclass(frozen=True)
class StoryPrompt:
    text: str

    def __post_init__(self):
        trimmed = self.text.strip() if isinstance(self.text, str) else ""
        if not trimmed:
            raise InvalidPrompt("prompt must be non-empty")
        if len(self.text) > MAX_PROMPT_CHARS:
            raise InvalidPrompt(f"prompt longer than {MAX_PROMPT_CHARS} characters")

    @property
    def normalized(self) -> str:
        return " ".join(self.text.split()).lower()

    @property
    def key(self) -> str:
        return hashlib.sha256(self.normalized.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class MovementSelection:
    movement_id: str
    rationale: str
    adjustments: SixElementsAdjustment = field(default_factory=SixElementsAdjustment)
    duration_scale: float = 1.0

    def to_json_dict(self) -> dict:
        return {
            "movement_id": self.movement_id,
            "rationale": self.rationale,
            "duration_scale": self.duration_scale,
            "adjustments": self.adjustments.to_json_dict(),
        }


@dataclass(frozen=True)
class PlanProvenance:
    provider: str
    attempts: int
    created_at: str


@dataclass(frozen=True)
class DancePlan:
    prompt: StoryPrompt
    interpretation: str
    selections: tuple[MovementSelection, ...]
    provenance: PlanProvenance | None = None

    def to_json_dict(self) -> dict:
        """Published wire form; provenance is record metadata, not plan data."""
        return {
            "prompt": self.prompt.text,
            "interpretation": self.interpretation,
            "selections": [s.to_json_dict() for s in self.selections],
        }


@dataclass(frozen=True)
class ProviderExchange:
    system_context: str
    user_message: str
    raw_response: str
    latency_ms: float
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "system_context": self.system_context,
            "user_message": self.user_message,
            "raw_response": self.raw_response,
            "latency_ms": self.latency_ms,
            "error": self.error,
        }


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    timeout_s: float = 30.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


class Provider(Protocol):
    name: str

    def complete(self, system: str, user: str, timeout_s: float) -> str: ...


# ---------------------------------------------------------------------------
# Plan JSON schema

def adjustments_json_schema() -> dict:
    unit = {"type": "number", "minimum": 0, "maximum": 1}
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "energy": {
                "type": "object",
                "additionalProperties": False,
                "properties": {r: {"type": "number", "minimum": 0, "maximum": 2}
                               for r in REGION_NAMES},
            },
            "circles_curves": unit,
            "axis_point": {
                "type": "object",
                "required": ["joint", "intensity"],
                "additionalProperties": False,
                "properties": {
                    "joint": {"type": "string", "minLength": 1},
                    "intensity": unit,
                },
            },
            "synchronous_limbs": unit,
            "external_body_spaces": {"type": "number", "minimum": 0, "maximum": 2},
            "shifting_relations": unit,
        },
    }


def plan_json_schema() -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": PLAN_SCHEMA_ID,
        "title": "DancePlan",
        "type": "object",
        "required": ["interpretation", "selections"],
        "properties": {
            "prompt": {"type": "string", "minLength": 1,
                       "maxLength": MAX_PROMPT_CHARS},
            "interpretation": {"type": "string"},
            "selections": {
                "type": "array",
                "minItems": 1,
                "maxItems": MAX_SELECTIONS,
                "items": {
                    "type": "object",
                    "required": ["movement_id", "rationale"],
                    "properties": {
                        "movement_id": {"type": "string", "minLength": 1},
                        "rationale": {"type": "string"},
                        "duration_scale": {"type": "number",
                                           "minimum": 0.5, "maximum": 2},
                        "adjustments": adjustments_json_schema(),
                    },
                },
            },
        },
    }


_VALIDATOR = jsonschema.Draft202012Validator(plan_json_schema())


def _issue_from_schema_error(err: jsonschema.ValidationError) -> ValidationIssue:
    path = err.json_path
    path = path[2:] if path.startswith("$.") else ("" if path == "$" else path)
    return ValidationIssue(path=path, code=str(err.validator), message=err.message)


def validate_plan(raw, manifest: LibraryManifest,
                  joint_ids: Sequence[str] | None = None,
                  prompt: StoryPrompt | None = None) -> DancePlan:
    """Validate a candidate plan document and build the typed plan.

    Structural problems (types, ranges, lengths) and referential problems
    (unknown movement or joint ids) are all collected before raising, so the
    caller can hand the full list back to the provider as retry feedback.
    """
    if not isinstance(raw, Mapping):
        raise SchemaViolation([ValidationIssue(
            path="", code="type", message="response is not a JSON object")])
    issues = [_issue_from_schema_error(e)
              for e in sorted(_VALIDATOR.iter_errors(raw), key=lambda e: e.json_path)]
    if issues:
        raise SchemaViolation(issues)

    known = set(manifest.movement_ids)
    known_joints = set(joint_ids) if joint_ids is not None else None
    for i, sel in enumerate(raw["selections"]):
        mid = sel["movement_id"]
        if mid not in known:
            issues.append(ValidationIssue(
                path=f"selections[{i}].movement_id", code="unknown_movement",
                message=f"unknown movement id {mid!r}"))
        ap = (sel.get("adjustments") or {}).get("axis_point")
        if ap is not None and known_joints is not None \
                and ap.get("joint") not in known_joints:
            issues.append(ValidationIssue(
                path=f"selections[{i}].adjustments.axis_point.joint",
                code="unknown_joint",
                message=f"unknown joint id {ap.get('joint')!r}"))
    if prompt is None:
        if "prompt" not in raw:
            issues.append(ValidationIssue(
                path="prompt", code="required",
                message="prompt is required when none is supplied externally"))
    if issues:
        raise SchemaViolation(issues)

    selections = tuple(
        MovementSelection(
            movement_id=sel["movement_id"],
            rationale=sel["rationale"],
            adjustments=SixElementsAdjustment.from_json_dict(
                sel.get("adjustments") or {}),
            duration_scale=float(sel.get("duration_scale", 1.0)),
        )
        for sel in raw["selections"]
    )
    return DancePlan(
        prompt=prompt if prompt is not None else StoryPrompt(raw["prompt"]),
        interpretation=raw["interpretation"],
        selections=selections,
    )


# ---------------------------------------------------------------------------
# Context building and response parsing

ELEMENT_MEANINGS = (
    ("energy", "amplitude of motion per body region; an object mapping any of "
               f"{', '.join(REGION_NAMES)} to a number in [0, 2] where 1 keeps "
               "the recorded motion, lower is calmer, higher is more vigorous"),
    ("circles_curves", "number in [0, 1]; rounds and smooths trajectories "
                       "toward circular, flowing paths"),
    ("axis_point", 'object {"joint": "<joint-id>", "intensity": 0..1}; '
                   "anchors the chosen joint as a fixed pivot in space"),
    ("synchronous_limbs", "number in [0, 1]; drives the left limbs toward a "
                          "mirror of the right limbs until they move in unison"),
    ("external_body_spaces", "number in [0, 2]; contracts or expands how far "
                             "the body travels through the surrounding space"),
    ("shifting_relations", "number in [0, 1]; delays the lower body relative "
                           "to the upper body, shifting their timing apart"),
)


def build_context(manifest: LibraryManifest,
                  joint_ids: Sequence[str] | None = None) -> str:
    """Deterministic system context: the movement alphabet, the six
    refinement parameters, and the exact reply schema."""
    lines = [
        "You are a choreographer who composes dances from a fixed alphabet of "
        "traditional movements. Each movement carries encoded meanings.",
        "",
        "MOVEMENT ALPHABET (id | gloss | meanings):",
    ]
    for m in manifest.movements:
        lines.append(f"- {m.id} | {m.english_gloss} | {', '.join(m.meaning_tags)}")
    lines += ["", "REFINEMENT PARAMETERS (all optional; omit for no refinement):"]
    for name, meaning in ELEMENT_MEANINGS:
        lines.append(f"- {name}: {meaning}")
    if joint_ids:
        lines += ["", "JOINT IDS for axis_point: " + ", ".join(joint_ids)]
    schema = {
        "interpretation": "<your overall reading of the story>",
        "selections": [{
            "movement_id": "<movement-id>",
            "rationale": "<why this movement fits this moment of the story>",
            "duration_scale": 1.0,
            "adjustments": {"<element>": "<value>"},
        }],
    }
    lines += [
        "",
        "TASK: translate the user's story into an ordered dance. Choose 1 to "
        f"{MAX_SELECTIONS} movements; their order is the temporal order of the "
        "story. Refine individual movements with the parameters above when it "
        "serves the narrative.",
        "Reply with a single JSON object only, no prose, shaped like:",
        json.dumps(schema, indent=2),
        "duration_scale is a number in [0.5, 2].",
    ]
    return "\n".join(lines)


def extract_json_object(text: str) -> dict:
    """First balanced top-level JSON object in the text that parses.

    Tolerates surrounding prose and code fences; raises NoJsonFound when no
    candidate parses as an object.
    """
    depth = 0
    start = None
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0 and start is not None:
                candidate = text[start:i + 1]
                try:
                    parsed = json.loads(candidate)
                except json.JSONDecodeError:
                    start = None
                    continue
                if isinstance(parsed, dict):
                    return parsed
                start = None
    raise NoJsonFound("no JSON object found in the reply")


# ---------------------------------------------------------------------------
# Providers

GENTLE_WORDS = frozenset({
    "gentle", "gently", "graceful", "grace", "soft", "softly", "calm",
    "serene", "elegant", "elegance", "tender", "delicate", "swan", "lullaby",
})

_WORD_RE = re.compile(r"[a-z0-9']+")


class StubProvider:
    """Deterministic offline planner: tag matching over the manifest.

    Top three tag-ranked movements (padded from the front of the manifest),
    neutral refinements except a calmer lower body for gentle stories.
    """

    name = "stub"

    def __init__(self, manifest: LibraryManifest,
                 gentle_words: frozenset[str] = GENTLE_WORDS):
        self.manifest = manifest
        self.gentle_words = gentle_words

    def complete(self, system: str, user: str, timeout_s: float) -> str:
        tokens = set(_WORD_RE.findall(user.lower()))
        ranked = find_by_tags(self.manifest, tokens)
        chosen = [mid for mid, _ in ranked[:3]]
        for m in self.manifest.movements:
            if len(chosen) >= 3:
                break
            if m.id not in chosen:
                chosen.append(m.id)
        gentle = bool(tokens & self.gentle_words)
        selections = []
        matched_all: set[str] = set()
        for mid in chosen:
            tags = set(self.manifest.movement(mid).meaning_tags)
            matched = sorted(tokens & tags)
            matched_all.update(matched)
            if matched:
                rationale = f"Carries the story's {', '.join(matched)}."
            else:
                rationale = "Foundational movement completing the sequence."
            adjustments = {}
            if gentle:
                adjustments = {"energy": {"left_leg": 0.7, "right_leg": 0.7}}
            selections.append({
                "movement_id": mid,
                "rationale": rationale,
                "duration_scale": 1.0,
                "adjustments": adjustments,
            })
        if matched_all:
            interpretation = ("Story mapped onto the alphabet through the "
                              f"meanings: {', '.join(sorted(matched_all))}.")
        else:
            interpretation = ("No direct meaning overlap; opening the dance "
                              "with the first movements of the alphabet.")
        return json.dumps({"interpretation": interpretation,
                           "selections": selections})


def _load_recorded_transcripts() -> dict:
    with resources.files("storydance.data").joinpath(
            "recorded_transcripts.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


class RecordedProvider:
    """Replays canned transcripts keyed by normalized-prompt hash; used to
    reproduce the reference scenarios offline."""

    name = "recorded"

    def __init__(self, transcripts: Mapping[str, dict] | None = None):
        data = transcripts if transcripts is not None \
            else _load_recorded_transcripts()["transcripts"]
        self.transcripts = dict(data)

    def complete(self, system: str, user: str, timeout_s: float) -> str:
        key = hashlib.sha256(" ".join(user.split()).lower().encode()).hexdigest()
        entry = self.transcripts.get(key)
        if entry is None:
            raise ProviderUnavailable(
                f"no recorded transcript for prompt: {user[:80]!r}")
        return entry["response"]


class HostedProvider:
    """OpenAI-style chat-completions client. Credentials come only from the
    environment and never enter exchanges or logs."""

    name = "hosted"

    def __init__(self, model: str = "gpt-4o",
                 base_url: str = "https://api.openai.com/v1",
                 api_key_env: str = "PROVIDER_API_KEY"):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self._api_key = os.environ.get(api_key_env)
        if not self._api_key:
            raise ProviderUnavailable(
                f"hosted provider requires the {api_key_env} environment variable")

    def complete(self, system: str, user: str, timeout_s: float) -> str:
        import httpx

        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {self._api_key}"},
                json={
                    "model": self.model,
                    "messages": [
                        {"role": "system", "content": system},
                        {"role": "user", "content": user},
                    ],
                },
                timeout=timeout_s,
            )
            response.raise_for_status()
        except httpx.TimeoutException as e:
            raise ProviderTimeout(f"hosted provider timed out after {timeout_s}s") from e
        except httpx.HTTPError as e:
            raise ProviderUnavailable(f"hosted provider failed: {e}") from e
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as e:
            raise ProviderUnavailable(f"unexpected hosted response shape: {e}") from e


# ---------------------------------------------------------------------------
# Generation pipeline

def _feedback_message(prompt: StoryPrompt, error: GenerationError) -> str:
    if isinstance(error, SchemaViolation):
        lines = [f"- {issue.render()}" for issue in error.issues]
    else:
        lines = [f"- (root): {error}"]
    return (f"{prompt.text}\n\n"
            "Your previous reply was rejected by the validator:\n"
            + "\n".join(lines)
            + "\nReply again with a single valid JSON object only.")


def generate_plan(prompt: StoryPrompt | str, provider: Provider,
                  manifest: LibraryManifest,
                  joint_ids: Sequence[str] | None = None,
                  policy: RetryPolicy | None = None,
                  ) -> tuple[DancePlan, list[ProviderExchange]]:
    """Run the provider loop until a plan validates or attempts run out.

    Every attempt is recorded verbatim as a ProviderExchange; validator
    findings are appended to the next user message so the provider can
    correct itself.
    """
    if isinstance(prompt, str):
        prompt = StoryPrompt(prompt)
    policy = policy or RetryPolicy()
    context = build_context(manifest, joint_ids=joint_ids)
    exchanges: list[ProviderExchange] = []
    history: list[str] = []
    user = prompt.text

    for attempt in range(1, policy.max_attempts + 1):
        started = time.perf_counter()
        try:
            raw = provider.complete(context, user, policy.timeout_s)
        except (ProviderTimeout, ProviderUnavailable) as e:
            latency = (time.perf_counter() - started) * 1000.0
            exchanges.append(ProviderExchange(context, user, "", latency,
                                              error=str(e)))
            history.append(f"attempt {attempt}: {e}")
            continue
        latency = (time.perf_counter() - started) * 1000.0
        try:
            data = extract_json_object(raw)
            plan = validate_plan(data, manifest, joint_ids=joint_ids,
                                 prompt=prompt)
        except (NoJsonFound, SchemaViolation) as e:
            exchanges.append(ProviderExchange(context, user, raw, latency,
                                              error=str(e)))
            history.append(f"attempt {attempt}: {e}")
            user = _feedback_message(prompt, e)
            continue
        exchanges.append(ProviderExchange(context, user, raw, latency))
        plan = replace(plan, provenance=PlanProvenance(
            provider=provider.name, attempts=attempt,
            created_at=datetime.now(timezone.utc).isoformat()))
        # Contract: anything returned from here re-validates cleanly.
        validate_plan(plan.to_json_dict(), manifest, joint_ids=joint_ids)
        return plan, exchanges

    raise RetriesExhausted(history, exchanges)
