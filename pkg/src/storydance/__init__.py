"""Story prompts to playable performances over a traditional movement alphabet."""

from .compiler import CompiledPerformance, CompileOptions, compile_plan
from .elements import NEUTRAL, SixElementsAdjustment, apply_all
from .generator import (
    DancePlan,
    RecordedProvider,
    StoryPrompt,
    StubProvider,
    generate_plan,
    validate_plan,
)
from .library import Library, find_by_tags, load_manifest
from .motion import AnimationClip, ClipChannel, Pose, Skeleton
from .reference import build_reference_library, canonical_skeleton

__version__ = "0.1.0"

__all__ = [
    "AnimationClip",
    "ClipChannel",
    "CompileOptions",
    "CompiledPerformance",
    "DancePlan",
    "Library",
    "NEUTRAL",
    "Pose",
    "RecordedProvider",
    "SixElementsAdjustment",
    "Skeleton",
    "StoryPrompt",
    "StubProvider",
    "apply_all",
    "build_reference_library",
    "canonical_skeleton",
    "compile_plan",
    "find_by_tags",
    "generate_plan",
    "load_manifest",
    "validate_plan",
]
