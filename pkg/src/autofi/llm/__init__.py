"""Few-shot prompt construction, provider clients and response parsing."""

from .prompts import (
    BATCH_SIZE_GRID,
    CLASSIFY_N_GRID,
    GENERATION_N_GRID,
    FewShotExample,
    PromptBundle,
    build_classification_prompt,
    build_generation_prompt,
    load_template,
    render_catalog,
)
from .provider import (
    FixtureProvider,
    HttpProvider,
    ProviderConfig,
    ProviderResponse,
    RecordingProvider,
    UsageTally,
    prompt_digest,
)
from .pipeline import classify_fsr, extract_json_payload, generate_location_maps

__all__ = [
    "BATCH_SIZE_GRID",
    "CLASSIFY_N_GRID",
    "GENERATION_N_GRID",
    "FewShotExample",
    "PromptBundle",
    "build_classification_prompt",
    "build_generation_prompt",
    "load_template",
    "render_catalog",
    "FixtureProvider",
    "HttpProvider",
    "ProviderConfig",
    "ProviderResponse",
    "RecordingProvider",
    "UsageTally",
    "prompt_digest",
    "classify_fsr",
    "extract_json_payload",
    "generate_location_maps",
]
