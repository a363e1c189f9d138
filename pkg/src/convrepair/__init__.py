"""Conversation-driven automated program repair engine."""

from .backends import (
    BackendConfig,
    ChatMessage,
    ChatRole,
    HttpBackend,
    ScriptedBackend,
    TokenUsage,
    estimate_tokens,
    make_backend,
    scripted_oracle,
)
from .bugs import (
    BugInstance,
    Patch,
    PatchOrigin,
    RepairScenario,
    apply_patch,
    load_corpus,
    split_context,
)
from .engine import (
    CostLedger,
    EngineConfig,
    EventRecord,
    RepairOutcome,
    compute_cost,
    conversational_repair,
    default_max_tries,
    normalize_patch,
    run_original_failure,
)
from .prompts import (
    FeedbackLevel,
    PromptLevel,
    PromptVariant,
    RenderedPrompt,
    SystemMsg,
    build_alt_instruction,
    build_feedback,
    build_initial_prompt,
    extract_patch,
    system_message,
)
from .validation import (
    TestFailureInfo,
    ValidationResult,
    Verdict,
    extract_failure_info,
    same_original_failure,
    validate,
)

__version__ = "0.1.0"
