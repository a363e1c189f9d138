"""Conversational repair loop: generation, validation, feedback, restart.

Phase 1 drives the conversation (initial prompt, patch, feedback) until a
plausible patch is found, restarting from the initial prompt whenever the
conversation length limit is reached. Phase 2 spends the remaining tries
asking for alternative fixes conditioned on the plausible patches found so
far. A try is one backend query, in either phase; a reply that contains no
code still consumes a try. Transport failures do not consume a try.
"""
from __future__ import annotations

import dataclasses
import itertools
import time
from dataclasses import dataclass, field
from pathlib import Path

from .backends import ChatMessage, ChatRole
from .bugs import BugInstance, Patch, PatchOrigin, RepairScenario, apply_patch
from .errors import (
    ContextOverflowError,
    EngineError,
    TransportError,
    UnparseableResponseError,
)
from .prompts import (
    FeedbackLevel,
    PromptLevel,
    PromptVariant,
    RenderedPrompt,
    build_alt_instruction,
    build_feedback,
    build_initial_prompt,
    extract_patch,
    system_message,
)
from .validation import TestFailureInfo, Verdict, validate

UNPARSEABLE_RETRY = (
    "The previous reply did not contain a code patch. Please provide another fix."
)

TIMEOUT_SINGLE_LINE_HUNK_TRIES = 200
TIMEOUT_SINGLE_FUNCTION_TRIES = 100


def default_max_tries(scenario: RepairScenario) -> int:
    if scenario is RepairScenario.SINGLE_FUNCTION:
        return TIMEOUT_SINGLE_FUNCTION_TRIES
    return TIMEOUT_SINGLE_LINE_HUNK_TRIES


@dataclass
class EngineConfig:
    max_tries: int = TIMEOUT_SINGLE_LINE_HUNK_TRIES
    max_conv_length: int = 3
    prompt_variant: PromptVariant = field(default_factory=PromptVariant)
    feedback_variant: FeedbackLevel = FeedbackLevel.DYNAMIC
    end_to_end_timeout_s: float = 5 * 3600.0
    cost_rate_per_1k: float = 0.002

    def __post_init__(self) -> None:
        if self.max_tries < 1:
            raise ValueError("max_tries must be >= 1")
        if self.max_conv_length < 1:
            raise ValueError("max_conv_length must be >= 1")
        if self.cost_rate_per_1k < 0:
            raise ValueError("cost_rate_per_1k must be >= 0")


@dataclass
class CostLedger:
    total_prompt_tokens: int = 0
    total_completion_tokens: int = 0
    tries_used: int = 0
    rate_per_1k: float = 0.002

    @property
    def total_tokens(self) -> int:
        return self.total_prompt_tokens + self.total_completion_tokens

    @property
    def dollars(self) -> float:
        return compute_cost(self, self.rate_per_1k)


def compute_cost(ledger: CostLedger, rate: float) -> float:
    """Dollar cost: (prompt + completion tokens) / 1000 x rate, exactly."""
    return (ledger.total_prompt_tokens + ledger.total_completion_tokens) / 1000 * rate


@dataclass(frozen=True)
class EventRecord:
    try_index: int
    conversation_id: int
    patch: str
    verdict: str
    feedback: str


@dataclass
class RepairOutcome:
    bug_id: str
    plausible: list[Patch]
    ledger: CostLedger
    events: list[EventRecord]


def normalize_patch(text: str) -> str:
    """Collapse whitespace runs outside string literals; trim the ends."""
    out: list[str] = []
    quote: str | None = None
    escaped = False
    for ch in text:
        if quote is not None:
            out.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
            out.append(ch)
        elif ch.isspace():
            if out and out[-1] != " ":
                out.append(" ")
        else:
            out.append(ch)
    return "".join(out).strip()


_SESSION_IDS = itertools.count(1)


def run_original_failure(
    bug: BugInstance, workspace: Path, include_test_body: bool = False
) -> TestFailureInfo:
    """Run the unpatched project once and extract the original failure f0."""
    result = validate(bug, None, workspace, include_test_body=include_test_body)
    if result.verdict is not Verdict.TEST_FAILURE or result.failure is None:
        raise EngineError(
            f"bug {bug.id}: original run did not produce a test failure "
            f"(got {result.verdict.value})"
        )
    return result.failure


class _Repair:
    """State for one bug's repair run."""

    def __init__(self, bug, backend, config, workspace, original_failure, session_id):
        self.bug = bug
        self.backend = backend
        self.config = config
        self.workspace = Path(workspace)
        self.original_failure = original_failure
        self.session_id = session_id or f"{bug.id}#{next(_SESSION_IDS)}"
        self.ledger = CostLedger(rate_per_1k=config.cost_rate_per_1k)
        self.events: list[EventRecord] = []
        self.plausible: list[Patch] = []
        self._normalized: set[str] = set()
        self.deadline = time.monotonic() + config.end_to_end_timeout_s
        self._source = self.workspace / bug.source_path
        self._pristine = self._source.read_bytes()
        self._include_body = config.prompt_variant.level is PromptLevel.NAME_ERR_TEST_BODY
        self.initial = build_initial_prompt(bug, original_failure, config.prompt_variant)
        self.system = system_message(config.prompt_variant)

    # -- helpers --------------------------------------------------------

    def _budget_left(self) -> bool:
        return (
            self.ledger.tries_used < self.config.max_tries
            and time.monotonic() < self.deadline
        )

    def _restore(self) -> None:
        self._source.write_bytes(self._pristine)

    def _messages(self, history: list[tuple[str, str]]) -> list[ChatMessage]:
        messages = [
            ChatMessage(ChatRole.SYSTEM, self.system.text),
            ChatMessage(ChatRole.USER, self.initial.text),
        ]
        for patch_text, feedback_text in history:
            messages.append(ChatMessage(ChatRole.ASSISTANT, patch_text))
            messages.append(ChatMessage(ChatRole.USER, feedback_text))
        return messages

    def _query(self, messages: list[ChatMessage]) -> ChatMessage:
        reply, usage = self.backend.complete(messages, session_id=self.session_id)
        self.ledger.total_prompt_tokens += usage.prompt_tokens
        self.ledger.total_completion_tokens += usage.completion_tokens
        self.ledger.tries_used += 1
        return reply

    def _event(self, conv_id: int, patch: str, verdict: str, feedback: str) -> None:
        self.events.append(
            EventRecord(self.ledger.tries_used, conv_id, patch, verdict, feedback)
        )

    def _validate_patch(self, patch: Patch):
        self._restore()
        apply_patch(self.bug, patch, self.workspace)
        return validate(
            self.bug, patch, self.workspace, include_test_body=self._include_body
        )

    def _record_plausible(self, patch: Patch) -> None:
        self.plausible.append(patch)
        self._normalized.add(normalize_patch(patch.text))

    # -- phases ----------------------------------------------------------

    def phase1(self) -> bool:
        """Conversational search; returns False on permanent backend failure."""
        conv_id = 0
        while self._budget_left() and not self.plausible:
            conv_id += 1
            self._conv_id = conv_id
            history: list[tuple[str, str]] = []
            while (
                len(history) < self.config.max_conv_length
                and self._budget_left()
                and not self.plausible
            ):
                try:
                    reply = self._query(self._messages(history))
                except ContextOverflowError:
                    if history:
                        # Evict the oldest exchange pair, keep the initial prompt.
                        history.pop(0)
                        continue
                    raise EngineError(
                        f"bug {self.bug.id}: initial prompt exceeds the context window"
                    )
                except TransportError as exc:
                    self._event(conv_id, "", "backend_error", str(exc))
                    return False
                try:
                    patch = extract_patch(reply.content, self.bug.scenario)
                except UnparseableResponseError:
                    self._event(conv_id, reply.content, "unparseable", UNPARSEABLE_RETRY)
                    history.append((reply.content, UNPARSEABLE_RETRY))
                    continue
                patch = dataclasses.replace(patch, try_index=self.ledger.tries_used)
                result = self._validate_patch(patch)
                if result.verdict is Verdict.PASS:
                    self._record_plausible(patch)
                    self._event(conv_id, patch.text, "pass", "")
                    break
                feedback = build_feedback(
                    result, self.original_failure, self.config.feedback_variant
                )
                self._event(conv_id, patch.text, result.verdict.value, feedback.text)
                history.append((patch.text, feedback.text))
        self._conv_id = conv_id
        return True

    def phase2(self) -> None:
        """Alternative plausible-patch generation with the remaining budget."""
        conv_id = getattr(self, "_conv_id", 0)
        while self.plausible and self._budget_left():
            conv_id += 1
            alt = build_alt_instruction(self.initial, self.plausible)
            messages = [
                ChatMessage(ChatRole.SYSTEM, self.system.text),
                ChatMessage(ChatRole.USER, alt.text),
            ]
            try:
                reply = self._query(messages)
            except ContextOverflowError as exc:
                self._event(conv_id, "", "context_overflow", str(exc))
                return
            except TransportError as exc:
                self._event(conv_id, "", "backend_error", str(exc))
                return
            try:
                patch = extract_patch(reply.content, self.bug.scenario)
            except UnparseableResponseError:
                self._event(conv_id, reply.content, "unparseable", "")
                continue
            patch = dataclasses.replace(
                patch,
                origin=PatchOrigin.PLAUSIBLE_GENERATION,
                try_index=self.ledger.tries_used,
            )
            result = self._validate_patch(patch)
            if result.verdict is Verdict.PASS:
                if normalize_patch(patch.text) in self._normalized:
                    self._event(conv_id, patch.text, "duplicate", "")
                else:
                    self._record_plausible(patch)
                    self._event(conv_id, patch.text, "pass", "")
            else:
                self._event(conv_id, patch.text, result.verdict.value, "")

    def run(self) -> RepairOutcome:
        try:
            if self.phase1():
                self.phase2()
        finally:
            self._restore()
        return RepairOutcome(self.bug.id, self.plausible, self.ledger, self.events)


def conversational_repair(
    bug: BugInstance,
    backend,
    config: EngineConfig,
    workspace: str | Path,
    original_failure: TestFailureInfo,
    session_id: str | None = None,
) -> RepairOutcome:
    """Run the full two-phase conversational repair loop for one bug.

    The workspace must be a writable copy of the project; the original
    failing run must already have happened and produced ``original_failure``.
    """
    return _Repair(bug, backend, config, workspace, original_failure, session_id).run()
