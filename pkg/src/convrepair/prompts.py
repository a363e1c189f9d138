"""Prompt rendering: system message, initial prompt, feedback, alt-instruction.

All renderers are pure; the exact prose is pinned by golden files under
``fixtures/prompts/``. Information levels nest: the base prompt text is a
subsequence of the name+error text, which is a subsequence of the
name+error+failing-line text.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum

from .bugs import BugInstance, Patch, RepairScenario, split_context
from .errors import ContractViolation, UnparseableResponseError
from .validation import (
    TestFailureInfo,
    ValidationResult,
    Verdict,
    same_original_failure,
    truncate_lines,
)

log = logging.getLogger(__name__)

INFILL_INDICATOR = ">>> [ INFILL ] <<<"

SYSTEM_APR_TOOL = "You are an Automated Program Repair tool"
SYSTEM_ASSISTANT = "You are a helpful assistant"

STILL_FAILS_ORIGINAL = "It still does not fix the original test failure."


class PromptLevel(Enum):
    BASE = "base"
    NAME_ERR = "name-err"
    NAME_ERR_FAIL_LINE = "name-err-fail-line"
    NAME_ERR_TEST_BODY = "name-err-test-body"


class SystemMsg(Enum):
    ASSISTANT = "assistant"
    APR_TOOL = "apr"


class FeedbackLevel(Enum):
    BASE = "base"
    NAME_ERR = "name-err"
    NAME_ERR_FAIL_LINE = "name-err-fail-line"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class PromptVariant:
    level: PromptLevel = PromptLevel.NAME_ERR_FAIL_LINE
    shots: int = 1
    system_msg: SystemMsg = SystemMsg.APR_TOOL


class Role(Enum):
    SYSTEM = "system"
    USER = "user"


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    role: Role = Role.USER


def system_message(variant: PromptVariant) -> RenderedPrompt:
    text = SYSTEM_APR_TOOL if variant.system_msg is SystemMsg.APR_TOOL else SYSTEM_ASSISTANT
    return RenderedPrompt(text, Role.SYSTEM)


_ANSWER_NOUN = {
    RepairScenario.SINGLE_LINE: "fix line",
    RepairScenario.SINGLE_HUNK: "fix hunk",
    RepairScenario.SINGLE_FUNCTION: "fixed function",
}

_CLOSING = {
    RepairScenario.SINGLE_LINE: "Please provide the correct line at the infill location.",
    RepairScenario.SINGLE_HUNK: "Please provide the correct hunk at the infill location.",
    RepairScenario.SINGLE_FUNCTION: "Please provide the complete fixed function.",
}


def _few_shot_section(bug: BugInstance, shots: int) -> str:
    parts = []
    for buggy, fixed in bug.few_shot_examples[:shots]:
        parts.append(
            "Here is an example of a bug fix from the same project:\n"
            f"Buggy code:\n{buggy.rstrip()}\n"
            f"Fixed code:\n{fixed.rstrip()}\n\n"
        )
    return "".join(parts)


def _failure_section(failure: TestFailureInfo, level: PromptLevel, bug_id: str) -> str:
    if level is PromptLevel.BASE:
        return ""
    out = (
        f"The code fails on this test: {failure.test_name}\n"
        "The test produced the error:\n"
        f"{failure.error_message}\n"
    )
    if level is PromptLevel.NAME_ERR_FAIL_LINE:
        if not failure.failing_line:
            log.warning("bug %s: no failing line available, downgrading to name+error", bug_id)
        else:
            out += (
                "The failure occurs on this line of the test:\n"
                f"{failure.failing_line}\n"
            )
    elif level is PromptLevel.NAME_ERR_TEST_BODY:
        if not failure.test_body:
            log.warning("bug %s: no test body available, downgrading to name+error", bug_id)
        else:
            out += (
                "The failing test is:\n"
                f"{failure.test_body}\n"
            )
    return out


def build_initial_prompt(
    bug: BugInstance, failure: TestFailureInfo, variant: PromptVariant
) -> RenderedPrompt:
    """Render the initial repair prompt for one bug.

    Infill scenarios show the enclosing function with the bug span replaced
    by the infill indicator plus the removed buggy code as a hint; the
    single-function scenario shows the whole buggy function.
    """
    prefix, buggy, suffix = split_context(bug)
    shots = min(variant.shots, len(bug.few_shot_examples))
    parts = [_few_shot_section(bug, shots)]
    if bug.scenario.is_infill:
        hole = prefix + INFILL_INDICATOR + "\n" + suffix
        parts.append(
            "The following code contains a buggy "
            f"{'line' if bug.scenario is RepairScenario.SINGLE_LINE else 'hunk'} "
            f"at the marked infill location:\n{hole.rstrip()}\n\n"
        )
        parts.append(
            "The original code at the infill location was:\n"
            f"{buggy.rstrip()}\n\n"
        )
    else:
        parts.append(
            "The following function contains a bug:\n"
            f"{buggy.rstrip()}\n\n"
        )
    parts.append(_failure_section(failure, variant.level, bug.id))
    parts.append(_CLOSING[bug.scenario])
    return RenderedPrompt("".join(parts))


def build_feedback(
    result: ValidationResult,
    original: TestFailureInfo,
    variant: FeedbackLevel,
) -> RenderedPrompt:
    """Render the feedback message appended after a failed validation."""
    if result.verdict is Verdict.PASS:
        raise ContractViolation("build_feedback called on a passing result")
    if result.verdict is Verdict.COMPILE_ERROR:
        return RenderedPrompt(
            "The patch did not compile. The compiler produced:\n"
            f"{truncate_lines(result.message)}\n"
            "Please provide another fix."
        )
    if result.verdict is Verdict.TIMEOUT:
        return RenderedPrompt(
            "The test suite timed out while validating the patch. "
            "Please provide another fix."
        )

    failure = result.failure
    assert failure is not None
    if variant is FeedbackLevel.BASE:
        return RenderedPrompt("The patch is incorrect. Please provide another fix.")
    if variant is FeedbackLevel.DYNAMIC:
        if same_original_failure(result, original):
            return RenderedPrompt(STILL_FAILS_ORIGINAL)
        out = (
            "The patch fails a different test.\n"
            f"The code fails on this test: {failure.test_name}\n"
            "The test produced the error:\n"
            f"{failure.error_message}\n"
        )
        if failure.failing_line:
            out += (
                "The failure occurs on this line of the test:\n"
                f"{failure.failing_line}\n"
            )
        return RenderedPrompt(out + "Please provide another fix.")

    out = (
        "The patch is still incorrect.\n"
        f"The code fails on this test: {failure.test_name}\n"
        "The test produced the error:\n"
        f"{failure.error_message}\n"
    )
    if variant is FeedbackLevel.NAME_ERR_FAIL_LINE and failure.failing_line:
        out += (
            "The failure occurs on this line of the test:\n"
            f"{failure.failing_line}\n"
        )
    return RenderedPrompt(out + "Please provide another fix.")


def build_alt_instruction(
    initial: RenderedPrompt, plausible: list[Patch]
) -> RenderedPrompt:
    """Initial prompt plus the current plausible patches and the alt request."""
    if not plausible:
        raise ContractViolation("build_alt_instruction requires at least one plausible patch")
    noun = _ANSWER_NOUN[plausible[0].scenario]
    listing = "".join(
        f"{i}.\n{patch.text.rstrip()}\n" for i, patch in enumerate(plausible, start=1)
    )
    text = (
        initial.text
        + "\n\nThe following fixes were already found to pass all tests:\n"
        + listing
        + f"Please generate an alternative {noun}."
    )
    return RenderedPrompt(text)


# --- patch extraction from model output --------------------------------------

_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.S)

_CODE_CHARS = set("=(){}[];")
_CODE_STARTS = ("return", "if ", "for ", "while ", "def ", "import ", "class ", "raise ", "assert ")


def _looks_like_code(line: str) -> bool:
    s = line.strip()
    if not s:
        return False
    if any(ch in _CODE_CHARS for ch in s):
        return True
    return s.startswith(_CODE_STARTS)


def _best_unfenced_block(output: str) -> str | None:
    blocks: list[list[str]] = [[]]
    for line in output.splitlines():
        if line.strip():
            blocks[-1].append(line)
        elif blocks[-1]:
            blocks.append([])
    candidates = []
    for block in blocks:
        if block and all(_looks_like_code(line) for line in block):
            candidates.append("\n".join(block))
    if not candidates:
        return None
    return max(candidates, key=len)


def extract_patch(model_output: str, scenario: RepairScenario) -> Patch:
    """Strip prose/fences from a model reply and return the candidate patch.

    The first fenced code block wins; without fences, the longest contiguous
    run of code-looking lines is taken.
    """
    if not model_output.strip():
        raise UnparseableResponseError("unparseable response: empty output")
    m = _FENCE.search(model_output)
    code = m.group(1) if m else _best_unfenced_block(model_output)
    if code is None:
        raise UnparseableResponseError("unparseable response: no code found")
    code = "\n".join(line.rstrip() for line in code.splitlines()).strip("\n")
    if not code.strip():
        raise UnparseableResponseError("unparseable response: empty code block")
    return Patch(text=code, scenario=scenario)
