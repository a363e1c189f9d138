"""Build/test execution in a workspace and test-failure parsing.

Two transcript dialects are supported: a JUnit-style text report with stack
traces, and the generic line protocol used by the toy corpus
(``PASS <name>`` / ``FAIL <name>: <message>`` with an optional
``  at <file>:<line>`` continuation per failure).
"""
from __future__ import annotations

import re
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .bugs import BugInstance, Patch
from .errors import CommandNotFoundError, NoFailureParsedError

# Compile diagnostics are clipped to this many lines before they are ever
# embedded in a prompt, to bound token cost.
MAX_DIAGNOSTIC_LINES = 20


@dataclass(frozen=True)
class TestFailureInfo:
    """Structured record of one failing test."""

    __test__ = False  # keep pytest from collecting this dataclass

    test_name: str
    error_message: str
    failing_line: str = ""
    test_body: str | None = None

    def __post_init__(self) -> None:
        if not self.test_name or not self.error_message:
            raise ValueError("test_name and error_message must be non-empty")


class Verdict(Enum):
    PASS = "pass"
    COMPILE_ERROR = "compile_error"
    TEST_FAILURE = "test_failure"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class ValidationResult:
    verdict: Verdict
    message: str = ""
    failure: TestFailureInfo | None = None
    all_failing: tuple[str, ...] = field(default=())

    @property
    def is_pass(self) -> bool:
        return self.verdict is Verdict.PASS


def truncate_lines(text: str, limit: int = MAX_DIAGNOSTIC_LINES) -> str:
    lines = text.splitlines()
    if len(lines) <= limit:
        return text.rstrip("\n")
    clipped = lines[:limit]
    clipped.append(f"... ({len(lines) - limit} more lines)")
    return "\n".join(clipped)


def _run(cmd: str, cwd: Path, timeout: float) -> subprocess.CompletedProcess:
    try:
        return subprocess.run(
            shlex.split(cmd),
            cwd=cwd,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except FileNotFoundError as exc:
        raise CommandNotFoundError(f"cannot spawn {cmd!r}: {exc}") from exc


def validate(
    bug: BugInstance,
    patch: Patch | None,
    workspace: str | Path,
    include_test_body: bool = False,
) -> ValidationResult:
    """Compile and test the (already patched) workspace copy of the project.

    Runs the bug's build command, then its test command, under a shared
    wall-clock budget of ``bug.timeout_s`` seconds.
    """
    workspace = Path(workspace)
    deadline = time.monotonic() + bug.timeout_s

    try:
        build = _run(bug.build_cmd, workspace, deadline - time.monotonic())
    except subprocess.TimeoutExpired:
        return ValidationResult(Verdict.TIMEOUT, message="build timed out")
    if build.returncode != 0:
        return ValidationResult(
            Verdict.COMPILE_ERROR, message=build.stdout + build.stderr
        )

    remaining = deadline - time.monotonic()
    if remaining <= 0:
        return ValidationResult(Verdict.TIMEOUT, message="budget exhausted before tests")
    try:
        tests = _run(bug.test_cmd, workspace, remaining)
    except subprocess.TimeoutExpired:
        return ValidationResult(Verdict.TIMEOUT, message="test run timed out")
    if tests.returncode == 0:
        return ValidationResult(Verdict.PASS)

    transcript = tests.stdout + tests.stderr
    failures = extract_all_failures(transcript, workspace, include_test_body)
    primary = min(failures, key=lambda f: f.test_name)
    return ValidationResult(
        Verdict.TEST_FAILURE,
        message=transcript,
        failure=primary,
        all_failing=tuple(f.test_name for f in failures),
    )


# --- transcript parsing -----------------------------------------------------

_GENERIC_FAIL = re.compile(r"^FAIL (\S+): (.*)$")
_GENERIC_FRAME = re.compile(r"^\s+at (\S+):(\d+)$")
_JUNIT_HEADER = re.compile(r"^\s*\d+\) (\w+)\(([\w.$]+)\)\s*$")
_JUNIT_FRAME = re.compile(r"^\s*at [\w.$<>]+\((\w+\.\w+):(\d+)\)")


def _read_line(path: Path, lineno: int) -> str:
    try:
        lines = path.read_text(encoding="utf-8", errors="replace").splitlines()
    except OSError:
        return ""
    if 1 <= lineno <= len(lines):
        return lines[lineno - 1].strip()
    return ""


def _extract_body(path: Path, lineno: int, name: str) -> str | None:
    """Best-effort extraction of the enclosing test function text."""
    try:
        lines = path.read_text(encoding="utf-8", errors="replace").splitlines()
    except OSError:
        return None
    start = None
    for i in range(min(lineno, len(lines)) - 1, -1, -1):
        stripped = lines[i].lstrip()
        if stripped.startswith("def ") or re.match(r"(public |private |protected )?void \w+\(", stripped):
            start = i
            break
    if start is None:
        return None
    indent = len(lines[start]) - len(lines[start].lstrip())
    body = [lines[start]]
    if lines[start].rstrip().endswith("{"):  # brace language
        depth = lines[start].count("{") - lines[start].count("}")
        for line in lines[start + 1:]:
            body.append(line)
            depth += line.count("{") - line.count("}")
            if depth <= 0:
                break
    else:  # indentation language
        for line in lines[start + 1:]:
            if line.strip() and len(line) - len(line.lstrip()) <= indent:
                break
            body.append(line)
        while body and not body[-1].strip():
            body.pop()
    return "\n".join(body)


def _parse_generic(raw: str, test_sources: Path, include_body: bool) -> list[TestFailureInfo]:
    failures: list[TestFailureInfo] = []
    lines = raw.splitlines()
    for i, line in enumerate(lines):
        m = _GENERIC_FAIL.match(line)
        if not m:
            continue
        name, message = m.group(1), m.group(2)
        failing_line = ""
        body = None
        if i + 1 < len(lines):
            frame = _GENERIC_FRAME.match(lines[i + 1])
            if frame:
                path = test_sources / frame.group(1)
                lineno = int(frame.group(2))
                failing_line = _read_line(path, lineno)
                if include_body:
                    body = _extract_body(path, lineno, name)
        failures.append(
            TestFailureInfo(name, message, failing_line=failing_line, test_body=body)
        )
    return failures


def _find_source(test_sources: Path, basename: str) -> Path | None:
    candidates = sorted(test_sources.rglob(basename))
    return candidates[0] if candidates else None


def _parse_junit(raw: str, test_sources: Path, include_body: bool) -> list[TestFailureInfo]:
    failures: list[TestFailureInfo] = []
    lines = raw.splitlines()
    i = 0
    while i < len(lines):
        m = _JUNIT_HEADER.match(lines[i])
        if not m:
            i += 1
            continue
        name = m.group(1)
        message = ""
        failing_line = ""
        body = None
        j = i + 1
        while j < len(lines) and lines[j].strip():
            frame = _JUNIT_FRAME.match(lines[j])
            if frame:
                # Deepest in-test frame: stack traces list deepest first, so
                # the first frame resolving under test_sources wins.
                if not failing_line:
                    path = _find_source(test_sources, frame.group(1))
                    if path is not None:
                        lineno = int(frame.group(2))
                        failing_line = _read_line(path, lineno)
                        if include_body:
                            body = _extract_body(path, lineno, name)
            elif not message and not lines[j].lstrip().startswith("at "):
                message = lines[j].strip()
            j += 1
        if message:
            failures.append(
                TestFailureInfo(name, message, failing_line=failing_line, test_body=body)
            )
        i = j
    return failures


_PARSERS = (_parse_junit, _parse_generic)


def extract_all_failures(
    raw_output: str, test_sources: str | Path, include_body: bool = False
) -> list[TestFailureInfo]:
    """Parse a test-runner transcript into failure records (pluggable dialects)."""
    test_sources = Path(test_sources)
    for parser in _PARSERS:
        failures = parser(raw_output, test_sources, include_body)
        if failures:
            return failures
    raise NoFailureParsedError("no failure parsed")


def extract_failure_info(
    raw_output: str, test_sources: str | Path, include_body: bool = False
) -> TestFailureInfo:
    """Return the primary failure: the lexicographically smallest test name."""
    failures = extract_all_failures(raw_output, test_sources, include_body)
    return min(failures, key=lambda f: f.test_name)


def error_class(message: str) -> str:
    """First word/exception identifier of an error message."""
    m = re.match(r"[\w.$]+", message.strip())
    return m.group(0) if m else ""


def same_original_failure(result: ValidationResult, original: TestFailureInfo) -> bool:
    """True iff the result still fails the original bug-exposing test.

    Matches on test name plus error class token; compile errors and timeouts
    are never "the same failure".
    """
    if result.verdict is not Verdict.TEST_FAILURE or result.failure is None:
        return False
    got = result.failure
    return (
        got.test_name == original.test_name
        and error_class(got.error_message) == error_class(original.error_message)
    )
