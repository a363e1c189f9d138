"""Bug corpus model: repair scenarios, manifest loading, and patch application.

Line spans are 1-based and inclusive. All file content is normalized to LF
line endings before spans are interpreted, so spans are stable across
platforms.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ManifestError, SpanError, WorkspaceError


class RepairScenario(Enum):
    SINGLE_LINE = "single-line"
    SINGLE_HUNK = "single-hunk"
    SINGLE_FUNCTION = "single-function"

    @classmethod
    def from_str(cls, value: str) -> "RepairScenario":
        for member in cls:
            if member.value == value:
                return member
        raise ManifestError(f"unknown scenario {value!r}")

    @property
    def is_infill(self) -> bool:
        """Infill scenarios remove the buggy span and ask for a fill-in."""
        return self is not RepairScenario.SINGLE_FUNCTION


class PatchOrigin(Enum):
    CONVERSATIONAL_REPAIR = "conversational-repair"
    PLAUSIBLE_GENERATION = "plausible-generation"


@dataclass(frozen=True)
class Patch:
    """One candidate replacement for a bug span, free-form model output."""

    text: str
    scenario: RepairScenario
    origin: PatchOrigin = PatchOrigin.CONVERSATIONAL_REPAIR
    try_index: int = 0


@dataclass(frozen=True)
class BugInstance:
    """A single repairable bug with its location and validation commands."""

    id: str
    source_path: str
    bug_span: tuple[int, int]
    enclosing_function_span: tuple[int, int]
    scenario: RepairScenario
    build_cmd: str
    test_cmd: str
    original_failing_tests: tuple[str, ...]
    few_shot_examples: tuple[tuple[str, str], ...] = ()
    reference_patch: str | None = None
    timeout_s: float = 300.0
    project_root: Path = field(default_factory=Path)

    def __post_init__(self) -> None:
        fs, fe = self.enclosing_function_span
        bs, be = self.bug_span
        if not (1 <= bs <= be):
            raise ManifestError(f"bug {self.id}: invalid bug_span {self.bug_span}")
        if not (fs <= bs and be <= fe):
            raise ManifestError(
                f"bug {self.id}: bug_span {self.bug_span} not contained in "
                f"function_span {self.enclosing_function_span}"
            )
        if not self.original_failing_tests:
            raise ManifestError(f"bug {self.id}: failing_tests must be non-empty")
        if self.scenario is RepairScenario.SINGLE_LINE and bs != be:
            raise ManifestError(f"bug {self.id}: single-line span must cover one line")
        if self.scenario is RepairScenario.SINGLE_FUNCTION and self.bug_span != self.enclosing_function_span:
            raise ManifestError(
                f"bug {self.id}: single-function span must equal the function span"
            )


_REQUIRED_KEYS = {
    "id", "source_path", "bug_span", "function_span", "scenario",
    "build_cmd", "test_cmd", "failing_tests", "few_shot",
}
_OPTIONAL_KEYS = {"reference_patch", "timeout_s"}


def _normalize(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def read_source(path: Path) -> str:
    """Read a source file with line endings normalized to LF."""
    return _normalize(path.read_text(encoding="utf-8"))


def load_corpus(manifest_path: str | Path) -> list[BugInstance]:
    """Load a corpus manifest (JSON array of bug objects).

    Paths in the manifest are resolved relative to the manifest's directory,
    which serves as the project root copied into validation workspaces.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {manifest_path}")
    try:
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(
            f"{manifest_path}:{exc.lineno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, list):
        raise ManifestError(f"{manifest_path}: top level must be an array")

    root = manifest_path.parent
    bugs: list[BugInstance] = []
    seen: set[str] = set()
    for index, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ManifestError(f"{manifest_path}: entry {index} is not an object")
        keys = set(entry)
        missing = _REQUIRED_KEYS - keys
        unknown = keys - _REQUIRED_KEYS - _OPTIONAL_KEYS
        if missing:
            raise ManifestError(
                f"{manifest_path}: entry {index} missing keys {sorted(missing)}"
            )
        if unknown:
            raise ManifestError(
                f"{manifest_path}: entry {index} has unknown keys {sorted(unknown)}"
            )
        bug_id = entry["id"]
        if bug_id in seen:
            raise ManifestError(f"{manifest_path}: duplicate bug id {bug_id!r}")
        seen.add(bug_id)
        few_shot = tuple(
            (pair["buggy"], pair["fixed"]) for pair in entry["few_shot"]
        )
        bugs.append(
            BugInstance(
                id=bug_id,
                source_path=entry["source_path"],
                bug_span=tuple(entry["bug_span"]),
                enclosing_function_span=tuple(entry["function_span"]),
                scenario=RepairScenario.from_str(entry["scenario"]),
                build_cmd=entry["build_cmd"],
                test_cmd=entry["test_cmd"],
                original_failing_tests=tuple(entry["failing_tests"]),
                few_shot_examples=few_shot,
                reference_patch=entry.get("reference_patch"),
                timeout_s=float(entry.get("timeout_s", 300)),
                project_root=root,
            )
        )
    return bugs


def _function_lines(bug: BugInstance, content: str) -> list[str]:
    lines = content.splitlines(keepends=True)
    fs, fe = bug.enclosing_function_span
    bs, be = bug.bug_span
    if be > len(lines) or fe > len(lines):
        raise SpanError(
            f"bug {bug.id}: span exceeds file length {len(lines)} for {bug.source_path}"
        )
    return lines


def split_context(bug: BugInstance, source_root: Path | None = None) -> tuple[str, str, str]:
    """Split the enclosing function into (prefix, buggy_code, suffix).

    Concatenating the three parts reconstructs the function region byte for
    byte (after LF normalization).
    """
    root = source_root if source_root is not None else bug.project_root
    content = read_source(root / bug.source_path)
    lines = _function_lines(bug, content)
    fs, fe = bug.enclosing_function_span
    bs, be = bug.bug_span
    prefix = "".join(lines[fs - 1:bs - 1])
    buggy = "".join(lines[bs - 1:be])
    suffix = "".join(lines[be:fe])
    return prefix, buggy, suffix


def apply_patch(bug: BugInstance, patch: Patch, workspace: str | Path) -> Path:
    """Replace the bug span inside the workspace copy with the patch text.

    The original project tree is never touched; only the workspace copy of
    the source file is rewritten.
    """
    workspace = Path(workspace)
    target = workspace / bug.source_path
    if not workspace.is_dir() or not target.is_file():
        raise WorkspaceError(f"workspace not initialized: {workspace}")
    if workspace.resolve() == bug.project_root.resolve():
        raise WorkspaceError("workspace must not be the original project root")
    if patch.scenario is not bug.scenario:
        raise SpanError(
            f"bug {bug.id}: patch scenario {patch.scenario.value} does not match "
            f"bug scenario {bug.scenario.value}"
        )
    content = read_source(target)
    lines = _function_lines(bug, content)
    bs, be = bug.bug_span
    region = "".join(lines[bs - 1:be])
    text = patch.text
    if not text.endswith("\n") and (be < len(lines) or region.endswith("\n")):
        text += "\n"
    patched = "".join(lines[:bs - 1]) + text + "".join(lines[be:])
    target.write_text(patched, encoding="utf-8")
    return target
