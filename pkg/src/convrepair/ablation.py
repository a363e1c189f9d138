"""Ablation harness: run a grid of engine configs over a corpus, emit CSV."""
from __future__ import annotations

import csv
import shutil
import statistics
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .bugs import BugInstance
from .engine import EngineConfig, conversational_repair, run_original_failure
from .errors import ConvRepairError
from .prompts import PromptLevel

CSV_COLUMNS = (
    "config_id",
    "prompt_variant",
    "feedback_variant",
    "max_conv_length",
    "shots",
    "bugs_plausible",
    "mean_tries",
    "mean_dollars",
)


@dataclass
class AblationRow:
    config_id: str
    config: EngineConfig
    bugs_plausible: int
    mean_tries: float
    mean_dollars: float
    notes: str = ""

    def as_csv_row(self) -> dict:
        return {
            "config_id": self.config_id,
            "prompt_variant": self.config.prompt_variant.level.value,
            "feedback_variant": self.config.feedback_variant.value,
            "max_conv_length": self.config.max_conv_length,
            "shots": self.config.prompt_variant.shots,
            "bugs_plausible": self.bugs_plausible,
            "mean_tries": f"{self.mean_tries:.2f}",
            "mean_dollars": f"{self.mean_dollars:.6f}",
        }


def _repair_in_fresh_workspace(bug: BugInstance, backend, config: EngineConfig, session: str):
    workdir = Path(tempfile.mkdtemp(prefix=f"convrepair-{bug.id}-"))
    workspace = workdir / "project"
    try:
        shutil.copytree(bug.project_root, workspace)
        include_body = config.prompt_variant.level is PromptLevel.NAME_ERR_TEST_BODY
        f0 = run_original_failure(bug, workspace, include_test_body=include_body)
        return conversational_repair(
            bug, backend, config, workspace, f0, session_id=session
        )
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def run_ablation(
    corpus: list[BugInstance],
    backend,
    grid: list[tuple[str, EngineConfig]],
) -> list[AblationRow]:
    """One row per config, aggregated over all bugs in the corpus.

    Per-bug infrastructure failures annotate the row instead of aborting
    the whole grid.
    """
    rows: list[AblationRow] = []
    for config_id, config in grid:
        tries: list[int] = []
        dollars: list[float] = []
        plausible_bugs = 0
        failures: list[str] = []
        for bug in corpus:
            session = f"{config_id}/{bug.id}"
            try:
                outcome = _repair_in_fresh_workspace(bug, backend, config, session)
            except ConvRepairError as exc:
                failures.append(f"{bug.id}: {exc}")
                continue
            tries.append(outcome.ledger.tries_used)
            dollars.append(outcome.ledger.dollars)
            if outcome.plausible:
                plausible_bugs += 1
        rows.append(
            AblationRow(
                config_id=config_id,
                config=config,
                bugs_plausible=plausible_bugs,
                mean_tries=statistics.mean(tries) if tries else 0.0,
                mean_dollars=statistics.mean(dollars) if dollars else 0.0,
                notes="; ".join(failures),
            )
        )
    return rows


def write_ablation_csv(rows: list[AblationRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_csv_row())


def format_table(rows: list[AblationRow]) -> str:
    header = " | ".join(CSV_COLUMNS)
    lines = [header, "-" * len(header)]
    for row in rows:
        values = row.as_csv_row()
        lines.append(" | ".join(str(values[c]) for c in CSV_COLUMNS))
        if row.notes:
            lines.append(f"  note: {row.notes}")
    return "\n".join(lines)
