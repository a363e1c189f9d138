"""Command-line harness: repair runs, ablation grids, and result reports.

Precedence for settings: command-line flag > `--config` key=value file >
built-in default. Outcomes are persisted as JSONL, one record per bug run.
"""
from __future__ import annotations

import concurrent.futures
import json
import shutil
import sys
import tempfile
import threading
import time
from pathlib import Path

import click

from .ablation import format_table, run_ablation, write_ablation_csv
from .backends import BackendConfig, make_backend
from .bugs import BugInstance, RepairScenario, load_corpus
from .engine import (
    EngineConfig,
    RepairOutcome,
    conversational_repair,
    default_max_tries,
    run_original_failure,
)
from .errors import ConvRepairError
from .prompts import FeedbackLevel, PromptLevel, PromptVariant, SystemMsg

_SCENARIO_FLAGS = {
    "sl": RepairScenario.SINGLE_LINE,
    "sh": RepairScenario.SINGLE_HUNK,
    "sf": RepairScenario.SINGLE_FUNCTION,
}


def _load_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise click.ClickException(f"{path}:{lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip().strip('"')
    return values


def _resolve(flag, file_values: dict, key: str, default, cast=str):
    if flag is not None:
        return flag
    if key in file_values:
        return cast(file_values[key])
    return default


def _outcome_record(
    bug: BugInstance, config: EngineConfig, outcome: RepairOutcome, wall_s: float
) -> dict:
    return {
        "bug_id": bug.id,
        "config": {
            "max_tries": config.max_tries,
            "max_conv_length": config.max_conv_length,
            "prompt_variant": config.prompt_variant.level.value,
            "shots": config.prompt_variant.shots,
            "system_msg": config.prompt_variant.system_msg.value,
            "feedback_variant": config.feedback_variant.value,
            "cost_rate_per_1k": config.cost_rate_per_1k,
        },
        "plausible": [p.text for p in outcome.plausible],
        "tries": outcome.ledger.tries_used,
        "prompt_tokens": outcome.ledger.total_prompt_tokens,
        "completion_tokens": outcome.ledger.total_completion_tokens,
        "dollars": outcome.ledger.dollars,
        "wall_s": wall_s,
        "events": [
            {
                "try": e.try_index,
                "conv": e.conversation_id,
                "patch": e.patch,
                "verdict": e.verdict,
                "feedback": e.feedback,
            }
            for e in outcome.events
        ],
    }


def _backend_config(backend, script, endpoint, model, seed, api_key_env) -> BackendConfig:
    return BackendConfig(
        kind=backend,
        script_path=script,
        endpoint=endpoint or "",
        model_name=model or "gpt-3.5-turbo-0301",
        seed=seed,
        api_key_env=api_key_env or "CONVREPAIR_API_KEY",
    )


def _engine_config(file_values, max_tries, max_conv_len, shots, prompt_variant,
                   feedback_variant, system_msg, timeout, rate) -> tuple[EngineConfig, bool]:
    """Build the engine config; max_tries=None means per-scenario default."""
    max_tries = _resolve(max_tries, file_values, "max_tries", None, int)
    variant = PromptVariant(
        level=PromptLevel(_resolve(prompt_variant, file_values, "prompt_variant",
                                   PromptLevel.NAME_ERR_FAIL_LINE.value)),
        shots=_resolve(shots, file_values, "shots", 1, int),
        system_msg=SystemMsg(_resolve(system_msg, file_values, "system_msg",
                                      SystemMsg.APR_TOOL.value)),
    )
    config = EngineConfig(
        max_tries=max_tries if max_tries is not None else 200,
        max_conv_length=_resolve(max_conv_len, file_values, "max_conv_len", 3, int),
        prompt_variant=variant,
        feedback_variant=FeedbackLevel(
            _resolve(feedback_variant, file_values, "feedback_variant",
                     FeedbackLevel.DYNAMIC.value)
        ),
        end_to_end_timeout_s=_resolve(timeout, file_values, "end_to_end_timeout_s",
                                      5 * 3600.0, float),
        cost_rate_per_1k=_resolve(rate, file_values, "cost_rate_per_1k", 0.002, float),
    )
    return config, max_tries is None


def _select_bugs(corpus, bug_ids, scenario) -> list[BugInstance]:
    bugs = corpus
    if bug_ids:
        by_id = {b.id: b for b in corpus}
        missing = [b for b in bug_ids if b not in by_id]
        if missing:
            raise click.ClickException(f"unknown bug id(s): {', '.join(missing)}")
        bugs = [by_id[b] for b in bug_ids]
    if scenario:
        bugs = [b for b in bugs if b.scenario is _SCENARIO_FLAGS[scenario]]
    return bugs


@click.group()
def main() -> None:
    """Conversation-driven automated program repair."""


@main.command("repair")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bug", "bug_ids", multiple=True, help="Bug id to repair (repeatable).")
@click.option("--scenario", type=click.Choice(sorted(_SCENARIO_FLAGS)), default=None)
@click.option("--backend", type=click.Choice(["http", "scripted"]), default="scripted")
@click.option("--script", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--api-key-env", default=None)
@click.option("--max-tries", type=int, default=None)
@click.option("--max-conv-len", type=int, default=None)
@click.option("--shots", type=int, default=None)
@click.option("--prompt-variant", type=click.Choice([v.value for v in PromptLevel]), default=None)
@click.option("--feedback-variant", type=click.Choice([v.value for v in FeedbackLevel]), default=None)
@click.option("--system-msg", type=click.Choice([v.value for v in SystemMsg]), default=None)
@click.option("--timeout", type=float, default=None, help="End-to-end seconds per bug.")
@click.option("--rate", type=float, default=None, help="Dollar cost per 1000 tokens.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--jobs", type=int, default=1)
@click.option("--keep-workspaces", is_flag=True, default=False)
@click.option("--seed", type=int, default=0)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None)
def cmd_repair(corpus, bug_ids, scenario, backend, script, endpoint, model,
               api_key_env, max_tries, max_conv_len, shots, prompt_variant,
               feedback_variant, system_msg, timeout, rate, out, jobs,
               keep_workspaces, seed, config_file):
    """Repair selected bugs and append one JSONL record per bug."""
    file_values = _load_config_file(config_file)
    engine_config, scenario_default_tries = _engine_config(
        file_values, max_tries, max_conv_len, shots, prompt_variant,
        feedback_variant, system_msg, timeout, rate,
    )
    bugs = _select_bugs(load_corpus(corpus), bug_ids, scenario)
    if not bugs:
        raise click.ClickException("no bugs selected")
    llm = make_backend(_backend_config(backend, script, endpoint, model, seed, api_key_env))

    out_path = Path(out)
    write_lock = threading.Lock()
    infra_failures: list[str] = []

    def run_one(bug: BugInstance) -> None:
        config = engine_config
        if scenario_default_tries:
            import dataclasses
            config = dataclasses.replace(config, max_tries=default_max_tries(bug.scenario))
        workdir = Path(tempfile.mkdtemp(prefix=f"convrepair-{bug.id}-"))
        workspace = workdir / "project"
        started = time.monotonic()
        try:
            shutil.copytree(bug.project_root, workspace)
            include_body = config.prompt_variant.level is PromptLevel.NAME_ERR_TEST_BODY
            f0 = run_original_failure(bug, workspace, include_test_body=include_body)
            outcome = conversational_repair(bug, llm, config, workspace, f0)
        except ConvRepairError as exc:
            infra_failures.append(f"{bug.id}: {exc}")
            click.echo(f"[{bug.id}] infrastructure failure: {exc}", err=True)
            return
        finally:
            if keep_workspaces:
                click.echo(f"[{bug.id}] workspace kept at {workdir}", err=True)
            else:
                shutil.rmtree(workdir, ignore_errors=True)
        record = _outcome_record(bug, config, outcome, time.monotonic() - started)
        with write_lock:
            with open(out_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")
                fh.flush()
        click.echo(
            f"[{bug.id}] plausible={len(outcome.plausible)} "
            f"tries={outcome.ledger.tries_used} dollars={outcome.ledger.dollars:.6f}"
        )

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(run_one, bugs))
    else:
        for bug in bugs:
            run_one(bug)
    sys.exit(1 if infra_failures else 0)


def _parse_grid(path: str) -> list[tuple[str, EngineConfig]]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{path}:{exc.lineno}: {exc.msg}")
    if not isinstance(raw, list):
        raise click.ClickException(f"{path}: grid must be a JSON array of config objects")
    grid = []
    for index, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise click.ClickException(f"{path}: grid entry {index} is not an object")
        try:
            variant = PromptVariant(
                level=PromptLevel(entry.get("prompt_variant", "name-err-fail-line")),
                shots=int(entry.get("shots", 1)),
                system_msg=SystemMsg(entry.get("system_msg", "apr")),
            )
            config = EngineConfig(
                max_tries=int(entry.get("max_tries", 200)),
                max_conv_length=int(entry.get("max_conv_length", 3)),
                prompt_variant=variant,
                feedback_variant=FeedbackLevel(entry.get("feedback_variant", "dynamic")),
                end_to_end_timeout_s=float(entry.get("end_to_end_timeout_s", 5 * 3600.0)),
                cost_rate_per_1k=float(entry.get("cost_rate_per_1k", 0.002)),
            )
        except (ValueError, KeyError) as exc:
            raise click.ClickException(f"{path}: grid entry {index}: {exc}")
        grid.append((str(entry.get("config_id", f"cfg-{index}")), config))
    return grid


@main.command("ablate")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--grid", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", type=click.Choice(["http", "scripted"]), default="scripted")
@click.option("--script", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--api-key-env", default=None)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def cmd_ablate(corpus, grid, backend, script, endpoint, model, api_key_env, seed, out):
    """Run a config grid over the corpus, write a CSV, print the table."""
    bugs = load_corpus(corpus)
    llm = make_backend(_backend_config(backend, script, endpoint, model, seed, api_key_env))
    rows = run_ablation(bugs, llm, _parse_grid(grid))
    write_ablation_csv(rows, out)
    click.echo(format_table(rows))


@main.command("report")
@click.argument("results", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--patches", is_flag=True, default=False,
              help="Dump each plausible patch with its bug id.")
@click.option("--strict", is_flag=True, default=False,
              help="Exit nonzero when a corrupt JSONL line is skipped.")
def cmd_report(results, patches, strict):
    """Summarize one or more JSONL result files."""
    records = []
    corrupt = 0
    for path in results:
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                corrupt += 1
                click.echo(f"warning: skipping corrupt line {path}:{lineno}", err=True)

    total_dollars = 0.0
    total_tries = 0
    for record in records:
        click.echo(
            f"{record['bug_id']}: plausible={len(record['plausible'])} "
            f"tries={record['tries']} dollars={record['dollars']:.6f}"
        )
        total_dollars += record["dollars"]
        total_tries += record["tries"]
        if patches:
            for i, patch in enumerate(record["plausible"], 1):
                click.echo(f"--- {record['bug_id']} patch {i} ---")
                click.echo(patch)
    mean_tries = total_tries / len(records) if records else 0.0
    click.echo(f"total bugs: {len(records)}")
    click.echo(f"total dollars: {total_dollars:.6f}")
    click.echo(f"mean tries: {mean_tries:.2f}")
    if corrupt and strict:
        sys.exit(1)


if __name__ == "__main__":
    main()
