"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""
import functools
import json
import random
import sys
import time

from click.testing import CliRunner

from convrepair import (
    BackendConfig,
    ChatMessage,
    ChatRole,
    CostLedger,
    EngineConfig,
    HttpBackend,
    TokenUsage,
    Verdict,
    apply_patch,
    compute_cost,
    conversational_repair,
    normalize_patch,
    scripted_oracle,
    validate,
)
from convrepair.ablation import run_ablation
from convrepair.cli import main
from convrepair.prompts import FeedbackLevel, STILL_FAILS_ORIGINAL

from conftest import MANIFEST, SCRIPTS, RecordingBackend


def criterion(number, description):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            # Written to the real stdout so the line survives pytest capture.
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[ACCEPTANCE {number}] FAIL - {description}", file=sys.__stdout__)
                raise
            print(f"[ACCEPTANCE {number}] PASS - {description}", file=sys.__stdout__)

        return inner

    return wrap


@criterion(1, "3-step hand-traced conversation: tries=3, exact dynamic feedback, <5s")
def test_algorithm_trace_equivalence(bugs_by_id, workspace_for, original_failures):
    bug = bugs_by_id["toy-1"]
    started = time.monotonic()
    outcome = conversational_repair(
        bug,
        scripted_oracle(SCRIPTS / "three_step.json"),
        EngineConfig(max_tries=3, max_conv_length=3),
        workspace_for(bug),
        original_failures["toy-1"],
    )
    elapsed = time.monotonic() - started
    assert outcome.ledger.tries_used == 3
    assert [p.text for p in outcome.plausible] == ["    return -1"]
    verdicts = [e.verdict for e in outcome.events]
    assert verdicts == ["compile_error", "test_failure", "pass"]
    assert "SyntaxError" in outcome.events[0].feedback
    assert outcome.events[1].feedback == STILL_FAILS_ORIGINAL
    assert outcome.events[2].feedback == ""
    assert elapsed < 5.0


class _RandomBackend:
    """Scripted-but-randomized oracle for the invariant fuzz suite."""

    REPLIES = [
        (0.45, "I cannot tell what is wrong with this function."),
        (0.10, "```\n    return -1\n```"),
        (0.15, "```\n    return 0\n```"),
        (0.15, "```\n    return 1\n```"),
        (0.15, "```\n    return oops(\n```"),
    ]

    def __init__(self, rng):
        self.rng = rng

    def complete(self, messages, session_id="default"):
        roll = self.rng.random()
        cumulative = 0.0
        reply = self.REPLIES[-1][1]
        for weight, text in self.REPLIES:
            cumulative += weight
            if roll < cumulative:
                reply = text
                break
        prompt = sum(len(m.content) // 4 for m in messages)
        return ChatMessage(ChatRole.ASSISTANT, reply), TokenUsage(prompt, len(reply) // 4)


@criterion(2, "100 randomized trials: budget/length invariants, restart purity, <60s")
def test_budget_and_length_invariants(bugs_by_id, workspace_for, original_failures):
    bug = bugs_by_id["toy-1"]
    workspace = workspace_for(bug)
    pristine = (workspace / bug.source_path).read_bytes()
    rng = random.Random(20230815)
    started = time.monotonic()
    for trial in range(100):
        max_tries = rng.randint(1, 5)
        max_conv_length = rng.randint(1, 3)
        backend = RecordingBackend(_RandomBackend(rng))
        outcome = conversational_repair(
            bug,
            backend,
            EngineConfig(max_tries=max_tries, max_conv_length=max_conv_length),
            workspace,
            original_failures["toy-1"],
            session_id=f"fuzz-{trial}",
        )
        assert outcome.ledger.tries_used <= max_tries
        initial = backend.calls[0][1].content
        for call in backend.calls:
            # system + initial + 2 per exchange; never a full-length history.
            assert len(call) % 2 == 0
            assert (len(call) - 2) // 2 < max_conv_length
            assert call[0].role is ChatRole.SYSTEM
            if "already found to pass all tests" in call[1].content:
                # Alternative-patch queries are single-shot, no history.
                assert len(call) == 2
                assert call[1].content.startswith(initial)
            else:
                # Restart purity: conversations start from the same prompt.
                assert call[1].content == initial
        for patch in outcome.plausible:
            (workspace / bug.source_path).write_bytes(pristine)
            apply_patch(bug, patch, workspace)
            assert validate(bug, patch, workspace).verdict is Verdict.PASS
        (workspace / bug.source_path).write_bytes(pristine)
    assert time.monotonic() - started < 60.0


@criterion(3, "max_conv_length=1 degenerates to repeated sampling of the initial prompt")
def test_degenerate_length_equivalence(bugs_by_id, workspace_for, original_failures):
    bug = bugs_by_id["toy-1"]
    backend = RecordingBackend(scripted_oracle(SCRIPTS / "never_fix.json"))
    conversational_repair(
        bug,
        backend,
        EngineConfig(max_tries=6, max_conv_length=1),
        workspace_for(bug),
        original_failures["toy-1"],
    )
    assert len(backend.calls) == 6
    first = backend.calls[0]
    for call in backend.calls:
        assert [(m.role, m.content) for m in call] == [
            (m.role, m.content) for m in first
        ]


@criterion(4, "longer conversations unlock feedback-dependent fixes; cost non-decreasing")
def test_conversation_length_trend(bugs_by_id):
    bug = bugs_by_id["toy-1"]
    grid = [
        (f"len{n}", EngineConfig(max_tries=6, max_conv_length=n)) for n in (1, 2, 3)
    ]
    aware = run_ablation([bug], scripted_oracle(SCRIPTS / "feedback_aware.json"), grid)
    assert aware[0].bugs_plausible == 0
    assert aware[1].bugs_plausible >= 1
    assert aware[2].bugs_plausible >= 1

    never = run_ablation([bug], scripted_oracle(SCRIPTS / "never_fix.json"), grid)
    costs = [row.mean_dollars for row in never]
    assert costs[0] <= costs[1] <= costs[2]


@criterion(5, "dynamic feedback fixes at least as many bugs as bare feedback")
def test_feedback_variant_ordering(bugs_by_id):
    bug = bugs_by_id["toy-1"]
    grid = [
        ("base", EngineConfig(max_tries=4, feedback_variant=FeedbackLevel.BASE)),
        ("dynamic", EngineConfig(max_tries=4, feedback_variant=FeedbackLevel.DYNAMIC)),
    ]
    rows = run_ablation([bug], scripted_oracle(SCRIPTS / "dynamic_keyed.json"), grid)
    by_id = {row.config_id: row.bugs_plausible for row in rows}
    assert by_id["dynamic"] >= by_id["base"]
    assert by_id["dynamic"] >= 1


@criterion(6, "cost accounting is exact: 210,000 tokens at $0.002/1k prices at $0.42")
def test_cost_exactness(bugs_by_id, workspace_for, original_failures):
    ledger = CostLedger(200000, 10000, rate_per_1k=0.002)
    assert abs(ledger.dollars - 0.42) < 1e-12
    assert abs(compute_cost(ledger, 0.002) - 0.42) < 1e-12

    bug = bugs_by_id["toy-1"]
    outcome = conversational_repair(
        bug,
        scripted_oracle(SCRIPTS / "three_step.json"),
        EngineConfig(max_tries=3),
        workspace_for(bug),
        original_failures["toy-1"],
    )
    got = outcome.ledger
    expected = (got.total_prompt_tokens + got.total_completion_tokens) / 1000 * 0.002
    assert abs(got.dollars - expected) < 1e-12


@criterion(7, "pool-search script repairs all 5 toy bugs via the CLI in <120s")
def test_end_to_end_toy_corpus(tmp_path):
    out = tmp_path / "results.jsonl"
    started = time.monotonic()
    result = CliRunner().invoke(
        main,
        [
            "repair",
            "--corpus", str(MANIFEST),
            "--backend", "scripted",
            "--script", str(SCRIPTS / "pool_search.json"),
            "--out", str(out),
        ],
    )
    elapsed = time.monotonic() - started
    assert result.exit_code == 0, result.output
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert {r["bug_id"] for r in records} == {"toy-1", "toy-2", "toy-3", "toy-4", "toy-5"}
    assert all(len(r["plausible"]) >= 1 for r in records)
    for record in records:
        normalized = [normalize_patch(p) for p in record["plausible"]]
        assert len(normalized) == len(set(normalized))
    toy1 = next(r for r in records if r["bug_id"] == "toy-1")
    assert len(toy1["plausible"]) >= 2
    assert elapsed < 120.0


@criterion(8, "HTTP backend round-trips JSON and reports stub usage exactly")
def test_http_backend_conformance(stub_server, monkeypatch):
    monkeypatch.setenv("CONVREPAIR_API_KEY", "sk-acceptance")
    stub_server.enqueue(
        {
            "choices": [{"message": {"role": "assistant", "content": "    return -1"}}],
            "usage": {"prompt_tokens": 321, "completion_tokens": 9},
        }
    )
    backend = HttpBackend(
        BackendConfig(kind="http", endpoint=stub_server.endpoint, model_name="stub-model"),
        sleep=lambda _s: None,
    )
    messages = [
        ChatMessage(ChatRole.SYSTEM, "You are an Automated Program Repair tool"),
        ChatMessage(ChatRole.USER, "please fix"),
    ]
    reply, usage = backend.complete(messages)
    assert reply.content == "    return -1"
    assert usage == TokenUsage(321, 9)
    headers, body = stub_server.requests[0]
    assert body["model"] == "stub-model"
    assert body["messages"] == [
        {"role": m.role.value, "content": m.content} for m in messages
    ]
    assert headers.get("Authorization") == "Bearer sk-acceptance"
