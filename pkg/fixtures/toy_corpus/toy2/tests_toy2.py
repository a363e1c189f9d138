"""Tests for textutil.truncate (generic PASS/FAIL line protocol)."""
import inspect
import sys

sys.path.insert(0, "toy2")

from textutil import truncate

failures = []


def check(name, actual, expected):
    if actual == expected:
        print(f"PASS {name}")
    else:
        print(f"FAIL {name}: expected {expected!r} but was {actual!r}")
        line = inspect.currentframe().f_back.f_lineno
        print(f"  at toy2/tests_toy2.py:{line}")
        failures.append(name)


def test_truncate_short():
    check("testTruncateShort", truncate("ab", 5), "ab")


def test_truncate_long():
    check("testTruncateLong", truncate("abcdef", 3), "abc")


test_truncate_short()
test_truncate_long()
sys.exit(1 if failures else 0)
