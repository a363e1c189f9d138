"""Tests for bounds.clamp (generic PASS/FAIL line protocol)."""
import inspect
import sys

sys.path.insert(0, "toy4")

from bounds import clamp

failures = []


def check(name, actual, expected):
    if actual == expected:
        print(f"PASS {name}")
    else:
        print(f"FAIL {name}: expected {expected!r} but was {actual!r}")
        line = inspect.currentframe().f_back.f_lineno
        print(f"  at toy4/tests_toy4.py:{line}")
        failures.append(name)


def test_clamp_inside():
    check("testClampInside", clamp(5, 1, 10), 5)


def test_clamp_below():
    check("testClampBelow", clamp(-5, 1, 10), 1)


def test_clamp_above():
    check("testClampAbove", clamp(15, 1, 10), 10)


test_clamp_inside()
test_clamp_below()
test_clamp_above()
sys.exit(1 if failures else 0)
