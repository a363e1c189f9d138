"""Tests for stats.mean (generic PASS/FAIL line protocol)."""
import inspect
import sys

sys.path.insert(0, "toy3")

from stats import mean

failures = []


def check(name, actual, expected):
    if actual == expected:
        print(f"PASS {name}")
    else:
        print(f"FAIL {name}: expected {expected!r} but was {actual!r}")
        line = inspect.currentframe().f_back.f_lineno
        print(f"  at toy3/tests_toy3.py:{line}")
        failures.append(name)


def test_mean_of_pair():
    check("testMeanOfPair", mean([2.0, 4.0]), 3.0)


def test_mean_single():
    check("testMeanSingle", mean([5.0]), 5.0)


test_mean_of_pair()
test_mean_single()
sys.exit(1 if failures else 0)
