"""Tests for counter.get_category_index (generic PASS/FAIL line protocol)."""
import inspect
import sys

sys.path.insert(0, "toy1")

from counter import get_category_index

failures = []


def check(name, actual, expected):
    if actual == expected:
        print(f"PASS {name}")
    else:
        print(f"FAIL {name}: expected {expected!r} but was {actual!r}")
        line = inspect.currentframe().f_back.f_lineno
        print(f"  at toy1/tests_toy1.py:{line}")
        failures.append(name)


def test_finds_existing_key():
    check("testFindsExistingKey", get_category_index(["a", "b"], "b"), 1)


def test_get_category_index_missing():
    check("testGetCategoryIndex", get_category_index([], "ABC"), -1)


test_finds_existing_key()
test_get_category_index_missing()
sys.exit(1 if failures else 0)
