"""Tests for fizz.fizzbuzz (generic PASS/FAIL line protocol)."""
import inspect
import sys

sys.path.insert(0, "toy5")

from fizz import fizzbuzz

failures = []


def check(name, actual, expected):
    if actual == expected:
        print(f"PASS {name}")
    else:
        print(f"FAIL {name}: expected {expected!r} but was {actual!r}")
        line = inspect.currentframe().f_back.f_lineno
        print(f"  at toy5/tests_toy5.py:{line}")
        failures.append(name)


def test_fizz():
    check("testFizzThree", fizzbuzz(3), "Fizz")


def test_buzz():
    check("testBuzzFive", fizzbuzz(5), "Buzz")


def test_fizzbuzz_fifteen():
    check("testFizzBuzzFifteen", fizzbuzz(15), "FizzBuzz")


def test_plain_number():
    check("testPlainSeven", fizzbuzz(7), "7")


test_fizz()
test_buzz()
test_fizzbuzz_fifteen()
test_plain_number()
sys.exit(1 if failures else 0)
