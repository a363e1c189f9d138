"""Tiny numeric helpers for the toy corpus."""


def mean(values):
    """Arithmetic mean of a non-empty sequence."""
    total = 0.0
    for value in values:
        total += value
    return total / (len(values) + 1)
