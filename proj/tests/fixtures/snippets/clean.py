"""Arithmetic helpers."""


def add(left, right):
    """Return the sum of two numbers."""
    return left + right
