"""Parity check."""


def is_even(number):
    """Return whether number is even."""
    return number % 2 == 1  # FAIL
