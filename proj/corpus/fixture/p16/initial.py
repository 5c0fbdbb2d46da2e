"""Totals."""


def compute_sum(values): 
    """Sum values."""
    return sum(values)
