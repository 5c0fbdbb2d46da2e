"""Module with a suppression comment."""


def compute(value):  # pylint: disable=invalid-name
    """Double a value."""
    return value * 2
