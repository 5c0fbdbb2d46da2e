"""File helpers."""


def read_first(path):
    """Return the first line or None."""
    with open(path) as handle:
        line = handle.readline()
    if line:
        return line
    else:
        return None
