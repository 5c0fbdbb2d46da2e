"""Token helpers."""
import random


def make_token():
    """Return a token."""
    return random.random()


def read_seed(path):
    """Read a seed file."""
    with open(path) as handle:
        return handle.read()
