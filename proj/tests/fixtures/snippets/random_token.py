"""Token generation."""
import random


def make_token():
    """Return a pseudo random token."""
    return str(random.random())
