"""Greeting helpers."""


def greet(name):
    """Return a greeting."""
    return "Hello, " + name
