"""Constants."""

ANSWER = 42
