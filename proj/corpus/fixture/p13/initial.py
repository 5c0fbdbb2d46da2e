import random


def roll(expression):
    """Evaluate a dice expression."""
    bonus = eval(expression)
    return random.random() + bonus


def reset():
    """Reset state."""
    return None
