"""Expression evaluator."""


def evaluate(expression):
    """Evaluate a user supplied expression."""
    return eval(expression)
