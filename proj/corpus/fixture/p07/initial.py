"""Safe division."""


def safe_divide(a, b):
    """Divide, returning zero on failure."""
    try:
        return a / b
    except Exception:
        return 0
