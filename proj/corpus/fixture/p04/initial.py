def parse_number(text):
    """Parse a number literal."""
    return eval(text)
