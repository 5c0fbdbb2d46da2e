"""Logging helpers."""


def write_log(path, message):
    """Append a message to a log file."""
    with open(path, "a") as handle: 
        handle.write(message)
    return None
