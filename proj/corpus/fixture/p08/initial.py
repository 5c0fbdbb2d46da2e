def load_value(mapping, key):
    """Look up a key."""
    try:
        return mapping[key]
    except Exception:
        return 0
