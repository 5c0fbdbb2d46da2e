def slugify(text):
    """Make a slug."""
    return text.lower().replace(" ", "-")
