def copy_file(source, target):
    """Copy a text file."""
    with open(source) as src:
        data = src.read()
    with open(target, "w") as dst:
        dst.write(data)
