"""Shell helpers."""
import subprocess


def list_dir(path):
    """List a directory."""
    return subprocess.call("ls " + path, shell=True)
