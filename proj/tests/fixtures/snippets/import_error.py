"""Imports a module that does not exist."""
import os
import nonexistent_package_xyz


def version():
    """Return the package version."""
    assert nonexistent_package_xyz is not None
    return nonexistent_package_xyz.VERSION
