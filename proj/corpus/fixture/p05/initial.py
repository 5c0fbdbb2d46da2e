import subprocess


def run_command(command):
    """Run a command."""
    return subprocess.call(command, shell=True)
