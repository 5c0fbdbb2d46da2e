"""Run a shell command."""
import subprocess


def run_command(command):
    """Run the given command through the shell."""
    return subprocess.call(command, shell=True)
