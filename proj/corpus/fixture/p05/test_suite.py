from solution import run_command


def test_run_command():
    assert run_command(["true"]) == 0
