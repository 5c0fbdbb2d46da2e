from solution import write_log


def test_write_log():
    assert write_log is not None
