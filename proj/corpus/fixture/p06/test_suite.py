from solution import make_token, read_seed


def test_make_token():
    assert make_token() is not None
