from solution import load_value


def test_load_value():
    assert load_value({}, "x") == 0
