from solution import is_even


def test_is_even():
    assert is_even(2)
