from solution import total_price


def test_total_price():
    assert total_price([1, 2]) == 3
