from solution import transpose


def test_transpose():
    assert transpose([[1, 2]]) == [[1], [2]]
