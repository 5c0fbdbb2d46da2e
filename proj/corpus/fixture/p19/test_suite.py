from solution import list_dir


def test_list_dir():
    assert list_dir(".") == 0
