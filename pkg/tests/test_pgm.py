import numpy as np
import pytest

from cdcutmix.pgm import read_pgm, write_pgm


def test_round_trip_8bit():
    arr = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    data = write_pgm(arr)
    out, maxval = read_pgm(data)
    assert maxval == 255
    assert np.array_equal(out, arr)


def test_round_trip_16bit():
    arr = np.array([[0, 1000], [65535, 42]], dtype=np.uint16)
    data = write_pgm(arr, maxval=65535)
    out, maxval = read_pgm(data)
    assert maxval == 65535
    assert np.array_equal(out, arr)


def test_header_is_canonical():
    data = write_pgm(np.zeros((2, 5), dtype=np.uint8))
    assert data.startswith(b"P5\n5 2\n255\n")
    assert len(data) == len(b"P5\n5 2\n255\n") + 10


def test_comments_accepted():
    data = b"P5\n# a comment\n2 2\n255\n" + bytes(4)
    out, maxval = read_pgm(data)
    assert out.shape == (2, 2)


def test_rejects_wrong_magic():
    with pytest.raises(ValueError, match="magic"):
        read_pgm(b"P2\n2 2\n255\n" + bytes(4))


def test_rejects_truncated_payload():
    data = write_pgm(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError, match="payload"):
        read_pgm(data[:-1])


def test_rejects_trailing_garbage():
    data = write_pgm(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError, match="payload"):
        read_pgm(data + b"x")


def test_rejects_values_above_maxval():
    with pytest.raises(ValueError, match="exceed"):
        write_pgm(np.array([[300]], dtype=np.uint16), maxval=255)
