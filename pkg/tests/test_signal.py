import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from nof1.errors import DimensionError, DomainError, RefusalError
from nof1.signal import (
    build_circulant,
    build_toeplitz,
    circular_convolve,
    circular_extension,
    convolve,
    correlate,
    dump_signal,
    linear_convolve,
    load_signal,
    toeplitz_adjoint,
)

pytestmark = pytest.mark.usefixtures("backend")

ints = st.integers(-5, 5)


def int_pair(max_len=12):
    return st.integers(1, max_len).flatmap(
        lambda n: st.tuples(st.lists(ints, min_size=n, max_size=n), st.lists(ints, min_size=n, max_size=n))
    )


@pytest.mark.parametrize(
    "u, v, expected",
    [((1, 2, 3), (1, 0, 0), (1, 2, 3)), ((1, 0, 1), (1, 1, 0), (1, 1, 1)), ((1, 1), (1, 1), (1, 2))],
)
def test_linear_examples(u, v, expected):
    assert linear_convolve(u, v).tolist() == list(expected)


@pytest.mark.parametrize("u, v, expected", [((1, 2, 3), (1, 0, 0), (1, 2, 3)), ((1, 1, 0), (1, 0, 1), (2, 1, 1))])
def test_circular_examples(u, v, expected):
    assert circular_convolve(u, v).tolist() == list(expected)


def test_circular_two_point_symbolic():
    a, b, c, d = 2.0, 3.0, 5.0, 7.0
    assert circular_convolve([a, b], [c, d]).tolist() == [a * c + b * d, a * d + b * c]


def test_length_mismatch():
    with pytest.raises(DimensionError):
        linear_convolve([1, 2], [1, 2, 3])
    with pytest.raises(DimensionError):
        circular_convolve([1], [1, 2])


def test_rejects_nonfinite_and_empty():
    with pytest.raises(DomainError):
        linear_convolve([np.nan], [1.0])
    with pytest.raises(DimensionError):
        linear_convolve([], [])


def test_unknown_method():
    with pytest.raises(DomainError):
        linear_convolve([1.0], [1.0], method="magic")


@pytest.mark.parametrize("method", ["direct", "fft"])
@given(int_pair())
def test_linear_matches_loop_oracle(method, pair):
    u, v = pair
    np.testing.assert_allclose(linear_convolve(u, v, method), oracles.conv_linear(u, v), atol=1e-9)


@pytest.mark.parametrize("method", ["direct", "fft"])
@given(int_pair())
def test_circular_matches_loop_oracle(method, pair):
    u, v = pair
    np.testing.assert_allclose(circular_convolve(u, v, method), oracles.conv_circular(u, v), atol=1e-9)


@given(int_pair(), st.booleans())
def test_convolution_commutes(pair, circular):
    u, v = pair
    np.testing.assert_allclose(convolve(u, v, circular), convolve(v, u, circular), atol=1e-9)


@given(int_pair(), st.booleans())
def test_correlation_is_adjoint(pair, circular):
    q, v = pair
    w = np.arange(len(q), dtype=float) - 1.5
    lhs = float(np.dot(convolve(q, w, circular), v))
    rhs = float(np.dot(w, correlate(q, v, circular)))
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_long_signals_fft_agrees_with_direct():
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal(300), rng.standard_normal(300)
    for circular in (False, True):
        np.testing.assert_allclose(convolve(u, v, circular, "fft"), convolve(u, v, circular, "direct"), atol=1e-9)
        np.testing.assert_allclose(correlate(u, v, circular, "fft"), correlate(u, v, circular, "direct"), atol=1e-9)


def test_toeplitz_examples():
    assert build_toeplitz([1, 2]).tolist() == [[1, 0], [2, 1]]
    np.testing.assert_array_equal(build_toeplitz([1, 0, 0]), np.eye(3))


def test_circulant_examples():
    assert build_circulant([1, 2, 3]).tolist() == [[1, 3, 2], [2, 1, 3], [3, 2, 1]]
    np.testing.assert_array_equal(build_circulant([1, 0, 0, 0]), np.eye(4))


@given(int_pair(8))
def test_matrices_match_oracles_and_convolution(pair):
    u, v = pair
    assert build_toeplitz(u).tolist() == oracles.toeplitz(u)
    assert build_circulant(u).tolist() == oracles.circulant(u)
    np.testing.assert_allclose(build_toeplitz(u) @ v, linear_convolve(u, v), atol=1e-9)
    np.testing.assert_allclose(build_circulant(u) @ v, circular_convolve(u, v), atol=1e-9)


def test_dense_cap_refuses():
    with pytest.raises(RefusalError):
        build_toeplitz(np.ones(10), cap=5)
    with pytest.raises(RefusalError):
        build_circulant(np.ones(10), cap=5)


def test_toeplitz_adjoint_of_toeplitz_gram():
    u = np.array([3.0, -1.0, 2.0, 0.5, 4.0])
    n = u.shape[0]
    np.testing.assert_allclose(toeplitz_adjoint(build_toeplitz(u)), (n - np.arange(n)) * u)
    assert toeplitz_adjoint(np.eye(3)).tolist() == [3, 0, 0]
    with pytest.raises(DimensionError):
        toeplitz_adjoint(np.ones((2, 3)))


def test_circular_extension():
    v = np.array([10, 11, 12])
    assert circular_extension(v, -1) == 12
    assert circular_extension(v, np.array([3, 4, -3])).tolist() == [10, 11, 10]


@pytest.mark.parametrize("name", ["g.json", "g.csv"])
def test_signal_file_round_trip(tmp_path, name):
    g = np.array([1.0, 0.1 + 0.2, -3e-17])
    dump_signal(g, tmp_path / name)
    np.testing.assert_array_equal(load_signal(tmp_path / name), g)


def test_load_signal_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("g\n1.0\nabc\n")
    with pytest.raises(DomainError, match=":3:"):
        load_signal(p)
