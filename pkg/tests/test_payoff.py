import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optstop.paths import FiniteChain
from optstop.payoff import Call, CustomPayoff, MaxCall, Put, TablePayoff, truncate

finite = st.floats(-1e6, 1e6, allow_nan=False)
positive = st.floats(1e-6, 1e6)


def test_put_and_call_examples():
    put = Put(40.0, 1.0)
    assert put.evaluate(1, 36.0) == 4.0
    assert put.evaluate(1, 45.0) == 0.0
    assert Call(100.0, 1.0, beta=5.0).evaluate(0, 110.0) == 5.0


def test_discount_and_vectorization():
    put = Put(40.0, 0.9)
    np.testing.assert_allclose(put.evaluate(2, np.array([30.0, 50.0])), [8.1, 0.0])
    assert MaxCall(10.0).evaluate(0, np.array([[8.0, 13.0]]))[0] == 3.0


def test_time_range_checked():
    with pytest.raises(ValueError):
        Put(40.0, T=3).evaluate(4, 30.0)
    with pytest.raises(ValueError):
        Put(40.0).evaluate(-1, 30.0)


def test_table_payoff_lookup_and_csv(tmp_path):
    chain = FiniteChain([0.0, 1.0], (np.eye(2),), [1, 0])
    table = TablePayoff(chain, np.array([[1.0, 2.0], [3.0, 4.0]]))
    np.testing.assert_array_equal(table.evaluate(1, np.array([1.0, 0.0])), [4.0, 3.0])
    with pytest.raises(LookupError):
        table.evaluate(0, 7.0)
    path = tmp_path / "f.csv"
    path.write_text("t,state,value\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n")
    np.testing.assert_array_equal(TablePayoff.from_csv(chain, path).values, table.values)
    with pytest.raises(ValueError):
        TablePayoff(chain, np.array([[1.0, -2.0], [3.0, 4.0]]))


def test_custom_payoff_rejects_negative_values():
    with pytest.raises(ValueError):
        CustomPayoff(lambda t, X: X[:, 0] - 5).evaluate(0, 1.0)


def test_truncate_examples():
    assert truncate(3, 5) == 3
    assert truncate(7, 5) == 5
    assert truncate(-7, 5) == -5
    with pytest.raises(ValueError):
        truncate(1.0, 0.0)


@given(finite, positive)
def test_truncate_properties(g, beta):
    out = truncate(g, beta)
    assert abs(out) <= beta
    assert truncate(out, beta) == out
    if abs(g) <= beta:
        assert out == g
    else:
        assert out == np.sign(g) * beta


@given(finite, finite, positive)
def test_truncate_is_1_lipschitz(a, b, beta):
    assert abs(truncate(a, beta) - truncate(b, beta)) <= abs(a - b) + 1e-9


@given(st.floats(0, 200), positive)
def test_payoff_beta_caps(x, beta):
    val = Put(100.0, beta=beta).evaluate(0, x)
    assert val == min(max(100.0 - x, 0.0), beta)
