import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from entbound.simplex import DenseLP, LPError, solve_lp


def _highs(c, G, h, upper, lower):
    res = linprog(-c, A_ub=G if len(G) else None, b_ub=h if len(h) else None,
                  bounds=list(zip(-np.broadcast_to(lower, c.shape), np.broadcast_to(upper, c.shape))),
                  method="highs")
    assert res.status == 0
    return -res.fun


def _instance(rng, m, k):
    c = rng.normal(size=m)
    G = rng.normal(size=(k, m))
    h = rng.random(k) * 2
    return c, G, h


def test_box_only():
    w, obj = solve_lp(np.array([1.0, -2.0, 0.0]), np.zeros((0, 3)), np.zeros(0), 3.0)
    assert obj == pytest.approx(9.0)
    assert np.allclose(w[:2], [3.0, -3.0])


def test_known_small_lp():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6, |x|,|y| <= 10  ->  x = 1.6, y = 1.2
    w, obj = solve_lp(np.array([1.0, 1.0]), np.array([[1.0, 2.0], [3.0, 1.0]]), np.array([4.0, 6.0]), 10.0)
    assert np.allclose(w, [1.6, 1.2])
    assert obj == pytest.approx(2.8)


@given(seed=st.integers(0, 10**6), m=st.integers(1, 12), k=st.integers(0, 40))
def test_matches_highs(seed, m, k):
    rng = np.random.default_rng(seed)
    c, G, h = _instance(rng, m, k)
    w, obj = solve_lp(c, G, h, 5.0)
    assert obj == pytest.approx(_highs(c, G, h, 5.0, 5.0), abs=1e-7)
    assert np.all(G @ w <= h + 1e-8)
    assert np.all(np.abs(w) <= 5.0 + 1e-9)
    assert obj == pytest.approx(c @ w, abs=1e-9)


@given(seed=st.integers(0, 10**6), m=st.integers(1, 8))
def test_incremental_cuts_match_highs(seed, m):
    # rows added one at a time after each solve, as in the cutting-plane loop
    rng = np.random.default_rng(seed)
    c, G, h = _instance(rng, m, 25)
    upper, lower = rng.random(m) * 3, rng.random(m) * 3
    lp = DenseLP(c, upper, lower)
    lp.solve()
    for i in range(len(h)):
        lp.add_cut(G[i], h[i])
        _, obj = lp.solve()
        assert obj == pytest.approx(_highs(c, G[: i + 1], h[: i + 1], upper, lower), abs=1e-7)


@given(seed=st.integers(0, 10**6))
def test_set_rhs_matches_fresh_solve(seed):
    rng = np.random.default_rng(seed)
    m = 5
    c, G, h = _instance(rng, m, 15)
    lp = DenseLP(c, 2.0, G=G, h=h)
    lp.solve()
    upper, lower, h2 = rng.random(m), rng.random(m), rng.random(15)
    lp.set_rhs(upper, lower, h2)
    _, obj = lp.solve()
    assert obj == pytest.approx(_highs(c, G, h2, upper, lower), abs=1e-7)


def test_rejects_negative_rhs():
    lp = DenseLP(np.ones(2), 1.0)
    with pytest.raises(LPError):
        lp.add_cut(np.ones(2), -0.1)
    with pytest.raises(LPError):
        DenseLP(np.ones(2), -1.0)
    with pytest.raises(LPError):
        lp.set_rhs(1.0, 1.0, [-1.0])


def test_degenerate_cuts():
    # many copies of the same face through the optimum
    c = np.array([1.0, 1.0])
    G = np.tile([[1.0, 1.0]], (20, 1))
    w, obj = solve_lp(c, G, np.ones(20), 4.0)
    assert obj == pytest.approx(1.0)
