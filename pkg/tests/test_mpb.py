from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from choremarket.mpb import PriceError, build_market_network, mpb_structure
from choremarket.numeric import APPROX, INF
from strategies import rationals, sparse_matrix


def test_symmetric_mpb():
    s = mpb_structure([[1, 2], [2, 1]], [1, 1])
    assert s.mpb == [1, 1] and s.edges == {(0, 0), (1, 1)}


def test_mpb_all_tied():
    s = mpb_structure([[F(2), F(3)], [F(4), F(6)]], [F(2), F(3)])
    assert s.mpb == [1, 2]
    assert s.edges == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_mpb_three_chores():
    s = mpb_structure([[1, 1, 2], [2, 2, 1]], [1, 1, F(1, 2)])
    assert s.mpb == [1, 2]
    assert s.adj == [[0, 1], [0, 1, 2]]


def test_mpb_rejects_nonpositive_prices():
    with pytest.raises(PriceError):
        mpb_structure([[1, 1]], [1, 0])


def test_network_two_arcs():
    net = build_market_network([[1, 2], [2, 1]], [1, 1])
    assert net.arcs == [(0, 0), (1, 1)] and net.cap == [1, 1]


def test_network_five_arcs():
    net = build_market_network([[1, 1, 2], [2, 2, 1]], [1, 1, F(1, 2)])
    assert len(net.arcs) == 5 and net.cap == [1, 1, F(1, 2)]
    assert net.total_capacity == F(5, 2)
    assert "a2 -> c3" in net.to_dot()


def test_network_single_pair():
    net = build_market_network([[F(7)]], [F(3)])
    assert net.arcs == [(0, 0)] and net.cap == [3]


def test_no_arc_on_infinite_entry():
    net = build_market_network([[1, INF], [1, 1]], [1, 1])
    assert (0, 1) not in net.arcs


def test_approximate_edges_are_relative():
    s = mpb_structure([[1e6, 1e6 * (1 + 1e-12)]], [1.0, 1.0], APPROX)
    assert s.adj == [[0, 1]]


@given(sparse_matrix(), st.lists(rationals(1, 5), min_size=5, max_size=5), rationals(1, 9, 7))
def test_uniform_scaling_keeps_edges(d, prices, factor):
    p = prices[: len(d[0])]
    a = mpb_structure(d, p)
    b = mpb_structure(d, [v * factor for v in p])
    assert a.edges == b.edges


@given(sparse_matrix(), st.lists(rationals(1, 5), min_size=5, max_size=5), st.integers(0, 3))
def test_scaling_gamma_to_threshold_keeps_edges(d, prices, who):
    p = prices[: len(d[0])]
    before = mpb_structure(d, p)
    S = {who % len(d)}
    gamma = before.gamma(S)
    ratios = [
        before.mpb[i] * p[j] / d[i][j]
        for i in S
        for j in range(len(p))
        if j not in gamma and d[i][j] is not INF
    ]
    if not ratios:
        return
    factor = max(ratios)
    q = [v * factor if j in gamma else v for j, v in enumerate(p)]
    after = mpb_structure(d, q)
    for i in S:
        assert set(before.adj[i]) <= set(after.adj[i])
    # the threshold factor opens at least one edge out of gamma(S)
    assert any(j not in gamma for i in S for j in after.adj[i])
