import math
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from choremarket.generate import generate
from choremarket.instance import StructuralError, make_instance
from choremarket.mpb import mpb_structure
from choremarket.numeric import EXACT
from choremarket.solver import (
    CeeiResult,
    SolverError,
    SolverState,
    allocation_update,
    gap_split,
    init_prices,
    iteration_bounds,
    normalize_prices,
    price_update,
    solve_exact_rounded,
    solve_fptas,
)
from choremarket.verify import verify_ce
from strategies import dense_matrix, rounded_matrix

THREE = [[1, 1, 2], [2, 2, 1]]


def _state(d, p, x, e, S, gamma_S=()):
    inst = make_instance(d)
    return SolverState(
        d=inst.d, num=EXACT, p=[F(v) for v in p], x=[[F(v) for v in r] for r in x],
        e=[F(v) for v in e], S=frozenset(S), gamma_S=frozenset(gamma_S),
    )


@pytest.mark.parametrize(
    "d, p",
    [([[1, 2], [2, 1]], [1, 1]), ([[2, 3], [4, 6]], [2, 3]), (THREE, [1, 1, 1])],
)
def test_init_prices_are_column_minima(d, p):
    assert init_prices(make_instance(d).d) == p


def test_init_prices_skip_infinite():
    assert init_prices(make_instance([[5, "inf"], [3, 2]]).d) == [3, 2]


def test_price_update_three_chores():
    st_ = _state(THREE, [1, 1, 1], [[1, 1, 0], [0, 0, 1]], [2, 1], {1})
    price_update(st_)
    assert st_.trace[-1].gamma == F(1, 2)
    assert st_.p == [1, 1, F(1, 2)] and st_.e == [2, F(1, 2)]
    assert st_.gamma_S == {2}
    assert set(mpb_structure(st_.d, st_.p).adj[1]) == {0, 1, 2}
    # allocation unchanged, so the potential is unchanged
    assert st_.trace[-1].potential == 2 * 1


def test_price_update_rounded_threshold():
    st_ = _state([[1, 2], [2, 1]], [1, 1], [[1, 0], [0, 1]], [1, 1], {0})
    price_update(st_)
    assert st_.trace[-1].gamma == F(1, 2) == 1 / (1 + F(1))


def test_price_update_without_outside_chore():
    st_ = _state([[1, "inf"], ["inf", 1]], [1, 1], [[1, 0], [0, 1]], [1, 1], {0})
    with pytest.raises(SolverError, match="no finite chore outside"):
        price_update(st_)


def test_allocation_update_rebalances():
    st_ = _state(THREE, [1, 1, 1], [[1, 1, 0], [0, 0, 1]], [2, 1], {1})
    price_update(st_)
    allocation_update(st_)
    assert st_.trace[-1].kind == "alloc-balance"
    assert st_.e == [F(5, 4), F(5, 4)]


def test_allocation_update_direct_transfer():
    d = [[1, 10, F(1, 10)], [10, F(39, 40), F(1, 40)]]
    p = [F(1, 2), F(39, 20), F(1, 20)]
    st_ = _state(d, p, [[1, 0, 0], [0, 1, 1]], [F(1, 2), 2], {0}, gamma_S={0})
    allocation_update(st_)
    assert st_.trace[-1].kind == "alloc-transfer"
    assert st_.x[0] == [1, 0, 1] and st_.x[1] == [0, 1, 0]
    assert st_.e == [F(1, 2) + F(1, 20), F(39, 20)]
    assert st_.transfers == 1


def test_gap_split_takes_largest_ratio():
    assert gap_split([F(1), F(1, 10), F(2), F(21, 10)]) == {1}
    assert gap_split([F(1), F(2), F(8)]) == {0, 1}
    assert gap_split([F(3)]) == {0}


def test_exact_symmetric_needs_no_iteration():
    res = solve_exact_rounded(make_instance([[1, 2], [2, 1]]), alpha=1)
    assert res.prices == [1, 1] and res.allocation == [[1, 0], [0, 1]]
    assert res.earnings == [1, 1] and res.price_updates == 0


def test_exact_shared_row():
    res = solve_exact_rounded(make_instance([[1, 2], [1, 2]]), alpha=1)
    assert res.prices == [F(2, 3), F(4, 3)] and res.earnings == [1, 1]


def test_exact_rejects_non_rounded():
    with pytest.raises(StructuralError, match="not \\(1\\+alpha\\)-rounded"):
        solve_exact_rounded(make_instance([[2, 3], [4, 6]]), alpha=1)


def test_exact_three_chores():
    res = solve_exact_rounded(make_instance(THREE), alpha=1)
    assert res.prices == [F(4, 5), F(4, 5), F(2, 5)]
    assert res.allocation == [[1, F(1, 4), 0], [0, F(3, 4), 1]]


def test_fptas_shared_row():
    res = solve_fptas(make_instance([[1, 2], [1, 2]]).to_approx(), 0.01)
    assert res.prices == pytest.approx([2 / 3, 4 / 3])
    assert res.earnings == pytest.approx([1, 1])


def test_fptas_three_chores():
    res = solve_fptas(make_instance(THREE).to_approx(), 0.01)
    assert res.prices == pytest.approx([0.8, 0.8, 0.4], abs=1e-12)
    assert res.earnings == pytest.approx([1, 1], abs=1e-12)


def test_fptas_exact_mode_three_chores():
    res = solve_fptas(make_instance(THREE), 0.01)
    assert res.prices == [F(4, 5), F(4, 5), F(2, 5)]


@given(st.lists(st.integers(1, 9), min_size=1, max_size=6))
def test_fptas_single_agent(row):
    res = solve_fptas(make_instance([row]).to_approx(), 0.1)
    assert res.earnings == pytest.approx([1.0])
    assert res.allocation == [[1.0] * len(row)]
    assert sum(res.prices) == pytest.approx(1.0)


def test_fptas_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        solve_fptas(make_instance(THREE), 1.5)


def test_fptas_rejects_non_biclique():
    with pytest.raises(StructuralError):
        solve_fptas(make_instance([[1, "inf"], [1, 1]]), 0.1)


def _result(prices, n):
    return CeeiResult(
        prices=prices, allocation=[], earnings=[F(1)] * n, epsilon_achieved=F(0),
        iterations=0, balance_calls=0, price_updates=0, transfers=0, mode="exact",
    )


@pytest.mark.parametrize(
    "p, n, want",
    [
        ([F(1), F(2)], 2, [F(2, 3), F(4, 3)]),
        ([F(1), F(1), F(1, 2)], 2, [F(4, 5), F(4, 5), F(2, 5)]),
        ([F(1, 2), F(3, 2)], 2, [F(1, 2), F(3, 2)]),
    ],
)
def test_normalize_prices(p, n, want):
    assert normalize_prices(_result(p, n)).prices == want


def test_strict_min_flag_surfaces_overshoot():
    # the smallest threshold overshoots the first new MPB edge
    inst = generate("rounded", 4, 6, 0)
    ok = solve_exact_rounded(inst, alpha=1)
    assert verify_ce(inst, ok.prices, ok.allocation, 0).passed
    with pytest.raises(SolverError, match="broke MPB support"):
        solve_exact_rounded(inst, alpha=1, strict_min=True)


def _check_trace(res, alpha, n, d_max, m):
    jump = 1 + alpha**2 / 16
    by_comp = {}
    for rec in res.trace:
        by_comp.setdefault(rec.component, []).append(rec)
    for c, recs in by_comp.items():
        prev = res.initial_potentials[c]
        run = 0
        for rec in recs:
            assert rec.potential >= prev
            if rec.kind == "price":
                assert rec.potential == prev
                assert rec.gamma < 1 and rec.gamma <= 1 / (1 + alpha)
            if rec.kind == "alloc-balance":
                assert rec.potential >= jump * prev
                run = 0
            if rec.kind == "alloc-transfer":
                run += 1
                assert run <= m
            assert rec.potential <= (n * d_max) ** n
            prev = rec.potential


@given(rounded_matrix(alpha=F(1)))
def test_exact_rounded_properties(d):
    inst = make_instance(d, alpha=1)
    res = solve_exact_rounded(inst, alpha=1, check=True)
    assert all(e == 1 for e in res.earnings)
    assert sum(res.prices) == inst.n
    assert verify_ce(inst, res.prices, res.allocation, 0).passed
    _check_trace(res, F(1), inst.n, inst.d_max, inst.m)


@given(rounded_matrix(alpha=F(1, 2), max_n=3, max_m=5, max_exp=5))
def test_exact_rounded_half(d):
    inst = make_instance(d, alpha=F(1, 2))
    res = solve_exact_rounded(inst, alpha=F(1, 2), check=True)
    assert verify_ce(inst, res.prices, res.allocation, 0).passed
    _check_trace(res, F(1, 2), inst.n, inst.d_max, inst.m)
    lg = math.log(inst.n * float(inst.d_max)) if inst.n * inst.d_max > 1 else 1.0
    calls, iters = iteration_bounds(inst.n, inst.m, 0.5, float(inst.d_max))
    assert res.balance_calls <= 16 * max(calls, lg) + inst.n


@given(dense_matrix(max_n=4, max_m=6), st.sampled_from([0.1, 0.01]))
def test_fptas_verifies(d, eps):
    inst = make_instance(d).to_approx()
    res = solve_fptas(inst, eps, check=True)
    assert res.epsilon_achieved <= eps
    assert verify_ce(inst, res.prices, res.allocation, eps).passed


def test_trace_jsonl_fields():
    res = solve_exact_rounded(make_instance(THREE), alpha=1)
    line = res.trace_jsonl().splitlines()[0]
    for key in ("iter", "kind", "gamma", "S", "potential_num", "potential_den"):
        assert f'"{key}"' in line


def test_iteration_budget_is_enforced():
    inst = make_instance(THREE)
    with pytest.raises(SolverError, match="budget"):
        solve_exact_rounded(inst, alpha=1, max_iterations=0)
