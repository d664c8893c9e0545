import math
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from choremarket.instance import make_instance
from choremarket.solver import solve_exact_rounded
from choremarket.verify import VerificationError, earnings, nash_welfare, verify_ce
from strategies import rationals, rounded_matrix

THREE = make_instance([[1, 1, 2], [2, 2, 1]])
X3 = [[1, F(1, 4), 0], [0, F(3, 4), 1]]


def test_three_chore_equilibrium_passes():
    rep = verify_ce(THREE, [F(4, 5), F(4, 5), F(2, 5)], X3, 0)
    assert rep.passed and rep.exact and rep.epsilon_achieved == 0
    assert rep.disutility_identity_ok
    assert rep.nash_welfare == F(5, 4) * F(5, 2)


def test_three_chore_unit_prices_fail_mpb():
    rep = verify_ce(THREE, [1, 1, 1], X3, 0)
    assert not rep.mpb_ok and rep.worst_mpb_pair == (1, 1)
    assert rep.mpb_slack == 2
    assert rep.complete_allocation_ok
    assert "FAIL" in rep.table()


def test_incomplete_allocation_reported():
    rep = verify_ce(THREE, [F(4, 5), F(4, 5), F(2, 5)], [[1, 0, 0], [0, F(3, 4), 1]], 0)
    assert not rep.complete_allocation_ok and rep.worst_chore == 1
    assert rep.max_chore_deficit == F(1, 4)


def test_earning_tolerance():
    x = [[1, 0, 0], [0, 1, 1]]
    p = [F(1), F(1), F(1, 2)]  # MPB-valid, earnings 1 and 3/2 before scaling
    assert not verify_ce(THREE, p, x, F(1, 10)).earning_ok
    rep = verify_ce(THREE, p, x, F(1, 4))
    assert rep.earning_ok and rep.epsilon_achieved == F(1, 5)


def test_dimension_mismatch():
    with pytest.raises(VerificationError):
        verify_ce(THREE, [1, 1], X3, 0)


def test_exchange_verification():
    inst = make_instance([[1, 2], [2, 1]], w=[[0, 1], [1, 0]])
    # each agent does the chore it finds easy; both chores priced 1
    rep = verify_ce(inst, [1, 1], [[1, 0], [0, 1]], 0)
    assert rep.passed
    rep = verify_ce(inst, [1, 2], [[1, 0], [0, 1]], 0)
    assert not rep.earning_ok


def test_float_verification_uses_tolerance():
    inst = THREE.to_approx()
    rep = verify_ce(inst, [0.8, 0.8, 0.4 + 1e-13], [[1.0, 0.25, 0.0], [0.0, 0.75, 1.0]], 0)
    assert rep.passed and not rep.exact


def test_nash_welfare_identity():
    nw = nash_welfare([[1, 2], [2, 1]], [[1, 0], [0, 1]])
    assert nw.value == 1 and nw.log_value == 0


def test_nash_welfare_zero_agent():
    nw = nash_welfare([[1, 2], [2, 1]], [[1, 1], [0, 0]])
    assert nw.value == 0 and nw.zero_agents == (1,) and nw.log_value == -math.inf


def test_nash_welfare_rejects_infinite_consumption():
    inst = make_instance([[1, "inf"], [1, 1]])
    with pytest.raises(VerificationError):
        nash_welfare(inst.d, [[1, 1], [0, 0]])


def test_potentials_along_three_chore_trace():
    res = solve_exact_rounded(THREE, alpha=1)
    pots = [res.initial_potentials[0]] + [r.potential for r in res.trace]
    assert pots == [2, 2, F(25, 8)]


def test_earnings_examples():
    assert earnings([[1, 0], [0, 1]], [1, 1]) == [1, 1]
    assert earnings([[0, 0], [0, 0]], [1, 1]) == [0, 0]
    assert earnings([[1, F(1, 4), 0], [0, F(3, 4), 1]], [1, 1, F(1, 2)]) == [F(5, 4), F(5, 4)]


@given(rounded_matrix(max_n=3, max_m=4), rationals(1, 20, 3))
def test_ceei_verdict_scale_invariant(d, k):
    inst = make_instance(d, alpha=1)
    res = solve_exact_rounded(inst, alpha=1)
    a = verify_ce(inst, res.prices, res.allocation, 0)
    b = verify_ce(inst, [v * k for v in res.prices], res.allocation, 0)
    assert a.passed and b.passed
    assert a.disutility_identity_ok and b.disutility_identity_ok


@given(st.lists(rationals(1, 5, 2), min_size=2, max_size=2), rationals(1, 9, 2))
def test_exchange_verdict_scale_invariant(p, k):
    inst = make_instance([[1, 1], [1, 1]], w=[[1, 0], [0, 1]])
    x = [[1, 0], [0, 1]]
    assert verify_ce(inst, p, x, 0).passed == verify_ce(inst, [v * k for v in p], x, 0).passed
