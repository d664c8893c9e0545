import json
from fractions import Fraction as F

import pytest
from hypothesis import given

from choremarket.instance import (
    InstanceError,
    StructuralError,
    analyze_structure,
    decompose_ceei,
    infer_alpha,
    instance_to_json,
    is_rounded,
    load_instance,
    make_instance,
    validate_instance,
)
from choremarket.numeric import APPROX, EXACT, INF, from_json_scalar, is_inf, to_json_scalar
from choremarket.solver import solve_fptas
from choremarket.verify import verify_ce
from strategies import dense_matrix, sparse_matrix


def test_valid_symmetric_instance():
    inst = validate_instance({"model": "ceei", "n": 2, "m": 2, "disutility": [[1, 2], [2, 1]]})
    assert (inst.n, inst.m, inst.model, inst.exact) == (2, 2, "ceei", True)
    assert inst.d[0][1] == F(2)


def test_zero_entry_rejected():
    with pytest.raises(InstanceError, match="zero disutility entry"):
        make_instance([[0, 1], [1, 1]])


def test_uncovered_chore_rejected():
    with pytest.raises(InstanceError, match="chore 2 has no finite disutility"):
        make_instance([[1, "inf"], [2, "inf"]])


@pytest.mark.parametrize(
    "raw, msg",
    [
        ({"disutility": [[1, 2], [1]]}, "dimension mismatch"),
        ({"disutility": [[1, -2]]}, "nonpositive"),
        ({"model": "exchange", "disutility": [[1]], "endowments": [[-1]]}, "negative endowment"),
        ({"model": "exchange", "disutility": [[1, 1]], "endowments": [[1]]}, "dimension mismatch"),
        ({"model": "barter", "disutility": [[1]]}, "unknown model"),
    ],
)
def test_validation_errors(raw, msg):
    with pytest.raises(InstanceError, match=msg):
        validate_instance(raw)


def test_inf_is_symbolic():
    assert is_inf(INF) and INF > 10**100
    with pytest.raises(TypeError):
        INF + 1  # noqa: B018


def test_json_scalars_round_trip():
    for v in (F(3, 7), F(5), INF):
        assert from_json_scalar(to_json_scalar(v)) == v
    assert from_json_scalar("3/4") == F(3, 4)
    assert from_json_scalar(0.5) == 0.5
    with pytest.raises(ValueError):
        from_json_scalar({"num": 1, "den": 0})


def test_numeric_modes():
    assert EXACT.eq(F(1, 3), F(2, 6)) and not EXACT.eq(F(1, 3), F(1, 3) + F(1, 10**30))
    assert APPROX.eq(1.0, 1.0 + 1e-12)
    assert APPROX.rel_le(1e6 + 1e-4, 1e6)


def test_rounded_and_bivalued_detection():
    inst = make_instance([[1, 2, 4], [8, 1, 2]])
    assert inst.rounded and inst.alpha == 1
    assert make_instance([[F(9, 4), F(3, 2)], [1, 1]]).alpha == F(1, 2)
    assert not make_instance([[2, 3], [4, 6]], alpha=1).rounded
    assert infer_alpha([F(2), F(3)]) is None
    assert is_rounded([F(1, 4), F(16)], F(1))
    biv = make_instance([[1, 3], [3, 3]])
    assert biv.bivalued and biv.beta == 3
    assert not make_instance([[1, 2, 3]]).bivalued


def test_analyze_full_matrix_is_one_biclique():
    rep = analyze_structure(make_instance([[1, 2], [2, 1]]))
    assert len(rep.components) == 1 and rep.is_biclique_union


def test_analyze_missing_edge():
    rep = analyze_structure(make_instance([[1, "inf"], [1, 1]]))
    assert len(rep.components) == 1 and not rep.is_biclique_union
    assert rep.components[0].missing_edges == ((0, 1),)
    assert rep.components[0].describe() == "{a1,a2}x{c1,c2}"


def test_analyze_block_diagonal():
    rep = analyze_structure(make_instance([[1, "inf"], ["inf", 1]]))
    assert [(c.agents, c.chores) for c in rep.components] == [((0,), (0,)), ((1,), (1,))]
    assert rep.is_biclique_union


def test_economy_graph_connectivity():
    inst = make_instance([[1, 1], [1, 1]], w=[[1, 0], [0, 1]])
    assert analyze_structure(inst).is_economy_strongly_connected
    inst = make_instance([[1, "inf"], ["inf", 1]], w=[[1, 0], [0, 1]])
    assert not analyze_structure(inst).is_economy_strongly_connected


def test_decompose_block_diagonal():
    parts = decompose_ceei(make_instance([[1, "inf"], ["inf", 1]]))
    assert [(p.n, p.m) for p in parts] == [(1, 1), (1, 1)]
    assert [p.origin for p in parts] == [((0,), (0,)), ((1,), (1,))]


def test_decompose_full_is_identity():
    inst = make_instance([[1, 2, 3], [3, 2, 1]])
    (only,) = decompose_ceei(inst)
    assert only.d == inst.d


def test_decompose_rejects_non_biclique():
    with pytest.raises(StructuralError, match="not a biclique"):
        decompose_ceei(make_instance([[1, "inf"], [1, 1]]))


def test_json_file_round_trip(tmp_path):
    inst = make_instance([[1, F(5, 2)], ["inf", 3]], w=[[1, 0], [F(1, 2), 2]])
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(instance_to_json(inst)))
    back = load_instance(path)
    assert back.d == inst.d and back.w == inst.w and back.model == "exchange"


def test_float_input_is_approximate():
    inst = make_instance([[1.5, 2.0]])
    assert not inst.exact and inst.to_exact().d[0][0] == F(3, 2)


@given(sparse_matrix())
def test_components_partition(d):
    inst = make_instance(d)
    rep = analyze_structure(inst)
    agents = [i for c in rep.components for i in c.agents]
    chores = [j for c in rep.components for j in c.chores]
    assert sorted(chores) == list(range(inst.m))
    assert len(set(agents)) == len(agents)
    assert set(agents) | set(rep.isolated_agents) == set(range(inst.n))
    for c in rep.components:
        complete = all(not is_inf(inst.d[i][j]) for i in c.agents for j in c.chores)
        assert c.is_biclique == complete


@given(dense_matrix())
def test_all_finite_means_one_biclique(d):
    rep = analyze_structure(make_instance(d))
    assert len(rep.components) == 1 and rep.is_biclique_union


def test_decompose_then_solve_verifies_on_parent():
    d = [[1, 2, "inf", "inf"], [2, 1, "inf", "inf"], ["inf", "inf", 3, 1], ["inf", "inf", 1, 1]]
    inst = make_instance(d)
    res = solve_fptas(inst, 0.01)
    assert res.components == 2
    assert verify_ce(inst, res.prices, res.allocation, F(1, 100)).passed
