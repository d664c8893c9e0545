import csv
import io
import json
from fractions import Fraction as F

import pytest

from choremarket.cli import BENCH_COLUMNS, EXIT_FAIL, EXIT_OK, EXIT_STRUCTURAL, UsageError, bench_csv, bench_rows, main, parse_sizes


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def instance(tmp_path, d, name="inst.json"):
    return write(tmp_path / name, {"model": "ceei", "n": len(d), "m": len(d[0]), "disutility": d})


def frac(v):
    return F(v["num"], v["den"]) if isinstance(v, dict) else F(v)


def test_fptas_three_chores(tmp_path, capsys):
    src = instance(tmp_path, [[1, 1, 2], [2, 2, 1]])
    out = tmp_path / "res.json"
    assert main(["solve", src, "--mode", "fptas", "--epsilon", "0.01", "--out", str(out)]) == EXIT_OK
    prices = [float(frac(v)) for v in json.loads(out.read_text())["prices"]]
    assert prices == pytest.approx([0.8, 0.8, 0.4], abs=1e-9)


def test_exact_requires_alpha(tmp_path, capsys):
    assert main(["solve", instance(tmp_path, [[1, 2], [2, 1]])]) == EXIT_FAIL
    assert "--alpha" in capsys.readouterr().err


@pytest.mark.parametrize("eps", ["0", "1", "1.5"])
def test_fptas_epsilon_range(tmp_path, eps):
    assert main(["solve", instance(tmp_path, [[1, 2], [2, 1]]), "--mode", "fptas", "--epsilon", eps]) == EXIT_FAIL


def test_not_rounded_is_structural(tmp_path, capsys):
    src = instance(tmp_path, [[2, 3], [4, 6]])
    assert main(["solve", src, "--mode", "exact", "--alpha", "1"]) == EXIT_STRUCTURAL
    assert "rounded" in capsys.readouterr().err


def test_non_biclique_is_structural(tmp_path):
    src = instance(tmp_path, [[1, "inf"], [1, 1]])
    assert main(["solve", src, "--mode", "exact", "--alpha", "1"]) == EXIT_STRUCTURAL
    assert main(["solve", src, "--mode", "fptas", "--epsilon", "0.1"]) == EXIT_STRUCTURAL


def test_io_and_parse_errors(tmp_path):
    assert main(["solve", str(tmp_path / "missing.json"), "--alpha", "1"]) == EXIT_FAIL
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", str(bad), "--alpha", "1"]) == EXIT_FAIL
    assert main(["frobnicate"]) == EXIT_FAIL


def test_exact_solve_and_trace(tmp_path):
    src = instance(tmp_path, [[1, 1, 2], [2, 2, 1]])
    out, trace = tmp_path / "res.json", tmp_path / "trace.jsonl"
    assert main(["solve", src, "--alpha", "1", "--out", str(out), "--trace", str(trace), "--check"]) == EXIT_OK
    res = json.loads(out.read_text())
    assert [frac(v) for v in res["prices"]] == [F(4, 5), F(4, 5), F(2, 5)]
    for line in trace.read_text().splitlines():
        json.loads(line)


def test_round_trip_gen_solve_verify(tmp_path):
    for seed in range(5):
        inst, res = tmp_path / f"i{seed}.json", tmp_path / f"r{seed}.json"
        assert main(["gen", "--kind", "rounded", "--n", "3", "--m", "5", "--seed", str(seed), "--out", str(inst)]) == 0
        assert main(["solve", str(inst), "--alpha", "1", "--out", str(res)]) == 0
        assert main(["verify", str(inst), str(res), "--json", str(tmp_path / "rep.json")]) == EXIT_OK
        assert json.loads((tmp_path / "rep.json").read_text())["passed"] is True


def test_fptas_round_trip(tmp_path):
    inst, res = tmp_path / "i.json", tmp_path / "r.json"
    assert main(["gen", "--n", "4", "--m", "6", "--seed", "3", "--out", str(inst)]) == 0
    assert main(["solve", str(inst), "--mode", "fptas", "--epsilon", "0.05", "--out", str(res)]) == 0
    assert main(["verify", str(inst), str(res), "--epsilon", "1/20"]) == EXIT_OK


def test_verify_failure_exit(tmp_path, capsys):
    src = instance(tmp_path, [[1, 1, 2], [2, 2, 1]])
    res = write(tmp_path / "r.json", {"prices": [1, 1, 1], "allocation": [[1, 0, 0], [0, 1, 1]]})
    assert main(["verify", src, res]) == EXIT_FAIL
    assert "FAIL" in capsys.readouterr().out
    res = write(tmp_path / "r2.json", {"prices": [1, 1]})
    assert main(["verify", src, res]) == EXIT_FAIL


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["gen", "--kind", "rounded", "--n", "4", "--m", "8", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0 and main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_bivalued_entries(tmp_path):
    out = tmp_path / "b.json"
    assert main(["gen", "--kind", "bivalued", "--n", "3", "--m", "9", "--beta", "3", "--out", str(out)]) == 0
    d = json.loads(out.read_text())["disutility"]
    assert {frac(v) for row in d for v in row} <= {1, 3}


@pytest.mark.parametrize("flags", [["--n", "0", "--m", "3"], ["--n", "2", "--m", "0"]])
def test_gen_rejects_empty(flags):
    assert main(["gen"] + flags) == EXIT_FAIL


def test_reduce_writes_sidecar(tmp_path, capsys):
    game = write(tmp_path / "g.json", {"M": [[0.5] * 4] * 4})
    out = tmp_path / "market.json"
    assert main(["reduce", "--game", game, "--out", str(out), "--audit"]) == EXIT_OK
    inst = json.loads(out.read_text())
    assert inst["model"] == "exchange" and inst["n"] == 50 and inst["m"] == 24
    side = json.loads((tmp_path / "market.labels.json").read_text())
    assert set(side) == {"chores", "agents", "params"}
    assert len(side["chores"]) == 24 and len(side["agents"]) == 50
    assert side["chores"][-1] == {"layer": 6, "index": 4}
    assert "PASS" in capsys.readouterr().err


def test_reduce_bad_game(tmp_path, capsys):
    game = write(tmp_path / "g.json", {"M": [[0.6, 0.6], [0.5, 0.5]]})
    assert main(["reduce", "--game", game]) == EXIT_FAIL
    assert "row 1 pair sums to 1.2" in capsys.readouterr().err


def test_ef1po(tmp_path):
    src = instance(tmp_path, [[1, 2, 2, 1], [2, 1, 1, 2], [1, 1, 2, 2]])
    out = tmp_path / "a.json"
    assert main(["ef1po", src, "--out", str(out)]) == EXIT_OK
    res = json.loads(out.read_text())
    assert res["ef1"] and res["po_certificate"] and len(res["owner"]) == 4


def test_ef1po_rejects_non_bivalued(tmp_path):
    assert main(["ef1po", instance(tmp_path, [[1, 2, 3], [2, 1, 1]])]) == EXIT_STRUCTURAL


def test_parse_sizes():
    assert parse_sizes("2x4, 4x8;8X16") == [(2, 4), (4, 8), (8, 16)]
    assert parse_sizes("") == []
    with pytest.raises(UsageError):
        parse_sizes("3by4")


def test_bench_empty_is_header_only(tmp_path, capsys):
    assert main(["bench", "--sizes", ""]) == EXIT_OK
    assert capsys.readouterr().out == ",".join(BENCH_COLUMNS) + "\n"


def test_bench_columns_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["bench", "--sizes", "2x4,3x5", "--seed", "4", "--repeats", "2", "--out", str(out)]) == 0

    def rows(p):
        return list(csv.DictReader(io.StringIO(p.read_text())))

    ra, rb = rows(a), rows(b)
    assert list(ra[0]) == list(BENCH_COLUMNS) and len(ra) == 4
    assert [(r["n"], r["m"]) for r in ra] == [("2", "4"), ("2", "4"), ("3", "5"), ("3", "5")]
    strip = lambda rs: [{k: v for k, v in r.items() if k != "wall_time"} for r in rs]
    assert strip(ra) == strip(rb)


def test_bench_ratio_bounded_across_sizes():
    rows = bench_rows([(2, 4), (4, 8), (8, 16)], seed=0)
    ratios = [float(r["bound_ratio"]) for r in rows]
    assert all(0 <= v <= 1 for v in ratios), ratios


def test_bench_fptas_mode():
    text = bench_csv(bench_rows([(3, 4)], seed=1, mode="fptas", epsilon=0.05))
    (row,) = csv.DictReader(io.StringIO(text))
    assert row["alpha"] == "0.05"
