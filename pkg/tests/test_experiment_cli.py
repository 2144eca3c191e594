import csv
import json

import numpy as np
import pytest

from scaledsm import experiment as ex
from scaledsm.cli import main
from scaledsm.generator import GeneratorParams
from scaledsm.model import toy_set1


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


SMALL = GeneratorParams(N=8)


# --- method and seed parsing ------------------------------------------------------


@pytest.mark.parametrize(
    "text, label",
    [("gp", "gp"), ("gp:1e-10", "gp:1e-10"), ("gp:eps=1e-6", "gp:eps=1e-06"), ("lc:4", "lc:4"),
     ("lowcomplexity", "lc:8"), ("upa", "upa"), ("coord", "coord:101"), ("grid:51", "grid:51")],
)
def test_parse_method(text, label):
    assert ex.parse_method(text).label == label


@pytest.mark.parametrize("text", ["", "foo", "upa:3", "lc:x"])
def test_parse_method_rejects(text):
    with pytest.raises(ValueError):
        ex.parse_method(text)


def test_parse_seeds():
    assert ex.parse_seeds("1..4") == [1, 2, 3, 4]
    assert ex.parse_seeds("3, 9") == [3, 9]
    with pytest.raises(ValueError):
        ex.parse_seeds(" ")


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        ex.ExperimentSpec(methods=[], out_dir=tmp_path, generator=SMALL, seeds=[1])
    with pytest.raises(ValueError):
        ex.ExperimentSpec(methods=["upa"], out_dir=tmp_path, generator=SMALL)
    with pytest.raises(ValueError):
        ex.ExperimentSpec(methods=["upa", "upa"], out_dir=tmp_path, generator=SMALL, seeds=[1])
    with pytest.raises(ValueError):
        ex.ExperimentSpec(methods=["upa"], out_dir=tmp_path)


# --- runs -------------------------------------------------------------------------


def test_upa_only(tmp_path):
    rep = ex.run_experiment(ex.ExperimentSpec(methods=["upa"], out_dir=tmp_path, generator=SMALL, seeds=[1, 2, 3]))
    final = read_csv(tmp_path / "final.csv")
    assert len(final) == 3 and all(r["iterations"] == "0" for r in final)
    summary = read_csv(tmp_path / "summary.csv")
    assert list(summary[0]) == ["method", "M", "mean_wsr", "std_wsr", "mean_wall_ms"]
    assert [(r["method"], r["M"]) for r in summary] == [("upa", "0")]
    assert rep.errors == []
    assert (tmp_path / "errors.log").read_text() == ""


def strip_timing(rows):
    return [{k: v for k, v in r.items() if "wall" not in k} for r in rows]


def test_deterministic_reports(tmp_path):
    def run(d, workers):
        spec = ex.ExperimentSpec(methods=["lc:2", "upa"], out_dir=d, M=3, generator=SMALL, seeds=[4, 5], workers=workers)
        ex.run_experiment(spec)
        return {name: strip_timing(read_csv(d / name)) for name in ("final.csv", "summary.csv", "runs/seed4__lc_2.csv")}

    assert run(tmp_path / "a", 1) == run(tmp_path / "b", 1) == run(tmp_path / "c", 2)


def test_summary_rows_and_feasibility(tmp_path):
    rep = ex.run_experiment(ex.ExperimentSpec(methods=["lc:1", "upa"], out_dir=tmp_path, M=4, generator=SMALL, seeds=[1, 2]))
    assert [r[1] for r in rep.summary if r[0] == "lc:1"] == [1, 2, 3, 4]
    means = [rep.mean_wsr("lc:1", m) for m in range(1, 5)]
    assert np.all(np.diff(means) >= -1e-9)
    for r in rep.results:
        assert r.power is not None
    trace = read_csv(tmp_path / "runs" / "seed1__lc_1.csv")
    # the default start sets alpha = w directly, so there is no step-0 power
    assert [row["m"] for row in trace] == ["1", "2", "3", "4"]


def test_failures_logged_and_partial_results_kept(tmp_path, monkeypatch):
    real = ex.solve_one

    def flaky(s, method, M):
        if method.kind == "lc":
            raise RuntimeError("forced")
        return real(s, method, M)

    monkeypatch.setattr(ex, "solve_one", flaky)
    rep = ex.run_experiment(ex.ExperimentSpec(methods=["lc:1", "upa"], out_dir=tmp_path, generator=SMALL, seeds=[1]))
    assert len(rep.errors) == 1
    assert "forced" in (tmp_path / "errors.log").read_text()
    assert [r["method"] for r in read_csv(tmp_path / "final.csv")] == ["upa"]


def test_set1_scenario_file_reproduces_pair(tmp_path):
    path = tmp_path / "set1.json"
    toy_set1().to_json(path)
    rep = ex.run_experiment(
        ex.ExperimentSpec(methods=["gp:0.05", "lc:8"], out_dir=tmp_path / "out", M=20, scenario_path=path)
    )
    assert rep.mean_wsr("gp:0.05", 20) == pytest.approx(2.06, abs=0.01)
    assert rep.mean_wsr("lc:8", 20) == pytest.approx(2.08, abs=0.01)


# --- CLI --------------------------------------------------------------------------


@pytest.fixture
def set1_file(tmp_path):
    path = tmp_path / "set1.json"
    toy_set1().to_json(path)
    return path


def test_cli_solve_gp(set1_file, tmp_path, capsys):
    out = tmp_path / "gp"
    assert main(["solve", "--scenario", str(set1_file), "--method", "gp", "--xi", "0.05", "--out", str(out)]) == 0
    doc = json.loads((out / "power.json").read_text())
    assert doc["wsr"] == pytest.approx(2.056, abs=1e-3)
    assert read_csv(out / "trace.csv")[0]["m"] == "1"
    assert "loss bound" in capsys.readouterr().out


def test_cli_solve_lowcomplexity_and_baseline(set1_file, tmp_path):
    out = tmp_path / "lc"
    assert main(["solve", "--scenario", str(set1_file), "--method", "lowcomplexity", "--inner-l", "1", "--max-outer", "3", "--init", "upa", "--out", str(out)]) == 0
    assert [r["m"] for r in read_csv(out / "trace.csv")] == ["0", "1", "2", "3"]
    assert main(["solve", "--scenario", str(set1_file), "--method", "upa", "--out", str(tmp_path / "u")]) == 0


def test_cli_oracle(set1_file, capsys):
    assert main(["oracle", "--scenario", str(set1_file), "--grid", "201"]) == 0
    assert "WSR = 2.0794" in capsys.readouterr().out


def test_cli_pob(set1_file, tmp_path, capsys):
    out = tmp_path / "pob"
    assert main(["pob", "--scenario", str(set1_file), "--samples", "200", "--chord-points", "80", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "lower=0: no chord failures" in text and "(nonconvex)" in text
    for name in ("pob.csv", "pob_xi.csv", "lower_edge_p1_min.csv", "lower_edge_p2_min.csv"):
        rows = read_csv(out / name)
        assert list(rows[0]) == ["phi1", "phi2"]


def test_cli_generate_and_bench(tmp_path):
    params = tmp_path / "params.json"
    GeneratorParams(N=4).to_json(params)
    scen = tmp_path / "s.json"
    assert main(["generate", "--params", str(params), "--seed", "3", "--out", str(scen)]) == 0
    assert json.loads(scen.read_text())["N"] == 4
    out = tmp_path / "bench"
    assert main(["bench", "--generator", str(params), "--seeds", "1..2", "--methods", "lc:1,upa,coord:11", "--max-outer", "2", "--out", str(out)]) == 0
    assert {r["method"] for r in read_csv(out / "summary.csv")} == {"lc:1", "upa", "coord:11"}


def test_cli_bad_input(tmp_path, capsys):
    assert main(["solve", "--scenario", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert main(["bench", "--scenario", str(tmp_path / "missing.json"), "--methods", "nope", "--out", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err
