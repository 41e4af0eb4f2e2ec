import json
import math

import numpy as np
import pytest

from walklab.bench import (ChainSpec, ExperimentConfig, complete, cycle_directed, cycle_lazy, dumps, generate,
                           johnson, johnson_states, parse_marked, random_irreducible, random_reversible,
                           resolve_marked, run_experiment, torus2d)
from walklab.chain import eigenvalue_gap
from walklab.errors import ParamError
from walklab.spectral import build_discriminant


def johnson_gap(m, r):
    """Closed-form eigenvalue gap of J(m, r): eigenvalues 1 - j(m+1-j)/(r(m-r)), j = 0..min(r, m-r)."""
    lam = [1 - j * (m + 1 - j) / (r * (m - r)) for j in range(1, min(r, m - r) + 1)]
    return 1 - max(abs(x) for x in lam)


def test_johnson_small():
    c = johnson(4, 2)
    assert c.n == math.comb(4, 2) == 6
    assert all(np.count_nonzero(row) == 4 for row in c.P)
    assert johnson_states(4, 2)[0] == (0, 1)
    np.testing.assert_allclose(c.P, c.P.T)


@pytest.mark.parametrize("m,r", [(4, 2), (6, 2), (8, 4), (9, 3), (10, 3)])
def test_johnson_gap_matches_closed_form(m, r):
    delta = eigenvalue_gap(johnson(m, r))
    assert delta == pytest.approx(johnson_gap(m, r), abs=1e-10)
    assert r * delta >= 1.0 - 1e-10  # order 1/r on these instances


def test_family_semantics():
    assert eigenvalue_gap(complete(10)) == pytest.approx(1.0)
    cyc = cycle_directed(5)
    np.testing.assert_array_equal(np.argmax(cyc.P, axis=1), [1, 2, 3, 4, 0])
    lz = cycle_lazy(5, 0.3)
    assert lz.P[0, 0] == pytest.approx(0.3) and lz.P[0, 1] == pytest.approx(0.7)
    tor = torus2d(3)
    assert tor.n == 9 and np.all(np.count_nonzero(tor.P, axis=1) == 4)
    np.testing.assert_allclose(tor.pi, 1 / 9)
    rr = random_reversible(8, seed=5)
    assert rr.reversible and rr.has_self_loops
    np.testing.assert_array_equal(rr.P, random_reversible(8, seed=5).P)
    ri = random_irreducible(8, seed=5)
    assert not ri.reversible


@pytest.mark.parametrize("text", ["complete:6", "cycle_lazy:7,0.5", "random_reversible:9,seed=3",
                                  "random_reversible:5,1,0.25"])
def test_generators_with_loops_have_single_unit_value(text):
    c = generate(text)
    assert c.has_self_loops
    assert build_discriminant(c).unit_sv_multiplicity == 1


def test_chain_string_parsing_and_errors(tmp_path):
    assert ChainSpec.parse("johnson:8,4") == ChainSpec("johnson", m=8, r=4)
    assert ChainSpec.parse("random_reversible:10,seed=3").seed == 3
    assert ChainSpec.from_obj({"family": "complete", "n": 4}).n == 4
    for bad in ("nosuch:3", "complete:3,4", "complete:x"):
        with pytest.raises(ParamError):
            ChainSpec.parse(bad)
    with pytest.raises(ParamError):
        ChainSpec.from_obj({"family": "complete", "size": 4})
    for bad in ({"family": "johnson", "m": 3, "r": 3}, {"family": "cycle_lazy", "n": 4, "alpha": 1.0},
                {"family": "complete", "n": 0}, {"family": "file"}):
        with pytest.raises(ParamError):
            generate(bad)


def test_file_family(tmp_path):
    P = np.array([[0.9, 0.1], [0.2, 0.8]])
    csv_path = tmp_path / "p.csv"
    np.savetxt(csv_path, P, delimiter=",")
    np.testing.assert_allclose(generate(f"file:{csv_path}").P, P)
    js = tmp_path / "p.json"
    js.write_text(json.dumps({"n": 2, "rows": P.tolist()}))
    np.testing.assert_allclose(generate({"family": "file", "path": str(js)}).pi, [2 / 3, 1 / 3])
    js.write_text(json.dumps({"n": 3, "rows": P.tolist()}))
    with pytest.raises(ParamError):
        generate({"family": "file", "path": str(js)})


def test_marked_rules():
    spec = ChainSpec("johnson", m=8, r=4)
    chain = generate(spec)
    members = resolve_marked(spec, chain, {"contains": [0, 1]})
    assert len(members) == math.comb(6, 2)
    assert all({0, 1} <= set(johnson_states(8, 4)[i]) for i in members)
    assert parse_marked("contains:0,1") == {"contains": [0, 1]}
    assert parse_marked("2,5") == [2, 5]
    assert parse_marked("none") == "none"
    assert resolve_marked(spec, chain, {"first": 3}) == [0, 1, 2]
    with pytest.raises(ParamError):
        resolve_marked("complete:4", generate("complete:4"), {"contains": [0]})
    with pytest.raises(ParamError):
        resolve_marked("complete:4", generate("complete:4"), [7])


def test_grover_config():
    doc, table = run_experiment(ExperimentConfig("complete:16", "grover", [0]), timestamp=False)
    assert doc["ok"] and table is None
    assert doc["outcome"]["success_probability"] == pytest.approx(0.9613, abs=1e-4)
    assert doc["outcome"]["iterations"] == 3


def test_degenerate_spectrum_reported():
    doc, _ = run_experiment(ExperimentConfig("cycle_directed:8", "spectrum"), timestamp=False)
    assert not doc["ok"]
    assert doc["error"]["type"] == "DegenerateSpectrum"
    assert doc["spectral"]["unit_multiplicity"] == 8


def test_byte_identical_reruns(tmp_path):
    cfg = ExperimentConfig("random_reversible:6,seed=1", "classical2", [0], seeds=200, seed=7,
                           output=str(tmp_path / "a.json"))
    run_experiment(cfg)
    run_experiment(cfg.replace(output=str(tmp_path / "b.json")))
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    a.pop("timestamp"), b.pop("timestamp")
    a["config"].pop("output"), b["config"].pop("output")
    assert dumps(a) == dumps(b)
    cfg2 = cfg.replace(output=None)
    assert dumps(run_experiment(cfg2, timestamp=False)[0]) == dumps(run_experiment(cfg2, timestamp=False)[0])


def test_recursive_sweep_csv(tmp_path, monkeypatch):
    monkeypatch.setenv("WALKLAB_THREADS", "2")
    sweep = [{"chain": f"complete:{n}"} for n in (4, 8, 16)]
    cfg = ExperimentConfig("complete:4", "recursive", [0], sweep=sweep, csv=str(tmp_path / "t.csv"))
    doc, table = run_experiment(cfg, timestamp=False)
    assert doc["ok"]
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "epsilon,t,total_U,total_C,success"
    assert len(lines) == 4
    eps = [float(line.split(",")[0]) for line in lines[1:]]
    assert eps == pytest.approx([0.25, 0.125, 0.0625], abs=1e-12)


def test_config_validation():
    with pytest.raises(ParamError):
        ExperimentConfig("complete:4", "nosuch")
    with pytest.raises(ParamError):
        ExperimentConfig("complete:4", "recursive", "none")
    with pytest.raises(ParamError):
        ExperimentConfig.from_dict({"chain": "complete:4", "bogus": 1})
    with pytest.raises(ValueError):
        ExperimentConfig("complete:4", "quantum", mode="fast")


def test_classical_and_reflect_schemas():
    doc, _ = run_experiment(ExperimentConfig("complete:10", "classical1", [0], seeds=300), timestamp=False)
    assert doc["ok"] and doc["outcome"]["t1"] == 1 and doc["outcome"]["t2"] == 20
    doc, table = run_experiment(ExperimentConfig("random_reversible:5,seed=2", "reflect_error",
                                                 k_range=[1, 2, 3], trials=3), timestamp=False)
    assert doc["ok"]
    assert table.splitlines()[0] == "k,max_error,fitted_c" and len(table.splitlines()) == 4
