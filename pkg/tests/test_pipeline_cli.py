import json
import os
from fractions import Fraction

import pytest

from swapsens import cli, suites
from swapsens.fixtures import triangle_pipeline_spec
from swapsens.pipeline import PipelineError, PipelineSpec, run_pipeline
from swapsens.store import Cache, Check, Report, canonical, content_hash


# store

def test_canonical_encoding():
    assert canonical({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'
    assert canonical({"x": Fraction(1, 3), "s": frozenset({2, 1})}) == '{"s":[1,2],"x":"1/3"}'
    with pytest.raises(TypeError):
        canonical({"x": object()})


def test_content_hash_is_blake2b_of_canonical_json():
    import hashlib

    obj = {"k": [3, 1], "a": "z"}
    assert content_hash(obj) == hashlib.blake2b(b'{"a":"z","k":[3,1]}', digest_size=16).hexdigest()
    assert len(content_hash(obj)) == 32
    assert content_hash({"a": "z", "k": [3, 1]}) == content_hash(obj)


def test_cache_round_trip(tmp_path):
    c = Cache(str(tmp_path))
    h = c.put({"n": 5})
    assert c.get(h) == {"n": 5} and c.put({"n": 5}) == h
    assert os.listdir(tmp_path / ".cache") == [h + ".json"]


def test_check_ops():
    assert Check("a", 1, "<=", 2).holds and not Check("a", 3, "<", 3).holds
    assert Check("a", 2, ">=", 2).holds and Check("a", [1], "==", [1]).holds
    with pytest.raises(ValueError):
        Check("a", 1, "!=", 2).holds
    r = Report("t")
    r.check("x", Fraction(1, 2), "<=", 1)
    assert r.ok and r.to_json()["checks"][0]["lhs"] == "1/2"
    r.check("y", 2, "<=", 1)
    assert not r.ok and "FAIL y" in r.to_text()


# pipeline

def small_spec():
    return {
        "seed": 5,
        "stages": [
            {"stage": "gen", "kind": "planted_csp", "graph": "triangle", "sigma": 2},
            {"stage": "ikw", "k": 2, "kprime": 1},
            {"stage": "recover"},
            {"stage": "balance", "mode": "minimal"},
            {"stage": "recover"},
        ],
    }


def test_pipeline_is_deterministic():
    a = run_pipeline(small_spec()).to_json()
    b = run_pipeline(small_spec()).to_json()
    assert a == b and a["ok"]


def test_pipeline_hashes_match_cache(tmp_path):
    rep = run_pipeline(small_spec(), str(tmp_path))
    hashes = [s["hash"] for s in rep.stages if "hash" in s]
    assert len(hashes) == 3
    cache = Cache(str(tmp_path))
    for h in hashes:
        assert content_hash(cache.get(h)) == h


def test_pipeline_validation():
    bad = {"stages": [{"stage": "gen"}, {"stage": "domset"}]}
    with pytest.raises(PipelineError):
        run_pipeline(bad)
    with pytest.raises(PipelineError):
        PipelineSpec.from_json({"stages": [{"stage": "nope"}]}).validate()
    with pytest.raises(PipelineError):
        PipelineSpec.from_json({"stages": "gen"})


def test_triangle_demo_report():
    rep = run_pipeline(triangle_pipeline_spec())
    assert rep.ok
    names = [s["stage"] for s in rep.stages]
    assert names[0] == "gen" and names[-1] == "verify"


# suites

@pytest.mark.parametrize("name", ["sc-slice-soundness", "lc-balance", "ikw-blowup", "code-distance"])
def test_named_suites_pass(name):
    rep = suites.verify_suite(name)
    assert rep.ok and rep.checks


def test_unknown_suite():
    with pytest.raises(KeyError):
        suites.verify_suite("nonexistent")


# cli

def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr()


def test_cli_gen_and_value(tmp_path, capsys):
    f = tmp_path / "inst.json"
    code, _ = run(["gen", "--kind", "planted-lc", "--seed", "3", "--out", str(f)], capsys)
    assert code == 0
    code, out = run(["value", "--instance", str(f), "--solution", str(f), "--format", "json"], capsys)
    assert code == 0 and json.loads(out.out)["value"] == "1"


def test_cli_verify_exit_codes(capsys, monkeypatch):
    assert run(["verify", "--suite", "lc-balance"], capsys)[0] == 0
    code, out = run(["verify", "--suite", "nonexistent"], capsys)
    assert code == 1 and "nonexistent" in out.err
    assert run(["verify"], capsys)[0] == 1
    assert run(["bogus-command"], capsys)[0] == 1

    def failing():
        r = Report("x")
        r.check("always fails", 1, "<", 0)
        return r

    monkeypatch.setitem(suites.SUITES, "always-fails", failing)
    code, out = run(["verify", "--suite", "always-fails"], capsys)
    assert code == 2 and "FAIL always fails" in out.out


def test_cli_list(capsys):
    code, out = run(["verify", "--list", "--format", "json"], capsys)
    assert code == 0 and set(json.loads(out.out)["suites"]) == set(suites.SUITES)


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nseed = 11\nformat = json\n")
    code, out = run(["gen", "--kind", "planted-csp", "--config", str(cfg)], capsys)
    code2, out2 = run(["gen", "--kind", "planted-csp", "--seed", "11", "--format", "json"], capsys)
    assert code == code2 == 0 and out.out == out2.out
    cfg.write_text("not a pair\n")
    assert run(["gen", "--config", str(cfg)], capsys)[0] == 1


def test_cli_missing_file(capsys):
    assert run(["value", "--instance", "/nonexistent.json", "--solution", "/nonexistent.json"], capsys)[0] == 1


def test_cli_pipeline_spec_file(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(small_spec()))
    code, out = run(["pipeline", "--spec", str(spec), "--format", "json"], capsys)
    assert code == 0 and json.loads(out.out)["ok"]
    spec.write_text(json.dumps({"stages": [{"stage": "gen"}, {"stage": "domset"}]}))
    assert run(["pipeline", "--spec", str(spec)], capsys)[0] == 1


def test_cli_transform_and_recover(tmp_path, capsys):
    src = tmp_path / "lc.json"
    sol = tmp_path / "sol.json"
    tgt = tmp_path / "ar.json"
    assert run(["gen", "--kind", "planted-lc", "--sigma-v", "3", "--seed", "2", "--out", str(src)], capsys)[0] == 0
    assert run(["transform", "--type", "ar", "--in", str(src), "--out", str(tgt)], capsys)[0] == 0
    target = json.loads(tgt.read_text())["instance"]
    assert target["kind"] == "label_cover"
    from swapsens.core import lc_from_json
    from swapsens.gadgets import build_code
    from swapsens.reduce import ar_lift

    blob = json.loads(src.read_text())
    inst = lc_from_json(blob["instance"])
    plant = cli.load_solution(str(src))
    lifted = ar_lift(build_code(inst.sigma_v, Fraction(1, 2)), plant)
    sol.write_text(json.dumps({"solution": cli.dump_solution(lifted)}))
    code, out = run(["recover", "--type", "ar", "--source", str(src), "--solution", str(sol), "--format", "json"], capsys)
    assert code == 0 and json.loads(out.out)["value"] == "1"
    assert run(["opt", "--instance", str(src), "--format", "json"], capsys)[0] == 0
