import csv
import json

import numpy as np
import pytest

from wdist import cli
from wdist.config import JobConfig, dumps_config, load_config
from wdist.core import NoConvergence, ValidationError


def make_config(tmp_path, gamma_plus, gamma_minus, name="cfg.json", **extra):
    cfg = {
        "signature": {"p": 2, "q": 2, "gamma_plus": gamma_plus, "gamma_minus": gamma_minus},
        "test_function": [{"coeff": [1, 0], "exponents": [0, 0, 0, 0], "sigma": 1.0}],
    }
    cfg.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_config_roundtrip(tmp_path):
    path = make_config(tmp_path, [1, 1], [1, 1], params={"lambda": [0.5, -1], "sweep": {"re_from": 0, "re_to": 1, "steps": 3}})
    cfg = load_config(path)
    again = JobConfig.from_dict(json.loads(dumps_config(cfg)))
    assert again == cfg
    d = cfg.to_dict()
    assert d["tolerances"] == {"quad_tol": 1e-9, "residue_tol": 1e-4, "pole_guard": 0.02}
    assert d["oracle"]["circle_radius"] == 0.1 and d["oracle"]["circle_points"] == 8


@pytest.mark.parametrize("extra, msg", [
    ({"tolerance": {}}, "unknown key"),
    ({"tolerances": {"quad_tol": 1e-9, "quadtol": 1}}, "unknown key"),
    ({"params": {"variant": "OuterT"}}, "variant"),
    ({"job": "nope"}, "job"),
])
def test_config_rejects_bad_keys(tmp_path, extra, msg):
    with pytest.raises(ValidationError, match=msg):
        load_config(make_config(tmp_path, [1, 1], [1, 1], **extra))


def test_term_dimension_mismatch(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({
        "signature": {"p": 2, "q": 2, "gamma_plus": [1, 1], "gamma_minus": [1, 1]},
        "test_function": [{"coeff": [1, 0], "exponents": [0, 0, 0], "sigma": 1.0}],
    }))
    with pytest.raises(ValidationError, match="n=4"):
        load_config(str(path))


def test_pairing_job(tmp_path, capsys):
    path = make_config(tmp_path, [1, 1], [1, 1], params={"lambda": [1, 0]})
    code, out, _ = run(capsys, "pairing", "--config", path, "--threads", "1")
    assert code == 0
    rep = json.loads(out)
    res = rep["results"][0]
    assert abs(res["value"][0] - res["oracle"][0]) < 1e-7
    assert rep["inputs"]["tolerances"]["quad_tol"] == 1e-9
    assert "runtime_ms" not in rep


def test_delta_job(tmp_path, capsys):
    path = make_config(tmp_path, [1, 1], [1, 1], params={"k": 0})
    code, out, _ = run(capsys, "delta", "--config", path)
    assert code == 0
    assert json.loads(out)["results"][0]["value"][0] == pytest.approx(0.015625, abs=1e-9)


def test_validation_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "signature": {"p": 1, "q": 2, "gamma_plus": [1], "gamma_minus": [1, 1]},
        "test_function": [{"coeff": [1, 0], "exponents": [0, 0, 0], "sigma": 1.0}],
    }))
    code, _, err = run(capsys, "pairing", "--config", str(path))
    assert code == 1
    assert "p > 1" in err


def test_malformed_json_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(capsys, "verify", "--config", str(path))[0] == 1


def test_pole_guard_is_a_validation_failure(tmp_path, capsys):
    path = make_config(tmp_path, [0.5, 0.5], [1, 1], params={"lambda": [-3.5, 0]})
    code, _, err = run(capsys, "pairing", "--config", path)
    assert code == 1 and "guard" in err


def test_no_convergence_exit_code(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise NoConvergence("stalled", 0.0, 1.0)

    monkeypatch.setattr(cli.dist, "pair_plambda_continued", boom)
    path = make_config(tmp_path, [1, 1], [1, 1])
    assert run(capsys, "pairing", "--config", path)[0] == 2


def test_sweep_writes_csv(tmp_path, capsys):
    path = make_config(tmp_path, [0.5, 0.5], [1, 1],
                       params={"sweep": {"re_from": -2.0, "re_to": 1.0, "steps": 4, "im": 0.25}})
    out = tmp_path / "sweep.json"
    code, _, _ = run(capsys, "sweep", "--config", path, "--output", str(out), "--threads", "2")
    assert code == 0
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["re_lambda", "im_lambda", "re_value", "im_value", "abs_error"]
    assert len(rows) == 5
    assert float(rows[1][0]) == -2.0 and float(rows[1][1]) == 0.25


def test_sweep_needs_output(tmp_path, capsys):
    path = make_config(tmp_path, [0.5, 0.5], [1, 1], params={"sweep": {"re_from": 0, "re_to": 1, "steps": 2}})
    assert run(capsys, "sweep", "--config", path)[0] == 1


def test_quad_tol_override_is_echoed(tmp_path, capsys):
    path = make_config(tmp_path, [1, 1], [1, 1])
    code, out, _ = run(capsys, "delta", "--config", path, "--quad-tol", "1e-8")
    assert json.loads(out)["inputs"]["tolerances"]["quad_tol"] == 1e-8


def test_residue_job_second_series(tmp_path, capsys):
    path = make_config(tmp_path, [0.5, 0.5], [1, 1], params={"series": "second", "k": 0})
    code, out, _ = run(capsys, "residue", "--config", path, "--threads", "1")
    res = json.loads(out)["results"][0]
    assert code == 0 and res["theorem_tag"] == "T2" and res["passed"]


def test_residue_unsupported_is_not_fatal(tmp_path, capsys):
    path = make_config(tmp_path, [0.5, 0.7], [0.5, 0.7], params={"series": "second", "k": 0})
    code, out, _ = run(capsys, "residue", "--config", path)
    res = json.loads(out)["results"][0]
    assert code == 0 and res["theorem_tag"] == "UnsupportedCase" and res["value"] == [None, None]


def _verify(tmp_path, capsys, gp, gm):
    path = make_config(tmp_path, gp, gm)
    code, out, _ = run(capsys, "verify", "--config", path, "--threads", "2")
    return code, {r["name"]: r for r in json.loads(out)["results"]}


def test_verify_odd_signature(tmp_path, capsys):
    code, res = _verify(tmp_path, capsys, [0.5, 0.5], [1, 1])
    assert code == 0
    for name in ("T1 k=1", "T1 k=2", "T2 k=0", "T2 k=1", "Green recursion #0", "regularization agreement k=2"):
        assert res[name]["passed"], name


def test_verify_even_signature_simple_pole(tmp_path, capsys):
    code, res = _verify(tmp_path, capsys, [1, 1], [1, 1])
    assert code == 0
    assert res["T3 k=0 c_-1"]["order"] == 1
    assert res["T3 k=0 c_-2 vanishes (simple pole)"]["passed"]


def test_verify_half_signature_double_pole(tmp_path, capsys):
    code, res = _verify(tmp_path, capsys, [0.5, 0.5], [0.5, 0.5])
    assert code == 0
    entry = res["T3 k=0 c_-2"]
    assert entry["order"] == 2
    np.testing.assert_allclose(entry["oracle"][0], -0.0224303128451916, rtol=1e-6)


def test_verify_failure_exit_code(tmp_path, capsys, monkeypatch):
    real = cli.dist.theorem1_formula
    monkeypatch.setattr(cli.dist, "theorem1_formula", lambda *a, **k: 2 * real(*a, **k))
    monkeypatch.setattr("wdist.dist.theorem1_formula", lambda *a, **k: 2 * real(*a, **k))
    path = make_config(tmp_path, [0.5, 0.5], [1, 1])
    assert run(capsys, "verify", "--config", path, "--threads", "1")[0] == 3


def test_timing_flag_adds_runtime(tmp_path, capsys):
    path = make_config(tmp_path, [1, 1], [1, 1])
    code, out, _ = run(capsys, "delta", "--config", path, "--timing")
    assert json.loads(out)["runtime_ms"] >= 0
