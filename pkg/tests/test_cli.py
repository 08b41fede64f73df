import json

import pytest

from potential_regions.cli import main
from potential_regions.errors import InvalidParameterError
from potential_regions.experiments import Grids, make_run, resolve_config
from potential_regions.io import canonical_json, config_hash, read_rows

SMALL = {"construction": {"k_max": 3},
         "experiment": {"band_per_octave": 4, "global_heights": 16, "x_fine_per_r": 8,
                        "x_ratio": 1.05, "y_ratio": 1.1, "refinement_check": False,
                        "profile_heights": 40}}


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return str(p)


def test_resolve_config_rejects_unknown_keys():
    with pytest.raises(InvalidParameterError):
        resolve_config({"kernel": {"bogus": 1}})
    with pytest.raises(InvalidParameterError):
        resolve_config({"nope": {}})
    with pytest.raises(InvalidParameterError):
        resolve_config({"experiment": {"global_heights": 1}})


def test_config_hash_is_order_independent():
    a = {"x": 1.0, "y": [1, 2], "z": {"b": 2, "a": 1}}
    b = {"z": {"a": 1, "b": 2}, "y": [1, 2], "x": 1.0}
    assert canonical_json(a) == canonical_json(b)
    assert config_hash(a) == config_hash(b)
    assert make_run({}).hash != make_run(SMALL).hash


def test_grid_refinement():
    g = Grids.from_config(resolve_config()["experiment"])
    r = g.refined()
    assert r.band_per_octave == 2 * g.band_per_octave
    assert r.x_ratio ** 2 == pytest.approx(g.x_ratio)
    assert r.global_heights == 2 * g.global_heights - 1


def test_build_region_outputs(tmp_path, small_config):
    out = tmp_path / "b"
    assert main(["build-region", "--config", small_config, "--out", str(out)]) == 0
    h = make_run(SMALL).hash
    trace = json.loads((out / "trace.json").read_text())
    assert trace["config_hash"] == h
    assert [lv["N"] for lv in trace["trace"]["levels"]] == [2, 3, 4]
    for name in ("trace.csv", "sections_omega.csv", "sections_completed.csv", "completed_at_2tk.csv"):
        assert (out / name).read_text().startswith(f"# config_hash={h}\n")
    for name in ("region_omega.json", "region_completed.json"):
        assert json.loads((out / name).read_text())["config_hash"] == h


def test_outputs_are_deterministic(tmp_path, small_config):
    for sub in ("a", "b"):
        assert main(["build-region", "--config", small_config, "--out", str(tmp_path / sub),
                     "--seed", "7"]) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_sections_and_maximal(tmp_path, small_config):
    assert main(["sections", "--config", small_config, "--out", str(tmp_path),
                 "--heights", "1e-3,1e-2,0.1"]) == 0
    header, rows = read_rows(tmp_path / "sections_omega.csv")
    assert header == ["t", "measure", "ratio"] and len(rows) == 3
    assert main(["maximal", "--config", small_config, "--out", str(tmp_path)]) == 0
    lem = json.loads((tmp_path / "kstar.json").read_text())
    assert lem["pass"] and len(lem["samples"]) == 20


def test_sections_out_of_range(tmp_path, small_config, capsys):
    assert main(["sections", "--config", small_config, "--out", str(tmp_path),
                 "--heights", "100"]) == 2
    assert "OutOfRangeError" in capsys.readouterr().err


def test_weaktype_small(tmp_path, small_config):
    code = main(["weaktype", "--config", small_config, "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "weaktype.json").read_text())
    assert rep["bounded_pass"] and len(rep["levels"]) == 3
    # three levels are too few for the growth threshold; the exit code must say so
    assert code == (0 if rep["growth_pass"] else 1)


def test_invalid_kernel_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"kernel": {"beta": 1.5}}))
    assert main(["build-region", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "InvalidParameterError" in capsys.readouterr().err


def test_verify_nontangential_gauge_fails(tmp_path):
    p = tmp_path / "nt.json"
    p.write_text(json.dumps({"gauge": {"family": "power_law", "exponent": 1.0}}))
    assert main(["verify", "--config", str(p), "--out", str(tmp_path)]) == 1
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["stage_error"]["error"] == "GaugeNotTangentialError"
    assert set(rep["claims"]) == {"i", "ii", "iii", "iv", "v", "kstar"}
    assert not any(c["pass"] for c in rep["claims"].values())


def test_verify_small_is_deterministic(tmp_path, small_config):
    codes = [main(["verify", "--config", small_config, "--out", str(tmp_path / s)]) for s in "ab"]
    a = (tmp_path / "a" / "verify.json").read_bytes()
    assert a == (tmp_path / "b" / "verify.json").read_bytes()
    rep = json.loads(a)
    assert codes[0] == (0 if rep["pass"] else 1)
    assert rep["claims"]["i"]["violation"] == 0.0
