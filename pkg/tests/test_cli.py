import json
import shutil

import pytest

from yflow.cli import main

from conftest import FIXTURES

CONFIG = str(FIXTURES / "sample_config.json")


def run(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_gen_writes_artifacts(tmp_path, capsys):
    rc, out, _ = run(["gen", "--config", CONFIG, "--out", str(tmp_path),
                      "--layer", "0", "--anchor", "os"], capsys)
    assert rc == 0
    assert (tmp_path / "layer0_os.ir").exists()
    assert (tmp_path / "layer0_os.c").exists()
    assert "layer0_os" in out


def test_gen_matches_golden_ir(tmp_path, capsys):
    rc, _, _ = run(["gen", "--config", CONFIG, "--out", str(tmp_path)], capsys)
    assert rc == 0
    assert (tmp_path / "layer0_os.ir").read_text() == \
        (FIXTURES / "golden_basic_os.ir").read_text()


def test_gen_over_budget_is_config_error(tmp_path, capsys):
    rc, _, err = run(["gen", "--config", CONFIG, "--out", str(tmp_path),
                      "--anchor", "os", "--aux-weight", "40"], capsys)
    assert rc == 2
    assert "register budget" in err


def test_gen_bad_layer_index(tmp_path, capsys):
    rc, _, err = run(["gen", "--config", CONFIG, "--out", str(tmp_path),
                      "--layer", "9"], capsys)
    assert rc == 2 and "out of range" in err


def test_gen_missing_config(tmp_path, capsys):
    rc, _, err = run(["gen", "--config", str(tmp_path / "nope.json"),
                      "--out", str(tmp_path)], capsys)
    assert rc == 2 and "error" in err


def test_sim_passes_all_layers(tmp_path, capsys):
    for layer in range(5):
        rc, out, _ = run(["sim", "--config", CONFIG, "--out", str(tmp_path),
                          "--layer", str(layer), "--recommend"], capsys)
        assert rc == 0 and "PASS" in out
        assert (tmp_path / ("layer%d_counts.csv" % layer)).exists()


def test_sim_binary_mode(tmp_path, capsys):
    # layer 1 has ic=16 = x, as binary mode requires
    cfg = json.loads((FIXTURES / "sample_config.json").read_text())
    cfg["machine"]["elem_bits"] = 1
    cfg["machine"]["vec_reg_bits"] = 16
    cfg["machine"]["vec_var_bits"] = 16
    path = tmp_path / "binary.json"
    path.write_text(json.dumps(cfg))
    rc, out, _ = run(["sim", "--config", str(path), "--out", str(tmp_path),
                      "--layer", "1", "--mode", "binary"], capsys)
    assert rc == 0 and "PASS" in out


def test_sim_corrupted_ir_fails_with_coordinates(tmp_path, capsys):
    rc, out, _ = run(["sim", "--config", CONFIG, "--out", str(tmp_path),
                      "--ir", str(FIXTURES / "corrupted.ir")], capsys)
    assert rc == 1
    assert "FAIL" in out and "k=" in out and "h=" in out and "w=" in out


def test_sim_saved_ir_roundtrip(tmp_path, capsys):
    rc, _, _ = run(["gen", "--config", CONFIG, "--out", str(tmp_path),
                    "--layer", "2", "--anchor", "ws"], capsys)
    assert rc == 0
    rc, out, _ = run(["sim", "--config", CONFIG, "--out", str(tmp_path),
                      "--ir", str(tmp_path / "layer2_ws.ir")], capsys)
    assert rc == 0 and "PASS" in out


def test_sweep_artifact(tmp_path, capsys):
    rc, out, _ = run(["sweep", "--config", CONFIG, "--out", str(tmp_path),
                      "--layer", "0"], capsys)
    assert rc == 0 and out.startswith("best:")
    csv = (tmp_path / "sweep_layer0.csv").read_text()
    lines = csv.strip().splitlines()
    assert lines[0] == "cost,config"
    costs = [int(l.split(",")[0]) for l in lines[1:]]
    assert costs == sorted(costs) and len(costs) >= 2


def test_layout_artifacts_and_dp_quality(tmp_path, capsys):
    rc, out, _ = run(["layout", "--config", CONFIG, "--out", str(tmp_path)],
                     capsys)
    assert rc == 0
    assert (tmp_path / "costs.csv").exists()
    text = (tmp_path / "layout.txt").read_text()
    assert text.startswith("total_cost ")
    assert text == out
    assert sum(1 for l in text.splitlines() if l.startswith("layer ")) == 5


def test_recommend_prints_spec(tmp_path, capsys):
    rc, out, _ = run(["recommend", "--config", CONFIG, "--layer", "0",
                      "--out", str(tmp_path)], capsys)
    assert rc == 0
    spec = json.loads(out)
    assert spec["anchor"] in ("IS", "WS", "OS")
    assert spec["aux_weight_vars"] >= 0


def test_rerun_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        for argv in (["gen", "--config", CONFIG, "--out", str(out),
                      "--recommend"],
                     ["sim", "--config", CONFIG, "--out", str(out),
                      "--seed", "7"],
                     ["sweep", "--config", CONFIG, "--out", str(out)],
                     ["layout", "--config", CONFIG, "--out", str(out)]):
            assert run(argv, capsys)[0] == 0
    for name in ("layer0_os.ir", "layer0_os.c", "layer0_counts.csv",
                 "sweep_layer0.csv", "costs.csv", "layout.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
