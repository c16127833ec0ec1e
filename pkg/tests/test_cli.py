import json
import subprocess

import numpy as np
import pytest

from idrisk.cli import main
from idrisk.dataset import load_csv
from idrisk.propensity import propensity_utility
from idrisk.risk import RiskConfig, evaluate_fast


def _generate(tmp_path, n=150, seed=1, name="orig.csv"):
    path = tmp_path / name
    assert main(["generate", "--n", str(n), "--seed", str(seed), "--out", str(path)]) == 0
    return path


def test_generate_deterministic(tmp_path):
    a = _generate(tmp_path, seed=5, name="a.csv")
    b = _generate(tmp_path, seed=5, name="b.csv")
    c = _generate(tmp_path, seed=6, name="c.csv")
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    assert len(a.read_text().splitlines()) == 151


def test_generate_directory_layout(tmp_path):
    out = tmp_path / "data"
    assert main(["generate", "--n", "20", "--out", str(out)]) == 0
    assert (out / "ce_like.csv").exists()


def test_synthesize_layout_and_determinism(tmp_path):
    orig = _generate(tmp_path)
    for sub in ("o1", "o2"):
        rc = main(["synthesize", "--orig", str(orig), "--synvars", "Tenure,Income",
                   "--m", "2", "--seed", "3", "--out", str(tmp_path / sub)])
        assert rc == 0
    files = sorted(p.name for p in (tmp_path / "o1" / "synthetic").iterdir())
    assert files == ["syn_001.csv", "syn_002.csv"]
    for name in files:
        assert (tmp_path / "o1" / "synthetic" / name).read_bytes() == \
               (tmp_path / "o2" / "synthetic" / name).read_bytes()
    # synthesized column changed, untouched columns identical
    ods = load_csv(orig)
    sds = load_csv(tmp_path / "o1" / "synthetic" / "syn_001.csv", schema_hint=ods.schema)
    assert np.array_equal(ods.column("Age"), sds.column("Age"))
    assert not np.array_equal(ods.column("Income"), sds.column("Income"))


def test_evaluate_round_trip_matches_library(tmp_path, capsys):
    orig = _generate(tmp_path)
    main(["synthesize", "--orig", str(orig), "--synvars", "Income",
          "--m", "2", "--seed", "7", "--out", str(tmp_path)])
    out = tmp_path / "res"
    rc = main(["evaluate", "--orig", str(orig), "--syn", str(tmp_path / "synthetic"),
               "--known", "Age,Urban,Marital", "--synvars", "Income",
               "--r", "0.1", "--out", str(out), "--threads", "2"])
    assert rc == 0
    text = capsys.readouterr().out
    assert "mean file risk" in text and "U_p" in text
    for rel in ("risk/c.csv", "risk/t.csv", "risk/ir.csv", "risk/risk.json",
                "utility/u_p.csv", "utility/utility.json"):
        assert (out / rel).exists()
    ods = load_csv(orig)
    syn = [load_csv(tmp_path / "synthetic" / f"syn_{k:03d}.csv", schema_hint=ods.schema)
           for k in (1, 2)]
    cfg = RiskConfig(known=("Age", "Urban", "Marital"), synthesized=("Income",),
                     radii={"Age": 0.1, "Income": 0.1})
    direct = evaluate_fast(ods, syn, cfg)
    blob = json.loads((out / "risk" / "risk.json").read_text())
    assert blob["file_risk"] == direct.file_risk.tolist()
    assert blob["c"] == direct.c_matrix.tolist()
    util = json.loads((out / "utility" / "utility.json").read_text())
    assert util["u_p_per_dataset"] == propensity_utility(ods, syn).per_dataset.tolist()


def test_evaluate_forced_categorical(tmp_path):
    orig = _generate(tmp_path, n=80)
    main(["synthesize", "--orig", str(orig), "--synvars", "Income",
          "--m", "1", "--seed", "2", "--out", str(tmp_path)])
    out = tmp_path / "cat"
    rc = main(["evaluate", "--orig", str(orig), "--syn", str(tmp_path / "synthetic"),
               "--known", "Age", "--synvars", "Income", "--r", "0.1",
               "--categorical", "Age", "--out", str(out)])
    assert rc == 0
    ods = load_csv(orig, categorical=("Age",))
    syn = [load_csv(tmp_path / "synthetic" / "syn_001.csv", schema_hint=ods.schema)]
    cfg = RiskConfig(known=("Age",), synthesized=("Income",), radii={"Income": 0.1})
    blob = json.loads((out / "risk" / "risk.json").read_text())
    assert blob["file_risk"] == evaluate_fast(ods, syn, cfg).file_risk.tolist()


def test_config_supplies_command_and_flags_override(tmp_path):
    orig = _generate(tmp_path)
    main(["synthesize", "--orig", str(orig), "--synvars", "Income",
          "--m", "1", "--seed", "4", "--out", str(tmp_path)])
    cfg = {
        "command": "evaluate",
        "orig": str(orig),
        "syn": str(tmp_path / "synthetic"),
        "known": "Age,Urban,Marital",
        "synvars": "Income",
        "r": 0.3,
        "out": str(tmp_path / "from_config"),
    }
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["--config", str(cfg_path)]) == 0
    assert (tmp_path / "from_config" / "risk" / "risk.json").exists()

    # a flag beats the config value: --r 0.1 must change the result
    assert main(["evaluate", "--config", str(cfg_path), "--r", "0.1",
                 "--out", str(tmp_path / "overridden")]) == 0
    wide = json.loads((tmp_path / "from_config" / "risk" / "risk.json").read_text())
    narrow = json.loads((tmp_path / "overridden" / "risk" / "risk.json").read_text())
    assert wide["file_risk"] != narrow["file_risk"]


def test_config_radius_map(tmp_path):
    orig = _generate(tmp_path, n=80)
    main(["synthesize", "--orig", str(orig), "--synvars", "Income",
          "--m", "1", "--seed", "4", "--out", str(tmp_path)])
    cfg = {
        "command": "evaluate",
        "orig": str(orig),
        "syn": str(tmp_path / "synthetic"),
        "known": "Age,Urban,Marital",
        "synvars": "Income",
        "r": {"Age": 0.05, "Income": 0.2},
        "out": str(tmp_path / "mapped"),
    }
    cfg_path = tmp_path / "map.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["--config", str(cfg_path)]) == 0
    ods = load_csv(orig)
    syn = [load_csv(tmp_path / "synthetic" / "syn_001.csv", schema_hint=ods.schema)]
    direct = evaluate_fast(ods, syn, RiskConfig(
        known=("Age", "Urban", "Marital"), synthesized=("Income",),
        radii={"Age": 0.05, "Income": 0.2}))
    blob = json.loads((tmp_path / "mapped" / "risk" / "risk.json").read_text())
    assert blob["file_risk"] == direct.file_risk.tolist()


def test_sweep_cli(tmp_path, capsys):
    orig = _generate(tmp_path, n=100)
    out = tmp_path / "sw"
    rc = main(["sweep", "--orig", str(orig), "--scenario", "S1",
               "--radii", "0.05,0.1", "--m", "2", "--seed", "4",
               "--figures", "--out", str(out)])
    assert rc == 0
    assert "maximizing radius" in capsys.readouterr().out
    exp = out / "experiments"
    blob = json.loads((exp / "sweep_S1.json").read_text())
    assert blob["radii"] == [0.05, 0.1]
    assert len(blob["file_risks"][0]) == 2
    assert (exp / "sweep_S1.csv").exists() and (exp / "sweep_S1.svg").exists()


def test_scenarios_cli(tmp_path, capsys):
    orig = _generate(tmp_path, n=100)
    out = tmp_path / "sc"
    rc = main(["scenarios", "--orig", str(orig), "--scenarios", "S1,S2",
               "--radii", "0.1", "--m", "2", "--seed", "4", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "S1:" in text and "S2:" in text
    blob = json.loads((out / "experiments" / "scenarios.json").read_text())
    assert [s["scenario"] for s in blob["scenarios"]] == ["S1", "S2"]


def test_mstudy_cli(tmp_path):
    orig = _generate(tmp_path, n=100)
    out = tmp_path / "ms"
    rc = main(["mstudy", "--orig", str(orig), "--m-values", "1,2",
               "--repetitions", "2", "--seed", "5", "--out", str(out)])
    assert rc == 0
    blob = json.loads((out / "experiments" / "mstudy.json").read_text())
    assert blob["m_values"] == [1, 2]
    assert len(blob["mean_file_risks"]) == 2


@pytest.mark.parametrize("argv,needle", [
    (["generate"], "n: required"),
    (["evaluate", "--orig", "X", "--syn", "Y", "--r", "0.1",
      "--r-map", "Age=0.2"], "not both"),
    (["evaluate", "--orig", "X", "--syn", "Y", "--r-map", "Age:0.2"], "malformed map entry"),
])
def test_error_exits_name_the_field(tmp_path, capsys, argv, needle):
    assert main(argv) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and needle in err


def test_error_paths_with_real_data(tmp_path, capsys):
    orig = _generate(tmp_path, n=40)
    main(["synthesize", "--orig", str(orig), "--synvars", "Income",
          "--m", "1", "--seed", "1", "--out", str(tmp_path)])
    syn_dir = str(tmp_path / "synthetic")
    cases = [
        (["evaluate", "--orig", str(orig), "--syn", syn_dir,
          "--known", "Age", "--synvars", "Income"], "r: required"),
        (["evaluate", "--orig", str(orig), "--syn", syn_dir,
          "--synvars", "Income", "--r", "0.1"], "known: required"),
        (["evaluate", "--orig", str(orig), "--syn", str(tmp_path / "nothing_*.csv"),
          "--known", "Age", "--synvars", "Income", "--r", "0.1"], "no CSV files match"),
        (["sweep", "--orig", str(orig), "--scenario", "S9"], "unknown scenario"),
    ]
    for argv, needle in cases:
        assert main(argv) == 2, argv
        err = capsys.readouterr().err
        assert err.startswith("error:") and needle in err, (argv, err)


def test_bad_config_top_level(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["--config", str(bad), "generate", "--n", "5", "--out", str(tmp_path / "x")]) == 2
    assert "config: top level" in capsys.readouterr().err


def test_missing_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    assert "command is required" in capsys.readouterr().err


def test_console_script_help():
    proc = subprocess.run(["idrisk", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "usage: idrisk" in proc.stdout
    for cmd in ("evaluate", "synthesize", "sweep", "scenarios", "mstudy", "generate"):
        assert cmd in proc.stdout
