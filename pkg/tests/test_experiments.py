import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from lfuav.cli import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, main
from lfuav.config import DEFAULTS, ConfigError, ExperimentConfig
from lfuav.experiments import (RunManifest, TrainResult, compare_agents, outage_map, read_csv,
                               validate_outage, validation_geometries)

ROOT = Path(__file__).resolve().parents[1]

SMALL = {
    "validate": {"n_geometries": 3, "mc_samples": 20000},
    "outage_map": {"grid_n": 5},
    "quadrature": {"abs_tol": 1e-7, "rel_tol": 1e-7},
    "env": {"horizon": 5},
    "agent": {"hidden": [8, 8], "batch": 8, "warmup_steps": 10, "buffer_capacity": 100},
    "train": {"episodes": 3},
    "compare": {"seeds": [0, 1]},
}


def small_cfg(**extra):
    return ExperimentConfig.from_dict(SMALL).with_overrides(**extra)


def write_yaml(tmp_path, text):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    return p


# -- configuration -------------------------------------------------------

def test_empty_config_is_defaults():
    cfg = ExperimentConfig.from_dict({})
    assert cfg.raw == DEFAULTS
    assert cfg.agent().hidden == (128, 128)
    assert cfg.env_config().mu == 5000.0


def test_shipped_default_yaml_matches_defaults():
    assert ExperimentConfig.load(ROOT / "configs" / "default.yaml").raw == DEFAULTS


@pytest.mark.parametrize("doc", [
    {"nope": 1},
    {"env": {"horizon": 10, "typo": 1}},
    {"version": 2},
    {"distortion": {"d": [0.1]}},
    {"distortion": {"d": [0.1, 0.7]}},
    {"env": {"mu": -1}},
    {"compare": {"agents": ["ppo"]}},
    {"compare": {"d_pairs": [[0.1, 0.2, 0.3]]}},
    {"outage_map": {"grid_n": 1}},
    {"agent": {"learn_trigger": "never"}},
    {"env": "flat"},
])
def test_invalid_configs_rejected(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(doc)


def test_yaml_exponent_floats(tmp_path):
    cfg = ExperimentConfig.load(write_yaml(tmp_path, "quadrature:\n  abs_tol: 1e-8\n"))
    assert cfg.quad().abs_tol == 1e-8


def test_hash_tracks_content():
    a, b = ExperimentConfig.from_dict({}), ExperimentConfig.from_dict({"seed": 0})
    assert a.hash() == b.hash()
    assert a.hash() != a.with_overrides(seed=1).hash()


def test_auto_mu_accepted():
    assert ExperimentConfig.from_dict({"env": {"mu": "auto"}}).raw["env"]["mu"] == "auto"


# -- experiment drivers ---------------------------------------------------------

def test_validation_geometries_cycle_d_and_stay_in_area():
    cfg = ExperimentConfig.from_dict({})
    geo = validation_geometries(cfg)
    assert len(geo) == 20
    assert [g[2] for g in geo[:6]] == [0.1, 0.2, 0.3, 0.1, 0.2, 0.3]
    assert all(0 <= g[0] <= 20000 and 0 <= g[1] <= 20000 for g in geo)


def test_validate_is_deterministic():
    cfg = small_cfg()
    a, b = validate_outage(cfg), validate_outage(cfg)
    assert a.rows == b.rows
    assert len(a.rows) == 3 * 2


def test_outage_map_symmetric_users_are_mirror_symmetric():
    # users mirrored about the diagonal give a map symmetric under transpose
    cfg = small_cfg(layout={"users": [[7000, 3000, 0], [3000, 7000, 0]]},
                    radio={"carrier_hz": [2e9, 2e9]}, distortion={"d": [0.2, 0.2]})
    omap = outage_map(cfg)
    np.testing.assert_allclose(omap.total, omap.total.T, rtol=1e-9, atol=1e-12)


def test_outage_map_argmin_beats_start():
    omap = outage_map(small_cfg())
    assert omap.argmin()[2] <= omap.total[0, 0]


@pytest.mark.slow
def test_pinned_grid_optimum():
    cfg = ExperimentConfig.from_dict({})
    n1, n2, best = outage_map(cfg, d=[0.2, 0.2]).argmin()
    assert (n1, n2) == (5000.0, 0.0)
    assert best == pytest.approx(0.60865, abs=5e-5)


def test_train_result_metrics():
    r = TrainResult("sac", 0, (0.1, 0.3), [1.0, 5.0, 9.5, 10.0, 2.0], [0.5] * 5,
                    [(0, 0), (1, 1)], [0.7, 0.4], 1.0)
    assert r.episodes_to_within(0.1) == 3
    assert r.first_mean(2) == 3.0 and r.last_mean(2) == 6.0
    assert r.final_position == (1, 1) and r.final_outage == 0.4


def test_compare_run_count():
    cfg = small_cfg(outage_map={"grid_n": 3})
    rep = compare_agents(cfg)
    assert len(rep.runs) == 2 * 2 * 2
    assert set(rep.optimum) == {(0.2, 0.2), (0.1, 0.3)}


# -- command line ----------------------------------------------------------

@pytest.fixture
def small_yaml(tmp_path):
    return write_yaml(tmp_path, json.dumps(SMALL))


def test_cli_validate_and_rerun_identical(small_yaml, tmp_path, capsys):
    out, again = tmp_path / "v", tmp_path / "v2"
    assert main(["validate", "--config", str(small_yaml), "--out", str(out)]) == EXIT_OK
    man = RunManifest.read(out)
    assert man.status == "complete" and man.outputs == ["validation.csv"]
    assert main(["rerun", str(out / "manifest.json"), "--out", str(again)]) == EXIT_OK
    assert (out / "validation.csv").read_bytes() == (again / "validation.csv").read_bytes()
    assert "geometries within" in capsys.readouterr().out


def test_cli_train_outputs(small_yaml, tmp_path):
    out = tmp_path / "t"
    assert main(["train", "--config", str(small_yaml), "--out", str(out), "--agent", "ddpg", "--seed", "3"]) == 0
    for name in ("rewards.csv", "outage.csv", "trajectory.csv", "checkpoint.npz", "manifest.json"):
        assert (out / name).exists()
    man = RunManifest.read(out)
    assert man.seed == 3 and man.args == {"agent": "ddpg"}
    assert len(read_csv(out / "rewards.csv")) == 3
    traj = read_csv(out / "trajectory.csv")
    assert traj[0]["n1"] == "0.0" and len(traj) == 6


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = write_yaml(tmp_path, "env: {horizon: 5, bogus: 1}\n")
    assert main(["validate", "--config", str(bad), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert main(["validate", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["rerun", str(tmp_path / "nothing"), "--out", str(tmp_path / "y")]) == EXIT_CONFIG


def test_cli_violation_exit_code(tmp_path):
    # a z_fail of zero turns any sampling noise into a violation
    doc = dict(SMALL, validate={"n_geometries": 1, "mc_samples": 2000, "z_pass": 0.0, "z_fail": 0.0})
    cfg = write_yaml(tmp_path, json.dumps(doc))
    assert main(["validate", "--config", str(cfg), "--out", str(tmp_path / "v")]) == EXIT_VIOLATION
    assert RunManifest.read(tmp_path / "v").status == "violation"


def test_manifest_usable_as_config(small_yaml, tmp_path):
    out = tmp_path / "m"
    assert main(["outage-map", "--config", str(small_yaml), "--out", str(out), "--grid-n", "3"]) == 0
    cfg = ExperimentConfig.load(out / "manifest.json")
    assert cfg.hash() == RunManifest.read(out).config_hash
    assert len(read_csv(out / "outage_map.csv")) == 9


def test_validate_never_imports_learning_code(small_yaml, tmp_path):
    code = (
        "import sys\n"
        "from lfuav.cli import main\n"
        f"rc = main(['validate', '--config', {str(small_yaml)!r}, '--out', {str(tmp_path / 'v')!r}])\n"
        f"rc2 = main(['outage-map', '--config', {str(small_yaml)!r}, '--out', {str(tmp_path / 'o')!r}])\n"
        "assert rc == rc2 == 0\n"
        "print(sorted(m for m in sys.modules if m.startswith('lfuav.rl')))\n"
    )
    res = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
    assert res.stdout.strip().splitlines()[-1] == "[]"
