import json
import textwrap

import numpy as np
import pytest

from jrc11ad.cli import main
from jrc11ad.config import load_config, validate
from jrc11ad.io import read_matrix_csv
from jrc11ad.presets import PRESETS, preset

SMALL = """\
name: small
seed: 5
radar: {packets_per_cpi: 32, noise_power_w: 1.0e-6}
scene:
  point: {range_m: [12.0, 20.0], velocity_mps: [3.0, -2.0], amplitude: [0.01, 0.005]}
cpi_count: 2
outputs: [hrrp, rdmap, psl, spectrogram]
"""


def _write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in PRESETS:
        assert name in out
    assert main(["presets", "--show", "car-uturn"]) == 0
    assert "waypoints_m" in capsys.readouterr().out
    assert main(["presets", "--show", "nope"]) == 2


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_validate(name, capsys):
    assert validate(preset(name)) == []
    assert main(["validate", name]) == 0
    assert "ok" in capsys.readouterr().out


def test_preset_yaml_reloads(tmp_path, capsys):
    main(["presets", "--show", "bicycle-turns"])
    path = _write(tmp_path, capsys.readouterr().out)
    assert load_config(path).config_hash() == load_config(preset("bicycle-turns")).config_hash()


def test_missing_scene(tmp_path, capsys):
    path = _write(tmp_path, "outputs: [hrrp]\n")
    assert main(["validate", path]) == 2
    assert "missing scene" in capsys.readouterr().out


def test_odd_packet_count_points_at_line(tmp_path, capsys):
    path = _write(tmp_path, SMALL.replace("packets_per_cpi: 32", "packets_per_cpi: 33"))
    assert main(["validate", path]) == 2
    out = capsys.readouterr().out
    assert "P must be an even integer" in out
    assert "line 3" in out


def test_unknown_key_points_at_line(tmp_path, capsys):
    path = _write(tmp_path, SMALL + "colour: red\n")
    assert main(["validate", path]) == 2
    out = capsys.readouterr().out
    assert "colour" in out and "line 8" in out


def test_cpi_window_beyond_duration(tmp_path, capsys):
    path = _write(
        tmp_path,
        """\
        scene:
          duration_s: 1.0
          targets: [{type: bicycle, waypoints_m: [[5, 0], [10, 0]], speed_mps: 2.0}]
        cpi_count: 200
        outputs: [hrrp]
        """,
    )
    assert main(["validate", path]) == 3
    assert "CPI window" in capsys.readouterr().out


def test_target_beyond_unambiguous_range(tmp_path, capsys):
    path = _write(tmp_path, SMALL.replace("20.0]", "50.0]"))
    assert main(["validate", path]) == 3
    assert "unambiguous range" in capsys.readouterr().out
    assert main(["run", path, "--out", str(tmp_path / "o"), "-q"]) == 2 + 1


def test_trajectory_file_beyond_range_fails_at_run(tmp_path, capsys):
    traj = tmp_path / "far.csv"
    traj.write_text(
        "time_s,scatterer_id,x_m,y_m,z_m,axis_x,axis_y,axis_z,shape,dim1,dim2,material\n"
        "0,a,40,0,0,0,0,1,ellipsoid,0.1,0.2,metal\n"
        "1,a,48,0,0,0,0,1,ellipsoid,0.1,0.2,metal\n"
    )
    path = _write(tmp_path, "scene: {trajectory_file: far.csv}\ncpi_count: 1\noutputs: [hrrp]\n")
    assert main(["validate", path]) == 0
    assert main(["run", path, "--out", str(tmp_path / "o"), "-q"]) == 3
    assert "unambiguous" in capsys.readouterr().err


def test_unreadable_config(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "absent.yaml")]) == 2
    assert main(["run", str(tmp_path / "absent.yaml"), "-q"]) == 2


def test_run_writes_products_and_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["run", _write(tmp_path, SMALL), "--out", str(out), "-q"]) == 0
    names = {p.name for p in out.iterdir()}
    for mode in ("sg", "mg"):
        for stem in ("hrrp", "rdmap", "spectrogram"):
            assert {f"{stem}_{mode}.csv", f"{stem}_{mode}.png"} <= names
    assert "psl.csv" in names
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["modes"] == ["SG", "MG"]
    assert set(manifest["files"]) == names - {"manifest.json"}
    assert {"jrc11ad", "numpy", "scipy", "python"} <= set(manifest["versions"])

    hrrp, times, rng, labels = read_matrix_csv(out / "hrrp_mg.csv")
    assert labels == ("time_s", "range_m") and hrrp.shape == (2, 512)
    peaks = sorted(np.argsort(np.abs(hrrp[0]))[-2:])
    assert [rng[i] for i in peaks] == pytest.approx([12.0, 20.0], abs=0.09)
    rd, r_axis, v_axis, labels = read_matrix_csv(out / "rdmap_sg.csv")
    assert labels == ("range_m", "velocity_mps") and rd.shape == (512, 16)


def test_format_and_env_out(tmp_path, monkeypatch):
    monkeypatch.setenv("JRC11AD_OUT", str(tmp_path / "env"))
    assert main(["run", _write(tmp_path, SMALL), "--format", "csv", "-q"]) == 0
    names = {p.name for p in (tmp_path / "env").iterdir()}
    assert not any(n.endswith(".png") for n in names)
    assert "hrrp_sg.csv" in names


def test_runs_are_deterministic_and_seeded(tmp_path):
    cfg = _write(tmp_path, SMALL)
    for d in ("a", "b"):
        assert main(["run", cfg, "--out", str(tmp_path / d), "--format", "csv", "-q", "--threads", "2"]) == 0
    assert main(["run", cfg, "--out", str(tmp_path / "c"), "--format", "csv", "-q", "--seed", "6"]) == 0
    a, b, c = (json.loads((tmp_path / d / "manifest.json").read_text())["files"] for d in "abc")
    assert a == b
    assert a["hrrp_sg.csv"] != c["hrrp_sg.csv"]


def test_bad_threads(tmp_path):
    assert main(["run", _write(tmp_path, SMALL), "--threads", "0", "-q"]) == 2
