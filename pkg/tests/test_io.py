import numpy as np
import pytest
from PIL import Image

from jrc11ad.detection import DetectionReport
from jrc11ad.echo import RxCpi
from jrc11ad.io import (
    FormatError,
    load_scene,
    read_matrix_csv,
    read_report_csv,
    read_rx,
    save_scene,
    write_heatmap_png,
    write_matrix_csv,
    write_report_csv,
    write_rx,
)
from jrc11ad.scene import GLASS, SKIN, ScattererTrack, Scene, cylinder, ellipsoid, plate, sample_scene
from jrc11ad.waveform import RadarParams

HEADER = "time_s,scatterer_id,x_m,y_m,z_m,axis_x,axis_y,axis_z,shape,dim1,dim2,material,eps_r,sigma\n"


def _scene():
    rng = np.random.default_rng(4)
    t = np.linspace(0.0, 0.3, 7) + rng.uniform(0, 1e-3, 7)
    t.sort()
    tracks = []
    for i, prim in enumerate((plate(0.02, 0.1, GLASS), cylinder(0.1, 0.5, SKIN), ellipsoid(0.3, 0.9))):
        pos = rng.normal(10.0, 3.0, (7, 3))
        ax = rng.normal(size=(7, 3))
        tracks.append(ScattererTrack(f"obj{i}.part", prim, t, pos, ax))
    return Scene(tuple(tracks), np.array([0.0, 0.0, 0.6]))


def test_trajectory_round_trip(tmp_path):
    scene = _scene()
    path = tmp_path / "traj.csv"
    save_scene(scene, path)
    back = load_scene(path, scene.radar_position)
    assert [t.id for t in back.tracks] == [t.id for t in scene.tracks]
    for a, b in zip(scene.tracks, back.tracks):
        assert a.primitive == b.primitive
        np.testing.assert_allclose(b.times, a.times, rtol=0, atol=1e-9)
        np.testing.assert_allclose(b.positions, a.positions, rtol=0, atol=1e-9)
        np.testing.assert_allclose(b.axes, a.axes, rtol=0, atol=1e-9)


def test_loaded_scene_samples_like_original(tmp_path, small_params):
    scene = _scene()
    save_scene(scene, tmp_path / "t.csv")
    back = load_scene(tmp_path / "t.csv", scene.radar_position)
    kw = dict(visibility_prob=1.0)
    a = sample_scene(scene, small_params, 3, 1, **kw)
    b = sample_scene(back, small_params, 3, 1, **kw)
    np.testing.assert_allclose(b.range, a.range, atol=1e-9)
    np.testing.assert_allclose(b.reflectivity, a.reflectivity, rtol=1e-9)


def test_two_frame_single_scatterer(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text(
        HEADER
        + "0.0,ball,5,0,0,0,0,1,ellipsoid,0.1,0.2,metal\n"
        + "0.25,ball,6,0,0,0,0,1,ellipsoid,0.1,0.2,metal\n"
    )
    scene = load_scene(path)
    assert len(scene.tracks) == 1
    assert scene.duration == pytest.approx(0.25)


def _bad(tmp_path, body, header=HEADER):
    path = tmp_path / "bad.csv"
    path.write_text(header + body)
    with pytest.raises(FormatError) as info:
        load_scene(path)
    return info.value


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(FormatError, match="empty"):
        load_scene(path)
    assert _bad(tmp_path, "").line == 2


@pytest.mark.parametrize(
    "body, line, pattern",
    [
        ("0,a,1,0,0,0,0,1,sphere,1,1,metal\n0.1,a,1,0,0,0,0,1,sphere,1,1,metal\n", 2, "shape"),
        ("0,a,1,0,0,0,0,1,plate,1,1,wood\n", 2, "material"),
        ("0,a,1,0,0,0,0,1,plate,1,1,metal\n0.1,a,x,0,0,0,0,1,plate,1,1,metal\n", 3, "non-numeric"),
        ("0,a,1,0,0,0,0,1,plate,1,1,metal\n0.1,a,1,0,0\n", 3, "fields"),
        ("0,a,1,0,0,0,0,1,plate,1,1,metal\n0.0,a,1,0,0,0,0,1,plate,1,1,metal\n", 3, "increasing"),
        ("0,a,1,0,0,0,0,1,plate,1,1,metal\n0.1,a,1,0,0,0,0,1,plate,2,1,metal\n", 3, "changes"),
        ("0,a,1,0,0,0,0,1,plate,1,1,dielectric\n", 2, "eps_r"),
        ("0,a,1,0,0,0,0,1,plate,1,1,metal\n", 2, "single frame"),
        ("0,a,1,0,0,0,0,1,plate,-1,1,metal\n", 2, "positive"),
    ],
)
def test_malformed_rows_report_line(tmp_path, body, line, pattern):
    err = _bad(tmp_path, body)
    assert err.line == line
    assert pattern in str(err)
    assert f":{line}:" in str(err)


def test_bad_header(tmp_path):
    err = _bad(tmp_path, "0,a,1,0,0,0,0,1,plate,1,1,metal\n", header="t,id,x\n")
    assert err.line == 1


def test_glass_default_and_dielectric_values(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text(
        HEADER
        + "0,g,1,0,0,0,0,1,plate,1,1,glass\n0.1,g,1,0,0,0,0,1,plate,1,1,glass\n"
        + "0,d,1,0,0,0,0,1,cylinder,0.1,1,dielectric,4.0,0.5\n0.1,d,1,0,0,0,0,1,cylinder,0.1,1,dielectric,4.0,0.5\n"
    )
    g, d = load_scene(path).tracks
    assert g.primitive.material == GLASS
    assert (d.primitive.material.rel_permittivity, d.primitive.material.conductivity) == (4.0, 0.5)


def test_rx_round_trip(tmp_path, small_params):
    rng = np.random.default_rng(0)
    shape = (small_params.packets_per_cpi, small_params.rx_length)
    rx = RxCpi(rng.normal(size=shape) + 1j * rng.normal(size=shape), small_params, cpi_index=7)
    write_rx(rx, tmp_path / "cpi.bin")
    back = read_rx(tmp_path / "cpi.bin", small_params)
    assert back.cpi_index == 7
    np.testing.assert_array_equal(back.samples, rx.samples)
    raw = (tmp_path / "cpi.bin").read_bytes()
    assert raw[:8] == b"JRCRXCPI"
    assert len(raw) == 32 + 16 * rx.samples.size


def test_rx_rejects_corruption(tmp_path, small_params):
    rx = RxCpi(np.ones((small_params.packets_per_cpi, small_params.rx_length), complex), small_params)
    write_rx(rx, tmp_path / "cpi.bin")
    raw = (tmp_path / "cpi.bin").read_bytes()
    (tmp_path / "short.bin").write_bytes(raw[:-16])
    (tmp_path / "magic.bin").write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(FormatError, match="bytes"):
        read_rx(tmp_path / "short.bin")
    with pytest.raises(FormatError, match="magic"):
        read_rx(tmp_path / "magic.bin")


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    values = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
    rows, cols = np.arange(5) * 0.085, np.linspace(-6, 6, 4)
    write_matrix_csv(tmp_path / "m.csv", values, rows, cols, "range_m", "velocity_mps")
    v, r, c, labels = read_matrix_csv(tmp_path / "m.csv")
    assert labels == ("range_m", "velocity_mps")
    np.testing.assert_allclose(v, values, rtol=1e-9)
    np.testing.assert_allclose(r, rows, rtol=1e-9)
    np.testing.assert_allclose(c, cols, rtol=1e-9)


def test_heatmap_png(tmp_path):
    values = np.array([[1.0, 0.1], [1e-3, 1e-6]])
    write_heatmap_png(tmp_path / "h.png", values, floor_db=-60)
    img = np.asarray(Image.open(tmp_path / "h.png"))
    assert img.shape == (2, 2) and img.dtype == np.uint8
    # 0, -20, -60 and -120 dB on a 60 dB scale
    assert img.tolist() == [[255, 170], [0, 0]]


def test_report_csv_round_trip(tmp_path):
    thr = np.array([-10.0, 0.0, 10.0])
    pd = np.array([[1.0, 0.5, 0.0], [1.0, 0.75, 0.25]])
    pfa = np.array([[0.5, 0.1, 0.0], [0.4, 0.0, 0.0]])
    rep = DetectionReport(
        "MG", np.array([-5.0, 5.0]), thr, 1e-3, [np.zeros(1)] * 2, [np.zeros(1)] * 2, pd=pd, pfa=pfa
    )
    write_report_csv(tmp_path / "r.csv", {"MG": rep})
    back = read_report_csv(tmp_path / "r.csv")["MG"]
    np.testing.assert_array_equal(back["pd"], pd)
    np.testing.assert_array_equal(back["pfa"], pfa)
    np.testing.assert_array_equal(back["threshold_dbsm"], thr)
