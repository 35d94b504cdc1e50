"""Scenario execution: scene construction, per-CPI simulation and product files."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ScenarioConfig
from .detection import DetectionConfig, run_roc_modes, summary_table
from .echo import synthesize_rx
from .io import load_scene, write_heatmap_png, write_matrix_csv, write_report_csv
from .processing import (
    Spectrogram,
    channel_estimates,
    doppler_axis,
    doppler_transform,
    notch_zero_doppler,
    psl,
    slow_time_interval,
)
from .scene import Scene, SceneRangeError, point_states, sample_scene
from .targets import synth_bicycle, synth_car, synth_pedestrian
from .waveform import make_golay_pair, schedule_train

_GENERATORS = {"car": synth_car, "bicycle": synth_bicycle, "pedestrian": synth_pedestrian}
_TARGET_ARGS = {
    "wheel_radius_m": "wheel_radius",
    "rim_scatterers": "rim_scatterers",
    "front_spokes": "front_spokes",
    "rear_spokes": "rear_spokes",
    "gait_amplitude": "gait_amplitude",
    "stride_length_m": "stride_length",
}


def build_scene(cfg: ScenarioConfig) -> Scene | None:
    """Scene for ``cfg``; ``None`` for point-target scenarios.

    Raises
    ------
    SceneRangeError
        If any scatterer strays beyond the radar's unambiguous range.
    """
    sc = cfg.scene
    radar_pos = tuple(sc.get("radar_position_m", (0.0, 0.0, 0.0)))
    max_range = cfg.radar.max_range
    if "point" in sc:
        return None
    if "trajectory_file" in sc:
        scene = load_scene(sc["trajectory_file"], radar_pos)
        reach = max(np.linalg.norm(t.positions - scene.radar_position, axis=1).max() for t in scene.tracks)
        if reach >= max_range:
            raise SceneRangeError(
                f"trajectory reaches {reach:.2f} m, beyond the {max_range:.2f} m unambiguous range"
            )
        return scene
    scene = None
    for i, t in enumerate(sc["targets"]):
        kwargs = {_TARGET_ARGS[k]: v for k, v in t.items() if k in _TARGET_ARGS}
        if "speed_mps" in t:
            kwargs["speed"] = t["speed_mps"]
        part = _GENERATORS[t["type"]](
            t["waypoints_m"],
            duration=sc["duration_s"],
            name=t.get("name", t["type"] if i == 0 else f"{t['type']}{i}"),
            radar_position=radar_pos,
            max_range=max_range,
            **kwargs,
        )
        scene = part if scene is None else scene.merged(part)
    return scene


def noise_power(cfg: ScenarioConfig) -> float:
    """Per-sample noise power: from ``snr_db`` against the detection reference, else the radar's."""
    if cfg.snr_db is None:
        return cfg.radar.noise_power
    return detection_config(cfg).noise_power(cfg.snr_db, cfg.radar)


def detection_config(cfg: ScenarioConfig) -> DetectionConfig:
    d = dict(cfg.detection)
    kwargs = {}
    if "snr_grid_db" in d:
        kwargs["snr_grid"] = tuple(float(v) for v in np.atleast_1d(d.pop("snr_grid_db")))
    if "thresholds_dbsm" in d:
        kwargs["thresholds"] = tuple(float(v) for v in np.atleast_1d(d.pop("thresholds_dbsm")))
    if "pd_levels" in d:
        kwargs["pd_levels"] = tuple(float(v) for v in d.pop("pd_levels"))
    kwargs.setdefault("first_cpi", d.pop("first_cpi", cfg.cpi_start))
    kwargs.setdefault("cpi_stride", d.pop("cpi_stride", cfg.cpi_stride))
    kwargs.setdefault("num_cpis", d.pop("num_cpis", cfg.cpi_count))
    kwargs.update(d)
    return DetectionConfig(
        seed=cfg.seed,
        processing=cfg.processing,
        alpha=cfg.alpha,
        visibility_prob=cfg.scene.get("visibility_prob", 0.5),
        visibility_hold=cfg.scene.get("visibility_hold", "cpi"),
        **kwargs,
    )


def cpi_indices(cfg: ScenarioConfig, scene: Scene | None) -> list:
    if scene is None:
        count = cfg.cpi_count or 1
        return [cfg.cpi_start + k * cfg.cpi_stride for k in range(count)]
    available = scene.num_cpis(cfg.radar)
    idx = list(range(cfg.cpi_start, available, cfg.cpi_stride))
    if cfg.cpi_count is not None:
        if cfg.cpi_count > len(idx):
            raise SceneRangeError(
                f"scene holds {available} CPIs; cannot take {cfg.cpi_count} from CPI "
                f"{cfg.cpi_start} with stride {cfg.cpi_stride}"
            )
        idx = idx[: cfg.cpi_count]
    if not idx:
        raise SceneRangeError(f"CPI {cfg.cpi_start} lies beyond the scene's {available} CPIs")
    return idx


@dataclass
class ModeProducts:
    """Per-CPI products of one waveform mode."""

    hrrp: list = field(default_factory=list)
    spectrogram: list = field(default_factory=list)
    psl: list = field(default_factory=list)
    rdmap: np.ndarray | None = None


@dataclass
class Products:
    times: np.ndarray
    cpis: list
    range_axis: np.ndarray
    doppler_axis: np.ndarray
    wavelength: float
    modes: dict

    @property
    def velocity_axis(self) -> np.ndarray:
        return self.doppler_axis * self.wavelength / 2


def simulate(cfg: ScenarioConfig, scene: Scene | None = None, threads: int = 1, progress=None) -> Products:
    """Run the receive chain over the configured CPIs for every mode.

    Each CPI is independent (its scatterer states and noise depend only on
    the seed and CPI index), so ``threads`` changes speed, not results.
    """
    params = cfg.radar
    if scene is None:
        scene = build_scene(cfg)
    cpis = cpi_indices(cfg, scene)
    pair = make_golay_pair(int(np.log2(params.fast_time_bins)))
    trains = {m: schedule_train(pair, params.packets_per_cpi, m) for m in cfg.modes}
    n_p = noise_power(cfg)
    prod = cfg.products
    want = set(cfg.outputs)
    rd_pos = prod["rdmap_cpi"] if "rdmap" in want else -1
    if rd_pos >= len(cpis):
        raise SceneRangeError(f"rdmap_cpi {rd_pos} exceeds the {len(cpis)} simulated CPIs")
    guard = tuple(int(g) for g in np.broadcast_to(np.atleast_1d(prod["psl_guard_bins"]), (2,)))
    hold = cfg.scene.get("visibility_hold", "cpi")
    vis = cfg.scene.get("visibility_prob", 0.5)

    def states_for(c):
        if scene is None:
            pt = cfg.scene["point"]
            return point_states(
                params,
                pt["range_m"],
                pt.get("velocity_mps", 0.0),
                pt.get("amplitude", 1.0),
                cpi_index=c,
                range_walk=pt.get("range_walk", True),
            )
        return sample_scene(
            scene, params, c, cfg.seed, visibility_prob=vis, visibility_hold=hold, alpha=cfg.alpha
        )

    def one_cpi(pos_c):
        pos, c = pos_c
        states = states_for(c)
        out = {}
        for mode, train in trains.items():
            rx = synthesize_rx(train, states, params, n_p, cfg.seed, c)
            est = channel_estimates(rx, train, cfg.processing)
            res = {"hrrp": est.mean(axis=0)}
            if "spectrogram" in want:
                res["spectrogram"] = doppler_transform(est, prod["spectrogram_window"]).sum(axis=0)
            if "psl" in want or pos == rd_pos:
                rd = doppler_transform(est, prod["rdmap_window"])
                if "psl" in want:
                    res["psl"] = psl(rd, guard, prod["psl_region"])
                if pos == rd_pos:
                    res["rdmap"] = rd
            out[mode] = res
        return out

    modes = {m: ModeProducts() for m in cfg.modes}
    work = list(enumerate(cpis))
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        for k, res in enumerate(pool.map(one_cpi, work)):
            for mode, r in res.items():
                mp = modes[mode]
                mp.hrrp.append(r["hrrp"])
                if "spectrogram" in r:
                    mp.spectrogram.append(r["spectrogram"])
                if "psl" in r:
                    mp.psl.append(r["psl"])
                if "rdmap" in r:
                    mp.rdmap = r["rdmap"]
            if progress is not None:
                progress(k + 1, len(cpis))

    start = 0.0 if scene is None else scene.start_time
    times = start + (np.asarray(cpis) + 0.5) * params.cpi_duration
    d = params.packets_per_cpi // 2 if cfg.processing == "pair" else params.packets_per_cpi
    axis = doppler_axis(d, slow_time_interval(params, cfg.processing))
    return Products(times, cpis, params.range_axis(), axis, params.wavelength, modes)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_products(cfg: ScenarioConfig, products: Products, out_dir, fmt: str = "both") -> list:
    """Write the requested products; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_on, png_on = fmt in ("csv", "both"), fmt in ("png", "both") and cfg.products.get("png", True)
    floor = cfg.products["floor_db"]
    notch = cfg.products["notch_width_bins"]
    vel = products.velocity_axis
    written = []

    def emit(stem, values, rows, cols, row_label, col_label):
        if csv_on:
            p = out / f"{stem}.csv"
            write_matrix_csv(p, values, rows, cols, row_label, col_label)
            written.append(p)
        if png_on:
            p = out / f"{stem}.png"
            write_heatmap_png(p, values, floor)
            written.append(p)

    for mode, mp in products.modes.items():
        tag = mode.lower()
        if "hrrp" in cfg.outputs:
            emit(f"hrrp_{tag}", np.stack(mp.hrrp), products.times, products.range_axis, "time_s", "range_m")
        if "spectrogram" in cfg.outputs:
            sp = Spectrogram(np.stack(mp.spectrogram), products.doppler_axis, products.times, products.wavelength)
            if notch:
                sp = notch_zero_doppler(sp, notch)
            emit(f"spectrogram_{tag}", sp.values, products.times, vel, "time_s", "velocity_mps")
        if "rdmap" in cfg.outputs and mp.rdmap is not None:
            emit(f"rdmap_{tag}", mp.rdmap, products.range_axis, vel, "range_m", "velocity_mps")
    if "psl" in cfg.outputs and csv_on:
        p = out / "psl.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mode", "cpi_index", "time_s", "psl_db"])
            for mode, mp in products.modes.items():
                for c, t, v in zip(products.cpis, products.times, mp.psl):
                    w.writerow([mode, c, f"{t:.10g}", f"{v:.6f}"])
        written.append(p)
    return written


def write_roc(cfg: ScenarioConfig, reports: dict, out_dir, fmt: str = "both") -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        p = out / "roc.csv"
        write_report_csv(p, reports)
        written.append(p)
        p = out / "roc_histograms.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mode", "snr_db", "bin_lo_dbsm", "bin_hi_dbsm", "target_count", "noise_count"])
            for mode, rep in reports.items():
                e = rep.hist_edges
                for i, snr in enumerate(rep.snr_grid):
                    tc, nc = rep.histograms(i)
                    for lo, hi, a, b in zip(e[:-1], e[1:], tc, nc):
                        w.writerow([mode, f"{snr:.10g}", f"{lo:.10g}", f"{hi:.10g}", int(a), int(b)])
        written.append(p)
        p = out / "roc_pd_at_pfa.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mode", "snr_db", "threshold_dbsm", "pd", "pfa_at_minus15_dbsm"])
            for mode, rep in reports.items():
                pfa15 = rep.pfa_at(-15.0)
                for s, g, pd, pf in zip(rep.snr_grid, rep.threshold_at_pfa, rep.pd_at_pfa, pfa15):
                    w.writerow([mode, f"{s:.10g}", f"{g:.10g}", f"{pd:.10g}", f"{pf:.10g}"])
        written.append(p)
    p = out / "roc_summary.txt"
    p.write_text(summary_table(reports) + "\n")
    written.append(p)
    return written


def run_scenario(cfg: ScenarioConfig, out_dir, fmt: str = "both", threads: int = 1, progress=None) -> Path:
    """Simulate ``cfg``, write its products and a manifest; returns the manifest path."""
    out = Path(out_dir)
    scene = build_scene(cfg)
    files = []
    image_products = [o for o in cfg.outputs if o != "roc"]
    if image_products:
        products = simulate(cfg, scene, threads, progress)
        files += write_products(cfg, products, out, fmt)
    if "roc" in cfg.outputs:
        reports = run_roc_modes(scene, detection_config(cfg), cfg.modes, cfg.radar, progress)
        files += write_roc(cfg, reports, out, fmt)
    manifest = {
        "name": cfg.name,
        "config_sha256": cfg.config_hash(),
        "seed": cfg.seed,
        "modes": list(cfg.modes),
        "outputs": list(cfg.outputs),
        "versions": {
            "jrc11ad": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "files": {p.name: _sha256(p) for p in sorted(files)},
    }
    path = out / "manifest.json"
    out.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
