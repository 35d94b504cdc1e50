"""Scenario configuration: YAML with unit-suffixed keys.

A scenario names the radar profile, waveform mode(s), exactly one scene
source and the products to write. Unknown keys are errors. Problems are
collected as :class:`Diagnostic` records anchored to the YAML line they come
from, so ``validate`` can report all of them at once.

Example::

    seed: 7
    waveform_mode: both
    radar: {carrier_ghz: 60, noise_power_dbm: -100}
    scene:
      point: {range_m: [20.0], velocity_mps: [10.0]}
    cpi_count: 1
    outputs: [rdmap, psl]
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .scene import ALPHA_60GHZ
from .waveform import RadarParams

OUTPUTS = ("hrrp", "rdmap", "spectrogram", "roc", "psl")
TARGET_TYPES = ("car", "bicycle", "pedestrian")
SCENE_SOURCES = ("point", "targets", "trajectory_file")

_TOP_KEYS = {
    "name", "description", "seed", "radar", "waveform_mode", "processing", "scene",
    "cpi_start", "cpi_count", "cpi_stride", "snr_db", "outputs", "products", "detection",
}
_RADAR_KEYS = {
    "carrier_ghz", "chip_rate_ghz", "pri_us", "packets_per_cpi", "fast_time_bins",
    "noise_power_w", "noise_power_dbm",
}
_SCENE_KEYS = {
    "radar_position_m", "duration_s", "attenuation_db_per_km", "visibility_prob",
    "visibility_hold", *SCENE_SOURCES,
}
_POINT_KEYS = {"range_m", "velocity_mps", "amplitude", "range_walk"}
_TARGET_KEYS = {
    "car": {"type", "name", "waypoints_m", "speed_mps", "wheel_radius_m", "rim_scatterers"},
    "bicycle": {"type", "name", "waypoints_m", "speed_mps", "front_spokes", "rear_spokes"},
    "pedestrian": {"type", "name", "waypoints_m", "speed_mps", "gait_amplitude", "stride_length_m"},
}
_PRODUCT_KEYS = {
    "floor_db", "spectrogram_window", "rdmap_window", "rdmap_cpi", "notch_width_bins",
    "psl_region", "psl_guard_bins", "png",
}
_DETECTION_KEYS = {
    "snr_grid_db", "thresholds_dbsm", "target_pfa", "num_cpis", "cpi_stride", "first_cpi",
    "pd_levels", "noise_sets", "guard_bins", "noise_placement", "hist_bin_db", "coherent",
    "hrrp", "route", "reference_rcs_dbsm", "reference_range_m",
}


@dataclass(frozen=True)
class Diagnostic:
    """One configuration problem. ``severity`` is ``"error"`` or ``"range"``
    (scene incompatible with the radar: beyond the unambiguous range or too
    short for the CPI window)."""

    message: str
    line: int | None = None
    path: str = ""
    severity: str = "error"

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        key = f"{self.path}: " if self.path else ""
        return f"{where}{key}{self.message}"


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def exit_code(self) -> int:
        return 2 if any(d.severity == "error" for d in self.diagnostics) else 3


# -- YAML with line numbers ------------------------------------------------


def _plain(node, path, lines):
    """Convert a composed YAML node to Python data, recording each path's line."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = str(_plain(key_node, path, {}))
            sub = f"{path}.{key}" if path else key
            out[key] = _plain(value_node, sub, lines)
            lines[sub] = key_node.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_plain(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


def parse_yaml(text: str, source: str = "<config>"):
    """Parse YAML text into ``(data, lines)``; ``lines`` maps dotted key paths to line numbers."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError([Diagnostic(f"invalid YAML: {getattr(exc, 'problem', exc)}", line)]) from None
    if node is None:
        raise ConfigError([Diagnostic("configuration is empty", 1)])
    lines = {}
    data = _plain(node, "", lines)
    if not isinstance(data, dict):
        raise ConfigError([Diagnostic("configuration must be a mapping", 1)])
    return data, lines


# -- resolved configuration ------------------------------------------------


@dataclass
class ScenarioConfig:
    """Validated scenario. ``raw`` keeps the parsed mapping for hashing."""

    raw: dict
    radar: RadarParams
    modes: tuple
    processing: str
    scene: dict
    cpi_start: int
    cpi_count: int | None
    cpi_stride: int
    snr_db: float | None
    outputs: tuple
    products: dict
    detection: dict
    seed: int = 0
    name: str = ""
    base_dir: Path = field(default_factory=Path.cwd)

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode()).hexdigest()

    @property
    def alpha(self) -> float:
        db_km = self.scene.get("attenuation_db_per_km")
        return ALPHA_60GHZ if db_km is None else db_km / 1000.0 / (20.0 / np.log(10.0))


class _Checker:
    def __init__(self, lines):
        self.lines = lines
        self.diags = []

    def error(self, path, message, severity="error"):
        line = None
        probe = path
        while probe and line is None:
            line = self.lines.get(probe)
            probe = probe.rsplit(".", 1)[0] if "." in probe else ""
        self.diags.append(Diagnostic(message, line, path, severity))

    def keys(self, mapping, allowed, path):
        if not isinstance(mapping, dict):
            self.error(path, "must be a mapping")
            return False
        for key in mapping:
            if key not in allowed:
                self.error(f"{path}.{key}" if path else key, "unknown key")
        return True

    def number(self, value, path, *, integer=False, positive=False, minimum=None):
        ok_type = isinstance(value, int) if integer else isinstance(value, (int, float))
        if isinstance(value, bool) or not ok_type:
            self.error(path, f"must be {'an integer' if integer else 'a number'}")
            return None
        if positive and value <= 0:
            self.error(path, "must be positive")
            return None
        if minimum is not None and value < minimum:
            self.error(path, f"must be >= {minimum}")
            return None
        return value

    def vector(self, value, path, length=None, width=None):
        try:
            a = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            self.error(path, "must be a numeric list")
            return None
        if length is not None and a.shape != (length,):
            self.error(path, f"must be a list of {length} numbers")
            return None
        if width is not None and (a.ndim != 2 or a.shape[1] != width or a.shape[0] < 2):
            self.error(path, "must be a list of at least two [a, b] pairs")
            return None
        if not np.all(np.isfinite(a)):
            self.error(path, "must be finite")
            return None
        return a


def _check_radar(c: _Checker, raw):
    if raw is None:
        return RadarParams()
    if not c.keys(raw, _RADAR_KEYS, "radar"):
        return None
    if "noise_power_w" in raw and "noise_power_dbm" in raw:
        c.error("radar.noise_power_dbm", "give noise_power_w or noise_power_dbm, not both")
        return None
    if "packets_per_cpi" in raw:
        p = raw["packets_per_cpi"]
        if not isinstance(p, int) or isinstance(p, bool) or p < 2 or p % 2:
            c.error("radar.packets_per_cpi", "P must be an even integer >= 2 (packets form Golay pairs)")
            return None
    if "fast_time_bins" in raw:
        n = raw["fast_time_bins"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 2 or n & (n - 1):
            c.error("radar.fast_time_bins", "must be a power of two >= 2")
            return None
    for key in ("carrier_ghz", "chip_rate_ghz", "pri_us"):
        if key in raw and c.number(raw[key], f"radar.{key}", positive=True) is None:
            return None
    try:
        return RadarParams.from_dict(raw)
    except (TypeError, ValueError) as exc:
        c.error("radar", str(exc))
        return None


def _check_target(c: _Checker, t, path, radar):
    if not isinstance(t, dict) or t.get("type") not in TARGET_TYPES:
        c.error(f"{path}.type", f"target type must be one of {', '.join(TARGET_TYPES)}")
        return
    c.keys(t, _TARGET_KEYS[t["type"]], path)
    if "waypoints_m" not in t:
        c.error(path, "missing waypoints_m")
        return
    wp = c.vector(t["waypoints_m"], f"{path}.waypoints_m", width=2)
    if wp is not None and radar is not None:
        dist = np.hypot(wp[:, 0], wp[:, 1])
        if dist.max() >= radar.max_range:
            c.error(
                f"{path}.waypoints_m",
                f"waypoint at {dist.max():.2f} m lies beyond the {radar.max_range:.2f} m unambiguous range",
                "range",
            )
    speed = t.get("speed_mps", None)
    if speed is not None and not isinstance(speed, (int, float)):
        c.vector(speed, f"{path}.speed_mps", width=2)
    for key in ("wheel_radius_m", "gait_amplitude", "stride_length_m"):
        if key in t:
            c.number(t[key], f"{path}.{key}", positive=key != "gait_amplitude", minimum=0)
    for key in ("rim_scatterers", "front_spokes", "rear_spokes"):
        if key in t:
            c.number(t[key], f"{path}.{key}", integer=True, positive=True)


def _check_scene(c: _Checker, raw, radar, base_dir):
    if raw is None:
        c.error("scene", "missing scene (give one of point, targets, trajectory_file)")
        return None
    if not c.keys(raw, _SCENE_KEYS, "scene"):
        return None
    sources = [s for s in SCENE_SOURCES if s in raw]
    if len(sources) != 1:
        c.error("scene", f"give exactly one scene source out of {', '.join(SCENE_SOURCES)}")
        return None
    scene = dict(raw)
    if "radar_position_m" in raw:
        c.vector(raw["radar_position_m"], "scene.radar_position_m", length=3)
    if "duration_s" in raw:
        c.number(raw["duration_s"], "scene.duration_s", positive=True)
    if "attenuation_db_per_km" in raw:
        c.number(raw["attenuation_db_per_km"], "scene.attenuation_db_per_km", minimum=0)
    if "visibility_prob" in raw:
        v = c.number(raw["visibility_prob"], "scene.visibility_prob", minimum=0)
        if v is not None and v > 1:
            c.error("scene.visibility_prob", "must lie in [0, 1]")
    hold = raw.get("visibility_hold", "cpi")
    if hold not in ("cpi", "pair", "packet") and not (isinstance(hold, int) and hold > 0):
        c.error("scene.visibility_hold", "must be cpi, pair, packet or a positive integer")
    elif radar is not None and isinstance(hold, int) and radar.packets_per_cpi % hold:
        c.error("scene.visibility_hold", f"must divide P = {radar.packets_per_cpi}")

    src = sources[0]
    if src == "point":
        pt = raw["point"]
        if c.keys(pt, _POINT_KEYS, "scene.point"):
            if "range_m" not in pt:
                c.error("scene.point", "missing range_m")
                return scene
            r = c.vector(np.atleast_1d(pt["range_m"]), "scene.point.range_m")
            n = None if r is None else r.size
            for key in ("velocity_mps", "amplitude"):
                if key in pt:
                    v = c.vector(np.atleast_1d(pt[key]), f"scene.point.{key}")
                    if v is not None and n is not None and v.size not in (1, n):
                        c.error(f"scene.point.{key}", f"needs 1 or {n} values")
            if not isinstance(pt.get("range_walk", True), bool):
                c.error("scene.point.range_walk", "must be true or false")
            if r is not None and np.any(r <= 0):
                c.error("scene.point.range_m", "ranges must be positive")
            elif r is not None and radar is not None and r.max() >= radar.max_range:
                c.error(
                    "scene.point.range_m",
                    f"{r.max():.2f} m lies beyond the {radar.max_range:.2f} m unambiguous range",
                    "range",
                )
    elif src == "targets":
        targets = raw["targets"]
        if not isinstance(targets, list) or not targets:
            c.error("scene.targets", "must be a nonempty list")
        else:
            if "duration_s" not in raw:
                c.error("scene.duration_s", "generated targets need duration_s")
            for i, t in enumerate(targets):
                _check_target(c, t, f"scene.targets[{i}]", radar)
    else:
        path = Path(raw["trajectory_file"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            c.error("scene.trajectory_file", f"file not found: {path}")
        scene["trajectory_file"] = str(path)
    return scene


def _check_products(c: _Checker, raw):
    out = {
        "floor_db": -60.0,
        "spectrogram_window": "hann",
        "rdmap_window": None,
        "rdmap_cpi": 0,
        "notch_width_bins": 0,
        "psl_region": "range",
        "psl_guard_bins": [2, 2],
        "png": True,
    }
    if raw is None:
        return out
    if not c.keys(raw, _PRODUCT_KEYS, "products"):
        return out
    out.update(raw)
    f = c.number(out["floor_db"], "products.floor_db")
    if f is not None and f >= 0:
        c.error("products.floor_db", "must be negative")
    for key in ("spectrogram_window", "rdmap_window"):
        if out[key] not in (None, "none", "hann"):
            c.error(f"products.{key}", "must be none or hann")
        if out[key] == "none":
            out[key] = None
    c.number(out["rdmap_cpi"], "products.rdmap_cpi", integer=True, minimum=0)
    c.number(out["notch_width_bins"], "products.notch_width_bins", integer=True, minimum=0)
    if out["psl_region"] not in ("range", "box"):
        c.error("products.psl_region", "must be range or box")
    g = c.vector(np.atleast_1d(out["psl_guard_bins"]), "products.psl_guard_bins")
    if g is not None and (g.size not in (1, 2) or np.any(g < 0)):
        c.error("products.psl_guard_bins", "must be one or two nonnegative integers")
    return out


def _check_detection(c: _Checker, raw):
    if raw is None:
        return {}
    if not c.keys(raw, _DETECTION_KEYS, "detection"):
        return {}
    out = dict(raw)
    if "snr_grid_db" in raw:
        v = c.vector(np.atleast_1d(raw["snr_grid_db"]), "detection.snr_grid_db")
        if v is not None and v.size == 0:
            c.error("detection.snr_grid_db", "must be nonempty")
    th = raw.get("thresholds_dbsm")
    if isinstance(th, dict):
        if set(th) != {"start", "stop", "step"}:
            c.error("detection.thresholds_dbsm", "range form needs exactly start, stop and step")
        elif not (isinstance(th["step"], (int, float)) and th["step"] > 0):
            c.error("detection.thresholds_dbsm.step", "must be positive")
        else:
            out["thresholds_dbsm"] = list(np.arange(th["start"], th["stop"] + th["step"] / 2, th["step"]))
    elif th is not None:
        v = c.vector(np.atleast_1d(th), "detection.thresholds_dbsm")
        if v is not None and np.any(np.diff(v) < 0):
            c.error("detection.thresholds_dbsm", "must be sorted ascending")
    if "target_pfa" in raw:
        p = c.number(raw["target_pfa"], "detection.target_pfa", positive=True)
        if p is not None and p >= 1:
            c.error("detection.target_pfa", "must lie in (0, 1)")
    for key in ("num_cpis", "cpi_stride", "noise_sets", "guard_bins"):
        if key in raw:
            c.number(raw[key], f"detection.{key}", integer=True, positive=key != "guard_bins", minimum=0)
    if "first_cpi" in raw:
        c.number(raw["first_cpi"], "detection.first_cpi", integer=True, minimum=0)
    if raw.get("noise_placement", "near") not in ("near", "spread"):
        c.error("detection.noise_placement", "must be near or spread")
    if raw.get("hrrp", "doppler_max") not in ("doppler_max", "coherent"):
        c.error("detection.hrrp", "must be doppler_max or coherent")
    if raw.get("route", "processed") not in ("processed", "full"):
        c.error("detection.route", "must be processed or full")
    if "coherent" in raw and not isinstance(raw["coherent"], bool):
        c.error("detection.coherent", "must be true or false")
    return out


def check_config(data: dict, lines: dict, base_dir=None) -> tuple:
    """Static checks on parsed YAML. Returns ``(config or None, diagnostics)``."""
    base_dir = Path.cwd() if base_dir is None else Path(base_dir)
    c = _Checker(lines)
    c.keys(data, _TOP_KEYS, "")
    radar = _check_radar(c, data.get("radar"))

    mode = data.get("waveform_mode", "both")
    if mode not in ("SG", "MG", "both"):
        c.error("waveform_mode", "must be SG, MG or both")
        modes = ()
    else:
        modes = ("SG", "MG") if mode == "both" else (mode,)
    processing = data.get("processing", "pair")
    if processing not in ("pair", "packet"):
        c.error("processing", "must be pair or packet")

    scene = _check_scene(c, data.get("scene"), radar, base_dir)

    seed = data.get("seed", 0)
    if c.number(seed, "seed", integer=True, minimum=0) is None:
        seed = 0
    cpi_start = data.get("cpi_start", 0)
    c.number(cpi_start, "cpi_start", integer=True, minimum=0)
    cpi_count = data.get("cpi_count")
    if cpi_count is not None:
        c.number(cpi_count, "cpi_count", integer=True, positive=True)
    cpi_stride = data.get("cpi_stride", 1)
    c.number(cpi_stride, "cpi_stride", integer=True, positive=True)

    snr_db = data.get("snr_db")
    if snr_db is not None:
        c.number(snr_db, "snr_db")
        if isinstance(data.get("radar"), dict) and {"noise_power_w", "noise_power_dbm"} & set(data["radar"]):
            c.error("snr_db", "give snr_db or a radar noise power, not both")

    outputs = data.get("outputs")
    if not isinstance(outputs, list) or not outputs:
        c.error("outputs", f"must be a nonempty list drawn from {', '.join(OUTPUTS)}")
        outputs = []
    else:
        for i, o in enumerate(outputs):
            if o not in OUTPUTS:
                c.error(f"outputs[{i}]", f"unknown product {o!r}; choose from {', '.join(OUTPUTS)}")
        if "roc" in outputs and scene is not None and "targets" not in scene and "trajectory_file" not in scene:
            c.error("outputs", "roc needs an extended-target scene (targets or trajectory_file)")

    products = _check_products(c, data.get("products"))
    detection = _check_detection(c, data.get("detection"))

    # CPI window against the scene duration, when it is known statically
    window_ok = all(
        isinstance(v, int) and not isinstance(v, bool) and v >= lo
        for v, lo in ((cpi_start, 0), (cpi_stride, 1), (cpi_count if cpi_count is not None else 1, 1))
    )
    duration = (scene or {}).get("duration_s")
    if radar is not None and isinstance(duration, (int, float)) and duration > 0 and window_ok:
        available = int(np.floor(duration / radar.cpi_duration + 1e-9))
        default = len(range(cpi_start, available, cpi_stride))
        count = cpi_count if cpi_count is not None else default
        last = cpi_start + (count - 1) * cpi_stride
        if count < 1 or last >= available:
            c.error(
                "cpi_count" if cpi_count is not None else "cpi_start",
                f"CPI window ends at CPI {last} but duration_s = {duration} s "
                f"holds only {available} CPIs of {radar.cpi_duration * 1e3:.3f} ms",
                "range",
            )
    if "point" in (scene or {}) and cpi_count is None:
        cpi_count = 1

    if c.diags:
        return None, c.diags
    cfg = ScenarioConfig(
        raw=data,
        radar=radar,
        modes=modes,
        processing=processing,
        scene=scene,
        cpi_start=cpi_start,
        cpi_count=cpi_count,
        cpi_stride=cpi_stride,
        snr_db=snr_db,
        outputs=tuple(dict.fromkeys(outputs)),
        products=products,
        detection=detection,
        seed=seed,
        name=str(data.get("name", "")),
        base_dir=base_dir,
    )
    return cfg, []


def load_config(source, base_dir=None) -> ScenarioConfig:
    """Parse and check a configuration file path or mapping; raise :class:`ConfigError` on problems."""
    if isinstance(source, dict):
        data, lines = source, {}
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError([Diagnostic(f"cannot read {path}: {exc.strerror}")]) from None
        data, lines = parse_yaml(text, str(path))
        base_dir = path.parent if base_dir is None else base_dir
    cfg, diags = check_config(data, lines, base_dir)
    if diags:
        raise ConfigError(diags)
    return cfg


def validate(source, base_dir=None) -> list:
    """All diagnostics for a configuration, empty when it is valid."""
    try:
        load_config(source, base_dir)
    except ConfigError as exc:
        return exc.diagnostics
    return []
