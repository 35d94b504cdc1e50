"""Built-in scenarios, expressed in the scenario configuration schema."""

from __future__ import annotations

import copy

import yaml

# The radar sits 0.6 m above the road, a bumper-height mount.
_RADAR_POS = [0.0, 0.0, 0.6]

# Car drives out, turns round at about 31 m and returns alongside.
_CAR_UTURN = {
    "type": "car",
    "waypoints_m": [[4, 1.5], [18, 1.5], [28, 1.0], [31, -1.0], [28, -3.0], [18, -3.5], [4, -3.5]],
    "speed_mps": [[0, 0], [2, 4], [13, 4], [16.5, 1]],
}
# Pedestrian walks in towards the radar, loops and walks back out.
_PED_LOOP = {
    "type": "pedestrian",
    "waypoints_m": [[20, -7], [9, -7], [7, -5.5], [9, -4], [20, -4]],
    "speed_mps": 1.4,
}

PRESETS = {
    "fig4-point": {
        "description": "Point target at 20 m with the Doppler of 10 m/s, noise free: range-Doppler "
        "ambiguity map and peak-to-sidelobe level for both waveforms.",
        "seed": 0,
        "waveform_mode": "both",
        "radar": {"noise_power_w": 0.0},
        "scene": {
            "point": {"range_m": [20.0], "velocity_mps": [10.0], "amplitude": [1.0], "range_walk": False}
        },
        "cpi_count": 1,
        "outputs": ["rdmap", "psl", "hrrp"],
    },
    "car-uturn": {
        "description": "Car accelerating away, turning round and returning: range-time and "
        "Doppler-time signatures.",
        "seed": 0,
        "waveform_mode": "both",
        "scene": {"radar_position_m": _RADAR_POS, "duration_s": 16.6, "targets": [_CAR_UTURN]},
        "cpi_stride": 16,
        "outputs": ["hrrp", "spectrogram"],
    },
    "bicycle-turns": {
        "description": "Bicycle starting from rest, taking two right turns and braking to a halt.",
        "seed": 0,
        "waveform_mode": "both",
        "scene": {
            "radar_position_m": _RADAR_POS,
            "duration_s": 8.0,
            "targets": [
                {
                    "type": "bicycle",
                    "waypoints_m": [[6, 3], [13, 3], [16, 1.5], [16, -1.5], [13, -3], [6, -3]],
                    "speed_mps": [[0, 0], [1, 3], [6.5, 3], [8, 0]],
                }
            ],
        },
        "cpi_stride": 8,
        "outputs": ["hrrp", "spectrogram"],
    },
    "pedestrian-walk": {
        "description": "Pedestrian walking in, looping and walking out: limb micro-Doppler.",
        "seed": 0,
        "waveform_mode": "both",
        "scene": {"radar_position_m": _RADAR_POS, "duration_s": 16.6, "targets": [_PED_LOOP]},
        "cpi_stride": 16,
        "outputs": ["hrrp", "spectrogram"],
    },
    "multi-target": {
        "description": "Car and pedestrian together in the radar's field of view.",
        "seed": 0,
        "waveform_mode": "both",
        "scene": {"radar_position_m": _RADAR_POS, "duration_s": 16.6, "targets": [_CAR_UTURN, _PED_LOOP]},
        "cpi_stride": 16,
        "outputs": ["hrrp", "spectrogram"],
    },
    "roc-sweep": {
        "description": "Detection sweep on the car plus pedestrian scene: Pd/Pfa against SNR "
        "and the minimum-SNR table, every CPI of the 16.6 s scene.",
        "seed": 0,
        "waveform_mode": "both",
        "scene": {"radar_position_m": _RADAR_POS, "duration_s": 16.6, "targets": [_CAR_UTURN, _PED_LOOP]},
        "outputs": ["roc"],
        "detection": {
            "snr_grid_db": [-20.0, -13.75, -7.5, -1.25, 5.0],
            "thresholds_dbsm": {"start": -60.0, "stop": 40.0, "step": 0.25},
            "target_pfa": 1.0e-3,
        },
    },
}


def preset_names() -> list:
    return list(PRESETS)


def preset(name: str) -> dict:
    """A deep copy of the named preset's configuration mapping."""
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def preset_yaml(name: str) -> str:
    return yaml.safe_dump(preset(name), sort_keys=False, default_flow_style=None)
