"""Doppler-resilient 802.11ad joint radar-communications simulator.

Golay complementary pulse trains (standard alternating or Prouhet-Thue-Morse
scheduled), scattering-centre models of cars, bicycles and pedestrians,
matched-filter radar products and GLRT-style detection statistics.
"""

__version__ = "0.1.0"

from .waveform import (
    GolayPair,
    GolayTrain,
    Mode,
    ParameterError,
    RadarParams,
    complementarity_profile,
    make_golay_pair,
    make_ptm,
    schedule_train,
    weighted_autocorr_sum,
)
from .scene import (
    Material,
    Primitive,
    Scene,
    SceneRangeError,
    ScattererTrack,
    fresnel_coefficient,
    rcs_cylinder,
    rcs_ellipsoid,
    rcs_plate,
    reflectivity,
    sample_scene,
)
from .targets import synth_bicycle, synth_car, synth_pedestrian
from .echo import RxCpi, synthesize_rx
from .processing import (
    RangeDopplerMap,
    channel_estimate,
    channel_estimates,
    hrrp,
    notch_zero_doppler,
    psl,
    range_doppler,
    spectrogram,
)
from .detection import DetectionConfig, DetectionReport, glrt_statistic, integrate_rcs, run_roc
from .io import load_scene, save_scene

__all__ = [
    "DetectionConfig",
    "DetectionReport",
    "GolayPair",
    "GolayTrain",
    "Material",
    "Mode",
    "ParameterError",
    "Primitive",
    "RadarParams",
    "RangeDopplerMap",
    "RxCpi",
    "ScattererTrack",
    "Scene",
    "SceneRangeError",
    "channel_estimate",
    "channel_estimates",
    "complementarity_profile",
    "fresnel_coefficient",
    "glrt_statistic",
    "hrrp",
    "integrate_rcs",
    "load_scene",
    "make_golay_pair",
    "make_ptm",
    "notch_zero_doppler",
    "psl",
    "range_doppler",
    "rcs_cylinder",
    "rcs_ellipsoid",
    "rcs_plate",
    "reflectivity",
    "run_roc",
    "sample_scene",
    "save_scene",
    "schedule_train",
    "spectrogram",
    "synth_bicycle",
    "synth_car",
    "synth_pedestrian",
    "synthesize_rx",
    "weighted_autocorr_sum",
]
