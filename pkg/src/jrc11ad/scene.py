"""Scattering-centre scene model: primitives, RCS, reflectivity and sampling.

A :class:`Scene` holds one :class:`ScattererTrack` per point scatterer. Each
track carries a primitive (shape, size, material) and a pose time series at
the animation frame rate. :func:`sample_scene` resamples every track to one
pose per PRI for a given CPI and evaluates range, radial velocity, aspect,
RCS and complex reflectivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .waveform import ParameterError, RadarParams

VACUUM_PERMITTIVITY = 8.8541878128e-12
# 16 dB/km oxygen absorption at 60 GHz, converted to amplitude nepers per metre
ALPHA_60GHZ = 16.0 / 1000.0 / (20.0 / np.log(10.0))


class SceneRangeError(ValueError):
    """A CPI window or trajectory falls outside the scene's coverage."""


class Shape(str, Enum):
    PLATE = "plate"
    CYLINDER = "cylinder"
    ELLIPSOID = "ellipsoid"


@dataclass(frozen=True)
class Material:
    """Planar-interface material. ``kind`` is ``metal``, ``glass`` or ``dielectric``."""

    kind: str
    rel_permittivity: float = 1.0
    conductivity: float = 0.0

    def __post_init__(self):
        if self.kind not in ("metal", "glass", "dielectric"):
            raise ParameterError(f"unknown material {self.kind!r}")
        if self.rel_permittivity < 1.0 or self.conductivity < 0:
            raise ParameterError("need rel_permittivity >= 1 and conductivity >= 0")


METAL = Material("metal")
GLASS = Material("glass", 6.5, 0.0)
SKIN = Material("dielectric", 80.0, 2.0)


def dielectric(rel_permittivity: float, conductivity: float = 0.0) -> Material:
    return Material("dielectric", rel_permittivity, conductivity)


@dataclass(frozen=True)
class Primitive:
    """Canonical scatterer shape.

    ``dim1``/``dim2`` are (area m^2, aspect dimension m) for a plate,
    (radius, length) for a cylinder and (radius, major length) for an
    ellipsoid.
    """

    shape: Shape
    dim1: float
    dim2: float
    material: Material = METAL

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        if not (self.dim1 > 0 and self.dim2 > 0):
            raise ParameterError("primitive dimensions must be positive")

    def rcs(self, theta, wavelength: float):
        return self.rcs_of(self.shape, self.dim1, self.dim2, theta, wavelength)

    @staticmethod
    def rcs_of(shape, dim1, dim2, theta, wavelength):
        """RCS of ``shape`` with (broadcastable) dimensions at aspect ``theta``."""
        shape = Shape(shape)
        if shape is Shape.PLATE:
            return rcs_plate(dim1, dim2, theta, wavelength)
        if shape is Shape.CYLINDER:
            return rcs_cylinder(dim1, dim2, theta, wavelength)
        return rcs_ellipsoid(dim1, dim2, theta)


def plate(area, dim, material=METAL):
    return Primitive(Shape.PLATE, area, dim, material)


def cylinder(radius, length, material=METAL):
    return Primitive(Shape.CYLINDER, radius, length, material)


def ellipsoid(radius, length, material=METAL):
    return Primitive(Shape.ELLIPSOID, radius, length, material)


def _sinc(x):
    # sin(x)/x with the x -> 0 limit
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def rcs_plate(area, dim, theta, wavelength):
    """Triangular plate RCS; ``theta`` is measured from the plate normal."""
    theta = np.asarray(theta, dtype=float)
    k = 2 * np.pi / wavelength
    peak = 4 * np.pi * area**2 / wavelength**2
    return peak * np.cos(theta) ** 2 * _sinc(k * dim * np.sin(theta / 2)) ** 4


def rcs_cylinder(radius, length, theta, wavelength):
    """Finite cylinder RCS; ``theta`` is measured from broadside."""
    theta = np.asarray(theta, dtype=float)
    k = 2 * np.pi / wavelength
    peak = 2 * np.pi * radius * length**2 / wavelength
    return peak * np.cos(theta) ** 2 * _sinc(k * length * np.sin(theta)) ** 2


def rcs_ellipsoid(radius, length, theta):
    """Ellipsoid RCS; ``theta`` is measured from the major axis."""
    theta = np.asarray(theta, dtype=float)
    num = 0.25 * radius**4 * length**2
    den = radius**2 * np.sin(theta) ** 2 + 0.25 * length**2 * np.cos(theta) ** 2
    return num / den


def fresnel_coefficient(material: Material, carrier_freq: float = 60e9) -> complex:
    """Normal-incidence reflection coefficient of an air/material interface."""
    if material.kind == "metal":
        return complex(-1.0)
    eps = material.rel_permittivity - 1j * material.conductivity / (
        2 * np.pi * carrier_freq * VACUUM_PERMITTIVITY
    )
    root = np.sqrt(eps)
    return complex((1 - root) / (1 + root))


def reflectivity(rcs, gamma, rng_range, visible, alpha: float = ALPHA_60GHZ):
    """Complex reflectivity ``zeta * Gamma * sqrt(sigma) * exp(-2 alpha r) / r**2``."""
    r = np.asarray(rng_range, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("reflectivity is singular at zero range")
    return (
        np.asarray(visible) * np.asarray(gamma) * np.sqrt(rcs) * np.exp(-2 * alpha * r) / r**2
    )


def aspect_angle(los, axis, shape) -> np.ndarray:
    """Aspect angle folded into ``[0, pi/2]``.

    ``los`` and ``axis`` are ``(..., 3)`` unit vectors. Plates and ellipsoids
    use the angle to ``axis`` (plate normal, major axis); cylinders use the
    angle to broadside, i.e. ``pi/2`` minus the angle to the cylinder axis.
    """
    c = np.clip(np.abs(np.sum(np.asarray(los) * np.asarray(axis), axis=-1)), 0.0, 1.0)
    angle = np.arccos(c)
    if Shape(shape) is Shape.CYLINDER:
        return np.pi / 2 - angle
    return angle


@dataclass(frozen=True)
class ScattererTrack:
    """Pose time series of one scatterer.

    ``target`` groups scatterers that belong to the same physical object
    (used for per-target ground truth); it defaults to the id prefix before
    the first ``.``.
    """

    id: str
    primitive: Primitive
    times: np.ndarray
    positions: np.ndarray
    axes: np.ndarray
    target: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        pos = np.asarray(self.positions, dtype=float)
        ax = np.asarray(self.axes, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ParameterError(f"track {self.id!r} needs at least two frames")
        if np.any(np.diff(t) <= 0):
            raise ParameterError(f"track {self.id!r} times must be strictly increasing")
        if pos.shape != (t.size, 3) or ax.shape != (t.size, 3):
            raise ParameterError(f"track {self.id!r} positions/axes must be (frames, 3)")
        norms = np.linalg.norm(ax, axis=1)
        if np.any(norms == 0):
            raise ParameterError(f"track {self.id!r} has a zero axis vector")
        ax = ax / norms[:, None]
        for name, value in (("times", t), ("positions", pos), ("axes", ax)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if not self.target:
            object.__setattr__(self, "target", self.id.split(".")[0])

    @property
    def frame_rate(self) -> float:
        return float((self.times.size - 1) / (self.times[-1] - self.times[0]))


@dataclass(frozen=True)
class Scene:
    tracks: tuple
    radar_position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        tracks = tuple(self.tracks)
        if not tracks:
            raise ParameterError("a scene needs at least one scatterer")
        ids = [t.id for t in tracks]
        if len(set(ids)) != len(ids):
            raise ParameterError("scatterer ids must be unique")
        object.__setattr__(self, "tracks", tracks)
        radar = np.asarray(self.radar_position, dtype=float).reshape(3)
        radar.setflags(write=False)
        object.__setattr__(self, "radar_position", radar)

    @property
    def start_time(self) -> float:
        return max(float(t.times[0]) for t in self.tracks)

    @property
    def end_time(self) -> float:
        return min(float(t.times[-1]) for t in self.tracks)

    @property
    def duration(self) -> float:
        return max(self.end_time - self.start_time, 0.0)

    @property
    def num_scatterers(self) -> int:
        return len(self.tracks)

    @property
    def targets(self) -> list:
        seen = []
        for t in self.tracks:
            if t.target not in seen:
                seen.append(t.target)
        return seen

    def num_cpis(self, params: RadarParams) -> int:
        # tiny tolerance so a duration of exactly k CPIs yields k
        return int(np.floor(self.duration / params.cpi_duration + 1e-9))

    def merged(self, other: "Scene") -> "Scene":
        return Scene(self.tracks + other.tracks, self.radar_position)

    def poses(self, t):
        """Interpolated positions and unit axes at times ``t``: two ``(T, B, 3)`` arrays."""
        t = np.asarray(t, dtype=float)
        grid = self._common_grid()
        if grid is not None:
            times, pos_all, ax_all = grid
            k = np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2)
            w = np.clip((t - times[k]) / (times[k + 1] - times[k]), 0.0, 1.0)[:, None, None]
            pos = (1 - w) * pos_all[k] + w * pos_all[k + 1]
            ax = (1 - w) * ax_all[k] + w * ax_all[k + 1]
        else:
            pos = np.empty((t.size, len(self.tracks), 3))
            ax = np.empty_like(pos)
            for b, track in enumerate(self.tracks):
                for j in range(3):
                    pos[:, b, j] = np.interp(t, track.times, track.positions[:, j])
                    ax[:, b, j] = np.interp(t, track.times, track.axes[:, j])
        ax /= np.linalg.norm(ax, axis=-1, keepdims=True)
        return pos, ax

    def _common_grid(self):
        """Stacked ``(times, positions, axes)`` when all tracks share one time grid."""
        cached = self.__dict__.get("_grid_cache")
        if cached is None:
            t0 = self.tracks[0].times
            same = all(
                t.times.shape == t0.shape and np.array_equal(t.times, t0) for t in self.tracks
            )
            if same:
                cached = (
                    t0,
                    np.stack([t.positions for t in self.tracks], axis=1),
                    np.stack([t.axes for t in self.tracks], axis=1),
                )
            else:
                cached = False
            object.__setattr__(self, "_grid_cache", cached)
        return cached or None


@dataclass(frozen=True)
class ScattererStates:
    """Per-packet scatterer state for one CPI; every array is ``(P, B)``."""

    range: np.ndarray
    radial_velocity: np.ndarray
    aspect: np.ndarray
    rcs: np.ndarray
    reflectivity: np.ndarray
    visible: np.ndarray
    wavelength: float
    pri: float
    cpi_index: int = 0
    ids: tuple = ()
    targets: tuple = ()

    @property
    def doppler(self) -> np.ndarray:
        return 2 * self.radial_velocity / self.wavelength

    @property
    def num_packets(self) -> int:
        return self.range.shape[0]

    @property
    def num_scatterers(self) -> int:
        return self.range.shape[1]

    def select(self, columns) -> "ScattererStates":
        """Subset of scatterers (columns) as a new state set."""
        cols = np.atleast_1d(np.asarray(columns))
        pick = lambda seq: tuple(np.asarray(seq, dtype=object)[cols]) if seq else ()
        return ScattererStates(
            self.range[:, cols], self.radial_velocity[:, cols], self.aspect[:, cols],
            self.rcs[:, cols], self.reflectivity[:, cols], self.visible[:, cols],
            self.wavelength, self.pri, self.cpi_index, pick(self.ids), pick(self.targets),
        )


def point_states(
    params: RadarParams, ranges, velocities, amplitudes=1.0, cpi_index: int = 0, *, range_walk: bool = True
):
    """States for non-fluctuating point targets moving radially at constant speed.

    With ``range_walk=False`` the delay stays at ``ranges`` while the phase
    still advances at the Doppler of ``velocities``: the delayed,
    Doppler-shifted replica that defines the ambiguity function.
    """
    r0 = np.atleast_1d(np.asarray(ranges, dtype=float))
    v = np.broadcast_to(np.asarray(velocities, dtype=float), r0.shape)
    a = np.broadcast_to(np.asarray(amplitudes, dtype=complex), r0.shape)
    t = (cpi_index * params.packets_per_cpi + np.arange(params.packets_per_cpi)) * params.pri
    rng_range = r0[None, :] + (v[None, :] * t[:, None] if range_walk else 0.0 * t[:, None])
    shape = rng_range.shape
    return ScattererStates(
        range=rng_range,
        radial_velocity=np.broadcast_to(v, shape).copy(),
        aspect=np.zeros(shape),
        rcs=np.broadcast_to(np.abs(a) ** 2, shape).copy(),
        reflectivity=np.broadcast_to(a, shape).copy(),
        visible=np.ones(shape, dtype=bool),
        wavelength=params.wavelength,
        pri=params.pri,
        cpi_index=cpi_index,
        ids=tuple(f"point{i}" for i in range(r0.size)),
        targets=tuple(f"point{i}" for i in range(r0.size)),
    )


_HOLD = {"packet": 1, "pair": 2}


def sample_scene(
    scene: Scene,
    params: RadarParams,
    cpi_index: int,
    rng_seed: int = 0,
    *,
    visibility_prob: float = 0.5,
    visibility_hold="cpi",
    alpha: float = ALPHA_60GHZ,
) -> ScattererStates:
    """Resample the scene to one pose per PRI over CPI ``cpi_index``.

    Visibility ``zeta`` is Bernoulli(``visibility_prob``), drawn independently
    per scatterer and held for ``visibility_hold`` packets (``"packet"``,
    ``"pair"``, ``"cpi"`` or an integer dividing P).
    """
    P = params.packets_per_cpi
    if cpi_index < 0 or cpi_index >= scene.num_cpis(params):
        raise SceneRangeError(
            f"CPI {cpi_index} lies outside the scene ({scene.num_cpis(params)} CPIs available)"
        )
    hold = P if visibility_hold == "cpi" else _HOLD.get(visibility_hold, visibility_hold)
    hold = int(hold)
    if hold < 1 or P % hold:
        raise ParameterError(f"visibility_hold must divide {P}, got {visibility_hold!r}")

    t0 = scene.start_time + cpi_index * params.cpi_duration
    times = t0 + np.arange(-1, P) * params.pri
    pos, axes = scene.poses(times)
    rel = pos - scene.radar_position
    rng_all = np.linalg.norm(rel, axis=-1)
    if np.any(rng_all[1:] <= 0):
        raise SceneRangeError("a scatterer coincides with the radar position")
    velocity = np.diff(rng_all, axis=0) / params.pri
    if times[0] < scene.start_time and P > 1:
        # no pose before the scene starts: reuse the first forward difference
        velocity[0] = velocity[1]
    rng_range = rng_all[1:]
    los = rel[1:] / rng_range[..., None]
    axes = axes[1:]

    B = scene.num_scatterers
    aspect = np.empty((P, B))
    rcs = np.empty((P, B))
    prims = [t.primitive for t in scene.tracks]
    gamma = np.array([fresnel_coefficient(pr.material, params.carrier_freq) for pr in prims])
    shapes = np.array([pr.shape.value for pr in prims])
    dim1 = np.array([pr.dim1 for pr in prims])
    dim2 = np.array([pr.dim2 for pr in prims])
    for shape in Shape:
        cols = np.nonzero(shapes == shape.value)[0]
        if cols.size == 0:
            continue
        theta = aspect_angle(los[:, cols], axes[:, cols], shape)
        aspect[:, cols] = theta
        rcs[:, cols] = Primitive.rcs_of(
            shape, dim1[cols], dim2[cols], theta, params.wavelength
        )

    rng = np.random.default_rng([int(rng_seed), int(cpi_index)])
    draws = rng.random((P // hold, B)) < visibility_prob
    visible = np.repeat(draws, hold, axis=0)
    refl = reflectivity(rcs, gamma[None, :], rng_range, visible, alpha)
    return ScattererStates(
        range=rng_range,
        radial_velocity=velocity,
        aspect=aspect,
        rcs=rcs,
        reflectivity=refl,
        visible=visible,
        wavelength=params.wavelength,
        pri=params.pri,
        cpi_index=cpi_index,
        ids=tuple(t.id for t in scene.tracks),
        targets=tuple(t.target for t in scene.tracks),
    )


def truth_ranges(scene: Scene, params: RadarParams, cpi_index: int) -> np.ndarray:
    """Ground-truth range of every scatterer at the centre of a CPI, shape ``(B,)``."""
    t = scene.start_time + (cpi_index + 0.5) * params.cpi_duration
    pos, _ = scene.poses([t])
    return np.linalg.norm(pos[0] - scene.radar_position, axis=-1)
