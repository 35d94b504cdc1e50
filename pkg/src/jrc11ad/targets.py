"""Synthetic car, bicycle and pedestrian scatterer models.

Each generator moves a rigid or articulated body along a smooth ground path
and returns a :class:`~jrc11ad.scene.Scene` sampled at the animation frame
rate. Wheels roll without slipping: a rim point at rotation angle ``psi``
sits at ``hub + R(-sin(psi) u - cos(psi) z)``, so the contact point is at
rest and the top of the wheel moves at twice the body speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .scene import (
    GLASS,
    METAL,
    SKIN,
    Scene,
    SceneRangeError,
    ScattererTrack,
    cylinder,
    ellipsoid,
    plate,
)
from .waveform import ParameterError

Z = np.array([0.0, 0.0, 1.0])


class GroundPath:
    """Arc-length parameterised planar path through ``(x, y)`` waypoints.

    Two waypoints give a straight segment; more are joined by a cubic spline
    in chord-length parameter.
    """

    def __init__(self, waypoints, samples: int = 4000):
        pts = np.asarray(waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ParameterError("waypoints must be a list of at least two (x, y) points")
        chord = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(chord == 0):
            raise ParameterError("consecutive waypoints must differ")
        u = np.concatenate([[0.0], np.cumsum(chord)])
        if len(pts) == 2:
            self._spline = None
            self._pts = pts
            self.length = float(u[-1])
            return
        self._spline = CubicSpline(u, pts, bc_type="natural")
        uu = np.linspace(0.0, u[-1], samples)
        speed = np.linalg.norm(self._spline(uu, 1), axis=1)
        s = cumulative_trapezoid(speed, uu, initial=0.0)
        self._u_of_s = (s, uu)
        self.length = float(s[-1])

    def _u(self, s):
        return np.interp(s, *self._u_of_s)

    def point(self, s) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        if self._spline is None:
            a, b = self._pts
            return a + (s / self.length)[..., None] * (b - a)
        return self._spline(self._u(s))

    def heading(self, s) -> np.ndarray:
        """Unit tangent ``(x, y)`` at arc length ``s``."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        if self._spline is None:
            d = self._pts[1] - self._pts[0]
            return np.broadcast_to(d / np.linalg.norm(d), s.shape + (2,)).copy()
        d = self._spline(self._u(s), 1)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)


def distance_profile(times, speed) -> np.ndarray:
    """Distance travelled at ``times`` for a constant or piecewise-linear speed.

    ``speed`` is a number or a sequence of ``(time_s, speed_mps)`` knots.
    """
    times = np.asarray(times, dtype=float)
    if np.ndim(speed) == 0:
        if speed < 0:
            raise ParameterError("speed must be >= 0")
        return float(speed) * (times - times[0])
    knots = np.asarray(speed, dtype=float)
    if knots.ndim != 2 or knots.shape[1] != 2 or np.any(np.diff(knots[:, 0]) <= 0):
        raise ParameterError("speed profile must be (time, speed) knots with increasing time")
    if np.any(knots[:, 1] < 0):
        raise ParameterError("speed must be >= 0")
    v = np.interp(times, knots[:, 0], knots[:, 1])
    return cumulative_trapezoid(v, times, initial=0.0)


@dataclass
class _Motion:
    """Body-frame kinematics sampled at the frame times."""

    times: np.ndarray
    distance: np.ndarray  # arc length travelled, (T,)
    origin: np.ndarray  # ground point under the body, (T, 3)
    forward: np.ndarray  # unit heading, (T, 3)
    left: np.ndarray  # unit lateral, (T, 3)

    def to_world(self, local) -> np.ndarray:
        """Map body-frame points ``(..., 3)`` (x fwd, y left, z up) to world ``(T, ..., 3)``."""
        local = np.asarray(local, dtype=float)
        fwd = self.forward.reshape((-1,) + (1,) * (local.ndim - 1) + (3,))
        lft = self.left.reshape(fwd.shape)
        org = self.origin.reshape(fwd.shape)
        return org + local[..., :1] * fwd + local[..., 1:2] * lft + local[..., 2:3] * Z

    def rotate(self, local_dir) -> np.ndarray:
        local_dir = np.asarray(local_dir, dtype=float)
        fwd = self.forward.reshape((-1,) + (1,) * (local_dir.ndim - 1) + (3,))
        lft = self.left.reshape(fwd.shape)
        return local_dir[..., :1] * fwd + local_dir[..., 1:2] * lft + local_dir[..., 2:3] * Z


def _motion(waypoints, speed, duration, frame_rate) -> _Motion:
    if frame_rate <= 0 or duration <= 0:
        raise ParameterError("frame_rate and duration must be positive")
    path = GroundPath(waypoints)
    nframes = int(np.floor(duration * frame_rate + 1e-9)) + 1
    times = np.arange(nframes) / frame_rate
    s = np.minimum(distance_profile(times, speed), path.length)
    xy = path.point(s)
    h = path.heading(s)
    origin = np.column_stack([xy, np.zeros(nframes)])
    forward = np.column_stack([h, np.zeros(nframes)])
    left = np.column_stack([-h[:, 1], h[:, 0], np.zeros(nframes)])
    return _Motion(times, s, origin, forward, left)


def _check_coverage(tracks, radar_position, max_range, waypoints=None):
    if max_range is None:
        return
    if waypoints is not None:
        ground = np.asarray(waypoints, dtype=float) - np.asarray(radar_position)[:2]
        far = np.hypot(ground[:, 0], ground[:, 1])
        if np.any(far >= max_range):
            raise SceneRangeError(
                f"waypoint at {far.max():.2f} m lies beyond the {max_range:.2f} m coverage"
            )
    for t in tracks:
        r = np.linalg.norm(t.positions - radar_position, axis=1)
        if np.any(r >= max_range) or np.any(r <= 0):
            raise SceneRangeError(
                f"scatterer {t.id!r} leaves the coverage (0, {max_range:.2f}) m"
            )


def _per_frame(motion, local) -> np.ndarray:
    """Rotate one body-frame vector per frame, ``(T, 3)``, into the world frame."""
    return local[:, :1] * motion.forward + local[:, 1:2] * motion.left + local[:, 2:3] * Z


def _wheel_points(motion, hub_local, radius, angles, hub_distance):
    """World positions ``(T, K, 3)`` of rim points on a rolling wheel."""
    psi = hub_distance[:, None] / radius + np.asarray(angles)[None, :]
    hub = motion.to_world(hub_local)  # (T, 3)
    offs = radius * (
        -np.sin(psi)[..., None] * motion.forward[:, None, :]
        - np.cos(psi)[..., None] * Z
    )
    return hub[:, None, :] + offs, psi


def _hub_distance(motion, hub_local):
    """Arc length travelled by a wheel hub (differs from the body origin when turning)."""
    hub = motion.to_world(hub_local)
    step = np.linalg.norm(np.diff(hub[:, :2], axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(step)])


# Car side profile (x forward, z up): rear bumper to front bumper.
_CAR_PROFILE = np.array(
    [[-0.50, 0.30], [-0.50, 0.95], [-0.30, 1.45], [0.15, 1.45], [0.35, 0.95], [0.50, 0.85], [0.50, 0.30]]
)
_CAR_PROFILE_GLASS = {1: True, 3: True}  # rear window and windscreen segments


def _quad_triangles(corners, nu, nv):
    """Split a planar quad ``(4, 3)`` into ``2*nu*nv`` triangles; return centroids and areas."""
    c0, c1, c2, c3 = corners
    uu = np.linspace(0, 1, nu + 1)
    vv = np.linspace(0, 1, nv + 1)
    grid = (
        (1 - uu)[:, None, None] * (1 - vv)[None, :, None] * c0
        + uu[:, None, None] * (1 - vv)[None, :, None] * c1
        + uu[:, None, None] * vv[None, :, None] * c2
        + (1 - uu)[:, None, None] * vv[None, :, None] * c3
    )
    tris = []
    for i in range(nu):
        for j in range(nv):
            a, b, c, d = grid[i, j], grid[i + 1, j], grid[i + 1, j + 1], grid[i, j + 1]
            tris.extend([(a, b, c), (a, c, d)])
    tris = np.array(tris)
    centroids = tris.mean(axis=1)
    areas = 0.5 * np.linalg.norm(np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]), axis=1)
    return centroids, areas


def _car_facets(length, width, height, cell):
    """Body-frame triangular facets: centroids, outward normals, areas, glass flags."""
    prof = _CAR_PROFILE * np.array([length, height / 1.45])
    half = width / 2
    centre = np.array([prof[:, 0].mean(), 0.0, prof[:, 1].mean()])
    out = []
    # surfaces swept across the width along the side profile
    for k in range(len(prof) - 1):
        (x0, z0), (x1, z1) = prof[k], prof[k + 1]
        corners = np.array([[x0, -half, z0], [x1, -half, z1], [x1, half, z1], [x0, half, z0]])
        seg = np.hypot(x1 - x0, z1 - z0)
        normal = np.array([z1 - z0, 0.0, -(x1 - x0)]) / seg
        mid = np.array([(x0 + x1) / 2, 0.0, (z0 + z1) / 2])
        if normal @ (mid - centre) < 0:
            normal = -normal
        nu = max(1, int(round(seg / cell)))
        nv = max(1, int(round(width / cell)))
        cen, area = _quad_triangles(corners, nu, nv)
        glass = _CAR_PROFILE_GLASS.get(k, False)
        out += [(c, normal, a, glass) for c, a in zip(cen, area)]
    # side panels: lower metal body and a glass window band
    belt = prof[1][1]
    x_rear, x_front = prof[0][0], prof[-1][0]
    for side in (-1.0, 1.0):
        normal = np.array([0.0, side, 0.0])
        y = side * half
        lower = np.array([[x_rear, y, prof[0][1]], [x_front, y, prof[0][1]], [x_front, y, belt], [x_rear, y, belt]])
        cen, area = _quad_triangles(lower, max(1, int(round(length / cell))), 1)
        out += [(c, normal, a, False) for c, a in zip(cen, area)]
        xr, xf = prof[2][0], prof[3][0]
        window = np.array([[prof[1][0], y, belt], [prof[4][0], y, belt], [xf, y, prof[3][1]], [xr, y, prof[2][1]]])
        cen, area = _quad_triangles(window, max(1, int(round((prof[4][0] - prof[1][0]) / cell))), 1)
        out += [(c, normal, a, True) for c, a in zip(cen, area)]
    return out


def synth_car(
    waypoints,
    speed=3.0,
    duration: float = 3.0,
    *,
    frame_rate: float = 60.0,
    name: str = "car",
    length: float = 4.2,
    width: float = 2.0,
    height: float = 1.5,
    wheelbase: float = 3.5,
    track_width: float = 2.0,
    wheel_radius: float = 0.48,
    rim_scatterers: int = 8,
    rim_feature_radius: float = 0.25,
    corner_radius: float = 0.3,
    facet_size: float = 0.9,
    radar_position=(0.0, 0.0, 0.0),
    max_range: float | None = None,
) -> Scene:
    """Car as triangular body plates plus four rolling wheels.

    Body facets are metal plates (glass for the windows); the four rounded
    vertical body corners are metal cylinders of radius ``corner_radius``
    spanning the bumper-to-belt height. Each wheel carries
    ``rim_scatterers`` isotropic metal spheres of radius ``rim_feature_radius``
    on the tyre circumference, so the wheels scatter at every aspect.
    """
    if rim_scatterers < 1:
        raise ParameterError("rim_scatterers must be >= 1")
    motion = _motion(waypoints, speed, duration, frame_rate)
    radar = np.asarray(radar_position, dtype=float)
    tracks = []
    for i, (c, n, area, glass) in enumerate(_car_facets(length, width, height, facet_size)):
        pos = motion.to_world(c)
        axes = motion.rotate(n)
        prim = plate(area, float(np.sqrt(2 * area)), GLASS if glass else METAL)
        tracks.append(ScattererTrack(f"{name}.body{i:02d}", prim, motion.times, pos, axes))

    z0, z1 = _CAR_PROFILE[0, 1] * height / 1.45, _CAR_PROFILE[1, 1] * height / 1.45
    corner = cylinder(corner_radius, z1 - z0, METAL)
    for cname, sx, sy in (("rl", -1, 1), ("rr", -1, -1), ("fl", 1, 1), ("fr", 1, -1)):
        # axis of the corner's rounding, set in from the body edges
        c = np.array([sx * (length / 2 - corner_radius), sy * (width / 2 - corner_radius), (z0 + z1) / 2])
        pos = motion.to_world(c)
        tracks.append(
            ScattererTrack(
                f"{name}.corner_{cname}", corner, motion.times, pos, np.broadcast_to(Z, pos.shape)
            )
        )

    feature = ellipsoid(rim_feature_radius, 2 * rim_feature_radius, METAL)
    angles = 2 * np.pi * np.arange(rim_scatterers) / rim_scatterers
    wheels = {
        "fl": (wheelbase / 2, track_width / 2),
        "fr": (wheelbase / 2, -track_width / 2),
        "rl": (-wheelbase / 2, track_width / 2),
        "rr": (-wheelbase / 2, -track_width / 2),
    }
    for wname, (x, y) in wheels.items():
        hub = np.array([x, y, wheel_radius])
        pts, _ = _wheel_points(motion, hub, wheel_radius, angles, _hub_distance(motion, hub))
        for k in range(rim_scatterers):
            tracks.append(
                ScattererTrack(f"{name}.wheel_{wname}.rim{k}", feature, motion.times, pts[:, k], motion.left)
            )
    _check_coverage(tracks, radar, max_range, waypoints)
    return Scene(tracks, radar)


# Bicycle frame tubes as (x, y, z) endpoints relative to the rear hub (x fwd, z up).
_BIKE_TUBES = {
    "chainstay_l": ((0.00, 0.06, 0.0), (0.42, 0.06, -0.05)),
    "chainstay_r": ((0.00, -0.06, 0.0), (0.42, -0.06, -0.05)),
    "seatstay_l": ((0.00, 0.06, 0.0), (0.36, 0.06, 0.45)),
    "seatstay_r": ((0.00, -0.06, 0.0), (0.36, -0.06, 0.45)),
    "seat_tube": ((0.42, 0.0, -0.05), (0.36, 0.0, 0.50)),
    "top_tube": ((0.36, 0.0, 0.50), (0.95, 0.0, 0.45)),
    "down_tube": ((0.42, 0.0, -0.05), (0.95, 0.0, 0.35)),
    "fork": ((1.05, 0.0, 0.0), (0.95, 0.0, 0.45)),
    "seat_post": ((0.36, 0.0, 0.50), (0.33, 0.0, 0.70)),
}


def synth_bicycle(
    waypoints,
    speed=4.0,
    duration: float = 3.0,
    *,
    frame_rate: float = 60.0,
    name: str = "bicycle",
    wheel_radius: float = 0.35,
    wheelbase: float = 1.05,
    tube_radius: float = 0.06,
    spoke_radius: float = 0.002,
    spoke_length: float = 0.345,
    front_spokes: int = 18,
    rear_spokes: int = 25,
    radar_position=(0.0, 0.0, 0.0),
    max_range: float | None = None,
) -> Scene:
    """Bicycle as metal frame cylinders plus spoked wheels.

    Each spoke is a thin cylinder whose scatterer sits at the rim end, with
    its axis along the spoke, so spokes flash when perpendicular to the line
    of sight.
    """
    if front_spokes < 1 or rear_spokes < 1:
        raise ParameterError("spoke counts must be >= 1")
    motion = _motion(waypoints, speed, duration, frame_rate)
    radar = np.asarray(radar_position, dtype=float)
    rear = np.array([-wheelbase / 2, 0.0, wheel_radius])
    tracks = []
    for tube, (a, b) in _BIKE_TUBES.items():
        a = rear + np.asarray(a)
        b = rear + np.asarray(b)
        centre = motion.to_world((a + b) / 2)
        axes = motion.rotate((b - a) / np.linalg.norm(b - a))
        prim = cylinder(tube_radius, float(np.linalg.norm(b - a)), METAL)
        tracks.append(ScattererTrack(f"{name}.frame_{tube}", prim, motion.times, centre, axes))
    bar = rear + np.array([wheelbase - 0.05, 0.0, 0.75])
    tracks.append(
        ScattererTrack(
            f"{name}.handlebar", cylinder(0.012, 0.6, METAL), motion.times,
            motion.to_world(bar), motion.left,
        )
    )

    spoke = cylinder(spoke_radius, spoke_length, METAL)
    for wname, hub, count in (
        ("front", rear + np.array([wheelbase, 0.0, 0.0]), front_spokes),
        ("rear", rear, rear_spokes),
    ):
        angles = 2 * np.pi * np.arange(count) / count
        dist = _hub_distance(motion, hub)
        hub_w = motion.to_world(hub)
        pts, psi = _wheel_points(motion, hub, wheel_radius, angles, dist)
        for k in range(count):
            radial = pts[:, k] - hub_w
            axes = radial / np.linalg.norm(radial, axis=1, keepdims=True)
            tracks.append(ScattererTrack(f"{name}.{wname}_spoke{k:02d}", spoke, motion.times, pts[:, k], axes))
    _check_coverage(tracks, radar, max_range, waypoints)
    return Scene(tracks, radar)


# Pedestrian markers: (name, segment, distance along segment or fixed offset, radius, length).
# Segments: "torso" markers are rigid offsets (x, y, z) from the pelvis ground point;
# limb markers hang from a joint and swing in the sagittal plane.
_PED_TORSO = [
    ("chest_front", (0.08, 0.0, 1.35), 0.15, 0.30),
    ("chest_back", (-0.08, 0.0, 1.35), 0.15, 0.30),
    ("belly_front", (0.08, 0.0, 1.10), 0.14, 0.30),
    ("belly_back", (-0.08, 0.0, 1.10), 0.14, 0.30),
]
_PED_RIGID = [
    ("head", (0.0, 0.0, 1.65), 0.10, 0.20),
    ("neck", (0.0, 0.0, 1.50), 0.05, 0.10),
    ("shoulder_l", (0.0, 0.20, 1.42), 0.06, 0.15),
    ("shoulder_r", (0.0, -0.20, 1.42), 0.06, 0.15),
    ("hip_l", (0.0, 0.10, 0.92), 0.08, 0.20),
    ("hip_r", (0.0, -0.10, 0.92), 0.08, 0.20),
]
_PED_LIMBS = [
    # name, side, kind, distance from joint, radius, length
    ("upper_arm", "arm", 0.15, 0.045, 0.30),
    ("forearm", "arm", 0.42, 0.035, 0.28),
    ("hand", "arm", 0.65, 0.030, 0.10),
    ("thigh", "leg", 0.22, 0.070, 0.45),
    ("knee", "leg", 0.46, 0.050, 0.12),
    ("shin", "leg", 0.68, 0.050, 0.40),
    ("foot", "leg", 0.88, 0.040, 0.20),
]


def synth_pedestrian(
    waypoints,
    speed=1.4,
    duration: float = 3.0,
    *,
    frame_rate: float = 60.0,
    name: str = "pedestrian",
    gait_amplitude: float = 1.0,
    stride_length: float = 1.4,
    cadence_hz: float | None = None,
    radar_position=(0.0, 0.0, 0.0),
    max_range: float | None = None,
) -> Scene:
    """Walking pedestrian with 24 skin-dielectric markers.

    The four torso markers are vertical cylinders; head, neck, shoulders,
    hips and limbs are ellipsoids.

    Legs and arms swing sinusoidally in the direction of travel (arms in
    anti-phase with the same-side leg) at the gait rate, and the torso bobs
    vertically at twice that rate. Swing amplitudes scale with
    ``gait_amplitude``; the legs swing widest and the torso least. The gait
    phase advances with distance walked unless ``cadence_hz`` fixes it.
    """
    motion = _motion(waypoints, speed, duration, frame_rate)
    radar = np.asarray(radar_position, dtype=float)
    if cadence_hz is None:
        phase = 2 * np.pi * motion.distance / stride_length
    else:
        phase = 2 * np.pi * cadence_hz * motion.times
    leg_amp = 0.45 * gait_amplitude
    arm_amp = 0.35 * gait_amplitude
    bob = 0.025 * gait_amplitude * np.sin(2 * phase)

    tracks = []
    for mname, offset, r, h in _PED_TORSO:
        pos = motion.to_world(offset) + bob[:, None] * Z
        axes = np.broadcast_to(Z, pos.shape)
        tracks.append(ScattererTrack(f"{name}.{mname}", cylinder(r, h, SKIN), motion.times, pos, axes))
    for mname, offset, r, h in _PED_RIGID:
        pos = motion.to_world(offset) + bob[:, None] * Z
        axes = np.broadcast_to(Z, pos.shape)
        tracks.append(ScattererTrack(f"{name}.{mname}", ellipsoid(r, h, SKIN), motion.times, pos, axes))
    for side, sign, lead in (("l", 1.0, 0.0), ("r", -1.0, np.pi)):
        joints = {"leg": (0.0, 0.10 * sign, 0.92), "arm": (0.0, 0.20 * sign, 1.42)}
        for mname, kind, dist, r, h in _PED_LIMBS:
            amp, ph = (leg_amp, phase + lead) if kind == "leg" else (arm_amp, phase + lead + np.pi)
            swing = amp * np.sin(ph)
            direction = np.column_stack([np.sin(swing), np.zeros_like(swing), -np.cos(swing)])
            local = np.asarray(joints[kind]) + dist * direction
            local[:, 2] += bob
            pos = motion.origin + _per_frame(motion, local)
            axes = _per_frame(motion, direction)
            tracks.append(
                ScattererTrack(f"{name}.{mname}_{side}", ellipsoid(r, h, SKIN), motion.times, pos, axes)
            )
    _check_coverage(tracks, radar, max_range, waypoints)
    return Scene(tracks, radar)

