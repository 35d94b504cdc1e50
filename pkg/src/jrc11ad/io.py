"""File formats: scatterer trajectories, raw CPI samples, products and reports.

Trajectory files are comma-separated text with a header line and one row per
scatterer per frame::

    time_s,scatterer_id,x_m,y_m,z_m,axis_x,axis_y,axis_z,shape,dim1,dim2,material[,eps_r,sigma]

Raw CPI files hold a 32-byte little-endian header (8-byte magic, ``P``,
``N_rx``, ``cpi_index``) followed by ``P * N_rx`` interleaved float64
real/imaginary pairs in row-major order.
"""

from __future__ import annotations

import csv
import struct
from collections import defaultdict
from pathlib import Path

import numpy as np
from PIL import Image

from .echo import RxCpi
from .scene import Material, Primitive, ScattererTrack, Scene, Shape
from .waveform import RadarParams

TRAJECTORY_COLUMNS = (
    "time_s", "scatterer_id", "x_m", "y_m", "z_m", "axis_x", "axis_y", "axis_z",
    "shape", "dim1", "dim2", "material", "eps_r", "sigma",
)
RX_MAGIC = b"JRCRXCPI"
_RX_HEADER = struct.Struct("<8sQQq")


class FormatError(ValueError):
    """A file does not follow its format; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = f"{path}:" if path is not None else ""
        where += f"{line}: " if line is not None else (" " if where else "")
        super().__init__(f"{where}{message}")


# -- trajectories ----------------------------------------------------------


def _material(tag: str, extra: list, path, line) -> Material:
    tag = tag.strip().lower()
    if tag == "metal":
        return Material("metal")
    if tag in ("glass", "dielectric"):
        if extra and extra[0].strip():
            try:
                eps = float(extra[0])
                sigma = float(extra[1]) if len(extra) > 1 and extra[1].strip() else 0.0
            except ValueError:
                raise FormatError("eps_r and sigma must be numbers", path, line) from None
        elif tag == "glass":
            eps, sigma = 6.5, 0.0
        else:
            raise FormatError("dielectric rows need eps_r (and optionally sigma)", path, line)
        try:
            return Material(tag, eps, sigma)
        except ValueError as exc:
            raise FormatError(str(exc), path, line) from None
    raise FormatError(f"unknown material tag {tag!r}", path, line)


def load_scene(path, radar_position=(0.0, 0.0, 0.0)) -> Scene:
    """Read a trajectory file into a :class:`Scene`.

    Rows of one scatterer need not be contiguous but their times must be
    strictly increasing, and its shape, size and material must not change.

    Raises
    ------
    FormatError
        With the offending line number for malformed rows, unknown tags,
        non-monotonic times or an empty file.
    """
    path = Path(path)
    rows = defaultdict(list)
    prims = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(cell.strip() for cell in header):
            raise FormatError("empty trajectory file", path, 1)
        names = [h.strip().lower() for h in header]
        if tuple(names[:12]) != TRAJECTORY_COLUMNS[:12]:
            raise FormatError(
                "header must start with " + ",".join(TRAJECTORY_COLUMNS[:12]), path, 1
            )
        for record in reader:
            line = reader.line_num
            if not record or not "".join(record).strip():
                continue
            if len(record) not in (12, 13, 14):
                raise FormatError(f"expected 12 to 14 fields, got {len(record)}", path, line)
            sid = record[1].strip()
            if not sid:
                raise FormatError("empty scatterer_id", path, line)
            try:
                values = [float(record[i]) for i in (0, 2, 3, 4, 5, 6, 7, 9, 10)]
            except ValueError:
                raise FormatError("non-numeric time, position, axis or dimension", path, line) from None
            if not np.all(np.isfinite(values)):
                raise FormatError("non-finite value", path, line)
            try:
                shape = Shape(record[8].strip().lower())
            except ValueError:
                raise FormatError(f"unknown shape tag {record[8].strip()!r}", path, line) from None
            material = _material(record[11], record[12:], path, line)
            try:
                prim = Primitive(shape, values[7], values[8], material)
            except ValueError as exc:
                raise FormatError(str(exc), path, line) from None
            if sid in prims and prims[sid] != prim:
                raise FormatError(f"primitive of {sid!r} changes between frames", path, line)
            prims[sid] = prim
            track = rows[sid]
            if track and values[0] <= track[-1][1][0]:
                raise FormatError(f"times of {sid!r} are not strictly increasing", path, line)
            track.append((line, values))
    if not rows:
        raise FormatError("trajectory file has no data rows", path, 2)
    tracks = []
    for sid, track in rows.items():
        data = np.array([v for _, v in track])
        if len(data) < 2:
            raise FormatError(f"scatterer {sid!r} has a single frame", path, track[0][0])
        try:
            tracks.append(ScattererTrack(sid, prims[sid], data[:, 0], data[:, 1:4], data[:, 4:7]))
        except ValueError as exc:
            raise FormatError(str(exc), path, track[0][0]) from None
    return Scene(tuple(tracks), radar_position)


def save_scene(scene: Scene, path) -> None:
    """Write ``scene`` in the trajectory format; floats keep full precision."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for track in scene.tracks:
            prim = track.primitive
            mat = prim.material
            tail = [] if mat.kind == "metal" else [repr(mat.rel_permittivity), repr(mat.conductivity)]
            for t, pos, ax in zip(track.times, track.positions, track.axes):
                w.writerow(
                    [repr(float(t)), track.id, *map(repr, map(float, pos)), *map(repr, map(float, ax)),
                     prim.shape.value, repr(prim.dim1), repr(prim.dim2), mat.kind, *tail]
                )


# -- raw CPI samples -------------------------------------------------------


def write_rx(rx: RxCpi, path) -> None:
    samples = np.ascontiguousarray(rx.samples, dtype="<c16")
    p, n_rx = samples.shape
    with open(path, "wb") as fh:
        fh.write(_RX_HEADER.pack(RX_MAGIC, p, n_rx, int(rx.cpi_index)))
        fh.write(samples.tobytes())


def read_rx(path, params: RadarParams | None = None) -> RxCpi:
    """Load a raw CPI file. ``params`` defaults to the standard profile with the file's ``P``."""
    raw = Path(path).read_bytes()
    if len(raw) < _RX_HEADER.size:
        raise FormatError("file shorter than the 32-byte header", path)
    magic, p, n_rx, cpi = _RX_HEADER.unpack_from(raw)
    if magic != RX_MAGIC:
        raise FormatError(f"bad magic {magic!r}", path)
    expected = _RX_HEADER.size + p * n_rx * 16
    if len(raw) != expected:
        raise FormatError(f"expected {expected} bytes for {p}x{n_rx} samples, got {len(raw)}", path)
    samples = np.frombuffer(raw, dtype="<c16", offset=_RX_HEADER.size).reshape(p, n_rx)
    if params is None:
        params = RadarParams(packets_per_cpi=int(p))
    return RxCpi(samples.astype(complex), params, int(cpi))


# -- products --------------------------------------------------------------


def _format_complex(values: np.ndarray) -> list:
    return [f"{z.real:.10g}{z.imag:+.10g}j" for z in values.tolist()]


def write_matrix_csv(path, values, row_axis, col_axis, row_label: str, col_label: str) -> None:
    """Complex matrix with its axes: the header carries ``row_label/col_label``
    then the column axis; each row starts with its row-axis value."""
    values = np.asarray(values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{row_label}/{col_label}", *(f"{c:.10g}" for c in np.asarray(col_axis))])
        for r, row in zip(np.asarray(row_axis), values):
            w.writerow([f"{r:.10g}", *_format_complex(row)])


def read_matrix_csv(path):
    """Inverse of :func:`write_matrix_csv`: ``(values, row_axis, col_axis, labels)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or "/" not in header[0]:
            raise FormatError("missing axis header", path, 1)
        labels = tuple(header[0].split("/", 1))
        try:
            cols = np.array([float(c) for c in header[1:]])
            rows, values = [], []
            for record in reader:
                rows.append(float(record[0]))
                values.append([complex(v) for v in record[1:]])
        except ValueError as exc:
            raise FormatError(f"unparseable value ({exc})", path, reader.line_num) from None
    values = np.array(values, dtype=complex).reshape(len(rows), cols.size)
    return values, np.array(rows), cols, labels


def write_heatmap_png(path, values, floor_db: float = -60.0) -> None:
    """8-bit grayscale image of ``20 log10 |values|`` relative to the peak.

    Image rows follow the first array axis; ``floor_db`` and below map to 0,
    the peak to 255.
    """
    mag = np.abs(np.asarray(values))
    peak = mag.max()
    if peak > 0:
        with np.errstate(divide="ignore"):
            db = 20 * np.log10(mag / peak)
    else:
        db = np.full(mag.shape, floor_db)
    scaled = np.clip((db - floor_db) / -floor_db, 0.0, 1.0)
    Image.fromarray(np.round(scaled * 255).astype(np.uint8), mode="L").save(path, optimize=False)


# -- detection reports -----------------------------------------------------

REPORT_COLUMNS = ("mode", "snr_db", "threshold_dbsm", "pd", "pfa")


def write_report_csv(path, reports: dict) -> None:
    """One row per mode, SNR and threshold."""
    from .detection import report_rows

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for mode, rep in reports.items():
            for snr, thr, pd, pfa in report_rows(rep):
                w.writerow([mode, f"{snr:.10g}", f"{thr:.10g}", f"{pd:.10g}", f"{pfa:.10g}"])


def read_report_csv(path) -> dict:
    """Curves keyed by mode: ``{"snr_db": (S,), "threshold_dbsm": (T,), "pd": (S, T), "pfa": (S, T)}``."""
    data = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise FormatError("unexpected report header", path, 1)
        for rec in reader:
            try:
                data[rec["mode"]].append([float(rec[k]) for k in REPORT_COLUMNS[1:]])
            except ValueError:
                raise FormatError("non-numeric report field", path, reader.line_num) from None
    out = {}
    for mode, rows in data.items():
        a = np.array(rows)
        snr = np.unique(a[:, 0])
        thr = np.unique(a[:, 1])
        out[mode] = {
            "snr_db": snr,
            "threshold_dbsm": thr,
            "pd": a[:, 2].reshape(snr.size, thr.size),
            "pfa": a[:, 3].reshape(snr.size, thr.size),
        }
    return out
