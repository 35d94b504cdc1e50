"""Received baseband synthesis for one CPI.

Each scatterer contributes its packet's chip sequence delayed by the
round-trip time (quantised to whole chips) and scaled by its complex
reflectivity times a slow-time phase. The phase is constant within a packet.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .scene import ScattererStates
from .waveform import GolayTrain, ParameterError, RadarParams

_BLOCK_ROWS = 256


class OutOfRangeWarning(UserWarning):
    """Some echoes arrive too late to fit in the receive window and were dropped."""


@dataclass(frozen=True)
class RxCpi:
    """Complex baseband samples, one row of ``N_rx`` chips per packet."""

    samples: np.ndarray
    params: RadarParams
    cpi_index: int = 0

    def __post_init__(self):
        x = np.asarray(self.samples)
        if x.ndim != 2 or x.shape[0] != self.params.packets_per_cpi:
            raise ParameterError(
                f"samples must have {self.params.packets_per_cpi} rows, got shape {x.shape}"
            )
        if x.shape[1] < self.params.fast_time_bins:
            raise ParameterError("receive window is shorter than one sequence")

    @property
    def rx_length(self) -> int:
        return self.samples.shape[1]


def slow_time_phase(states: ScattererStates) -> np.ndarray:
    """Per-packet carrier phasor ``(P, B)``.

    The phase starts at the two-way carrier phase of the first packet's range
    and advances by ``2 pi f_D T_p`` per packet, i.e. it integrates the
    instantaneous Doppler. For constant velocity this is
    ``exp(-j 2 pi f_D p T_p)`` up to a constant.
    """
    fd = states.doppler
    advance = np.zeros_like(fd)
    advance[1:] = np.cumsum(fd[1:], axis=0) * states.pri
    phase = 4 * np.pi * states.range[0] / states.wavelength + 2 * np.pi * advance
    return np.exp(-1j * phase)


def echo_delays(states: ScattererStates, params: RadarParams) -> np.ndarray:
    """Round-trip delay of every scatterer in whole chips, ``(P, B)``."""
    return params.range_bin(states.range)


def impulse_matrix(states: ScattererStates, params: RadarParams, rx_length: int | None = None):
    """Sparse channel per packet: complex tap amplitudes at integer chip delays.

    Returns a ``(P, D + 1)`` matrix with ``D = rx_length - N`` the largest
    delay whose echo fits in the receive window. Later echoes are dropped
    with an :class:`OutOfRangeWarning`.
    """
    n_rx = params.rx_length if rx_length is None else int(rx_length)
    P, B = states.range.shape
    if P != params.packets_per_cpi:
        raise ParameterError(f"states cover {P} packets, expected {params.packets_per_cpi}")
    max_delay = n_rx - params.fast_time_bins
    delay = echo_delays(states, params)
    amp = states.reflectivity * slow_time_phase(states)
    late = delay > max_delay
    if np.any(late):
        cols = sorted({states.ids[b] if states.ids else str(b) for b in np.nonzero(late)[1]})
        warnings.warn(
            f"dropping echoes beyond the receive window from {len(cols)} scatterer(s): {cols[:5]}",
            OutOfRangeWarning,
            stacklevel=2,
        )
        amp = np.where(late, 0, amp)
        delay = np.where(late, 0, delay)
    width = max_delay + 1
    flat = (np.arange(P)[:, None] * width + delay).ravel()
    taps = np.bincount(flat, amp.real.ravel(), P * width) + 1j * np.bincount(
        flat, amp.imag.ravel(), P * width
    )
    return taps.reshape(P, width)


def noise_matrix(shape, noise_power: float, rng_seed: int, cpi_index: int = 0) -> np.ndarray:
    """Circular complex Gaussian noise with one independent substream per row."""
    rows, cols = shape
    root = np.random.SeedSequence(int(rng_seed), spawn_key=(int(cpi_index),))
    out = np.empty(shape, dtype=complex)
    scale = np.sqrt(noise_power / 2)
    for p, child in enumerate(root.spawn(rows)):
        z = np.random.default_rng(child).standard_normal(2 * cols)
        out[p] = scale * (z[:cols] + 1j * z[cols:])
    return out


def synthesize_rx(
    train: GolayTrain,
    states: ScattererStates,
    params: RadarParams,
    noise_power: float = 0.0,
    rng_seed: int = 0,
    cpi_index: int | None = None,
) -> RxCpi:
    """Received samples for one CPI: delayed, scaled sequences plus white noise.

    Parameters
    ----------
    train : GolayTrain
        Transmit schedule; its packet count and length must match ``params``.
    states : ScattererStates
        Per-packet scatterer state, ``(P, B)``.
    params : RadarParams
    noise_power : float
        Variance per complex sample in watts; ``0`` disables noise.
    rng_seed : int
        Seed of the noise substreams.
    cpi_index : int, optional
        Defaults to ``states.cpi_index``; also keys the noise substreams.
    """
    if train.num_packets != params.packets_per_cpi or train.length != params.fast_time_bins:
        raise ParameterError("train shape does not match the radar parameters")
    if noise_power < 0:
        raise ParameterError("noise_power must be >= 0")
    cpi = states.cpi_index if cpi_index is None else int(cpi_index)
    n = params.fast_time_bins
    n_rx = params.rx_length
    taps = impulse_matrix(states, params, n_rx)
    # echoes end by n_rx, so a length-n_rx circular convolution does not wrap
    seq_spec = np.fft.fft(train.sequences, n_rx, axis=1)
    x = np.empty((params.packets_per_cpi, n_rx), dtype=complex)
    for lo in range(0, params.packets_per_cpi, _BLOCK_ROWS):
        hi = lo + _BLOCK_ROWS
        spec = np.fft.fft(taps[lo:hi], n_rx) * seq_spec[train.sequence_index[lo:hi]]
        x[lo:hi] = np.fft.ifft(spec)
    if noise_power > 0:
        x += noise_matrix(x.shape, noise_power, rng_seed, cpi)
    return RxCpi(x, params, cpi)
