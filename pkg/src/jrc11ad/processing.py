"""Matched-filter receiver and radar products.

Channel estimates are formed either per complementary pair (packets
``2k, 2k+1`` summed, slow-time spacing ``2 T_p``) or per packet (spacing
``T_p``). Both are scaled so a unit static scatterer gives a unit peak, and
the slow-time DFT uses the ``exp(+j 2 pi f t)`` kernel so a scatterer moving
away (positive Doppler) lands at positive Doppler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .echo import RxCpi, impulse_matrix
from .scene import ScattererStates
from .waveform import GolayTrain, ParameterError, RadarParams, aperiodic_autocorr

PSL_FLOOR_DB = -300.0
_PROCESSING = ("pair", "packet")


def _check_processing(processing: str) -> str:
    if processing not in _PROCESSING:
        raise ParameterError(f"processing must be 'pair' or 'packet', got {processing!r}")
    return processing


def matched_filter(samples: np.ndarray, train: GolayTrain) -> np.ndarray:
    """Correlate each received row with its own packet sequence.

    Returns ``(P, N)`` with ``out[p, n] = sum_m x_p[n + m] G_p[m]``.
    """
    x = np.asarray(samples)
    n = train.length
    if x.ndim != 2 or x.shape[0] != train.num_packets or x.shape[1] < n:
        raise ParameterError(f"samples shape {x.shape} does not match the train")
    # lags n + m never reach nfft, so the circular correlation does not wrap
    nfft = max(x.shape[1], 2 * n - 1)
    seq_spec = np.conj(np.fft.fft(train.sequences, nfft, axis=1))
    spec = np.fft.fft(x, nfft, axis=1)
    spec *= seq_spec[train.sequence_index]
    return np.fft.ifft(spec, axis=1)[:, :n]


def channel_estimate(x_even, x_odd, g_even, g_odd) -> np.ndarray:
    """Channel taps from one complementary pair of received rows.

    ``(x_even corr g_even + x_odd corr g_odd) / (2N)`` over the first ``N`` lags.
    """
    g_even = np.asarray(g_even, dtype=float)
    g_odd = np.asarray(g_odd, dtype=float)
    n = g_even.size
    if g_odd.size != n:
        raise ParameterError("pair sequences must have equal length")
    out = np.zeros(n, dtype=complex)
    for x, g in ((x_even, g_even), (x_odd, g_odd)):
        x = np.asarray(x)
        full = np.correlate(x, g, mode="full")  # lag k at index k + n - 1
        out += full[n - 1 : 2 * n - 1]
    return out / (2 * n)


def channel_estimates(rx, train: GolayTrain, processing: str = "pair") -> np.ndarray:
    """All channel estimates of a CPI.

    ``"pair"`` gives ``(P/2, N)`` complementary-pair estimates; ``"packet"``
    gives ``(P, N)`` single-packet estimates normalised by ``N``.
    """
    _check_processing(processing)
    samples = rx.samples if isinstance(rx, RxCpi) else rx
    mf = matched_filter(samples, train)
    n = train.length
    if processing == "packet":
        return mf / n
    return (mf[0::2] + mf[1::2]) / (2 * n)


def noiseless_channel_estimates(
    train: GolayTrain, states: ScattererStates, params: RadarParams, processing: str = "pair"
) -> np.ndarray:
    """Noise-free channel estimates straight from scatterer states.

    Equivalent to ``channel_estimates(synthesize_rx(train, states, params), train)``
    but convolves the sparse channel with the two distinct sequence
    autocorrelations instead of synthesising and correlating every row.
    """
    return NoiselessEstimator(states, params, processing).estimates(train)


class NoiselessEstimator:
    """Noise-free channel estimates of one CPI for any number of pulse trains.

    The sparse channel and its spectrum are computed once; each train then
    costs one inverse FFT. All trains must share the same Golay pair.
    """

    def __init__(self, states: ScattererStates, params: RadarParams, processing: str = "pair"):
        self.processing = _check_processing(processing)
        self.params = params
        n = params.fast_time_bins
        taps = impulse_matrix(states, params)
        # outputs wrapped past nfft land below the n - 1 read offset
        self.nfft = 1 << (taps.shape[1] + n - 2).bit_length()
        spec = np.fft.fft(taps, self.nfft, axis=1)
        if processing == "pair":
            self._even, self._odd = spec[0::2], spec[1::2]
        else:
            self._rows = spec
        self._pair = None

    def _corr_spectra(self, pair):
        if self._pair is not pair:
            corr = np.stack([aperiodic_autocorr(pair.first), aperiodic_autocorr(pair.second)])
            c0, c1 = np.fft.fft(corr.astype(float), self.nfft, axis=1)
            if self.processing == "pair":
                # pair rows see (C1, C2) or (C2, C1) on their (even, odd) packets
                self._mix = (self._even * c0 + self._odd * c1, self._even * c1 + self._odd * c0)
            else:
                self._mix = (self._rows * c0, self._rows * c1)
            self._pair = pair
        return self._mix

    def estimates(self, train: GolayTrain) -> np.ndarray:
        n = self.params.fast_time_bins
        first, second = self._corr_spectra(train.pair)
        idx = np.asarray(train.autocorr_index)
        if self.processing == "pair":
            sel, scale = idx[0::2], 2 * n
        else:
            sel, scale = idx, n
        spec = first if not sel.any() else np.where(sel[:, None] == 0, first, second)
        # autocorrelation zero lag sits at index n - 1
        return np.fft.ifft(spec, axis=1)[:, n - 1 : 2 * n - 1] / scale


def slow_time_interval(params: RadarParams, processing: str = "pair") -> float:
    return params.pri * (2 if _check_processing(processing) == "pair" else 1)


def doppler_axis(num_samples: int, interval: float) -> np.ndarray:
    """Centred Doppler axis in Hz: ``[-1/(2T), 1/(2T))`` in ``1/(D T)`` steps."""
    return (np.arange(num_samples) - num_samples // 2) / (num_samples * interval)


@dataclass(frozen=True)
class RangeDopplerMap:
    """Complex range-Doppler map, ``values[range_bin, doppler_bin]``."""

    values: np.ndarray
    range_axis: np.ndarray
    doppler_axis: np.ndarray
    wavelength: float

    @property
    def velocity_axis(self) -> np.ndarray:
        return self.doppler_axis * self.wavelength / 2

    @property
    def zero_doppler_index(self) -> int:
        return self.doppler_axis.size // 2

    def peak(self) -> tuple[int, int]:
        n, d = np.unravel_index(np.argmax(np.abs(self.values)), self.values.shape)
        return int(n), int(d)

    def with_values(self, values) -> "RangeDopplerMap":
        return RangeDopplerMap(values, self.range_axis, self.doppler_axis, self.wavelength)


def _window(name, length):
    if name is None:
        return None
    if isinstance(name, str):
        if name == "hann":
            w = np.hanning(length)
        elif name in ("rect", "rectangular", "none"):
            return None
        else:
            raise ParameterError(f"unknown Doppler window {name!r}")
    else:
        w = np.asarray(name, dtype=float)
        if w.shape != (length,):
            raise ParameterError("window length must match the slow-time samples")
    return w * (length / w.sum())


def doppler_transform(estimates: np.ndarray, window=None) -> np.ndarray:
    """Slow-time DFT with the ``exp(+j...)`` kernel, ``1/D`` scaling and zero Doppler centred.

    ``estimates`` is ``(D, N)``; the result is ``(N, D)``.
    """
    h = np.asarray(estimates)
    w = _window(window, h.shape[0])
    if w is not None:
        h = h * w[:, None]
    return np.fft.fftshift(np.fft.ifft(h, axis=0), axes=0).T


def range_doppler_from_estimates(
    estimates: np.ndarray, params: RadarParams, processing: str = "pair", window=None
) -> RangeDopplerMap:
    d = estimates.shape[0]
    axis = doppler_axis(d, slow_time_interval(params, processing))
    return RangeDopplerMap(
        doppler_transform(estimates, window), params.range_axis(), axis, params.wavelength
    )


def range_doppler(rx: RxCpi, train: GolayTrain, processing: str = "pair", window=None) -> RangeDopplerMap:
    """Range-Doppler map of one CPI (slow-time DFT of the channel estimates)."""
    est = channel_estimates(rx, train, processing)
    return range_doppler_from_estimates(est, rx.params, processing, window)


def hrrp(rx: RxCpi, train: GolayTrain, processing: str = "pair") -> np.ndarray:
    """Coherent range profile: mean of the CPI's channel estimates, length ``N``."""
    return channel_estimates(rx, train, processing).mean(axis=0)


def hrrp_doppler_max(rd: RangeDopplerMap) -> np.ndarray:
    """Per range bin, the complex map value at its strongest Doppler bin."""
    v = rd.values
    k = np.argmax(v.real**2 + v.imag**2, axis=1)
    return v[np.arange(v.shape[0]), k]


@dataclass(frozen=True)
class Hrrp:
    """Range profiles over CPIs, ``values[cpi, range_bin]``."""

    values: np.ndarray
    range_axis: np.ndarray
    times: np.ndarray


@dataclass(frozen=True)
class Spectrogram:
    """Doppler-time map, ``values[cpi, doppler_bin]``."""

    values: np.ndarray
    doppler_axis: np.ndarray
    times: np.ndarray
    wavelength: float

    @property
    def velocity_axis(self) -> np.ndarray:
        return self.doppler_axis * self.wavelength / 2


def spectrogram_row(rd: RangeDopplerMap) -> np.ndarray:
    """Coherent sum of a range-Doppler map over range."""
    return rd.values.sum(axis=0)


def spectrogram(maps, times=None) -> Spectrogram:
    """Stack per-CPI range-summed Doppler rows into a Doppler-time map.

    ``maps`` may be a generator; only one map is held at a time.
    """
    rows, first = [], None
    for m in maps:
        first = m if first is None else first
        rows.append(spectrogram_row(m))
    if first is None:
        raise ParameterError("need at least one range-Doppler map")
    t = np.arange(len(rows), dtype=float) if times is None else np.asarray(times, dtype=float)
    return Spectrogram(np.stack(rows), first.doppler_axis, t, first.wavelength)


def notch_zero_doppler(product, width: int = 1):
    """Zero the Doppler bins within ``width`` bins of zero Doppler.

    Works on a :class:`RangeDopplerMap` (Doppler along columns) or a
    :class:`Spectrogram`; returns a new object of the same type.
    """
    if width < 0:
        raise ParameterError("notch width must be >= 0")
    values = np.array(product.values, copy=True)
    centre = product.doppler_axis.size // 2
    lo, hi = max(centre - width, 0), min(centre + width + 1, values.shape[-1])
    values[..., lo:hi] = 0
    if isinstance(product, RangeDopplerMap):
        return product.with_values(values)
    return Spectrogram(values, product.doppler_axis, product.times, product.wavelength)


def psl(rd, guard=(2, 2), region: str = "range") -> float:
    """Peak-to-sidelobe level in dB.

    Parameters
    ----------
    rd : RangeDopplerMap or ndarray
        Map indexed ``[range_bin, doppler_bin]``.
    guard : int or (int, int)
        Half-widths of the excluded window around the peak, in range and
        Doppler bins.
    region : {"range", "box"}
        ``"range"`` measures range sidelobes: every cell more than
        ``guard[0]`` range bins from the peak, at any Doppler. ``"box"``
        excludes only the ``guard`` rectangle (Doppler wraps around), so the
        Doppler sidelobes of the peak itself also count.

    Returns
    -------
    float
        ``20 log10(max sidelobe / peak)``, or ``PSL_FLOOR_DB`` if the
        sidelobes vanish.
    """
    values = np.abs(rd.values if isinstance(rd, RangeDopplerMap) else np.asarray(rd))
    if values.ndim == 1:
        values = values[:, None]
    g_r, g_d = (guard, guard) if np.ndim(guard) == 0 else guard
    n0, d0 = np.unravel_index(np.argmax(values), values.shape)
    peak = values[n0, d0]
    if peak == 0:
        raise ParameterError("map has no peak (all zero)")
    rows = np.abs(np.arange(values.shape[0]) - n0) <= g_r
    if region == "range":
        mask = np.repeat(rows[:, None], values.shape[1], axis=1)
    elif region == "box":
        dd = np.abs(np.arange(values.shape[1]) - d0)
        dd = np.minimum(dd, values.shape[1] - dd)
        mask = rows[:, None] & (dd <= g_d)[None, :]
    else:
        raise ParameterError(f"region must be 'range' or 'box', got {region!r}")
    side = values[~mask]
    ratio = side.max() / peak if side.size else 0.0
    if ratio <= 10 ** (PSL_FLOOR_DB / 20):
        return PSL_FLOOR_DB
    return float(20 * np.log10(ratio))
