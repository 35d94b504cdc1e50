"""Golay complementary pairs, Prouhet-Thue-Morse scheduling and radar timing.

Chips are stored as real +/-1 arrays; every correlation helper works in
complex arithmetic so Doppler-rotated echoes can reuse the same code.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from enum import Enum

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class ParameterError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class Mode(str, Enum):
    """Pulse-train scheduling: standard alternating Golay or PTM-ordered."""

    SG = "SG"
    MG = "MG"


def _as_mode(mode) -> Mode:
    try:
        return Mode(str(getattr(mode, "value", mode)).upper())
    except ValueError:
        raise ParameterError(f"unknown waveform mode {mode!r}; expected SG or MG") from None


@dataclass(frozen=True)
class RadarParams:
    """Radar timing and RF parameters.

    Defaults reproduce the 60 GHz / 1.76 GHz chip-rate profile with 4096
    packets of 2 us per CPI. Derived quantities are exposed as properties.
    """

    carrier_freq: float = 60e9
    chip_rate: float = 1.76e9
    pri: float = 2e-6
    packets_per_cpi: int = 4096
    fast_time_bins: int = 512
    noise_power: float = 1e-13  # W per complex sample (-100 dBm)

    def __post_init__(self):
        if self.carrier_freq <= 0 or self.chip_rate <= 0 or self.pri <= 0:
            raise ParameterError("carrier_freq, chip_rate and pri must be positive")
        if self.packets_per_cpi < 2 or self.packets_per_cpi % 2:
            raise ParameterError(f"packets_per_cpi must be even and >= 2, got {self.packets_per_cpi}")
        n = self.fast_time_bins
        if n < 2 or n & (n - 1):
            raise ParameterError(f"fast_time_bins must be a power of two, got {n}")
        if self.noise_power < 0:
            raise ParameterError("noise_power must be >= 0")

    @property
    def chip_time(self) -> float:
        return 1.0 / self.chip_rate

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def range_resolution(self) -> float:
        return SPEED_OF_LIGHT * self.chip_time / 2

    @property
    def max_range(self) -> float:
        return self.fast_time_bins * self.range_resolution

    @property
    def cpi_duration(self) -> float:
        return self.packets_per_cpi * self.pri

    @property
    def velocity_resolution(self) -> float:
        return self.wavelength / (2 * self.packets_per_cpi * self.pri)

    @property
    def max_unambiguous_velocity(self) -> float:
        # lambda / (4 T_p): the Nyquist velocity for slow-time sampling at T_p.
        return self.wavelength / (4 * self.pri)

    @property
    def rx_length(self) -> int:
        """Fast-time samples per received packet (CEF plus maximum delay)."""
        return 2 * self.fast_time_bins

    def range_axis(self) -> np.ndarray:
        return np.arange(self.fast_time_bins) * self.range_resolution

    def range_bin(self, r):
        """Nearest range bin index for range(s) ``r`` in metres."""
        return np.rint(np.asarray(r) / self.range_resolution).astype(int)

    def to_dict(self) -> dict:
        """Serialise with unit-suffixed keys (the scenario file convention)."""
        return {
            "carrier_ghz": self.carrier_freq / 1e9,
            "chip_rate_ghz": self.chip_rate / 1e9,
            "pri_us": self.pri * 1e6,
            "packets_per_cpi": self.packets_per_cpi,
            "fast_time_bins": self.fast_time_bins,
            "noise_power_w": self.noise_power,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RadarParams":
        scale = {
            "carrier_ghz": ("carrier_freq", 1e9),
            "chip_rate_ghz": ("chip_rate", 1e9),
            "pri_us": ("pri", 1e-6),
            "packets_per_cpi": ("packets_per_cpi", None),
            "fast_time_bins": ("fast_time_bins", None),
            "noise_power_w": ("noise_power", 1.0),
            "noise_power_dbm": ("noise_power", "dbm"),
        }
        kwargs = {}
        for key, value in d.items():
            if key not in scale:
                raise ParameterError(f"unknown radar key {key!r}")
            name, factor = scale[key]
            if name in kwargs:
                raise ParameterError(f"radar key {key!r} duplicates {name}")
            if factor is None:
                kwargs[name] = int(value)
            elif factor == "dbm":
                kwargs[name] = dbm_to_watts(float(value))
            else:
                kwargs[name] = float(value) * factor
        return cls(**kwargs)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GolayPair:
    first: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.first, dtype=float)
        b = np.asarray(self.second, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise ParameterError("Golay pair members must be 1-D and of equal length")
        n = a.size
        if n < 1 or n & (n - 1):
            raise ParameterError(f"sequence length must be a power of two, got {n}")
        if not (np.all(np.abs(a) == 1) and np.all(np.abs(b) == 1)):
            raise ParameterError("Golay chips must be +1/-1")
        object.__setattr__(self, "first", _freeze(a))
        object.__setattr__(self, "second", _freeze(b))

    def __len__(self):
        return self.first.size


def make_golay_pair(log2_length: int) -> GolayPair:
    """Build a length ``2**log2_length`` pair by recursive concatenation.

    Starting from ``([1, 1], [1, -1])`` each step maps ``(a, b)`` to
    ``(a|b, a|-b)``, which preserves complementarity exactly.
    """
    m = int(log2_length)
    if m != log2_length or not 1 <= m <= 16:
        raise ParameterError(f"log2_length must be an integer in [1, 16], got {log2_length}")
    a = np.array([1.0, 1.0])
    b = np.array([1.0, -1.0])
    for _ in range(m - 1):
        a, b = np.concatenate([a, b]), np.concatenate([a, -b])
    return GolayPair(a, b)


def aperiodic_autocorr(x: np.ndarray) -> np.ndarray:
    """Aperiodic autocorrelation at lags ``-(N-1) .. N-1`` (zero lag at N-1)."""
    x = np.asarray(x)
    n = x.size
    nfft = 1 << (2 * n - 1).bit_length()
    if np.isrealobj(x) and np.all(np.abs(x) == 1):
        # exact integer result for +/-1 chips
        spec = np.fft.rfft(x, nfft)
        full = np.fft.irfft(spec * np.conj(spec), nfft)
        out = np.concatenate([full[nfft - n + 1:], full[:n]])
        return np.rint(out).astype(np.int64)
    spec = np.fft.fft(x, nfft)
    full = np.fft.ifft(spec * np.conj(spec))
    return np.concatenate([full[nfft - n + 1:], full[:n]])


def complementarity_profile(pair: GolayPair) -> np.ndarray:
    """Sum of the two aperiodic autocorrelations over all ``2N - 1`` lags."""
    a, b = np.asarray(pair.first), np.asarray(pair.second)
    if a.shape != b.shape:
        raise ParameterError("sequences must have equal length")
    return aperiodic_autocorr(a) + aperiodic_autocorr(b)


def make_ptm(length: int) -> np.ndarray:
    """Prouhet-Thue-Morse bits ``q_0 .. q_{length-1}`` via the Boolean recursion."""
    if length < 1:
        raise ParameterError("length must be >= 1")
    q = np.zeros(length, dtype=np.int8)
    for p in range(1, length):
        q[p] = q[p // 2] if p % 2 == 0 else 1 - q[(p - 1) // 2]
    return q


@dataclass(frozen=True)
class GolayTrain:
    """Per-packet transmit sequences for one CPI, shape ``(P, N)``."""

    packets: np.ndarray
    mode: Mode
    pair: GolayPair
    # autocorr_index[p] is 0 when packet p's autocorrelation equals that of
    # pair.first and 1 when it equals pair.second (time reversal and negation
    # leave the autocorrelation unchanged).
    autocorr_index: np.ndarray = field(repr=False)
    # packets[p] == sequences[sequence_index[p]]; a train uses at most four
    # distinct sequences (G1, G2, -G2 reversed, G1 reversed)
    sequences: np.ndarray = field(repr=False, default=None)
    sequence_index: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.sequences is None:
            seqs, inv = np.unique(self.packets, axis=0, return_inverse=True)
            object.__setattr__(self, "sequences", _freeze(seqs))
            object.__setattr__(self, "sequence_index", _freeze(inv.ravel()))

    @property
    def num_packets(self) -> int:
        return self.packets.shape[0]

    @property
    def length(self) -> int:
        return self.packets.shape[1]

    @property
    def total_energy(self) -> float:
        return float(self.packets.size)


def schedule_train(pair: GolayPair, num_packets: int, mode="MG") -> GolayTrain:
    """Lay out a CPI of ``num_packets`` packets.

    SG alternates ``G1, G2``. MG walks the PTM bits of length ``P/2``; bit 0
    sends ``(G1[n], G2[n])`` and bit 1 sends ``(-G2[-n], G1[-n])``.
    """
    mode = _as_mode(mode)
    if num_packets < 2 or num_packets % 2:
        raise ParameterError(f"number of packets must be even and >= 2, got {num_packets}")
    g1, g2 = np.asarray(pair.first), np.asarray(pair.second)
    npairs = num_packets // 2
    bits = make_ptm(npairs) if mode is Mode.MG else np.zeros(npairs, dtype=np.int8)
    sequences = np.stack([g1, g2, -g2[::-1], g1[::-1]])
    seq_idx = np.empty(num_packets, dtype=np.int64)
    seq_idx[0::2] = 2 * bits
    seq_idx[1::2] = 2 * bits + 1
    packets = sequences[seq_idx]
    # G1 and its reversal share one autocorrelation, G2 and -G2 reversed the other
    idx = np.array([0, 1, 1, 0], dtype=np.int8)[seq_idx]
    return GolayTrain(
        _freeze(packets), mode, pair, _freeze(idx), _freeze(sequences), _freeze(seq_idx)
    )


def weighted_autocorr_sum(train: GolayTrain, doppler_phase: float) -> np.ndarray:
    """Return ``sum_p exp(j p theta) (G_p * G_p[-n])`` over lags ``-(N-1)..N-1``."""
    if not abs(doppler_phase) < np.pi:
        raise ParameterError("doppler_phase must satisfy |theta| < pi")
    # only two distinct autocorrelations occur in a train
    c = np.stack([aperiodic_autocorr(train.pair.first), aperiodic_autocorr(train.pair.second)])
    w = np.exp(1j * doppler_phase * np.arange(train.num_packets))
    weights = np.array([w[train.autocorr_index == k].sum() for k in (0, 1)])
    return weights @ c
