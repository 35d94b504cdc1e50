"""GLRT statistic, range-compensated RCS integration and empirical ROC sweeps.

The ROC sweep integrates, per CPI, the range-compensated HRRP over each
target's ground-truth range bins (target samples) and over shifted copies of
the same bin pattern away from every target (noise samples). Thresholding
those RCS estimates gives empirical Pd and Pfa.

Noise is injected after processing. For complementary-pair processing the
matched-filter noise in the range-Doppler map is exactly white circular
Gaussian with variance ``N_p / (N P)`` per cell, so drawing it directly is
statistically identical to synthesising noisy samples and correlating them
(``route="full"`` does the latter and is used to cross-check).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .echo import RxCpi, synthesize_rx
from .processing import (
    channel_estimates,
    doppler_transform,
    matched_filter,
    NoiselessEstimator,
    range_doppler_from_estimates,
)
from .scene import ALPHA_60GHZ, Scene, sample_scene, truth_ranges
from .waveform import GolayTrain, ParameterError, RadarParams, _as_mode, make_golay_pair, schedule_train


class HistogramResolutionWarning(UserWarning):
    """Too few samples for the requested histogram bin width."""


def glrt_statistic(
    rx: RxCpi, train: GolayTrain, range_bin: int, doppler_bin: int, noise_power: float | None = None
) -> float:
    """GLRT statistic at one delay-Doppler cell.

    ``|sum_p (x_p corr G_p)[n] exp(j 2 pi f p T_p)|^2 / (N_p P N)`` with ``f``
    taken from the centred per-packet Doppler grid (``doppler_bin = P/2`` is
    zero Doppler). Under noise alone its mean is 1.
    """
    params = rx.params
    P, N = train.num_packets, train.length
    if not 0 <= range_bin < N:
        raise ParameterError(f"range_bin must lie in [0, {N})")
    if not 0 <= doppler_bin < P:
        raise ParameterError(f"doppler_bin must lie in [0, {P})")
    n_p = params.noise_power if noise_power is None else noise_power
    if n_p <= 0:
        raise ParameterError("noise_power must be positive")
    mf = matched_filter(rx.samples, train)[:, range_bin]
    f = (doppler_bin - P // 2) / (P * params.pri)
    s = np.sum(mf * np.exp(2j * np.pi * f * np.arange(P) * params.pri))
    return float(abs(s) ** 2 / (n_p * train.total_energy))


def range_compensation(params: RadarParams, bins=None) -> np.ndarray:
    """``r**2 exp(+j 4 pi r / lambda)`` at bin-centre ranges."""
    r = params.range_axis() if bins is None else np.asarray(bins) * params.range_resolution
    return r**2 * np.exp(4j * np.pi * r / params.wavelength)


def _to_dbsm(power):
    with np.errstate(divide="ignore"):
        return 10 * np.log10(power)


def integrate_rcs(
    hrrp_row: np.ndarray,
    truth_bins,
    wavelength: float,
    range_resolution: float,
    coherent: bool = True,
) -> float:
    """Range-compensated RCS estimate over a set of range bins, in dBsm.

    ``|sum_b chi[b] r_b**2 exp(j 4 pi r_b / lambda)|**2`` with ``r_b`` the bin
    centre; ``coherent=False`` sums the squared magnitudes instead. A zero
    profile gives ``-inf``.
    """
    bins = np.unique(np.asarray(truth_bins, dtype=int))
    row = np.asarray(hrrp_row)
    if bins.size == 0:
        raise ParameterError("truth bin set is empty")
    if bins.min() < 0 or bins.max() >= row.size:
        raise ParameterError("truth bins fall outside the range axis")
    r = bins * range_resolution
    terms = row[bins] * r**2 * np.exp(4j * np.pi * r / wavelength)
    power = abs(terms.sum()) ** 2 if coherent else np.sum(np.abs(terms) ** 2)
    return float(_to_dbsm(power))


def noise_bin_sets(
    truth_sets, num_bins: int, count: int, guard: int = 10, placement: str = "spread"
) -> list:
    """Shifted copies of each truth pattern lying ``guard`` bins clear of every target.

    For each truth set up to ``count`` admissible shifts are taken: evenly
    spread over the whole range axis (``"spread"``) or the smallest shifts in
    either direction (``"near"``), which keeps noise samples at ranges
    comparable to the target's.
    """
    if placement not in ("spread", "near"):
        raise ParameterError("placement must be 'spread' or 'near'")
    taken = np.zeros(num_bins, dtype=bool)
    for s in truth_sets:
        taken[np.asarray(s, dtype=int)] = True
    # bins within `guard` of a truth bin are off limits
    blocked = np.convolve(taken, np.ones(2 * guard + 1), mode="same") > 0
    out = []
    for s in truth_sets:
        s = np.asarray(s, dtype=int)
        shifts = np.arange(-s.min(), num_bins - s.max())
        ok = [k for k in shifts if not blocked[s + k].any()]
        if not ok:
            continue
        if placement == "near":
            ok = sorted(ok, key=lambda k: (abs(k), k))[:count]
            out.extend(s + k for k in sorted(ok))
            continue
        pick = np.unique(np.linspace(0, len(ok) - 1, min(count, len(ok))).round().astype(int))
        out.extend(s + ok[i] for i in pick)
    return out


@dataclass(frozen=True)
class DetectionConfig:
    """ROC sweep settings.

    ``snr_grid`` is the receiver-input SNR in dB: the per-sample received
    power of a ``reference_rcs_dbsm`` reflector at ``reference_range_m``
    divided by the per-sample noise power ``N_p``. ``thresholds`` are in dBsm.
    """

    snr_grid: tuple = tuple(np.linspace(-20.0, 5.0, 5))
    thresholds: tuple = tuple(np.arange(-60.0, 40.25, 0.25))
    target_pfa: float = 1e-3
    seed: int = 0
    num_cpis: int | None = None
    first_cpi: int = 0
    cpi_stride: int = 1
    pd_levels: tuple = (0.9, 0.95, 0.99)
    noise_sets: int = 8
    guard_bins: int = 10
    noise_placement: str = "near"
    hist_bin_db: float = 1.0
    coherent: bool = True
    hrrp: str = "doppler_max"
    processing: str = "pair"
    route: str = "processed"
    reference_rcs_dbsm: float = -30.0
    reference_range_m: float = 43.0
    alpha: float = ALPHA_60GHZ
    visibility_prob: float = 0.5
    visibility_hold: object = "cpi"

    def __post_init__(self):
        if len(self.snr_grid) == 0:
            raise ParameterError("snr_grid must be nonempty")
        th = np.asarray(self.thresholds, dtype=float)
        if th.size == 0 or np.any(np.diff(th) < 0):
            raise ParameterError("thresholds must be nonempty and sorted")
        if not 0 < self.target_pfa < 1:
            raise ParameterError("target_pfa must lie in (0, 1)")
        if self.hrrp not in ("doppler_max", "coherent"):
            raise ParameterError("hrrp must be 'doppler_max' or 'coherent'")
        if self.route not in ("processed", "full"):
            raise ParameterError("route must be 'processed' or 'full'")
        if self.route == "processed" and self.processing != "pair":
            raise ParameterError("processed-domain noise injection requires pair processing")
        if self.hist_bin_db <= 0:
            raise ParameterError("hist_bin_db must be positive")

    def noise_power(self, snr_db: float, params: RadarParams) -> float:
        """Per-sample noise power ``N_p`` that realises ``snr_db``."""
        r = self.reference_range_m
        ref = 10 ** (self.reference_rcs_dbsm / 10) * np.exp(-4 * self.alpha * r) / r**4
        return float(ref / 10 ** (snr_db / 10))


@dataclass
class DetectionReport:
    mode: str
    snr_grid: np.ndarray
    thresholds: np.ndarray
    target_pfa: float
    target_samples: list  # per SNR, dBsm
    noise_samples: list
    hist_edges: np.ndarray = field(default=None)
    pd: np.ndarray = field(default=None)  # (S, T)
    pfa: np.ndarray = field(default=None)
    threshold_at_pfa: np.ndarray = field(default=None)
    pd_at_pfa: np.ndarray = field(default=None)
    min_snr: dict = field(default_factory=dict)
    num_cpis: int = 0

    def finalize(self, pd_levels, hist_bin_db):
        th = self.thresholds
        self.pd = np.stack([_exceed(t, th) for t in self.target_samples])
        self.pfa = np.stack([_exceed(n, th) for n in self.noise_samples])
        self.threshold_at_pfa = np.array(
            [np.quantile(n, 1 - self.target_pfa) if n.size else np.nan for n in self.noise_samples]
        )
        self.pd_at_pfa = np.array(
            [np.mean(t > g) if t.size else np.nan for t, g in zip(self.target_samples, self.threshold_at_pfa)]
        )
        self.min_snr = {lvl: _crossing(self.snr_grid, self.pd_at_pfa, lvl) for lvl in pd_levels}
        n_min = min(n.size for n in self.noise_samples)
        if n_min * self.target_pfa < 10:
            warnings.warn(
                f"only {n_min} noise samples per SNR; the Pfa={self.target_pfa:g} "
                "threshold rests on fewer than 10 exceedances",
                HistogramResolutionWarning,
                stacklevel=3,
            )
        self.hist_edges = _edges(self.target_samples + self.noise_samples, hist_bin_db)
        return self

    def histograms(self, snr_index: int):
        """(target counts, noise counts) on ``hist_edges`` for one SNR point."""
        e = self.hist_edges
        return (
            np.histogram(_finite(self.target_samples[snr_index]), e)[0],
            np.histogram(_finite(self.noise_samples[snr_index]), e)[0],
        )

    def pfa_at(self, threshold_dbsm: float) -> np.ndarray:
        return np.array([np.mean(n > threshold_dbsm) for n in self.noise_samples])

    def pd_at(self, threshold_dbsm: float) -> np.ndarray:
        return np.array([np.mean(t > threshold_dbsm) for t in self.target_samples])


def _exceed(samples, thresholds):
    s = np.sort(samples)
    if s.size == 0:
        return np.full(len(thresholds), np.nan)
    return 1.0 - np.searchsorted(s, thresholds, side="right") / s.size


def _crossing(snr, pd, level):
    """Lowest SNR at which ``pd`` reaches ``level`` (linear interpolation), else ``inf``."""
    hit = np.nonzero(pd >= level)[0]
    if hit.size == 0:
        return float("inf")
    i = hit[0]
    if i == 0:
        return float(snr[0])
    x0, x1, y0, y1 = snr[i - 1], snr[i], pd[i - 1], pd[i]
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


def _finite(x):
    x = np.asarray(x)
    return x[np.isfinite(x)]


def _edges(sample_sets, width):
    allv = np.concatenate([_finite(s) for s in sample_sets] + [np.zeros(0)])
    if allv.size == 0:
        return np.array([0.0, width])
    n = max(allv.size // max(len(sample_sets), 1), 1)
    span = allv.max() - allv.min()
    if span / width > n / 5:
        # fewer than ~5 samples per bin on average: widen
        new = span / max(n / 5, 1)
        warnings.warn(
            f"widening histogram bins from {width} to {new:.2f} dB for {n} samples",
            HistogramResolutionWarning,
            stacklevel=4,
        )
        width = new
    lo = np.floor(allv.min() / width) * width
    hi = np.ceil(allv.max() / width) * width + width
    return np.arange(lo, hi + width / 2, width)


def _cpi_seed(seed, snr_index, cpi_index):
    return np.random.SeedSequence([int(seed), int(snr_index), int(cpi_index)])


def _profile(rd_values, method):
    if method == "coherent":
        return rd_values[:, rd_values.shape[1] // 2]
    k = np.argmax(rd_values.real**2 + rd_values.imag**2, axis=1)
    return rd_values[np.arange(rd_values.shape[0]), k]


def run_roc_modes(
    scene: Scene,
    config: DetectionConfig,
    modes=("SG", "MG"),
    params: RadarParams | None = None,
    progress=None,
) -> dict:
    """Run the ROC sweep for several waveform modes on common random numbers.

    Scatterer states and noise draws depend only on ``config.seed``, the SNR
    index and the CPI index, so every mode sees identical scenes and noise.
    """
    params = RadarParams() if params is None else params
    modes = [_as_mode(m) for m in modes]
    pair = make_golay_pair(int(np.log2(params.fast_time_bins)))
    trains = {m: schedule_train(pair, params.packets_per_cpi, m) for m in modes}
    available = scene.num_cpis(params)
    stride = config.cpi_stride
    if stride < 1:
        raise ParameterError("cpi_stride must be >= 1")
    span = available - config.first_cpi
    count = -(-span // stride) if config.num_cpis is None else config.num_cpis
    if count < 1 or config.first_cpi + (count - 1) * stride >= available:
        raise ParameterError(
            f"scene provides {available} CPIs; requested {count} from CPI "
            f"{config.first_cpi} with stride {stride}"
        )
    snr = np.asarray(config.snr_grid, dtype=float)
    n_bins = params.fast_time_bins
    comp = range_compensation(params)
    targets_s = {m: [[] for _ in snr] for m in modes}
    noise_s = {m: [[] for _ in snr] for m in modes}
    targets = scene.targets
    track_target = np.array([t.target for t in scene.tracks])

    for k, m_idx in enumerate(range(config.first_cpi, config.first_cpi + count * stride, stride)):
        states = sample_scene(
            scene,
            params,
            m_idx,
            config.seed,
            visibility_prob=config.visibility_prob,
            visibility_hold=config.visibility_hold,
            alpha=config.alpha,
        )
        rng_r = truth_ranges(scene, params, m_idx)
        truth = []
        for name in targets:
            bins = np.unique(params.range_bin(rng_r[track_target == name]))
            bins = bins[bins < n_bins]
            if bins.size:
                truth.append(bins)
        sets = noise_bin_sets(
            truth, n_bins, config.noise_sets, config.guard_bins, config.noise_placement
        )
        # only the range rows some bin set touches need noise and a profile
        rows = np.unique(np.concatenate(truth + sets))
        local = np.full(n_bins, -1)
        local[rows] = np.arange(rows.size)
        truth_l = [local[b] for b in truth]
        sets_l = [local[b] for b in sets]
        comp_rows = comp[rows]
        signal = {}
        if config.route == "processed":
            estimator = NoiselessEstimator(states, params, config.processing)
            for m in modes:
                rd_sig = doppler_transform(estimator.estimates(trains[m]))
                signal[m] = rd_sig[rows].astype(np.complex64)
        for s_idx, snr_db in enumerate(snr):
            n_p = config.noise_power(snr_db, params)
            seed = _cpi_seed(config.seed, s_idx, m_idx)
            if config.route == "processed":
                var = n_p / (params.fast_time_bins * params.packets_per_cpi)
                shape = signal[modes[0]].shape
                z = np.random.default_rng(seed).standard_normal(shape + (2,), dtype=np.float32)
                noise = z.view(np.complex64)[..., 0] * np.float32(np.sqrt(var / 2))
            for m in modes:
                if config.route == "processed":
                    rd = signal[m] + noise
                else:
                    rx = synthesize_rx(trains[m], states, params, n_p, int(seed.generate_state(1)[0]), m_idx)
                    est = channel_estimates(rx, trains[m], config.processing)
                    rd = range_doppler_from_estimates(est, params, config.processing).values[rows]
                row = _profile(rd, config.hrrp).astype(complex) * comp_rows
                for bins in truth_l:
                    targets_s[m][s_idx].append(_set_power(row, bins, config.coherent))
                for bins in sets_l:
                    noise_s[m][s_idx].append(_set_power(row, bins, config.coherent))
        if progress is not None:
            progress(k + 1, count)

    reports = {}
    for m in modes:
        rep = DetectionReport(
            mode=m.value,
            snr_grid=snr,
            thresholds=np.asarray(config.thresholds, dtype=float),
            target_pfa=config.target_pfa,
            target_samples=[_to_dbsm(np.array(v)) for v in targets_s[m]],
            noise_samples=[_to_dbsm(np.array(v)) for v in noise_s[m]],
            num_cpis=count,
        )
        reports[m.value] = rep.finalize(config.pd_levels, config.hist_bin_db)
    return reports


def _set_power(compensated_row, bins, coherent):
    terms = compensated_row[bins]
    if coherent:
        return abs(terms.sum()) ** 2
    return float(np.sum(np.abs(terms) ** 2))


def run_roc(
    scene: Scene, config: DetectionConfig, mode="MG", params: RadarParams | None = None
) -> DetectionReport:
    """Empirical detection report for one waveform mode (see :func:`run_roc_modes`)."""
    return run_roc_modes(scene, config, (mode,), params)[_as_mode(mode).value]


def report_rows(report: DetectionReport):
    """One row per (SNR, threshold): ``(snr_db, threshold_dbsm, pd, pfa)``."""
    for i, s in enumerate(report.snr_grid):
        for j, g in enumerate(report.thresholds):
            yield float(s), float(g), float(report.pd[i, j]), float(report.pfa[i, j])


def summary_table(reports: dict) -> str:
    """Minimum SNR per Pd level and mode, laid out as a plain-text table."""
    modes = list(reports)
    levels = list(next(iter(reports.values())).min_snr)
    pfa = next(iter(reports.values())).target_pfa
    lines = [f"Minimum SNR (dB) at Pfa = {pfa:g}", "Pd     " + "".join(f"{m:>10}" for m in modes)]
    for lvl in levels:
        cells = "".join(f"{reports[m].min_snr[lvl]:>10.2f}" for m in modes)
        lines.append(f"{lvl * 100:4.0f}%  {cells}")
    return "\n".join(lines)
