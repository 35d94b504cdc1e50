import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jrc11ad.echo import RxCpi, synthesize_rx
from jrc11ad.processing import (
    PSL_FLOOR_DB,
    NoiselessEstimator,
    RangeDopplerMap,
    Spectrogram,
    channel_estimate,
    channel_estimates,
    doppler_axis,
    doppler_transform,
    hrrp,
    hrrp_doppler_max,
    matched_filter,
    noiseless_channel_estimates,
    notch_zero_doppler,
    psl,
    range_doppler,
    range_doppler_from_estimates,
    spectrogram,
)
from jrc11ad.scene import point_states
from jrc11ad.waveform import ParameterError, RadarParams, make_golay_pair, schedule_train


@pytest.fixture(scope="module")
def short():
    return RadarParams(packets_per_cpi=64)


def _whole_cycle_range(params, r):
    return np.round(2 * r / params.wavelength) * params.wavelength / 2


def test_unit_static_scatterer_gives_unit_tap(short, pair512):
    tr = schedule_train(pair512, 64, "SG")
    r0 = _whole_cycle_range(short, 235 * short.range_resolution)
    rx = synthesize_rx(tr, point_states(short, [r0], [0.0]), short)
    h = channel_estimate(rx.samples[0], rx.samples[1], tr.packets[0], tr.packets[1])
    assert h[235] == pytest.approx(1.0, abs=1e-10)
    assert np.abs(np.delete(h, 235)).max() < 1e-12


def test_zero_input_gives_zero_taps(pair512):
    z = np.zeros(1024)
    assert np.all(channel_estimate(z, z, pair512.first, pair512.second) == 0)


def test_fast_correlation_matches_direct(short, pair512):
    tr = schedule_train(pair512, 64, "MG")
    rng = np.random.default_rng(0)
    x = rng.standard_normal((64, 1024)) + 1j * rng.standard_normal((64, 1024))
    rx = RxCpi(x, short)
    est = channel_estimates(rx, tr)
    for k in (0, 5, 31):
        direct = sum(
            np.correlate(x[2 * k + i], tr.packets[2 * k + i].astype(float), "valid")[:512] for i in (0, 1)
        ) / 1024
        np.testing.assert_allclose(est[k], direct, rtol=1e-10, atol=1e-12)
    mf = matched_filter(x, tr)
    np.testing.assert_allclose(mf[3], np.correlate(x[3], tr.packets[3].astype(float), "valid")[:512], atol=1e-9)


def test_pair_sidelobes_match_and_slow_time_separates(params, trains):
    # each pair is complementary in both schedules, so per-pair off-peak
    # magnitudes agree; the PTM ordering pays off only across pairs
    st_ = point_states(params, [20.0], [10.0])
    est = {m: noiseless_channel_estimates(tr, st_, params) for m, tr in trains.items()}
    off = np.abs(np.arange(512) - 235.5) > 3  # skip the peak as it migrates 235 -> 236
    np.testing.assert_allclose(np.abs(est["SG"][:, off]), np.abs(est["MG"][:, off]), atol=1e-12)
    level = {m: psl(doppler_transform(e)) for m, e in est.items()}
    assert level["SG"] > level["MG"]


@pytest.mark.parametrize("processing", ["pair", "packet"])
def test_noiseless_estimator_matches_full_route(short, pair512, processing):
    st_ = point_states(short, [4.0, 19.0, 33.0], [5.0, -20.0, 35.0], [1.0, 0.2, 0.7j])
    for mode in ("SG", "MG"):
        tr = schedule_train(pair512, 64, mode)
        full = channel_estimates(synthesize_rx(tr, st_, short), tr, processing)
        fast = NoiselessEstimator(st_, short, processing).estimates(tr)
        np.testing.assert_allclose(fast, full, atol=1e-12)


def test_static_scene_hrrp_has_single_peak(short, pair512):
    for mode in ("SG", "MG"):
        tr = schedule_train(pair512, 64, mode)
        rx = synthesize_rx(tr, point_states(short, [12.0], [0.0]), short)
        h = hrrp(rx, tr)
        k = short.range_bin(12.0)
        assert np.argmax(np.abs(h)) == k
        assert np.abs(np.delete(h, k)).max() < 1e-12 * abs(h[k])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 200), st.integers(1, 250))
def test_shift_covariance(n0, k):
    params = RadarParams(packets_per_cpi=4)
    tr = schedule_train(make_golay_pair(9), 4, "MG")
    r = lambda n: n * params.range_resolution
    a = hrrp(synthesize_rx(tr, point_states(params, [r(n0 + 20)], [0.0]), params), tr)
    b = hrrp(synthesize_rx(tr, point_states(params, [r(n0 + 20 + k)], [0.0]), params), tr)
    assert np.argmax(np.abs(b)) - np.argmax(np.abs(a)) == k
    np.testing.assert_allclose(np.abs(b[k:]), np.abs(a[: 512 - k]), atol=1e-12)


def test_range_doppler_point_target(params, trains):
    st_ = point_states(params, [20.0], [10.0])
    rx = synthesize_rx(trains["MG"], st_, params)
    rd = range_doppler(rx, trains["MG"])
    assert rd.values.shape == (512, 2048)
    n, d = rd.peak()
    assert n == 235
    fd = 2 * 10.0 / params.wavelength
    assert d == np.argmin(np.abs(rd.doppler_axis - fd))
    assert rd.velocity_axis[d] == pytest.approx(10.0, abs=params.velocity_resolution * 2)
    assert psl(rd) <= -40


def test_doppler_axis_layout(params):
    ax = doppler_axis(2048, 2 * params.pri)
    assert ax[1024] == 0
    assert ax[0] == pytest.approx(-1 / (4 * params.pri))
    assert np.diff(ax) == pytest.approx(np.full(2047, 1 / (4096 * params.pri)))


def test_static_target_energy_in_zero_doppler(short, pair512):
    tr = schedule_train(pair512, 64, "SG")
    rd = range_doppler(synthesize_rx(tr, point_states(short, [15.0], [0.0]), short), tr)
    z = rd.zero_doppler_index
    assert np.abs(np.delete(rd.values, z, axis=1)).max() < 1e-12
    notched = notch_zero_doppler(rd)
    assert np.abs(notched.values).max() < 1e-12


def test_parseval(short, pair512):
    tr = schedule_train(pair512, 64, "MG")
    rng = np.random.default_rng(2)
    rx = RxCpi(rng.standard_normal((64, 1024)) + 0j, short)
    est = channel_estimates(rx, tr)
    rd = doppler_transform(est)
    # 1/D scaling: map energy times D equals estimate energy
    assert np.sum(np.abs(rd) ** 2) * est.shape[0] == pytest.approx(np.sum(np.abs(est) ** 2), rel=1e-9)


def test_notch_accounting(short, pair512):
    tr = schedule_train(pair512, 64, "MG")
    st_ = point_states(short, [10.0, 25.0], [0.0, 30.0])
    rd = range_doppler(synthesize_rx(tr, st_, short), tr)
    z = rd.zero_doppler_index
    before = np.sum(np.abs(rd.values) ** 2)
    zero_energy = np.sum(np.abs(rd.values[:, z - 1 : z + 2]) ** 2)
    after = notch_zero_doppler(rd, 1)
    assert before - np.sum(np.abs(after.values) ** 2) == pytest.approx(zero_energy, rel=1e-12)
    assert after.peak()[0] == short.range_bin(25.0)
    with pytest.raises(ParameterError):
        notch_zero_doppler(rd, -1)


def test_psl_sentinel_for_delta():
    v = np.zeros((16, 16))
    v[5, 7] = 1.0
    assert psl(v) == PSL_FLOOR_DB
    assert psl(v, region="box") == PSL_FLOOR_DB


def test_psl_regions():
    v = np.zeros((32, 32))
    v[10, 10] = 1.0
    v[10, 20] = 0.1  # Doppler sidelobe at the peak's range
    v[20, 10] = 0.01  # range sidelobe
    assert psl(v, region="range") == pytest.approx(-40.0)
    assert psl(v, region="box") == pytest.approx(-20.0)


@pytest.mark.parametrize("v", [-25.0, -5.0, 5.0, 25.0])
def test_mg_psl_never_worse_than_sg(params, trains, v):
    st_ = point_states(params, [20.0], [v])
    levels = {m: psl(doppler_transform(noiseless_channel_estimates(tr, st_, params))) for m, tr in trains.items()}
    assert levels["MG"] <= levels["SG"]


def test_hrrp_doppler_max_picks_strongest_column():
    v = np.zeros((4, 8), dtype=complex)
    v[1, 3] = 2 + 1j
    v[1, 5] = 1
    rd = RangeDopplerMap(v, np.arange(4.0), doppler_axis(8, 1.0), 0.005)
    assert hrrp_doppler_max(rd)[1] == 2 + 1j


def test_spectrogram_ridge(params, trains):
    maps = []
    for m in range(3):
        st_ = point_states(params, [20.0], [6.0], cpi_index=m)
        est = noiseless_channel_estimates(trains["MG"], st_, params)
        maps.append(RangeDopplerMap(doppler_transform(est), params.range_axis(), doppler_axis(2048, 2 * params.pri), params.wavelength))
    sp = spectrogram(maps, times=[0.0, 1.0, 2.0])
    assert isinstance(sp, Spectrogram)
    ridge = sp.velocity_axis[np.argmax(np.abs(sp.values), axis=1)]
    assert np.allclose(ridge, 6.0, atol=params.velocity_resolution)
    with pytest.raises(ParameterError):
        spectrogram([])


def test_fixed_delay_replica_keeps_range_and_doppler(small_params):
    walk = point_states(small_params, [5.0], [30.0])
    fixed = point_states(small_params, [5.0], [30.0], range_walk=False)
    assert np.all(fixed.range == 5.0)
    assert walk.range[-1, 0] > 5.0
    np.testing.assert_array_equal(fixed.doppler, walk.doppler)


def test_spectrogram_accepts_generator(params, trains):
    states = point_states(params, [20.0], [5.0])
    est = NoiselessEstimator(states, params).estimates(trains["MG"])
    maps = (range_doppler_from_estimates(est, params) for _ in range(3))
    sp = spectrogram(maps)
    assert sp.values.shape == (3, params.packets_per_cpi // 2)
    with pytest.raises(ParameterError):
        spectrogram(iter(()))
