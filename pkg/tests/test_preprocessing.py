"""Conditioning-chain tests.

Filtering is checked spectrally against direct DFT periodograms, epoching
against window arithmetic done by hand, rejection against a brute-force
filter, and resampling against analytic sinusoids.
"""

import numpy as np
import pytest

from neuroidbench import preprocessing as pp
from neuroidbench.bundle import RawRecording
from neuroidbench.errors import EmptyError, ParamError


def make_recording(signal, rate, events=None, subject="s01", session="a"):
    signal = np.atleast_2d(np.asarray(signal, dtype=float))
    if events is None:
        events = np.empty((0, 2), dtype=np.int64)
    else:
        events = np.asarray(events, dtype=np.int64).reshape(-1, 2)
    return RawRecording(subject, session, float(rate), signal, events)


def make_epochs(data, rate, tmin=-0.2):
    data = np.asarray(data, dtype=float)
    n_epochs, n_channels, n_times = data.shape
    return pp.EpochSet(
        data=data,
        subject_ids=np.array(["s01"] * n_epochs, dtype=object),
        session_ids=np.array(["a"] * n_epochs, dtype=object),
        sampling_rate_hz=float(rate),
        tmin_s=tmin,
        tmax_s=tmin + (n_times - 1) / rate,
        channel_names=tuple(f"ch{i}" for i in range(n_channels)),
    )


# ---------------------------------------------------------------------------
# bandpass
# ---------------------------------------------------------------------------

def test_bandpass_passes_in_band_sinusoid():
    rate = 256.0
    t = np.arange(4096) / rate
    x = np.sin(2 * np.pi * 25.0 * t)
    y = pp.bandpass(make_recording(x, rate), 1.0, 50.0).signal[0]
    rms_in = np.sqrt(np.mean(x ** 2))
    rms_out = np.sqrt(np.mean(y ** 2))
    assert abs(rms_out - rms_in) / rms_in < 0.02


def test_bandpass_removes_slow_drift():
    rate = 256.0
    t = np.arange(8192) / rate
    x = np.sin(2 * np.pi * 0.2 * t)
    y = pp.bandpass(make_recording(x, rate), 1.0, 50.0).signal[0]
    assert np.sqrt(np.mean(y ** 2)) < 0.1 * np.sqrt(np.mean(x ** 2))


def test_bandpass_stopband_attenuation_by_periodogram():
    # spectral oracle: direct DFT of filtered white noise; the 200 Hz rate
    # puts 60 Hz well inside the representable band
    rate = 200.0
    rng = np.random.default_rng(13)
    x = rng.normal(size=1 << 16)
    y = pp.bandpass(make_recording(x, rate), 1.0, 50.0).signal[0]
    spectrum = np.abs(np.fft.rfft(y)) ** 2
    freqs = np.fft.rfftfreq(x.size, 1.0 / rate)
    power_25 = spectrum[(freqs >= 22.5) & (freqs <= 27.5)].mean()
    power_60 = spectrum[(freqs >= 57.5) & (freqs <= 62.5)].mean()
    assert 10.0 * np.log10(power_25 / power_60) >= 20.0


def test_bandpass_is_linear():
    rate = 256.0
    rng = np.random.default_rng(14)
    for _ in range(5):
        x = rng.normal(size=(3, 1000))
        y = rng.normal(size=(3, 1000))
        a, b = rng.normal(size=2)
        lhs = pp.bandpass(make_recording(a * x + b * y, rate), 1.0, 50.0).signal
        rhs = a * pp.bandpass(make_recording(x, rate), 1.0, 50.0).signal \
            + b * pp.bandpass(make_recording(y, rate), 1.0, 50.0).signal
        scale = np.abs(rhs).max()
        assert np.abs(lhs - rhs).max() <= 1e-6 * max(scale, 1.0)


def test_bandpass_preserves_length_and_rejects_bad_band():
    rate = 128.0
    x = np.random.default_rng(15).normal(size=(2, 500))
    out = pp.bandpass(make_recording(x, rate), 1.0, 40.0)
    assert out.signal.shape == x.shape
    with pytest.raises(ParamError):
        pp.bandpass(make_recording(x, rate), 1.0, 64.0)  # reaches Nyquist
    with pytest.raises(ParamError):
        pp.bandpass(make_recording(x, rate), 0.0, 40.0)
    with pytest.raises(ParamError):
        pp.bandpass(make_recording(x, rate), 30.0, 10.0)


# ---------------------------------------------------------------------------
# extract_epochs
# ---------------------------------------------------------------------------

def test_extract_window_arithmetic():
    rate = 100.0
    signal = np.arange(1000, dtype=float)[None, :]
    events = [(100, 1), (300, 1), (500, 2)]
    epochs, skipped = pp.extract_epochs(make_recording(signal, rate, events), -0.2, 0.8)
    assert epochs.n_times == 101
    assert skipped == 0
    # window = onset-20 .. onset+80 inclusive on the ramp signal
    np.testing.assert_allclose(epochs.data[0, 0], np.arange(80, 181, dtype=float))
    np.testing.assert_allclose(epochs.data[2, 0], np.arange(480, 581, dtype=float))
    assert epochs.tmin_s == pytest.approx(-0.2)
    assert epochs.tmax_s == pytest.approx(0.8)


def test_extract_skips_boundary_events():
    rate = 100.0
    signal = np.zeros((1, 200))
    events = [(5, 1), (100, 1), (195, 1)]  # first starts at -15, last ends at 275
    epochs, skipped = pp.extract_epochs(make_recording(signal, rate, events), -0.2, 0.8)
    assert epochs.n_epochs == 1
    assert skipped == 2


def test_extract_labels_and_count():
    rate = 100.0
    rng = np.random.default_rng(16)
    onsets = np.arange(50) * 110 + 50
    events = np.column_stack([onsets, np.ones(50, dtype=int)])
    signal = rng.normal(size=(3, int(onsets[-1]) + 200))
    epochs, skipped = pp.extract_epochs(
        make_recording(signal, rate, events, subject="s07", session="b"), -0.2, 0.8)
    assert epochs.n_epochs == 50 and skipped == 0
    assert all(s == "s07" for s in epochs.subject_ids)
    assert all(s == "b" for s in epochs.session_ids)


def test_extract_no_events_raises():
    with pytest.raises(EmptyError):
        pp.extract_epochs(make_recording(np.zeros((1, 100)), 100.0), -0.2, 0.8)


def test_extract_sample_count_convention():
    # n_times stays within one sample of round(span*rate)+1 across odd rates
    signal = np.zeros((1, 5000))
    events = [(2500, 1)]
    for rate in (100.0, 128.0, 250.0, 500.0, 512.0, 1000.0):
        for tmin, tmax in ((-0.2, 0.8), (-0.1, 0.9), (0.0, 1.0), (-0.3, 1.7)):
            epochs, _ = pp.extract_epochs(make_recording(signal, rate, events), tmin, tmax)
            expected = int(round((tmax - tmin) * rate)) + 1
            assert abs(epochs.n_times - expected) <= 1


# ---------------------------------------------------------------------------
# baseline_correct
# ---------------------------------------------------------------------------

def test_baseline_removes_constant():
    rate = 100.0
    epochs = make_epochs(np.full((3, 2, 101), 7.0), rate)
    out = pp.baseline_correct(epochs, (-0.2, 0.0))
    np.testing.assert_allclose(out.data, 0.0, atol=1e-12)


def test_baseline_preserves_step_height():
    rate = 100.0
    data = np.full((1, 1, 101), 3.0)
    times = make_epochs(data, rate).times()
    data[:, :, times > 0] += 10.0
    out = pp.baseline_correct(make_epochs(data, rate), (-0.2, 0.0))
    np.testing.assert_allclose(out.data[0, 0, times > 0], 10.0, atol=1e-12)
    np.testing.assert_allclose(out.data[0, 0, times <= 0], 0.0, atol=1e-12)


def test_baseline_idempotent():
    rng = np.random.default_rng(17)
    for _ in range(10):
        epochs = make_epochs(rng.normal(0, 20, size=(8, 4, 101)), 100.0)
        once = pp.baseline_correct(epochs, (-0.2, 0.0))
        twice = pp.baseline_correct(once, (-0.2, 0.0))
        np.testing.assert_allclose(twice.data, once.data, atol=1e-12)


def test_baseline_window_outside_span():
    epochs = make_epochs(np.zeros((1, 1, 101)), 100.0)
    with pytest.raises(ParamError):
        pp.baseline_correct(epochs, (-0.5, 0.0))
    with pytest.raises(ParamError):
        pp.baseline_correct(epochs, (0.0, 1.5))


# ---------------------------------------------------------------------------
# ptp_reject
# ---------------------------------------------------------------------------

def test_ptp_rejects_spike():
    rng = np.random.default_rng(18)
    data = rng.normal(0, 5, size=(4, 2, 101))
    data[2, 1, 50] += 500.0
    kept, n_rejected = pp.ptp_reject(make_epochs(data, 100.0), 400.0)
    assert n_rejected == 1
    assert kept.n_epochs == 3


def test_ptp_keeps_quiet_epochs():
    t = np.linspace(0, 1, 101)
    data = 20.0 * np.sin(2 * np.pi * 5 * t)[None, None, :] * np.ones((6, 3, 1))
    kept, n_rejected = pp.ptp_reject(make_epochs(data, 100.0), 100.0)
    assert n_rejected == 0 and kept.n_epochs == 6


def test_ptp_matches_brute_force():
    rng = np.random.default_rng(19)
    for _ in range(20):
        data = rng.normal(0, rng.uniform(5, 80), size=(30, 3, 51))
        threshold = rng.uniform(50, 400)
        epochs = make_epochs(data, 100.0)
        expected_keep = []
        for i in range(30):
            worst = max(data[i, c].max() - data[i, c].min() for c in range(3))
            if worst <= threshold:
                expected_keep.append(i)
        if not expected_keep:
            with pytest.raises(EmptyError):
                pp.ptp_reject(epochs, threshold)
            continue
        kept, n_rejected = pp.ptp_reject(epochs, threshold)
        assert kept.n_epochs == len(expected_keep)
        assert n_rejected == 30 - len(expected_keep)
        np.testing.assert_array_equal(kept.data, data[expected_keep])
        np.testing.assert_array_equal(kept.subject_ids, epochs.subject_ids[expected_keep])


def test_ptp_monotone_in_threshold():
    rng = np.random.default_rng(20)
    data = rng.normal(0, 40, size=(50, 2, 51))
    epochs = make_epochs(data, 100.0)
    rejected = []
    for threshold in (50.0, 100.0, 200.0, 400.0):
        try:
            _, n = pp.ptp_reject(epochs, threshold)
        except EmptyError:
            n = epochs.n_epochs
        rejected.append(n)
    assert all(a >= b for a, b in zip(rejected, rejected[1:]))


def test_ptp_all_rejected_raises():
    data = np.zeros((3, 1, 51))
    data[:, 0, 10] = 1000.0
    with pytest.raises(EmptyError):
        pp.ptp_reject(make_epochs(data, 100.0), 100.0)
    with pytest.raises(ParamError):
        pp.ptp_reject(make_epochs(data, 100.0), 0.0)


# ---------------------------------------------------------------------------
# downsample
# ---------------------------------------------------------------------------

def test_downsample_tracks_analytic_sinusoid():
    rate = 512.0
    n_times = 513  # one second inclusive
    t = np.arange(n_times) / rate
    x = np.sin(2 * np.pi * 10.0 * (t - 0.2))
    epochs = make_epochs(x[None, None, :], rate, tmin=-0.2)
    out = pp.downsample(epochs, 256.0)
    expected = np.sin(2 * np.pi * 10.0 * (out.times() - 0.2 - epochs.tmin_s))
    assert out.sampling_rate_hz == 256.0
    assert np.abs(out.data[0, 0] - expected).max() < 0.05


def test_downsample_output_length():
    epochs = make_epochs(np.random.default_rng(21).normal(size=(2, 1, 1001)), 1000.0, tmin=0.0)
    out = pp.downsample(epochs, 100.0)
    duration = epochs.tmax_s - epochs.tmin_s
    assert out.n_times == int(round(duration * 100.0)) + 1
    assert out.times()[0] == pytest.approx(epochs.tmin_s)
    assert out.times()[-1] == pytest.approx(epochs.tmax_s)


def test_downsample_rate_domain():
    epochs = make_epochs(np.zeros((1, 1, 101)), 100.0)
    with pytest.raises(ParamError):
        pp.downsample(epochs, 100.0)  # target == source
    with pytest.raises(ParamError):
        pp.downsample(epochs, 120.0)


def test_downsample_non_integer_ratio():
    rate = 500.0
    t = np.arange(501) / rate
    x = np.sin(2 * np.pi * 8.0 * t)
    out = pp.downsample(make_epochs(x[None, None, :], rate, tmin=0.0), 128.0)
    expected = np.sin(2 * np.pi * 8.0 * out.times())
    assert np.abs(out.data[0, 0] - expected).max() < 0.05


# ---------------------------------------------------------------------------
# full chain
# ---------------------------------------------------------------------------

def chain_fixture(rng, rate=128.0, n_events=40, burst_every=7):
    """Recording with a 40 Hz artifact burst (PTP ~500 uV) on every
    burst_every-th event; 40 Hz sits inside the 1-50 Hz band, so the burst
    survives bandpass filtering intact."""
    gap = int(rate * 1.5)
    onsets = (np.arange(n_events) + 1) * gap
    signal = rng.normal(0.0, 10.0, size=(4, int(onsets[-1] + 2 * rate)))
    burst = 250.0 * np.sin(2 * np.pi * 40.0 * np.arange(int(0.3 * rate)) / rate)
    for i, onset in enumerate(onsets):
        if i % burst_every == 0:
            signal[2, onset + 5 : onset + 5 + burst.size] += burst
    events = np.column_stack([onsets, np.ones(n_events, dtype=int)])
    return make_recording(signal, rate, events)


def test_chain_accounts_for_every_event():
    rng = np.random.default_rng(22)
    recording = chain_fixture(rng)
    params = pp.PreprocessParams(ptp_reject_uv=300.0)
    epochs, stats = pp.preprocess_recording(recording, params)
    assert stats["n_events"] == 40
    assert stats["n_epochs"] + stats["n_skipped"] + stats["n_rejected"] == stats["n_events"]
    assert stats["n_rejected"] >= 1
    assert epochs.n_epochs == stats["n_epochs"]


def test_chain_rejection_happens_before_downsampling():
    # the 40 Hz burst exceeds the threshold at full rate but lies above the
    # 28.8 Hz anti-alias corner for a 64 Hz target, so it would vanish if
    # downsampling ran first; the rejected count proves rejection ran first
    rng = np.random.default_rng(23)
    recording = chain_fixture(rng, rate=512.0, n_events=10, burst_every=3)
    params = pp.PreprocessParams(ptp_reject_uv=300.0, target_rate_hz=64.0)
    epochs, stats = pp.preprocess_recording(recording, params)
    assert stats["n_rejected"] == 4
    assert epochs.sampling_rate_hz == 64.0


def test_chain_default_params_no_rejection():
    rng = np.random.default_rng(24)
    recording = chain_fixture(rng)
    epochs, stats = pp.preprocess_recording(recording, pp.PreprocessParams())
    assert stats["n_rejected"] == 0
    assert epochs.n_times == int(round(1.0 * 128.0)) + 1


def test_params_validation():
    with pytest.raises(ParamError):
        pp.PreprocessParams(band_low_hz=50.0, band_high_hz=1.0).validate(256.0)
    with pytest.raises(ParamError):
        pp.PreprocessParams(band_high_hz=200.0).validate(256.0)
    with pytest.raises(ParamError):
        pp.PreprocessParams(epoch_tmin_s=0.8, epoch_tmax_s=-0.2).validate(256.0)
    with pytest.raises(ParamError):
        pp.PreprocessParams(baseline_window_s=(-0.5, 0.0)).validate(256.0)
    with pytest.raises(ParamError):
        pp.PreprocessParams(ptp_reject_uv=-10.0).validate(256.0)
    with pytest.raises(ParamError):
        pp.PreprocessParams(target_rate_hz=512.0).validate(256.0)
    pp.PreprocessParams().validate(256.0)


def test_concat_and_select_round_trip():
    rng = np.random.default_rng(25)
    a = make_epochs(rng.normal(size=(4, 2, 51)), 100.0)
    b = make_epochs(rng.normal(size=(3, 2, 51)), 100.0)
    merged = pp.concat_epochs([a, b])
    assert merged.n_epochs == 7
    np.testing.assert_array_equal(merged.select(np.arange(4)).data, a.data)
    np.testing.assert_array_equal(merged.select(np.arange(4, 7)).data, b.data)
    mismatched = make_epochs(rng.normal(size=(2, 3, 51)), 100.0)
    with pytest.raises(ParamError):
        pp.concat_epochs([a, mismatched])
