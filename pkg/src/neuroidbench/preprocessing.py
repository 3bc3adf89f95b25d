"""Signal conditioning chain: bandpass, epoching, baseline, rejection, resampling.

The stage order is fixed (bandpass -> extract -> baseline -> reject ->
optional downsample) and callers must not reorder it; preprocess_recording()
applies the whole chain and accounts for every input event, so
n_epochs + n_skipped + n_rejected always equals n_events.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .bundle import EVENT_SAMPLE, RawRecording
from .errors import EmptyError, ParamError

# floor() guard against values like -0.2*100 = -20.000000000000004
_EDGE_EPS = 1e-9

_FILTER_ORDER = 4  # Butterworth design order; the two passes double it


@dataclass(frozen=True)
class PreprocessParams:
    """Every knob of the conditioning chain, with the benchmark defaults."""

    band_low_hz: float = 1.0
    band_high_hz: float = 50.0
    epoch_tmin_s: float = -0.2
    epoch_tmax_s: float = 0.8
    baseline_window_s: tuple = (-0.2, 0.0)
    ptp_reject_uv: float | None = None
    target_rate_hz: float | None = None

    def validate(self, sampling_rate_hz):
        if not 0.0 < self.band_low_hz < self.band_high_hz:
            raise ParamError(
                f"band edges must satisfy 0 < low < high, got [{self.band_low_hz}, {self.band_high_hz}]"
            )
        if self.band_high_hz >= sampling_rate_hz / 2.0:
            raise ParamError(
                f"band high {self.band_high_hz} Hz reaches Nyquist of {sampling_rate_hz} Hz"
            )
        if not self.epoch_tmin_s < self.epoch_tmax_s:
            raise ParamError(
                f"epoch interval must satisfy tmin < tmax, got [{self.epoch_tmin_s}, {self.epoch_tmax_s}]"
            )
        if self.baseline_window_s is not None:
            b0, b1 = self.baseline_window_s
            if not (self.epoch_tmin_s - _EDGE_EPS <= b0 < b1 <= self.epoch_tmax_s + _EDGE_EPS):
                raise ParamError(
                    f"baseline window {self.baseline_window_s} outside epoch span "
                    f"[{self.epoch_tmin_s}, {self.epoch_tmax_s}]"
                )
        if self.ptp_reject_uv is not None and not self.ptp_reject_uv > 0:
            raise ParamError(f"ptp_reject_uv must be > 0, got {self.ptp_reject_uv}")
        if self.target_rate_hz is not None and not self.target_rate_hz < sampling_rate_hz:
            raise ParamError(
                f"target rate {self.target_rate_hz} must be below the source rate {sampling_rate_hz}"
            )


@dataclass
class EpochSet:
    """Stimulus-locked windows stacked as [n_epochs, n_channels, n_times].

    Labels run parallel to the first axis. tmin_s/tmax_s are the realized
    window edges (sample-grid aligned), so times() reproduces each sample's
    latency relative to stimulus onset.
    """

    data: np.ndarray
    subject_ids: np.ndarray
    session_ids: np.ndarray
    sampling_rate_hz: float
    tmin_s: float
    tmax_s: float
    channel_names: tuple

    @property
    def n_epochs(self):
        return self.data.shape[0]

    @property
    def n_channels(self):
        return self.data.shape[1]

    @property
    def n_times(self):
        return self.data.shape[2]

    def times(self):
        return self.tmin_s + np.arange(self.n_times) / self.sampling_rate_hz

    def select(self, indices) -> "EpochSet":
        indices = np.asarray(indices)
        return EpochSet(
            data=self.data[indices],
            subject_ids=self.subject_ids[indices],
            session_ids=self.session_ids[indices],
            sampling_rate_hz=self.sampling_rate_hz,
            tmin_s=self.tmin_s,
            tmax_s=self.tmax_s,
            channel_names=self.channel_names,
        )


def concat_epochs(parts) -> EpochSet:
    """Stack EpochSets with identical geometry; label arrays concatenate."""
    parts = list(parts)
    if not parts:
        raise EmptyError("no epoch sets to concatenate")
    first = parts[0]
    for p in parts[1:]:
        if (
            p.data.shape[1:] != first.data.shape[1:]
            or p.sampling_rate_hz != first.sampling_rate_hz
            or p.channel_names != first.channel_names
        ):
            raise ParamError("cannot concatenate epoch sets with different geometry")
    return EpochSet(
        data=np.concatenate([p.data for p in parts], axis=0),
        subject_ids=np.concatenate([p.subject_ids for p in parts]),
        session_ids=np.concatenate([p.session_ids for p in parts]),
        sampling_rate_hz=first.sampling_rate_hz,
        tmin_s=first.tmin_s,
        tmax_s=first.tmax_s,
        channel_names=first.channel_names,
    )


def bandpass(recording: RawRecording, low_hz, high_hz) -> RawRecording:
    """Zero-phase Butterworth band-pass over every channel.

    A 4th-order band-pass run forward and backward (effective order 8,
    no phase distortion); edges are padded with 3x the filter order of
    odd-reflected samples so transients stay out of the kept span.
    """
    rate = recording.sampling_rate_hz
    if not 0.0 < low_hz < high_hz or high_hz >= rate / 2.0:
        raise ParamError(
            f"band [{low_hz}, {high_hz}] Hz must sit strictly inside (0, {rate / 2}) Hz"
        )
    padlen = 3 * _FILTER_ORDER
    if recording.n_samples <= padlen:
        raise ParamError(
            f"recording too short to filter: {recording.n_samples} samples <= padding {padlen}"
        )
    nyq = rate / 2.0
    sos = butter(_FILTER_ORDER, [low_hz / nyq, high_hz / nyq], btype="bandpass", output="sos")
    filtered = sosfiltfilt(sos, np.asarray(recording.signal, dtype=float), axis=-1,
                           padtype="odd", padlen=padlen)
    return RawRecording(
        subject_id=recording.subject_id,
        session_id=recording.session_id,
        sampling_rate_hz=rate,
        signal=filtered,
        events=recording.events,
    )


def _window_offsets(tmin_s, tmax_s, rate):
    start = int(np.floor(tmin_s * rate + _EDGE_EPS))
    stop = int(np.floor(tmax_s * rate + _EDGE_EPS))
    return start, stop


def extract_epochs(recording: RawRecording, tmin_s, tmax_s):
    """Cut one window per event; windows exceeding the recording are skipped.

    The window covers samples onset+floor(tmin*rate) .. onset+floor(tmax*rate)
    inclusive. Returns (EpochSet, n_skipped).
    """
    if not tmin_s < tmax_s:
        raise ParamError(f"epoch interval must satisfy tmin < tmax, got [{tmin_s}, {tmax_s}]")
    if len(recording.events) == 0:
        raise EmptyError(f"recording {recording.subject_id}/{recording.session_id} has no events")
    rate = recording.sampling_rate_hz
    rel_start, rel_stop = _window_offsets(tmin_s, tmax_s, rate)
    n_times = rel_stop - rel_start + 1
    onsets = recording.events[:, EVENT_SAMPLE]
    starts = onsets + rel_start
    keep = (starts >= 0) & (starts + n_times <= recording.n_samples)
    signal = np.asarray(recording.signal, dtype=float)
    data = np.stack(
        [signal[:, s : s + n_times] for s in starts[keep]], axis=0
    ) if keep.any() else np.empty((0, recording.n_channels, n_times))
    n_kept = int(keep.sum())
    epochs = EpochSet(
        data=data,
        subject_ids=np.array([recording.subject_id] * n_kept, dtype=object),
        session_ids=np.array([recording.session_id] * n_kept, dtype=object),
        sampling_rate_hz=rate,
        tmin_s=rel_start / rate,
        tmax_s=rel_stop / rate,
        channel_names=tuple(f"ch{i}" for i in range(recording.n_channels)),
    )
    return epochs, int((~keep).sum())


def baseline_correct(epochs: EpochSet, window_s) -> EpochSet:
    """Subtract each epoch-channel's mean over the baseline window everywhere."""
    w0, w1 = window_s
    times = epochs.times()
    if w0 < epochs.tmin_s - _EDGE_EPS or w1 > epochs.tmax_s + _EDGE_EPS or not w0 < w1:
        raise ParamError(
            f"baseline window [{w0}, {w1}] outside epoch span [{epochs.tmin_s}, {epochs.tmax_s}]"
        )
    mask = (times >= w0 - _EDGE_EPS) & (times <= w1 + _EDGE_EPS)
    if not mask.any():
        raise ParamError(f"baseline window [{w0}, {w1}] contains no samples")
    means = epochs.data[:, :, mask].mean(axis=2, keepdims=True)
    return EpochSet(
        data=epochs.data - means,
        subject_ids=epochs.subject_ids,
        session_ids=epochs.session_ids,
        sampling_rate_hz=epochs.sampling_rate_hz,
        tmin_s=epochs.tmin_s,
        tmax_s=epochs.tmax_s,
        channel_names=epochs.channel_names,
    )


def ptp_reject(epochs: EpochSet, threshold_uv):
    """Drop epochs whose worst channel swings more than threshold_uv peak to peak.

    Returns (kept EpochSet, n_rejected). Rejecting everything is an error
    because no evaluation can proceed on an empty set.
    """
    if not threshold_uv > 0:
        raise ParamError(f"rejection threshold must be > 0, got {threshold_uv}")
    span = epochs.data.max(axis=2) - epochs.data.min(axis=2)
    worst = span.max(axis=1) if epochs.n_epochs else np.empty(0)
    keep = worst <= threshold_uv
    if epochs.n_epochs and not keep.any():
        raise EmptyError(f"all {epochs.n_epochs} epochs exceed {threshold_uv} uV peak to peak")
    return epochs.select(np.flatnonzero(keep)), int((~keep).sum())


def downsample(epochs: EpochSet, target_rate_hz) -> EpochSet:
    """Anti-alias filter then linearly resample onto a uniform grid.

    The low-pass corner sits at 0.45*target (Butterworth order 4, zero
    phase); the new grid spans the same [tmin, tmax] with
    round(duration*target)+1 points, so non-integer rate ratios work.
    """
    rate = epochs.sampling_rate_hz
    if not target_rate_hz < rate:
        raise ParamError(f"target rate {target_rate_hz} must be below source rate {rate}")
    if not target_rate_hz > 0:
        raise ParamError(f"target rate must be > 0, got {target_rate_hz}")
    padlen = 3 * _FILTER_ORDER
    if epochs.n_times <= padlen:
        raise ParamError(f"epochs too short to filter: {epochs.n_times} samples <= {padlen}")
    sos = butter(_FILTER_ORDER, 0.45 * target_rate_hz / (rate / 2.0), btype="lowpass", output="sos")
    smoothed = sosfiltfilt(sos, epochs.data, axis=-1, padtype="odd", padlen=padlen)
    duration = epochs.tmax_s - epochs.tmin_s
    n_out = int(round(duration * target_rate_hz)) + 1
    old_t = epochs.times()
    new_t = np.linspace(epochs.tmin_s, epochs.tmax_s, n_out)
    # shared-grid linear interpolation as one weighted gather
    pos = np.clip(np.searchsorted(old_t, new_t, side="right") - 1, 0, old_t.size - 2)
    frac = (new_t - old_t[pos]) / (old_t[pos + 1] - old_t[pos])
    frac = np.clip(frac, 0.0, 1.0)
    resampled = smoothed[:, :, pos] * (1.0 - frac) + smoothed[:, :, pos + 1] * frac
    return EpochSet(
        data=resampled,
        subject_ids=epochs.subject_ids,
        session_ids=epochs.session_ids,
        sampling_rate_hz=float(target_rate_hz),
        tmin_s=epochs.tmin_s,
        tmax_s=epochs.tmax_s,
        channel_names=epochs.channel_names,
    )


def preprocess_recording(recording: RawRecording, params: PreprocessParams):
    """Run the full fixed-order chain on one recording.

    Returns (EpochSet, stats) where stats accounts for every event:
    n_epochs + n_skipped + n_rejected == n_events.
    """
    params.validate(recording.sampling_rate_hz)
    filtered = bandpass(recording, params.band_low_hz, params.band_high_hz)
    epochs, n_skipped = extract_epochs(filtered, params.epoch_tmin_s, params.epoch_tmax_s)
    if params.baseline_window_s is not None and epochs.n_epochs:
        epochs = baseline_correct(epochs, params.baseline_window_s)
    n_rejected = 0
    if params.ptp_reject_uv is not None and epochs.n_epochs:
        epochs, n_rejected = ptp_reject(epochs, params.ptp_reject_uv)
    if params.target_rate_hz is not None and epochs.n_epochs:
        epochs = downsample(epochs, params.target_rate_hz)
    stats = {
        "n_events": int(len(recording.events)),
        "n_skipped": int(n_skipped),
        "n_rejected": int(n_rejected),
        "n_epochs": int(epochs.n_epochs),
    }
    return epochs, stats
