"""Synthetic multi-subject, multi-session ERP datasets with dialled-in structure.

Each subject owns a parameter vector (stimulus-locked Gaussian bump latency,
amplitude and topography, four spectral band gains, AR(2) background noise
coefficients) drawn around shared base values. ``subject_separability``
scales how far subjects spread around the base: at 0 every subject is
statistically identical (authentication collapses to chance), at 1 the
spread is widest. ``session_drift`` perturbs the same parameters between a
subject's sessions, so cross-session enrollment degrades in a controlled way.

Generation is deterministic given the seed; every recording draws from its
own counter-keyed stream, so subjects and sessions can be produced in any
order or in parallel with identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, lfilter

from .bundle import RawRecording, build_manifest
from .errors import ParamError

# fractions of noise_std_uv put into the AR(2) core and each band component
_CORE_SCALE = 0.6
_BAND_SCALE = 0.3

_BAND_EDGES = ((1.0, 10.0), (10.0, 13.0), (13.0, 30.0), (30.0, 50.0))

# base AR(2) background; subject/session deltas stay inside the
# stationarity triangle for every separability and drift in [0, 1]
_AR_BASE = (0.5, -0.2)
_AR_SPREAD = (0.3, 0.15)
_AR_DRIFT = (0.12, 0.08)

_EVENT_GAP_S = 2.0  # hard lower bound on stimulus spacing
_LEAD_IN_S = 1.2
_TAIL_S = 2.4


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 10
    n_sessions: int = 1
    epochs_per_session: int = 50
    sampling_rate_hz: float = 256.0
    n_channels: int = 8
    erp_latency_ms: float = 300.0
    erp_width_ms: float = 80.0
    subject_separability: float = 0.5
    session_drift: float = 0.0
    noise_std_uv: float = 5.0
    seed: int = 0

    def validate(self):
        for name in ("n_subjects", "n_sessions", "epochs_per_session", "n_channels"):
            if getattr(self, name) < 1:
                raise ParamError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.sampling_rate_hz > 0:
            raise ParamError(f"sampling_rate_hz must be > 0, got {self.sampling_rate_hz}")
        if not 0.0 <= self.subject_separability <= 1.0:
            raise ParamError(f"subject_separability must lie in [0, 1], got {self.subject_separability}")
        if not 0.0 <= self.session_drift <= 1.0:
            raise ParamError(f"session_drift must lie in [0, 1], got {self.session_drift}")
        if self.noise_std_uv < 0:
            raise ParamError(f"noise_std_uv must be >= 0, got {self.noise_std_uv}")
        if self.erp_latency_ms <= 0 or self.erp_width_ms <= 0:
            raise ParamError("erp_latency_ms and erp_width_ms must be > 0")


def subject_parameters(config: SynthConfig):
    """Per-subject signal parameters before any session drift.

    Returns a dict of arrays indexed by subject; with separability 0 every
    row equals the shared base values.
    """
    sep = config.subject_separability
    rng = np.random.default_rng([config.seed, 1])
    n = config.n_subjects
    u_latency = rng.uniform(-1.0, 1.0, size=n)
    u_amplitude = rng.uniform(-1.0, 1.0, size=n)
    u_topo = rng.uniform(-1.0, 1.0, size=(n, config.n_channels))
    u_gain = rng.uniform(-1.0, 1.0, size=(n, len(_BAND_EDGES)))
    u_ar = rng.uniform(-1.0, 1.0, size=(n, 2))
    base_topo = 1.0 - 0.5 * np.arange(config.n_channels) / max(config.n_channels - 1, 1)
    return {
        "latency_s": config.erp_latency_ms / 1000.0 + sep * 0.10 * u_latency,
        "amplitude_uv": 2.0 * config.noise_std_uv * (1.0 + 0.4 * sep * u_amplitude),
        "topography": base_topo[None, :] * (1.0 + 0.5 * sep * u_topo),
        "band_gains": 1.0 + 0.8 * sep * u_gain,
        "ar_coeffs": np.array(_AR_BASE)[None, :] + sep * np.array(_AR_SPREAD)[None, :] * u_ar,
    }


def session_parameters(config: SynthConfig, params, subject_idx, session_idx):
    """Apply this session's drift to one subject's parameters.

    Session 0 is the canonical recording; later sessions perturb latency,
    amplitude, band gains and the AR coefficients proportionally to
    session_drift (drift 0 keeps every session identical).
    """
    latency = float(params["latency_s"][subject_idx])
    amplitude = float(params["amplitude_uv"][subject_idx])
    topography = params["topography"][subject_idx]
    gains = params["band_gains"][subject_idx].copy()
    ar = params["ar_coeffs"][subject_idx].copy()
    drift = config.session_drift
    if session_idx > 0 and drift > 0.0:
        rng = np.random.default_rng([config.seed, 2, subject_idx, session_idx])
        latency += drift * 0.08 * rng.uniform(-1.0, 1.0)
        amplitude *= 1.0 + 0.5 * drift * rng.uniform(-1.0, 1.0)
        gains *= 1.0 + 0.6 * drift * rng.uniform(-1.0, 1.0, size=gains.shape)
        ar = ar + drift * np.array(_AR_DRIFT) * rng.uniform(-1.0, 1.0, size=2)
    # stationarity triangle with margin, in case drift pushes the corner
    ar[0] = np.clip(ar[0], -0.95, 0.95)
    ar[1] = np.clip(ar[1], -0.9, min(0.95 - ar[0], 0.95 + ar[0]) - 0.05)
    return latency, amplitude, topography, gains, ar


def _event_onsets(config: SynthConfig, rng):
    gaps = _EVENT_GAP_S + rng.uniform(0.0, 0.4, size=config.epochs_per_session)
    times = _LEAD_IN_S + np.concatenate(([0.0], np.cumsum(gaps[:-1])))
    return np.round(times * config.sampling_rate_hz).astype(np.int64)


def _colored_noise(rng, ar, n_channels, n_samples, std_target):
    white = rng.standard_normal((n_channels, n_samples + 200))
    core = lfilter([1.0], [1.0, -ar[0], -ar[1]], white, axis=1)[:, 200:]
    scale = std_target / max(core.std(), 1e-12)
    return core * scale


def _band_noise(rng, gains, rate, n_channels, n_samples, std_target):
    nyq = rate / 2.0
    total = np.zeros((n_channels, n_samples))
    for (low, high), gain in zip(_BAND_EDGES, gains):
        low, high = min(low, nyq * 0.95), min(high, nyq * 0.98)
        white = rng.standard_normal((n_channels, n_samples + 200))
        if low >= high:
            continue  # band collapsed by a very low sampling rate
        b, a = butter(2, [low / nyq, high / nyq], btype="bandpass")
        component = lfilter(b, a, white, axis=1)[:, 200:]
        component *= std_target * gain / max(component.std(), 1e-12)
        total += component
    return total


def _erp_component(config, onsets, latency_s, amplitude, topography, n_samples):
    rate = config.sampling_rate_hz
    sigma_s = config.erp_width_ms / 1000.0 / 2.355  # FWHM to standard deviation
    half = int(round(4.0 * sigma_s * rate))
    t = np.arange(-half, half + 1) / rate
    bump = np.exp(-0.5 * (t / sigma_s) ** 2)
    out = np.zeros((config.n_channels, n_samples))
    shaped = amplitude * topography[:, None] * bump[None, :]
    for onset in onsets:
        mid = onset + int(round(latency_s * rate))
        lo, hi = mid - half, mid + half + 1
        src_lo = max(0, -lo)
        src_hi = bump.size - max(0, hi - n_samples)
        lo, hi = max(lo, 0), min(hi, n_samples)
        if lo < hi:
            out[:, lo:hi] += shaped[:, src_lo:src_hi]
    return out


def generate(config: SynthConfig):
    """Build the full dataset in memory.

    Returns (manifest, recordings list) ready for write_bundle(); recordings
    iterate subject-major, session-minor, matching the manifest layout.
    """
    config.validate()
    params = subject_parameters(config)
    width = max(2, len(str(config.n_subjects)))
    subject_ids = [f"s{i + 1:0{width}d}" for i in range(config.n_subjects)]
    session_ids = [f"ses{r + 1:02d}" for r in range(config.n_sessions)]
    rate = config.sampling_rate_hz

    layout = []
    recordings = []
    for s, subject_id in enumerate(subject_ids):
        sessions = []
        for r, session_id in enumerate(session_ids):
            event_rng = np.random.default_rng([config.seed, 3, s, r])
            noise_rng = np.random.default_rng([config.seed, 4, s, r])
            onsets = _event_onsets(config, event_rng)
            n_samples = int(onsets[-1] + round(_TAIL_S * rate))
            latency, amplitude, topography, gains, ar = session_parameters(config, params, s, r)
            signal = _colored_noise(noise_rng, ar, config.n_channels, n_samples,
                                    _CORE_SCALE * config.noise_std_uv)
            signal += _band_noise(noise_rng, gains, rate, config.n_channels, n_samples,
                                  _BAND_SCALE * config.noise_std_uv)
            signal += _erp_component(config, onsets, latency, amplitude, topography, n_samples)
            events = np.stack([onsets, np.ones_like(onsets)], axis=1)
            recordings.append(
                RawRecording(
                    subject_id=subject_id,
                    session_id=session_id,
                    sampling_rate_hz=rate,
                    signal=signal.astype(np.float32),
                    events=events,
                )
            )
            sessions.append((session_id, n_samples, len(onsets)))
        layout.append((subject_id, sessions))

    manifest = build_manifest(
        dataset_name="Synthetic",
        paradigm="synthetic",
        sampling_rate_hz=rate,
        channel_names=[f"ch{i}" for i in range(config.n_channels)],
        layout=layout,
    )
    return manifest, recordings
