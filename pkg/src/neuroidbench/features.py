"""Classical per-epoch features: autoregressive coefficients and band powers.

Both feature families are computed per epoch-channel on the first second of
the epoch (longer windows contribute nothing unless the recipe asks for the
full epoch) and concatenated channel-major. The batched paths used by
assemble() run the same arithmetic as the single-vector operations, only
vectorized across rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, ParamError, ValidationError

DEFAULT_BANDS = (
    ("low", 1.0, 10.0),
    ("alpha", 10.0, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 50.0),
)


@dataclass(frozen=True)
class FeatureRecipe:
    """Which classical features to extract and with what shape parameters."""

    use_ar: bool = True
    ar_order: int = 1
    use_psd: bool = True
    psd_n_windows: int = 4
    psd_overlap: float = 0.5
    bands: tuple = DEFAULT_BANDS
    full_epoch: bool = False

    def validate(self):
        if not (self.use_ar or self.use_psd):
            raise ParamError("recipe must enable at least one of AR and PSD features")
        if self.use_ar and self.ar_order < 1:
            raise ParamError(f"ar_order must be >= 1, got {self.ar_order}")
        if self.use_psd:
            if self.psd_n_windows < 1:
                raise ParamError(f"psd_n_windows must be >= 1, got {self.psd_n_windows}")
            if not 0.0 <= self.psd_overlap < 1.0:
                raise ParamError(f"psd_overlap must lie in [0, 1), got {self.psd_overlap}")
            if not self.bands:
                raise ParamError("bands must be nonempty when use_psd is set")
            prev_high = None
            for name, low, high in self.bands:
                if not 0.0 <= low < high:
                    raise ParamError(f"band {name}: edges must satisfy 0 <= low < high")
                if prev_high is not None and low < prev_high:
                    raise ParamError(f"band {name}: bands must be non-overlapping and ascending")
                prev_high = high

    def n_features(self, n_channels):
        per_channel = (self.ar_order if self.use_ar else 0) + (
            len(self.bands) if self.use_psd else 0
        )
        return n_channels * per_channel


@dataclass
class FeatureMatrix:
    """Per-epoch feature rows with their labels and the recipe that made them."""

    values: np.ndarray
    feature_names: list
    subject_ids: np.ndarray
    session_ids: np.ndarray
    recipe: FeatureRecipe

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    def select(self, indices) -> "FeatureMatrix":
        indices = np.asarray(indices)
        return FeatureMatrix(
            values=self.values[indices],
            feature_names=self.feature_names,
            subject_ids=self.subject_ids[indices],
            session_ids=self.session_ids[indices],
            recipe=self.recipe,
        )


def _autocovariance(rows, order):
    """Biased (divide by N) autocovariance of demeaned rows, lags 0..order."""
    rows = rows - rows.mean(axis=1, keepdims=True)
    n = rows.shape[1]
    cov = np.empty((rows.shape[0], order + 1))
    for lag in range(order + 1):
        cov[:, lag] = np.einsum("ij,ij->i", rows[:, : n - lag], rows[:, lag:]) / n
    return cov


def _levinson(cov):
    """Levinson-Durbin recursion, vectorized over rows of lag covariances.

    Solves the Yule-Walker system for coefficients a_1..a_p in the
    convention x_t = sum_k a_k x_{t-k} + e_t.
    """
    n_rows, width = cov.shape
    order = width - 1
    if np.any(cov[:, 0] <= 0):
        raise DegenerateError("zero-variance input: autoregression undefined")
    phi = np.zeros((n_rows, order))
    err = cov[:, 0].copy()
    for m in range(1, order + 1):
        if m == 1:
            refl = cov[:, 1] / err
        else:
            acc = np.einsum("ij,ij->i", phi[:, : m - 1], cov[:, m - 1 : 0 : -1])
            refl = (cov[:, m] - acc) / err
        if m > 1:
            phi[:, : m - 1] = phi[:, : m - 1] - refl[:, None] * phi[:, m - 2 :: -1]
        phi[:, m - 1] = refl
        err = err * (1.0 - refl**2)
        if np.any(err <= 0) or not np.isfinite(err).all():
            raise DegenerateError("autocovariance sequence is numerically singular")
    return phi


def ar_coefficients(epoch_channel, order):
    """Yule-Walker AR coefficients of one vector via Levinson-Durbin.

    Parameters
    ----------
    epoch_channel : 1-D real vector, length > order.
    order : model order p >= 1.

    Returns
    -------
    coefficients a_1..a_p (convention x_t = sum a_k x_{t-k} + e_t).
    """
    x = np.asarray(epoch_channel, dtype=float).ravel()
    if order < 1:
        raise ParamError(f"order must be >= 1, got {order}")
    if x.size <= order:
        raise ParamError(f"need more than {order} samples, got {x.size}")
    if not np.isfinite(x).all():
        raise ValidationError("input contains non-finite values")
    return _levinson(_autocovariance(x[None, :], order))[0]


def _segment_layout(n, n_windows, overlap):
    length = int(np.floor(n / (1.0 + (n_windows - 1) * (1.0 - overlap))))
    step = int(np.floor(length * (1.0 - overlap))) if n_windows > 1 else 0
    if length < 2 or (n_windows > 1 and step < 1):
        raise ParamError(
            f"{n} samples cannot host {n_windows} windows at overlap {overlap}"
        )
    return length, step


def _welch_batch(rows, rate_hz, n_windows, overlap):
    n = rows.shape[1]
    length, step = _segment_layout(n, n_windows, overlap)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)
    scale = 1.0 / (rate_hz * np.dot(window, window))
    starts = [k * step for k in range(n_windows)]
    segments = np.stack([rows[:, s : s + length] for s in starts], axis=1)
    segments = segments - segments.mean(axis=2, keepdims=True)
    spectra = np.fft.rfft(segments * window, axis=2)
    power = (spectra.real**2 + spectra.imag**2) * scale
    # one-sided density: double everything except DC (and Nyquist when present)
    last = power.shape[2] - 1 if length % 2 == 0 else power.shape[2]
    power[:, :, 1:last] *= 2.0
    freqs = np.fft.rfftfreq(length, 1.0 / rate_hz)
    return freqs, power.mean(axis=1)


def welch_psd(epoch_channel, rate_hz, n_windows=4, overlap=0.5):
    """Averaged Hann-windowed periodogram (density scaling, power per Hz).

    The vector is cut into n_windows equal segments with the given overlap
    fraction (segment length floor(n / (1 + (n_windows-1)(1-overlap)))),
    each segment demeaned and tapered before its periodogram is averaged.

    Returns
    -------
    (frequencies, psd) arrays; sum(psd)*df approximates the signal variance.
    """
    x = np.asarray(epoch_channel, dtype=float).ravel()
    if not np.isfinite(x).all():
        raise ValidationError("input contains non-finite values")
    freqs, power = _welch_batch(x[None, :], rate_hz, n_windows, overlap)
    return freqs, power[0]


def _band_masks(frequencies, bands):
    masks = []
    for name, low, high in bands:
        if low < 0 or not low < high:
            raise ParamError(f"band {name}: edges must satisfy 0 <= low < high")
        mask = (frequencies >= low) & (frequencies < high)
        if not mask.any():
            raise ParamError(
                f"band {name} [{low}, {high}) Hz holds no frequency bins; "
                "the epoch is too short or the rate too low for this band"
            )
        masks.append(mask)
    return masks


def band_power(frequencies, psd, bands):
    """Arithmetic mean of psd bins with low <= f < high, one value per band."""
    frequencies = np.asarray(frequencies, dtype=float)
    psd = np.asarray(psd, dtype=float)
    masks = _band_masks(frequencies, bands)
    return np.array([psd[mask].mean() for mask in masks])


def _one_second_slice(epochs):
    n_second = int(round(epochs.sampling_rate_hz)) + 1
    return min(epochs.n_times, n_second)


def assemble(epochs, recipe: FeatureRecipe) -> FeatureMatrix:
    """Extract the recipe's features for every epoch.

    Per epoch, per channel: AR coefficients (if enabled) then band powers
    (if enabled), concatenated channel-major with names like "ch3_ar1" and
    "ch3_psd_alpha".
    """
    recipe.validate()
    if epochs.n_epochs == 0:
        raise ParamError("cannot extract features from an empty epoch set")
    n_keep = epochs.n_times if recipe.full_epoch else _one_second_slice(epochs)
    rows = epochs.data[:, :, :n_keep].reshape(epochs.n_epochs * epochs.n_channels, n_keep)
    blocks = []
    names_per_channel = []
    if recipe.use_ar:
        if n_keep <= recipe.ar_order:
            raise ParamError(
                f"epochs of {n_keep} samples cannot fit AR order {recipe.ar_order}"
            )
        blocks.append(_levinson(_autocovariance(rows, recipe.ar_order)))
        names_per_channel += [f"ar{k + 1}" for k in range(recipe.ar_order)]
    if recipe.use_psd:
        freqs, psd = _welch_batch(rows, epochs.sampling_rate_hz, recipe.psd_n_windows, recipe.psd_overlap)
        masks = _band_masks(freqs, recipe.bands)
        blocks.append(np.stack([psd[:, mask].mean(axis=1) for mask in masks], axis=1))
        names_per_channel += [f"psd_{name}" for name, _, _ in recipe.bands]
    per_channel = np.concatenate(blocks, axis=1)
    values = per_channel.reshape(epochs.n_epochs, epochs.n_channels * per_channel.shape[1])
    if not np.isfinite(values).all():
        raise ValidationError("feature matrix contains non-finite values")
    names = [
        f"ch{c}_{suffix}" for c in range(epochs.n_channels) for suffix in names_per_channel
    ]
    return FeatureMatrix(
        values=values,
        feature_names=names,
        subject_ids=epochs.subject_ids.copy(),
        session_ids=epochs.session_ids.copy(),
        recipe=recipe,
    )


@dataclass(frozen=True)
class Standardizer:
    """Per-feature location/scale learned from training rows only."""

    mean: np.ndarray
    std: np.ndarray


def standardize_fit(train) -> Standardizer:
    """Learn per-feature mean and standard deviation from training rows.

    Zero-variance features get their scale clamped to 1 so transformed
    values stay finite (such columns map to exactly zero).
    """
    values = train.values if hasattr(train, "values") else np.asarray(train, dtype=float)
    if values.shape[0] == 0:
        raise ParamError("cannot fit a standardizer on zero rows")
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return Standardizer(mean=mean, std=std)


def standardize_apply(standardizer: Standardizer, matrix):
    """Map rows through the fitted statistics; accepts a matrix or raw rows."""
    if hasattr(matrix, "values"):
        return FeatureMatrix(
            values=(matrix.values - standardizer.mean) / standardizer.std,
            feature_names=matrix.feature_names,
            subject_ids=matrix.subject_ids,
            session_ids=matrix.session_ids,
            recipe=matrix.recipe,
        )
    return (np.asarray(matrix, dtype=float) - standardizer.mean) / standardizer.std
