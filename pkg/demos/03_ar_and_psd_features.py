"""
Time and frequency features
===========================

Shallow authenticators see each epoch as a short feature vector: Yule-Walker
autoregressive coefficients per channel, and Welch band powers per channel.
Both estimators are exercised on signals whose ground truth is known before
they are applied to EEG epochs.
"""

import numpy as np

from neuroidbench import synthetic
from neuroidbench.features import (
    DEFAULT_BANDS,
    FeatureRecipe,
    ar_coefficients,
    assemble,
    band_power,
    welch_psd,
)
from neuroidbench.preprocessing import PreprocessParams, concat_epochs, preprocess_recording

rng = np.random.default_rng(0)

# An AR(2) process with known coefficients, driven sample by sample.
true_coeffs = (0.6, -0.3)
x = np.zeros(8000)
for t in range(2, x.size):
    x[t] = true_coeffs[0] * x[t - 1] + true_coeffs[1] * x[t - 2] + rng.normal()
estimated = ar_coefficients(x[500:], 2)
print(f"AR(2) truth {true_coeffs}, Yule-Walker estimate "
      f"({estimated[0]:.3f}, {estimated[1]:.3f})")

# A 11 Hz tone in noise. Welch's averaged periodogram concentrates its power
# in the 10-13 Hz band.
t = np.arange(4096) / 256.0
tone = np.sin(2 * np.pi * 11.0 * t) + 0.2 * rng.normal(size=t.size)
freqs, psd = welch_psd(tone, 256.0)
print(f"\nParseval: sum(psd)*df = {psd.sum() * (freqs[1] - freqs[0]):.3f}, "
      f"signal variance = {tone.var():.3f}")
print("band powers (uV^2/Hz, averaged over band bins):")
for (name, low, high), value in zip(DEFAULT_BANDS, band_power(freqs, psd, DEFAULT_BANDS)):
    bar = "#" * int(np.clip(3 * np.log10(value / 1e-5), 0, 60))
    print(f"  {name:6s} {low:>4.0f}-{high:<4.0f} Hz  {value:10.5f}  {bar}")

# On real epochs the recipe decides what is extracted and how it is named.
config = synthetic.SynthConfig(n_subjects=2, epochs_per_session=8, seed=3)
_, recordings = synthetic.generate(config)
epochs = concat_epochs([preprocess_recording(r, PreprocessParams())[0] for r in recordings])

recipe = FeatureRecipe(ar_order=2, psd_n_windows=2)
feats = assemble(epochs, recipe)
print(f"\nfeature matrix: {feats.n_rows} epochs x {feats.n_features} features")
print("first channel's columns:", [n for n in feats.feature_names if n.startswith("ch0_")])
print("recipe recorded on the matrix:", feats.recipe)
