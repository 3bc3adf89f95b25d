"""
Shallow authenticators and the EER
==================================

One binary model per enrolled user: genuine epochs against everyone else's.
Every model kind exposes the same fit/score surface and returns scores in
[0, 1], so the metrics layer never cares which classifier produced them.
"""

from types import SimpleNamespace

import numpy as np

from neuroidbench import metrics, synthetic
from neuroidbench.classifiers import KINDS, ClassifierSpec, fit, score
from neuroidbench.features import FeatureRecipe, assemble, standardize_apply, standardize_fit
from neuroidbench.preprocessing import PreprocessParams, concat_epochs, preprocess_recording

# A small, fairly separable population.
config = synthetic.SynthConfig(
    n_subjects=6,
    epochs_per_session=30,
    sampling_rate_hz=128.0,
    n_channels=4,
    subject_separability=0.7,
    seed=5,
)
_, recordings = synthetic.generate(config)
epochs = concat_epochs([preprocess_recording(r, PreprocessParams())[0] for r in recordings])
feats = assemble(epochs, FeatureRecipe(psd_n_windows=2))

# Authenticate subject s01. Even-indexed rows train, odd rows probe, and the
# standardizer is fit on training rows only.
y = (epochs.subject_ids == "s01").astype(int)
train = np.arange(0, feats.n_rows, 2)
probe = np.arange(1, feats.n_rows, 2)
scaler = standardize_fit(feats.values[train])
x_train = standardize_apply(scaler, feats.values[train])
x_probe = standardize_apply(scaler, feats.values[probe])

print(f"user s01: {y[train].sum()} genuine / {(1 - y[train]).sum()} impostor training rows")
print(f"{'kind':>5s} {'eer':>8s} {'fnmr@fmr=10%':>13s}")
for kind in KINDS:
    model = fit(ClassifierSpec(kind), x_train, y[train], seed=0)
    s = score(model, x_probe)
    split = SimpleNamespace(genuine=s[y[probe] == 1], impostor=s[y[probe] == 0])
    print(f"{kind:>5s} {metrics.eer(split):8.4f} {metrics.fnmr_at_fmr(split, 0.1):13.4f}")

# The full report carries counts and resolution warnings: 75 impostor probes
# cannot resolve FMR levels of 1% and below, so those values arrive flagged
# rather than silently rounded.
model = fit(ClassifierSpec("LDA"), x_train, y[train], seed=0)
s = score(model, x_probe)
split = SimpleNamespace(genuine=s[y[probe] == 1], impostor=s[y[probe] == 0])
report = metrics.report(split)
print(f"\nLDA report: eer={report.eer:.4f}, n_genuine={report.n_genuine}, "
      f"n_impostor={report.n_impostor}")
print("resolution warnings:", report.resolution_warnings)

# Scores only enter metrics through their ordering, so any strictly
# increasing transform leaves every operating point untouched.
warped = SimpleNamespace(genuine=np.exp(split.genuine * 3), impostor=np.exp(split.impostor * 3))
print(f"\neer invariant under exp(3x) warp: {metrics.eer(split) == metrics.eer(warped)}")
