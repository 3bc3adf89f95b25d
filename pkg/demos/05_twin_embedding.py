"""
The twin embedding network
==========================

Instead of one classifier per user, a single convolutional network learns a
metric space where same-subject epochs sit close together. Enrollment then
reduces to averaging a few embedded epochs into a template; verification is
a cosine score against that template.

The training data here is engineered: each subject is an oscillation at a
personal frequency, an exaggerated version of the rhythm differences that
distinguish real subjects. That keeps the demo network small and the
training visible in seconds; the full-size architecture wants far more data
than a demo should burn.
"""

import numpy as np

from neuroidbench import twin
from neuroidbench.preprocessing import EpochSet

rng = np.random.default_rng(0)
rate, n_times = 64.0, 65
t = np.arange(n_times) / rate

# Six subjects, 30 epochs each: a subject-specific tone plus channel noise.
# The last two subjects are held out of training; their frequencies sit
# inside the trained range so the learned space has somewhere to put them.
blocks, subjects = [], []
for s, freq in enumerate((4.0, 9.0, 17.0, 26.0, 6.5, 21.0)):
    signature = 10.0 * np.sin(2 * np.pi * freq * t)
    blocks.append(signature[None, None, :] + rng.normal(0.0, 1.0, size=(30, 2, n_times)))
    subjects += [f"s{s + 1:02d}"] * 30
epochs = EpochSet(
    data=np.concatenate(blocks),
    subject_ids=np.array(subjects, dtype=object),
    session_ids=np.array(["ses01"] * len(subjects), dtype=object),
    sampling_rate_hz=rate,
    tmin_s=0.0,
    tmax_s=1.0,
    channel_names=("ch0", "ch1"),
)

# A shrunken five-stage network. Each stage halves the time axis, so 65
# samples leave exactly one time step before the dense projection.
net_config = twin.TwinConfig(
    conv_filters=(4, 4, 4, 4, 4),
    kernel_time=2,
    embedding_dim=8,
    epochs=20,
    batch_size=16,
    learning_rate=1e-2,
    seed=0,
)
model = twin.build(net_config, epochs.n_channels, epochs.n_times)

# Train on four subjects; two are held out entirely.
train_mask = np.isin(epochs.subject_ids, ["s01", "s02", "s03", "s04"])
twin.train(model, epochs.select(np.flatnonzero(train_mask)), net_config)
log = model.training_log
print("mean triplet loss per training pass:")
for i in (0, 4, 9, 14, len(log) - 1):
    print(f"  pass {i + 1:2d}: {log[i]:.4f}")

# The embedding generalizes: enroll a held-out subject from a handful of
# epochs and score genuine against impostor probes the model never fit.
held = epochs.select(np.flatnonzero(~train_mask))
ids = held.subject_ids
enroll = np.flatnonzero(ids == "s05")[:10]
genuine_probes = np.flatnonzero(ids == "s05")[10:]
impostor_probes = np.flatnonzero(ids == "s06")

genuine = twin.enroll_and_score(model, held.data[enroll], held.data[genuine_probes])
impostor = twin.enroll_and_score(model, held.data[enroll], held.data[impostor_probes])
print(f"\nheld-out subject s05, {enroll.size} epochs enrolled:")
print(f"  genuine probes  n={genuine.size:2d}  mean score {genuine.mean():+.3f}")
print(f"  impostor probes n={impostor.size:2d}  mean score {impostor.mean():+.3f}")
print(f"  gap {genuine.mean() - impostor.mean():+.3f} "
      "(cosine scores; positive gap means unseen subjects separate)")
