"""Reader for EDF and BDF continuous recordings.

Covers the fixed 256-byte header, the per-signal header block, and the
int16 (EDF) or int24 (BDF) sample records, applying each channel's
digital-to-physical calibration and converting to microvolts. Annotation
and trigger channels ("EDF Annotations", "BDF Annotations", "Status") are
dropped; events come from a sidecar file instead (see source.read_events_tsv).

Deliberately strict: disagreeing header byte counts, truncated data areas,
mixed sampling rates among signal channels, or units outside the known
table all raise ConversionError instead of being papered over.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConversionError
from .source import SourceRecording, microvolt_factor

_DROP_LABELS = ("EDF Annotations", "BDF Annotations", "Status")


def _ascii(buf, lo, n):
    return buf[lo : lo + n].decode("ascii", "replace").strip()


def _number(text, what, name, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise ConversionError(f"{name}: {what} field {text!r} is not a number") from None


def read_recording(path) -> SourceRecording:
    name = os.path.basename(os.fspath(path))
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 256:
        raise ConversionError(f"{name}: {len(raw)} bytes is too short for an EDF/BDF header")

    is_bdf = raw[0] == 0xFF and raw[1:8] == b"BIOSEMI"
    if not is_bdf and _ascii(raw, 0, 8) != "0":
        raise ConversionError(f"{name}: unrecognized version field {_ascii(raw, 0, 8)!r}")

    header_bytes = _number(_ascii(raw, 184, 8), "header size", name, int)
    n_records = _number(_ascii(raw, 236, 8), "record count", name, int)
    record_seconds = _number(_ascii(raw, 244, 8), "record duration", name)
    ns = _number(_ascii(raw, 252, 4), "signal count", name, int)
    if ns <= 0:
        raise ConversionError(f"{name}: {ns} signals")
    if header_bytes != 256 * (ns + 1):
        raise ConversionError(
            f"{name}: header size field says {header_bytes}, {ns} signals need {256 * (ns + 1)}"
        )
    if len(raw) < header_bytes:
        raise ConversionError(f"{name}: file ends inside the signal headers")
    if record_seconds <= 0:
        raise ConversionError(f"{name}: record duration {record_seconds}")

    sig = raw[256:header_bytes]

    def column(block_offset, width, i):
        return _ascii(sig, block_offset * ns + width * i, width)

    labels = [column(0, 16, i) for i in range(ns)]
    phys_dim = [column(96, 8, i) for i in range(ns)]
    phys_min = [_number(column(104, 8, i), "physical min", name) for i in range(ns)]
    phys_max = [_number(column(112, 8, i), "physical max", name) for i in range(ns)]
    dig_min = [_number(column(120, 8, i), "digital min", name) for i in range(ns)]
    dig_max = [_number(column(128, 8, i), "digital max", name) for i in range(ns)]
    rec_samples = [_number(column(216, 8, i), "samples per record", name, int) for i in range(ns)]

    bytes_per = 3 if is_bdf else 2
    samples_per_record = sum(rec_samples)
    record_bytes = samples_per_record * bytes_per
    data = raw[header_bytes:]
    if n_records == -1:
        n_records = len(data) // record_bytes
    if len(data) != n_records * record_bytes:
        raise ConversionError(
            f"{name}: data area is {len(data)} bytes, "
            f"{n_records} records of {record_bytes} expected"
        )

    keep = [i for i in range(ns) if labels[i] not in _DROP_LABELS]
    if not keep:
        raise ConversionError(f"{name}: no signal channels after dropping annotation channels")
    if len({rec_samples[i] for i in keep}) != 1:
        raise ConversionError(f"{name}: signal channels disagree on samples per record")
    per_channel = rec_samples[keep[0]]
    if per_channel <= 0:
        raise ConversionError(f"{name}: {per_channel} samples per record")
    rate_hz = per_channel / record_seconds

    if is_bdf:
        triples = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        flat = triples[:, 0] | (triples[:, 1] << 8) | (triples[:, 2] << 16)
        flat = (flat ^ 0x800000) - 0x800000
    else:
        flat = np.frombuffer(data, dtype="<i2").astype(np.int32)
    records = flat.reshape(n_records, samples_per_record)

    starts = np.concatenate(([0], np.cumsum(rec_samples)))
    signal = np.empty((len(keep), n_records * per_channel), dtype=np.float64)
    for row, i in enumerate(keep):
        digital = records[:, starts[i] : starts[i] + per_channel].reshape(-1)
        if dig_max[i] == dig_min[i]:
            raise ConversionError(f"{name} channel {labels[i]!r}: flat digital range")
        gain = (phys_max[i] - phys_min[i]) / (dig_max[i] - dig_min[i])
        physical = (digital - dig_min[i]) * gain + phys_min[i]
        factor = microvolt_factor(phys_dim[i], f"{name} channel {labels[i]!r}")
        signal[row] = physical * factor

    return SourceRecording(
        channel_names=tuple(labels[i] for i in keep),
        rate_hz=float(rate_hz),
        signal=signal,
    )
