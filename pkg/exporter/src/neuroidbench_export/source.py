"""Shared pieces of the container readers.

Every reader produces a SourceRecording with the signal already in
microvolts. Unit strings are looked up in a fixed table; anything not in
the table raises ConversionError rather than assuming a scale.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import ConversionError

# Factors to microvolts, keyed by the lowercased unit string. "µ" and "μ"
# are distinct code points that both occur in real headers.
_UV_PER_UNIT = {
    "nv": 1e-3,
    "uv": 1.0,
    "µv": 1.0,
    "μv": 1.0,
    "mv": 1e3,
    "v": 1e6,
}

_WS_RUN = re.compile(r"\s+")


@dataclass
class SourceRecording:
    """One continuous multichannel recording, amplitudes in microvolts."""

    channel_names: tuple
    rate_hz: float
    signal: np.ndarray  # [n_channels, n_samples], float64


def microvolt_factor(unit: str, where: str) -> float:
    """Scale factor from `unit` to microvolts, or ConversionError.

    `where` names the channel or file for the error message.
    """
    key = unit.strip().lower()
    if key in _UV_PER_UNIT:
        return _UV_PER_UNIT[key]
    if not key:
        raise ConversionError(f"{where}: no amplitude unit declared; will not guess a scale")
    raise ConversionError(f"{where}: unrecognized amplitude unit {unit.strip()!r}")


def normalize_annotation(text: str) -> str:
    """Collapse internal whitespace runs and strip; event-map keys use this form."""
    return _WS_RUN.sub(" ", text.strip())


def read_events_tsv(path, rate_hz: float):
    """Read a tab-separated events sidecar into [(sample_index, annotation), ...].

    The file needs a header with an ``onset`` column (seconds from
    recording start) and a ``value`` or ``trial_type`` column carrying the
    native annotation. Other columns are ignored. Onsets are converted to
    sample indices by rounding.
    """
    name = os.path.basename(os.fspath(path))
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConversionError(f"{name}: empty events file")
    header = lines[0].split("\t")
    try:
        onset_col = header.index("onset")
    except ValueError:
        raise ConversionError(f"{name}: header has no 'onset' column") from None
    if "value" in header:
        value_col = header.index("value")
    elif "trial_type" in header:
        value_col = header.index("trial_type")
    else:
        raise ConversionError(f"{name}: header has neither 'value' nor 'trial_type'")
    events = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise ConversionError(f"{name}:{lineno}: {len(fields)} fields, header has {len(header)}")
        try:
            onset = float(fields[onset_col])
        except ValueError:
            raise ConversionError(f"{name}:{lineno}: onset {fields[onset_col]!r} is not a number") from None
        if onset < 0:
            raise ConversionError(f"{name}:{lineno}: negative onset {onset}")
        events.append((int(round(onset * rate_hz)), normalize_annotation(fields[value_col])))
    return events
