"""Reader for BrainVision recordings (.vhdr header, .vmrk markers, binary data).

Handles the BINARY data formats INT_16, INT_32 and IEEE_FLOAT_32 in either
MULTIPLEXED or VECTORIZED orientation, applies per-channel resolutions and
converts to microvolts. A channel with no unit string is microvolts by the
format's convention; an unknown unit raises ConversionError. Markers are
returned as (sample_index, "Type/Description") pairs with marker positions
shifted from the format's 1-based convention to 0-based sample indices.

Commas inside header fields arrive escaped as the two characters ``\\1``
and are unescaped after splitting.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .errors import ConversionError
from .source import SourceRecording, microvolt_factor, normalize_annotation

_MAGIC = "Brain Vision Data Exchange"
_DTYPES = {"INT_16": "<i2", "INT_32": "<i4", "IEEE_FLOAT_32": "<f4"}
_MARKER_KEY = re.compile(r"^Mk(\d+)$")
_CHANNEL_KEY = re.compile(r"^Ch(\d+)$")


def _read_text(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def _parse_sections(path):
    """INI-style parse: {section: {key: value}}, ';' lines are comments."""
    name = os.path.basename(os.fspath(path))
    text = _read_text(path)
    lines = text.splitlines()
    if not lines or _MAGIC not in lines[0]:
        raise ConversionError(f"{name}: missing the Brain Vision Data Exchange signature line")
    sections = {}
    current = None
    for line in lines[1:]:
        stripped = line.strip()
        if not stripped or stripped.startswith(";"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
            sections.setdefault(current, {})
            continue
        if current is None or "=" not in stripped:
            continue
        key, _, value = stripped.partition("=")
        sections[current][key.strip()] = value.strip()
    return name, sections


def _fields(value):
    return [part.replace("\\1", ",") for part in value.split(",")]


def _require(sections, section, key, name):
    try:
        return sections[section][key]
    except KeyError:
        raise ConversionError(f"{name}: missing {key} in [{section}]") from None


def read_markers(path):
    """Parse a .vmrk file into [(sample_index, annotation), ...] in marker order."""
    name, sections = _parse_sections(path)
    info = sections.get("Marker Infos", {})
    numbered = []
    for key, value in info.items():
        match = _MARKER_KEY.match(key)
        if not match:
            continue
        parts = _fields(value)
        if len(parts) < 3:
            raise ConversionError(f"{name}: marker {key} has {len(parts)} fields, need at least 3")
        kind, description, position = parts[0], parts[1], parts[2]
        try:
            pos = int(position)
        except ValueError:
            raise ConversionError(f"{name}: marker {key} position {position!r} is not an integer") from None
        if pos < 1:
            raise ConversionError(f"{name}: marker {key} position {pos} (positions are 1-based)")
        label = f"{kind}/{description}" if description.strip() else kind
        numbered.append((int(match.group(1)), pos - 1, normalize_annotation(label)))
    numbered.sort()
    return [(sample, label) for _, sample, label in numbered]


def read_recording(vhdr_path):
    """Read header, data and markers; returns (SourceRecording, markers)."""
    name, sections = _parse_sections(vhdr_path)
    folder = os.path.dirname(os.fspath(vhdr_path))

    data_format = _require(sections, "Common Infos", "DataFormat", name)
    if data_format.upper() != "BINARY":
        raise ConversionError(f"{name}: DataFormat {data_format!r} not supported (BINARY only)")
    orientation = _require(sections, "Common Infos", "DataOrientation", name).upper()
    if orientation not in ("MULTIPLEXED", "VECTORIZED"):
        raise ConversionError(f"{name}: unknown DataOrientation {orientation!r}")
    n_channels = int(_require(sections, "Common Infos", "NumberOfChannels", name))
    interval_us = float(_require(sections, "Common Infos", "SamplingInterval", name))
    if n_channels <= 0 or interval_us <= 0:
        raise ConversionError(f"{name}: implausible channel count or sampling interval")
    rate_hz = 1e6 / interval_us

    binary_format = _require(sections, "Binary Infos", "BinaryFormat", name).upper()
    if binary_format not in _DTYPES:
        raise ConversionError(f"{name}: unsupported BinaryFormat {binary_format!r}")

    channels = sections.get("Channel Infos", {})
    names, factors = [], []
    for idx in range(1, n_channels + 1):
        entry = channels.get(f"Ch{idx}")
        if entry is None:
            raise ConversionError(f"{name}: [Channel Infos] has no Ch{idx}")
        parts = _fields(entry)
        ch_name = parts[0].strip()
        resolution = parts[2].strip() if len(parts) > 2 else ""
        unit = parts[3].strip() if len(parts) > 3 else ""
        res = float(resolution) if resolution else 1.0
        # empty unit means microvolts in this format
        factor = microvolt_factor(unit, f"{name} channel {ch_name!r}") if unit else 1.0
        names.append(ch_name)
        factors.append(res * factor)

    data_path = os.path.join(folder, _require(sections, "Common Infos", "DataFile", name))
    if not os.path.exists(data_path):
        raise ConversionError(f"{name}: data file {os.path.basename(data_path)} not found")
    with open(data_path, "rb") as fh:
        raw = fh.read()
    dtype = np.dtype(_DTYPES[binary_format])
    if len(raw) % (dtype.itemsize * n_channels):
        raise ConversionError(
            f"{name}: {len(raw)} data bytes do not divide into {n_channels} channels of {dtype.itemsize}-byte samples"
        )
    flat = np.frombuffer(raw, dtype=dtype)
    n_samples = flat.size // n_channels
    if orientation == "MULTIPLEXED":
        matrix = flat.reshape(n_samples, n_channels).T
    else:
        matrix = flat.reshape(n_channels, n_samples)
    signal = matrix.astype(np.float64) * np.asarray(factors)[:, None]

    markers = []
    marker_file = sections.get("Common Infos", {}).get("MarkerFile")
    if marker_file:
        marker_path = os.path.join(folder, marker_file)
        if not os.path.exists(marker_path):
            raise ConversionError(f"{name}: marker file {marker_file} not found")
        markers = read_markers(marker_path)

    recording = SourceRecording(channel_names=tuple(names), rate_hz=rate_hz, signal=signal)
    return recording, markers
