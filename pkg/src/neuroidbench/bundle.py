"""The on-disk "epoch bundle" dataset format.

A bundle is a directory holding

* ``manifest.json``       dataset structure, snake_case keys, UTF-8
* ``data.f32``            little-endian IEEE-754 binary32 samples; each
                          session is stored row-major [n_channels x n_samples]
                          (channel-major) at its manifest-declared byte offset
* ``events_<subject>_<session>.csv``  header ``sample_index,code``, LF endings

Amplitudes are always microvolts; converters must rescale before writing.
Reading is lazy per subject-session, writing is single-pass and deterministic,
and a read/write round trip is bit-identical.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, IoError, TruncationError, ValidationError

PARADIGMS = ("P300", "N400", "synthetic")
UNIT = "microvolt"

_BYTES_PER_SAMPLE = 4  # binary32
_ID_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.\-]*$")

# events array columns (shape [n_events, 2], dtype int64)
EVENT_SAMPLE = 0
EVENT_CODE = 1


@dataclass(frozen=True)
class SessionEntry:
    session_id: str
    n_samples: int
    n_events: int
    data_offset_bytes: int
    events_file: str


@dataclass(frozen=True)
class SubjectEntry:
    subject_id: str
    sessions: tuple


@dataclass(frozen=True)
class DatasetManifest:
    """Validated description of a bundle's contents and layout."""

    dataset_name: str
    paradigm: str
    sampling_rate_hz: float
    channel_names: tuple
    unit: str
    subjects: tuple

    @property
    def n_channels(self):
        return len(self.channel_names)

    def subject_ids(self):
        return [s.subject_id for s in self.subjects]

    def session_bytes(self, entry: SessionEntry) -> int:
        return self.n_channels * entry.n_samples * _BYTES_PER_SAMPLE

    def iter_sessions(self):
        for subject in self.subjects:
            for session in subject.sessions:
                yield subject, session

    def validate(self):
        """Check every manifest invariant; raise ValidationError with a field path."""
        if not self.dataset_name:
            raise ValidationError("dataset_name: must be nonempty")
        if self.paradigm not in PARADIGMS:
            raise ValidationError(f"paradigm: {self.paradigm!r} not one of {PARADIGMS}")
        if not (self.sampling_rate_hz > 0):
            raise ValidationError(f"sampling_rate_hz: must be > 0, got {self.sampling_rate_hz}")
        if len(self.channel_names) == 0:
            raise ValidationError("channel_names: must be nonempty")
        if len(set(self.channel_names)) != len(self.channel_names):
            raise ValidationError("channel_names: names must be unique")
        seen = set()
        blocks = []
        for i, subject in enumerate(self.subjects):
            if not _ID_PATTERN.match(subject.subject_id):
                raise ValidationError(f"subjects[{i}].subject_id: unusable id {subject.subject_id!r}")
            for j, sess in enumerate(subject.sessions):
                path = f"subjects[{i}].sessions[{j}]"
                if not _ID_PATTERN.match(sess.session_id):
                    raise ValidationError(f"{path}.session_id: unusable id {sess.session_id!r}")
                key = (subject.subject_id, sess.session_id)
                if key in seen:
                    raise ValidationError(f"{path}: duplicate subject/session pair {key}")
                seen.add(key)
                if sess.n_samples < 0 or sess.n_events < 0:
                    raise ValidationError(f"{path}: negative counts")
                if sess.data_offset_bytes < 0:
                    raise ValidationError(f"{path}.data_offset_bytes: negative offset")
                if not sess.events_file:
                    raise ValidationError(f"{path}.events_file: must be nonempty")
                blocks.append((sess.data_offset_bytes, self.session_bytes(sess), path))
        blocks.sort()
        for (off_a, len_a, path_a), (off_b, _, path_b) in zip(blocks, blocks[1:]):
            if off_a + len_a > off_b:
                raise ValidationError(f"{path_b}: data block overlaps {path_a}")

    def total_data_bytes(self) -> int:
        return max(
            (sess.data_offset_bytes + self.session_bytes(sess) for _, sess in self.iter_sessions()),
            default=0,
        )


@dataclass
class RawRecording:
    """Continuous multichannel signal for one subject-session, in microvolts.

    ``events`` is an int64 array of shape [n_events, 2]; column 0 holds the
    stimulus onset sample index, column 1 the integer event code.
    """

    subject_id: str
    session_id: str
    sampling_rate_hz: float
    signal: np.ndarray
    events: np.ndarray

    @property
    def n_channels(self):
        return self.signal.shape[0]

    @property
    def n_samples(self):
        return self.signal.shape[1]


def events_filename(subject_id: str, session_id: str) -> str:
    return f"events_{subject_id}_{session_id}.csv"


def build_manifest(dataset_name, paradigm, sampling_rate_hz, channel_names, layout) -> DatasetManifest:
    """Construct a manifest with contiguous data offsets.

    ``layout`` is a sequence of (subject_id, [(session_id, n_samples, n_events), ...])
    in the order sessions will be written; offsets are assigned back to back.
    """
    offset = 0
    n_channels = len(channel_names)
    subjects = []
    for subject_id, sessions in layout:
        entries = []
        for session_id, n_samples, n_events in sessions:
            entries.append(
                SessionEntry(
                    session_id=str(session_id),
                    n_samples=int(n_samples),
                    n_events=int(n_events),
                    data_offset_bytes=offset,
                    events_file=events_filename(subject_id, session_id),
                )
            )
            offset += n_channels * int(n_samples) * _BYTES_PER_SAMPLE
        subjects.append(SubjectEntry(subject_id=str(subject_id), sessions=tuple(entries)))
    manifest = DatasetManifest(
        dataset_name=str(dataset_name),
        paradigm=str(paradigm),
        sampling_rate_hz=float(sampling_rate_hz),
        channel_names=tuple(str(c) for c in channel_names),
        unit=UNIT,
        subjects=tuple(subjects),
    )
    manifest.validate()
    return manifest


def _manifest_to_dict(manifest: DatasetManifest) -> dict:
    return {
        "dataset_name": manifest.dataset_name,
        "paradigm": manifest.paradigm,
        "sampling_rate_hz": manifest.sampling_rate_hz,
        "channel_names": list(manifest.channel_names),
        "unit": manifest.unit,
        "subjects": [
            {
                "subject_id": subject.subject_id,
                "sessions": [
                    {
                        "session_id": sess.session_id,
                        "n_samples": sess.n_samples,
                        "n_events": sess.n_events,
                        "data_offset_bytes": sess.data_offset_bytes,
                        "events_file": sess.events_file,
                    }
                    for sess in subject.sessions
                ],
            }
            for subject in manifest.subjects
        ],
    }


def _require(mapping, key, path, kind):
    if key not in mapping:
        raise ValidationError(f"{path}: missing key '{key}'")
    value = mapping[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValidationError(f"{path}.{key}: expected a number")
        return float(value)
    if kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValidationError(f"{path}.{key}: expected an integer")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ValidationError(f"{path}.{key}: expected a string")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ValidationError(f"{path}.{key}: expected a list")
        return value
    raise AssertionError(kind)


def _manifest_from_dict(raw: dict) -> DatasetManifest:
    if not isinstance(raw, dict):
        raise ValidationError("manifest: top level must be an object")
    subjects = []
    for i, sub in enumerate(_require(raw, "subjects", "manifest", list)):
        if not isinstance(sub, dict):
            raise ValidationError(f"subjects[{i}]: expected an object")
        sessions = []
        for j, sess in enumerate(_require(sub, "sessions", f"subjects[{i}]", list)):
            if not isinstance(sess, dict):
                raise ValidationError(f"subjects[{i}].sessions[{j}]: expected an object")
            path = f"subjects[{i}].sessions[{j}]"
            sessions.append(
                SessionEntry(
                    session_id=_require(sess, "session_id", path, str),
                    n_samples=_require(sess, "n_samples", path, int),
                    n_events=_require(sess, "n_events", path, int),
                    data_offset_bytes=_require(sess, "data_offset_bytes", path, int),
                    events_file=_require(sess, "events_file", path, str),
                )
            )
        subjects.append(
            SubjectEntry(
                subject_id=_require(sub, "subject_id", f"subjects[{i}]", str),
                sessions=tuple(sessions),
            )
        )
    unit = _require(raw, "unit", "manifest", str)
    if unit != UNIT:
        raise ValidationError(f"unit: must be '{UNIT}', got {unit!r}")
    manifest = DatasetManifest(
        dataset_name=_require(raw, "dataset_name", "manifest", str),
        paradigm=_require(raw, "paradigm", "manifest", str),
        sampling_rate_hz=_require(raw, "sampling_rate_hz", "manifest", float),
        channel_names=tuple(_require(raw, "channel_names", "manifest", list)),
        unit=unit,
        subjects=tuple(subjects),
    )
    manifest.validate()
    return manifest


def _write_events_csv(path, events):
    lines = ["sample_index,code"]
    for sample_index, code in events:
        lines.append(f"{int(sample_index)},{int(code)}")
    data = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(data)


def _read_events_csv(path, n_expected, n_samples):
    if not os.path.exists(path):
        raise FormatError(f"missing events file {os.path.basename(path)}")
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    lines = text.split("\n")
    if not lines or lines[0] != "sample_index,code":
        raise ValidationError(f"{os.path.basename(path)}: bad header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValidationError(f"{os.path.basename(path)}:{lineno}: expected two columns")
        try:
            sample_index, code = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValidationError(f"{os.path.basename(path)}:{lineno}: non-integer value") from None
        if not 0 <= sample_index < n_samples:
            raise ValidationError(
                f"{os.path.basename(path)}:{lineno}: sample_index {sample_index} outside [0, {n_samples})"
            )
        rows.append((sample_index, code))
    if len(rows) != n_expected:
        raise ValidationError(
            f"{os.path.basename(path)}: {len(rows)} events but manifest declares {n_expected}"
        )
    return np.array(rows, dtype=np.int64).reshape(len(rows), 2)


def write_bundle(manifest: DatasetManifest, recordings, path) -> None:
    """Write a bundle directory; byte output is a pure function of the input.

    ``recordings`` must iterate in manifest order (subjects outer, sessions
    inner) and agree with the manifest on ids, shapes and event counts.
    Offsets in the manifest must describe the back-to-back layout this
    function produces (use build_manifest()).
    """
    manifest.validate()
    recordings = list(recordings)
    entries = list(manifest.iter_sessions())
    if len(recordings) != len(entries):
        raise ValidationError(
            f"recordings: got {len(recordings)}, manifest declares {len(entries)} sessions"
        )
    expected_offset = 0
    for rec, (subject, sess) in zip(recordings, entries):
        path_id = f"{subject.subject_id}/{sess.session_id}"
        if rec.subject_id != subject.subject_id or rec.session_id != sess.session_id:
            raise ValidationError(
                f"recordings: expected {path_id}, got {rec.subject_id}/{rec.session_id}"
            )
        if rec.signal.ndim != 2 or rec.signal.shape[0] != manifest.n_channels:
            raise ValidationError(
                f"{path_id}: signal must have {manifest.n_channels} channel rows"
            )
        if rec.signal.shape[1] != sess.n_samples:
            raise ValidationError(
                f"{path_id}: signal has {rec.signal.shape[1]} samples, manifest says {sess.n_samples}"
            )
        if len(rec.events) != sess.n_events:
            raise ValidationError(
                f"{path_id}: {len(rec.events)} events, manifest says {sess.n_events}"
            )
        if len(rec.events) and not (
            (rec.events[:, EVENT_SAMPLE] >= 0).all()
            and (rec.events[:, EVENT_SAMPLE] < sess.n_samples).all()
        ):
            raise ValidationError(f"{path_id}: event sample index out of range")
        if sess.data_offset_bytes != expected_offset:
            raise ValidationError(
                f"{path_id}: data_offset_bytes {sess.data_offset_bytes} != contiguous layout {expected_offset}"
            )
        expected_offset += manifest.session_bytes(sess)
    try:
        os.makedirs(path, exist_ok=True)
        manifest_bytes = (
            json.dumps(_manifest_to_dict(manifest), indent=2, ensure_ascii=False) + "\n"
        ).encode("utf-8")
        with open(os.path.join(path, "manifest.json"), "wb") as fh:
            fh.write(manifest_bytes)
        with open(os.path.join(path, "data.f32"), "wb") as fh:
            for rec in recordings:
                fh.write(np.ascontiguousarray(rec.signal, dtype="<f4").tobytes())
        for rec, (_, sess) in zip(recordings, entries):
            _write_events_csv(os.path.join(path, sess.events_file), rec.events)
    except OSError as exc:
        raise IoError(f"cannot write bundle at {path}: {exc}") from exc


class Bundle:
    """Lazy reader over a validated bundle directory."""

    def __init__(self, path, manifest):
        self.path = path
        self.manifest = manifest
        self._data_path = os.path.join(path, "data.f32")

    def recording(self, subject_id, session_id) -> RawRecording:
        for subject, sess in self.manifest.iter_sessions():
            if subject.subject_id == subject_id and sess.session_id == session_id:
                return self._load(sess, subject_id)
        raise ValidationError(f"no session {subject_id}/{session_id} in manifest")

    def iter_recordings(self):
        for subject, sess in self.manifest.iter_sessions():
            yield self._load(sess, subject.subject_id)

    def _load(self, sess: SessionEntry, subject_id) -> RawRecording:
        n_values = self.manifest.n_channels * sess.n_samples
        with open(self._data_path, "rb") as fh:
            fh.seek(sess.data_offset_bytes)
            raw = fh.read(n_values * _BYTES_PER_SAMPLE)
        if len(raw) != n_values * _BYTES_PER_SAMPLE:
            raise TruncationError(
                f"data.f32 ends before session {subject_id}/{sess.session_id}"
            )
        signal = np.frombuffer(raw, dtype="<f4").reshape(self.manifest.n_channels, sess.n_samples)
        events = _read_events_csv(
            os.path.join(self.path, sess.events_file), sess.n_events, sess.n_samples
        )
        return RawRecording(
            subject_id=subject_id,
            session_id=sess.session_id,
            sampling_rate_hz=self.manifest.sampling_rate_hz,
            signal=signal,
            events=events,
        )


def read_bundle(path) -> Bundle:
    """Open and validate a bundle directory; recordings decode on demand.

    Raises FormatError for missing files, ValidationError for invariant
    violations (message carries the manifest field path), TruncationError
    when data.f32 is shorter than the declared layout.
    """
    manifest_path = os.path.join(path, "manifest.json")
    data_path = os.path.join(path, "data.f32")
    if not os.path.isdir(path) or not os.path.exists(manifest_path):
        raise FormatError(f"no manifest.json under {path}")
    if not os.path.exists(data_path):
        raise FormatError(f"no data.f32 under {path}")
    with open(manifest_path, "rb") as fh:
        try:
            raw = json.loads(fh.read().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"manifest.json is not valid JSON: {exc}") from exc
    manifest = _manifest_from_dict(raw)
    file_size = os.path.getsize(data_path)
    for subject, sess in manifest.iter_sessions():
        end = sess.data_offset_bytes + manifest.session_bytes(sess)
        if end > file_size:
            raise TruncationError(
                f"data.f32 holds {file_size} bytes but "
                f"{subject.subject_id}/{sess.session_id} needs bytes up to {end}"
            )
    return Bundle(path, manifest)
