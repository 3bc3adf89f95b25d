"""Convert cached public ERP datasets into epoch-bundle directories.

export() walks the local cache for one dataset (see registry for the
layout contract), reads each recording through the container readers,
maps native event annotations to integer codes through the dataset's
event-map data file, and writes a bundle via the benchmark package's
writer. No filtering, epoching or resampling happens here; preprocessing
belongs to the consumer so every dataset receives the identical chain.
The output is a pure function of the cache contents: re-exporting the
same files yields a byte-identical bundle.

verify() is the independent cross-check: it re-opens a bundle, decodes
every recording, and reports findings (never exceptions) for count
mismatches, implausible amplitudes, and disagreements with the dataset
catalogue.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from neuroidbench import build_manifest, read_bundle, write_bundle
from neuroidbench import BenchmarkError, RawRecording

from . import brainvision, edf, registry
from .errors import ConversionError, FetchError
from .source import read_events_tsv

_EXTENSIONS = (".vhdr", ".edf", ".bdf")
AMPLITUDE_RANGE_UV = (0.01, 500.0)


@dataclass
class ExportSpec:
    """What to export and where to put it.

    ``subjects`` limits the export to the named subjects (with or without
    the cache's ``sub-`` prefix); None means all. ``event_selection``
    overrides the dataset's shipped event map; keys are native annotation
    strings, values the integer codes to store. ``cache_dir`` overrides
    the default cache root.
    """

    dataset_key: str
    output_dir: str | os.PathLike
    subjects: tuple = None
    event_selection: dict = None
    cache_dir: str | os.PathLike = None


@dataclass
class VerifyReport:
    bundle_dir: str
    dataset_name: str = None
    n_subjects: int = 0
    n_recordings: int = 0
    n_events: int = 0
    findings: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.findings


def load_eventmap(dataset_key: str) -> dict:
    """The shipped annotation -> code selection for one dataset."""
    info = registry.REGISTRY[registry.resolve_key(dataset_key)]
    payload = resources.files("neuroidbench_export").joinpath("eventmaps", info.eventmap)
    with payload.open("r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return _checked_selection(doc["select"], info.eventmap)


def _checked_selection(mapping, where):
    selection = {}
    for key, value in mapping.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConversionError(f"{where}: code for {key!r} must be an integer, got {value!r}")
        selection[str(key)] = value
    if not selection:
        raise ConversionError(f"{where}: empty event selection")
    return selection


def _scan_cache(dataset_dir):
    """[(subject_id, [(session_id, recording_path), ...]), ...], sorted."""
    subjects = []
    for entry in sorted(os.listdir(dataset_dir)):
        subject_dir = os.path.join(dataset_dir, entry)
        if not (entry.startswith("sub-") and os.path.isdir(subject_dir)):
            continue
        sessions = []
        for fname in sorted(os.listdir(subject_dir)):
            stem, ext = os.path.splitext(fname)
            if ext.lower() in _EXTENSIONS and stem.startswith("ses-") and stem.endswith("_eeg"):
                session_id = stem[len("ses-") : -len("_eeg")]
                sessions.append((session_id, os.path.join(subject_dir, fname)))
        if sessions:
            subjects.append((entry[len("sub-") :], sessions))
    return subjects


def _read_session(path):
    """(SourceRecording, [(sample, annotation), ...]) for any container."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".vhdr":
        return brainvision.read_recording(path)
    recording = edf.read_recording(path)
    sidecar = os.path.splitext(path)[0].removesuffix("_eeg") + "_events.tsv"
    if not os.path.exists(sidecar):
        raise FetchError(
            f"{os.path.basename(path)}: events sidecar {os.path.basename(sidecar)} is missing from the cache"
        )
    return recording, read_events_tsv(sidecar, recording.rate_hz)


def _map_events(raw_events, selection, n_samples, where):
    """Apply the selection; returns (events int64 [n,2], unmatched annotation set)."""
    picked, unmatched = [], set()
    for sample, annotation in raw_events:
        code = selection.get(annotation)
        if code is None:
            unmatched.add(annotation)
            continue
        if not 0 <= sample < n_samples:
            raise ConversionError(
                f"{where}: event at sample {sample} outside the recording (0..{n_samples - 1})"
            )
        picked.append((sample, code))
    picked.sort()
    events = np.array(picked, dtype=np.int64).reshape(len(picked), 2)
    return events, unmatched


def export(spec: ExportSpec) -> str:
    """Convert one cached dataset to a bundle directory; returns its path."""
    try:
        key = registry.resolve_key(spec.dataset_key)
    except KeyError:
        raise FetchError(
            f"unknown dataset {spec.dataset_key!r}; supported: {', '.join(sorted(registry.REGISTRY))}"
        ) from None
    info = registry.REGISTRY[key]
    dataset_dir = os.path.join(registry.cache_root(spec.cache_dir), key)
    if not os.path.isdir(dataset_dir):
        raise FetchError(
            f"no local cache at {dataset_dir}; download the dataset ({info.home}) "
            "and lay it out as described in the registry module"
        )
    layout = _scan_cache(dataset_dir)
    if not layout:
        raise FetchError(f"{dataset_dir}: no sub-*/ses-*_eeg.* recordings found")

    if spec.subjects is not None:
        available = {subject_id for subject_id, _ in layout}
        wanted = []
        for requested in spec.subjects:
            token = str(requested)
            token = token[len("sub-") :] if token.startswith("sub-") else token
            if token not in available:
                raise FetchError(
                    f"subject {requested!r} not in the cache (available: {', '.join(sorted(available))})"
                )
            wanted.append(token)
        layout = [(sid, sessions) for sid, sessions in layout if sid in set(wanted)]

    selection = (
        _checked_selection(spec.event_selection, "event_selection")
        if spec.event_selection is not None
        else load_eventmap(key)
    )

    recordings = []
    manifest_layout = []
    channel_names = None
    rate_hz = None
    total_events = 0
    unmatched = set()
    for subject_id, sessions in layout:
        entries = []
        for session_id, path in sessions:
            where = f"sub-{subject_id}/ses-{session_id}"
            source, raw_events = _read_session(path)
            if channel_names is None:
                channel_names = source.channel_names
                rate_hz = source.rate_hz
            else:
                if source.channel_names != channel_names:
                    raise ConversionError(
                        f"{where}: channel names differ from the first recording; "
                        "will not reorder or rename channels"
                    )
                if abs(source.rate_hz - rate_hz) > 1e-9 * max(rate_hz, 1.0):
                    raise ConversionError(
                        f"{where}: sampling rate {source.rate_hz} Hz differs from {rate_hz} Hz"
                    )
            events, missed = _map_events(raw_events, selection, source.signal.shape[1], where)
            unmatched |= missed
            total_events += len(events)
            recordings.append(
                RawRecording(
                    subject_id=subject_id,
                    session_id=session_id,
                    sampling_rate_hz=rate_hz,
                    signal=source.signal,
                    events=events,
                )
            )
            entries.append((session_id, source.signal.shape[1], len(events)))
        manifest_layout.append((subject_id, entries))

    if total_events == 0:
        sample = ", ".join(repr(a) for a in sorted(unmatched)[:5]) or "none at all"
        raise ConversionError(
            f"event selection matched no annotations; the recordings carry e.g. {sample}. "
            "Amend the dataset's event map if your copy labels events differently."
        )

    manifest = build_manifest(key, info.paradigm, rate_hz, channel_names, manifest_layout)
    write_bundle(manifest, recordings, spec.output_dir)
    read_bundle(spec.output_dir)  # final validation pass over what landed on disk
    return os.fspath(spec.output_dir)


def verify(bundle_dir) -> VerifyReport:
    """Cross-check a bundle; all problems land in report.findings."""
    report = VerifyReport(bundle_dir=os.fspath(bundle_dir))
    try:
        bundle = read_bundle(bundle_dir)
    except (BenchmarkError, OSError) as exc:
        report.findings.append(f"bundle failed validation: {exc}")
        return report

    manifest = bundle.manifest
    report.dataset_name = manifest.dataset_name
    report.n_subjects = len(manifest.subjects)

    low, high = AMPLITUDE_RANGE_UV
    for subject in manifest.subjects:
        for sess in subject.sessions:
            where = f"{subject.subject_id}/{sess.session_id}"
            report.n_recordings += 1
            try:
                rec = bundle.recording(subject.subject_id, sess.session_id)
            except (BenchmarkError, OSError) as exc:
                report.findings.append(f"{where}: {exc}")
                continue
            report.n_events += len(rec.events)
            median_uv = float(np.median(np.abs(rec.signal))) if rec.signal.size else 0.0
            if not low <= median_uv <= high:
                report.findings.append(
                    f"{where}: median |amplitude| {median_uv:.3g} µV outside the plausible "
                    f"{low}-{high} µV range (wrong unit scale?)"
                )

    try:
        info = registry.REGISTRY[registry.resolve_key(manifest.dataset_name)]
    except KeyError:
        report.notes.append(f"dataset {manifest.dataset_name!r} not in the catalogue; source checks skipped")
        return report

    if abs(manifest.sampling_rate_hz - info.rate_hz) > 1e-6 * info.rate_hz:
        report.findings.append(
            f"sampling rate {manifest.sampling_rate_hz} Hz, catalogue says {info.rate_hz} Hz"
        )
    off_sessions = [
        subject.subject_id for subject in manifest.subjects if len(subject.sessions) != info.sessions
    ]
    if off_sessions:
        report.findings.append(
            f"{len(off_sessions)} subject(s) with a session count other than the catalogue's "
            f"{info.sessions} (first: {off_sessions[0]})"
        )
    if report.n_subjects > info.subjects:
        report.findings.append(
            f"{report.n_subjects} subjects, catalogue says the dataset has {info.subjects}"
        )
    elif report.n_subjects < info.subjects:
        report.notes.append(f"subset export: {report.n_subjects} of {info.subjects} subjects")
    return report
