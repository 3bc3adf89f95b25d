"""Catalogue of supported datasets and the local cache contract.

Each entry records the published shape of one public ERP dataset (subject
and session counts, channel count, sampling rate, paradigm), the event-map
data file that selects its stimulus annotations, and where the dataset
lives publicly. The numbers are what a complete export is expected to
produce and what verify() checks bundles against.

The exporter never downloads. It reads a local cache laid out as

    <cache_root>/<dataset_key>/
        sub-<subject>/
            ses-<session>_eeg.vhdr     (+ .vmrk and .eeg)   BrainVision
        or  ses-<session>_eeg.edf      (+ ses-<session>_events.tsv)
        or  ses-<session>_eeg.bdf      (+ ses-<session>_events.tsv)

one recording file per session, subject and session tokens free-form
(sorted lexicographically). Populate the cache by downloading from the
dataset's public home; where the native distribution is not one of the
three supported containers, convert it losslessly with standard EEG
tooling first. The events sidecar is tab-separated with an ``onset``
column in seconds and a ``value`` (or ``trial_type``) column holding the
native annotation; BrainVision recordings use their own marker files
instead.

The default cache root is ``$NEUROIDBENCH_EXPORT_CACHE`` or, failing
that, ``~/.cache/neuroidbench-export``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

CACHE_ENV = "NEUROIDBENCH_EXPORT_CACHE"


@dataclass(frozen=True)
class DatasetInfo:
    key: str
    subjects: int
    sessions: int  # per subject
    channels: int
    rate_hz: float
    paradigm: str
    eventmap: str  # resource file under eventmaps/
    home: str


_ENTRIES = (
    DatasetInfo("BrainInvaders2015a", 50, 1, 32, 512.0, "P300",
                "braininvaders2015a.json", "Zenodo: Brain Invaders 2015a (bi2015a) P300 videogame dataset"),
    DatasetInfo("ERPCORE_N400", 40, 1, 30, 1024.0, "N400",
                "erpcore_n400.json", "ERP CORE resource (erpinfo.org/erp-core), N400 word-pair task"),
    DatasetInfo("ERPCORE_P300", 40, 1, 30, 1024.0, "P300",
                "erpcore_p300.json", "ERP CORE resource (erpinfo.org/erp-core), P3 active visual oddball"),
    DatasetInfo("COGBCIFLANKER", 29, 3, 64, 512.0, "N400",
                "cogbciflanker.json", "Zenodo: COG-BCI database, Flanker task sessions"),
    DatasetInfo("Mantegna2019", 31, 1, 65, 500.0, "N400",
                "mantegna2019.json", "Sentence-reading N400 dataset of Mantegna et al. 2019 (OSF)"),
    DatasetInfo("Huebner_LLP", 13, 1, 31, 1000.0, "P300",
                "huebner_llp.json", "Zenodo: visual speller dataset of Huebner et al. (learning from label proportions study)"),
    DatasetInfo("Sosulski2019", 13, 1, 31, 1000.0, "P300",
                "sosulski2019.json", "Zenodo: auditory oddball dataset of Sosulski & Tangermann 2019"),
    DatasetInfo("Lee2019", 54, 2, 62, 1000.0, "P300",
                "lee2019.json", "GigaDB: OpenBMI dataset of Lee et al. 2019, ERP speller sessions"),
    DatasetInfo("Won2022", 55, 1, 32, 512.0, "P300",
                "won2022.json", "P300 speller dataset of Won et al. 2022 (OSF)"),
)

REGISTRY = {entry.key: entry for entry in _ENTRIES}

ALIASES = {
    "BrainInvaders15a": "BrainInvaders2015a",
    "COG_BCI_Flanker": "COGBCIFLANKER",
}


def resolve_key(name: str) -> str:
    """Map a dataset name or alias to its registry key, or raise KeyError."""
    if name in REGISTRY:
        return name
    if name in ALIASES:
        return ALIASES[name]
    raise KeyError(name)


def cache_root(explicit=None) -> str:
    if explicit is not None:
        return os.fspath(explicit)
    env = os.environ.get(CACHE_ENV)
    if env:
        return env
    return os.path.join(os.path.expanduser("~"), ".cache", "neuroidbench-export")
