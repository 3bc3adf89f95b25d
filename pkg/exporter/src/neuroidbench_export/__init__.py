"""Exporter for public ERP datasets into the epoch-bundle format.

Reads locally cached recordings (BrainVision, EDF or BDF containers),
converts amplitudes to microvolts, maps native event annotations to
integer codes through per-dataset data files, and writes bundles that the
benchmark package reads directly. Conversion is faithful or it fails:
unknown units and unmapped event vocabularies raise instead of guessing.
"""

from .errors import ConversionError, ExportError, FetchError
from .export import ExportSpec, VerifyReport, export, load_eventmap, verify
from .registry import REGISTRY, DatasetInfo, cache_root, resolve_key

__version__ = "0.1.0"

__all__ = [
    "ConversionError",
    "DatasetInfo",
    "ExportError",
    "ExportSpec",
    "FetchError",
    "REGISTRY",
    "VerifyReport",
    "cache_root",
    "export",
    "load_eventmap",
    "resolve_key",
    "verify",
    "__version__",
]
