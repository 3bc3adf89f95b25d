"""Verification metrics: ROC operating points, EER, FNMR at fixed FMR levels.

Conventions are fixed once here and relied on everywhere else:

* a probe is accepted at threshold t iff its score >= t,
* fmr(t) is the fraction of impostor scores >= t,
* fnmr(t) is the fraction of genuine scores < t.

Every metric is a function of the operating-point set alone, so applying any
strictly increasing map to all scores changes nothing downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyError, ParamError, ValidationError

DEFAULT_FMR_LEVELS = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class RocCurve:
    """Operating points listed from the strictest threshold to the loosest.

    thresholds[0] is +inf (accept nothing: fmr 0, fnmr 1) and thresholds[-1]
    is -inf (accept everything: fmr 1, fnmr 0); in between sit the unique
    observed scores in descending order.
    """

    thresholds: np.ndarray
    fmr: np.ndarray
    fnmr: np.ndarray

    def __len__(self):
        return self.thresholds.size


@dataclass(frozen=True)
class MetricsReport:
    """Per-scenario metric values plus enough counts to judge their resolution."""

    eer: float
    fnmr_at_fmr: dict
    n_genuine: int
    n_impostor: int
    context: dict = field(default_factory=dict)
    resolution_warnings: dict = field(default_factory=dict)


def _score_arrays(scores):
    genuine = np.asarray(scores.genuine, dtype=float).ravel()
    impostor = np.asarray(scores.impostor, dtype=float).ravel()
    if genuine.size == 0 or impostor.size == 0:
        raise EmptyError("both genuine and impostor scores are required")
    if not (np.isfinite(genuine).all() and np.isfinite(impostor).all()):
        raise ValidationError("scores must be finite")
    return genuine, impostor


def roc(scores) -> RocCurve:
    """Compute the full operating-point curve of a ScoreSet.

    Parameters
    ----------
    scores : object with ``genuine`` and ``impostor`` score vectors.

    Returns
    -------
    RocCurve with thresholds = [+inf, unique scores descending, -inf].
    """
    genuine, impostor = _score_arrays(scores)
    inner = np.unique(np.concatenate([genuine, impostor]))
    thresholds = np.concatenate(([np.inf], inner[::-1], [-np.inf]))
    gen_sorted = np.sort(genuine)
    imp_sorted = np.sort(impostor)
    # count via binary search: #(x >= t) and #(x < t) share one insertion point
    fmr = (impostor.size - np.searchsorted(imp_sorted, thresholds, side="left")) / impostor.size
    fnmr = np.searchsorted(gen_sorted, thresholds, side="left") / genuine.size
    return RocCurve(thresholds=thresholds, fmr=fmr, fnmr=fnmr)


def eer_from_curve(curve: RocCurve) -> float:
    """EER from an already-computed curve; see eer()."""
    diff = curve.fmr - curve.fnmr
    # diff runs from -1 at +inf to +1 at -inf and never decreases
    idx = int(np.argmax(diff >= 0.0))
    if diff[idx] == 0.0:
        return float(curve.fmr[idx])
    f0, f1 = curve.fmr[idx - 1], curve.fmr[idx]
    m0, m1 = curve.fnmr[idx - 1], curve.fnmr[idx]
    # linear interpolation between the two operating points bracketing the
    # sign change of (fmr - fnmr); the denominator is positive by construction
    s = (m0 - f0) / ((f1 - f0) - (m1 - m0))
    return float(f0 + s * (f1 - f0))


def eer(scores) -> float:
    """Equal error rate: the value where fmr(t) and fnmr(t) cross.

    The crossing is located between adjacent operating points and resolved by
    linear interpolation in (fmr, fnmr) space, so small score sets are not
    quantized to multiples of 1/n. An exact crossing is returned directly.
    """
    return eer_from_curve(roc(scores))


def fnmr_at_fmr_from_curve(curve: RocCurve, level: float) -> float:
    """FNMR at FMR level from an already-computed curve; see fnmr_at_fmr()."""
    if not 0.0 < level < 1.0:
        raise ParamError(f"fmr level must lie in (0, 1), got {level}")
    # fmr never decreases as the threshold drops, so the admissible
    # thresholds form a prefix of the curve; take the loosest of them
    idx = int(np.sum(curve.fmr <= level)) - 1
    return float(curve.fnmr[idx])


def fnmr_at_fmr(scores, level: float) -> float:
    """FNMR at the loosest threshold whose FMR does not exceed ``level``.

    When even the strictest finite threshold admits too many impostors the
    +inf sentinel is selected and the value is 1.0; whether the score set can
    resolve the level at all is reported separately (see report()).
    """
    return fnmr_at_fmr_from_curve(roc(scores), level)


def report(scores, levels=DEFAULT_FMR_LEVELS, context=None) -> MetricsReport:
    """Bundle eer and fnmr_at_fmr over all requested levels into one record.

    The resolution warning for a level is set exactly when the impostor count
    is below 1/level, i.e. when no threshold can realize that FMR except 0.
    """
    genuine, impostor = _score_arrays(scores)
    curve = roc(scores)
    values = {}
    warnings = {}
    for level in levels:
        values[level] = fnmr_at_fmr_from_curve(curve, level)
        warnings[level] = bool(impostor.size < 1.0 / level)
    return MetricsReport(
        eer=eer_from_curve(curve),
        fnmr_at_fmr=values,
        n_genuine=int(genuine.size),
        n_impostor=int(impostor.size),
        context=dict(context or {}),
        resolution_warnings=warnings,
    )


def level_label(level: float) -> str:
    """Column-name suffix for an FMR level: 1e-2 -> 'fnmr_fmr_1e2'."""
    return f"fnmr_fmr_1e{int(round(-math.log10(level)))}"


def aggregate(reports, by=()):
    """Group MetricsReports by context keys and emit per-group summary rows.

    Parameters
    ----------
    reports : sequence of MetricsReport
    by : tuple of context key names to group on (empty = one global group).

    Returns
    -------
    list of dict rows sorted by group key, each carrying the group fields,
    ``n``, and mean/std (population) for eer and every fnmr level present.
    """
    reports = list(reports)
    if not reports:
        raise EmptyError("nothing to aggregate")
    groups = {}
    for rep in reports:
        key = tuple(rep.context.get(k) for k in by)
        groups.setdefault(key, []).append(rep)
    rows = []
    for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        members = groups[key]
        row = dict(zip(by, key))
        row["n"] = len(members)
        eers = np.array([m.eer for m in members])
        row["eer_mean"] = float(eers.mean())
        row["eer_std"] = float(eers.std())
        for level in members[0].fnmr_at_fmr:
            vals = np.array([m.fnmr_at_fmr[level] for m in members])
            row[f"{level_label(level)}_mean"] = float(vals.mean())
            row[f"{level_label(level)}_std"] = float(vals.std())
        rows.append(row)
    return rows
