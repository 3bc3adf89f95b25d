"""Authentication scenario construction and score collection.

Two axes define a scenario. The attacker model decides how impostor data is
split: a known attacker may appear in both training and probing (stratified
folds), an unknown attacker never trains the system that scores it (folds
grouped by subject). The session scheme decides where probes come from:
single-session evaluates each session against itself, multi-session enrolls
on an earlier session and probes with a strictly later one.

All randomness descends from the plan seed through fixed integer paths, so
any execution order, including a parallel one, reproduces the same scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import twin as twin_net
from .classifiers import ClassifierSpec, fit, score
from .errors import ParamError, SessionSkipped, SkipUser
from .features import FeatureRecipe, assemble, standardize_apply, standardize_fit
from .splits import group_fold_ids, stratified_fold_ids

DEFAULT_K_FOLDS = 4
DEFAULT_MIN_SAMPLES = 4

SCHEMES = ("single_session", "multi_session")
ATTACKERS = ("known", "unknown")


@dataclass(frozen=True)
class EvalPlan:
    scheme: str = "single_session"
    attacker: str = "unknown"
    k_folds: int = DEFAULT_K_FOLDS
    min_samples_per_user: int = DEFAULT_MIN_SAMPLES
    seed: int = 0

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ParamError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.attacker not in ATTACKERS:
            raise ParamError(f"attacker must be one of {ATTACKERS}, got {self.attacker!r}")
        if self.k_folds < 2:
            raise ParamError(f"k_folds must be >= 2, got {self.k_folds}")
        if self.min_samples_per_user < 1:
            raise ParamError(f"min_samples_per_user must be >= 1, got {self.min_samples_per_user}")
        if self.seed < 0:
            raise ParamError(f"seed must be >= 0, got {self.seed}")


@dataclass
class ScoreSet:
    """Genuine and impostor scores for one (user, fold, session pair) cell.

    context carries user_id, fold, enroll_session, probe_session and
    pipeline_id, plus the global row ids that were used for fitting and
    scoring so leakage is checkable after the fact.
    """

    genuine: np.ndarray
    impostor: np.ndarray
    context: dict = field(default_factory=dict)


@dataclass
class EvalResult:
    score_sets: list
    skips: list


@dataclass(frozen=True)
class ShallowPipeline:
    pipeline_id: str
    recipe: FeatureRecipe
    classifier: ClassifierSpec


@dataclass(frozen=True)
class TwinPipeline:
    pipeline_id: str
    config: "twin_net.TwinConfig"


@dataclass(frozen=True)
class Fold:
    """Row indices (into whatever array the splitter was handed) plus labels."""

    train_rows: np.ndarray
    train_labels: np.ndarray
    test_rows: np.ndarray
    test_labels: np.ndarray


def _subject_array(data):
    ids = data.subject_ids if hasattr(data, "subject_ids") else data
    return np.asarray(ids).astype(str)


def _first_appearance(values):
    values = np.asarray(values).astype(str)
    _, first = np.unique(values, return_index=True)
    return [values[i] for i in sorted(first)]


def _derive_seed(*path) -> int:
    return int(np.random.SeedSequence([int(p) for p in path]).generate_state(1)[0])


def known_attacker_folds(data, user, k, rng, min_genuine=DEFAULT_MIN_SAMPLES):
    """Stratified k-fold over all rows labeled genuine (user) vs impostor.

    Impostor subjects may appear on both sides of a fold; that is what makes
    the attacker known to the system.
    """
    subjects = _subject_array(data)
    labels = (subjects == str(user)).astype(int)
    n_genuine = int(labels.sum())
    if n_genuine < min_genuine:
        raise SkipUser(f"user {user!r} has {n_genuine} epochs, need {min_genuine}")
    if n_genuine == labels.size:
        raise ParamError(f"user {user!r} has no impostor rows to train against")
    fold_ids = stratified_fold_ids(labels, k, rng)
    folds = []
    for f in range(k):
        test = np.flatnonzero(fold_ids == f)
        train = np.flatnonzero(fold_ids != f)
        folds.append(Fold(train, labels[train], test, labels[test]))
    return folds


def unknown_attacker_folds(data, user, k, rng, min_genuine=DEFAULT_MIN_SAMPLES):
    """Group k-fold over impostor subjects; genuine rows dealt across folds.

    No impostor subject ever appears on both sides of a fold, so every probe
    comes from an identity the trained model has never seen. The user's own
    rows are split (k-1)/k train, 1/k test so each fold still has genuine
    probes. The impostor grouping consumes the rng first, then the genuine
    deal; keeping that order fixed is part of determinism.
    """
    subjects = _subject_array(data)
    labels = (subjects == str(user)).astype(int)
    genuine_rows = np.flatnonzero(labels == 1)
    impostor_rows = np.flatnonzero(labels == 0)
    if genuine_rows.size < min_genuine:
        raise SkipUser(f"user {user!r} has {genuine_rows.size} epochs, need {min_genuine}")
    impostor_subjects = set(subjects[impostor_rows].tolist())
    if len(impostor_subjects) < k:
        raise ParamError(
            f"unknown-attacker folds need >= {k} impostor subjects, got {len(impostor_subjects)}"
        )
    group_of = group_fold_ids(subjects[impostor_rows], k, rng)
    impostor_fold = np.array([group_of[s] for s in subjects[impostor_rows]])
    genuine_fold = stratified_fold_ids(np.zeros(genuine_rows.size, dtype=int), k, rng)
    folds = []
    for f in range(k):
        test = np.concatenate([impostor_rows[impostor_fold == f], genuine_rows[genuine_fold == f]])
        train = np.concatenate([impostor_rows[impostor_fold != f], genuine_rows[genuine_fold != f]])
        test.sort()
        train.sort()
        folds.append(Fold(train, labels[train], test, labels[test]))
    return folds


def _fold_builder(plan):
    return known_attacker_folds if plan.attacker == "known" else unknown_attacker_folds


def _usable_fold(fold):
    return (
        fold.test_labels.sum() > 0
        and (fold.test_labels == 0).sum() > 0
        and fold.train_labels.sum() > 0
        and (fold.train_labels == 0).sum() > 0
    )


def _score_set_from_fold(feats, fold, spec, clf_seed, context, global_rows):
    standardizer = standardize_fit(feats.values[fold.train_rows])
    train = standardize_apply(standardizer, feats.values[fold.train_rows])
    test = standardize_apply(standardizer, feats.values[fold.test_rows])
    model = fit(spec, train, fold.train_labels, seed=clf_seed)
    scores = score(model, test)
    genuine = scores[fold.test_labels == 1]
    impostor = scores[fold.test_labels == 0]
    context = dict(context)
    context["train_row_ids"] = global_rows[fold.train_rows]
    context["genuine_row_ids"] = global_rows[fold.test_rows[fold.test_labels == 1]]
    context["impostor_row_ids"] = global_rows[fold.test_rows[fold.test_labels == 0]]
    return ScoreSet(genuine, impostor, context)


def _shallow_session_scores(feats, global_rows, pipeline, plan, rng_path, sid):
    """Per-user fold loop within one session's feature matrix."""
    score_sets, skips = [], []
    users = _first_appearance(feats.subject_ids)
    builder = _fold_builder(plan)
    for u_idx, user in enumerate(users):
        rng = np.random.default_rng(list(rng_path) + [u_idx])
        try:
            folds = builder(feats, user, plan.k_folds, rng, plan.min_samples_per_user)
        except SkipUser as exc:
            skips.append({"kind": "user", "session": sid, "user_id": user, "reason": str(exc)})
            continue
        for f_idx, fold in enumerate(folds):
            if not _usable_fold(fold):
                skips.append(
                    {
                        "kind": "fold",
                        "session": sid,
                        "user_id": user,
                        "fold": f_idx,
                        "reason": "fold lacks a class on one side",
                    }
                )
                continue
            context = {
                "user_id": user,
                "fold": f_idx,
                "enroll_session": sid,
                "probe_session": sid,
                "pipeline_id": pipeline.pipeline_id,
                "scheme": plan.scheme,
                "attacker": plan.attacker,
            }
            clf_seed = _derive_seed(*rng_path, u_idx, f_idx, 7)
            score_sets.append(
                _score_set_from_fold(feats, fold, pipeline.classifier, clf_seed, context, global_rows)
            )
    return score_sets, skips


def _probe_share(n, k, rng):
    order = rng.permutation(n)
    n_probe = max(1, n // k)
    return order[:n_probe], order[n_probe:]


def _twin_session_scores(epochs, global_rows, pipeline, plan, rng_path, sid):
    """Embedding-train/evaluation subject split within one session.

    Every subject receives a seeded 1/k probe share. Evaluation subjects
    enroll on their remaining epochs; their probe shares cross-score each
    other. Under a known attacker, the embedding-training subjects' probe
    shares join the impostor pool (the latent space has seen those subjects),
    under an unknown attacker they stay out entirely. Probe shares are dealt
    before training and held out of the embedding set, so no scored row ever
    fit anything, in either attacker mode.
    """
    score_sets, skips = [], []
    subjects = _first_appearance(epochs.subject_ids)
    if len(subjects) < 3:
        skips.append(
            {
                "kind": "session",
                "session": sid,
                "reason": f"twin path needs >= 3 subjects in a session, got {len(subjects)}",
            }
        )
        return score_sets, skips
    subj_arr = _subject_array(epochs.subject_ids)
    deal_rng = np.random.default_rng(list(rng_path) + [101])
    group_of = group_fold_ids(np.array(subjects), plan.k_folds, deal_rng)
    for f in range(plan.k_folds):
        eval_subjects = [s for s in subjects if group_of[s] == f]
        train_subjects = [s for s in subjects if group_of[s] != f]
        if not eval_subjects or len(train_subjects) < 2:
            skips.append(
                {
                    "kind": "fold",
                    "session": sid,
                    "fold": f,
                    "reason": "not enough subjects on one side of the embedding split",
                }
            )
            continue
        shares = {}
        for subject in subjects:
            u_idx = subjects.index(subject)
            rows = np.flatnonzero(subj_arr == subject)
            rng = np.random.default_rng(list(rng_path) + [f, u_idx])
            probe_local, enroll_local = _probe_share(rows.size, plan.k_folds, rng)
            shares[subject] = (rows[probe_local], rows[enroll_local])
        train_rows = np.sort(np.concatenate([shares[s][1] for s in train_subjects]))
        config = replace(pipeline.config, seed=_derive_seed(*rng_path, f, 51))
        model = twin_net.build(config, epochs.n_channels, epochs.n_times)
        twin_net.train(model, epochs.select(train_rows), config)
        for subject in eval_subjects:
            probe_rows, enroll_rows = shares[subject]
            if enroll_rows.size + probe_rows.size < plan.min_samples_per_user:
                skips.append(
                    {
                        "kind": "user",
                        "session": sid,
                        "user_id": subject,
                        "reason": f"user {subject!r} has fewer than "
                        f"{plan.min_samples_per_user} epochs",
                    }
                )
                continue
            impostor_pool = [s for s in eval_subjects if s != subject]
            if plan.attacker == "known":
                impostor_pool = impostor_pool + train_subjects
            if not impostor_pool:
                skips.append(
                    {
                        "kind": "user",
                        "session": sid,
                        "user_id": subject,
                        "fold": f,
                        "reason": "no other held-out subject to serve as impostor",
                    }
                )
                continue
            impostor_rows = np.concatenate([shares[s][0] for s in impostor_pool])
            if impostor_rows.size == 0 or probe_rows.size == 0 or enroll_rows.size == 0:
                skips.append(
                    {
                        "kind": "user",
                        "session": sid,
                        "user_id": subject,
                        "fold": f,
                        "reason": "empty enrollment or probe side",
                    }
                )
                continue
            all_probe_rows = np.concatenate([probe_rows, impostor_rows])
            scores = twin_net.enroll_and_score(
                model, epochs.select(enroll_rows), epochs.select(all_probe_rows)
            )
            context = {
                "user_id": subject,
                "fold": f,
                "enroll_session": sid,
                "probe_session": sid,
                "pipeline_id": pipeline.pipeline_id,
                "scheme": plan.scheme,
                "attacker": plan.attacker,
                "train_row_ids": global_rows[enroll_rows],
                "embed_row_ids": global_rows[train_rows],
                "genuine_row_ids": global_rows[probe_rows],
                "impostor_row_ids": global_rows[impostor_rows],
            }
            score_sets.append(ScoreSet(scores[: probe_rows.size], scores[probe_rows.size :], context))
    return score_sets, skips


def run_single_session(epochs, pipeline, plan: EvalPlan) -> EvalResult:
    """Collect ScoreSets for every (session, user, fold) cell.

    Each session is evaluated against itself; users whose epoch count falls
    below the plan minimum are recorded as skips, and a session in which no
    user produced scores is recorded as a session skip. If nothing at all
    produced scores the evaluation raises SessionSkipped.
    """
    plan.validate()
    shallow = isinstance(pipeline, ShallowPipeline)
    session_order = _first_appearance(epochs.session_ids)
    sess_arr = np.asarray(epochs.session_ids).astype(str)
    score_sets, skips = [], []
    for s_idx, sid in enumerate(session_order):
        rows = np.flatnonzero(sess_arr == sid)
        sess_epochs = epochs.select(rows)
        rng_path = (plan.seed, s_idx)
        if shallow:
            feats = assemble(sess_epochs, pipeline.recipe)
            produced, skipped = _shallow_session_scores(feats, rows, pipeline, plan, rng_path, sid)
        else:
            produced, skipped = _twin_session_scores(sess_epochs, rows, pipeline, plan, rng_path, sid)
        if not produced and not any(s.get("kind") == "session" for s in skipped):
            skipped.append({"kind": "session", "session": sid, "reason": "no user produced scores"})
        score_sets.extend(produced)
        skips.extend(skipped)
    if not score_sets:
        raise SessionSkipped("no session produced any scores")
    return EvalResult(score_sets, skips)


def _shallow_pair_scores(feats_i, feats_j, rows_i, rows_j, pipeline, plan, rng_path, sid_i, sid_j):
    """Fold structure on the enroll session, probes from the later session."""
    score_sets, skips = [], []
    users = _first_appearance(feats_i.subject_ids)
    builder = _fold_builder(plan)
    subj_j = _subject_array(feats_j.subject_ids)
    pair = f"{sid_i}:{sid_j}"
    for u_idx, user in enumerate(users):
        genuine_j = np.flatnonzero(subj_j == user)
        if genuine_j.size == 0:
            skips.append(
                {
                    "kind": "user",
                    "session": pair,
                    "user_id": user,
                    "reason": f"user {user!r} has no epochs in probe session {sid_j!r}",
                }
            )
            continue
        rng = np.random.default_rng(list(rng_path) + [u_idx])
        try:
            folds = builder(feats_i, user, plan.k_folds, rng, plan.min_samples_per_user)
        except SkipUser as exc:
            skips.append({"kind": "user", "session": pair, "user_id": user, "reason": str(exc)})
            continue
        for f_idx, fold in enumerate(folds):
            if fold.train_labels.sum() == 0 or (fold.train_labels == 0).sum() == 0:
                skips.append(
                    {
                        "kind": "fold",
                        "session": pair,
                        "user_id": user,
                        "fold": f_idx,
                        "reason": "fold lacks a class on the training side",
                    }
                )
                continue
            if plan.attacker == "known":
                probe_rows = np.arange(subj_j.size)
            else:
                test_subjects = set(
                    np.asarray(feats_i.subject_ids).astype(str)[
                        fold.test_rows[fold.test_labels == 0]
                    ].tolist()
                )
                probe_rows = np.flatnonzero(
                    (subj_j == user) | np.isin(subj_j, sorted(test_subjects))
                )
            probe_labels = (subj_j[probe_rows] == user).astype(int)
            if probe_labels.sum() == 0 or (probe_labels == 0).sum() == 0:
                skips.append(
                    {
                        "kind": "fold",
                        "session": pair,
                        "user_id": user,
                        "fold": f_idx,
                        "reason": "probe session lacks a class for this fold",
                    }
                )
                continue
            standardizer = standardize_fit(feats_i.values[fold.train_rows])
            train = standardize_apply(standardizer, feats_i.values[fold.train_rows])
            probes = standardize_apply(standardizer, feats_j.values[probe_rows])
            clf_seed = _derive_seed(*rng_path, u_idx, f_idx, 7)
            model = fit(pipeline.classifier, train, fold.train_labels, seed=clf_seed)
            scores = score(model, probes)
            context = {
                "user_id": user,
                "fold": f_idx,
                "enroll_session": sid_i,
                "probe_session": sid_j,
                "pipeline_id": pipeline.pipeline_id,
                "scheme": plan.scheme,
                "attacker": plan.attacker,
                "train_row_ids": rows_i[fold.train_rows],
                "genuine_row_ids": rows_j[probe_rows[probe_labels == 1]],
                "impostor_row_ids": rows_j[probe_rows[probe_labels == 0]],
            }
            score_sets.append(
                ScoreSet(scores[probe_labels == 1], scores[probe_labels == 0], context)
            )
    return score_sets, skips


def _twin_pair_scores(epochs_i, epochs_j, rows_i, rows_j, pipeline, plan, rng_path, sid_i, sid_j):
    """Embedding and enrollment from session i, every probe from session j."""
    score_sets, skips = [], []
    subjects = _first_appearance(epochs_i.subject_ids)
    pair = f"{sid_i}:{sid_j}"
    if len(subjects) < 3:
        skips.append(
            {
                "kind": "session",
                "session": pair,
                "reason": f"twin path needs >= 3 subjects in a session, got {len(subjects)}",
            }
        )
        return score_sets, skips
    subj_i = _subject_array(epochs_i.subject_ids)
    subj_j = _subject_array(epochs_j.subject_ids)
    deal_rng = np.random.default_rng(list(rng_path) + [101])
    group_of = group_fold_ids(np.array(subjects), plan.k_folds, deal_rng)
    for f in range(plan.k_folds):
        eval_subjects = [s for s in subjects if group_of[s] == f]
        train_subjects = [s for s in subjects if group_of[s] != f]
        if not eval_subjects or len(train_subjects) < 2:
            skips.append(
                {
                    "kind": "fold",
                    "session": pair,
                    "fold": f,
                    "reason": "not enough subjects on one side of the embedding split",
                }
            )
            continue
        train_rows = np.flatnonzero(np.isin(subj_i, train_subjects))
        config = replace(pipeline.config, seed=_derive_seed(*rng_path, f, 51))
        model = twin_net.build(config, epochs_i.n_channels, epochs_i.n_times)
        twin_net.train(model, epochs_i.select(train_rows), config)
        for subject in eval_subjects:
            enroll_rows = np.flatnonzero(subj_i == subject)
            genuine_rows = np.flatnonzero(subj_j == subject)
            if enroll_rows.size < plan.min_samples_per_user:
                skips.append(
                    {
                        "kind": "user",
                        "session": pair,
                        "user_id": subject,
                        "reason": f"user {subject!r} has fewer than "
                        f"{plan.min_samples_per_user} enrollment epochs",
                    }
                )
                continue
            if genuine_rows.size == 0:
                skips.append(
                    {
                        "kind": "user",
                        "session": pair,
                        "user_id": subject,
                        "reason": f"user {subject!r} has no epochs in probe session {sid_j!r}",
                    }
                )
                continue
            if plan.attacker == "known":
                impostor_rows = np.flatnonzero(subj_j != subject)
            else:
                others = [s for s in eval_subjects if s != subject]
                impostor_rows = np.flatnonzero(np.isin(subj_j, others))
            if impostor_rows.size == 0:
                skips.append(
                    {
                        "kind": "user",
                        "session": pair,
                        "user_id": subject,
                        "fold": f,
                        "reason": "no impostor probes available in the probe session",
                    }
                )
                continue
            all_probe_rows = np.concatenate([genuine_rows, impostor_rows])
            scores = twin_net.enroll_and_score(
                model, epochs_i.select(enroll_rows), epochs_j.select(all_probe_rows)
            )
            context = {
                "user_id": subject,
                "fold": f,
                "enroll_session": sid_i,
                "probe_session": sid_j,
                "pipeline_id": pipeline.pipeline_id,
                "scheme": plan.scheme,
                "attacker": plan.attacker,
                "train_row_ids": rows_i[enroll_rows],
                "embed_row_ids": rows_i[train_rows],
                "genuine_row_ids": rows_j[genuine_rows],
                "impostor_row_ids": rows_j[impostor_rows],
            }
            score_sets.append(
                ScoreSet(scores[: genuine_rows.size], scores[genuine_rows.size :], context)
            )
    return score_sets, skips


def run_multi_session(epochs, pipeline, plan: EvalPlan) -> EvalResult:
    """Enroll on session i, probe with session j, for every ordered pair j > i.

    Session order is the first-appearance order of session ids, which the
    bundle reader preserves from the manifest. Training, enrollment and the
    standardizer only ever see session-i rows.
    """
    plan.validate()
    session_order = _first_appearance(epochs.session_ids)
    if len(session_order) < 2:
        raise ParamError(f"multi-session evaluation needs >= 2 sessions, got {len(session_order)}")
    shallow = isinstance(pipeline, ShallowPipeline)
    sess_arr = np.asarray(epochs.session_ids).astype(str)
    rows_by_session = {sid: np.flatnonzero(sess_arr == sid) for sid in session_order}
    parts_by_session = {sid: epochs.select(rows_by_session[sid]) for sid in session_order}
    if shallow:
        feats_by_session = {
            sid: assemble(parts_by_session[sid], pipeline.recipe) for sid in session_order
        }
    score_sets, skips = [], []
    for i_idx, sid_i in enumerate(session_order):
        for j_idx in range(i_idx + 1, len(session_order)):
            sid_j = session_order[j_idx]
            rng_path = (plan.seed, i_idx, j_idx)
            if shallow:
                produced, skipped = _shallow_pair_scores(
                    feats_by_session[sid_i],
                    feats_by_session[sid_j],
                    rows_by_session[sid_i],
                    rows_by_session[sid_j],
                    pipeline,
                    plan,
                    rng_path,
                    sid_i,
                    sid_j,
                )
            else:
                produced, skipped = _twin_pair_scores(
                    parts_by_session[sid_i],
                    parts_by_session[sid_j],
                    rows_by_session[sid_i],
                    rows_by_session[sid_j],
                    pipeline,
                    plan,
                    rng_path,
                    sid_i,
                    sid_j,
                )
            if not produced and not any(s.get("kind") == "session" for s in skipped):
                skipped.append(
                    {
                        "kind": "session",
                        "session": f"{sid_i}:{sid_j}",
                        "reason": "no user produced scores",
                    }
                )
            score_sets.extend(produced)
            skips.extend(skipped)
    if not score_sets:
        raise SessionSkipped("no session pair produced any scores")
    return EvalResult(score_sets, skips)


def run_plan(epochs, pipeline, plan: EvalPlan) -> EvalResult:
    """Dispatch on the plan scheme."""
    if plan.scheme == "multi_session":
        return run_multi_session(epochs, pipeline, plan)
    return run_single_session(epochs, pipeline, plan)
