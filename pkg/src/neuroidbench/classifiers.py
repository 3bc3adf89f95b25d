"""Six shallow per-user authenticators behind one fit/score contract.

Labels are binary: 1 marks the genuine user's rows, 0 the impostors. Every
model emits scores in [0, 1] where higher means "more likely genuine":

* KNN   fraction of genuine rows among the k nearest training rows
* LDA   logistic posterior along the pooled-covariance discriminant
* LR    L2-penalized logistic regression fit by damped Newton steps
* NB    Gaussian naive Bayes posterior of the genuine class
* RF    fraction of forest trees voting genuine
* SVM   RBF support vector machine with Platt-scaled decision values

KNN/LDA/LR/NB are implemented here directly; the two heavier models wrap
scikit-learn estimators (seeded, single-threaded by default) while keeping
score semantics and calibration under this module's control.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.svm import SVC

from .errors import ParamError, TrainingError, ValidationError
from .splits import stratified_fold_ids

KINDS = ("KNN", "LDA", "LR", "NB", "RF", "SVM")

_DEFAULTS = {
    "KNN": {"k": 5},
    "LDA": {},
    "LR": {"l2": 1.0, "max_iter": 100, "tol": 1e-8},
    "NB": {"var_floor": 1e-9},
    "RF": {"n_trees": 100, "n_jobs": 1},
    "SVM": {"C": 1.0},
}


@dataclass(frozen=True)
class ClassifierSpec:
    """A classifier kind plus overrides of its (few) free hyperparameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        if self.kind not in KINDS:
            raise ParamError(f"unknown classifier kind {self.kind!r}, expected one of {KINDS}")
        merged = dict(_DEFAULTS[self.kind])
        for key, value in self.params.items():
            if key not in merged:
                raise ParamError(f"{self.kind} has no hyperparameter {key!r}")
            merged[key] = value
        if self.kind == "KNN" and not (isinstance(merged["k"], int) and merged["k"] >= 1):
            raise ParamError(f"KNN k must be a positive integer, got {merged['k']}")
        if self.kind == "LR" and not merged["l2"] >= 0:
            raise ParamError(f"LR l2 strength must be >= 0, got {merged['l2']}")
        if self.kind == "NB" and not merged["var_floor"] > 0:
            raise ParamError(f"NB variance floor must be > 0, got {merged['var_floor']}")
        if self.kind == "RF" and not (isinstance(merged["n_trees"], int) and merged["n_trees"] >= 1):
            raise ParamError(f"RF n_trees must be a positive integer, got {merged['n_trees']}")
        if self.kind == "SVM" and not merged["C"] > 0:
            raise ParamError(f"SVM C must be > 0, got {merged['C']}")
        return merged


def _sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_training_input(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValidationError(f"X {X.shape} and y {y.shape} do not align")
    if not np.isfinite(X).all():
        raise ValidationError("training features contain NaN or Inf")
    if not set(np.unique(y)) <= {0, 1}:
        raise ValidationError("labels must be binary (1 genuine, 0 impostor)")
    if len(np.unique(y)) < 2:
        raise TrainingError("both classes are required to fit an authenticator")
    return X, y


def _balanced_weights(y):
    n = y.size
    n1 = int(y.sum())
    weights = np.where(y == 1, n / (2.0 * n1), n / (2.0 * (n - n1)))
    return weights


class _ModelBase:
    kind = None

    def __init__(self, n_features, n_genuine, n_impostor, seed):
        self.n_features = n_features
        self.n_genuine = n_genuine
        self.n_impostor = n_impostor
        self.seed = seed

    def _check_probe(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValidationError(
                f"probe rows have {X.shape[-1] if X.ndim else '?'} features, model expects {self.n_features}"
            )
        if not np.isfinite(X).all():
            raise ValidationError("probe features contain NaN or Inf")
        return X


class _KnnModel(_ModelBase):
    kind = "KNN"

    def __init__(self, X, y, k, **meta):
        super().__init__(X.shape[1], **meta)
        self._X = X
        self._y = y
        self.k = min(k, X.shape[0])

    def score(self, X):
        X = self._check_probe(X)
        d2 = (
            (X**2).sum(axis=1)[:, None]
            - 2.0 * X @ self._X.T
            + (self._X**2).sum(axis=1)[None, :]
        )
        order = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return self._y[order].mean(axis=1)


class _LinearModel(_ModelBase):
    """Shared scorer for LDA and LR: logistic posterior of w.x + b."""

    def __init__(self, w, b, **meta):
        super().__init__(w.size, **meta)
        self.w = w
        self.b = b

    def score(self, X):
        X = self._check_probe(X)
        return _sigmoid(X @ self.w + self.b)


class _LdaModel(_LinearModel):
    kind = "LDA"


class _LogisticModel(_LinearModel):
    kind = "LR"

    def __init__(self, w, b, ll_history, grad_norm, **meta):
        super().__init__(w, b, **meta)
        self.ll_history = ll_history
        self.grad_norm = grad_norm


class _NaiveBayesModel(_ModelBase):
    kind = "NB"

    def __init__(self, means, variances, log_priors, **meta):
        super().__init__(means.shape[1], **meta)
        self.means = means
        self.variances = variances
        self.log_priors = log_priors

    def score(self, X):
        X = self._check_probe(X)
        log_like = np.empty((X.shape[0], 2))
        for c in range(2):
            gap = X - self.means[c]
            log_like[:, c] = self.log_priors[c] - 0.5 * (
                np.log(2.0 * np.pi * self.variances[c]).sum()
                + (gap**2 / self.variances[c]).sum(axis=1)
            )
        top = log_like.max(axis=1, keepdims=True)
        posterior = np.exp(log_like - top)
        return posterior[:, 1] / posterior.sum(axis=1)


class _ForestModel(_ModelBase):
    kind = "RF"

    def __init__(self, forest, **meta):
        super().__init__(**meta)
        self.forest = forest

    def score(self, X):
        X = self._check_probe(X).astype(np.float32)
        votes = np.zeros(X.shape[0])
        genuine_index = float(np.flatnonzero(self.forest.classes_ == 1)[0])
        for tree in self.forest.estimators_:
            votes += tree.predict(X) == genuine_index
        return votes / len(self.forest.estimators_)


class _SvmModel(_ModelBase):
    kind = "SVM"

    def __init__(self, svc, platt_a, platt_b, **meta):
        super().__init__(**meta)
        self.svc = svc
        self.platt_a = platt_a
        self.platt_b = platt_b

    def score(self, X):
        X = self._check_probe(X)
        decision = self.svc.decision_function(X)
        return _sigmoid(-(self.platt_a * decision + self.platt_b))


def _fit_lda(X, y, meta):
    mu0 = X[y == 0].mean(axis=0)
    mu1 = X[y == 1].mean(axis=0)
    gap0 = X[y == 0] - mu0
    gap1 = X[y == 1] - mu1
    scatter = gap0.T @ gap0 + gap1.T @ gap1
    pooled = scatter / max(X.shape[0] - 2, 1)
    w = np.linalg.pinv(pooled) @ (mu1 - mu0)
    n1 = int(y.sum())
    b = -0.5 * (mu0 + mu1) @ w + np.log(n1 / (y.size - n1))
    return _LdaModel(w, b, **meta)


def _penalized_ll(beta, Z, y, weights, l2):
    z = Z @ beta
    # weighted bernoulli log-likelihood, numerically stable form
    ll = np.sum(weights * (y * z - np.logaddexp(0.0, z)))
    return ll - 0.5 * l2 * np.dot(beta[1:], beta[1:])


def _fit_logistic(X, y, l2, max_iter, tol, meta):
    n, d = X.shape
    Z = np.hstack([np.ones((n, 1)), X])
    weights = _balanced_weights(y)
    penalty = np.ones(d + 1) * l2
    penalty[0] = 0.0  # intercept stays unpenalized
    beta = np.zeros(d + 1)
    history = [_penalized_ll(beta, Z, y, weights, l2)]
    grad = None
    for _ in range(max_iter):
        p = _sigmoid(Z @ beta)
        grad = Z.T @ (weights * (y - p)) - penalty * beta
        if np.linalg.norm(grad) < tol:
            break
        curvature = weights * p * (1.0 - p)
        hessian = (Z * curvature[:, None]).T @ Z + np.diag(penalty)
        step = np.linalg.solve(hessian + 1e-12 * np.eye(d + 1), grad)
        # halve the Newton step until the penalized likelihood improves,
        # which makes the per-iteration monotonicity unconditional
        scale = 1.0
        for _ in range(50):
            candidate = beta + scale * step
            ll = _penalized_ll(candidate, Z, y, weights, l2)
            if ll >= history[-1]:
                break
            scale *= 0.5
        beta = beta + scale * step
        history.append(_penalized_ll(beta, Z, y, weights, l2))
    p = _sigmoid(Z @ beta)
    grad = Z.T @ (weights * (y - p)) - penalty * beta
    return _LogisticModel(
        beta[1:], beta[0], ll_history=history, grad_norm=float(np.linalg.norm(grad)), **meta
    )


def _fit_naive_bayes(X, y, var_floor, meta):
    means = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.stack([np.maximum(X[y == c].var(axis=0), var_floor) for c in (0, 1)])
    counts = np.array([(y == 0).sum(), (y == 1).sum()], dtype=float)
    return _NaiveBayesModel(means, variances, np.log(counts / y.size), **meta)


def _platt_fit(decision, y, max_iter=100):
    """Newton fit of P(genuine|f) = 1 / (1 + exp(A f + B)) with safe targets."""
    n1 = int(y.sum())
    n0 = y.size - n1
    target = np.where(y == 1, (n1 + 1.0) / (n1 + 2.0), 1.0 / (n0 + 2.0))
    a, b = 0.0, np.log((n0 + 1.0) / (n1 + 1.0))

    def objective(a_, b_):
        z = a_ * decision + b_
        # cross entropy against the smoothed targets, stable at large |z|
        return float(np.sum(target * z + np.logaddexp(0.0, -z)))

    best = objective(a, b)
    for _ in range(max_iter):
        z = a * decision + b
        p = _sigmoid(-z)
        d1 = target - p
        grad_a = float(np.dot(d1, decision))
        grad_b = float(d1.sum())
        if max(abs(grad_a), abs(grad_b)) < 1e-10:
            break
        w = p * (1.0 - p)
        h11 = float(np.dot(w, decision**2)) + 1e-12
        h12 = float(np.dot(w, decision))
        h22 = float(w.sum()) + 1e-12
        det = h11 * h22 - h12 * h12
        step_a = -(h22 * grad_a - h12 * grad_b) / det
        step_b = -(h11 * grad_b - h12 * grad_a) / det
        scale = 1.0
        for _ in range(50):
            candidate = objective(a + scale * step_a, b + scale * step_b)
            if candidate <= best:
                break
            scale *= 0.5
        a += scale * step_a
        b += scale * step_b
        best = objective(a, b)
    return a, b


def _fit_svm(X, y, C, seed, meta):
    def make_svc():
        return SVC(
            kernel="rbf",
            C=C,
            gamma="scale",
            class_weight="balanced",
            probability=False,
            random_state=seed % (2**32),
        )

    rng = np.random.default_rng([seed, 3])
    min_class = min(int(y.sum()), int((1 - y).sum()))
    if min_class >= 3:
        # out-of-fold decision values from an internal seeded 3-fold
        fold_ids = stratified_fold_ids(y, 3, rng)
        decision = np.empty(y.size)
        usable = True
        for fold in range(3):
            train = fold_ids != fold
            if len(np.unique(y[train])) < 2:
                usable = False
                break
            part = make_svc().fit(X[train], y[train])
            decision[~train] = part.decision_function(X[~train])
        if not usable:
            decision = None
    else:
        decision = None
    svc = make_svc().fit(X, y)
    if decision is None:
        # too few rows for held-out calibration; fall back to in-sample values
        decision = svc.decision_function(X)
    a, b = _platt_fit(decision, y)
    return _SvmModel(svc, a, b, n_features=X.shape[1], **meta)


def fit(spec: ClassifierSpec, X, y, seed=0):
    """Train one authenticator on standardized rows.

    Parameters
    ----------
    spec : ClassifierSpec
    X : [n_rows, n_features] training rows (already standardized upstream).
    y : binary labels, 1 genuine / 0 impostor; both classes must appear.
    seed : int controlling every stochastic choice (RF bootstrap, folds).

    Returns
    -------
    A fitted model with a ``score(X) -> [0, 1]`` method.
    """
    params = spec.resolved()
    X, y = _check_training_input(X, y)
    seed = int(seed)
    meta = {
        "n_genuine": int(y.sum()),
        "n_impostor": int(y.size - y.sum()),
        "seed": seed,
    }
    if spec.kind == "KNN":
        return _KnnModel(X, y, params["k"], **meta)
    if spec.kind == "LDA":
        return _fit_lda(X, y, meta)
    if spec.kind == "LR":
        return _fit_logistic(X, y, params["l2"], params["max_iter"], params["tol"], meta)
    if spec.kind == "NB":
        return _fit_naive_bayes(X, y, params["var_floor"], meta)
    if spec.kind == "RF":
        forest = RandomForestClassifier(
            n_estimators=params["n_trees"],
            criterion="gini",
            max_features="sqrt",
            class_weight="balanced",
            random_state=seed % (2**32),
            n_jobs=params["n_jobs"],
        ).fit(X, y)
        return _ForestModel(forest, n_features=X.shape[1], **meta)
    if spec.kind == "SVM":
        return _fit_svm(X, y, params["C"], seed, meta)
    raise ParamError(f"unknown classifier kind {spec.kind!r}")


def score(model, X):
    """Match scores in [0, 1] for probe rows; higher means more genuine."""
    return model.score(X)
