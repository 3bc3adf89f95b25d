"""Convolutional embedding network trained with batch-hard triplet loss.

The network maps an epoch [n_channels, n_times] through five stages of
(1-D convolution over time, ReLU, average-pool 2), then a global average
over time and a dense layer, and L2-normalizes the result. Scores are
cosine similarities between probe embeddings and an enrollment centroid.

Everything is plain numpy with explicit forward/backward passes, so the
gradients themselves are testable against finite differences; the optimizer
is Adam with the usual moment defaults, seeded and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParamError, TrainingError

_N_STAGES = 5
_POOL = 2
_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8
_EMBED_CHUNK = 512


@dataclass(frozen=True)
class TwinConfig:
    conv_filters: tuple = (16, 32, 64, 128, 32)
    kernel_time: int = 7
    embedding_dim: int = 32
    margin: float = 1.0
    epochs: int = 10
    batch_size: int = 256
    learning_rate: float = 1e-3
    seed: int = 0
    verbose: bool = False
    workers: int = 1

    def validate(self):
        if len(self.conv_filters) != _N_STAGES:
            raise ParamError(f"conv_filters must list {_N_STAGES} stages, got {len(self.conv_filters)}")
        if any(f < 1 for f in self.conv_filters):
            raise ParamError("conv_filters must all be >= 1")
        if self.kernel_time < 1:
            raise ParamError(f"kernel_time must be >= 1, got {self.kernel_time}")
        if self.embedding_dim < 2:
            raise ParamError(f"embedding_dim must be >= 2, got {self.embedding_dim}")
        if not self.margin > 0:
            raise ParamError(f"margin must be > 0, got {self.margin}")
        if self.epochs < 1:
            raise ParamError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 3:
            raise ParamError(f"batch_size must be >= 3, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ParamError(f"learning_rate must be > 0, got {self.learning_rate}")


def min_admissible_n_times(kernel_time: int) -> int:
    return 2**_N_STAGES * kernel_time


class EmbeddingModel:
    """Weights plus input geometry; see build() and train()."""

    def __init__(self, config, n_channels, n_times, params):
        self.config = config
        self.n_channels = n_channels
        self.n_times = n_times
        self.params = params
        self.training_log = []
        self.trained = False

    def copy_params(self):
        return {k: v.copy() for k, v in self.params.items()}


def build(config: TwinConfig, n_channels: int, n_times: int) -> EmbeddingModel:
    """Initialize an untrained model for the given epoch geometry.

    Weights are uniform in +-1/sqrt(fan_in), drawn in a fixed layer order
    from the config seed. The five pool-halvings need
    n_times >= 32*kernel_time; smaller windows raise ParamError.
    """
    config.validate()
    if n_channels < 1:
        raise ParamError(f"n_channels must be >= 1, got {n_channels}")
    minimum = min_admissible_n_times(config.kernel_time)
    if n_times < minimum:
        raise ParamError(
            f"n_times {n_times} too small for kernel {config.kernel_time}; "
            f"need at least {minimum} samples"
        )
    rng = np.random.default_rng([int(config.seed), 7])
    params = {}
    depth = n_channels
    for i, filters in enumerate(config.conv_filters):
        fan_in = config.kernel_time * depth
        bound = 1.0 / np.sqrt(fan_in)
        params[f"conv{i}_w"] = rng.uniform(-bound, bound, size=(config.kernel_time, depth, filters))
        params[f"conv{i}_b"] = rng.uniform(-bound, bound, size=filters)
        depth = filters
    bound = 1.0 / np.sqrt(depth)
    params["dense_w"] = rng.uniform(-bound, bound, size=(depth, config.embedding_dim))
    params["dense_b"] = rng.uniform(-bound, bound, size=config.embedding_dim)
    return EmbeddingModel(config, n_channels, n_times, params)


def _forward_with_cache(params, config, X):
    """Full forward pass; the cache carries what backward() needs."""
    h = X
    cache = {"stages": []}
    for i in range(_N_STAGES):
        w = params[f"conv{i}_w"]
        windows = sliding_window_view(h, w.shape[0], axis=2)  # [B, d_in, T', k]
        z = np.einsum("bdtk,kde->bet", windows, w) + params[f"conv{i}_b"][None, :, None]
        relu = np.maximum(z, 0.0)
        t_pool = relu.shape[2] // _POOL
        pooled = (relu[:, :, 0 : 2 * t_pool : 2] + relu[:, :, 1 : 2 * t_pool : 2]) / 2.0
        cache["stages"].append({"windows": windows, "z": z, "t_pool": t_pool})
        h = pooled
    pooled_mean = h.mean(axis=2)  # [B, d5]
    raw = pooled_mean @ params["dense_w"] + params["dense_b"]
    norms = np.maximum(np.linalg.norm(raw, axis=1, keepdims=True), 1e-12)
    emb = raw / norms
    cache["last"] = h
    cache["pooled_mean"] = pooled_mean
    cache["raw"] = raw
    cache["norms"] = norms
    cache["emb"] = emb
    return emb, cache


def _backward(params, config, d_emb, cache):
    """Parameter gradients given dLoss/dEmbedding."""
    raw, norms, emb = cache["raw"], cache["norms"], cache["emb"]
    inner = (d_emb * emb).sum(axis=1, keepdims=True)
    d_raw = (d_emb - emb * inner) / norms
    grads = {
        "dense_w": cache["pooled_mean"].T @ d_raw,
        "dense_b": d_raw.sum(axis=0),
    }
    d_pooled_mean = d_raw @ params["dense_w"].T
    t_last = cache["last"].shape[2]
    d_h = np.repeat(d_pooled_mean[:, :, None], t_last, axis=2) / t_last
    for i in reversed(range(_N_STAGES)):
        stage = cache["stages"][i]
        z, windows, t_pool = stage["z"], stage["windows"], stage["t_pool"]
        d_relu = np.zeros_like(z)
        d_relu[:, :, 0 : 2 * t_pool : 2] = d_h / 2.0
        d_relu[:, :, 1 : 2 * t_pool : 2] += d_h / 2.0
        d_z = d_relu * (z > 0.0)
        w = params[f"conv{i}_w"]
        grads[f"conv{i}_w"] = np.einsum("bdtk,bet->kde", windows, d_z)
        grads[f"conv{i}_b"] = d_z.sum(axis=(0, 2))
        if i > 0:
            kernel = w.shape[0]
            t_conv = z.shape[2]
            depth_in = w.shape[1]
            d_h = np.zeros((z.shape[0], depth_in, t_conv + kernel - 1))
            for j in range(kernel):
                d_h[:, :, j : j + t_conv] += np.einsum("bet,de->bdt", d_z, w[j])
    return grads


def triplet_loss(anchor, positive, negative, margin):
    """Mean over the batch of max(0, d(a,p)^2 - d(a,n)^2 + margin)."""
    d_ap = ((anchor - positive) ** 2).sum(axis=1)
    d_an = ((anchor - negative) ** 2).sum(axis=1)
    return float(np.maximum(0.0, d_ap - d_an + margin).mean())


def triplet_loss_and_grad(embeddings, anchors, positives, negatives, margin):
    """Loss plus its gradient w.r.t. every embedding row.

    The triplet index arrays may repeat rows; gradients accumulate.
    """
    a = embeddings[anchors]
    p = embeddings[positives]
    n = embeddings[negatives]
    d_ap = ((a - p) ** 2).sum(axis=1)
    d_an = ((a - n) ** 2).sum(axis=1)
    terms = d_ap - d_an + margin
    active = terms > 0.0
    loss = float(np.maximum(0.0, terms).mean())
    d_emb = np.zeros_like(embeddings)
    if active.any():
        coeff = 2.0 / terms.size
        np.add.at(d_emb, anchors[active], coeff * (n[active] - p[active]))
        np.add.at(d_emb, positives[active], -coeff * (a[active] - p[active]))
        np.add.at(d_emb, negatives[active], coeff * (a[active] - n[active]))
    return loss, d_emb


def mine_batch_hard(embeddings, labels):
    """Hardest positive and hardest negative per anchor within the batch.

    Returns (anchors, positives, negatives) index arrays covering every
    anchor that has at least one positive and one negative available.
    """
    labels = np.asarray(labels)
    sq = (embeddings**2).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * embeddings @ embeddings.T, 0.0)
    same = labels[:, None] == labels[None, :]
    eye = np.eye(labels.size, dtype=bool)
    pos_mask = same & ~eye
    neg_mask = ~same
    anchors = np.flatnonzero(pos_mask.any(axis=1) & neg_mask.any(axis=1))
    if anchors.size == 0:
        return anchors, anchors, anchors
    pos_d = np.where(pos_mask[anchors], d2[anchors], -np.inf)
    neg_d = np.where(neg_mask[anchors], d2[anchors], np.inf)
    return anchors, np.argmax(pos_d, axis=1), np.argmin(neg_d, axis=1)


def loss_and_param_grads(model: EmbeddingModel, X, triplets, margin):
    """Loss and gradients for a fixed triplet assignment (no mining inside).

    Keeping mining outside this function means its output is a smooth
    function of the parameters, which is what a finite-difference check
    needs.
    """
    anchors, positives, negatives = triplets
    emb, cache = _forward_with_cache(model.params, model.config, X)
    loss, d_emb = triplet_loss_and_grad(emb, anchors, positives, negatives, margin)
    grads = _backward(model.params, model.config, d_emb, cache)
    return loss, grads


def train(model: EmbeddingModel, epochs, config: TwinConfig = None) -> EmbeddingModel:
    """Fit the embedding on the training subjects' epochs.

    ``epochs`` must already be restricted to the embedding-training
    partition; this function only checks that at least two subjects are
    present. Mini-batches are drawn in a seeded order, triplets are mined
    batch-hard, and updates use Adam. The mean loss of each pass over the
    data is appended to model.training_log.
    """
    config = config or model.config
    n_subjects = len(set(epochs.subject_ids.tolist()))
    if n_subjects < 2:
        raise TrainingError(f"need >= 2 training subjects, got {n_subjects}")
    X = np.asarray(epochs.data, dtype=float)
    if X.shape[1] != model.n_channels or X.shape[2] != model.n_times:
        raise ParamError(
            f"epoch geometry {X.shape[1:]} does not match the built model "
            f"({model.n_channels}, {model.n_times})"
        )
    _, labels = np.unique(epochs.subject_ids.astype(str), return_inverse=True)
    rng = np.random.default_rng([int(config.seed), 11])
    moment1 = {k: np.zeros_like(v) for k, v in model.params.items()}
    moment2 = {k: np.zeros_like(v) for k, v in model.params.items()}
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(X.shape[0])
        losses = []
        for start in range(0, order.size, config.batch_size):
            batch = order[start : start + config.batch_size]
            if batch.size < 3:
                continue
            emb, cache = _forward_with_cache(model.params, model.config, X[batch])
            anchors, positives, negatives = mine_batch_hard(emb, labels[batch])
            if anchors.size == 0:
                continue
            loss, d_emb = triplet_loss_and_grad(emb, anchors, positives, negatives, config.margin)
            grads = _backward(model.params, model.config, d_emb, cache)
            step += 1
            for key, grad in grads.items():
                moment1[key] = _ADAM_BETA1 * moment1[key] + (1 - _ADAM_BETA1) * grad
                moment2[key] = _ADAM_BETA2 * moment2[key] + (1 - _ADAM_BETA2) * grad**2
                m_hat = moment1[key] / (1 - _ADAM_BETA1**step)
                v_hat = moment2[key] / (1 - _ADAM_BETA2**step)
                model.params[key] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)
            losses.append(loss)
        mean_loss = float(np.mean(losses)) if losses else float("nan")
        model.training_log.append(mean_loss)
        if config.verbose:
            print(f"twin epoch {len(model.training_log)}: loss {mean_loss:.6f}")
    model.trained = True
    return model


def embed(model: EmbeddingModel, data) -> np.ndarray:
    """Unit-norm embeddings for epochs given as an EpochSet or raw array."""
    X = np.asarray(data.data if hasattr(data, "data") else data, dtype=float)
    chunks = [
        _forward_with_cache(model.params, model.config, X[i : i + _EMBED_CHUNK])[0]
        for i in range(0, X.shape[0], _EMBED_CHUNK)
    ]
    return np.concatenate(chunks, axis=0)


def enroll_and_score(model: EmbeddingModel, enrollment, probes) -> np.ndarray:
    """Cosine similarity of each probe against the enrollment centroid.

    The template is the L2-normalized mean of the enrollment embeddings, so
    scores live in [-1, 1] and do not depend on enrollment order.
    """
    enroll_data = enrollment.data if hasattr(enrollment, "data") else enrollment
    if np.asarray(enroll_data).shape[0] == 0:
        raise ParamError("enrollment must contain at least one epoch")
    template = embed(model, enrollment).mean(axis=0)
    template = template / max(np.linalg.norm(template), 1e-12)
    return embed(model, probes) @ template
