"""Softmax-weighted aggregation of per-layer feature stacks.

Multi-layer feature dumps arrive as (layers x frames x dims) stacks; a
single weight vector, softmax-normalized from unconstrained logits,
collapses them to one (frames x dims) sequence. Weights can be supplied or
fitted by maximizing the two-view GCCA correlation between the
aggregated-then-pooled features and a target view, a proxy for the
task-trained weighting that surfaces which layers carry target-relevant
content.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import TrainingDivergedError, ValidationError
from .feature_io import ViewMatrix, pool_time
from .gcca import solve_gcca


def softmax(logits) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


@dataclass
class LayerWeights:
    """Unconstrained logits plus their softmax normalization."""

    raw: np.ndarray

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64)
        if self.raw.ndim != 1 or self.raw.size < 1:
            raise ValidationError("layer weight logits must be a non-empty 1-D vector")
        if not np.isfinite(self.raw).all():
            raise ValidationError("layer weight logits must be finite")

    @property
    def normalized(self) -> np.ndarray:
        return softmax(self.raw)

    @property
    def n_layers(self) -> int:
        return self.raw.size

    @classmethod
    def uniform(cls, n_layers: int) -> "LayerWeights":
        return cls(np.zeros(n_layers))


def aggregate_layers(stack, weights: LayerWeights) -> np.ndarray:
    """Weighted sum over the layer axis of an (L x T x D) stack."""
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 3:
        raise ValidationError(f"expected an L x T x D stack, got shape {stack.shape}")
    if stack.shape[0] != weights.n_layers:
        raise ValidationError(
            f"stack has {stack.shape[0]} layers but weights cover {weights.n_layers}"
        )
    return np.einsum("l,ltd->td", weights.normalized, stack)


@dataclass
class LayerFitConfig:
    """Gradient-ascent settings for weight fitting (small smooth problem)."""

    step_size: float = 1e-2
    steps: int = 200
    rank: int = 4
    eps: float = 1e-8
    fd_step: float = 1e-5

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValidationError(f"step_size must be > 0, got {self.step_size}")
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.rank < 1:
            raise ValidationError(f"rank must be >= 1, got {self.rank}")


def fit_layer_weights(stacks, target_view: ViewMatrix,
                      config: LayerFitConfig | None = None):
    """Fit layer logits by full-batch gradient ascent on a correlation proxy.

    ``stacks`` is one (L x T x D) array per utterance, aligned with the
    columns of ``target_view``. The objective is the sum of the top-``rank``
    GCCA eigenvalues between the aggregated, time-pooled stack features and
    the target view; its gradient over the L logits is taken by central
    finite differences, which is exact to working precision for this
    low-dimensional smooth objective. Deterministic: logits start uniform
    (all zero).

    Returns ``(LayerWeights, objective_history)``.
    """
    config = config or LayerFitConfig()
    if len(stacks) != target_view.n_utts:
        raise ValidationError(
            f"{len(stacks)} stacks vs {target_view.n_utts} target utterances"
        )
    if len(stacks) < 2:
        raise ValidationError("need at least two utterances to fit layer weights")
    first = np.asarray(stacks[0], dtype=np.float64)
    if first.ndim != 3:
        raise ValidationError(f"stacks must be L x T x D, got shape {first.shape}")
    n_layers, _, dims = first.shape
    # aggregation then mean-pooling is linear in the stack, so pre-pool each
    # layer once: pooled[l] is the layer-l utterance matrix (D x N)
    pooled = np.empty((n_layers, dims, len(stacks)))
    for i, stack in enumerate(stacks):
        stack = np.asarray(stack, dtype=np.float64)
        if stack.ndim != 3 or stack.shape[0] != n_layers or stack.shape[2] != dims:
            raise ValidationError(
                f"stack {i} shape {stack.shape} inconsistent with (L={n_layers}, *, D={dims})"
            )
        for layer in range(n_layers):
            pooled[layer, :, i] = pool_time(stack[layer])

    target = target_view.matrix
    if np.allclose(target.std(axis=1), 0.0):
        raise ValidationError("target view has zero variance; nothing to correlate with")
    rank = min(config.rank, dims, target.shape[0], target_view.n_utts - 1)

    def objective(logits):
        x = np.tensordot(softmax(logits), pooled, axes=1)
        solution = solve_gcca([x, target], rank=rank, eps=config.eps)
        return float(solution.eigenvalues.sum())

    logits = np.zeros(n_layers)
    history = [objective(logits)]
    h = config.fd_step
    for _ in range(config.steps):
        grad = np.empty(n_layers)
        for layer in range(n_layers):
            bump = np.zeros(n_layers)
            bump[layer] = h
            grad[layer] = (objective(logits + bump) - objective(logits - bump)) / (2 * h)
        logits = logits + config.step_size * grad
        value = objective(logits)
        if not np.isfinite(value):
            raise TrainingDivergedError("layer-weight fitting produced a non-finite objective")
        history.append(value)
    return LayerWeights(logits), np.asarray(history)


def weight_report(weights: LayerWeights, layer_labels=None) -> list[dict]:
    """Rows of (layer, normalized weight, top flag), sorted by layer index."""
    if layer_labels is None:
        layer_labels = [str(i) for i in range(weights.n_layers)]
    if len(layer_labels) != weights.n_layers:
        raise ValidationError(
            f"{len(layer_labels)} labels for {weights.n_layers} layers"
        )
    normalized = weights.normalized
    top = int(np.argmax(normalized))
    return [
        {"layer": str(label), "weight": float(normalized[i]), "top": i == top}
        for i, label in enumerate(layer_labels)
    ]
