"""Deep generalized CCA: one small network per view, trained on the GCCA objective.

Each view passes through Linear -> Sigmoid -> BatchNorm into a shared-width
output space. A training step solves the linear GCCA subproblem on the
batch outputs (via :mod:`psr_kit.gcca`), takes the optimal objective as the
loss, and backpropagates its gradient through the networks with plain SGD.

Because the subproblem is solved to optimality, the loss gradient with
respect to each view's (centered) output matrix has the closed envelope
form ``2 (U_j U_j^T Y_j - U_j G)``: the inner minimizers ``G`` and ``U_j``
can be treated as constants when differentiating. Everything runs in
float64 on CPU and is deterministic for a fixed seed.

After training, a full-dataset eval-mode pass feeds one final GCCA solve;
per-utterance cross-view scores are cosine similarities between the two
views' projected, per-dimension-standardized canonical vectors.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import TrainingDivergedError, ValidationError
from .feature_io import DatasetViews
from .gcca import GccaSolution, project, solve_gcca

MODEL_FORMAT_VERSION = 1


@dataclass
class DgccaTrainConfig:
    """Training hyperparameters. Defaults follow the SGD / batch-32 / lr 1e-6 recipe."""

    learning_rate: float = 1e-6
    batch_size: int = 32
    epochs: int = 50
    rank: int = 16
    eps: float = 1e-8
    seed: int = 0
    hidden_dim: int = 64
    bn_momentum: float = 0.1
    bn_epsilon: float = 1e-5
    early_stop_tol: float = 1e-6
    early_stop_patience: int = 5

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 2:
            raise ValidationError(f"batch_size must be >= 2, got {self.batch_size}")
        if not 1 <= self.rank <= min(self.batch_size - 1, self.hidden_dim):
            raise ValidationError(
                f"rank {self.rank} outside [1, min(batch_size - 1, hidden_dim)] "
                f"= [1, {min(self.batch_size - 1, self.hidden_dim)}]"
            )
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.eps < 0:
            raise ValidationError(f"eps must be >= 0, got {self.eps}")
        if not 0 < self.bn_momentum <= 1:
            raise ValidationError(f"bn_momentum must be in (0, 1], got {self.bn_momentum}")
        if not self.bn_epsilon > 0:
            raise ValidationError(f"bn_epsilon must be > 0, got {self.bn_epsilon}")


class ViewNetwork:
    """Linear -> Sigmoid -> BatchNorm block for one view.

    ``linear_only`` is a test hook replacing Sigmoid and BatchNorm with the
    identity, which reduces the whole model to linear GCCA on ``W``-transformed
    views.
    """

    def __init__(self, w, b, gamma, beta, bn_momentum=0.1, bn_epsilon=1e-5,
                 linear_only=False):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.gamma = np.asarray(gamma, dtype=np.float64)
        self.beta = np.asarray(beta, dtype=np.float64)
        self.running_mean = np.zeros(self.out_dim)
        self.running_var = np.ones(self.out_dim)
        self.bn_momentum = bn_momentum
        self.bn_epsilon = bn_epsilon
        self.linear_only = linear_only

    @property
    def in_dim(self) -> int:
        return self.w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]

    def forward(self, x, train: bool, update_running: bool | None = None,
                return_cache: bool = False):
        """Map a (in_dim x batch) matrix to (out_dim x batch).

        Train mode normalizes with batch statistics (batch >= 2 required)
        and, unless ``update_running`` is False, folds them into the running
        statistics; eval mode normalizes with the running statistics.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] != self.in_dim:
            raise ValidationError(f"expected ({self.in_dim}, B) input, got {x.shape}")
        batch = x.shape[1]
        if train and batch < 2:
            raise ValidationError("train-mode forward needs a batch of >= 2")
        if update_running is None:
            update_running = train
        pre = self.w @ x + self.b[:, None]
        if self.linear_only:
            out = pre
            cache = {"x": x, "pre": pre}
            return (out, cache) if return_cache else out
        z = _sigmoid(pre)
        if train:
            mu = z.mean(axis=1)
            var = z.var(axis=1)
            if update_running:
                m = self.bn_momentum
                self.running_mean = (1.0 - m) * self.running_mean + m * mu
                self.running_var = (1.0 - m) * self.running_var + m * var
        else:
            mu = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.bn_epsilon)
        xhat = (z - mu[:, None]) * inv_std[:, None]
        out = self.gamma[:, None] * xhat + self.beta[:, None]
        if not return_cache:
            return out
        cache = {"x": x, "z": z, "xhat": xhat, "inv_std": inv_std, "train": train}
        return out, cache

    def backward(self, cache, grad_out) -> dict[str, np.ndarray]:
        """Parameter gradients for a train-mode forward pass with ``cache``."""
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if self.linear_only:
            dpre = grad_out
            dgamma = np.zeros_like(self.gamma)
            dbeta = np.zeros_like(self.beta)
        else:
            xhat, inv_std, z = cache["xhat"], cache["inv_std"], cache["z"]
            batch = xhat.shape[1]
            dbeta = grad_out.sum(axis=1)
            dgamma = (grad_out * xhat).sum(axis=1)
            dxhat = grad_out * self.gamma[:, None]
            if cache["train"]:
                dz = (inv_std[:, None] / batch) * (
                    batch * dxhat
                    - dxhat.sum(axis=1, keepdims=True)
                    - xhat * (dxhat * xhat).sum(axis=1, keepdims=True)
                )
            else:
                dz = dxhat * inv_std[:, None]
            dpre = dz * z * (1.0 - z)
        return {
            "w": dpre @ cache["x"].T,
            "b": dpre.sum(axis=1),
            "gamma": dgamma,
            "beta": dbeta,
        }

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b, "gamma": self.gamma, "beta": self.beta}

    def copy(self) -> "ViewNetwork":
        dup = ViewNetwork(
            self.w.copy(), self.b.copy(), self.gamma.copy(), self.beta.copy(),
            self.bn_momentum, self.bn_epsilon, self.linear_only,
        )
        dup.running_mean = self.running_mean.copy()
        dup.running_var = self.running_var.copy()
        return dup


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    return out


def init_model(view_dims, hidden_dim: int, rank: int, seed: int,
               bn_momentum: float = 0.1, bn_epsilon: float = 1e-5,
               rng: np.random.Generator | None = None) -> list[ViewNetwork]:
    """Seeded per-view networks: W ~ U(-1/sqrt(d_j), 1/sqrt(d_j)), b=0,
    gamma=1, beta=0, running stats (0, 1)."""
    if hidden_dim < rank:
        raise ValidationError(f"hidden_dim {hidden_dim} must be >= rank {rank}")
    if rng is None:
        rng = np.random.default_rng(seed)
    networks = []
    for d in view_dims:
        bound = 1.0 / np.sqrt(d)
        w = rng.uniform(-bound, bound, size=(hidden_dim, d))
        networks.append(
            ViewNetwork(w, np.zeros(hidden_dim), np.ones(hidden_dim),
                        np.zeros(hidden_dim), bn_momentum, bn_epsilon)
        )
    return networks


def dgcca_loss_and_grad(outputs, rank: int, eps: float = 1e-8):
    """Loss and per-view output gradients of the optimal-G GCCA objective.

    ``outputs`` is a list of (out_dim x batch) matrices. The batch must
    have at least ``rank + 1`` columns. Returns ``(loss, grads)`` where
    ``grads[j]`` is d(loss)/d(outputs[j]).

    The loss is the subproblem's optimal value ``n_views * rank -
    sum(top eigenvalues)``. With ridge ``eps`` this is the exact minimum of
    ``sum_j (||G - U_j^T Y_j||_F^2 + eps ||U_j||_F^2)`` over the orthonormal
    ``G`` and all ``U_j``, so the envelope gradient ``2 (U_j U_j^T Y_j -
    U_j G)`` is its exact total derivative; at ``eps`` = 0 it coincides
    with the plain squared-residual objective.
    """
    outputs = [np.asarray(h, dtype=np.float64) for h in outputs]
    batch = outputs[0].shape[1]
    if batch < rank + 1:
        raise ValidationError(f"batch of {batch} too small for rank {rank} (need >= rank + 1)")
    solution = solve_gcca(outputs, rank=rank, eps=eps)
    loss = len(outputs) * rank - float(solution.eigenvalues.sum())
    # centering projector: outputs enter the objective mean-centered, so the
    # gradient must be centered the same way
    centerer = np.eye(batch) - np.full((batch, batch), 1.0 / batch)
    grads = []
    for j, h in enumerate(outputs):
        y = h - h.mean(axis=1, keepdims=True)
        u = solution.projections[j]
        g_y = 2.0 * (u @ (u.T @ y) - u @ solution.g)
        grads.append(g_y @ centerer)
    return loss, grads


@dataclass
class TrainedDgcca:
    """Trained per-view networks plus the final full-dataset GCCA solution."""

    networks: list[ViewNetwork]
    solution: GccaSolution
    loss_history: np.ndarray
    initial_objective: float
    config: DgccaTrainConfig
    view_names: list[str]
    view_dims: list[int]

    def __post_init__(self):
        self.loss_history = np.asarray(self.loss_history, dtype=np.float64)
        if not np.isfinite(self.loss_history).all():
            raise ValidationError("loss history contains non-finite values")

    def view_index(self, view) -> int:
        if isinstance(view, (int, np.integer)):
            if not 0 <= view < len(self.networks):
                raise ValidationError(f"view index {view} out of range")
            return int(view)
        if view in self.view_names:
            return self.view_names.index(view)
        raise ValidationError(f"unknown view {view!r} (have {self.view_names})")

    def transform_view(self, view, matrix) -> np.ndarray:
        """Eval-mode forward + canonical projection for one view (dims x N)."""
        j = self.view_index(view)
        h = self.networks[j].forward(np.asarray(matrix, dtype=np.float64), train=False)
        return project(self.solution, j, h)


def _dataset_matrices(dataset) -> tuple[list[np.ndarray], list[str]]:
    if isinstance(dataset, DatasetViews):
        return dataset.matrices(), dataset.view_names()
    mats = [np.asarray(v, dtype=np.float64) for v in dataset]
    return mats, [f"view{i}" for i in range(len(mats))]


def train(dataset, config: DgccaTrainConfig) -> TrainedDgcca:
    """Train DGCCA with shuffled seeded minibatches and vanilla SGD.

    ``dataset`` is a DatasetViews or a list of (d_j x N) matrices. Batches
    smaller than ``rank + 1`` at the end of an epoch are dropped to keep
    the subproblem well-posed. ``loss_history`` holds the full-dataset
    eval-mode objective after each epoch; training stops early once that
    objective improves by less than ``early_stop_tol`` over
    ``early_stop_patience`` epochs.
    """
    mats, names = _dataset_matrices(dataset)
    if len(mats) < 2:
        raise ValidationError("DGCCA needs at least two views")
    n = mats[0].shape[1]
    if n < config.batch_size:
        raise ValidationError(f"dataset of {n} utterances smaller than batch size "
                              f"{config.batch_size}")
    rng = np.random.default_rng(config.seed)
    networks = init_model([m.shape[0] for m in mats], config.hidden_dim, config.rank,
                          config.seed, config.bn_momentum, config.bn_epsilon, rng=rng)

    def full_objective():
        outs = [net.forward(m, train=False) for net, m in zip(networks, mats)]
        return solve_gcca(outs, rank=config.rank, eps=config.eps)

    initial = full_objective().objective
    history = []
    solution = None
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            if idx.size < config.rank + 1:
                break
            caches = []
            outputs = []
            for net, m in zip(networks, mats):
                out, cache = net.forward(m[:, idx], train=True, return_cache=True)
                outputs.append(out)
                caches.append(cache)
            loss, grads = dgcca_loss_and_grad(outputs, config.rank, config.eps)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch offset {start} "
                    f"(lr={config.learning_rate}); lower the learning rate"
                )
            for net, cache, grad in zip(networks, caches, grads):
                pgrads = net.backward(cache, grad)
                net.w -= config.learning_rate * pgrads["w"]
                net.b -= config.learning_rate * pgrads["b"]
                net.gamma -= config.learning_rate * pgrads["gamma"]
                net.beta -= config.learning_rate * pgrads["beta"]
        solution = full_objective()
        history.append(solution.objective)
        if not np.isfinite(solution.objective):
            raise TrainingDivergedError(f"non-finite full-dataset objective after epoch {epoch}")
        patience = config.early_stop_patience
        if len(history) > patience:
            if history[-(patience + 1)] - history[-1] < config.early_stop_tol:
                break
    return TrainedDgcca(
        networks=networks,
        solution=solution,
        loss_history=np.asarray(history),
        initial_objective=initial,
        config=config,
        view_names=names,
        view_dims=[m.shape[0] for m in mats],
    )


def standardized_pair_scores(za, zb):
    """Cosine scores between columns of two (rank x N) canonical projections.

    Each dimension (row) is standardized over the N columns first. Columns
    whose standardized vector has zero norm score 0; the count of such
    columns is returned alongside the scores.
    """
    za = np.asarray(za, dtype=np.float64)
    zb = np.asarray(zb, dtype=np.float64)
    if za.shape != zb.shape:
        raise ValidationError(f"projection shapes differ: {za.shape} vs {zb.shape}")

    def standardize(z):
        mu = z.mean(axis=1, keepdims=True)
        sd = z.std(axis=1, keepdims=True)
        sd[sd == 0.0] = 1.0
        return (z - mu) / sd

    sa, sb = standardize(za), standardize(zb)
    na = np.linalg.norm(sa, axis=0)
    nb = np.linalg.norm(sb, axis=0)
    dead = (na == 0.0) | (nb == 0.0)
    na[na == 0.0] = 1.0
    nb[nb == 0.0] = 1.0
    scores = np.einsum("rn,rn->n", sa, sb) / (na * nb)
    scores[dead] = 0.0
    # clip floating-point overshoot just outside [-1, 1]
    np.clip(scores, -1.0, 1.0, out=scores)
    return scores, int(dead.sum())


def per_utterance_scores(trained: TrainedDgcca, dataset, pair):
    """Per-utterance cosine scores between two views in canonical space.

    Returns ``(scores, n_zero_norm)`` with one score in [-1, 1] per
    utterance, in dataset order. Views in ``dataset`` are matched to the
    trained model by name when available, by position otherwise.
    """
    mats, names = _dataset_matrices(dataset)
    by_name = dict(zip(names, mats))

    def matrix_for(j):
        name = trained.view_names[j]
        if name in by_name:
            return by_name[name]
        if j < len(mats):
            return mats[j]
        raise ValidationError(f"dataset provides no data for view {name!r}")

    ia, ib = trained.view_index(pair[0]), trained.view_index(pair[1])
    za = trained.transform_view(ia, matrix_for(ia))
    zb = trained.transform_view(ib, matrix_for(ib))
    return standardized_pair_scores(za, zb)


class DGCCA(BaseEstimator, TransformerMixin):
    """Deep GCCA as a multi-view transformer.

    ``fit`` takes a list of (n_samples, n_features_j) arrays; ``transform``
    returns each view's canonical projection (n_samples, rank).
    """

    def __init__(self, rank: int = 16, hidden_dim: int = 64,
                 learning_rate: float = 1e-6, batch_size: int = 32,
                 epochs: int = 50, eps: float = 1e-8, seed: int = 0,
                 bn_momentum: float = 0.1, bn_epsilon: float = 1e-5,
                 early_stop_tol: float = 1e-6, early_stop_patience: int = 5):
        self.rank = rank
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.eps = eps
        self.seed = seed
        self.bn_momentum = bn_momentum
        self.bn_epsilon = bn_epsilon
        self.early_stop_tol = early_stop_tol
        self.early_stop_patience = early_stop_patience

    def _config(self) -> DgccaTrainConfig:
        return DgccaTrainConfig(
            learning_rate=self.learning_rate, batch_size=self.batch_size,
            epochs=self.epochs, rank=self.rank, eps=self.eps, seed=self.seed,
            hidden_dim=self.hidden_dim, bn_momentum=self.bn_momentum,
            bn_epsilon=self.bn_epsilon, early_stop_tol=self.early_stop_tol,
            early_stop_patience=self.early_stop_patience,
        )

    def fit(self, Xs, y=None):
        from .validation import check_views_list

        mats = check_views_list(Xs)
        self.trained_ = train([m.T for m in mats], self._config())
        self.loss_history_ = self.trained_.loss_history
        self.solution_ = self.trained_.solution
        return self

    def transform(self, Xs) -> list[np.ndarray]:
        from .validation import check_views_list

        if not hasattr(self, "trained_"):
            raise ValidationError("DGCCA instance is not fitted yet")
        mats = check_views_list(Xs)
        return [self.trained_.transform_view(j, m.T).T for j, m in enumerate(mats)]

    def pair_scores(self, Xs, view_a: int, view_b: int):
        """Per-sample cosine scores between two views; see per_utterance_scores."""
        from .validation import check_views_list

        if not hasattr(self, "trained_"):
            raise ValidationError("DGCCA instance is not fitted yet")
        mats = check_views_list(Xs)
        return per_utterance_scores(self.trained_, [m.T for m in mats], (view_a, view_b))


def save_model(path, trained: TrainedDgcca) -> None:
    """Serialize a trained model to a versioned ``.psrm`` archive."""
    payload = {
        "format_version": np.array([MODEL_FORMAT_VERSION], dtype=np.int64),
        "config_json": np.array(json.dumps(dataclasses.asdict(trained.config))),
        "view_names_json": np.array(json.dumps(trained.view_names)),
        "view_dims": np.asarray(trained.view_dims, dtype=np.int64),
        "loss_history": trained.loss_history,
        "initial_objective": np.array([trained.initial_objective]),
        "solution_g": trained.solution.g,
        "solution_eigenvalues": trained.solution.eigenvalues,
        "solution_objective": np.array([trained.solution.objective]),
        "solution_eps": np.array([trained.solution.eps]),
    }
    for j, net in enumerate(trained.networks):
        payload[f"net{j}_w"] = net.w
        payload[f"net{j}_b"] = net.b
        payload[f"net{j}_gamma"] = net.gamma
        payload[f"net{j}_beta"] = net.beta
        payload[f"net{j}_running_mean"] = net.running_mean
        payload[f"net{j}_running_var"] = net.running_var
        payload[f"sol{j}_projection"] = trained.solution.projections[j]
        payload[f"sol{j}_mean"] = trained.solution.means[j]
    # write through a handle so numpy keeps the .psrm extension
    with open(path, "wb") as f:
        np.savez(f, **payload)


def load_model(path) -> TrainedDgcca:
    """Load a ``.psrm`` model archive written by :func:`save_model`."""
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"{path}: not a readable model archive: {exc}") from exc
    with archive:
        if "format_version" not in archive:
            raise ValidationError(f"{path}: missing format_version; not a psr-kit model")
        version = int(archive["format_version"][0])
        if version != MODEL_FORMAT_VERSION:
            raise ValidationError(f"{path}: unsupported model format version {version}")
        config = DgccaTrainConfig(**json.loads(str(archive["config_json"])))
        view_names = json.loads(str(archive["view_names_json"]))
        view_dims = [int(d) for d in archive["view_dims"]]
        networks = []
        projections = []
        means = []
        for j in range(len(view_dims)):
            net = ViewNetwork(
                archive[f"net{j}_w"], archive[f"net{j}_b"],
                archive[f"net{j}_gamma"], archive[f"net{j}_beta"],
                config.bn_momentum, config.bn_epsilon,
            )
            net.running_mean = archive[f"net{j}_running_mean"].copy()
            net.running_var = archive[f"net{j}_running_var"].copy()
            networks.append(net)
            projections.append(archive[f"sol{j}_projection"].copy())
            means.append(archive[f"sol{j}_mean"].copy())
        solution = GccaSolution(
            g=archive["solution_g"].copy(),
            projections=projections,
            eigenvalues=archive["solution_eigenvalues"].copy(),
            objective=float(archive["solution_objective"][0]),
            eps=float(archive["solution_eps"][0]),
            means=means,
            view_names=view_names,
        )
        solution._objective_terms = None
        return TrainedDgcca(
            networks=networks,
            solution=solution,
            loss_history=archive["loss_history"].copy(),
            initial_objective=float(archive["initial_objective"][0]),
            config=config,
            view_names=view_names,
            view_dims=view_dims,
        )
