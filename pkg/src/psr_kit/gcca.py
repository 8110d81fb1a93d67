"""Closed-form linear generalized CCA over two or more views.

Given views ``Y_j`` (dims x utterances, mean-centered internally), the
solver finds a shared representation ``G`` (rank x utterances, orthonormal
rows) and per-view projections ``U_j`` minimizing

    sum_j || G - U_j^T Y_j ||_F^2   subject to  G G^T = I.

For fixed ``G`` the optimal ``U_j`` is the (ridge) least-squares solution
``(Y_j Y_j^T + eps I)^{-1} Y_j G^T``; substituting it back shows the optimal
``G`` rows are the top eigenvectors of ``M = sum_j Y_j^T (Y_j Y_j^T +
eps I)^{-1} Y_j`` and that the objective equals ``J * rank - sum(top
eigenvalues)`` up to the ridge term. Eigenvalues of ``M`` live in
``[0, n_views]``.

This module is both a usable analysis tool and the per-batch subproblem
solver (and correctness oracle) for the deep variant in ``dgcca``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import SolverError, ValidationError
from .feature_io import DatasetViews
from .validation import check_views_list

ORTHONORMALITY_TOL = 1e-6


@dataclass
class GccaSolution:
    """Result of one GCCA solve.

    ``g`` is rank x n_utts with orthonormal rows; ``projections[j]`` maps
    view ``j`` (centered by ``means[j]``) into the shared space;
    ``objective_terms[j]`` is that view's squared residual.
    """

    g: np.ndarray
    projections: list[np.ndarray]
    eigenvalues: np.ndarray
    objective: float
    eps: float
    means: list[np.ndarray]
    view_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        r = self.g.shape[0]
        gram_err = np.linalg.norm(self.g @ self.g.T - np.eye(r))
        if gram_err > ORTHONORMALITY_TOL:
            raise SolverError(f"G rows not orthonormal: ||GG^T - I||_F = {gram_err:.3e}")
        if np.any(np.diff(self.eigenvalues) > 1e-10):
            raise SolverError("eigenvalues not sorted descending")
        j = len(self.projections)
        if np.any(self.eigenvalues < -1e-8) or np.any(self.eigenvalues > j + 1e-8):
            raise SolverError(f"eigenvalues outside [0, {j}]: {self.eigenvalues}")

    @property
    def rank(self) -> int:
        return self.g.shape[0]

    @property
    def n_views(self) -> int:
        return len(self.projections)

    @property
    def objective_terms(self) -> np.ndarray:
        return self._objective_terms

    def __repr__(self):
        return (
            f"GccaSolution(rank={self.rank}, n_views={self.n_views}, "
            f"objective={self.objective:.6g})"
        )


def _as_matrices(views) -> tuple[list[np.ndarray], list[str]]:
    if isinstance(views, DatasetViews):
        return views.matrices(), views.view_names()
    mats = [np.asarray(v, dtype=np.float64) for v in views]
    return mats, [f"view{i}" for i in range(len(mats))]


def solve_gcca(views, rank: int, eps: float = 1e-8) -> GccaSolution:
    """Solve linear GCCA for ``views`` (DatasetViews or list of d_j x N arrays).

    Requires ``rank <= min(N - 1, min_j d_j)``. ``eps`` is a ridge added to
    each view's Gram matrix; it must be positive whenever a Gram matrix is
    singular (e.g. rank-deficient features).
    """
    mats, names = _as_matrices(views)
    if len(mats) < 2:
        raise ValidationError("solve_gcca needs at least two views")
    if eps < 0:
        raise ValidationError(f"eps must be >= 0, got {eps}")
    n = mats[0].shape[1]
    for name, y in zip(names, mats):
        if y.ndim != 2:
            raise ValidationError(f"{name}: expected 2-D matrix")
        if y.shape[1] != n:
            raise ValidationError(f"{name}: {y.shape[1]} columns, expected {n}")
        if not np.isfinite(y).all():
            raise ValidationError(f"{name}: non-finite values")
    max_rank = min(n - 1, min(y.shape[0] for y in mats))
    if not 1 <= rank <= max_rank:
        raise ValidationError(
            f"rank {rank} outside [1, {max_rank}] for N={n}, "
            f"dims={[y.shape[0] for y in mats]}"
        )

    means = [y.mean(axis=1, keepdims=True) for y in mats]
    centered = [y - m for y, m in zip(mats, means)]

    factors = []
    m_total = np.zeros((n, n))
    for name, y in zip(names, centered):
        gram = y @ y.T + eps * np.eye(y.shape[0])
        try:
            factor = scipy.linalg.cho_factor(gram, lower=True)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                f"{name}: Gram matrix singular; use eps > 0 for rank-deficient views"
            ) from exc
        factors.append(factor)
        m_total += y.T @ scipy.linalg.cho_solve(factor, y)
    m_total = 0.5 * (m_total + m_total.T)

    eigvals, eigvecs = scipy.linalg.eigh(m_total)
    top = eigvals[::-1][:rank].copy()
    g = eigvecs[:, ::-1][:, :rank].T.copy()
    # sign convention: largest-magnitude entry of each row made positive
    for i in range(rank):
        if g[i, np.argmax(np.abs(g[i]))] < 0:
            g[i] = -g[i]

    projections = []
    terms = np.empty(len(centered))
    for j, (factor, y) in enumerate(zip(factors, centered)):
        u = scipy.linalg.cho_solve(factor, y @ g.T)
        projections.append(u)
        terms[j] = np.sum((g - u.T @ y) ** 2)

    solution = GccaSolution(
        g=g,
        projections=projections,
        eigenvalues=top,
        objective=float(terms.sum()),
        eps=eps,
        means=[m.ravel() for m in means],
        view_names=names,
    )
    solution._objective_terms = terms
    return solution


def project(solution: GccaSolution, view_index: int, y) -> np.ndarray:
    """Project raw view data into the shared space: ``U_j^T (Y - mean_j)``."""
    y = np.asarray(y, dtype=np.float64)
    u = solution.projections[view_index]
    mean = solution.means[view_index]
    if y.ndim != 2 or y.shape[0] != u.shape[0]:
        raise ValidationError(
            f"view {view_index}: expected {u.shape[0]} rows, got shape {y.shape}"
        )
    return u.T @ (y - mean[:, None])


def gcca_objective(g, projected_views) -> float:
    """Sum of squared Frobenius residuals between ``g`` and each projection."""
    g = np.asarray(g, dtype=np.float64)
    total = 0.0
    for j, p in enumerate(projected_views):
        p = np.asarray(p, dtype=np.float64)
        if p.shape != g.shape:
            raise ValidationError(f"projection {j} shape {p.shape} != G shape {g.shape}")
        total += float(np.sum((g - p) ** 2))
    return total


class GCCA(BaseEstimator, TransformerMixin):
    """Generalized CCA as a multi-view transformer.

    ``fit`` takes a list of (n_samples, n_features_j) arrays sharing sample
    order; ``transform`` maps each view into the shared canonical space.

    Parameters
    ----------
    rank : dimensionality of the shared representation.
    eps : ridge regularizer on each view's Gram matrix.
    """

    def __init__(self, rank: int = 16, eps: float = 1e-8):
        self.rank = rank
        self.eps = eps

    def fit(self, Xs, y=None):
        mats = check_views_list(Xs)
        self.solution_ = solve_gcca([m.T for m in mats], rank=self.rank, eps=self.eps)
        self.eigenvalues_ = self.solution_.eigenvalues
        self.objective_ = self.solution_.objective
        self.n_views_ = self.solution_.n_views
        return self

    def transform(self, Xs) -> list[np.ndarray]:
        if not hasattr(self, "solution_"):
            raise ValidationError("GCCA instance is not fitted yet")
        mats = check_views_list(Xs)
        if len(mats) != self.n_views_:
            raise ValidationError(f"expected {self.n_views_} views, got {len(mats)}")
        return [project(self.solution_, j, m.T).T for j, m in enumerate(mats)]

    def shared_representation(self) -> np.ndarray:
        """The fitted shared representation, samples first (n_samples, rank)."""
        if not hasattr(self, "solution_"):
            raise ValidationError("GCCA instance is not fitted yet")
        return self.solution_.g.T
