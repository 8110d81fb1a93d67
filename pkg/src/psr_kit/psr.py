"""Phonetic-Syntax Ratio: the headline metric and its three-view pipeline.

Given per-utterance phonetic scores (learned features vs. acoustics) and
syntax scores (learned features vs. text embeddings), the ratio is

    psr_percent = (mean_i(phonetic_i / syntax_i) - 1) * 100

A value of 0 means balanced phonetic and syntactic content; positive means
phonetically dominated. Both score vectors are clamped below at a small
floor before dividing: near-zero or negative syntax scores would otherwise
explode or flip the ratio, and excessive clamping is surfaced via the
``n_floored`` count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dgcca
from .exceptions import ValidationError
from .feature_io import DatasetViews, Manifest, align_views

DEFAULT_EPS_FLOOR = 1e-3


@dataclass
class PsrReport:
    """Aggregate ratio plus the clamped per-utterance score vectors."""

    psr_percent: float
    phonetic_scores: np.ndarray
    syntax_scores: np.ndarray
    n_floored: int
    eps_floor: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.phonetic_scores = np.asarray(self.phonetic_scores, dtype=np.float64)
        self.syntax_scores = np.asarray(self.syntax_scores, dtype=np.float64)
        if self.phonetic_scores.shape != self.syntax_scores.shape:
            raise ValidationError("phonetic and syntax score vectors differ in length")
        expected = (np.mean(self.phonetic_scores / self.syntax_scores) - 1.0) * 100.0
        if abs(expected - self.psr_percent) > 1e-9:
            raise ValidationError(
                f"psr_percent {self.psr_percent!r} inconsistent with stored scores "
                f"(recomputed {expected!r})"
            )

    @property
    def n(self) -> int:
        return int(self.phonetic_scores.shape[0])

    def to_dict(self) -> dict:
        return {
            "psr_percent": float(self.psr_percent),
            "n": self.n,
            "n_floored": int(self.n_floored),
            "scores": {
                "phonetic": [float(v) for v in self.phonetic_scores],
                "syntax": [float(v) for v in self.syntax_scores],
            },
            "provenance": self.provenance,
        }


def compute_psr(phonetic, syntax, eps_floor: float = DEFAULT_EPS_FLOOR,
                provenance: dict | None = None) -> PsrReport:
    """Clamp both score vectors below at ``eps_floor`` and aggregate them."""
    phon = np.asarray(phonetic, dtype=np.float64)
    syn = np.asarray(syntax, dtype=np.float64)
    if phon.ndim != 1 or syn.ndim != 1:
        raise ValidationError("score vectors must be 1-D")
    if phon.shape != syn.shape:
        raise ValidationError(f"score lengths differ: {phon.shape[0]} vs {syn.shape[0]}")
    if phon.shape[0] == 0:
        raise ValidationError("cannot compute PSR of zero utterances")
    if not eps_floor > 0:
        raise ValidationError(f"eps_floor must be positive, got {eps_floor}")
    n_floored = int((phon < eps_floor).sum() + (syn < eps_floor).sum())
    phon_c = np.maximum(phon, eps_floor)
    syn_c = np.maximum(syn, eps_floor)
    psr_percent = float((np.mean(phon_c / syn_c) - 1.0) * 100.0)
    return PsrReport(
        psr_percent=psr_percent,
        phonetic_scores=phon_c,
        syntax_scores=syn_c,
        n_floored=n_floored,
        eps_floor=eps_floor,
        provenance=provenance or {},
    )


def run_psr_pipeline(
    manifest_or_views,
    views: tuple[str, str, str],
    config: dgcca.DgccaTrainConfig | None = None,
    eps_floor: float = DEFAULT_EPS_FLOOR,
    pairwise_runs: bool = False,
) -> PsrReport:
    """Full three-view pipeline: align, train DGCCA, score, aggregate.

    ``views`` names the (learned, acoustic, text) views in that order. By
    default one joint three-view model is trained and both score pairs are
    read from it; with ``pairwise_runs`` two separate two-view models are
    trained instead (sensitivity check).
    """
    config = config or dgcca.DgccaTrainConfig()
    ssl_view, mel_view, text_view = views
    if isinstance(manifest_or_views, Manifest):
        dataset = align_views(manifest_or_views, [ssl_view, mel_view, text_view])
    elif isinstance(manifest_or_views, DatasetViews):
        dataset = manifest_or_views
    else:
        raise ValidationError("run_psr_pipeline expects a Manifest or DatasetViews")
    for name in (ssl_view, mel_view, text_view):
        dataset.index_of(name)

    if pairwise_runs:
        pair_phon = DatasetViews([dataset.view(ssl_view), dataset.view(mel_view)])
        pair_syn = DatasetViews([dataset.view(ssl_view), dataset.view(text_view)])
        trained_phon = dgcca.train(pair_phon, config)
        trained_syn = dgcca.train(pair_syn, config)
        phon, zero_phon = dgcca.per_utterance_scores(trained_phon, pair_phon,
                                                     (ssl_view, mel_view))
        syn, zero_syn = dgcca.per_utterance_scores(trained_syn, pair_syn,
                                                   (ssl_view, text_view))
        final_objective = {"phonetic": float(trained_phon.loss_history[-1]),
                           "syntax": float(trained_syn.loss_history[-1])}
    else:
        trained = dgcca.train(dataset, config)
        phon, zero_phon = dgcca.per_utterance_scores(trained, dataset,
                                                     (ssl_view, mel_view))
        syn, zero_syn = dgcca.per_utterance_scores(trained, dataset,
                                                   (ssl_view, text_view))
        final_objective = float(trained.loss_history[-1])

    provenance = {
        "views": {"ssl": ssl_view, "mel": mel_view, "text": text_view},
        "n_utterances": dataset.n_utts,
        "pairwise_runs": pairwise_runs,
        "eps_floor": eps_floor,
        "n_zero_norm": int(zero_phon + zero_syn),
        "final_dgcca_objective": final_objective,
        "config": {
            "learning_rate": config.learning_rate,
            "batch_size": config.batch_size,
            "epochs": config.epochs,
            "rank": config.rank,
            "eps": config.eps,
            "seed": config.seed,
            "hidden_dim": config.hidden_dim,
            "bn_momentum": config.bn_momentum,
            "bn_epsilon": config.bn_epsilon,
            "early_stop_tol": config.early_stop_tol,
            "early_stop_patience": config.early_stop_patience,
        },
    }
    return compute_psr(phon, syn, eps_floor=eps_floor, provenance=provenance)
