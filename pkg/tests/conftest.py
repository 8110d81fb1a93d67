"""Shared fixtures: synthetic manifests, WAV writing, and latent-view builders."""

import json
import wave
from pathlib import Path

import numpy as np
import pytest

from psr_kit.feature_io import write_feature_file


def write_manifest(root: Path, view_tensors: dict, transcripts: dict | None = None) -> Path:
    """Write PSRF files plus a manifest under ``root``.

    ``view_tensors`` maps view name -> {utt_id -> tensor}. Returns the
    manifest path.
    """
    root = Path(root)
    utterances: dict[str, dict] = {}
    for view, tensors in view_tensors.items():
        view_dir = root / view
        view_dir.mkdir(parents=True, exist_ok=True)
        for utt_id, tensor in tensors.items():
            rel = f"{view}/{utt_id}.psrf"
            write_feature_file(root / rel, tensor)
            utterances.setdefault(utt_id, {})[view] = rel
    if transcripts:
        for utt_id, text in transcripts.items():
            utterances.setdefault(utt_id, {})["transcript"] = text
    manifest_path = root / "manifest.json"
    manifest_path.write_text(
        json.dumps({"views": list(view_tensors), "utterances": utterances}, indent=2),
        encoding="utf-8",
    )
    return manifest_path


def write_wav(path, samples, sample_rate=16000, channels=1):
    """Write int16 samples (1-D, interleaved if multi-channel) as a PCM WAV."""
    samples = np.asarray(samples, dtype="<i2")
    with wave.open(str(path), "wb") as f:
        f.setnchannels(channels)
        f.setsampwidth(2)
        f.setframerate(sample_rate)
        f.writeframes(samples.tobytes())
    return path


def shared_latent_views(rng, n_views=3, n=500, latent_dim=4, dims=(10, 12, 14),
                        noise=0.01):
    """Views Y_j = A_j G* + noise sharing one latent; returns (views, latent)."""
    latent = rng.standard_normal((latent_dim, n))
    views = []
    for j in range(n_views):
        mixing = rng.standard_normal((dims[j], latent_dim))
        views.append(mixing @ latent + noise * rng.standard_normal((dims[j], n)))
    return views, latent


def mean_pairwise_dim_corr(projections):
    """Mean Pearson correlation per canonical dimension over all view pairs."""
    corrs = []
    m = len(projections)
    for a in range(m):
        for b in range(a + 1, m):
            za, zb = projections[a], projections[b]
            za = za - za.mean(axis=1, keepdims=True)
            zb = zb - zb.mean(axis=1, keepdims=True)
            for dim in range(za.shape[0]):
                denom = np.linalg.norm(za[dim]) * np.linalg.norm(zb[dim])
                corrs.append(float(za[dim] @ zb[dim] / denom) if denom > 0 else 0.0)
    return float(np.mean(corrs))


def mixture_views(rng, n=96, dims=12, alpha=0.5, noise=0.05):
    """Learned-feature stand-in blending the other two views directly.

    The acoustic view is P, the text view is S, and the first view is
    alpha * P + (1 - alpha) * S + noise, so alpha dials its phonetic share.
    """
    p = rng.standard_normal((dims, n))
    s = rng.standard_normal((dims, n))
    ssl = alpha * p + (1.0 - alpha) * s + noise * rng.standard_normal((dims, n))
    return ssl, p, s


@pytest.fixture
def rng():
    return np.random.default_rng(42)
