"""Run pretrained speech/text models over a corpus and dump PSRF features.

Speech models dump every hidden layer per utterance as an (L x T x D)
stack, leaving layer selection/aggregation to the consuming toolkit; text
models dump one D-vector per utterance, the mean of the final layer's
content-token states (special marker tokens excluded, so a single-token
transcript maps to exactly that token's vector). Everything runs in
inference mode on CPU by default and is deterministic for pinned model
versions.
"""

from __future__ import annotations

import json
import logging
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .psrf import write_feature

logger = logging.getLogger("feature_dumper")


@dataclass
class DumpJob:
    """One dump run: model id, corpus location, layer selection, output dir."""

    model_id: str
    out_dir: Path
    view_name: str
    audio_dir: Path | None = None
    transcripts: Path | None = None
    layers: list[int] | None = None  # None = all hidden layers
    device: str = "cpu"
    extra: dict = field(default_factory=dict)


def read_wav_mono(path) -> tuple[np.ndarray, int]:
    """16-bit PCM WAV to float samples in [-1, 1), averaged to mono."""
    with wave.open(str(path), "rb") as f:
        if f.getsampwidth() != 2:
            raise ValueError(f"{path}: only 16-bit PCM supported")
        rate = f.getframerate()
        data = np.frombuffer(f.readframes(f.getnframes()), dtype="<i2")
        data = data.astype(np.float32) / 32768.0
        channels = f.getnchannels()
    if channels > 1:
        data = data.reshape(-1, channels).mean(axis=1)
    return data, rate


def read_transcripts(path) -> dict[str, str]:
    """TSV of ``utt_id<TAB>text`` lines."""
    entries: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t", 1)
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'utt_id<TAB>text'")
        entries[parts[0].strip()] = parts[1].strip()
    return entries


def _load_speech_model(job: DumpJob):
    from transformers import AutoModel

    model = AutoModel.from_pretrained(job.model_id)
    model.to(job.device)
    model.eval()
    extractor = None
    try:
        from transformers import AutoFeatureExtractor

        extractor = AutoFeatureExtractor.from_pretrained(job.model_id)
    except Exception:  # no preprocessor shipped with the model; use raw waveform
        logger.info("no feature extractor for %s; feeding raw waveform", job.model_id)
    return model, extractor


def dump_speech_features(job: DumpJob) -> dict:
    """Dump all hidden layers per utterance as (L x T x D) PSRF stacks.

    Returns a manifest fragment ``{"view": ..., "n_layers": L, "dims": D,
    "utterances": {utt_id: relative_path}}``. Files that fail to decode are
    skipped and logged.
    """
    if job.audio_dir is None:
        raise ValueError("speech dump needs an audio directory")
    model, extractor = _load_speech_model(job)
    wavs = sorted(Path(job.audio_dir).glob("*.wav"))
    if not wavs:
        raise ValueError(f"no .wav files in {job.audio_dir}")
    view_dir = Path(job.out_dir) / job.view_name
    view_dir.mkdir(parents=True, exist_ok=True)
    utterances: dict[str, str] = {}
    n_layers = dims = None
    for path in wavs:
        try:
            samples, rate = read_wav_mono(path)
        except (ValueError, wave.Error, EOFError) as exc:
            logger.warning("skipping %s: %s", path.name, exc)
            continue
        if extractor is not None:
            inputs = extractor(samples, sampling_rate=rate, return_tensors="pt")
            values = inputs["input_values"].to(job.device)
        else:
            values = torch.from_numpy(samples)[None, :].to(job.device)
        with torch.inference_mode():
            outputs = model(values, output_hidden_states=True)
        hidden = outputs.hidden_states  # tuple of (1, T, D), embeddings first
        stack = torch.stack(hidden, dim=0)[:, 0].cpu().numpy()
        if job.layers is not None:
            stack = stack[job.layers]
        if n_layers is None:
            n_layers, dims = stack.shape[0], stack.shape[2]
        rel = f"{job.view_name}/{path.stem}.psrf"
        write_feature(Path(job.out_dir) / rel, stack.astype(np.float32))
        utterances[path.stem] = rel
        logger.info("dumped %s: layers=%d frames=%d dims=%d",
                    path.stem, stack.shape[0], stack.shape[1], stack.shape[2])
    if not utterances:
        raise ValueError("every audio file failed to decode")
    return {"view": job.view_name, "n_layers": n_layers, "dims": dims,
            "utterances": utterances}


def dump_text_features(job: DumpJob) -> dict:
    """Dump one pooled vector per transcript: mean over the final layer's
    content tokens. Empty transcripts are skipped and logged."""
    from transformers import AutoModel, AutoTokenizer

    if job.transcripts is None:
        raise ValueError("text dump needs a transcript TSV")
    tokenizer = AutoTokenizer.from_pretrained(job.model_id)
    model = AutoModel.from_pretrained(job.model_id)
    model.to(job.device)
    model.eval()
    entries = read_transcripts(job.transcripts)
    view_dir = Path(job.out_dir) / job.view_name
    view_dir.mkdir(parents=True, exist_ok=True)
    utterances: dict[str, str] = {}
    dims = None
    for utt_id in sorted(entries):
        text = entries[utt_id]
        if not text:
            logger.warning("skipping %s: empty transcript", utt_id)
            continue
        encoded = tokenizer(text, return_tensors="pt",
                            return_special_tokens_mask=True)
        special = encoded.pop("special_tokens_mask")
        encoded = {k: v.to(job.device) for k, v in encoded.items()}
        with torch.inference_mode():
            outputs = model(**encoded)
        states = outputs.last_hidden_state[0]
        content = (special[0] == 0)
        if not bool(content.any()):
            logger.warning("skipping %s: no content tokens", utt_id)
            continue
        vector = states[content].mean(dim=0).cpu().numpy().astype(np.float32)
        if dims is None:
            dims = vector.shape[0]
        rel = f"{job.view_name}/{utt_id}.psrf"
        write_feature(Path(job.out_dir) / rel, vector)
        utterances[utt_id] = rel
    if not utterances:
        raise ValueError("no usable transcripts")
    return {"view": job.view_name, "dims": dims, "utterances": utterances}


def write_manifest(out_dir, fragments: list[dict],
                   transcripts: dict[str, str] | None = None) -> Path:
    """Combine fragments into a manifest consumable by the analysis toolkit."""
    views = [f["view"] for f in fragments]
    if len(set(views)) != len(views):
        raise ValueError(f"duplicate view names in fragments: {views}")
    utterances: dict[str, dict] = {}
    for fragment in fragments:
        for utt_id, rel in fragment["utterances"].items():
            utterances.setdefault(utt_id, {})[fragment["view"]] = rel
    if transcripts:
        for utt_id, text in transcripts.items():
            if utt_id in utterances and text:
                utterances[utt_id]["transcript"] = text
    manifest_path = Path(out_dir) / "manifest.json"
    manifest_path.write_text(
        json.dumps({"views": views, "utterances": utterances},
                   indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return manifest_path


def write_lockfile(out_dir, speech_model: str | None, text_model: str | None) -> Path:
    """Pin the model identifiers and library versions next to the dump."""
    import transformers

    lock = {
        "speech_model": speech_model,
        "text_model": text_model,
        "torch": torch.__version__,
        "transformers": transformers.__version__,
    }
    path = Path(out_dir) / "models.lock.json"
    path.write_text(json.dumps(lock, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
