"""Feature-file format, manifest handling, pooling, and view alignment.

Feature files ("PSRF") are a minimal little-endian binary container:

    magic ``PSRF`` (4 bytes) | version u16 (=1) | dtype u8 (=1, float32)
    | ndim u8 (1..3) | ndim x u32 shape | row-major float32 payload

Feature tensors are plain ``numpy`` arrays; writers coerce to float32 and
readers hand back exactly what was stored. All solver arithmetic elsewhere
in the toolkit runs in float64.

A manifest is a JSON document mapping utterance ids to per-view file paths
(relative to the manifest's directory), with an optional transcript per
utterance:

    {"views": ["ssl", "mel"],
     "utterances": {"utt1": {"ssl": "ssl/utt1.psrf",
                             "mel": "mel/utt1.psrf",
                             "transcript": "hello"}}}
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    AlignmentError,
    BadMagicError,
    FeatureFormatError,
    ManifestError,
    NonFiniteValueError,
    TruncatedPayloadError,
    UnsupportedVersionError,
    ValidationError,
)

MAGIC = b"PSRF"
FORMAT_VERSION = 1
DTYPE_FLOAT32 = 1

_HEADER = struct.Struct("<4sHBB")


def write_feature_file(path, tensor) -> None:
    """Write a 1-3 dimensional real tensor to ``path`` in PSRF format."""
    arr = np.asarray(tensor)
    if arr.ndim < 1 or arr.ndim > 3:
        raise ValidationError(f"feature tensor must be 1-3 dimensional, got {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise ValidationError(f"feature tensor has an empty dimension: {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteValueError("refusing to write non-finite feature values")
    data = np.ascontiguousarray(arr, dtype="<f4")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, DTYPE_FLOAT32, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(data.tobytes())


def read_feature_file(path) -> np.ndarray:
    """Read a PSRF feature file back into a float32 array."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise BadMagicError(f"{path}: too short to be a feature file")
    magic, version, dtype_code, ndim = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported format version {version}")
    if dtype_code != DTYPE_FLOAT32:
        raise UnsupportedVersionError(f"{path}: unsupported dtype code {dtype_code}")
    if not 1 <= ndim <= 3:
        raise FeatureFormatError(f"{path}: ndim {ndim} outside 1..3")
    offset = _HEADER.size
    if len(blob) < offset + 4 * ndim:
        raise TruncatedPayloadError(f"{path}: header truncated")
    shape = struct.unpack_from(f"<{ndim}I", blob, offset)
    offset += 4 * ndim
    if any(d < 1 for d in shape):
        raise FeatureFormatError(f"{path}: zero-sized dimension in shape {shape}")
    count = int(np.prod(shape))
    expected = offset + 4 * count
    if len(blob) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(blob) - offset} bytes, shape {shape} needs {4 * count}"
        )
    if len(blob) > expected:
        raise FeatureFormatError(f"{path}: {len(blob) - expected} trailing bytes")
    arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(shape)
    if not np.isfinite(arr).all():
        raise NonFiniteValueError(f"{path}: payload contains non-finite values")
    return arr


@dataclass
class Manifest:
    """Parsed manifest: view names plus per-utterance file paths."""

    views: list[str]
    utterances: dict[str, dict[str, str]]
    base_dir: Path = field(default_factory=Path)

    def path_for(self, utt_id: str, view: str) -> Path:
        return self.base_dir / self.utterances[utt_id][view]

    def transcript(self, utt_id: str) -> str | None:
        return self.utterances[utt_id].get("transcript")

    def utt_ids_with_view(self, view: str) -> list[str]:
        return sorted(u for u, entry in self.utterances.items() if view in entry)


def load_manifest(path) -> Manifest:
    """Load and validate a manifest JSON file.

    Checks the schema, uniqueness of view names, and that every referenced
    feature file exists.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: cannot parse manifest: {exc}") from exc
    if not isinstance(doc, dict) or "views" not in doc or "utterances" not in doc:
        raise ManifestError(f"{path}: manifest must contain 'views' and 'utterances'")
    views = doc["views"]
    if not isinstance(views, list) or not all(isinstance(v, str) for v in views):
        raise ManifestError(f"{path}: 'views' must be a list of strings")
    if len(set(views)) != len(views):
        raise ManifestError(f"{path}: duplicate view names in {views}")
    if "transcript" in views:
        raise ManifestError(f"{path}: 'transcript' is reserved and cannot be a view name")
    utterances = doc["utterances"]
    if not isinstance(utterances, dict) or not utterances:
        raise ManifestError(f"{path}: 'utterances' must be a non-empty object")
    base = path.parent
    for utt_id, entry in utterances.items():
        if not isinstance(entry, dict):
            raise ManifestError(f"{path}: utterance {utt_id!r} entry must be an object")
        for key, value in entry.items():
            if key == "transcript":
                continue
            if key not in views:
                raise ManifestError(
                    f"{path}: utterance {utt_id!r} references undeclared view {key!r}"
                )
            ref = base / value
            if not ref.is_file():
                raise ManifestError(f"{path}: missing feature file {ref}")
    return Manifest(views=list(views), utterances=utterances, base_dir=base)


def pool_time(seq, method: str = "mean") -> np.ndarray:
    """Pool a (frames x dims) sequence to a single dims-vector."""
    arr = np.asarray(seq, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValidationError(f"pool_time expects a non-empty T x D matrix, got {arr.shape}")
    if method != "mean":
        raise ValidationError(f"unknown pooling method {method!r}")
    return arr.mean(axis=0)


@dataclass
class ViewMatrix:
    """One view's utterance-level matrix, dims (rows) by utterances (columns)."""

    view_name: str
    matrix: np.ndarray
    utt_ids: list[str]

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ValidationError(f"view {self.view_name!r}: matrix must be 2-D")
        if self.matrix.shape[1] != len(self.utt_ids):
            raise ValidationError(
                f"view {self.view_name!r}: {self.matrix.shape[1]} columns "
                f"vs {len(self.utt_ids)} utterance ids"
            )
        if len(set(self.utt_ids)) != len(self.utt_ids):
            raise ValidationError(f"view {self.view_name!r}: duplicate utterance ids")
        if self.utt_ids != sorted(self.utt_ids):
            raise ValidationError(f"view {self.view_name!r}: utterance ids not sorted")
        if not np.isfinite(self.matrix).all():
            raise ValidationError(f"view {self.view_name!r}: non-finite values")

    @property
    def dims(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_utts(self) -> int:
        return self.matrix.shape[1]

    def subset(self, utt_ids: list[str]) -> "ViewMatrix":
        index = {u: i for i, u in enumerate(self.utt_ids)}
        cols = [index[u] for u in utt_ids]
        return ViewMatrix(self.view_name, self.matrix[:, cols], list(utt_ids))


@dataclass
class DatasetViews:
    """Two or more views over an identical, identically ordered utterance set."""

    views: list[ViewMatrix]

    def __post_init__(self):
        if len(self.views) < 2:
            raise ValidationError("DatasetViews needs at least two views")
        ids = self.views[0].utt_ids
        for v in self.views[1:]:
            if v.utt_ids != ids:
                raise ValidationError(
                    f"view {v.view_name!r} utterance ids differ from {self.views[0].view_name!r}"
                )

    @property
    def utt_ids(self) -> list[str]:
        return self.views[0].utt_ids

    @property
    def n_utts(self) -> int:
        return self.views[0].n_utts

    def view_names(self) -> list[str]:
        return [v.view_name for v in self.views]

    def matrices(self) -> list[np.ndarray]:
        return [v.matrix for v in self.views]

    def view(self, name: str) -> ViewMatrix:
        for v in self.views:
            if v.view_name == name:
                return v
        raise ValidationError(f"no view named {name!r}")

    def index_of(self, name: str) -> int:
        for i, v in enumerate(self.views):
            if v.view_name == name:
                return i
        raise ValidationError(f"no view named {name!r}")


def load_view(manifest: Manifest, view_name: str, pooling: str = "mean") -> ViewMatrix:
    """Load one view from a manifest, pooling frame sequences per utterance.

    1-D tensors are used directly as the utterance vector; 2-D (frames x
    dims) tensors are pooled over time; 3-D layer stacks are rejected, the
    caller must aggregate layers first.
    """
    if view_name not in manifest.views:
        raise ManifestError(f"view {view_name!r} not declared in manifest")
    utt_ids = manifest.utt_ids_with_view(view_name)
    if not utt_ids:
        raise ManifestError(f"no utterances reference view {view_name!r}")
    columns = []
    dims = None
    for utt_id in utt_ids:
        arr = read_feature_file(manifest.path_for(utt_id, view_name))
        if arr.ndim == 1:
            vec = arr.astype(np.float64)
        elif arr.ndim == 2:
            vec = pool_time(arr, pooling)
        else:
            raise ValidationError(
                f"view {view_name!r}, utterance {utt_id!r}: 3-D layer stack; "
                "apply layer aggregation before loading as a view"
            )
        if dims is None:
            dims = vec.shape[0]
        elif vec.shape[0] != dims:
            raise ValidationError(
                f"view {view_name!r}: utterance {utt_id!r} has {vec.shape[0]} dims, "
                f"expected {dims}"
            )
        columns.append(vec)
    return ViewMatrix(view_name, np.stack(columns, axis=1), utt_ids)


def align_views(
    manifest: Manifest, view_names: list[str], pooling: str = "mean"
) -> DatasetViews:
    """Load several views and restrict them to the shared utterance set.

    Only utterance ids present in every requested view are kept, in
    identical sorted order across views.
    """
    if len(view_names) < 2:
        raise ValidationError("align_views needs at least two view names")
    loaded = [load_view(manifest, name, pooling) for name in view_names]
    shared = set(loaded[0].utt_ids)
    for v in loaded[1:]:
        shared &= set(v.utt_ids)
    if not shared:
        raise AlignmentError(f"views {view_names} share no utterances")
    if len(shared) < 2:
        raise AlignmentError(
            f"views {view_names} share only {len(shared)} utterance(s); need >=2"
        )
    order = sorted(shared)
    return DatasetViews([v.subset(order) for v in loaded])
