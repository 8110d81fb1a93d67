"""Single ``psr-kit`` executable wiring the toolkit into a reproducible pipeline.

Subcommands: mel-extract, gcca, dgcca-train, psr, layer-fit, layer-report,
lingdist, validate-manifest. Every tunable can come from a TOML config file
(``--config``, top-level keys or a per-subcommand table) with explicit
flags taking precedence; the fully resolved configuration is echoed into
every output artifact. Exit codes: 0 success, 2 configuration/validation
error, 1 runtime failure. Diagnostics go to stderr; results go to files
and stdout only.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, dgcca, layer_agg, lingdist, psr
from .exceptions import PsrKitError, ValidationError
from .feature_io import (
    FORMAT_VERSION,
    DatasetViews,
    Manifest,
    ViewMatrix,
    load_manifest,
    pool_time,
    read_feature_file,
    write_feature_file,
)
from .gcca import project, solve_gcca
from .mel import MelConfig, extract_mel

SUBCOMMANDS = (
    "mel-extract",
    "gcca",
    "dgcca-train",
    "psr",
    "layer-fit",
    "layer-report",
    "lingdist",
    "validate-manifest",
)


class _Logger:
    def __init__(self, json_logs: bool):
        self.json_logs = json_logs

    def __call__(self, level: str, message: str) -> None:
        if self.json_logs:
            print(json.dumps({"level": level, "message": message}, sort_keys=True),
                  file=sys.stderr)
        else:
            print(f"psr-kit: {level}: {message}", file=sys.stderr)


def _load_config_file(path: str | None, section: str) -> dict:
    """Top-level scalar keys plus the subcommand's table, if present."""
    if path is None:
        return {}
    try:
        with open(path, "rb") as f:
            doc = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    merged = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    table = doc.get(section, {})
    if not isinstance(table, dict):
        raise ValidationError(f"config section [{section}] must be a table")
    merged.update(table)
    return merged


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit flags; rejects unknown config keys."""
    section = args.command
    from_file = _load_config_file(getattr(args, "config", None), section)
    effective = dict(defaults)
    for key, value in from_file.items():
        name = key.replace("-", "_")
        if name not in effective:
            raise ValidationError(f"unknown config key {key!r} for {section}")
        effective[name] = value
    for name in defaults:
        value = getattr(args, name, None)
        if value is not None:
            effective[name] = value
    return effective


def _require(settings: dict, *names: str) -> None:
    for name in names:
        if settings[name] is None:
            flag = "--" + name.replace("_", "-")
            raise ValidationError(f"missing required setting {flag}")


def _write_json(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def _write_csv(path, header: list[str], rows, config: dict | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        if config is not None:
            f.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def emit_plot_data(report, kind: str, path, config: dict | None = None) -> None:
    """Write plot-ready CSV for a loss curve, layer weights, or PSR scores.

    ``report`` must match ``kind``: a sequence of objectives for
    ``loss_curve``, weight_report rows for ``layer_weights``, or a PsrReport
    for ``psr_scores``.
    """
    if kind == "loss_curve":
        values = np.asarray(report, dtype=np.float64)
        if values.ndim != 1:
            raise ValidationError("loss_curve report must be a 1-D objective sequence")
        rows = [(i + 1, float(v)) for i, v in enumerate(values)]
        _write_csv(path, ["epoch", "objective"], rows, config)
    elif kind == "layer_weights":
        if not (isinstance(report, list) and report
                and all(isinstance(r, dict) and {"layer", "weight", "top"} <= set(r)
                        for r in report)):
            raise ValidationError("layer_weights report must be weight_report rows")
        rows = [(r["layer"], r["weight"], int(r["top"])) for r in report]
        _write_csv(path, ["layer", "weight", "top"], rows, config)
    elif kind == "psr_scores":
        if not isinstance(report, psr.PsrReport):
            raise ValidationError("psr_scores report must be a PsrReport")
        utt_ids = report.provenance.get("utt_ids")
        if utt_ids is None or len(utt_ids) != report.n:
            utt_ids = [str(i) for i in range(report.n)]
        rows = [
            (u, float(p), float(s), float(p / s))
            for u, p, s in zip(utt_ids, report.phonetic_scores, report.syntax_scores)
        ]
        _write_csv(path, ["utt_id", "phonetic", "syntax", "ratio"], rows, config)
    else:
        raise ValidationError(f"unknown plot kind {kind!r}")


def _load_layer_weights(source: str, n_layers: int) -> layer_agg.LayerWeights:
    if source == "uniform":
        return layer_agg.LayerWeights.uniform(n_layers)
    path = Path(source)
    if path.suffix == ".psrm":
        with np.load(path, allow_pickle=False) as archive:
            if "layer_logits" not in archive:
                raise ValidationError(f"{path}: model archive contains no layer weights")
            return layer_agg.LayerWeights(archive["layer_logits"])
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read layer weights {path}: {exc}") from exc
    if "logits" not in doc:
        raise ValidationError(f"{path}: layer weights file must contain 'logits'")
    weights = layer_agg.LayerWeights(np.asarray(doc["logits"], dtype=np.float64))
    if n_layers >= 0 and weights.n_layers != n_layers:
        raise ValidationError(
            f"{path}: {weights.n_layers} layer weights for {n_layers}-layer stacks"
        )
    return weights


def _load_view_flexible(manifest: Manifest, name: str, pooling: str,
                        layer_weights_source: str | None) -> ViewMatrix:
    """Like feature_io.load_view but aggregates 3-D layer stacks on the fly
    when a --layer-weights source is supplied."""
    if name not in manifest.views:
        raise ValidationError(f"view {name!r} not declared in manifest")
    utt_ids = manifest.utt_ids_with_view(name)
    columns = []
    weights = None
    dims = None
    for utt_id in utt_ids:
        arr = read_feature_file(manifest.path_for(utt_id, name))
        if arr.ndim == 3:
            if layer_weights_source is None:
                raise ValidationError(
                    f"view {name!r} holds 3-D layer stacks; pass --layer-weights "
                    "(a weights JSON or 'uniform') to aggregate them"
                )
            if weights is None:
                weights = _load_layer_weights(layer_weights_source, arr.shape[0])
            arr = layer_agg.aggregate_layers(arr, weights)
        vec = arr.astype(np.float64) if arr.ndim == 1 else pool_time(arr, pooling)
        if dims is None:
            dims = vec.shape[0]
        elif vec.shape[0] != dims:
            raise ValidationError(
                f"view {name!r}: utterance {utt_id!r} has {vec.shape[0]} dims, expected {dims}"
            )
        columns.append(vec)
    return ViewMatrix(name, np.stack(columns, axis=1), utt_ids)


def _align_flexible(manifest: Manifest, names: list[str], pooling: str,
                    layer_weights_source: str | None) -> DatasetViews:
    from .exceptions import AlignmentError

    loaded = [_load_view_flexible(manifest, n, pooling, layer_weights_source) for n in names]
    shared = set(loaded[0].utt_ids)
    for v in loaded[1:]:
        shared &= set(v.utt_ids)
    if len(shared) < 2:
        raise AlignmentError(f"views {names} share {len(shared)} utterance(s); need >=2")
    order = sorted(shared)
    return DatasetViews([v.subset(order) for v in loaded])


def _dgcca_config(settings: dict) -> dgcca.DgccaTrainConfig:
    return dgcca.DgccaTrainConfig(
        learning_rate=float(settings["lr"]),
        batch_size=int(settings["batch"]),
        epochs=int(settings["epochs"]),
        rank=int(settings["rank"]),
        eps=float(settings["eps"]),
        seed=int(settings["seed"]),
        hidden_dim=int(settings["hidden_dim"]),
        bn_momentum=float(settings["bn_momentum"]),
        bn_epsilon=float(settings["bn_epsilon"]),
    )


# ---------------------------------------------------------------------------
# subcommand implementations


def _run_validate_manifest(args, log) -> int:
    settings = _resolve(args, {"manifest": None})
    _require(settings, "manifest")
    manifest = load_manifest(settings["manifest"])
    n = len(manifest.utterances)
    views = ",".join(manifest.views)
    print(f"manifest OK: views={views} n_utterances={n}")
    return 0


def _run_mel_extract(args, log) -> int:
    defaults = {
        "wav_dir": None, "out_dir": None, "view_name": "mel", "manifest_out": None,
        "sample_rate": 16000, "win_length": 400, "hop_length": 160, "n_fft": 512,
        "n_mels": 80, "fmin": 0.0, "fmax": None, "log_floor": 1e-10,
    }
    settings = _resolve(args, defaults)
    _require(settings, "wav_dir", "out_dir")
    config = MelConfig(
        sample_rate=int(settings["sample_rate"]),
        win_length=int(settings["win_length"]),
        hop_length=int(settings["hop_length"]),
        n_fft=int(settings["n_fft"]),
        n_mels=int(settings["n_mels"]),
        fmin=float(settings["fmin"]),
        fmax=None if settings["fmax"] is None else float(settings["fmax"]),
        log_floor=float(settings["log_floor"]),
    )
    wav_dir = Path(settings["wav_dir"])
    wavs = sorted(wav_dir.glob("*.wav"))
    if not wavs:
        raise ValidationError(f"no .wav files in {wav_dir}")
    out_dir = Path(settings["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    utterances = {}
    for wav in wavs:
        features = extract_mel(wav, config)
        out_path = out_dir / (wav.stem + ".psrf")
        write_feature_file(out_path, features)
        utterances[wav.stem] = {settings["view_name"]: out_path.name}
        log("info", f"extracted {wav.name}: {features.shape[0]} frames")
    if settings["manifest_out"]:
        manifest_path = Path(settings["manifest_out"])
        rel = {
            utt: {settings["view_name"]:
                  str((out_dir / entry[settings["view_name"]]).resolve()
                      .relative_to(manifest_path.resolve().parent))}
            for utt, entry in utterances.items()
        }
        _write_json(manifest_path, {"views": [settings["view_name"]], "utterances": rel})
    print(f"wrote {len(wavs)} feature files to {out_dir}")
    return 0


def _run_gcca(args, log) -> int:
    defaults = {
        "manifest": None, "views": None, "rank": 16, "eps": 1e-8,
        "out": None, "pooling": "mean", "layer_weights": None,
    }
    settings = _resolve(args, defaults)
    _require(settings, "manifest", "views", "out")
    names = [v.strip() for v in str(settings["views"]).split(",") if v.strip()]
    manifest = load_manifest(settings["manifest"])
    dataset = _align_flexible(manifest, names, settings["pooling"], settings["layer_weights"])
    solution = solve_gcca(dataset, rank=int(settings["rank"]), eps=float(settings["eps"]))
    out = Path(settings["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    projection_files = {}
    for j, view in enumerate(dataset.views):
        proj = project(solution, j, view.matrix)
        proj_path = out.with_name(out.stem + f".proj-{view.view_name}.psrf")
        write_feature_file(proj_path, proj.astype(np.float32))
        projection_files[view.view_name] = proj_path.name
    effective = {k: settings[k] for k in ("rank", "eps", "pooling", "views")}
    payload = {
        "views": names,
        "n_utterances": dataset.n_utts,
        "rank": int(settings["rank"]),
        "eps": float(settings["eps"]),
        "eigenvalues": [float(v) for v in solution.eigenvalues],
        "objective": float(solution.objective),
        "utt_ids": dataset.utt_ids,
        "projection_files": projection_files,
        "provenance": {"config": effective, "tool_version": __version__},
    }
    _write_json(out, payload)
    print(f"gcca objective {solution.objective:.6g} -> {out}")
    return 0


_TRAIN_DEFAULTS = {
    "rank": 16, "lr": 1e-6, "batch": 32, "epochs": 50, "seed": 0,
    "eps": 1e-8, "hidden_dim": 64, "bn_momentum": 0.1, "bn_epsilon": 1e-5,
    "pooling": "mean", "layer_weights": None,
}


def _run_dgcca_train(args, log) -> int:
    defaults = {"manifest": None, "views": None, "out": None, "loss_csv": None,
                **_TRAIN_DEFAULTS}
    settings = _resolve(args, defaults)
    _require(settings, "manifest", "views", "out")
    names = [v.strip() for v in str(settings["views"]).split(",") if v.strip()]
    config = _dgcca_config(settings)
    manifest = load_manifest(settings["manifest"])
    dataset = _align_flexible(manifest, names, settings["pooling"], settings["layer_weights"])
    log("info", f"training DGCCA on {dataset.n_utts} utterances, views {names}")
    trained = dgcca.train(dataset, config)
    dgcca.save_model(settings["out"], trained)
    if settings["loss_csv"]:
        effective = {k: settings[k] for k in _TRAIN_DEFAULTS}
        emit_plot_data(trained.loss_history, "loss_curve", settings["loss_csv"], effective)
    print(
        f"trained {len(names)}-view model: objective "
        f"{trained.initial_objective:.6g} -> {trained.loss_history[-1]:.6g} "
        f"({len(trained.loss_history)} epochs) -> {settings['out']}"
    )
    return 0


def _run_psr(args, log) -> int:
    defaults = {
        "manifest": None, "ssl_view": None, "mel_view": None, "text_view": None,
        "out": None, "eps_floor": psr.DEFAULT_EPS_FLOOR, "pairwise_runs": None,
        "scores_csv": None, **_TRAIN_DEFAULTS,
    }
    settings = _resolve(args, defaults)
    _require(settings, "manifest", "ssl_view", "mel_view", "text_view", "out")
    config = _dgcca_config(settings)
    manifest = load_manifest(settings["manifest"])
    names = [settings["ssl_view"], settings["mel_view"], settings["text_view"]]
    dataset = _align_flexible(manifest, names, settings["pooling"], settings["layer_weights"])
    log("info", f"psr pipeline on {dataset.n_utts} utterances")
    report = psr.run_psr_pipeline(
        dataset,
        views=(settings["ssl_view"], settings["mel_view"], settings["text_view"]),
        config=config,
        eps_floor=float(settings["eps_floor"]),
        pairwise_runs=bool(settings["pairwise_runs"]),
    )
    report.provenance["utt_ids"] = dataset.utt_ids
    report.provenance["tool_version"] = __version__
    if report.provenance.get("n_zero_norm"):
        log("warning", f"{report.provenance['n_zero_norm']} zero-norm projections scored as 0")
    out = Path(settings["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out, report.to_dict())
    if settings["scores_csv"]:
        emit_plot_data(report, "psr_scores", settings["scores_csv"],
                       report.provenance["config"])
    print(f"psr_percent {report.psr_percent:.6g} (n={report.n}, "
          f"n_floored={report.n_floored}) -> {out}")
    return 0


def _run_layer_fit(args, log) -> int:
    defaults = {
        "manifest": None, "stack_view": None, "target_view": None, "out": None,
        "steps": 200, "step_size": 1e-2, "rank": 4, "eps": 1e-8, "pooling": "mean",
    }
    settings = _resolve(args, defaults)
    _require(settings, "manifest", "stack_view", "target_view", "out")
    manifest = load_manifest(settings["manifest"])
    target = _load_view_flexible(manifest, settings["target_view"], settings["pooling"], None)
    stack_ids = manifest.utt_ids_with_view(settings["stack_view"])
    shared = sorted(set(stack_ids) & set(target.utt_ids))
    if len(shared) < 2:
        raise ValidationError(
            f"views {settings['stack_view']!r} and {settings['target_view']!r} "
            f"share {len(shared)} utterance(s); need >=2"
        )
    target = target.subset(shared)
    stacks = []
    for utt_id in shared:
        arr = read_feature_file(manifest.path_for(utt_id, settings["stack_view"]))
        if arr.ndim != 3:
            raise ValidationError(
                f"view {settings['stack_view']!r}, utterance {utt_id!r}: "
                f"expected a 3-D layer stack, got {arr.ndim}-D"
            )
        stacks.append(arr)
    fit_config = layer_agg.LayerFitConfig(
        step_size=float(settings["step_size"]),
        steps=int(settings["steps"]),
        rank=int(settings["rank"]),
        eps=float(settings["eps"]),
    )
    weights, history = layer_agg.fit_layer_weights(stacks, target, fit_config)
    effective = {k: settings[k] for k in
                 ("stack_view", "target_view", "steps", "step_size", "rank", "eps", "pooling")}
    payload = {
        "logits": [float(v) for v in weights.raw],
        "normalized": [float(v) for v in weights.normalized],
        "objective_history": [float(v) for v in history],
        "n_utterances": len(shared),
        "provenance": {"config": effective, "tool_version": __version__},
    }
    _write_json(settings["out"], payload)
    print(f"fitted {weights.n_layers} layer weights "
          f"(objective {history[0]:.6g} -> {history[-1]:.6g}) -> {settings['out']}")
    return 0


def _parse_labels(labels: str | None, n_layers: int) -> list[str]:
    if labels is None:
        return [str(i) for i in range(n_layers)]
    if ".." in labels:
        lo, hi = labels.split("..", 1)
        return [str(i) for i in range(int(lo), int(hi) + 1)]
    return [part.strip() for part in labels.split(",") if part.strip()]


def _run_layer_report(args, log) -> int:
    defaults = {"weights": None, "labels": None, "out": None}
    settings = _resolve(args, defaults)
    _require(settings, "weights", "out")
    weights = _load_layer_weights(str(settings["weights"]), -1)
    labels = _parse_labels(settings["labels"], weights.n_layers)
    rows = layer_agg.weight_report(weights, labels)
    emit_plot_data(rows, "layer_weights", settings["out"],
                   {"weights": str(settings["weights"]), "labels": labels})
    print(f"wrote {len(rows)} layer weight rows -> {settings['out']}")
    return 0


def _run_lingdist(args, log) -> int:
    defaults = {"lists": None, "metric": "ldn", "out": None, "fold_case": None}
    settings = _resolve(args, defaults)
    _require(settings, "lists", "out")
    paths = settings["lists"]
    if isinstance(paths, str):
        paths = [p.strip() for p in paths.split(",")]
    if len(paths) != 2:
        raise ValidationError("--lists requires exactly two word-list files")
    list_a = lingdist.read_wordlist_tsv(paths[0])
    list_b = lingdist.read_wordlist_tsv(paths[1])
    if settings["fold_case"]:
        list_a, list_b = list_a.folded(), list_b.folded()
    metric = str(settings["metric"])
    effective = {"lists": [str(p) for p in paths], "metric": metric,
                 "fold_case": bool(settings["fold_case"])}
    if metric == "ldn":
        shared = sorted(set(list_a.entries) & set(list_b.entries))
        if not shared:
            raise ValidationError("word lists share no concepts")
        rows = [
            (c, list_a.entries[c], list_b.entries[c],
             lingdist.ldn(list_a.entries[c], list_b.entries[c]))
            for c in shared
        ]
        _write_csv(settings["out"], ["concept_id", "word_a", "word_b", "ldn"], rows,
                   effective)
    elif metric == "ldnd":
        value = lingdist.ldnd(list_a, list_b)
        _write_csv(settings["out"], ["list_a", "list_b", "ldnd"],
                   [(list_a.language_id, list_b.language_id, value)], effective)
    else:
        raise ValidationError(f"unknown metric {metric!r} (expected ldn or ldnd)")
    print(f"wrote {metric} distances -> {settings['out']}")
    return 0


_RUNNERS = {
    "validate-manifest": _run_validate_manifest,
    "mel-extract": _run_mel_extract,
    "gcca": _run_gcca,
    "dgcca-train": _run_dgcca_train,
    "psr": _run_psr,
    "layer-fit": _run_layer_fit,
    "layer-report": _run_layer_report,
    "lingdist": _run_lingdist,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psr-kit",
        description="Probe speech representations for phonetic vs. syntactic content.",
    )
    parser.add_argument(
        "--version", action="version",
        version=f"psr-kit {__version__} (feature-format {FORMAT_VERSION}, "
                f"model-format {dgcca.MODEL_FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="TOML config file; flags override its values")
        p.add_argument("--json-logs", action="store_true",
                       help="emit machine-readable JSON diagnostics on stderr")
        return p

    p = add("validate-manifest", "check a manifest and its referenced files")
    p.add_argument("--manifest")

    p = add("mel-extract", "compute log-mel features for a directory of WAV files")
    p.add_argument("--wav-dir")
    p.add_argument("--out-dir")
    p.add_argument("--view-name")
    p.add_argument("--manifest-out")
    p.add_argument("--sample-rate", type=int)
    p.add_argument("--win-length", type=int)
    p.add_argument("--hop-length", type=int)
    p.add_argument("--n-fft", type=int)
    p.add_argument("--n-mels", type=int)
    p.add_argument("--fmin", type=float)
    p.add_argument("--fmax", type=float)
    p.add_argument("--log-floor", type=float)

    p = add("gcca", "closed-form linear GCCA over manifest views")
    p.add_argument("--manifest")
    p.add_argument("--views", help="comma-separated view names")
    p.add_argument("--rank", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--pooling")
    p.add_argument("--layer-weights")
    p.add_argument("--out")

    p = add("dgcca-train", "train a deep GCCA model over manifest views")
    p.add_argument("--manifest")
    p.add_argument("--views", help="comma-separated view names")
    p.add_argument("--rank", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--bn-momentum", type=float)
    p.add_argument("--bn-epsilon", type=float)
    p.add_argument("--pooling")
    p.add_argument("--layer-weights")
    p.add_argument("--loss-csv")
    p.add_argument("--out")

    p = add("psr", "train the three-view pipeline and report the phonetic-syntax ratio")
    p.add_argument("--manifest")
    p.add_argument("--ssl-view")
    p.add_argument("--mel-view")
    p.add_argument("--text-view")
    p.add_argument("--eps-floor", type=float)
    p.add_argument("--pairwise-runs", action="store_const", const=True, default=None,
                   help="train two 2-view models instead of one joint 3-view model")
    p.add_argument("--rank", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--bn-momentum", type=float)
    p.add_argument("--bn-epsilon", type=float)
    p.add_argument("--pooling")
    p.add_argument("--layer-weights")
    p.add_argument("--scores-csv")
    p.add_argument("--out")

    p = add("layer-fit", "fit layer-aggregation weights against a target view")
    p.add_argument("--manifest")
    p.add_argument("--stack-view")
    p.add_argument("--target-view")
    p.add_argument("--steps", type=int)
    p.add_argument("--step-size", type=float)
    p.add_argument("--rank", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--pooling")
    p.add_argument("--out")

    p = add("layer-report", "tabulate normalized layer weights")
    p.add_argument("--weights", help="weights JSON from layer-fit, or a model archive")
    p.add_argument("--labels", help="comma-separated labels or a range like 0..11")
    p.add_argument("--out")

    p = add("lingdist", "Levenshtein-based distances between two word lists")
    p.add_argument("--lists", nargs=2, metavar=("A", "B"))
    p.add_argument("--metric", choices=["ldn", "ldnd"])
    p.add_argument("--fold-case", action="store_const", const=True, default=None)
    p.add_argument("--out")

    return parser


def dispatch(argv=None) -> int:
    """Parse arguments and run one subcommand, mapping errors to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    log = _Logger(bool(getattr(args, "json_logs", False)))
    try:
        return _RUNNERS[args.command](args, log)
    except ValidationError as exc:
        log("error", str(exc))
        return 2
    except (PsrKitError, OSError) as exc:
        log("error", str(exc))
        return 1


def main(argv=None) -> None:
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
