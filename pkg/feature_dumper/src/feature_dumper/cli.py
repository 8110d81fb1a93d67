"""``dump-features`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .dump import (
    DumpJob,
    dump_speech_features,
    dump_text_features,
    read_transcripts,
    write_lockfile,
    write_manifest,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dump-features",
        description="Dump pretrained speech/text model features as PSRF files "
                    "plus a manifest.",
    )
    parser.add_argument("--speech-model", help="model id or local path for audio features")
    parser.add_argument("--text-model", help="model id or local path for text features")
    parser.add_argument("--audio-dir", help="directory of 16-bit PCM WAV files")
    parser.add_argument("--transcripts", help="TSV of utt_id<TAB>text")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--speech-view", default="ssl")
    parser.add_argument("--text-view", default="text")
    parser.add_argument("--layers", default="all",
                        help="'all' or comma-separated hidden-layer indices")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="dump-features: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    if not args.speech_model and not args.text_model:
        build_parser().error("need --speech-model and/or --text-model")
    if args.speech_model and not args.audio_dir:
        build_parser().error("--speech-model requires --audio-dir")
    if args.text_model and not args.transcripts:
        build_parser().error("--text-model requires --transcripts")

    layers = None
    if args.layers != "all":
        layers = [int(part) for part in args.layers.split(",") if part.strip()]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fragments = []
    try:
        if args.speech_model:
            fragments.append(dump_speech_features(DumpJob(
                model_id=args.speech_model, out_dir=out_dir,
                view_name=args.speech_view, audio_dir=Path(args.audio_dir),
                layers=layers, device=args.device,
            )))
        if args.text_model:
            fragments.append(dump_text_features(DumpJob(
                model_id=args.text_model, out_dir=out_dir,
                view_name=args.text_view, transcripts=Path(args.transcripts),
                device=args.device,
            )))
    except (ValueError, OSError) as exc:
        print(f"dump-features: error: {exc}", file=sys.stderr)
        sys.exit(1)

    transcripts = read_transcripts(args.transcripts) if args.transcripts else None
    manifest = write_manifest(out_dir, fragments, transcripts)
    write_lockfile(out_dir, args.speech_model, args.text_model)
    total = len({u for f in fragments for u in f["utterances"]})
    print(f"dumped {total} utterances across {len(fragments)} view(s) -> {manifest}")


if __name__ == "__main__":
    main()
