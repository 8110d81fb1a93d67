"""feature-dumper: export pretrained-model hidden states as PSRF feature files."""

__version__ = "0.1.0"

from .dump import (
    DumpJob,
    dump_speech_features,
    dump_text_features,
    read_transcripts,
    write_lockfile,
    write_manifest,
)
from .psrf import read_feature, write_feature

__all__ = [
    "DumpJob",
    "dump_speech_features",
    "dump_text_features",
    "read_feature",
    "read_transcripts",
    "write_feature",
    "write_lockfile",
    "write_manifest",
]
