"""psr-kit: probe the phonetic vs. syntactic composition of speech representations.

The toolkit aligns multiple feature views of the same utterances (learned
speech features, log-mel acoustics, text embeddings), correlates them with
linear or deep generalized CCA, and reports the Phonetic-Syntax Ratio plus
supporting layer-weight and linguistic-distance analyses.
"""

__version__ = "0.1.0"

from .dgcca import DGCCA, DgccaTrainConfig, TrainedDgcca, train
from .feature_io import (
    DatasetViews,
    Manifest,
    ViewMatrix,
    align_views,
    load_manifest,
    load_view,
    pool_time,
    read_feature_file,
    write_feature_file,
)
from .gcca import GCCA, GccaSolution, gcca_objective, project, solve_gcca
from .layer_agg import LayerWeights, aggregate_layers, fit_layer_weights, weight_report
from .lingdist import WordList, ldn, ldnd, levenshtein
from .mel import MelConfig, extract_mel, mel_filterbank, read_wav, stft_power
from .psr import PsrReport, compute_psr, run_psr_pipeline

__all__ = [
    "DGCCA",
    "DatasetViews",
    "DgccaTrainConfig",
    "GCCA",
    "GccaSolution",
    "LayerWeights",
    "Manifest",
    "MelConfig",
    "PsrReport",
    "TrainedDgcca",
    "ViewMatrix",
    "WordList",
    "aggregate_layers",
    "align_views",
    "compute_psr",
    "extract_mel",
    "fit_layer_weights",
    "gcca_objective",
    "ldn",
    "ldnd",
    "levenshtein",
    "load_manifest",
    "load_view",
    "mel_filterbank",
    "pool_time",
    "project",
    "read_feature_file",
    "read_wav",
    "run_psr_pipeline",
    "solve_gcca",
    "stft_power",
    "train",
    "weight_report",
    "write_feature_file",
]
