"""Sentence-level hierarchical attention classifier over precomputed
sentence embeddings, with exact manual backpropagation, a low-resource
training protocol, and attention-based sentence saliency."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    CorruptionError,
    DataError,
    ExportError,
    FormatError,
    HbmError,
    IntegrityError,
    MetricError,
    NonFiniteError,
    ShapeError,
    TrainingError,
)
from .metrics import ClassWeights, auc, class_weights, mann_whitney_u, weighted_ce
from .model import (
    AttentionRecord,
    ForwardTrace,
    Gradients,
    LayerParams,
    ModelConfig,
    ModelParams,
    backward,
    bert_att,
    encode,
    ffn_block,
    forward,
    init_params,
    logits,
    multi_head,
    pool,
)
from .optim import AdamState, adam_init, adam_step
from .rng import Rng
from .saliency import (
    SaliencyReport,
    bundle_dict,
    explain,
    export_bundle,
    read_bundle,
    saliency_scores,
    select_salient,
)
from .storage import (
    Checkpoint,
    Document,
    EmbeddedDataset,
    load_checkpoint,
    pad_to_m,
    read_dataset,
    save_checkpoint,
    write_dataset,
)
from .trainer import (
    CellResult,
    EpochRecord,
    ExperimentResult,
    SplitSpec,
    TrainConfig,
    predict,
    run_experiment,
    subsample,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
