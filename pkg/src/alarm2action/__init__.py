"""Predict wind-turbine repair actions from SCADA alarm sequences.

The pipeline: ingest and clean raw alarm/response logs, pair each repair
response with the alarms that preceded it, encode documents against a
train-only vocabulary, train a from-scratch (Bi)LSTM classifier, fit a
first-order next-alarm chain, and serve ranked recommendations with a
feedback-driven retraining loop.
"""

from .errors import Alarm2ActionError
from .ingest import (
    AlarmEvent,
    CleaningConfig,
    ResponseEvent,
    clean_text,
    filter_infrequent_responses,
    parse_alarm_log,
    parse_response_log,
    parse_timestamp,
    remove_chattering,
)
from .markov import TransitionModel, fit_transitions, predict_next, sequence_logprob
from .rnn import (
    AdamState,
    ModelConfig,
    ModelParams,
    adam_step,
    backward,
    clip_gradients,
    forward,
    init_adam,
    init_params,
    loss,
    softmax,
)
from .sequencer import (
    DatasetSplit,
    PairedDocument,
    SequencerConfig,
    build_pairs,
    pad_or_truncate,
    split_dataset,
    split_indices,
)
from .synth import (
    CascadeStep,
    FaultType,
    ScenarioSpec,
    ambiguous_scenario,
    generate_corpus,
    learnable_scenario,
    verify_corpus,
)
from .trainer import (
    EvalReport,
    TrainerConfig,
    TrainResult,
    encode_documents,
    evaluate,
    load_model,
    predict_topk,
    save_model,
    train,
)
from .vocab import Vocabulary, build_vocab, encode_document, load_vocab, save_vocab

__version__ = "1.0.0"

__all__ = [
    "Alarm2ActionError",
    "AlarmEvent",
    "CleaningConfig",
    "ResponseEvent",
    "clean_text",
    "filter_infrequent_responses",
    "parse_alarm_log",
    "parse_response_log",
    "parse_timestamp",
    "remove_chattering",
    "TransitionModel",
    "fit_transitions",
    "predict_next",
    "sequence_logprob",
    "AdamState",
    "ModelConfig",
    "ModelParams",
    "adam_step",
    "backward",
    "clip_gradients",
    "forward",
    "init_adam",
    "init_params",
    "loss",
    "softmax",
    "DatasetSplit",
    "PairedDocument",
    "SequencerConfig",
    "build_pairs",
    "pad_or_truncate",
    "split_dataset",
    "split_indices",
    "CascadeStep",
    "FaultType",
    "ScenarioSpec",
    "ambiguous_scenario",
    "generate_corpus",
    "learnable_scenario",
    "verify_corpus",
    "EvalReport",
    "TrainerConfig",
    "TrainResult",
    "encode_documents",
    "evaluate",
    "load_model",
    "predict_topk",
    "save_model",
    "train",
    "Vocabulary",
    "build_vocab",
    "encode_document",
    "load_vocab",
    "save_vocab",
    "__version__",
]
