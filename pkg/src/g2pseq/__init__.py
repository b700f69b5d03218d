"""Grapheme-to-phoneme conversion with a from-scratch attentional
encoder-decoder: lexicon handling, training, decoding, and evaluation."""

from .attention import (
    AttentionParams,
    AttentionTrace,
    alignment_scores,
    attention_weights,
    context_vector,
)
from .decoding import DecodeResult, beam_decode, default_max_len, greedy_decode
from .lexicon import (
    EOS_ID,
    PAD_ID,
    RESERVED_TOKENS,
    SOS_ID,
    UNK_ID,
    DatasetSplit,
    Lexicon,
    LexiconEntry,
    LexiconParseError,
    Vocabulary,
    build_vocabs,
    encode_entry,
    encode_word,
    load_lexicon,
    parse_lexicon,
    split_dataset,
    split_sizes,
)
from .metrics import EvalReport, ScoreCounts, edit_distance, evaluate, phoneme_error_rate
from .model import (
    EncoderStates,
    G2PModel,
    ModelParams,
    StepOutput,
    decode_step,
    encode,
    forward_teacher_forced,
    init_params,
    sequence_log_prob,
)
from .modelio import ModelFormatError, load_model, save_model
from .nn import GruCellParams, affine, grad_check, gru_cell, log_softmax, softmax
from .training import (
    AdamState,
    EpochRecord,
    TrainConfig,
    TrainHistory,
    adam_step,
    backward,
    batch_loss,
    cross_entropy,
    init_adam_state,
    train,
)

__version__ = "0.1.0"
