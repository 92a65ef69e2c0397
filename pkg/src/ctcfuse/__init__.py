"""Hybrid CTC / sequence-decoder beam search for text-line recognition."""
from .beam import DecodeConfig, DecodeResult, Hypothesis, beam_decode, combine_pre, decode
from .core import Alphabet, ConfidenceMatrix, UnknownCharacter, decode_text, encode_text, log_sum_exp
from .ctc import (
    best_path_decode,
    collapse,
    ctc_full_log_prob,
    ctc_neg_log_likelihood,
    prefix_eos_cost,
    prefix_extend,
    prefix_state_init,
)
from .metrics import cer, edit_distance, evaluate, wer
from .scorers import NgramModel, TeacherScorer, UniformScorer, ngram_train
from .synth import SynthConfig, synth_corpus, synth_matrix

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "ConfidenceMatrix", "DecodeConfig", "DecodeResult", "Hypothesis", "NgramModel",
    "SynthConfig", "TeacherScorer", "UniformScorer", "UnknownCharacter", "beam_decode",
    "best_path_decode", "cer", "collapse", "combine_pre", "ctc_full_log_prob", "ctc_neg_log_likelihood",
    "decode", "decode_text", "edit_distance", "encode_text", "evaluate", "log_sum_exp", "ngram_train",
    "prefix_eos_cost", "prefix_extend", "prefix_state_init", "synth_corpus", "synth_matrix", "wer",
]
