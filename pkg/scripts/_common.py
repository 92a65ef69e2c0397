"""Shared corpus setup for the experiment scripts."""
import numpy as np

from ctcfuse.core import decode_text, encode_text
from ctcfuse.metrics import evaluate
from ctcfuse.synth import SynthConfig, default_alphabet, random_texts, s2s_style_errors, synth_corpus


def noisy_corpus(n_lines, temperature, seed=0):
    """Random lines, their noisy matrices, and corrupted teacher references."""
    alpha = default_alphabet()
    texts = random_texts(n_lines, np.random.default_rng(seed))
    corpus = synth_corpus(texts, alpha, SynthConfig(noise_temperature=temperature, rng_seed=seed + 1))
    rng = np.random.default_rng(seed + 2)
    teacher = [encode_text(alpha, s2s_style_errors(t, rng)) for t in texts]
    return alpha, texts, [m for m, _ in corpus], teacher


def corpus_cer(alpha, texts, results):
    return evaluate([decode_text(alpha, r.best.prefix) for r in results], texts).cer
