"""Hybrid decoding CER as a function of beam width, with and without an n-gram LM."""
import argparse

import numpy as np
from _common import corpus_cer, noisy_corpus

from ctcfuse.beam import DecodeConfig
from ctcfuse.runner import DecodeJob, decode_corpus
from ctcfuse.scorers import ngram_train
from ctcfuse.synth import random_texts


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lines", type=int, default=100)
    p.add_argument("--temperature", type=float, default=1.3)
    p.add_argument("--widths", type=int, nargs="+", default=[1, 2, 5, 10, 20])
    p.add_argument("--lambda-ctc", type=float, default=0.3)
    p.add_argument("--lambda-lm", type=float, default=0.5)
    p.add_argument("--lm-lines", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    alpha, texts, matrices, teacher = noisy_corpus(args.lines, args.temperature, args.seed)
    lm = ngram_train(random_texts(args.lm_lines, np.random.default_rng(args.seed + 99)), alpha)
    print(f"{'beams':>5} {'no LM':>9} {'with LM':>9}")
    for n in args.widths:
        row = []
        for model, weight in ((None, 0.0), (lm, args.lambda_lm)):
            cfg = DecodeConfig(lambda_ctc=args.lambda_ctc, lambda_lm=weight, n_beams=n)
            row.append(corpus_cer(alpha, texts, decode_corpus(DecodeJob(alpha, "beam", cfg, teacher, lm=model), matrices)[0]))
        print(f"{n:5d} " + " ".join(f"{100 * c:8.2f}%" for c in row))


if __name__ == "__main__":
    main()
