"""CER of best path, teacher-only and hybrid decoding across noise temperatures."""
import argparse

from _common import corpus_cer, noisy_corpus

from ctcfuse.beam import DecodeConfig
from ctcfuse.runner import DecodeJob, decode_corpus


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lines", type=int, default=100)
    p.add_argument("--temperatures", type=float, nargs="+", default=[0.0, 0.5, 1.0, 1.3, 1.6, 2.0])
    p.add_argument("--beams", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    print(f"{'temp':>5} {'bestpath':>9} {'teacher':>9} {'hybrid':>9}")
    for temp in args.temperatures:
        alpha, texts, matrices, teacher = noisy_corpus(args.lines, temp, args.seed)
        row = [corpus_cer(alpha, texts, decode_corpus(DecodeJob(alpha, "bestpath"), matrices)[0])]
        for lc in (0.0, 0.3):
            job = DecodeJob(alpha, "beam", DecodeConfig(lambda_ctc=lc, n_beams=args.beams), teacher)
            row.append(corpus_cer(alpha, texts, decode_corpus(job, matrices)[0]))
        print(f"{temp:5.2f} " + " ".join(f"{100 * c:8.2f}%" for c in row))


if __name__ == "__main__":
    main()
