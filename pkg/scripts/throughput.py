"""Lines per second and prefix-score work for best path and several beam settings."""
import argparse

from _common import noisy_corpus

from ctcfuse.beam import DecodeConfig
from ctcfuse.runner import DecodeJob, format_bench, run_bench


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lines", type=int, default=50)
    p.add_argument("--temperature", type=float, default=1.3)
    p.add_argument("--widths", type=int, nargs="+", default=[1, 5, 10])
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    alpha, texts, matrices, teacher = noisy_corpus(args.lines, args.temperature, args.seed)
    jobs = [("bestpath", DecodeJob(alpha, "bestpath"))]
    for n in args.widths:
        jobs.append((f"beam{n}", DecodeJob(alpha, "beam", DecodeConfig(n_beams=n), teacher)))
        jobs.append((f"beam{n}-nopre", DecodeJob(alpha, "beam", DecodeConfig(n_beams=n, pre_beam=False), teacher)))
    print(format_bench(run_bench(jobs, matrices, texts)))


if __name__ == "__main__":
    main()
