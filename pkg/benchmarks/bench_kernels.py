#!/usr/bin/env python3
"""Compare the compiled and pure-numpy skipgram kernels.

Usage: python benchmarks/bench_kernels.py [--tweets 2000] [--dim 100] [--epochs 2]

Both kernels walk the identical decision stream, so the tokens/sec ratio is
apples-to-apples; expect one to two orders of magnitude between them.
"""

import argparse
import time

import numpy as np

from tweetsift.embedding import EmbeddingConfig, train
from tweetsift.embedding.trainer import KERNEL_BACKEND, get_kernel


def synthetic_token_lines(tweets: int, seed: int = 0) -> list[list[str]]:
    rng = np.random.default_rng(seed)
    vocabulary = [f"word{i:03d}" for i in range(300)]
    weights = 1.0 / (np.arange(300) + 2.0)
    weights /= weights.sum()
    lines = []
    for _ in range(tweets):
        length = int(rng.integers(8, 15))
        lines.append([vocabulary[i] for i in rng.choice(300, size=length, p=weights)])
    return lines


def run(backend: str, lines, config) -> tuple[float, float]:
    start = time.perf_counter()
    train(lines, config, backend=backend)
    elapsed = time.perf_counter() - start
    tokens = sum(len(line) for line in lines) * config.epochs
    return elapsed, tokens / elapsed


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tweets", type=int, default=2000)
    parser.add_argument("--dim", type=int, default=100)
    parser.add_argument("--epochs", type=int, default=2)
    args = parser.parse_args()

    lines = synthetic_token_lines(args.tweets)
    config = EmbeddingConfig(
        dim=args.dim,
        epochs=args.epochs,
        min_count=2,
        bucket_count=50_000,
        subsample_threshold=0.0,
        seed=3,
    )

    print(f"corpus: {args.tweets} tweets, dim {args.dim}, {args.epochs} epochs")
    print(f"default backend this build: {KERNEL_BACKEND}")

    results = {}
    for backend in ("python", "compiled"):
        try:
            get_kernel(backend)
        except RuntimeError as exc:
            print(f"{backend:>9}: unavailable ({exc})")
            continue
        elapsed, rate = run(backend, lines, config)
        results[backend] = rate
        print(f"{backend:>9}: {elapsed:7.2f}s  {rate/1000:9.1f}k tokens/s")

    if len(results) == 2:
        print(f"  speedup: {results['compiled'] / results['python']:.1f}x")


if __name__ == "__main__":
    main()
