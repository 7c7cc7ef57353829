"""Compare the compiled and pure-numpy counting backends on a realistic load.

Runs the same fit + transform workload under each registered backend and
prints wall-clock times plus the speedup ratio, after verifying that both
backends produce bit-identical feature matrices.

Usage: python3 benchmarks/bench_kernels.py [--docs N] [--len N] [--repeat N]
"""

import argparse
import random
import time

import numpy as np

from isagram import kernels, vectorize
from isagram.corpus import Corpus, Document


def build_corpus(n_docs: int, doc_len: int) -> Corpus:
    rng = random.Random(2718)
    return Corpus(
        [Document(rng.randbytes(doc_len), None, str(i)) for i in range(n_docs)]
    )


def run_workload(corpus: Corpus) -> np.ndarray:
    schema = vectorize.fit_tfidf(corpus, "byte")
    return vectorize.transform_matrix(schema, corpus.documents)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=400)
    parser.add_argument("--len", type=int, default=200, dest="doc_len")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    corpus = build_corpus(args.docs, args.doc_len)
    results: dict[str, tuple[float, np.ndarray]] = {}
    for backend in kernels.BACKENDS:
        kernels.use_backend(backend)
        run_workload(corpus)  # warm-up: JIT compilation and cache effects
        best = float("inf")
        matrix = None
        for _ in range(args.repeat):
            start = time.perf_counter()
            matrix = run_workload(corpus)
            best = min(best, time.perf_counter() - start)
        results[backend] = (best, matrix)
        print(f"{backend:>6}: {best:8.3f}s  ({args.docs} docs x {args.doc_len} bytes)")

    names = list(results)
    if len(names) == 2:
        (ta, ma), (tb, mb) = results[names[0]], results[names[1]]
        identical = np.array_equal(ma, mb)
        print(f"bit-identical outputs: {identical}")
        slow, fast = max(ta, tb), min(ta, tb)
        winner = names[0] if ta <= tb else names[1]
        print(f"speedup: {slow / fast:.2f}x in favor of {winner}")
        if not identical:
            raise SystemExit("backend outputs diverged")
    kernels.use_backend(kernels.default_backend())


if __name__ == "__main__":
    main()
