"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import random
import time

import numpy as np

from kgrec import _pykernels

try:
    from kgrec import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workloads():
    rnd = random.Random(0)
    word = lambda n: "".join(rnd.choice("abcdefghij") for _ in range(n))  # noqa: E731
    pairs = [(word(rnd.randint(5, 20)), word(rnd.randint(5, 20))) for _ in range(20_000)]
    titles = [word(rnd.randint(6, 18)) for _ in range(1500)]

    rng = np.random.default_rng(0)
    n, vocab = 2000, 5000
    indptr = np.zeros(n + 1, dtype=np.int64)
    idx, data = [], []
    for i in range(n):
        cols = np.sort(rng.choice(vocab, size=int(rng.integers(5, 40)), replace=False))
        idx.append(cols)
        data.append(rng.normal(size=len(cols)))
        indptr[i + 1] = indptr[i] + len(cols)
    x = (indptr, np.concatenate(idx).astype(np.int64), np.concatenate(data))
    q = (indptr[:51].copy(), x[1][: indptr[50]].copy(), x[2][: indptr[50]].copy())
    dense = rng.normal(size=(n, 50))

    E = rng.normal(size=(3000, 50))
    E /= np.linalg.norm(E, axis=1, keepdims=True)
    R = rng.normal(size=(40, 50))
    batch = [rng.integers(0, m, size=512) for m in (3000, 40, 3000, 3000, 3000)]

    def sgd(k):
        e, r = E.copy(), R.copy()
        for _ in range(20):
            k.transe_sgd_step(e, r, *batch, 0.01, 1.0, True)

    return {
        "levenshtein (20k pairs)": lambda k: [k.levenshtein(a, b) for a, b in pairs],
        "title_match_pairs (1500 titles)": lambda k: k.title_match_pairs(titles, 0.2),
        "sparse_cosine_rows (50 x 2000)": lambda k: k.sparse_cosine_rows(*q, *x, vocab),
        "dense_cosine_rows (50 x 2000, d=50)": lambda k: k.dense_cosine_rows(dense[:50].copy(), dense),
        "transe_sgd_step (20 x 512 triples)": sgd,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = [("python", _pykernels)] + ([("cython", _kernels)] if _kernels is not None else [])
    print(f"{'kernel':40s}" + "".join(f"{name:>12s}" for name, _ in backends) + ("     speedup" if len(backends) == 2 else ""))
    for label, fn in workloads().items():
        times = [best_of(lambda k=k: fn(k), args.repeat) for _, k in backends]
        row = f"{label:40s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
