"""Compare the compiled word kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [repeats]

Times free reduction, seam concatenation, and a piece-ratio scan on
deterministic data through both implementations and prints the speedups.
"""

import random
import sys
import time

from bsw._kernels import pure

try:
    from bsw import _speedups as compiled
except ImportError:
    compiled = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_reduce(impl, data):
    def run():
        for seq in data:
            impl.reduce_ints(seq)
    return run


def bench_concat(impl, pairs):
    def run():
        for a, b in pairs:
            impl.concat_reduced(a, b)
    return run


def bench_pieces(kind):
    # the piece scan exercises common_prefix_len on rotation data
    impl = pure if kind == "pure" else compiled
    rng = random.Random(7)
    word = [rng.choice([1, -1, 2, -2]) for _ in range(4000)]
    word = impl.reduce_ints(word)
    doubled = tuple(word + word)
    n = len(word)

    def run():
        total = 0
        for s in range(0, n, 7):
            total += impl.common_prefix_len(doubled[s:s + n],
                                            doubled[(s + 13) % n:(s + 13) % n + n],
                                            n)
        return total
    return run


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 3
    rng = random.Random(1)
    reduce_data = [[rng.choice([1, -1]) * rng.randint(1, 4)
                    for _ in range(2000)] for _ in range(300)]
    words = [pure.reduce_ints([rng.choice([1, -1]) * rng.randint(1, 4)
                               for _ in range(600)]) for _ in range(400)]
    pairs = [(words[i], words[(i * 7 + 1) % len(words)])
             for i in range(len(words))]

    rows = []
    for label, make in (("reduce 300x2000 letters", bench_reduce),
                        ("concat 400 word pairs", bench_concat)):
        data = reduce_data if "reduce" in label else pairs
        t_pure = timeit(make(pure, data), repeats)
        if compiled is not None:
            t_fast = timeit(make(compiled, data), repeats)
            rows.append((label, t_pure, t_fast))
        else:
            rows.append((label, t_pure, None))
    t_pure = timeit(bench_pieces("pure"), repeats)
    t_fast = timeit(bench_pieces("fast"), repeats) if compiled else None
    rows.append(("prefix scans on 4k-letter rotations", t_pure, t_fast))

    print(f"{'benchmark':40} {'pure':>10} {'compiled':>10} {'speedup':>8}")
    for label, tp, tf in rows:
        if tf is None:
            print(f"{label:40} {tp * 1000:9.1f}ms {'n/a':>10} {'n/a':>8}")
        else:
            print(f"{label:40} {tp * 1000:9.1f}ms {tf * 1000:9.1f}ms "
                  f"{tp / tf:7.1f}x")
    if compiled is None:
        print("compiled extension not built; showing pure timings only")


if __name__ == "__main__":
    main()
