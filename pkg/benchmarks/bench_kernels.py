"""Time the compiled kernels against the numpy reference.

    python3 benchmarks/bench_kernels.py [--repeat 200]

Prints one line per kernel with the per-call time of each backend and the
speedup. Inputs match the shapes the learner and generator actually use.
"""
import argparse
import timeit

import numpy as np

from code_lab import _kernels_py

try:
    from code_lab import _kernels
except ImportError:
    _kernels = None


def cases(rng, E=44, H=100, T=40):
    W = rng.uniform(-0.1, 0.1, (4 * H, E + 3 + H))
    b = rng.uniform(-0.1, 0.1, 4 * H)
    X = rng.standard_normal((T, E + 3))
    hc0 = np.zeros(2 * H)
    Wd = rng.uniform(-0.1, 0.1, (H, H))
    bd = np.zeros(H)
    x = rng.standard_normal(H)

    def seq_fwd(k):
        return lambda: k.lstm_seq_forward(W, b, X, hc0)

    def seq_bwd(k):
        hs, hc, caches = k.lstm_seq_forward(W, b, X, hc0)
        dHs = np.ones_like(hs)
        dhc = np.zeros(2 * H)
        dW, db = np.zeros_like(W), np.zeros_like(b)
        return lambda: k.lstm_seq_backward(W, caches, dHs, dhc, dW, db)

    def step_fwd(k):
        return lambda: k.lstm_step_forward(W, b, X[0], hc0)

    def dense_fwd(k):
        return lambda: k.dense_forward(Wd, bd, x, True)

    def chain(k):
        return lambda: k.chain_hit_counts(4, 14, True)

    return [("lstm_seq_forward T=%d" % T, seq_fwd), ("lstm_seq_backward T=%d" % T, seq_bwd),
            ("lstm_step_forward", step_fwd), ("dense_forward tanh", dense_fwd),
            ("chain_hit_counts budget=14", chain)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = [("numpy", _kernels_py)] + ([("cython", _kernels)] if _kernels is not None else [])
    if _kernels is None:
        print("compiled extension not built; timing the numpy backend only")
    print(f"{'kernel':<28}" + "".join(f"{name + ' (us)':>14}" for name, _ in backends) + f"{'speedup':>10}")
    for label, make in cases(rng):
        times = []
        for _, mod in backends:
            fn = make(mod)
            n = max(1, args.repeat // 20) if label.startswith("chain") else args.repeat
            times.append(min(timeit.repeat(fn, number=n, repeat=3)) / n * 1e6)
        speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
        print(f"{label:<28}" + "".join(f"{t:>14.1f}" for t in times) + speed)


if __name__ == "__main__":
    main()
