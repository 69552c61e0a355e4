"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--family 2 --theta 0.7 --rho 20 --repeat 3]

Both backends get identical inputs; outputs are checked for equality before
the timings are reported.
"""
import argparse
import time

import numpy as np

from fraclos import make_domain, sample_poisson_nodes
from fraclos._backend import available_backends


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads(domain, rho, seed):
    rng = np.random.default_rng(seed)
    h = domain.y_max
    pts = rng.uniform(-h, h, size=(20_000, 2))
    xs, ys = pts[:, 0].copy(), pts[:, 1].copy()
    segs = rng.uniform(-h, h, size=(2_000, 4))
    nodes = sample_poisson_nodes(domain, rho, seed).points
    nx, ny = nodes[:, 0].copy(), nodes[:, 1].copy()

    def contains(k):
        return lambda: np.asarray(k.contains_many(xs, ys, 64)).tobytes()

    def los(k):
        return lambda: [k.line_of_sight(a, b, c, d, 64) for a, b, c, d in segs.tolist()]

    def edges(k):
        return lambda: k.neighbor_edges(nx, ny, 1.0, 64)[0].tobytes()

    def trial(k):
        return lambda: k.trial(nx, ny, 1.0, 64)

    return [
        ("contains x20000", contains),
        ("line_of_sight x2000", los),
        (f"neighbor_edges N={len(nodes)}", edges),
        (f"trial N={len(nodes)}", trial),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", type=int, default=2, choices=(2, 3))
    ap.add_argument("--theta", type=float, default=0.7)
    ap.add_argument("--rho", type=float, default=20.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    domain = make_domain(args.family, args.theta)
    backends = available_backends()
    kernels = {name: domain.make_kernel(name) for name in backends}
    print(f"F{args.family}({args.theta:g}), rho={args.rho:g}, backends: {', '.join(backends)}")
    print(f"{'workload':<28}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, make in workloads(domain, args.rho, args.seed):
        times = {}
        outputs = {}
        for name, k in kernels.items():
            times[name], outputs[name] = best_of(make(k), args.repeat)
        if len(set(map(repr, outputs.values()))) != 1:
            raise SystemExit(f"backends disagree on {label}")
        row = f"{label:<28}" + "".join(f"{times[b] * 1e3:>10.1f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{times['python'] / times['cython']:>11.0f}x"
        print(row)


if __name__ == "__main__":
    main()
