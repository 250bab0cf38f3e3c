"""Time the compiled kernels against their pure-Python twins.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--seed S]
"""
import argparse
import timeit

import numpy as np

from ivpkit import _pykernels
from ivpkit.blackwell import _garbling_lp, apply_garbling, random_garbling, random_mlrp_experiment

try:
    from ivpkit import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    L, K = 6, 8
    lik = random_mlrp_experiment(rng, L, K).likelihood
    values = np.sort(rng.uniform(0, 1, L))
    pi_a, pi_b = rng.dirichlet(np.ones(L)), rng.dirichlet(np.ones(L))
    more = random_mlrp_experiment(rng, L, K)
    A, b = _garbling_lp(more.likelihood, apply_garbling(more, random_garbling(rng, K, 6, 0.3)).likelihood)
    g = random_mlrp_experiment(rng, 2, 4).likelihood
    g0, g1 = np.ascontiguousarray(g[0]), np.ascontiguousarray(g[1])
    return {
        "cross_posterior_mean (6x8)": lambda m: m.cross_posterior_mean(pi_a, pi_b, lik, values),
        "marginal_benefit (4001 points)":
            lambda m, t=np.linspace(0, 1, 4001): m.marginal_benefit(g0, g1, t),
        "simplex_phase1 (garbling LP 44x48)": lambda m: m.simplex_phase1(A, b, 10_000),
        "lcse_quadratic (h=1/4000)": lambda m: m.lcse_quadratic(g0, g1, 1 / 4000, 1 - 1e-4, 40_000),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if _kernels is None:
        parser.exit(1, "compiled kernels are not built; nothing to compare\n")
    print(f"{'kernel':38s} {'python':>12s} {'compiled':>12s} {'speedup':>9s}")
    for name, call in cases(np.random.default_rng(args.seed)).items():
        times = {}
        for label, module in (("python", _pykernels), ("compiled", _kernels)):
            timer = timeit.Timer(lambda: call(module))
            number, _ = timer.autorange()
            times[label] = min(timer.repeat(args.repeat, number)) / number
        print(f"{name:38s} {times['python'] * 1e6:10.1f}us {times['compiled'] * 1e6:10.1f}us "
              f"{times['python'] / times['compiled']:8.1f}x")


if __name__ == "__main__":
    main()
