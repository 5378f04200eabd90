"""Benchmark compiled vs numpy kernel backends on the hot loops.

Usage: python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import math
import time

import numpy as np

from mixlyap import kernels
from mixlyap.phase import band_edge_setup
from mixlyap.potential import iid_process, two_state_markov, sample_stream


def _time(fn, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(steps):
    if not kernels.USING_COMPILED:
        print("compiled backend unavailable; build the extension first")
        return 1
    py = kernels.get_backend("python")
    cc = kernels.get_backend("compiled")
    pr = iid_process(seed=0)
    # 8 replicas in lockstep: the shape the estimator actually uses (the
    # numpy backend amortizes its per-step overhead across the batch)
    pot = sample_stream(pr, steps).reshape(8, steps // 8).copy()
    m0 = np.array([[1.0, -1.0], [1.0, 0.0]])
    m1 = np.array([[-0.05, 0.0], [0.0, 0.0]])

    rows = []

    def lyap(mod):
        a = np.ones(8)
        b = np.zeros(8)
        acc = np.zeros(8)
        mod.lyap_affine_chunk(m0, m1, pot, a, b, acc, 0, 64)

    rows.append(("transfer evolution (8 wide)", steps,
                 _time(lambda: lyap(cc)), _time(lambda: lyap(py))))

    setup = band_edge_setup(pr, 1e-2, 0.0)
    vals = setup.sample_values(steps // 4, stream=1)
    mats = np.ascontiguousarray(setup.step_matrices(vals)[None, ...])

    def orbit(mod):
        c = np.array([1.0])
        s = np.array([0.0])
        acc = np.zeros(1)
        out_c = np.empty((1, mats.shape[1]))
        out_s = np.empty((1, mats.shape[1]))
        mod.orbit_chunk(mats, c, s, acc, out_c, out_s)

    rows.append(("phase orbit", mats.shape[1],
                 _time(lambda: orbit(cc)), _time(lambda: orbit(py))))

    chain = two_state_markov(0.3, seed=0)
    u = np.random.default_rng(0).random(steps)
    cum = np.cumsum(chain.params["transition"], axis=1)
    cum[:, -1] = 1.0 + 1e-12
    rows.append(("markov chain states", steps,
                 _time(lambda: cc.markov_chain_states(u, cum, 0)),
                 _time(lambda: py.markov_chain_states(u, cum, 0))))

    pot_ng = sample_stream(pr, 1600 * 200).reshape(200, 1600)
    rows.append(("norm-growth tracker", pot_ng.size,
                 _time(lambda: cc.norm_growth(m0, m1, pot_ng)),
                 _time(lambda: py.norm_growth(m0, m1, pot_ng))))

    n_pm = min(steps, 1_000_000)
    rows.append(("intermittent map orbit", n_pm,
                 _time(lambda: cc.pm_orbit(0.37, 0.5, n_pm)),
                 _time(lambda: py.pm_orbit(0.37, 0.5, n_pm))))

    print(f"{'kernel':<28}{'steps':>10}{'compiled':>12}{'numpy':>12}"
          f"{'speedup':>9}")
    for name, n, tc, tp in rows:
        print(f"{name:<28}{n:>10}{tc:>11.3f}s{tp:>11.3f}s{tp / tc:>8.1f}x")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=2_000_000)
    raise SystemExit(bench(ap.parse_args().steps))
