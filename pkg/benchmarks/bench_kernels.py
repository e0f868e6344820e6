"""Time each hot kernel under both backends on panel-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--nodes 50]

The jit column excludes compilation (one warm-up call first). Both
implementations are called directly from ``kernels.IMPLEMENTATIONS``, so the
``MOBIFLOW_BACKEND`` setting does not matter here.
"""

import argparse
import time

import numpy as np

from mobiflow import kernels
from mobiflow._accel import HAVE_NUMBA
from mobiflow.network import build_week_network
from mobiflow.synth import gen_lagged_pair, gen_planted_flow_network


def cases(nodes, seed=0):
    rng = np.random.default_rng(seed)
    pair = gen_lagged_pair(190, 14, 0.05, seed=seed)
    m, a = pair.mobility.values, pair.awareness.values

    blocks = [nodes // 5] * 4 + [nodes - 4 * (nodes // 5)]
    p = gen_planted_flow_network(blocks, 100.0, 10.0, seed=seed)
    indptr, indices, weights = build_week_network(p.table, p.table.weeks[0]).csr
    order = rng.permutation(nodes).astype(np.int64)
    draws = rng.random(nodes)

    lat, lon = rng.uniform(25, 49, nodes), rng.uniform(-124, -67, nodes)

    def sweep(fn):
        labels = np.arange(nodes, dtype=np.int64)
        return lambda: fn(indptr, indices, weights, labels, order, draws, kernels.LABEL_RTOL)

    return {
        "pearson": lambda fn: (lambda: fn(m, a[: len(m)])),
        "lag_profile": lambda fn: (lambda: fn(m, a, 14, 30)),
        "lpa_sweep": sweep,
        "path_metrics": lambda fn: (lambda: fn(indptr, indices, 1.0 / weights, kernels.PATH_RTOL)),
        "haversine_matrix": lambda fn: (lambda: fn(lat, lon, lat, lon, kernels.EARTH_RADIUS_KM)),
    }


def best_of(call, repeat):
    call()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        call()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--nodes", type=int, default=50)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba not installed; both columns run the numpy code")

    built = cases(args.nodes)
    print(f"{'kernel':<18}{'numba (us)':>12}{'numpy (us)':>12}{'speedup':>10}")
    for name, (jit_fn, np_fn) in kernels.IMPLEMENTATIONS.items():
        t_jit = best_of(built[name](jit_fn), args.repeat)
        t_np = best_of(built[name](np_fn), args.repeat)
        print(f"{name:<18}{t_jit * 1e6:>12.1f}{t_np * 1e6:>12.1f}{t_np / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
