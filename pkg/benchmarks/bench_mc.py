"""Benchmark: numba path-stepping kernel vs the pure-numpy fallback.

Runs the same killed-walk batches through both backends, checks the outputs
are bit-identical, and reports timings. The numpy twin advances all live
paths one step per sweep, so its cost scales with the longest path; the
compiled per-path loop is typically 5-50x faster once warmed up.

    python3 benchmarks/bench_mc.py
"""

import time

import numpy as np

import walklab as wl
from walklab._mc_step import NUMBA_ENABLED, _walk_paths_nb, _walk_paths_np
from walklab.montecarlo import SimulationConfig, _grid_tables


def build_case(name, kernel, region, start, n_paths, seed):
    cfg = SimulationConfig(kernel=kernel, start=start, stop_region=region,
                           n_paths=n_paths, seed=seed)
    lo, shape, strides, cell_row, cumw = _grid_tables(cfg)
    args = (np.asarray(start, dtype=np.int64), kernel.steps_array(),
            lo, shape, cell_row, cumw, n_paths, cfg.effective_cap,
            np.uint64(seed), -1)
    return name, args


def run(fn, args, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    print(f"numba available: {NUMBA_ENABLED}")
    hs = wl.half_space(2)
    cases = [
        build_case("interval n=9, 50k paths", wl.srw_kernel(1),
                   np.arange(1, 10).reshape(-1, 1), (5,), 50_000, 1),
        build_case("ball R=12, 20k paths", wl.parity_kernel_2d(),
                   wl.enumerate_region(wl.ball((0, 0), 12)), (0, 0), 20_000, 2),
        build_case("collar K=8 r=4, 20k paths", wl.srw_kernel(2),
                   wl.enumerate_region(wl.collar((0, 0), 32, 4), hs,
                                       wl.unit_steps(2)),
                   (2, 0), 20_000, 3),
    ]
    if NUMBA_ENABLED:
        # warm the JIT outside the timed region
        _walk_paths_nb(*build_case("warmup", wl.srw_kernel(1),
                                   np.arange(1, 4).reshape(-1, 1), (1,),
                                   10, 0)[1])
    print(f"{'case':<28} {'numba':>10} {'numpy':>10} {'speedup':>8}  identical")
    for name, args in cases:
        t_np, out_np = run(_walk_paths_np, args, repeats=2)
        if NUMBA_ENABLED:
            t_nb, out_nb = run(_walk_paths_nb, args, repeats=3)
            same = all(np.array_equal(a, b) for a, b in zip(out_nb, out_np))
            print(f"{name:<28} {t_nb * 1e3:>8.1f}ms {t_np * 1e3:>8.1f}ms "
                  f"{t_np / t_nb:>7.1f}x  {same}")
        else:
            print(f"{name:<28} {'-':>10} {t_np * 1e3:>8.1f}ms {'-':>8}  -")


if __name__ == "__main__":
    main()
