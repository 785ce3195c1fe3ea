"""Compiled versus pure-numpy particle kernels.

Times the per-step kernels and a full engine step on the same ensemble for
each available backend and reports nanoseconds per particle.

    python benchmarks/bench_kernels.py --particles 200000 --repeat 20
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from stiffchemo._backend import HAVE_COMPILED, get_backend
from stiffchemo.mc import McConfig, McSimulation
from stiffchemo.model import TABLE1, params_from_table1


def _best(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(name: str, particles: int, repeat: int, threads: int) -> dict:
    M = 500
    I = max(4, particles // M)
    cfg = McConfig(params=params_from_table1(*TABLE1["B"], k=0.1), L=I * 0.05, I=I, M=M,
                   t_end=1.0, seed=7, threads=threads if name == "compiled" else 1)
    sim = McSimulation(cfg, backend=name)
    for _ in range(3):
        # warm up and build a sensing history
        sim.step()
    kern = get_backend(name)
    ens = sim.ens
    n = ens.count
    hist = np.zeros((cfg.threads, I), dtype=np.int64)
    counts = np.zeros(I, dtype=np.int64)
    logS = np.zeros(I)
    slope = np.full(I, 0.3)
    rho = np.ones(I)
    events = np.zeros(ens.capacity, dtype=np.uint8)
    key = sim.rng.key(10**6)
    x0 = ens.x_buf.copy()
    prev0 = ens.logS_prev_buf.copy()

    def move():
        ens.x_buf[:] = x0
        kern.move_count(ens.x_buf, ens.v_buf[0], n, cfg.dt, cfg.L, cfg.dx, counts, hist,
                        cfg.threads)

    def decide():
        ens.logS_prev_buf[:] = prev0
        kern.sense_tumble_grow(ens.x_buf, ens.v_buf[0], ens.v_buf[1], ens.v_buf[2],
                               ens.logS_prev_buf, n, logS, slope, rho, cfg.dx, cfg.dt,
                               cfg.dt / cfg.params.k, cfg.params.chi, cfg.params.delta, True,
                               True, True, True, key, events, cfg.threads)

    out = {"move_count": _best(move, repeat), "sense_tumble_grow": _best(decide, repeat),
           "engine_step": _best(sim.step, repeat)}
    return {k: v / n * 1e9 for k, v in out.items()}


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--particles", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    names = ["python"] + (["compiled"] if HAVE_COMPILED else [])
    results = {name: bench_backend(name, args.particles, args.repeat, args.threads)
               for name in names}
    print(f"{args.particles} particles, best of {args.repeat}, ns per particle")
    print(f"{'kernel':<20}" + "".join(f"{n:>12}" for n in names)
          + ("     speedup" if len(names) == 2 else ""))
    for kernel in results["python"]:
        row = [results[n][kernel] for n in names]
        line = f"{kernel:<20}" + "".join(f"{v:>12.1f}" for v in row)
        if len(row) == 2:
            line += f"{row[0] / row[1]:>11.1f}x"
        print(line)
    if not HAVE_COMPILED:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
