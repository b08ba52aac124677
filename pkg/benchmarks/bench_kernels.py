"""Numba kernels versus their numpy fallbacks.

Times each hot loop on inputs shaped like its real workload, checks that the
two implementations agree, and prints the speed-up. The first numba call
(compilation or cache load) is excluded and reported separately.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from meanrev_jd import _kernels


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(scale: float, rng: np.random.Generator) -> dict:
    # simulator: one time step of 500k paths with about 1.3 jumps each
    counts = rng.poisson(1.3, int(500_000 * scale)).astype(np.int64)
    total = int(counts.sum())
    sim = (counts, rng.random(total) / 252, rng.normal(0, 0.05, total), 2.0)

    # likelihood: 5000 observations, 250 distinct indices, 4096 frequency nodes
    n, rows_n, nodes = int(5000 * scale), 250, 4096
    u = np.linspace(0, 2000, nodes)
    w = np.ones(nodes)
    w[0] = 0.5
    phase = rng.normal(size=(rows_n, 1)) * 1e-3 * u[None, :]
    phi = np.exp(-1e-5 * u**2)[None, :] * np.exp(1j * phase)
    lik = (rng.normal(0, 0.04, n), rng.integers(0, rows_n, n).astype(np.int64), u, w,
           np.ascontiguousarray(phi.real), np.ascontiguousarray(phi.imag))

    # CF table: Gaussian-jump panels for 5000 daily steps at 2048 frequencies
    gl_x, gl_w = np.polynomial.legendre.leggauss(8)
    b = np.linspace(-300, 300, int(2048 * scale))
    panels = (b, 0.0, -0.01, 0.05, 1.0, 1 / 252, 500, 1, gl_x, gl_w)
    return {"jump_decay_sums": sim, "fourier_cos_sums": lik, "gauss_jump_panels": panels}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply workload sizes")
    args = ap.parse_args()
    if _kernels.NUMBA_KERNELS is None:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'1st call s':>11}{'numba s':>10}{'numpy s':>10}{'speed-up':>10}{'max diff':>11}")
    for name, args_ in workloads(args.scale, rng).items():
        nb = getattr(_kernels.NUMBA_KERNELS, name)
        npy = getattr(_kernels.NUMPY_KERNELS, name)
        t0 = time.perf_counter()
        out_nb = nb(*args_)
        compile_s = time.perf_counter() - t0
        out_np = npy(*args_)
        pairs = zip(out_nb, out_np) if isinstance(out_nb, tuple) else [(out_nb, out_np)]
        diff = max(float(np.max(np.abs(a - b))) for a, b in pairs)
        t_nb = best_of(lambda: nb(*args_), args.repeat)
        t_np = best_of(lambda: npy(*args_), args.repeat)
        print(f"{name:<20}{compile_s:>11.3f}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>9.1f}x{diff:>11.1e}")


if __name__ == "__main__":
    main()
