"""Benchmark the compiled Euler-Maruyama kernels against the Python fallback.

Run:  python3 benchmarks/bench_em.py [--steps N]

Both backends advance the same path (identical noise), so the benchmark
also re-checks that their outputs agree bit for bit.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tbdyn import _backend, _em_py
from tbdyn.params import EnvProcessParams, ModelParams


def _run(kernel_module, model: str, n_steps: int, noise: np.ndarray) -> tuple[float, np.ndarray]:
    params = ModelParams(delta=0.2, eta=1.25e-9)
    pvec = params.as_array()
    y = np.array([4.99e5, 4.0, 4.0, 75.0])
    out = np.empty((n_steps, 4))
    start = time.perf_counter()
    if model == "demographic":
        status, done, _, _ = kernel_module.demographic_chunk(
            y, pvec, 0.01, noise, 0, 1, out)
    else:
        env = EnvProcessParams.with_return_rate(params, 0.5)
        alpha, sigma, c_s, c_0 = env.as_arrays()
        live = c_0.copy()
        out_env = np.empty((n_steps, 4))
        status, done, _, _ = kernel_module.environmental_chunk(
            y, live.copy(), pvec, alpha, sigma, c_s, 0.01, noise, 0, 1, out, out_env)
    elapsed = time.perf_counter() - start
    if status != 0:
        raise RuntimeError(f"kernel reported overflow after {done} steps")
    return elapsed, out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2_000_000,
                        help="number of Euler-Maruyama steps per run")
    args = parser.parse_args()

    compiled = _backend.compiled_kernels()
    rng = np.random.Generator(np.random.Philox(key=[1234, 0]))
    noise = rng.standard_normal((args.steps, 15))

    print(f"active backend: {_backend.BACKEND}")
    print(f"steps per run:  {args.steps:,}\n")
    header = f"{'model':<15}{'backend':<10}{'seconds':>10}{'Msteps/s':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for model in ("demographic", "environmental"):
        t_py, out_py = _run(_em_py, model, args.steps, noise)
        rate_py = args.steps / t_py / 1e6
        print(f"{model:<15}{'python':<10}{t_py:>10.3f}{rate_py:>12.3f}{'1.0x':>10}")
        if compiled is None:
            print(f"{model:<15}{'cython':<10}{'(extension not built)':>32}")
            continue
        t_cy, out_cy = _run(compiled, model, args.steps, noise)
        rate_cy = args.steps / t_cy / 1e6
        print(f"{model:<15}{'cython':<10}{t_cy:>10.3f}{rate_cy:>12.3f}"
              f"{t_py / t_cy:>9.1f}x")
        if not np.array_equal(out_py, out_cy):
            raise SystemExit("MISMATCH: backends disagree on the benchmark path")
        print(f"{'':<15}{'check':<10}{'outputs bit-identical':>32}")


if __name__ == "__main__":
    main()
