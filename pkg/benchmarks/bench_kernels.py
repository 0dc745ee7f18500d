"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--n-traj 50]

Times one batch of Hubbard trajectories and one rolling Pearson pass per
backend, checks that both backends return the same numbers, and prints the
speed-up of the compiled backend.
"""

import argparse
import timeit

import numpy as np

from dynsync import kernels
from dynsync.dynamics import _effective_hamiltonian
from dynsync.models import HubbardParams, build_hubbard, hubbard_local, product_state


def trajectory_inputs(n_sites: int, n_times: int):
    mu = tuple(np.random.default_rng(1).uniform(0.0, 0.2, n_sites))
    model = build_hubbard(HubbardParams(n_sites, (1.5,) * n_sites, mu, dephasing_rate=2.5))
    evals, vecs, vecs_inv = _effective_hamiltonian(model)
    jumps = np.array([np.sqrt(r) * op.dense() for op, r in model.jumps])
    obs = np.array([hubbard_local("Sx", j, n_sites).dense() for j in range(n_sites)])
    times = np.linspace(0.0, 10.0, n_times)
    labels = ["←", "↓", "↑"][:n_sites]
    psi = product_state(labels, "hubbard").amplitudes
    return evals, vecs, vecs_inv, jumps, obs, times, psi


def run_batch(backend: str, inputs, n_traj: int):
    out = []
    for k in range(n_traj):
        uniforms = 1.0 - np.random.default_rng(k).random(4096)
        out.append(kernels.run_trajectory(*inputs, uniforms, 1e-10, backend=backend)[0])
    return np.array(out)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-traj", type=int, default=50)
    ap.add_argument("--n-sites", type=int, default=2, choices=[2, 3])
    ap.add_argument("--n-times", type=int, default=201)
    ap.add_argument("--signal-length", type=int, default=20000)
    args = ap.parse_args(argv)

    inputs = trajectory_inputs(args.n_sites, args.n_times)
    f, g = np.cumsum(np.random.default_rng(0).normal(size=(2, args.signal_length)), axis=1)
    cases = {
        "trajectories": lambda b: run_batch(b, inputs, args.n_traj),
        "rolling_pearson": lambda b: kernels.rolling_pearson(f, g, 0.01, 100, 1e-24, backend=b),
    }

    print(f"backends: {sorted(kernels.BACKENDS)}  (active: {kernels.BACKEND})")
    for name, fn in cases.items():
        results, best = {}, {}
        for backend in sorted(kernels.BACKENDS):
            results[backend] = fn(backend)
            best[backend] = min(timeit.repeat(lambda: fn(backend), number=1, repeat=args.repeat))
            print(f"{name:16s} {backend:7s} {best[backend] * 1e3:10.2f} ms")
        if "cython" in best:
            a, b = results["python"], results["cython"]
            agree = np.array_equal(np.isnan(a), np.isnan(b)) and np.allclose(
                np.nan_to_num(a), np.nan_to_num(b), rtol=0, atol=1e-10
            )
            print(f"{name:16s} speed-up {best['python'] / best['cython']:.1f}x, outputs agree: {agree}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
