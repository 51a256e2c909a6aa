"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Times the mode integrator and the finite-difference stepper on every
available backend and reports the largest difference between results.
"""

import argparse
import time

import numpy as np

from scalewave import _backend
from scalewave.linear_modes import GaussianData, RadialSpectrum, _initial_step, _mode_atol
from scalewave.exponents import CoefficientPair


def modes_case(kern, spec, t_out, tol=1e-10):
    pair = CoefficientPair(2.0, 0.0)
    rho = spec.rho
    atol = _mode_atol(rho, spec.u0_hat, spec.u1_hat, tol)
    h0 = _initial_step(rho, pair, 0.0)
    return kern.integrate_modes(rho, spec.u0_hat, spec.u1_hat, 2.0, 0.0, 0.0, t_out, tol, atol, h0, 10**7)[0]


def fd_case(kern, N=4001, steps=2000):
    h = 400.0 / (N - 1)
    r = np.arange(N) * h
    y = np.zeros((4, N))
    bump = np.where(r < 4, np.exp(1 - 1 / (1 - np.minimum(r / 4, 0.999999) ** 2)), 0.0) * 1e-2
    y[:] = bump
    kern.advance_fd(y, 0.0, 0, 0.5 * h, steps, h, 1, 5.0, 0.0, 7.0, 0.0, 4.0, 4.0, True, 1e8)
    return y


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    spec = RadialSpectrum.build(1, GaussianData(1.0, 1.0), GaussianData(1.0, 1.0), t_max=50.0)
    t_out = np.linspace(0.0, 50.0, 101)
    cases = {
        f"modes ({spec.size} modes, t<=50)": lambda k: modes_case(k, spec, t_out),
        "fd (N=4001, 2000 RK4 steps)": fd_case,
    }
    names = sorted(_backend.BACKENDS)
    print(f"backends: {', '.join(names)} (active: {_backend.NAME})")
    for label, case in cases.items():
        results = {}
        for name in names:
            kern = _backend.BACKENDS[name]
            secs, out = best_of(lambda: case(kern), args.repeat)
            results[name] = (secs, out)
            print(f"{label:36s} {name:9s} {secs:8.3f} s")
        if len(results) == 2:
            (ta, a), (tb, b) = results["python"], results["compiled"]
            diff = np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300)
            print(f"{'':36s} speedup {ta / tb:6.1f}x, max relative difference {diff:.2e}")


if __name__ == "__main__":
    main()
