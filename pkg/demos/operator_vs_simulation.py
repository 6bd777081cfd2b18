"""Two ways to measure the explosion time, one answer.

For heavy-tailed offspring with exact generating function 1 - (1-s)^(1/2)
and unit-rate exponential delays, the no-explosion probability phi(t)
satisfies a fixed-point equation whose solution is exp(-t/2) in closed form.
This script recovers it three ways: the grid fixed-point iteration, the
Monte Carlo cap-hit frequency, and the formula -- then prints them side by
side.
"""

import math

from cmjbp import (
    Exponential,
    PowerLawGen,
    age_dependent,
    estimate_cdf,
    explosion_time_cdf,
    iterate_phi,
)


def main():
    spec = age_dependent(PowerLawGen(0.5), Exponential(1.0))

    phi, k_stop, residual, hint = iterate_phi(spec, t_max=2.0, n=2048,
                                              k_max=300, tol=1e-12)
    print(f"fixed-point iteration: {k_stop} sweeps, residual {residual:.2e}, {hint}")

    ts = [0.25, 0.5, 1.0, 1.5, 2.0]
    est, lo, hi, _ = estimate_cdf(spec, ts, cap=20_000, trials=2000,
                                  master_seed=42)
    cdf = explosion_time_cdf(phi)

    print(f"\n{'t':>5} | {'grid 1-phi':>11} | {'Monte Carlo':>19} | {'exp closed form':>15}")
    print("-" * 62)
    for j, t in enumerate(ts):
        idx = int(round(t / phi.dt))
        closed = 1.0 - math.exp(-t / 2.0)
        print(
            f"{t:5.2f} | {cdf.values[idx]:11.4f} | "
            f"{est[j]:.4f} [{lo[j]:.4f},{hi[j]:.4f}] | {closed:15.4f}"
        )
    print()
    print("The cap-hit frequency sits a hair above the true explosion cdf")
    print("(a huge-but-finite population also crosses the cap), and the grid")
    print("value reproduces the closed form to discretization accuracy.")


if __name__ == "__main__":
    main()
