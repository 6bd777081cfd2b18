"""Delay laws with no density at all can still explode.

Three constructions carry their mass in ways that defeat every
density-based intuition: the staircase law supported on the middle-thirds
set, its dyadic-atom mirror, and a family of atoms at e^-n whose masses
decay doubly exponentially.  Each is explosive for arbitrary heavy
power-tail offspring -- except the atom family once its decay parameter
crosses e, where the process abruptly becomes conservative.
"""

import numpy as np

from cmjbp import (
    Cantor,
    DyadicAtoms,
    NuBeta,
    OmegaBlend,
    ParetoTail,
    h_sequence,
    integral_verdict,
    minsum_verdict,
)


def main():
    h = h_sequence(ParetoTail(0.5, 1.0), x0=2.0)

    cantor = Cantor()
    print("Staircase law: F(3^-n) = 2^-n exactly:")
    for n in (1, 4, 10, 20):
        t = float(np.nextafter(3.0**-n, 1.0))
        print(f"   F(3^-{n:<2d}) = {cantor.cdf(t):.12g}   (2^-{n} = {2.0**-n:.12g})")
    print(f"   verdict: {minsum_verdict(cantor, h).verdict}")
    print()

    mu = DyadicAtoms()
    print("Dyadic-atom mirror: F(2^-n) = 3^-n exactly:")
    for n in (1, 4, 10):
        print(f"   F(2^-{n:<2d}) = {mu.cdf(2.0**-n):.12g}   (3^-{n} = {3.0**-n:.12g})")
    print(f"   verdict: {minsum_verdict(mu, h).verdict}")
    print()

    print("Atoms at e^-n with mass exp(-exp(beta^n)): the boundary is beta = e:")
    for beta in (2.0, 2.5, 3.0, 4.0):
        v = integral_verdict(NuBeta(beta)).verdict
        marker = "<-- crosses e" if beta == 3.0 else ""
        print(f"   beta = {beta}: {v} {marker}")
    print()

    omega = OmegaBlend(2.0, 1.5)
    print("A smooth counterexample: absolutely continuous, full support, yet")
    print("its density is non-monotone at every scale near 0 and the law is")
    print(f"explosive anyway: {integral_verdict(omega).verdict}")


if __name__ == "__main__":
    main()
