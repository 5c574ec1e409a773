"""Torsion exponents survive a change of basis.

Builds a differential with known pairs a -> T^lam b, hides it behind a
random filtered change of basis and recovers the exponents again.

    python3 demos/torsion_exponents.py
"""
import random
from fractions import Fraction

from floerkit.lincomb import Basis, LinearMap, compose, homology
from floerkit.novikov import DiscreteMonoid
from floerkit.synthetic import random_level_zero_iso, random_unipotent

HALF = DiscreteMonoid([Fraction(1, 2)])
CUTOFF = 3


def show(d):
    for g in d.domain:
        print(f"  {g} -> {d.image(g)}")


def main(seed: int = 1):
    rng = random.Random(seed)
    basis = Basis(("a1", "b1", "a2", "b2", "a3", "b3"))
    pairs = {"a1": [(Fraction(1, 2), "b1")], "a2": [(Fraction(2), "b2")], "a3": [(0, "b3")]}
    diag = LinearMap(basis, basis, pairs, CUTOFF, HALF)
    print("diagonal differential:")
    show(diag)
    print("homology:", homology(diag))

    Q = random_level_zero_iso(basis, rng, HALF, CUTOFF) @ random_unipotent(basis, rng, HALF, CUTOFF)
    d = Q @ diag @ Q.inverse()
    print("\nafter a change of basis:")
    show(d)
    print("d o d is zero:", compose(d, d).is_zero())
    print("homology:", homology(d))


if __name__ == "__main__":
    main()
