"""Run the gluing pipeline on a few seeded synthetic instances.

Each instance is a triple-product tensor transported along random
filtered isomorphisms, so the expected homology is known in advance.

    python3 demos/gluing_pipeline.py [count]
"""
import random
import sys
from fractions import Fraction

from floerkit.novikov import DiscreteMonoid
from floerkit.pairing import PipelineFailure, verify_gluing
from floerkit.synthetic import gluing_instance


def main(count: int = 4):
    monoid = DiscreteMonoid([Fraction(1, 2)])
    for seed in range(count):
        inst = gluing_instance(random.Random(seed), monoid, 2)
        print(f"== seed {seed}: {inst.description}")
        try:
            report = verify_gluing(inst.tensor, inst.one1, inst.one2)
        except PipelineFailure as exc:
            print(f"failed at {exc.stage}: {exc.message}")
            continue
        print(report.render())
        print()


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 4)
