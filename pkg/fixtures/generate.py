"""Regenerate the synthetic fixtures in this directory.

    python3 fixtures/generate.py

Every file written here is a deterministic function of the seeds below;
tests/test_fixtures.py checks that the committed files still match.
"""
import random
import sys
from fractions import Fraction
from pathlib import Path

from floerkit.ainfty import diagonal_bimodule
from floerkit.constructions import transfer_module
from floerkit.lincomb import Basis
from floerkit.novikov import DiscreteMonoid
from floerkit.specfmt import (AlgebraDecl, DocumentWriter, GluingDecl, TableDecl, load, parse,
                              serialize)
from floerkit.synthetic import gluing_document, gluing_instance, random_homomorphism

HERE = Path(__file__).resolve().parent
HALF = DiscreteMonoid([Fraction(1, 2)])
GLUING_SEED = 7


def trivial_gluing():
    inst = gluing_instance(random.Random(0), HALF, 2, kinds=("field",), steps=())
    return serialize(gluing_document(inst))


def synthetic_gluing():
    inst = gluing_instance(random.Random(GLUING_SEED), HALF, 2)
    return serialize(gluing_document(inst))


def broken_gluing():
    """The synthetic gluing with one level-1/2 output toggled in its first tensor entry."""
    doc = parse(synthetic_gluing())
    phi = doc.gluing("Phi")
    sig, inputs = min(phi.components.data)
    out = phi.floer.generators.generators[0]
    terms = set(phi.components.get(sig, inputs)) ^ {(Fraction(1, 2), out)}
    broken = phi.components.replace(sig, inputs, terms)
    g = doc.gluings["Phi"]
    doc.gluings["Phi"] = GluingDecl(g.module1, g.bimodule, g.module2, g.floer,
                                    TableDecl(tuple(broken.entries())))
    return serialize(parse(serialize(doc)))


def f1_extras():
    """F1's algebra with its opposite, diagonal bimodule and a transferred module."""
    f1 = load(HERE / "f1.afd")
    A, M = f1.algebra("A"), f1.module("M")
    w = DocumentWriter(f1.monoid_obj, f1.cutoff)
    w.algebra(A, "A")
    w.bimodule(diagonal_bimodule(A), "P")
    target = w.module(M, "M")
    basis = Basis(("s", "t"), name="S")
    table = random_homomorphism(M, basis, random.Random(3), scramble=True)
    source, hom = transfer_module(M, basis, table, "N")
    src = w.module(source, "N")
    w.morphism(hom, src, target, "phi")
    doc = w.document()
    # F1's product is commutative, so the writer would fold the opposite into A
    doc.algebras["Aop"] = AlgebraDecl("", None, "A")
    return serialize(parse(serialize(doc)))


OUTPUTS = {
    "gluing_trivial.afd": trivial_gluing,
    "gluing_synthetic.afd": synthetic_gluing,
    "gluing_broken.afd": broken_gluing,
    "f1_extras.afd": f1_extras,
}


def main(check: bool = False) -> int:
    stale = []
    for name, make in OUTPUTS.items():
        text = make()
        path = HERE / name
        if check:
            if not path.exists() or path.read_text() != text:
                stale.append(name)
        else:
            path.write_text(text)
    for name in stale:
        print(f"stale: {name}")
    return 1 if stale else 0


if __name__ == "__main__":
    sys.exit(main(check="--check" in sys.argv))
