"""Seeded generators of valid synthetic instances.

Everything starts from a small associative unital algebra over Z/2 with a
derivation, turned into a filtered A-infinity algebra by putting the
derivation at a positive level.  Random A-infinity isomorphisms, module
homomorphisms, linear conjugations and twists then spread the structure
over many arities and levels while keeping every relation intact.  All
randomness goes through a caller-supplied ``random.Random``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .ainfty import (FilteredAlgebra, FilteredBimodule, FilteredRightModule, GappedOperationTable,
                     StructureError, TwistIndex, _clean, _insert, check_algebra_relations,
                     diagonal_bimodule, evaluate, opposite_algebra, regular_module, substitute,
                     twist_bimodule, twist_module)
from .constructions import (AlgebraMap, conjugate_bimodule, pullback_algebra, pullback_bimodule,
                            pullback_module, transfer_module, _apply_linear)
from .lincomb import Basis, Element, LinearMap, gf2_inverse, xor_into
from .mc import certify_cyclic
from .novikov import DiscreteMonoid, as_rational
from .pairing import FloerComplexData, GluingTensor, floer_from_map

# name -> (generators, products {(a, b): [c, ...]}, derivation {a: [c, ...]}, unit)
CATALOG = {
    "field": (("e",), {("e", "e"): ["e"]}, {}, ["e"]),
    "split2": (("e1", "e2"), {("e1", "e1"): ["e1"], ("e2", "e2"): ["e2"]}, {}, ["e1", "e2"]),
    "dual": (("e", "p"), {("e", "e"): ["e"], ("e", "p"): ["p"], ("p", "e"): ["p"]},
             {"p": ["e"]}, ["e"]),
    "cubic": (("e", "p", "s"), {("e", "e"): ["e"], ("e", "p"): ["p"], ("p", "e"): ["p"],
                                ("e", "s"): ["s"], ("s", "e"): ["s"], ("p", "p"): ["s"]},
              {"p": ["s"]}, ["e"]),
    "triangular": (("a", "n", "c"), {("a", "a"): ["a"], ("a", "n"): ["n"], ("n", "c"): ["n"],
                                     ("c", "c"): ["c"]},
                   {"a": ["n"], "c": ["n"]}, ["a", "c"]),
    "split3": (("e1", "e2", "e3"), {("e1", "e1"): ["e1"], ("e2", "e2"): ["e2"],
                                    ("e3", "e3"): ["e3"]}, {}, ["e1", "e2", "e3"]),
}


@dataclass(frozen=True)
class UnitalAlgebra:
    algebra: FilteredAlgebra
    unit: Element


def catalog_algebra(kind: str, monoid: DiscreteMonoid, cutoff, differential_level=None,
                    name: str = "C") -> UnitalAlgebra:
    """A strictly unital DGA from the catalog, its derivation placed at ``differential_level``."""
    gens, products, deriv, unit = CATALOG[kind]
    basis = Basis(gens, name=name)
    rows = [(2, 0, pair, outs) for pair, outs in products.items()]
    if differential_level is not None:
        rows += [(1, differential_level, (g,), outs) for g, outs in deriv.items()]
    A = FilteredAlgebra(basis, GappedOperationTable.from_entries(rows), monoid, cutoff, name)
    cex = check_algebra_relations(A)
    if cex is not None:
        raise StructureError(f"catalog entry {kind} is not an A-infinity algebra: {cex}")
    return UnitalAlgebra(A, A.element([(0, g) for g in unit]))


def positive_levels(monoid: DiscreteMonoid, cutoff) -> list[Fraction]:
    return list(monoid.levels(cutoff))[1:]


def random_positive_element(basis: Basis, rng: random.Random, monoid, cutoff,
                            density: float = 0.3) -> Element:
    terms = [(lvl, g) for lvl in positive_levels(monoid, cutoff) for g in basis
             if rng.random() < density]
    return Element(basis, terms, cutoff, monoid)


def random_unipotent(basis: Basis, rng: random.Random, monoid, cutoff,
                     density: float = 0.3, target: Basis | None = None) -> LinearMap:
    """Identity (generator names matched by position) plus random positive-level entries."""
    target = target or basis
    cols = {}
    levels = positive_levels(monoid, cutoff)
    for g, h in zip(basis, target):
        terms = {(Fraction(0), h)}
        for lvl in levels:
            for k in target:
                if rng.random() < density / max(len(levels), 1):
                    xor_into(terms, ((lvl, k),))
        cols[g] = frozenset(terms)
    return LinearMap(basis, target, cols, cutoff, monoid, check=False)


def random_level_zero_iso(basis: Basis, rng: random.Random, monoid, cutoff) -> LinearMap:
    """A random invertible Z/2 matrix, as a level-0 automorphism."""
    n = len(basis)
    while True:
        mat = [[rng.randint(0, 1) for _ in range(n)] for _ in range(n)]
        if gf2_inverse(mat) is not None:
            break
    cols = {g: frozenset((Fraction(0), basis.generators[i]) for i in range(n) if mat[i][j])
            for j, g in enumerate(basis)}
    return LinearMap(basis, basis, cols, cutoff, monoid, check=False)


def _random_table(rng, slot_bases_by_sig: dict, out_basis: Basis, levels, density) -> dict:
    rows = {}
    for sig, slot_bases in slot_bases_by_sig.items():
        for lvl in levels:
            if rng.random() >= density:
                continue
            inputs = tuple(rng.choice(b.generators) for b in slot_bases)
            out = rng.choice(out_basis.generators)
            xor_into(rows.setdefault((sig, inputs), set()), ((lvl, out),))
    return rows


def random_algebra_map(A: FilteredAlgebra, rng: random.Random, *, max_arity: int = 2,
                       density: float = 0.5, min_level=None) -> AlgebraMap:
    """g_1 = unipotent, g_k (2 <= k <= max_arity) random at levels >= ``min_level``."""
    E, G = A.cutoff, A.monoid
    g1 = random_unipotent(A.basis, rng, G, E, density)
    data = {(1, (g,)): terms for g, terms in g1.columns.items()}
    low = as_rational(min_level) if min_level is not None else Fraction(0)
    levels = [lvl for lvl in positive_levels(G, E) if lvl >= low]
    extra = _random_table(rng, {k: [A.basis] * k for k in range(2, max_arity + 1)}, A.basis,
                          levels, density)
    for key, terms in extra.items():
        data[key] = frozenset(terms)
    return AlgebraMap(A.basis, A.basis, GappedOperationTable(data))


def random_homomorphism(M: FilteredRightModule, basis: Basis, rng: random.Random, *,
                        max_arity: int = 1, density: float = 0.4,
                        scramble: bool = False) -> GappedOperationTable:
    """Components phi_k(y; x..) into ``M`` from a copy ``basis`` of its space."""
    E, G = M.cutoff, M.monoid
    lin = random_unipotent(basis, rng, G, E, density, target=M.basis)
    if scramble:
        iso = random_level_zero_iso(M.basis, rng, G, E)
        lin = iso @ lin
    data = {(0, (g,)): terms for g, terms in lin.columns.items()}
    extra = _random_table(rng, {k: [basis] + [M.algebra.basis] * k for k in range(1, max_arity + 1)},
                          M.basis, positive_levels(G, E), density)
    for key, terms in extra.items():
        data[key] = frozenset(terms)
    return GappedOperationTable(data)


@dataclass(frozen=True)
class CyclicInstance:
    module: FilteredRightModule
    one: Element
    description: str


def cyclic_instance(rng: random.Random, monoid: DiscreteMonoid, cutoff, *,
                    kinds=("field", "split2", "dual", "cubic", "triangular", "split3"),
                    max_generators: int = 3) -> CyclicInstance:
    """A random module over a random algebra with a certified cyclic element."""
    levels = positive_levels(monoid, cutoff)
    kinds = [k for k in kinds if len(CATALOG[k][0]) <= max_generators]
    kind = rng.choice(kinds)
    dlevel = rng.choice(levels) if CATALOG[kind][2] and rng.random() < 0.8 else None
    base = catalog_algebra(kind, monoid, cutoff, dlevel)
    A, M = base.algebra, regular_module(base.algebra)
    steps = [kind + (f"/d@{dlevel}" if dlevel is not None else "")]
    if rng.random() < 0.7:
        g = random_algebra_map(A, rng, min_level=levels[min(1, len(levels) - 1)])
        A2 = pullback_algebra(A, g, "C")
        M = pullback_module(M, g, A2)
        A = A2
        steps.append("pullback")
    if rng.random() < 0.7:
        c = random_positive_element(A.basis, rng, monoid, cutoff)
        M = twist_module(M, c)
        A = M.algebra
        steps.append("twist")
    one = M.element(base.unit.terms)
    if rng.random() < 0.8:
        dbasis = Basis(tuple(f"y{i}" for i in range(len(M.basis))), name="D")
        phi = random_homomorphism(M, dbasis, rng, scramble=rng.random() < 0.5)
        M, hom = transfer_module(M, dbasis, phi, "D")
        inv = hom.linear_part().inverse()
        one = inv(one)
        steps.append("transfer")
    one = one + random_positive_element(M.basis, rng, monoid, cutoff, 0.2)
    certify_cyclic(M, one)
    return CyclicInstance(M, one, "+".join(steps))


def triple_product_tensor(base: UnitalAlgebra, M1, B, M2, F) -> GluingTensor:
    """Phi_{0,0}(y1; a; y2) = y1 a y2 for the strict model."""
    A = base.algebra
    rows = []
    for y1 in A.basis:
        for a in A.basis:
            for y2 in A.basis:
                gens = [A.element([(0, g)]) for g in (y1, a, y2)]
                ya = evaluate(A, 2, None, gens[:2])
                yay = evaluate(A, 2, None, [ya, gens[2]])
                for lvl, o in yay.terms:
                    if lvl == 0:
                        rows.append(((0, 0), 0, (y1, a, y2), o))
    return GluingTensor(M1, B, M2, F, GappedOperationTable.from_entries(rows), "Phi")


def precompose_module1(phi: GluingTensor, hom_table: GappedOperationTable,
                       new_module: FilteredRightModule) -> GluingTensor:
    """Phi'(y1; x..) = sum Phi(h(y1; x_1..x_j); x_{j+1}..)."""
    acc: dict = {}
    _insert(acc, phi.components, lambda s: (0,), GappedOperationTable(hom_table.data),
            lambda osig, oin, i, isig, iin: ((osig[0] + isig, osig[1]), iin + oin[1:]), phi.cutoff)
    return GluingTensor(new_module, phi.bimodule, phi.module2, phi.floer,
                        GappedOperationTable(_clean(acc)), phi.name)


def precompose_module2(phi: GluingTensor, hom_table: GappedOperationTable,
                       new_module: FilteredRightModule) -> GluingTensor:
    """Same at y2, where h eats the end of the x2 string in reverse."""
    acc: dict = {}

    def combine(osig, oin, i, isig, iin):
        k1 = osig[0]
        return (k1, osig[1] + isig), oin[:2 + k1] + (iin[0],) + oin[3 + k1:] + tuple(reversed(iin[1:]))

    _insert(acc, phi.components, lambda s: (2 + s[0],), GappedOperationTable(hom_table.data),
            combine, phi.cutoff)
    return GluingTensor(phi.module1, phi.bimodule, new_module, phi.floer,
                        GappedOperationTable(_clean(acc)), phi.name)


def _precompose_a(phi: GluingTensor, psi: LinearMap, bimodule: FilteredBimodule) -> GluingTensor:
    acc: dict = {}
    for (sig, inputs), terms in phi.components.data.items():
        k1 = sig[0]
        for src, col in psi.columns.items():
            for lvl, h in col:
                if h != inputs[1 + k1]:
                    continue
                new = inputs[:1 + k1] + (src,) + inputs[2 + k1:]
                xor_into(acc.setdefault((sig, new), set()),
                         ((lvl + l2, o) for l2, o in terms if lvl + l2 < phi.cutoff))
    return GluingTensor(phi.module1, bimodule, phi.module2, phi.floer,
                        GappedOperationTable(_clean(acc)), phi.name)


def _postcompose_floer(phi: GluingTensor, chi_inv: LinearMap, floer: FloerComplexData) -> GluingTensor:
    data = {}
    for key, terms in phi.components.data.items():
        out = _apply_linear(chi_inv, terms)
        if out:
            data[key] = out
    return GluingTensor(phi.module1, phi.bimodule, phi.module2, floer, GappedOperationTable(data),
                        phi.name)


def _substitute_tensor(phi: GluingTensor, pre1, pre2, module1, bimodule, module2) -> GluingTensor:
    data = substitute(phi.components,
                      lambda s: [(1, 1 + s[0], 0), (3 + s[0], 3 + s[0] + s[1], 1)],
                      [pre1, pre2], phi.cutoff, lambda n: (n[0], n[1]))
    return GluingTensor(module1, bimodule, module2, phi.floer, GappedOperationTable(data), phi.name)


@dataclass(frozen=True)
class GluingInstance:
    tensor: GluingTensor
    one1: Element
    one2: Element
    description: str


def gluing_instance(rng: random.Random, monoid: DiscreteMonoid, cutoff, *,
                    kinds=("field", "split2", "dual", "cubic", "triangular"),
                    steps=("pullback", "twist", "transfer1", "transfer2", "conjugate", "floer"),
                    probability: float = 0.6) -> GluingInstance:
    """A gluing tensor satisfying the compatibility relation, with cyclic elements."""
    levels = positive_levels(monoid, cutoff)
    kind = rng.choice(list(kinds))
    dlevel = rng.choice(levels) if CATALOG[kind][2] else None
    base = catalog_algebra(kind, monoid, cutoff, dlevel)
    C = base.algebra
    C1, C2 = C, C
    M1 = regular_module(C)
    M2 = regular_module(opposite_algebra(C))
    B = diagonal_bimodule(C)
    m1 = LinearMap(C.basis, C.basis, {i[0]: t for (s, i), t in C.ops.data.items() if s == 1},
                   cutoff, monoid, check=False)
    F = floer_from_map(m1, "F")
    phi = triple_product_tensor(base, M1, B, M2, F)
    one1 = M1.element(base.unit.terms)
    one2 = M2.element(base.unit.terms)
    done = [kind + (f"/d@{dlevel}" if dlevel is not None else "")]

    def want(step):
        return step in steps and rng.random() < probability

    if want("pullback"):
        g1 = random_algebra_map(C, rng, min_level=levels[min(1, len(levels) - 1)])
        g2 = random_algebra_map(C, rng, min_level=levels[min(1, len(levels) - 1)])
        C1 = pullback_algebra(C, g1, "C1")
        C2 = pullback_algebra(C, g2, "C2")
        M1 = pullback_module(M1, g1, C1)
        M2 = pullback_module(M2, g2.opposite(), opposite_algebra(C2))
        B = pullback_bimodule(B, g1, C1, g2, C2)
        phi = _substitute_tensor(phi, g1.preimages(), g2.preimages(), M1, B, M2)
        done.append("pullback")
    if want("twist"):
        c1 = random_positive_element(C1.basis, rng, monoid, cutoff)
        c2 = random_positive_element(C2.basis, rng, monoid, cutoff)
        M1 = twist_module(M1, c1)
        M2 = twist_module(M2, c2)
        B = twist_bimodule(B, c1, c2)
        C1, C2 = B.left, B.right
        phi = _substitute_tensor(phi, TwistIndex(c1), TwistIndex(c2), M1, B, M2)
        done.append("twist")
    if want("transfer1"):
        basis = Basis(tuple(f"u{i}" for i in range(len(M1.basis))), name="D1")
        table = random_homomorphism(M1, basis, rng, scramble=rng.random() < 0.5)
        newM1, hom = transfer_module(M1, basis, table, "D1")
        one1 = hom.linear_part().inverse()(one1)
        phi = precompose_module1(phi, table, newM1)
        M1 = newM1
        done.append("transfer1")
    if want("transfer2"):
        basis = Basis(tuple(f"v{i}" for i in range(len(M2.basis))), name="D2")
        table = random_homomorphism(M2, basis, rng, scramble=rng.random() < 0.5)
        newM2, hom = transfer_module(M2, basis, table, "D2")
        one2 = hom.linear_part().inverse()(one2)
        phi = precompose_module2(phi, table, newM2)
        M2 = newM2
        done.append("transfer2")
    if want("conjugate"):
        psi = random_unipotent(B.basis, rng, monoid, cutoff)
        B = conjugate_bimodule(B, psi)
        phi = _precompose_a(phi, psi, B)
        done.append("conjugate")
    if want("floer"):
        chi = random_unipotent(F.generators, rng, monoid, cutoff)
        d = floer_from_map(_conj(chi, phi.floer), "F")
        phi = _postcompose_floer(phi, chi.inverse(), d)
        done.append("floer")
    one1 = one1 + random_positive_element(M1.basis, rng, monoid, cutoff, 0.15)
    one2 = one2 + random_positive_element(M2.basis, rng, monoid, cutoff, 0.15)
    return GluingInstance(phi, one1, one2, "+".join(done))


def _conj(chi: LinearMap, F: FloerComplexData) -> LinearMap:
    from .pairing import realize_floer_boundary
    d = realize_floer_boundary(F)
    return chi.inverse() @ d @ chi


def cyclic_document(inst: CyclicInstance):
    """The instance as a structure document with its cyclic element named ``one``."""
    from .specfmt import DocumentWriter
    M = inst.module
    w = DocumentWriter(M.monoid, M.cutoff)
    w.algebra(M.algebra, "C")
    w.module(M, "M")
    w.element(inst.one, "one")
    return w.document()


def gluing_document(inst: GluingInstance):
    """The instance as a document with cyclic elements ``one1`` and ``one2``."""
    from .specfmt import DocumentWriter
    phi = inst.tensor
    w = DocumentWriter(phi.monoid, phi.cutoff)
    w.algebra(phi.bimodule.left, "C1")
    w.algebra(phi.bimodule.right, "C2")
    m1 = w.module(phi.module1, "D1")
    m2 = w.module(phi.module2, "D2")
    b = w.bimodule(phi.bimodule, "P")
    f = w.floer(phi.floer, "F")
    w.gluing(phi, m1, b, m2, f, "Phi")
    w.element(inst.one1, "one1")
    w.element(inst.one2, "one2")
    return w.document()
