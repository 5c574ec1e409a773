import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from floerkit.ainfty import (GappedOperationTable, StructureError, check_algebra_relations,
                             check_bimodule_relations, check_module_relations, diagonal_bimodule,
                             evaluate, opposite_algebra, regular_module)
from floerkit.constructions import (AlgebraMap, conjugate_bimodule, opposite_map_module,
                                    pullback_algebra, pullback_bimodule, pullback_module)
from floerkit.lincomb import Element
from floerkit.synthetic import (catalog_algebra, random_algebra_map, random_positive_element,
                                random_unipotent)

from oracles import HALF, ONE, apply_op

seeds = st.integers(min_value=0, max_value=10**6)
kinds = st.sampled_from(["field", "split2", "dual", "cubic", "triangular"])


def _unit(g):
    return frozenset({(Fraction(0), g)})


def _blocks(k):
    """Compositions of range(k) into consecutive nonempty blocks."""
    if k == 0:
        yield ()
        return
    for cuts in product((0, 1), repeat=k - 1):
        out, start = [], 0
        for i, c in enumerate(cuts, 1):
            if c:
                out.append((start, i))
                start = i
        out.append((start, k))
        yield tuple(out)


def naive_map_defect(m_new: dict, m_old: dict, g: dict, xs, E) -> frozenset:
    """sum g(.., m'(..), ..) + sum m(g(B_1), .., g(B_j)) at one input tuple."""
    k = len(xs)
    X = [_unit(x) for x in xs]
    acc: set = set()
    for i in range(k + 1):
        for l in range(k - i + 1):
            inner = apply_op(m_new, l, X[i:i + l], E)
            if inner:
                acc ^= apply_op(g, k - l + 1, X[:i] + [inner] + X[i + l:], E)
    for blocks in _blocks(k):
        args = [apply_op(g, b - a, X[a:b], E) for a, b in blocks]
        if all(args):
            acc ^= apply_op(m_old, len(blocks), args, E)
    return frozenset(acc)


def pulled(seed, kind, monoid=ONE, cutoff=3):
    rng = random.Random(seed)
    dlevel = 1 if monoid == ONE else Fraction(1, 2)
    base = catalog_algebra(kind, monoid, cutoff, dlevel)
    g = random_algebra_map(base.algebra, rng, min_level=1)
    return rng, base, g, pullback_algebra(base.algebra, g, "C'")


@settings(max_examples=15, deadline=None)
@given(seeds, kinds)
def test_pullback_is_an_algebra_intertwined_by_the_map(seed, kind):
    _, base, g, A2 = pulled(seed, kind)
    assert check_algebra_relations(A2) is None
    A = base.algebra
    for k in range(4):
        for xs in product(A.basis.generators, repeat=k):
            assert not naive_map_defect(A2.ops.data, A.ops.data, g.components.data, xs, A.cutoff)


@settings(max_examples=10, deadline=None)
@given(seeds, kinds)
def test_pullback_over_half_levels(seed, kind):
    _, base, g, A2 = pulled(seed, kind, HALF, 2)
    assert check_algebra_relations(A2) is None
    assert check_module_relations(pullback_module(regular_module(base.algebra), g, A2)) is None


@settings(max_examples=10, deadline=None)
@given(seeds, kinds)
def test_pullback_of_modules_and_bimodules(seed, kind):
    rng, base, g, A2 = pulled(seed, kind)
    A = base.algebra
    M = pullback_module(regular_module(A), g, A2)
    assert M.algebra == A2
    assert check_module_relations(M) is None
    g2 = random_algebra_map(A, rng, min_level=1)
    A3 = pullback_algebra(A, g2, "C''")
    B = pullback_bimodule(diagonal_bimodule(A), g, A2, g2, A3)
    assert check_bimodule_relations(B) is None
    N = opposite_map_module(regular_module(opposite_algebra(A)), g2, A3)
    assert N.algebra == opposite_algebra(A3)
    assert check_module_relations(N) is None


def test_pullback_along_identity_changes_nothing():
    A = catalog_algebra("cubic", ONE, 3, 1).algebra
    ident = AlgebraMap(A.basis, A.basis, GappedOperationTable(
        {(1, (g,)): frozenset({(Fraction(0), g)}) for g in A.basis}))
    assert pullback_algebra(A, ident).ops == A.ops


def test_algebra_map_rejects_constant_term():
    A = catalog_algebra("field", ONE, 3).algebra
    with pytest.raises(StructureError):
        AlgebraMap(A.basis, A.basis, GappedOperationTable({(0, ()): frozenset({(Fraction(1), "e")})}))


@settings(max_examples=10, deadline=None)
@given(seeds, kinds)
def test_conjugation_intertwines(seed, kind):
    rng = random.Random(seed)
    A = catalog_algebra(kind, ONE, 3, 1).algebra
    B = diagonal_bimodule(A)
    psi = random_unipotent(B.basis, rng, ONE, 3, 0.6)
    B2 = conjugate_bimodule(B, psi)
    assert check_bimodule_relations(B2) is None
    for (sig, inputs) in set(B.ops.data) | set(B2.ops.data):
        k1 = sig[0]
        args = [Element(A.basis, _unit(x), 3, ONE) for x in inputs]
        y = args[k1]
        lhs = psi(evaluate(B2, sig, y, args[:k1] + args[k1 + 1:]))
        rhs = evaluate(B, sig, psi(y), args[:k1] + args[k1 + 1:])
        assert lhs == rhs


@settings(max_examples=10, deadline=None)
@given(seeds, kinds)
def test_pullback_then_twist_is_still_valid(seed, kind):
    from floerkit.ainfty import twist_module
    rng, base, g, A2 = pulled(seed, kind)
    M = pullback_module(regular_module(base.algebra), g, A2)
    M2 = twist_module(M, random_positive_element(A2.basis, rng, ONE, 3))
    assert check_algebra_relations(M2.algebra) is None
    assert check_module_relations(M2) is None
