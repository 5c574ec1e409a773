import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from floerkit.ainfty import (AInftyHomomorphism, FilteredAlgebra, FilteredBimodule,
                             FilteredRightModule, GappedOperationTable, MCViolation,
                             StructureError, algebra_residuals, bimodule_residuals,
                             bimodule_twisted_differential, check_algebra_relations,
                             check_bimodule_relations, check_homomorphism,
                             check_module_relations, diagonal_bimodule, evaluate,
                             homomorphism_residuals, module_residuals, opposite_algebra,
                             realize_phi_b, regular_module, twist_algebra, twist_bimodule,
                             twist_module, twisted_differential, unit_defect)
from floerkit.constructions import transfer_module
from floerkit.lincomb import Basis, BasisMismatch, Element, LinearMap, compose
from floerkit.synthetic import (catalog_algebra, cyclic_instance, gluing_instance,
                                positive_levels, random_homomorphism, random_positive_element)

from oracles import (HALF, ONE, algebra_slots, bimodule_slots, build_f1, first_failure, gen,
                     module_slots, naive_algebra_residuals, naive_bimodule_residuals,
                     naive_homomorphism_residuals, naive_module_residuals, naive_unit_defect_lhs)

seeds = st.integers(min_value=0, max_value=10**6)


def terms_of(naive: dict) -> dict:
    return {k: v.terms for k, v in naive.items()}


def identity_table(basis):
    return GappedOperationTable({(0, (g,)): frozenset({(Fraction(0), g)}) for g in basis})


def toggle(table, sig, inputs, level, out):
    return table.replace(sig, inputs, set(table.get(sig, inputs)) ^ {(Fraction(level), out)})


def one_gen_algebra(rows, cutoff=4):
    return FilteredAlgebra(Basis(("e",)), GappedOperationTable.from_entries(rows), ONE, cutoff)


# --- tables and evaluation -------------------------------------------------

def test_table_rejects_levels_outside_the_monoid_or_cutoff():
    with pytest.raises(StructureError):
        one_gen_algebra([(2, Fraction(1, 2), ("e", "e"), "e")])
    with pytest.raises(StructureError):
        one_gen_algebra([(2, 4, ("e", "e"), "e")])
    with pytest.raises(StructureError):
        one_gen_algebra([(2, 0, ("e",), "e")])


def test_entries_round_trip():
    M, _ = build_f1()
    again = GappedOperationTable.from_entries(M.ops.entries())
    assert again == M.ops


def test_evaluate_product_adds_levels():
    A = FilteredAlgebra(Basis(("e",)), GappedOperationTable.from_entries([(2, 0, ("e", "e"), "e")]),
                        HALF, 4)
    half_e = A.element([(Fraction(1, 2), "e")])
    assert evaluate(A, 2, None, [half_e, half_e]) == A.element([(1, "e")])


def test_evaluate_drops_terms_at_or_above_cutoff():
    A = one_gen_algebra([(2, 3, ("e", "e"), "e")])
    x = A.element([(1, "e")])
    assert evaluate(A, 2, None, [x, x]) == A.zero()


def test_evaluate_module_operation():
    M, one = build_f1()
    p = gen(M.algebra.basis, "p", 4, ONE)
    assert evaluate(M, 1, one, [p]) == M.element([(0, "v")])
    assert evaluate(M, 0, one, []) == M.element([(1, "v")])


def test_evaluate_rejects_wrong_space():
    M, one = build_f1()
    with pytest.raises(BasisMismatch):
        evaluate(M, 1, one, [one])


# --- algebra relations -----------------------------------------------------

def test_idempotent_passes():
    assert check_algebra_relations(one_gen_algebra([(2, 0, ("e", "e"), "e")])) is None


def test_square_zero_differential_passes():
    A = FilteredAlgebra(Basis(("x", "y")), GappedOperationTable.from_entries([(1, 0, ("x",), "y")]),
                        ONE, 4)
    assert check_algebra_relations(A) is None


def test_differential_squaring_to_identity_fails_at_arity_one():
    A = FilteredAlgebra(Basis(("x", "y")), GappedOperationTable.from_entries([
        (1, 0, ("x",), "y"), (1, 0, ("y",), "x")]), ONE, 4)
    cex = check_algebra_relations(A)
    assert (cex.level, cex.signature, cex.inputs, cex.residual) == (0, 1, ("x",), ("x",))
    assert "arity 1" in cex.render()


def test_f1_algebra_passes():
    M, _ = build_f1()
    assert check_algebra_relations(M.algebra) is None


def test_check_below_smaller_cutoff():
    A = FilteredAlgebra(Basis(("x", "y")), GappedOperationTable.from_entries([
        (1, 1, ("x",), "y"), (1, 1, ("y",), "x")]), ONE, 4)
    assert check_algebra_relations(A, 2) is None
    assert check_algebra_relations(A).level == 2
    with pytest.raises(StructureError):
        check_algebra_relations(A, 5)


def corrupt_table(table, slot_bases, out_basis, levels, rng, max_sig):
    sig = rng.randint(0, max_sig)
    inputs = tuple(rng.choice(b.generators) for b in slot_bases(sig))
    return toggle(table, sig, inputs, rng.choice(levels), rng.choice(out_basis.generators))


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_algebra_checker_matches_naive_expansion(seed):
    rng = random.Random(seed)
    M = cyclic_instance(rng, ONE, 3).module
    A = M.algebra
    assert algebra_residuals(A) == {}
    assert naive_algebra_residuals(A) == {}
    levels = list(A.monoid.levels(A.cutoff))
    bad = FilteredAlgebra(A.basis, corrupt_table(A.ops, algebra_slots(A), A.basis, levels, rng,
                                                 A.ops.max_arity), A.monoid, A.cutoff)
    naive = naive_algebra_residuals(bad)
    assert algebra_residuals(bad) == terms_of(naive)
    cex = check_algebra_relations(bad)
    expect = first_failure(naive, algebra_slots(bad))
    if expect is None:
        assert cex is None
    else:
        assert (cex.level, cex.signature, cex.inputs, frozenset(cex.residual)) == expect


# --- module relations ------------------------------------------------------

def test_f1_module_passes():
    M, _ = build_f1()
    assert check_module_relations(M) is None


def test_zero_module_passes():
    M, _ = build_f1()
    assert check_module_relations(FilteredRightModule(M.algebra, M.basis,
                                                      GappedOperationTable({}))) is None


def test_two_flip_corruption_fails_at_level_two_arity_zero():
    M, _ = build_f1()
    ops = toggle(toggle(M.ops, 0, ("w",), 1, "w"), 0, ("v",), 1, "v")
    cex = check_module_relations(FilteredRightModule(M.algebra, M.basis, ops))
    assert (cex.level, cex.signature, cex.inputs, cex.residual) == (2, 0, ("w",), ("w",))


def test_single_flip_corruption_fails_first_at_level_one():
    # n_0(w) = T w + T v: the term n_1(T w; p) = T v is not cancelled at level 1
    M, _ = build_f1()
    bad = FilteredRightModule(M.algebra, M.basis, toggle(M.ops, 0, ("w",), 1, "w"))
    cex = check_module_relations(bad)
    assert (cex.level, cex.signature, cex.inputs, cex.residual) == (1, 1, ("w", "p"), ("v",))
    naive = naive_module_residuals(bad)
    assert first_failure(naive, module_slots(bad)) == (1, 1, ("w", "p"), frozenset({"v"}))
    # the level-2 arity-0 instance fails too, with residual w + v
    assert naive[(0, ("w",))].component(2) == frozenset({"w", "v"})


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_module_checker_matches_naive_expansion(seed):
    rng = random.Random(seed)
    M = cyclic_instance(rng, ONE, 3).module
    assert module_residuals(M) == {} == naive_module_residuals(M)
    levels = list(M.monoid.levels(M.cutoff))
    bad = FilteredRightModule(M.algebra, M.basis,
                              corrupt_table(M.ops, module_slots(M), M.basis, levels, rng,
                                            M.ops.max_arity))
    naive = naive_module_residuals(bad)
    assert module_residuals(bad) == terms_of(naive)
    cex = check_module_relations(bad)
    expect = first_failure(naive, module_slots(bad))
    if expect is None:
        assert cex is None
    else:
        assert (cex.level, cex.signature, cex.inputs, frozenset(cex.residual)) == expect


# --- bimodules -------------------------------------------------------------

def test_diagonal_bimodule_of_f1_passes():
    M, _ = build_f1()
    assert check_bimodule_relations(diagonal_bimodule(M.algebra)) is None


def test_zero_bimodule_passes():
    M, _ = build_f1()
    B = FilteredBimodule(M.algebra, M.algebra, M.basis, GappedOperationTable({}))
    assert check_bimodule_relations(B) is None


def test_bimodule_twisted_differential_on_f1():
    M, _ = build_f1()
    A = M.algebra
    B = diagonal_bimodule(A)
    b = A.element([(1, "p")])
    delta = bimodule_twisted_differential(B, b, b)
    assert delta.is_zero()
    assert compose(delta, delta).is_zero()
    assert bimodule_twisted_differential(B, A.zero(), A.zero()).is_zero()


def test_bimodule_twisted_differential_requires_mc():
    M, _ = build_f1()
    A = M.algebra
    B = diagonal_bimodule(A)
    with pytest.raises(MCViolation):
        bimodule_twisted_differential(B, A.element([(1, "q")]), A.zero())


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_bimodule_checker_matches_naive_expansion(seed):
    rng = random.Random(seed)
    B = gluing_instance(rng, ONE, 2).tensor.bimodule
    assert bimodule_residuals(B) == {} == naive_bimodule_residuals(B)
    levels = list(B.monoid.levels(B.cutoff))
    sig = rng.choice([(0, 0), (1, 0), (0, 1), (1, 1)])
    inputs = tuple(rng.choice(b.generators) for b in bimodule_slots(B)(sig))
    ops = toggle(B.ops, sig, inputs, rng.choice(levels), rng.choice(B.basis.generators))
    bad = FilteredBimodule(B.left, B.right, B.basis, ops)
    naive = naive_bimodule_residuals(bad)
    assert bimodule_residuals(bad) == terms_of(naive)
    cex = check_bimodule_relations(bad)
    expect = first_failure(naive, bimodule_slots(bad))
    if expect is None:
        assert cex is None
    else:
        assert (cex.level, cex.signature, cex.inputs, frozenset(cex.residual)) == expect


# --- twisting --------------------------------------------------------------

def test_twist_by_zero_is_identity():
    M, _ = build_f1()
    A = M.algebra
    assert twist_algebra(A, A.zero()).ops == A.ops
    assert twist_module(M, A.zero()).ops == M.ops


def test_f1_twist_by_bounding_cochain_is_flat():
    M, _ = build_f1()
    A = M.algebra
    b = A.element([(1, "p")])
    assert twist_algebra(A, b).curvature() == A.zero()
    assert twisted_differential(M, b).is_zero()


def test_f1_bare_differential():
    M, one = build_f1()
    d = twisted_differential(M, M.algebra.zero())
    assert d(one) == M.element([(1, "v")])


def test_twisted_differential_rejects_non_mc():
    M, _ = build_f1()
    with pytest.raises(MCViolation):
        twisted_differential(M, M.algebra.element([(1, "q")]))
    twisted_differential(M, M.algebra.element([(1, "q")]), check_mc=False)


def test_twist_rejects_non_positive_element():
    M, _ = build_f1()
    with pytest.raises(MCViolation):
        twist_algebra(M.algebra, M.algebra.element([(0, "p")]))


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_twisting_preserves_relations(seed):
    rng = random.Random(seed)
    M = cyclic_instance(rng, HALF, 2).module
    b = random_positive_element(M.algebra.basis, rng, HALF, 2)
    M2 = twist_module(M, b)
    assert check_algebra_relations(M2.algebra) is None
    assert check_module_relations(M2) is None
    B = twist_bimodule(diagonal_bimodule(M.algebra), b, b)
    assert check_bimodule_relations(B) is None


# --- unit defect -----------------------------------------------------------

def test_unit_defect_vanishes_without_curvature():
    M, _ = build_f1()
    A = M.algebra
    q = A.element([(0, "q")])
    lhs, rhs = unit_defect(A, q, 1, "p", ["q"])
    assert lhs == rhs == A.zero()


def test_unit_defect_on_curved_twist():
    M, _ = build_f1()
    A = twist_algebra(M.algebra, M.algebra.element([(1, "q")]))
    assert A.curvature() == A.element([(2, "q")])
    q = A.element([(0, "q")])
    lhs, rhs = unit_defect(A, q, 0, "q", [])
    assert lhs == rhs == A.element([(2, "q")])
    assert naive_unit_defect_lhs(A, "q", ()) == lhs


def test_unit_defect_rejects_non_unit():
    M, _ = build_f1()
    with pytest.raises(StructureError):
        unit_defect(M.algebra, M.algebra.element([(0, "p")]), 0, "q", [])
    with pytest.raises(StructureError):
        unit_defect(M.algebra, M.algebra.element([(0, "q")]), 1, "q", [])


@settings(max_examples=10, deadline=None)
@given(seeds, st.sampled_from(["field", "dual", "cubic", "triangular"]))
def test_unit_defect_identity_on_curved_algebras(seed, kind):
    rng = random.Random(seed)
    base = catalog_algebra(kind, ONE, 3, 1 if kind in ("dual", "cubic", "triangular") else None)
    A = twist_algebra(base.algebra, random_positive_element(base.algebra.basis, rng, ONE, 3, 0.5))
    for k in range(3):
        xs = [rng.choice(A.basis.generators) for _ in range(k)]
        y = rng.choice(A.basis.generators)
        lhs, rhs = unit_defect(A, base.unit, k, y, xs)
        assert lhs == rhs
        assert naive_unit_defect_lhs(A, y, tuple(xs)) == lhs


# --- opposite --------------------------------------------------------------

def test_opposite_product_on_f1():
    M, _ = build_f1()
    A = M.algebra
    nc = FilteredAlgebra(A.basis, GappedOperationTable.from_entries([(2, 0, ("p", "q"), "p")]),
                         ONE, 4)
    op = opposite_algebra(nc)
    p, q = A.element([(0, "p")]), A.element([(0, "q")])
    assert evaluate(op, 2, None, [q, p]) == p
    assert evaluate(op, 2, None, [p, q]) == A.zero()


def test_double_opposite_is_identity():
    M, _ = build_f1()
    assert opposite_algebra(opposite_algebra(M.algebra)) == M.algebra


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_opposite_mirrors_residuals(seed):
    rng = random.Random(seed)
    A = cyclic_instance(rng, ONE, 3).module.algebra
    levels = list(A.monoid.levels(A.cutoff))
    bad = FilteredAlgebra(A.basis, corrupt_table(A.ops, algebra_slots(A), A.basis, levels, rng,
                                                 A.ops.max_arity), A.monoid, A.cutoff)
    res = algebra_residuals(bad)
    mirrored = {(k, tuple(reversed(i))): t for (k, i), t in res.items()}
    assert algebra_residuals(opposite_algebra(bad)) == mirrored
    assert (check_algebra_relations(bad) is None) == (check_algebra_relations(opposite_algebra(bad)) is None)


# --- homomorphisms ---------------------------------------------------------

def test_identity_homomorphism_passes():
    M, _ = build_f1()
    assert check_homomorphism(AInftyHomomorphism(M, M, identity_table(M.basis))) is None


def test_identity_into_perturbed_copy_fails():
    M, _ = build_f1()
    other = FilteredRightModule(M.algebra, M.basis, toggle(M.ops, 0, ("w",), 1, "v"))
    assert check_module_relations(other) is None
    cex = check_homomorphism(AInftyHomomorphism(M, other, identity_table(M.basis)))
    assert (cex.level, cex.signature, cex.inputs, cex.residual) == (1, 0, ("w",), ("v",))


def test_homomorphism_requires_same_algebra():
    M, _ = build_f1()
    A2 = opposite_algebra(FilteredAlgebra(M.algebra.basis, GappedOperationTable.from_entries([
        (2, 0, ("p", "q"), "p")]), ONE, 4))
    N = FilteredRightModule(A2, M.basis, GappedOperationTable({}))
    with pytest.raises(StructureError):
        AInftyHomomorphism(M, N, identity_table(M.basis))


def test_realize_identity_is_identity():
    M, _ = build_f1()
    hom = AInftyHomomorphism(M, M, identity_table(M.basis))
    ident = LinearMap.identity(M.basis, M.cutoff, M.monoid)
    assert realize_phi_b(hom, M.algebra.element([(1, "p")])) == ident
    assert realize_phi_b(hom, M.algebra.zero()) == ident


def transferred(seed):
    rng = random.Random(seed)
    inst = cyclic_instance(rng, ONE, 3)
    M = inst.module
    basis = Basis(tuple(f"z{i}" for i in range(len(M.basis))), name="Z")
    table = random_homomorphism(M, basis, rng, max_arity=2, scramble=rng.random() < 0.5)
    N, hom = transfer_module(M, basis, table, "Z")
    return rng, inst, N, hom


@settings(max_examples=4, deadline=None)
@given(seeds)
def test_transfer_gives_valid_homomorphism(seed):
    _, inst, N, hom = transferred(seed)
    assert check_module_relations(N) is None
    assert check_homomorphism(hom) is None
    assert homomorphism_residuals(hom) == {} == naive_homomorphism_residuals(hom)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_homomorphism_checker_matches_naive_expansion(seed):
    rng, inst, N, hom = transferred(seed)
    M = inst.module
    levels = positive_levels(M.monoid, M.cutoff)
    sig = rng.randint(0, 2)
    inputs = tuple(rng.choice(b.generators) for b in module_slots(N)(sig))
    comps = toggle(hom.components, sig, inputs, rng.choice(levels), rng.choice(M.basis.generators))
    bad = AInftyHomomorphism(N, M, comps)
    naive = naive_homomorphism_residuals(bad)
    assert homomorphism_residuals(bad) == terms_of(naive)
    cex = check_homomorphism(bad)
    expect = first_failure(naive, module_slots(N))
    if expect is None:
        assert cex is None
    else:
        assert (cex.level, cex.signature, cex.inputs, frozenset(cex.residual)) == expect


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_realized_homomorphism_is_chain_map(seed):
    from floerkit.mc import certify_cyclic, solve_bounding_cochain
    _, inst, N, hom = transferred(seed)
    M = inst.module
    b = solve_bounding_cochain(certify_cyclic(M, inst.one)).value
    f = realize_phi_b(hom, b)
    dN, dM = twisted_differential(N, b), twisted_differential(M, b)
    assert compose(dM, f) == compose(f, dN)


def test_regular_module_of_uncurved_algebra():
    M, _ = build_f1()
    R = regular_module(M.algebra)
    assert check_module_relations(R) is None
    assert evaluate(R, 1, gen(R.basis, "q", 4, ONE), [gen(R.basis, "p", 4, ONE)]) == \
        Element(R.basis, [(0, "p")], 4, ONE)
