"""Bounding cochains from cyclic elements.

Given a right module D over C and a cyclic element ``1`` of D, the equation
d^b(1) = 0 is solved level by level.  Writing b = sum_n T^{lam_n} b_n, the
coefficient of T^{lam_n} in d^b(1) is

    n_{1,0}(1_0; b_n) + (terms built only from b_1, ..., b_{n-1})

and the first map is invertible mod T, so each b_n is forced.  The solution
is then a Maurer-Cartan element of C, and an exhaustive search over all
G-supported candidates is provided to confirm that it is the only one.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterator

from .ainfty import (FilteredAlgebra, FilteredRightModule, InconsistentInput, StructureError,
                     check_module_relations, mc_residual, twisted_differential)
from .lincomb import Element, LinearMap, gf2_inverse, xor_into
from .novikov import as_rational, format_rational

ORACLE_BUDGET_ENV = "FLOERKIT_ORACLE_BUDGET"
DEFAULT_ORACLE_BUDGET = 1 << 20


class NotCyclic(ValueError):
    """The proposed element fails one of the two cyclicity conditions."""

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class OracleBudgetExceeded(RuntimeError):
    def __init__(self, required, budget):
        super().__init__(f"exhaustive search needs {required} candidates, budget is {budget} "
                         f"(raise it with {ORACLE_BUDGET_ENV})")
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class CyclicElementCertificate:
    module: FilteredRightModule
    one: Element
    leading_map: LinearMap       # x -> n_{1,0}(1_0; x), C-bar -> D-bar at level 0
    leading_inverse: LinearMap   # its inverse over Z/2


@dataclass(frozen=True)
class BoundingCochain:
    value: Element
    certified_cutoff: Fraction
    trace: tuple = field(default=(), compare=False)

    def component(self, level) -> frozenset:
        return self.value.component(level)

    def render_trace(self) -> str:
        return "\n".join(_trace_line(*row) for row in self.trace)


def _trace_line(level, forcing, bn) -> str:
    def vec(gens):
        return " + ".join(gens) if gens else "0"
    return f"level {format_rational(level)}: forcing {vec(forcing)}; b_n = {vec(bn)}"


@dataclass(frozen=True)
class MCResidual:
    """First nonzero level of sum_k m_k(b, ..., b)."""

    level: Fraction
    residual: Element

    def render(self) -> str:
        top = sorted(self.residual.component(self.level),
                     key=self.residual.basis.index)
        return (f"Maurer-Cartan residual at level {format_rational(self.level)}: "
                f"{' + '.join(top)}")

    def __str__(self):
        return self.render()


def _level_zero_part(x: Element) -> frozenset:
    return x.component(0)


def certify_cyclic(M: FilteredRightModule, one: Element, *,
                   check_relations: bool = True) -> CyclicElementCertificate:
    """Check both cyclicity conditions and invert the leading map mod T."""
    if one.basis != M.basis:
        raise StructureError("cyclic element must live in the module")
    if check_relations:
        cex = check_module_relations(M)
        if cex is not None:
            raise StructureError(f"module relations fail: {cex}")
    one0 = _level_zero_part(one)
    C, D = M.algebra.basis, M.basis
    cols: dict = {}
    for (sig, inputs), terms in M.ops.data.items():
        if sig != 1 or inputs[0] not in one0:
            continue
        lead = {(Fraction(0), g) for lvl, g in terms if lvl == 0}
        xor_into(cols.setdefault(inputs[1], set()), lead)
    leading = LinearMap(C, D, {g: frozenset(v) for g, v in cols.items()}, M.cutoff, M.monoid,
                        check=False)
    mat = leading.residue_matrix()
    inv = gf2_inverse(mat) if len(C) == len(D) else None
    if inv is None:
        raise NotCyclic("cyclic condition (1) fails: x -> n_{1,0}(1_0; x) is not an "
                        "isomorphism mod T", 1)
    inverse = LinearMap(D, C, {d: frozenset((Fraction(0), C.generators[i])
                                            for i in range(len(C)) if inv[i][j])
                               for j, d in enumerate(D)}, M.cutoff, M.monoid, check=False)
    lvl0 = set()
    for (sig, inputs), terms in M.ops.data.items():
        if sig == 0 and inputs[0] in one0:
            xor_into(lvl0, (g for lvl, g in terms if lvl == 0))
    if lvl0:
        raise NotCyclic("cyclic condition (2) fails: n_0(1) has a level-0 part "
                        f"({' + '.join(sorted(lvl0, key=D.index))})", 2)
    return CyclicElementCertificate(M, one, leading, inverse)


@dataclass(frozen=True)
class Decomposition:
    """lam_n = lam_m + lam_{n0} + sum lam_{n_i} for one table entry."""

    k: int
    operation_level: Fraction
    unit_level: Fraction
    input_levels: tuple[Fraction, ...]

    def is_excluded(self, target) -> bool:
        return (self.k == 1 and self.operation_level == 0 and self.unit_level == 0
                and self.input_levels == (target,))


def forcing_decompositions(M: FilteredRightModule, one: Element, b: Element,
                           target: Fraction) -> Iterator[tuple[Decomposition, tuple, tuple]]:
    """Every term of the forcing sum at ``target``.

    Yields ``(decomposition, inputs, outputs)`` where ``outputs`` are the
    generators of the table entry at the operation level used.  Only levels
    of ``b`` strictly below ``target`` are used, so the excluded term never
    arises; the solver asserts this on every yielded decomposition.
    """
    one_levels: dict = {}
    for lvl, g in one.terms:
        one_levels.setdefault(g, []).append(lvl)
    b_levels: dict = {}
    for lvl, g in b.terms:
        if lvl < target:
            b_levels.setdefault(g, []).append(lvl)
    for (sig, inputs), terms in M.ops.data.items():
        by_level: dict = {}
        for lvl, g in terms:
            if lvl <= target:
                by_level.setdefault(lvl, []).append(g)
        if not by_level:
            continue
        y_opts = one_levels.get(inputs[0])
        if not y_opts:
            continue
        x_opts = [b_levels.get(x) for x in inputs[1:]]
        if any(not o for o in x_opts):
            continue
        for lm, outs in by_level.items():
            for l0 in y_opts:
                rest = target - lm - l0
                if rest < 0:
                    continue
                for combo in _compositions(x_opts, rest):
                    yield Decomposition(sig, lm, l0, combo), inputs, tuple(outs)


def _compositions(options, total) -> Iterator[tuple]:
    if not options:
        if total == 0:
            yield ()
        return
    head, tail = options[0], options[1:]
    for lvl in head:
        if lvl <= total:
            for rest in _compositions(tail, total - lvl):
                yield (lvl,) + rest


def solve_bounding_cochain(cert: CyclicElementCertificate, E=None, *,
                           check_mc: bool = True) -> BoundingCochain:
    """Solve d^b(1) = 0 level by level below ``E`` (default: the cutoff)."""
    M = cert.module
    E = M.cutoff if E is None else as_rational(E)
    if E > M.cutoff:
        raise StructureError("solver cutoff exceeds the module cutoff")
    A = M.algebra
    b = Element.zero(A.basis, M.cutoff, M.monoid)
    trace = []
    for lam in M.monoid.levels(E)[1:]:
        forcing: set = set()
        for dec, inputs, outs in forcing_decompositions(M, cert.one, b, lam):
            assert not dec.is_excluded(lam), "excluded term reached the forcing sum"
            xor_into(forcing, outs)
        forcing_el = Element(M.basis, frozenset((Fraction(0), g) for g in forcing),
                             M.cutoff, M.monoid, check=False)
        bn = cert.leading_inverse(forcing_el).component(0)
        if bn:
            b = b + Element(A.basis, frozenset((lam, g) for g in bn), M.cutoff, M.monoid,
                            check=False)
        trace.append((lam, tuple(sorted(forcing, key=M.basis.index)),
                      tuple(sorted(bn, key=A.basis.index))))
        if check_mc:
            res = mc_residual(A, b, E)
            if lam in {lvl for lvl, _ in res.terms}:
                raise InconsistentInput(
                    f"Maurer-Cartan equation fails at level {format_rational(lam)} while "
                    "solving; the module relations or cyclicity data are inconsistent",
                    level=lam, stage="solve")
    return BoundingCochain(b, E, tuple(trace))


def unit_annihilation(M: FilteredRightModule, b: Element, one: Element) -> Element:
    """d^b(1), the quantity the solver drives to zero."""
    return twisted_differential(M, b, check_mc=False)(one)


def verify_mc(A: FilteredAlgebra, b: Element, E=None) -> MCResidual | None:
    """First nonzero level of sum_k m_k(b..b) below ``E``; ``None`` means pass."""
    if b.terms and min(lvl for lvl, _ in b.terms) <= 0:
        raise StructureError("b must have positive valuation")
    res = mc_residual(A, b, E)
    if not res:
        return None
    return MCResidual(res.valuation, res)


def oracle_budget() -> int:
    raw = os.environ.get(ORACLE_BUDGET_ENV)
    if raw is None:
        return DEFAULT_ORACLE_BUDGET
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{ORACLE_BUDGET_ENV} must be an integer, got {raw!r}") from None


def oracle_bounding_cochains(M: FilteredRightModule, one: Element, E=None, *,
                             budget: int | None = None, prune: bool = True) -> list[Element]:
    """All G-supported b with val(b) > 0, MC(b) = 0 and d^b(1) = 0 below ``E``.

    Candidates are assignments of a subset of C-bar to every level of
    G in (0, E).  With ``prune`` the search fixes levels in ascending order
    and discards a partial assignment as soon as the residuals at its top
    level are nonzero (they cannot change once that level is fixed).
    """
    E = M.cutoff if E is None else as_rational(E)
    if E > M.cutoff:
        raise StructureError("oracle cutoff exceeds the module cutoff")
    budget = oracle_budget() if budget is None else budget
    A = M.algebra
    levels = M.monoid.levels(E)[1:]
    gens = A.basis.generators
    required = 2 ** (len(gens) * len(levels))
    if required > budget:
        raise OracleBudgetExceeded(required, budget)
    subsets = [frozenset(g for g, bit in zip(gens, bits) if bit)
               for bits in product((0, 1), repeat=len(gens))]

    def residual_levels(b: Element) -> set:
        mc = mc_residual(A, b, E)
        dd = twisted_differential(M, b, check_mc=False)(one)
        return {lvl for lvl, _ in mc.terms} | {lvl for lvl, _ in dd.terms if lvl < E}

    def make(assign) -> Element:
        return Element(A.basis, frozenset((lvl, g) for lvl, s in zip(levels, assign) for g in s),
                       M.cutoff, M.monoid, check=False)

    found = []
    if not prune:
        for assign in product(subsets, repeat=len(levels)):
            b = make(assign)
            if not residual_levels(b):
                found.append(b)
    else:
        # the level-0 equations do not involve b at all
        if residual_levels(make(())) & {Fraction(0)}:
            return []

        def rec(assign):
            if len(assign) == len(levels):
                found.append(make(assign))
                return
            lam = levels[len(assign)]
            for s in subsets:
                nxt = assign + (s,)
                if lam not in residual_levels(make(nxt)):
                    rec(nxt)

        rec(())
    found.sort(key=lambda b: sorted((lvl, A.basis.index(g)) for lvl, g in b.terms))
    return found
