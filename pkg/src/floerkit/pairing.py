"""Floer complexes over Lambda_0 and the gluing map out of a module pair.

Data
----
* ``FloerComplexData``: a generator set with weighted boundary counts; the
  differential sends a_- to sum T^E #(a_-, a_+; E) a_+.
* ``GluingTensor``: components Phi_{k1,k2} with input slots
  ``(y1, x1_1..x1_k1, a, y2, x2_1..x2_k2)`` where y1 is in the first module,
  the x1 in its algebra, a in the bimodule, y2 in the second module and the
  x2 in the right algebra of the bimodule; outputs lie in the Floer complex.

The second module's x-string enters the compatibility relation reversed,
so it is a right module over the opposite of the bimodule's right algebra.
A second module written over the right algebra itself is also accepted;
the relation is evaluated with the same slot conventions either way.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .ainfty import (Counterexample, FilteredBimodule, FilteredRightModule, GappedOperationTable,
                     InconsistentInput, MCViolation, StructureError, _clean, _coeff_index,
                     _first_failure, _insert, _splice, _validate_table, bimodule_twisted_differential,
                     check_algebra_relations, check_bimodule_relations, check_module_relations,
                     opposite_algebra, require_mc, twisted_differential)
from .lincomb import (Basis, Element, HomologyReport, LinearMap, NotAComplex, compose, homology,
                      square_zero_witness, xor_into)
from .mc import (BoundingCochain, CyclicElementCertificate, NotCyclic, certify_cyclic,
                 solve_bounding_cochain, verify_mc)
from .novikov import DiscreteMonoid, as_rational, format_rational


@dataclass(frozen=True)
class FloerComplexData:
    """Generators and weighted boundary counts ``(a_-, a_+) -> [(energy, count), ...]``."""

    generators: Basis
    weights: Mapping
    monoid: DiscreteMonoid
    cutoff: Fraction
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cutoff", as_rational(self.cutoff))
        clean = {}
        for (a, b), rows in self.weights.items():
            if a not in self.generators or b not in self.generators:
                raise StructureError(f"boundary weight ({a}, {b}) names an unknown generator")
            out = []
            for energy, count in rows:
                energy = as_rational(energy)
                if not self.monoid.contains(energy):
                    raise StructureError(f"energy {format_rational(energy)} is not in {self.monoid!r}")
                if energy <= 0 and a != b:
                    raise StructureError(f"boundary weight ({a}, {b}) has non-positive energy")
                if energy >= self.cutoff:
                    raise StructureError(f"energy {format_rational(energy)} is not below the cutoff")
                out.append((energy, int(count)))
            clean[(a, b)] = tuple(sorted(out))
        object.__setattr__(self, "weights", clean)

    def __hash__(self):
        return hash((self.generators, frozenset(self.weights.items()), self.cutoff))


def floer_from_map(d: LinearMap, name: str = "") -> FloerComplexData:
    weights: dict = {}
    for col, terms in d.columns.items():
        for lvl, row in terms:
            weights.setdefault((col, row), []).append((lvl, 1))
    return FloerComplexData(d.domain, weights, d.monoid, d.cutoff, name)


def realize_floer_boundary(F: FloerComplexData, *, check: bool = True) -> LinearMap:
    """The matrix of the boundary operator; counts are reduced mod 2."""
    cols: dict = {}
    for (a, b), rows in F.weights.items():
        cell = cols.setdefault(a, set())
        for energy, count in rows:
            if count % 2:
                xor_into(cell, ((energy, b),))
    d = LinearMap(F.generators, F.generators, {g: frozenset(v) for g, v in cols.items()},
                  F.cutoff, F.monoid, check=False)
    if check:
        wit = square_zero_witness(d)
        if wit is not None:
            lvl, g, residual = wit
            raise NotAComplex(f"boundary squares to a nonzero map: generator {g} at level "
                              f"{format_rational(lvl)} (residual {' + '.join(sorted(residual))})",
                              g, lvl, residual)
    return d


def _same_right_algebra(module2: FilteredRightModule, bimodule: FilteredBimodule) -> bool:
    return module2.algebra == bimodule.right or module2.algebra == opposite_algebra(bimodule.right)


@dataclass(frozen=True)
class GluingTensor:
    module1: FilteredRightModule
    bimodule: FilteredBimodule
    module2: FilteredRightModule
    floer: FloerComplexData
    components: GappedOperationTable
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.module1.algebra != self.bimodule.left:
            raise StructureError("first module must be over the bimodule's left algebra")
        if not _same_right_algebra(self.module2, self.bimodule):
            raise StructureError("second module must be over the bimodule's right algebra "
                                 "or its opposite")
        if self.floer.cutoff != self.cutoff or self.floer.monoid != self.monoid:
            raise StructureError("Floer data must share monoid and cutoff with the modules")

        def layout(sig):
            if not (isinstance(sig, tuple) and len(sig) == 2 and min(sig) >= 0):
                return None
            return self.slot_bases(sig)

        _validate_table(self.components, layout, self.floer.generators, self.monoid, self.cutoff,
                        "gluing tensor")

    @property
    def monoid(self):
        return self.bimodule.monoid

    @property
    def cutoff(self):
        return self.bimodule.cutoff

    def slot_bases(self, sig) -> list:
        k1, k2 = sig
        return ([self.module1.basis] + [self.bimodule.left.basis] * k1 + [self.bimodule.basis]
                + [self.module2.basis] + [self.bimodule.right.basis] * k2)


def pairing_residuals(phi: GluingTensor, E=None, boundary: LinearMap | None = None) -> dict:
    """Sum of all six families of composites, keyed by ``((k1, k2), inputs)``."""
    E = phi.cutoff if E is None else as_rational(E)
    if E > phi.cutoff:
        raise StructureError("check cutoff exceeds the structure cutoff")
    d = boundary if boundary is not None else realize_floer_boundary(phi.floer, check=False)
    dtable = GappedOperationTable({("d", (a,)): terms for a, terms in d.columns.items()})
    B, M1, M2 = phi.bimodule, phi.module1, phi.module2
    Phi = phi.components
    acc: dict = {}
    # boundary applied to the output
    _insert(acc, dtable, lambda s: (0,), Phi, lambda osig, oin, i, isig, iin: (isig, iin), E)

    # bimodule action on a, eating a suffix of x1 and a prefix of x2
    def bimod(osig, oin, i, isig, iin):
        k1 = osig[0]
        j1 = isig[0]
        new = oin[:1 + k1] + iin[:j1 + 1] + (oin[2 + k1],) + iin[j1 + 1:] + oin[3 + k1:]
        return (k1 + isig[0], osig[1] + isig[1]), new

    _insert(acc, Phi, lambda s: (1 + s[0],), B.ops, bimod, E)
    # first module action on y1
    _insert(acc, Phi, lambda s: (0,), M1.ops,
            lambda osig, oin, i, isig, iin: ((osig[0] + isig, osig[1]), iin + oin[1:]), E)

    # second module action on y2, whose inputs come from the end of x2 in reverse
    def mod2(osig, oin, i, isig, iin):
        k1 = osig[0]
        new = oin[:2 + k1] + (iin[0],) + oin[3 + k1:] + tuple(reversed(iin[1:]))
        return (k1, osig[1] + isig), new

    _insert(acc, Phi, lambda s: (2 + s[0],), M2.ops, mod2, E)
    # algebra operations inside the x1 string and inside the x2 string
    _insert(acc, Phi, lambda s: range(1, 1 + s[0]), B.left.ops,
            lambda osig, oin, i, isig, iin: ((osig[0] - 1 + isig, osig[1]),
                                             _splice(osig, oin, i, isig, iin)), E)
    _insert(acc, Phi, lambda s: range(3 + s[0], 3 + s[0] + s[1]), B.right.ops,
            lambda osig, oin, i, isig, iin: ((osig[0], osig[1] - 1 + isig),
                                             _splice(osig, oin, i, isig, iin)), E)
    return _clean(acc)


def check_pairing_relation(phi: GluingTensor, E=None) -> Counterexample | None:
    """Compatibility of Phi with all structure maps; ``None`` means it holds below ``E``."""
    return _first_failure(pairing_residuals(phi, E), "pairing", phi.slot_bases)


def check_contexts(phi: GluingTensor) -> list[tuple[str, object]]:
    """Relation checks of every structure the tensor refers to; failures only."""
    out = []
    for stage, cex in (("algebra-1-relations", check_algebra_relations(phi.bimodule.left)),
                       ("algebra-2-relations", check_algebra_relations(phi.bimodule.right)),
                       ("module-1-relations", check_module_relations(phi.module1)),
                       ("bimodule-relations", check_bimodule_relations(phi.bimodule)),
                       ("module-2-relations", check_module_relations(phi.module2))):
        if cex is not None:
            out.append((stage, cex))
    return out


def _fill(phi: GluingTensor, one1: Element, b1: Element, one2: Element, b2: Element) -> LinearMap:
    idx_one1, idx_b1 = _coeff_index(one1), _coeff_index(b1)
    idx_one2, idx_b2 = _coeff_index(one2), _coeff_index(b2)
    E = phi.cutoff
    cols: dict = {}
    for (sig, inputs), terms in phi.components.data.items():
        k1, k2 = sig
        slots = ([idx_one1] + [idx_b1] * k1 + [None] + [idx_one2] + [idx_b2] * k2)
        levels = [Fraction(0)]
        for idx, g in zip(slots, inputs):
            if idx is None:
                continue
            lv = idx.get(g)
            if not lv:
                levels = []
                break
            levels = [a + c for a in levels for c in lv if a + c < E]
            if not levels:
                break
        if not levels:
            continue
        cell = cols.setdefault(inputs[1 + k1], set())
        for base in levels:
            xor_into(cell, ((base + lvl, o) for lvl, o in terms if base + lvl < E))
    return LinearMap(phi.bimodule.basis, phi.floer.generators,
                     {g: frozenset(v) for g, v in cols.items()}, E, phi.monoid, check=False)


def _first_level(f: LinearMap):
    return min((t[0] for terms in f.columns.values() for t in terms), default=None)


def induced_gluing_map(phi: GluingTensor, cert1: CyclicElementCertificate, b1: Element,
                       cert2: CyclicElementCertificate, b2: Element, *,
                       check_relation: bool = True) -> LinearMap:
    """Phi(a) = sum Phi_{k1,k2}(1_1; b1, .., b1; a; 1_2; b2, .., b2), verified to be a chain map.

    ``b1``/``b2`` may be plain elements or :class:`BoundingCochain` results.
    """
    b1 = b1.value if isinstance(b1, BoundingCochain) else b1
    b2 = b2.value if isinstance(b2, BoundingCochain) else b2
    if cert1.module != phi.module1 or cert2.module != phi.module2:
        raise StructureError("certificates do not belong to the tensor's modules")
    if check_relation:
        cex = check_pairing_relation(phi)
        if cex is not None:
            raise InconsistentInput(f"pairing relation fails: {cex}", level=cex.level,
                                    stage="pairing-relation")
    require_mc(phi.bimodule.left, b1, "b1")
    require_mc(phi.bimodule.right, b2, "b2")
    for i, (M, cert, b) in enumerate(((phi.module1, cert1, b1), (phi.module2, cert2, b2)), 1):
        left = twisted_differential(M, b, check_mc=False)(cert.one)
        if left:
            raise InconsistentInput(f"d^b(1) != 0 for module {i} at level "
                                    f"{format_rational(left.valuation)}",
                                    level=left.valuation, stage=f"unit-{i}")
    out = _fill(phi, cert1.one, b1, cert2.one, b2)
    delta = bimodule_twisted_differential(phi.bimodule, b1, b2, check_mc=False)
    boundary = realize_floer_boundary(phi.floer)
    residual = compose(boundary, out) + compose(out, delta)
    if not residual.is_zero():
        lvl = _first_level(residual)
        raise InconsistentInput(f"induced map is not a chain map: residual at level "
                                f"{format_rational(lvl)} ({residual.render()})",
                                level=lvl, stage="chain-map")
    return out


@dataclass(frozen=True)
class LeadingTerm:
    """Reduction of a map mod T."""

    rank: int
    size: int
    is_identity: bool

    @property
    def invertible(self) -> bool:
        return self.rank == self.size


def leading_term(f: LinearMap) -> LeadingTerm:
    from .lincomb import gf2_rank
    mat = f.residue_matrix()
    rank = gf2_rank(mat)
    same_names = f.domain.generators == f.codomain.generators
    ident = same_names and all(mat[i][j] == (i == j) for i in range(len(mat))
                               for j in range(len(f.domain)))
    return LeadingTerm(rank, max(len(f.domain), len(f.codomain)), ident)


class PipelineFailure(Exception):
    """A stage of the gluing verification failed."""

    def __init__(self, stage: str, message: str, witness=None, exit_code: int = 1):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.message = message
        self.witness = witness
        self.exit_code = exit_code


@dataclass(frozen=True)
class GluingReport:
    b1: BoundingCochain
    b2: BoundingCochain
    gluing_map: LinearMap
    leading: LeadingTerm
    pair_homology: HomologyReport
    floer_homology: HomologyReport

    @property
    def agree(self) -> bool:
        return self.pair_homology.agrees_with(self.floer_homology)

    def render(self) -> str:
        h = self.pair_homology
        tors = ", ".join(format_rational(t) for t in h.torsion_exponents)
        status = "isomorphism verified" if self.agree else "homologies differ"
        return "\n".join([
            f"b1 = {self.b1.value}",
            f"b2 = {self.b2.value}",
            f"pair homology: {self.pair_homology.render().splitlines()[0]}",
            f"floer homology: {self.floer_homology.render().splitlines()[0]}",
            f"{status}: free {h.free_rank}, torsion [{tors}]",
        ])


def verify_gluing(phi: GluingTensor, one1: Element, one2: Element, E=None) -> GluingReport:
    """Run every check from structure relations through the homology comparison.

    Raises :class:`PipelineFailure` naming the first stage that fails.
    """
    for stage, cex in check_contexts(phi):
        raise PipelineFailure(stage, str(cex), cex)
    try:
        boundary = realize_floer_boundary(phi.floer)
    except NotAComplex as exc:
        raise PipelineFailure("floer-complex", str(exc), exc) from None
    cex = check_pairing_relation(phi, E)
    if cex is not None:
        raise PipelineFailure("pairing-relation", str(cex), cex)
    bs = []
    certs = []
    for i, (M, one) in enumerate(((phi.module1, one1), (phi.module2, one2)), 1):
        try:
            cert = certify_cyclic(M, one, check_relations=False)
        except NotCyclic as exc:
            raise PipelineFailure(f"cyclic-{i}", str(exc), exc) from None
        try:
            b = solve_bounding_cochain(cert, E)
        except InconsistentInput as exc:
            raise PipelineFailure(f"solve-{i}", str(exc), exc) from None
        res = verify_mc(M.algebra, b.value, E)
        if res is not None:
            raise PipelineFailure(f"solve-{i}", str(res), res)
        certs.append(cert)
        bs.append(b)
    try:
        gmap = induced_gluing_map(phi, certs[0], bs[0], certs[1], bs[1], check_relation=False)
    except (InconsistentInput, MCViolation) as exc:
        raise PipelineFailure(getattr(exc, "stage", None) or "chain-map", str(exc), exc) from None
    lead = leading_term(gmap)
    if not (lead.is_identity or (lead.invertible and len(gmap.domain) == len(gmap.codomain))):
        raise PipelineFailure("leading-term", f"induced map is not invertible mod T "
                              f"(rank {lead.rank} of {lead.size})", lead)
    delta = bimodule_twisted_differential(phi.bimodule, bs[0].value, bs[1].value, check_mc=False)
    try:
        h_pair = homology(delta)
        h_floer = homology(boundary)
    except NotAComplex as exc:
        raise PipelineFailure("homology", str(exc), exc) from None
    report = GluingReport(bs[0], bs[1], gmap, lead, h_pair, h_floer)
    if not report.agree:
        raise PipelineFailure("homology", "pair and Floer homologies differ:\n" + report.render(),
                              report)
    return report
