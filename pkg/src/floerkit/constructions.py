"""Transport of structures along maps.

Every function here takes structures that satisfy their relations and
returns new ones that satisfy them again, with different (and usually
denser) tables: pullback of an algebra along an A-infinity isomorphism,
pullback of modules along algebra maps, transfer of a module along a
homomorphism with invertible linear part, and conjugation by linear
isomorphisms.  The synthetic instance generators use these to build
nontrivial valid inputs without solving anything by trial and error.
"""
from __future__ import annotations

from dataclasses import dataclass

from .ainfty import (AInftyHomomorphism, FilteredAlgebra, FilteredBimodule, FilteredRightModule,
                     GappedOperationTable, StructureError, TwistIndex, _insert, _splice, _clean,
                     map_preimages, opposite_algebra, substitute)
from .lincomb import Basis, LinearMap, xor_into


@dataclass(frozen=True)
class AlgebraMap:
    """Components ``g_k: source^k -> target`` of an A-infinity algebra map.

    ``g_0`` must vanish; ``g_1`` is the linear part.
    """

    source_basis: Basis
    target_basis: Basis
    components: GappedOperationTable

    def __post_init__(self):
        for (sig, inputs), terms in self.components.data.items():
            if sig == 0:
                raise StructureError("algebra maps with a constant term are twists; use twist_*")
            if len(inputs) != sig or any(g not in self.source_basis for g in inputs):
                raise StructureError("map component inputs do not match the source basis")
            if any(g not in self.target_basis for _, g in terms):
                raise StructureError("map component outputs do not match the target basis")

    def linear_part(self, cutoff, monoid) -> LinearMap:
        return LinearMap(self.source_basis, self.target_basis,
                         {inputs[0]: terms for (sig, inputs), terms in self.components.data.items()
                          if sig == 1}, cutoff, monoid, check=False)

    def opposite(self) -> "AlgebraMap":
        data = {(sig, tuple(reversed(inputs))): terms
                for (sig, inputs), terms in self.components.data.items()}
        return AlgebraMap(self.source_basis, self.target_basis, GappedOperationTable(data))

    def preimages(self) -> dict:
        return map_preimages(self.components)


def _positive_higher(table: GappedOperationTable, threshold: int, what: str):
    for (sig, _), terms in table.data.items():
        if sig >= threshold and any(lvl <= 0 for lvl, _ in terms):
            raise StructureError(f"{what}: components of arity >= {threshold} must have positive level")


def _arity_bound(base_arity: int, monoid, cutoff, step: int) -> int:
    return base_arity + len(monoid.levels(cutoff)) * max(step, 1) + 1


def _apply_linear(f: LinearMap, terms) -> frozenset:
    acc: set = set()
    for lvl, g in terms:
        col = f.columns.get(g)
        if col:
            xor_into(acc, ((lvl + l2, h) for l2, h in col if lvl + l2 < f.cutoff))
    return frozenset(acc)


def pullback_algebra(A: FilteredAlgebra, g: AlgebraMap, name: str = "") -> FilteredAlgebra:
    """The structure m' on g's source making ``g`` an A-infinity map into ``A``.

    Solves sum m(g(..), ..., g(..)) = sum g(.., m'(..), ..) arity by arity;
    needs ``g_1`` invertible mod T and positive levels on ``g_{>=2}``.
    """
    if g.target_basis != A.basis:
        raise StructureError("map target is not the algebra's basis")
    _positive_higher(g.components, 2, "algebra map")
    E, G = A.cutoff, A.monoid
    g1_inv = g.linear_part(E, G).inverse()
    pulled = substitute(A.ops, lambda s: [(0, s, 0)], [g.preimages()], E, lambda n: n[0])
    higher = GappedOperationTable({k: v for k, v in g.components.data.items() if k[0] >= 2})
    rmax = max((s for s, _ in higher.data), default=1)
    kmax = _arity_bound(max((s for s, _ in pulled), default=0), G, E, rmax - 1)
    solved: dict = {}
    for k in range(kmax + 1):
        acc = {key: set(v) for key, v in pulled.items() if key[0] == k}
        if higher.data and solved:
            inner = GappedOperationTable(solved)
            _insert(acc, higher, range, inner,
                    lambda osig, oin, i, isig, iin: (osig - 1 + isig, _splice(osig, oin, i, isig, iin)),
                    E, inner_filter=lambda s, k=k: s <= k)
            acc = {key: v for key, v in acc.items() if key[0] == k}
        for key, terms in acc.items():
            out = _apply_linear(g1_inv, terms)
            if out:
                solved[key] = out
    if any(key[0] == kmax for key in solved):
        raise StructureError("pullback did not terminate below the arity bound")
    return FilteredAlgebra(g.source_basis, GappedOperationTable(solved), G, E, name)


def pullback_module(M: FilteredRightModule, g: AlgebraMap, source: FilteredAlgebra,
                    name: str = "") -> FilteredRightModule:
    """n'(y; x') = sum n(y; g(B_1), ..., g(B_j)), a module over ``source``."""
    data = substitute(M.ops, lambda s: [(1, s + 1, 0)], [g.preimages()], M.cutoff,
                      lambda n: n[0])
    return FilteredRightModule(source, M.basis, GappedOperationTable(data), name or M.name)


def pullback_bimodule(B: FilteredBimodule, gl: AlgebraMap | None, left: FilteredAlgebra,
                      gr: AlgebraMap | None, right: FilteredAlgebra, name: str = "") -> FilteredBimodule:
    pre = [gl.preimages() if gl else TwistIndex(None), gr.preimages() if gr else TwistIndex(None)]
    data = substitute(B.ops, lambda s: [(0, s[0], 0), (s[0] + 1, s[0] + 1 + s[1], 1)], pre,
                      B.cutoff, lambda n: (n[0], n[1]))
    return FilteredBimodule(left, right, B.basis, GappedOperationTable(data), name or B.name)


def transfer_module(target: FilteredRightModule, basis: Basis, phi: GappedOperationTable,
                    name: str = "") -> tuple[FilteredRightModule, AInftyHomomorphism]:
    """Module structure on ``basis`` making ``phi`` a homomorphism into ``target``.

    ``phi`` has components ``phi_k(y; x_1..x_k)`` with ``y`` in ``basis``;
    ``phi_0`` must be invertible mod T and ``phi_{>=1}`` of positive level.
    Returns the new module together with the homomorphism.
    """
    _positive_higher(phi, 1, "homomorphism")
    A, E, G = target.algebra, target.cutoff, target.monoid
    phi0 = LinearMap(basis, target.basis,
                     {inputs[0]: terms for (sig, inputs), terms in phi.data.items() if sig == 0},
                     E, G, check=False)
    phi0_inv = phi0.inverse()
    fixed: dict = {}
    # n2(phi(y; ..); ..) and phi(y; .., m(..), ..) do not involve the unknown structure
    _insert(fixed, target.ops, lambda s: (0,), phi,
            lambda osig, oin, i, isig, iin: (osig + isig, iin + oin[1:]), E)
    _insert(fixed, phi, lambda s: range(1, s + 1), A.ops,
            lambda osig, oin, i, isig, iin: (osig - 1 + isig, _splice(osig, oin, i, isig, iin)), E)
    fixed = _clean(fixed)
    higher = GappedOperationTable({k: v for k, v in phi.data.items() if k[0] >= 1})
    jmax = max((s for s, _ in higher.data), default=0)
    kmax = _arity_bound(max((s for s, _ in fixed), default=0), G, E, jmax)
    solved: dict = {}
    for k in range(kmax + 1):
        acc = {key: set(v) for key, v in fixed.items() if key[0] == k}
        if higher.data and solved:
            _insert(acc, higher, lambda s: (0,), GappedOperationTable(solved),
                    lambda osig, oin, i, isig, iin: (osig + isig, iin + oin[1:]), E,
                    inner_filter=lambda s, k=k: s < k)
            acc = {key: v for key, v in acc.items() if key[0] == k}
        for key, terms in acc.items():
            out = _apply_linear(phi0_inv, terms)
            if out:
                solved[key] = out
    if any(key[0] == kmax for key in solved):
        raise StructureError("transfer did not terminate below the arity bound")
    source = FilteredRightModule(A, basis, GappedOperationTable(solved), name)
    return source, AInftyHomomorphism(source, target, phi)


def conjugate_bimodule(B: FilteredBimodule, psi: LinearMap, name: str = "") -> FilteredBimodule:
    """n'(x; y; z) = psi^-1 n(x; psi(y); z) for an automorphism ``psi`` of B's space."""
    inv = psi.inverse()
    acc: dict = {}
    for (sig, inputs), terms in B.ops.data.items():
        k1 = sig[0]
        for lvl, y in _preimage_terms(psi, inputs[k1]):
            new = inputs[:k1] + (y,) + inputs[k1 + 1:]
            shifted = _apply_linear(inv, ((l + lvl, o) for l, o in terms if l + lvl < B.cutoff))
            xor_into(acc.setdefault((sig, new), set()), shifted)
    return FilteredBimodule(B.left, B.right, B.basis, GappedOperationTable(_clean(acc)),
                            name or B.name)


def _preimage_terms(psi: LinearMap, g: str):
    """All (level, y) with T^level g occurring in psi(y)."""
    out = []
    for y, col in psi.columns.items():
        for lvl, h in col:
            if h == g:
                out.append((lvl, y))
    return out


def opposite_map_module(M: FilteredRightModule, g: AlgebraMap, source: FilteredAlgebra,
                        name: str = "") -> FilteredRightModule:
    """Pull back a module over ``opposite(A)`` along ``g: source -> A``.

    The result is a module over ``opposite(source)``.
    """
    return pullback_module(M, g.opposite(), opposite_algebra(source), name)
