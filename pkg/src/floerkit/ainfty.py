"""Gapped filtered A-infinity algebras, right modules and bimodules over Z/2.

Structure constants are kept in a :class:`GappedOperationTable`.  The key of
an entry is ``(signature, inputs)``; its value is a set of ``(level, output)``
pairs, so one key carries every energy level of the gapped decomposition
``m_k = sum_lam T^lam m_{k,lam}`` at once.

Input layouts
-------------
algebra        ``m_k``: ``(x_1, ..., x_k)``, signature ``k``
right module   ``n_k``: ``(y, x_1, ..., x_k)``, signature ``k``
bimodule       ``n_{k1,k2}``: ``(x_1..x_k1, y, z_1..z_k2)``, signature ``(k1, k2)``
homomorphism   ``phi_k``: ``(y, x_1, ..., x_k)``, signature ``k``

Relation checkers work by enumerating pairs of table entries that compose
(the output of an inner entry feeding one input slot of an outer entry), so
the residual of every relation instance is produced without walking through
generator tuples whose terms all vanish.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .lincomb import Basis, BasisMismatch, Element, LinearMap, compose, xor_into
from .novikov import DiscreteMonoid, NovikovError, as_rational, format_rational



class StructureError(ValueError):
    """Invalid structure data (bad generator, level, arity, ...)."""


class MCViolation(ValueError):
    """The supplied element does not solve the Maurer-Cartan equation."""

    def __init__(self, message, level=None, residual=None):
        super().__init__(message)
        self.level = level
        self.residual = residual


def _sig_key(sig):
    if isinstance(sig, tuple):
        return (sig[0] + sig[1], sig[0], sig[1])
    return (sig,)


def render_signature(sig) -> str:
    if isinstance(sig, tuple):
        return f"{sig[0]},{sig[1]}"
    return str(sig)


class GappedOperationTable:
    """Sparse structure constants of a G-gapped multilinear operation family."""

    __slots__ = ("data", "_by_output")

    def __init__(self, data: Mapping | None = None):
        clean = {}
        for key, terms in (data or {}).items():
            terms = frozenset(terms)
            if terms:
                sig, inputs = key
                clean[(sig, tuple(inputs))] = terms
        self.data: dict = clean
        self._by_output = None

    @classmethod
    def from_entries(cls, entries: Iterable) -> "GappedOperationTable":
        """Build from ``(signature, level, inputs, outputs)`` rows.

        Repeated outputs cancel in pairs (coefficients are in Z/2).
        """
        acc: dict = {}
        for sig, level, inputs, outputs in entries:
            level = as_rational(level)
            if isinstance(outputs, str):
                outputs = (outputs,)
            cell = acc.setdefault((sig, tuple(inputs)), set())
            xor_into(cell, ((level, o) for o in outputs))
        return cls(acc)

    def entries(self) -> list:
        """Canonical rows ``(signature, level, inputs, outputs)``.

        Sorted by level, then arity, then input tuple; outputs sorted by name.
        """
        rows = []
        for (sig, inputs), terms in self.data.items():
            by_level: dict = {}
            for lvl, g in terms:
                by_level.setdefault(lvl, []).append(g)
            for lvl, outs in by_level.items():
                rows.append((sig, lvl, inputs, tuple(sorted(outs))))
        rows.sort(key=lambda r: (r[1], _sig_key(r[0]), r[2]))
        return rows

    def __len__(self):
        return sum(len({lvl for lvl, _ in terms}) for terms in self.data.values())

    def __eq__(self, other):
        return isinstance(other, GappedOperationTable) and self.data == other.data

    def __hash__(self):
        return hash(frozenset(self.data.items()))

    def __repr__(self):
        return f"GappedOperationTable({len(self)} entries)"

    def get(self, sig, inputs) -> frozenset:
        return self.data.get((sig, tuple(inputs)), frozenset())

    def signatures(self) -> set:
        return {sig for sig, _ in self.data}

    def levels(self) -> set:
        return {lvl for terms in self.data.values() for lvl, _ in terms}

    @property
    def max_arity(self) -> int:
        return max((sum(_sig_key(s)[:1]) for s in self.signatures()), default=0)

    def by_output(self) -> dict:
        """Reverse index: output generator -> list of ``(sig, inputs, level)``."""
        if self._by_output is None:
            idx: dict = {}
            for (sig, inputs), terms in self.data.items():
                for lvl, g in terms:
                    idx.setdefault(g, []).append((sig, inputs, lvl))
            self._by_output = idx
        return self._by_output

    def truncate(self, cutoff) -> "GappedOperationTable":
        cutoff = as_rational(cutoff)
        return GappedOperationTable({k: frozenset(t for t in v if t[0] < cutoff)
                                     for k, v in self.data.items()})

    def replace(self, sig, inputs, terms) -> "GappedOperationTable":
        data = dict(self.data)
        data[(sig, tuple(inputs))] = frozenset(terms)
        return GappedOperationTable(data)


def _validate_table(table: GappedOperationTable, layout: Callable, out_basis: Basis,
                    monoid: DiscreteMonoid, cutoff: Fraction, what: str):
    for (sig, inputs), terms in table.data.items():
        bases = layout(sig)
        if bases is None:
            raise StructureError(f"{what}: bad arity signature {sig!r}")
        if len(bases) != len(inputs):
            raise StructureError(f"{what}: signature {render_signature(sig)} expects "
                                 f"{len(bases)} inputs, got {len(inputs)}")
        for b, g in zip(bases, inputs):
            if g not in b:
                raise StructureError(f"{what}: input {g!r} is not a generator of the expected basis")
        for lvl, g in terms:
            if g not in out_basis:
                raise StructureError(f"{what}: output {g!r} is not a generator of the output basis")
            if not monoid.contains(lvl):
                raise StructureError(f"{what}: level {format_rational(lvl)} is not in {monoid!r}")
            if lvl >= cutoff:
                raise StructureError(f"{what}: level {format_rational(lvl)} is not below the cutoff")


@dataclass(frozen=True)
class FilteredAlgebra:
    basis: Basis
    ops: GappedOperationTable
    monoid: DiscreteMonoid
    cutoff: Fraction
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cutoff", as_rational(self.cutoff))

        def layout(sig):
            if not isinstance(sig, int) or sig < 0:
                return None
            return [self.basis] * sig

        _validate_table(self.ops, layout, self.basis, self.monoid, self.cutoff, "algebra")

    def element(self, terms) -> Element:
        return Element(self.basis, terms, self.cutoff, self.monoid)

    def zero(self) -> Element:
        return Element.zero(self.basis, self.cutoff, self.monoid)

    def curvature(self) -> Element:
        return Element(self.basis, self.ops.get(0, ()), self.cutoff, self.monoid, check=False)


@dataclass(frozen=True)
class FilteredRightModule:
    algebra: FilteredAlgebra
    basis: Basis
    ops: GappedOperationTable
    name: str = field(default="", compare=False)

    def __post_init__(self):
        def layout(sig):
            if not isinstance(sig, int) or sig < 0:
                return None
            return [self.basis] + [self.algebra.basis] * sig

        _validate_table(self.ops, layout, self.basis, self.monoid, self.cutoff, "module")

    @property
    def monoid(self):
        return self.algebra.monoid

    @property
    def cutoff(self):
        return self.algebra.cutoff

    def element(self, terms) -> Element:
        return Element(self.basis, terms, self.cutoff, self.monoid)


@dataclass(frozen=True)
class FilteredBimodule:
    left: FilteredAlgebra
    right: FilteredAlgebra
    basis: Basis
    ops: GappedOperationTable
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.left.cutoff != self.right.cutoff or self.left.monoid != self.right.monoid:
            raise StructureError("bimodule algebras must share monoid and cutoff")

        def layout(sig):
            if not (isinstance(sig, tuple) and len(sig) == 2 and min(sig) >= 0):
                return None
            return [self.left.basis] * sig[0] + [self.basis] + [self.right.basis] * sig[1]

        _validate_table(self.ops, layout, self.basis, self.monoid, self.cutoff, "bimodule")

    @property
    def monoid(self):
        return self.left.monoid

    @property
    def cutoff(self):
        return self.left.cutoff


@dataclass(frozen=True)
class AInftyHomomorphism:
    """Components ``phi_k(y; x_1..x_k)`` of a right-module homomorphism.

    ``phi_0`` is the linear part.  There is no component without a module
    input, so every homomorphism representable here is strict.
    """

    source: FilteredRightModule
    target: FilteredRightModule
    components: GappedOperationTable
    strict: bool = True
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.source.algebra != self.target.algebra:
            raise StructureError("homomorphism source and target must be modules over the same algebra")
        if not self.strict:
            raise StructureError("only strict homomorphisms are supported")

        def layout(sig):
            if not isinstance(sig, int) or sig < 0:
                return None
            return [self.source.basis] + [self.source.algebra.basis] * sig

        _validate_table(self.components, layout, self.target.basis, self.monoid,
                        self.cutoff, "homomorphism")

    @property
    def monoid(self):
        return self.source.monoid

    @property
    def cutoff(self):
        return self.source.cutoff

    def linear_part(self) -> LinearMap:
        return LinearMap(self.source.basis, self.target.basis,
                         {inputs[0]: terms for (sig, inputs), terms in self.components.data.items()
                          if sig == 0},
                         self.cutoff, self.monoid, check=False)


# ---------------------------------------------------------------------------
# evaluation

def _coeff_index(x: Element) -> dict:
    idx: dict = {}
    for lvl, g in x.terms:
        idx.setdefault(g, []).append(lvl)
    return idx


def _eval_table(table: GappedOperationTable, sig, args: Sequence[Element],
                out_basis: Basis, cutoff, monoid) -> Element:
    idx = [_coeff_index(a) for a in args]
    acc: set = set()
    for (s, inputs), terms in table.data.items():
        if s != sig:
            continue
        levels = [Fraction(0)]
        for pos, g in enumerate(inputs):
            lv = idx[pos].get(g)
            if not lv:
                levels = []
                break
            levels = [a + b for a in levels for b in lv if a + b < cutoff]
            if not levels:
                break
        for base in levels:
            xor_into(acc, ((base + lvl, o) for lvl, o in terms if base + lvl < cutoff))
    return Element(out_basis, frozenset(acc), cutoff, monoid, check=False)


def _check_arg(arg: Element, basis: Basis, cutoff, what):
    if not isinstance(arg, Element):
        raise TypeError(f"{what} must be an Element")
    if arg.basis != basis:
        raise BasisMismatch(f"{what} lives in the wrong basis")
    if arg.cutoff != cutoff:
        raise NovikovError(f"{what} has cutoff {format_rational(arg.cutoff)}, expected "
                           f"{format_rational(cutoff)}")


def evaluate(structure, signature, y: Element | None, inputs: Sequence[Element]) -> Element:
    """Multilinear evaluation of one operation of ``structure``.

    For an algebra pass ``y=None``; for a bimodule ``inputs`` lists the left
    string followed by the right string.
    """
    if isinstance(structure, FilteredAlgebra):
        if y is not None:
            raise StructureError("algebra operations take no module input")
        if signature != len(inputs):
            raise StructureError("arity does not match the number of inputs")
        for x in inputs:
            _check_arg(x, structure.basis, structure.cutoff, "algebra input")
        return _eval_table(structure.ops, signature, list(inputs), structure.basis,
                           structure.cutoff, structure.monoid)
    if isinstance(structure, FilteredRightModule):
        if signature != len(inputs):
            raise StructureError("arity does not match the number of inputs")
        _check_arg(y, structure.basis, structure.cutoff, "module input")
        for x in inputs:
            _check_arg(x, structure.algebra.basis, structure.cutoff, "algebra input")
        return _eval_table(structure.ops, signature, [y, *inputs], structure.basis,
                           structure.cutoff, structure.monoid)
    if isinstance(structure, FilteredBimodule):
        k1, k2 = signature
        if k1 + k2 != len(inputs):
            raise StructureError("arity does not match the number of inputs")
        _check_arg(y, structure.basis, structure.cutoff, "bimodule input")
        for x in inputs[:k1]:
            _check_arg(x, structure.left.basis, structure.cutoff, "left algebra input")
        for x in inputs[k1:]:
            _check_arg(x, structure.right.basis, structure.cutoff, "right algebra input")
        args = [*inputs[:k1], y, *inputs[k1:]]
        return _eval_table(structure.ops, (k1, k2), args, structure.basis,
                           structure.cutoff, structure.monoid)
    if isinstance(structure, AInftyHomomorphism):
        _check_arg(y, structure.source.basis, structure.cutoff, "module input")
        return _eval_table(structure.components, signature, [y, *inputs], structure.target.basis,
                           structure.cutoff, structure.monoid)
    raise TypeError(f"cannot evaluate {type(structure).__name__}")


eval_operation = evaluate


# ---------------------------------------------------------------------------
# relation residuals

@dataclass(frozen=True)
class Counterexample:
    """First failing relation instance in (level, arity, inputs) order."""

    relation: str
    level: Fraction
    signature: object
    inputs: tuple[str, ...]
    residual: tuple[str, ...]

    def render(self) -> str:
        return (f"{self.relation} relation fails at level {format_rational(self.level)}, "
                f"arity {render_signature(self.signature)}, inputs ({', '.join(self.inputs)}): "
                f"residual {' + '.join(self.residual)}")

    def __str__(self):
        return self.render()


def _insert(acc: dict, outer: GappedOperationTable, slots: Callable, inner: GappedOperationTable,
            combine: Callable, cutoff: Fraction, inner_filter: Callable | None = None):
    """Accumulate every composite ``outer(..., inner(...) at slot i, ...)``.

    ``combine(osig, oin, i, isig, iin)`` returns the key of the composite.
    """
    index = inner.by_output()
    if not index:
        return
    for (osig, oin), oterms in outer.data.items():
        for i in slots(osig):
            for isig, iin, ilvl in index.get(oin[i], ()):
                if inner_filter is not None and not inner_filter(isig):
                    continue
                shifted = [(ilvl + lvl, g) for lvl, g in oterms if ilvl + lvl < cutoff]
                if not shifted:
                    continue
                key = combine(osig, oin, i, isig, iin)
                cell = acc.get(key)
                if cell is None:
                    cell = acc[key] = set()
                xor_into(cell, shifted)


def _splice(osig, oin, i, isig, iin):
    return oin[:i] + iin + oin[i + 1:]


def _first_failure(acc: dict, relation: str, layout: Callable) -> Counterexample | None:
    """Smallest failing instance by (level, arity, input positions in basis order)."""
    best = None
    for (sig, inputs), terms in acc.items():
        if not terms:
            continue
        lvl = min(t[0] for t in terms)
        key = (lvl, _sig_key(sig), tuple(b.index(g) for b, g in zip(layout(sig), inputs)))
        if best is None or key < best[0]:
            best = (key, sig, inputs, terms)
    if best is None:
        return None
    (lvl, _, _), sig, inputs, terms = best
    residual = tuple(sorted(g for l, g in terms if l == lvl))
    return Counterexample(relation, lvl, sig, inputs, residual)


def _clean(acc: dict) -> dict:
    return {k: frozenset(v) for k, v in acc.items() if v}


def _resolve_cutoff(structure, E):
    E = structure.cutoff if E is None else as_rational(E)
    if E > structure.cutoff:
        raise StructureError("check cutoff exceeds the structure cutoff")
    return E


def algebra_residuals(A: FilteredAlgebra, E=None) -> dict:
    """All nonzero values of sum m(x.., m(x_i..x_j), ..x) keyed by ``(k, inputs)``."""
    E = _resolve_cutoff(A, E)
    acc: dict = {}
    _insert(acc, A.ops, range, A.ops,
            lambda osig, oin, i, isig, iin: (osig - 1 + isig, _splice(osig, oin, i, isig, iin)), E)
    return _clean(acc)


def check_algebra_relations(A: FilteredAlgebra, E=None) -> Counterexample | None:
    """Curved A-infinity relations below ``E``; ``None`` means they all hold."""
    return _first_failure(algebra_residuals(A, E), "algebra", lambda s: [A.basis] * s)


def _module_layout(M):
    return lambda s: [M.basis] + [M.algebra.basis] * s


def module_residuals(M: FilteredRightModule, E=None) -> dict:
    E = _resolve_cutoff(M, E)
    acc: dict = {}
    # n(n(y; x_1..x_l); x_{l+1}..x_k)
    _insert(acc, M.ops, lambda s: (0,), M.ops,
            lambda osig, oin, i, isig, iin: (osig + isig, iin + oin[1:]), E)
    # n(y; x.., m(x_i..x_j), ..x), including curvature insertions
    _insert(acc, M.ops, lambda s: range(1, s + 1), M.algebra.ops,
            lambda osig, oin, i, isig, iin: (osig - 1 + isig, _splice(osig, oin, i, isig, iin)), E)
    return _clean(acc)


def check_module_relations(M: FilteredRightModule, E=None) -> Counterexample | None:
    """Right-module relations below ``E``; ``None`` means they all hold."""
    return _first_failure(module_residuals(M, E), "module", _module_layout(M))


def bimodule_residuals(B: FilteredBimodule, E=None) -> dict:
    E = _resolve_cutoff(B, E)
    acc: dict = {}
    _insert(acc, B.ops, lambda s: (s[0],), B.ops,
            lambda osig, oin, i, isig, iin: ((osig[0] + isig[0], osig[1] + isig[1]),
                                             _splice(osig, oin, i, isig, iin)), E)
    _insert(acc, B.ops, lambda s: range(s[0]), B.left.ops,
            lambda osig, oin, i, isig, iin: ((osig[0] - 1 + isig, osig[1]),
                                             _splice(osig, oin, i, isig, iin)), E)
    _insert(acc, B.ops, lambda s: range(s[0] + 1, s[0] + 1 + s[1]), B.right.ops,
            lambda osig, oin, i, isig, iin: ((osig[0], osig[1] - 1 + isig),
                                             _splice(osig, oin, i, isig, iin)), E)
    return _clean(acc)


def check_bimodule_relations(B: FilteredBimodule, E=None) -> Counterexample | None:
    return _first_failure(bimodule_residuals(B, E), "bimodule",
                          lambda s: [B.left.basis] * s[0] + [B.basis] + [B.right.basis] * s[1])


def homomorphism_residuals(phi: AInftyHomomorphism, E=None) -> dict:
    E = _resolve_cutoff(phi, E)
    acc: dict = {}
    n1, n2 = phi.source.ops, phi.target.ops
    # n2(phi(y; ..); ..)
    _insert(acc, n2, lambda s: (0,), phi.components,
            lambda osig, oin, i, isig, iin: (osig + isig, iin + oin[1:]), E)
    # phi(n1(y; ..); ..)
    _insert(acc, phi.components, lambda s: (0,), n1,
            lambda osig, oin, i, isig, iin: (osig + isig, iin + oin[1:]), E)
    # phi(y; .., m(..), ..)
    _insert(acc, phi.components, lambda s: range(1, s + 1), phi.source.algebra.ops,
            lambda osig, oin, i, isig, iin: (osig - 1 + isig, _splice(osig, oin, i, isig, iin)), E)
    return _clean(acc)


def check_homomorphism(phi: AInftyHomomorphism, E=None) -> Counterexample | None:
    """Homomorphism identity n(phi) = phi(n) + phi(m) below ``E``."""
    return _first_failure(homomorphism_residuals(phi, E), "homomorphism", _module_layout(phi.source))


# ---------------------------------------------------------------------------
# constructions on tables

def opposite_algebra(A: FilteredAlgebra) -> FilteredAlgebra:
    """m^op_k(x_1, ..., x_k) = m_k(x_k, ..., x_1)."""
    data = {(sig, tuple(reversed(inputs))): terms for (sig, inputs), terms in A.ops.data.items()}
    name = A.name[:-3] if A.name.endswith(".op") else (A.name + ".op" if A.name else "")
    return FilteredAlgebra(A.basis, GappedOperationTable(data), A.monoid, A.cutoff, name)


def regular_module(A: FilteredAlgebra) -> FilteredRightModule:
    """n_k(y; x_1..x_k) = m_{k+1}(y, x_1..x_k) on the underlying space of A.

    This is a right module only when A is uncurved.
    """
    data = {(sig - 1, inputs): terms for (sig, inputs), terms in A.ops.data.items() if sig >= 1}
    return FilteredRightModule(A, A.basis, GappedOperationTable(data),
                               (A.name + ".reg") if A.name else "")


def diagonal_bimodule(A: FilteredAlgebra) -> FilteredBimodule:
    """n_{k1,k2}(x; y; z) = m_{k1+k2+1}(x, y, z): A as a bimodule over itself."""
    data = {}
    for (sig, inputs), terms in A.ops.data.items():
        for pos in range(sig):
            data[((pos, sig - 1 - pos), inputs)] = terms
    return FilteredBimodule(A, A, A.basis, GappedOperationTable(data),
                            (A.name + ".diag") if A.name else "")


def substitute(table: GappedOperationTable, segments: Callable, preimages: Sequence,
               cutoff: Fraction, new_signature: Callable) -> dict:
    """Pull a table back along A-infinity algebra maps acting on its input strings.

    ``segments(sig)`` lists ``(start, stop, map_index)`` ranges of algebra
    inputs.  ``preimages[map_index].get(c, ())`` lists the ``(block, level)``
    pairs with ``T^level c`` occurring in ``g(block)``; the empty block stands
    for the constant term ``g_0``.  Each old input slot receives one block,
    and the blocks are concatenated in order.  Returns a dict
    ``(new_sig, new_inputs) -> terms``.
    """
    acc: dict = {}
    for (sig, inputs), terms in table.data.items():
        segs = segments(sig)
        owner = {}
        for si, (start, stop, mi) in enumerate(segs):
            for p in range(start, stop):
                owner[p] = (si, preimages[mi])
        options = []
        for p, g in enumerate(inputs):
            if p in owner:
                si, pre = owner[p]
                options.append((si, pre.get(g, ())))
            else:
                options.append((None, (((g,), _ZERO),)))
        for level, new_inputs, lengths in _block_choices(options, len(segs), cutoff):
            shifted = [(level + lvl, g) for lvl, g in terms if level + lvl < cutoff]
            if not shifted:
                continue
            key = (new_signature(lengths), new_inputs)
            cell = acc.get(key)
            if cell is None:
                cell = acc[key] = set()
            xor_into(cell, shifted)
    return _clean(acc)


_ZERO = Fraction(0)


def _block_choices(options, nseg, cutoff):
    out = []

    def rec(pos, level, parts, lengths):
        if pos == len(options):
            out.append((level, parts, tuple(lengths)))
            return
        si, choices = options[pos]
        for block, lvl in choices:
            nl = level + lvl
            if nl >= cutoff:
                continue
            if si is None:
                rec(pos + 1, nl, parts + block, lengths)
            else:
                lengths[si] += len(block)
                rec(pos + 1, nl, parts + block, lengths)
                lengths[si] -= len(block)

    rec(0, _ZERO, (), [0] * nseg)
    return out


class TwistIndex(dict):
    """Preimages for the map x -> x with constant term ``b`` (``None`` for 0)."""

    def __init__(self, b: Element | None = None):
        super().__init__()
        if b is not None:
            for lvl, g in b.terms:
                self.setdefault(g, []).append(((), lvl))

    def get(self, g, default=()):
        return [((g,), _ZERO)] + list(super().get(g, ()))


def map_preimages(table: GappedOperationTable) -> dict:
    """Preimage index of an A-infinity algebra map given by its components."""
    idx: dict = {}
    for (sig, inputs), terms in table.data.items():
        for lvl, g in terms:
            idx.setdefault(g, []).append((inputs, lvl))
    return idx


def _require_positive(b: Element, what: str):
    if b.terms and min(t[0] for t in b.terms) <= 0:
        raise MCViolation(f"{what} must have positive valuation (b in C ⊗ Lambda_+)")


def _require_uncurved_at_zero(A: FilteredAlgebra):
    if any(lvl == 0 for lvl, _ in A.ops.get(0, ())):
        raise StructureError("energy-zero curvature m_{0,0} is not allowed for twisting")


def twist_algebra(A: FilteredAlgebra, b: Element) -> FilteredAlgebra:
    """m^b_k(x_1..x_k) = sum m(b.., x_1, b.., ..., x_k, b..)."""
    _check_arg(b, A.basis, A.cutoff, "b")
    _require_positive(b, "b")
    _require_uncurved_at_zero(A)
    data = substitute(A.ops, lambda s: [(0, s, 0)], [TwistIndex(b)], A.cutoff,
                      lambda lengths: lengths[0])
    return FilteredAlgebra(A.basis, GappedOperationTable(data), A.monoid, A.cutoff, A.name)


def twist_module(M: FilteredRightModule, b: Element) -> FilteredRightModule:
    """n^b_k(y; x..) = sum n(y; b.., x_1, b.., ..., x_k, b..), a module over m^b."""
    _check_arg(b, M.algebra.basis, M.cutoff, "b")
    _require_positive(b, "b")
    data = substitute(M.ops, lambda s: [(1, s + 1, 0)], [TwistIndex(b)], M.cutoff,
                      lambda lengths: lengths[0])
    return FilteredRightModule(twist_algebra(M.algebra, b), M.basis,
                               GappedOperationTable(data), M.name)


def twist_bimodule(B: FilteredBimodule, b1: Element, b2: Element) -> FilteredBimodule:
    _check_arg(b1, B.left.basis, B.cutoff, "b1")
    _check_arg(b2, B.right.basis, B.cutoff, "b2")
    _require_positive(b1, "b1")
    _require_positive(b2, "b2")
    data = substitute(B.ops, lambda s: [(0, s[0], 0), (s[0] + 1, s[0] + 1 + s[1], 1)],
                      [TwistIndex(b1), TwistIndex(b2)], B.cutoff,
                      lambda lengths: (lengths[0], lengths[1]))
    return FilteredBimodule(twist_algebra(B.left, b1), twist_algebra(B.right, b2), B.basis,
                            GappedOperationTable(data), B.name)


def left_twisted_module(B: FilteredBimodule, b1: Element) -> FilteredRightModule:
    """Right module ^{b}n_k(y; x) = sum_l n_{l,k}(b, ..., b; y; x) over the right algebra."""
    _check_arg(b1, B.left.basis, B.cutoff, "b1")
    _require_positive(b1, "b1")
    only_const = {g: [c for c in TwistIndex(b1).get(g) if not c[0]] for g in B.left.basis}
    data = substitute(B.ops, lambda s: [(0, s[0], 0)], [only_const], B.cutoff,
                      lambda lengths: lengths[0])
    out = {}
    for (sig, inputs), terms in data.items():
        k1, k2 = sig
        if k1 == 0:
            out[(k2, inputs)] = terms
    return FilteredRightModule(B.right, B.basis, GappedOperationTable(out), B.name)


def mc_residual(A: FilteredAlgebra, b: Element, E=None) -> Element:
    """sum_k m_k(b, ..., b), truncated at ``E``."""
    E = _resolve_cutoff(A, E)
    _check_arg(b, A.basis, A.cutoff, "b")
    idx = _coeff_index(b)
    acc: set = set()
    for (sig, inputs), terms in A.ops.data.items():
        levels = [Fraction(0)]
        for g in inputs:
            lv = idx.get(g)
            if not lv:
                levels = []
                break
            levels = [a + c for a in levels for c in lv if a + c < E]
            if not levels:
                break
        for base in levels:
            xor_into(acc, ((base + lvl, o) for lvl, o in terms if base + lvl < E))
    return Element(A.basis, frozenset(acc), A.cutoff, A.monoid, check=False)


def require_mc(A: FilteredAlgebra, b: Element, what: str = "b"):
    _require_positive(b, what)
    _require_uncurved_at_zero(A)
    res = mc_residual(A, b)
    if res:
        lvl = res.valuation
        raise MCViolation(f"{what} violates the Maurer-Cartan equation at level "
                          f"{format_rational(lvl)}: residual {res}", lvl, res)


def _all_b_map(table, y_pos, seg, b_idx, dom: Basis, cod: Basis, cutoff, monoid) -> LinearMap:
    """Linear map y -> sum table(..b.., y, ..b..) with every algebra slot filled by b."""
    cols: dict = {}
    for (sig, inputs), terms in table.data.items():
        levels = [Fraction(0)]
        for p, g in enumerate(inputs):
            if p == y_pos(sig):
                continue
            lv = b_idx[seg(sig, p)].get(g)
            if not lv:
                levels = []
                break
            levels = [a + c for a in levels for c in lv if a + c < cutoff]
            if not levels:
                break
        if not levels:
            continue
        cell = cols.setdefault(inputs[y_pos(sig)], set())
        for base in levels:
            xor_into(cell, ((base + lvl, o) for lvl, o in terms if base + lvl < cutoff))
    return LinearMap(dom, cod, {g: frozenset(v) for g, v in cols.items()}, cutoff, monoid,
                     check=False)


def twisted_differential(M: FilteredRightModule, b: Element, *, check_mc: bool = True) -> LinearMap:
    """d^b(y) = sum_k n_k(y; b, ..., b)."""
    _check_arg(b, M.algebra.basis, M.cutoff, "b")
    if check_mc:
        require_mc(M.algebra, b)
    else:
        _require_positive(b, "b")
    return _all_b_map(M.ops, lambda s: 0, lambda s, p: 0, [_coeff_index(b)],
                      M.basis, M.basis, M.cutoff, M.monoid)


def bimodule_twisted_differential(B: FilteredBimodule, b1: Element, b2: Element,
                                  *, check_mc: bool = True) -> LinearMap:
    """delta_{b1,b2}(y) = sum n_{k1,k2}(b1, .., b1; y; b2, .., b2)."""
    _check_arg(b1, B.left.basis, B.cutoff, "b1")
    _check_arg(b2, B.right.basis, B.cutoff, "b2")
    if check_mc:
        require_mc(B.left, b1, "b1")
        require_mc(B.right, b2, "b2")
    else:
        _require_positive(b1, "b1")
        _require_positive(b2, "b2")
    return _all_b_map(B.ops, lambda s: s[0], lambda s, p: 0 if p < s[0] else 1,
                      [_coeff_index(b1), _coeff_index(b2)], B.basis, B.basis, B.cutoff, B.monoid)


def realize_phi_b(phi: AInftyHomomorphism, b: Element, *, check_chain_map: bool = True) -> LinearMap:
    """phi^b(y) = sum_k phi_k(y; b, ..., b); verified to be a chain map."""
    _check_arg(b, phi.source.algebra.basis, phi.cutoff, "b")
    require_mc(phi.source.algebra, b)
    phib = _all_b_map(phi.components, lambda s: 0, lambda s, p: 0, [_coeff_index(b)],
                      phi.source.basis, phi.target.basis, phi.cutoff, phi.monoid)
    if check_chain_map:
        d1 = twisted_differential(phi.source, b, check_mc=False)
        d2 = twisted_differential(phi.target, b, check_mc=False)
        residual = compose(d2, phib) + compose(phib, d1)
        if not residual.is_zero():
            lvl = min(t[0] for terms in residual.columns.values() for t in terms)
            raise InconsistentInput(
                f"phi^b is not a chain map: residual at level {format_rational(lvl)} "
                f"({residual.render()})", level=lvl)
    return phib


class InconsistentInput(ValueError):
    """A certified input failed an identity that certification should imply."""

    def __init__(self, message, level=None, stage=None):
        super().__init__(message)
        self.level = level
        self.stage = stage


def is_unit_at_level_zero(A: FilteredAlgebra, e: Element) -> bool:
    """m_{2,0}(e, x) = x = m_{2,0}(x, e) for every generator x."""
    e0 = Element(A.basis, frozenset((Fraction(0), g) for g in e.component(0)),
                 A.cutoff, A.monoid, check=False)
    for g in A.basis:
        x = Element(A.basis, frozenset({(Fraction(0), g)}), A.cutoff, A.monoid, check=False)
        for args in ((e0, x), (x, e0)):
            val = evaluate(A, 2, None, list(args))
            if val.component(0) != frozenset({g}):
                return False
    return True


def unit_defect(A: FilteredAlgebra, e: Element, k: int, y: str, xs: Sequence[str],
                *, check_preconditions: bool = True) -> tuple[Element, Element]:
    """Both sides of the unit-defect identity for n_k(y; x) := m_{k+1}(y, x).

    Returns ``(lhs, rhs)``: the left-hand side of the would-be right-module
    relation at ``(y; x_1..x_k)`` and ``m_{k+2}(m_0, y, x_1, ..., x_k)``.
    """
    if len(xs) != k:
        raise StructureError("k does not match the number of inputs")
    if check_preconditions:
        cex = check_algebra_relations(A)
        if cex is not None:
            raise StructureError(f"algebra relations fail: {cex}")
        if not is_unit_at_level_zero(A, e):
            raise StructureError("designated element is not a unit of m_{2,0}")
    fake = FilteredRightModule(A, A.basis,
                               GappedOperationTable({(s - 1, i): t for (s, i), t in A.ops.data.items()
                                                     if s >= 1}))
    residual = module_residuals(fake).get((k, (y, *xs)), frozenset())
    lhs = Element(A.basis, residual, A.cutoff, A.monoid, check=False)

    def gen(g):
        return Element(A.basis, frozenset({(Fraction(0), g)}), A.cutoff, A.monoid, check=False)

    rhs = evaluate(A, k + 2, None, [A.curvature(), gen(y), *[gen(x) for x in xs]])
    return lhs, rhs
