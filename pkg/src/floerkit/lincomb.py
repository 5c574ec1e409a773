"""Free modules over the truncated Novikov ring, linear maps and homology.

Elements are stored as finite sets of ``(level, generator)`` pairs: over
Z/2 an element sum_lam T^lam x_lam is determined by which generators occur
with which exponent.  Linear maps are stored column by column (the image
of each domain generator).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .novikov import (DiscreteMonoid, INFINITY, NovikovError, NovikovScalar,
                      as_rational, format_rational, nov_invert)

Terms = frozenset  # frozenset[tuple[Fraction, str]]


class BasisMismatch(ValueError):
    pass


class NotAComplex(ValueError):
    """d o d is nonzero below the cutoff."""

    def __init__(self, message, generator=None, level=None, residual=None):
        super().__init__(message)
        self.generator = generator
        self.level = level
        self.residual = residual


@dataclass(frozen=True)
class Basis:
    """Ordered, named generators with optional degrees mod ``modulus``."""

    generators: tuple[str, ...]
    degrees: tuple[tuple[str, int], ...] | None = None
    modulus: int = 0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if len(set(gens)) != len(gens):
            raise ValueError(f"duplicate generator names in basis {gens}")
        if self.degrees is not None:
            degs = dict(self.degrees)
            if set(degs) != set(gens):
                raise ValueError("a graded basis needs a degree for every generator")
            if self.modulus < 0:
                raise ValueError("grading modulus must be >= 0")
            m = self.modulus
            object.__setattr__(self, "degrees",
                               tuple((g, degs[g] % m if m else degs[g]) for g in gens))

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __contains__(self, name):
        return name in self._index

    @property
    def _index(self) -> dict[str, int]:
        try:
            return self.__dict__["_idx"]
        except KeyError:
            idx = {g: i for i, g in enumerate(self.generators)}
            object.__setattr__(self, "_idx", idx)
            return idx

    def index(self, name: str) -> int:
        return self._index[name]

    def degree(self, name: str) -> int | None:
        if self.degrees is None:
            return None
        return dict(self.degrees)[name]

    @property
    def graded(self) -> bool:
        return self.degrees is not None


def _sort_terms(basis: Basis, terms) -> list:
    idx = basis._index
    return sorted(terms, key=lambda t: (t[0], idx[t[1]]))


def xor_into(acc: set, terms) -> None:
    for t in terms:
        if t in acc:
            acc.remove(t)
        else:
            acc.add(t)


def shift_terms(terms, amount: Fraction, cutoff: Fraction) -> frozenset:
    return frozenset((lvl + amount, g) for lvl, g in terms if lvl + amount < cutoff)


class Element:
    """A vector of C-bar ⊗ Lambda_0, truncated at ``cutoff``."""

    __slots__ = ("basis", "terms", "cutoff", "monoid")

    def __init__(self, basis: Basis, terms: Iterable, cutoff, monoid: DiscreteMonoid,
                 *, check: bool = True):
        cutoff = as_rational(cutoff)
        if check:
            acc: set = set()
            for lvl, g in terms:
                lvl = as_rational(lvl)
                if g not in basis:
                    raise BasisMismatch(f"generator {g!r} not in basis {basis.generators}")
                if not monoid.contains(lvl):
                    raise NovikovError(f"level {format_rational(lvl)} not in {monoid!r}")
                if lvl < cutoff:
                    xor_into(acc, ((lvl, g),))
            terms = frozenset(acc)
        elif not isinstance(terms, frozenset):
            terms = frozenset(terms)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "cutoff", cutoff)
        object.__setattr__(self, "monoid", monoid)

    def __setattr__(self, name, value):
        raise AttributeError("Element is immutable")

    @classmethod
    def zero(cls, basis, cutoff, monoid):
        return cls(basis, frozenset(), cutoff, monoid, check=False)

    @classmethod
    def generator(cls, basis, name, cutoff, monoid, level=0):
        return cls(basis, [(level, name)], cutoff, monoid)

    @classmethod
    def from_coefficients(cls, basis, coefficients: Mapping[str, NovikovScalar], cutoff, monoid):
        terms = [(e, g) for g, s in coefficients.items() for e in s.exponents]
        return cls(basis, terms, cutoff, monoid)

    def _like(self, terms) -> "Element":
        return Element(self.basis, terms, self.cutoff, self.monoid, check=False)

    def _compatible(self, other):
        if not isinstance(other, Element):
            raise TypeError(f"expected Element, got {type(other).__name__}")
        if other.basis != self.basis:
            raise BasisMismatch("elements live in different bases")
        if other.cutoff != self.cutoff or other.monoid != self.monoid:
            raise NovikovError("elements have different cutoff or monoid")

    def __add__(self, other):
        self._compatible(other)
        return self._like(self.terms ^ other.terms)

    __sub__ = __add__

    def __rmul__(self, scalar: NovikovScalar):
        if not isinstance(scalar, NovikovScalar):
            return NotImplemented
        if scalar.cutoff != self.cutoff or scalar.monoid != self.monoid:
            raise NovikovError("scalar and element have different cutoff or monoid")
        acc: set = set()
        for e in scalar.exponents:
            xor_into(acc, shift_terms(self.terms, e, self.cutoff))
        return self._like(frozenset(acc))

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return (self.terms == other.terms and self.basis == other.basis
                and self.cutoff == other.cutoff)

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        return f"Element({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"T^{format_rational(lvl)} * {g}"
                          for lvl, g in _sort_terms(self.basis, self.terms))

    def sorted_terms(self) -> list:
        return _sort_terms(self.basis, self.terms)

    def coefficient(self, name: str) -> NovikovScalar:
        return NovikovScalar([lvl for lvl, g in self.terms if g == name],
                             self.cutoff, self.monoid, check=False)

    @property
    def coefficients(self) -> dict[str, NovikovScalar]:
        by_gen: dict[str, list] = {}
        for lvl, g in self.terms:
            by_gen.setdefault(g, []).append(lvl)
        return {g: NovikovScalar(by_gen[g], self.cutoff, self.monoid, check=False)
                for g in self.basis if g in by_gen}

    def component(self, level) -> frozenset:
        """The Z/2 vector x_lam (set of generators) at a given level."""
        level = as_rational(level)
        return frozenset(g for lvl, g in self.terms if lvl == level)

    def levels(self) -> list[Fraction]:
        return sorted({lvl for lvl, _ in self.terms})

    @property
    def valuation(self):
        return min((lvl for lvl, _ in self.terms), default=INFINITY)

    def shift(self, amount) -> "Element":
        return self._like(shift_terms(self.terms, as_rational(amount), self.cutoff))

    def truncate(self, cutoff) -> "Element":
        cutoff = as_rational(cutoff)
        return Element(self.basis, frozenset(t for t in self.terms if t[0] < cutoff),
                       cutoff, self.monoid, check=False)

    def residue(self) -> frozenset:
        return self.component(0)


class LinearMap:
    """A Lambda_0-linear map between free modules on named bases."""

    __slots__ = ("domain", "codomain", "columns", "cutoff", "monoid")

    def __init__(self, domain: Basis, codomain: Basis, columns: Mapping[str, Iterable],
                 cutoff, monoid: DiscreteMonoid, *, check: bool = True):
        cutoff = as_rational(cutoff)
        cols = {}
        for g, terms in columns.items():
            if check:
                if g not in domain:
                    raise BasisMismatch(f"column {g!r} not in domain")
                img = Element(codomain, terms, cutoff, monoid).terms
            else:
                img = frozenset(terms)
            if img:
                cols[g] = img
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "codomain", codomain)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "cutoff", cutoff)
        object.__setattr__(self, "monoid", monoid)

    def __setattr__(self, name, value):
        raise AttributeError("LinearMap is immutable")

    @classmethod
    def from_entries(cls, domain, codomain, entries: Mapping[tuple[str, str], NovikovScalar],
                     cutoff, monoid):
        """Build from a sparse ``(row, column) -> scalar`` matrix."""
        cols: dict[str, list] = {}
        for (row, col), s in entries.items():
            if row not in codomain:
                raise BasisMismatch(f"row {row!r} not in codomain")
            cols.setdefault(col, []).extend((e, row) for e in s.exponents)
        return cls(domain, codomain, cols, cutoff, monoid)

    @classmethod
    def identity(cls, basis, cutoff, monoid):
        return cls(basis, basis, {g: frozenset({(Fraction(0), g)}) for g in basis},
                   cutoff, monoid, check=False)

    @classmethod
    def zero(cls, domain, codomain, cutoff, monoid):
        return cls(domain, codomain, {}, cutoff, monoid, check=False)

    def image(self, name: str) -> Element:
        return Element(self.codomain, self.columns.get(name, frozenset()),
                       self.cutoff, self.monoid, check=False)

    def entry(self, row: str, col: str) -> NovikovScalar:
        return NovikovScalar([lvl for lvl, g in self.columns.get(col, ()) if g == row],
                             self.cutoff, self.monoid, check=False)

    @property
    def entries(self) -> dict[tuple[str, str], NovikovScalar]:
        out: dict[tuple[str, str], list] = {}
        for col, terms in self.columns.items():
            for lvl, row in terms:
                out.setdefault((row, col), []).append(lvl)
        return {k: NovikovScalar(v, self.cutoff, self.monoid, check=False) for k, v in out.items()}

    def __call__(self, x: Element) -> Element:
        return apply(self, x)

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        return compose(self, other)

    def __add__(self, other: "LinearMap") -> "LinearMap":
        _check_same_shape(self, other)
        cols = dict(self.columns)
        for g, t in other.columns.items():
            cols[g] = cols.get(g, frozenset()) ^ t
        return LinearMap(self.domain, self.codomain, cols, self.cutoff, self.monoid, check=False)

    def __eq__(self, other):
        if not isinstance(other, LinearMap):
            return NotImplemented
        return (self.domain == other.domain and self.codomain == other.codomain
                and self.cutoff == other.cutoff and self.columns == other.columns)

    def __hash__(self):
        return hash(frozenset(self.columns.items()))

    def __repr__(self):
        return f"LinearMap({self.domain.generators} -> {self.codomain.generators}, {self.render()})"

    def render(self) -> str:
        parts = []
        for g in self.domain:
            if g in self.columns:
                parts.append(f"{g} -> {self.image(g)}")
        return "; ".join(parts) if parts else "0"

    def is_zero(self) -> bool:
        return not self.columns

    def truncate(self, cutoff) -> "LinearMap":
        cutoff = as_rational(cutoff)
        return LinearMap(self.domain, self.codomain,
                         {g: frozenset(t for t in terms if t[0] < cutoff)
                          for g, terms in self.columns.items()},
                         cutoff, self.monoid, check=False)

    def residue_matrix(self) -> list[list[int]]:
        """Matrix over Z/2 obtained by setting T = 0 (rows = codomain)."""
        rows = {g: i for i, g in enumerate(self.codomain)}
        mat = [[0] * len(self.domain) for _ in self.codomain]
        for j, col in enumerate(self.domain):
            for lvl, row in self.columns.get(col, ()):
                if lvl == 0:
                    mat[rows[row]][j] ^= 1
        return mat

    def inverse(self) -> "LinearMap":
        """Inverse over Lambda_0; requires an invertible residue matrix."""
        if len(self.domain) != len(self.codomain):
            raise NovikovError("only square maps can be inverted")
        lead = gf2_inverse(self.residue_matrix())
        if lead is None:
            raise NovikovError("residue matrix is singular; map is not invertible over Lambda_0")
        # f = f0 (1 + f0^-1 N) with N of positive valuation; invert the second factor by series
        f0_inv = LinearMap(self.codomain, self.domain,
                           {c: frozenset((Fraction(0), self.domain.generators[i])
                                         for i in range(len(self.domain)) if lead[i][j])
                            for j, c in enumerate(self.codomain)},
                           self.cutoff, self.monoid, check=False)
        positive = LinearMap(self.domain, self.codomain,
                             {g: frozenset(t for t in terms if t[0] > 0)
                              for g, terms in self.columns.items()},
                             self.cutoff, self.monoid, check=False)
        step = compose(f0_inv, positive)
        total = LinearMap.identity(self.domain, self.cutoff, self.monoid)
        power = step
        while not power.is_zero():
            total = total + power
            power = compose(power, step)
        return compose(total, f0_inv)


def _check_same_shape(f, g):
    if f.domain != g.domain or f.codomain != g.codomain:
        raise BasisMismatch("maps have different domain or codomain")
    if f.cutoff != g.cutoff or f.monoid != g.monoid:
        raise NovikovError("maps have different cutoff or monoid")


def apply(f: LinearMap, x: Element) -> Element:
    if x.basis != f.domain:
        raise BasisMismatch("element basis does not match map domain")
    if x.cutoff != f.cutoff or x.monoid != f.monoid:
        raise NovikovError("element and map have different cutoff or monoid")
    acc: set = set()
    for lvl, g in x.terms:
        col = f.columns.get(g)
        if col:
            xor_into(acc, shift_terms(col, lvl, f.cutoff))
    return Element(f.codomain, frozenset(acc), f.cutoff, f.monoid, check=False)


def compose(g: LinearMap, f: LinearMap) -> LinearMap:
    """g o f."""
    if f.codomain != g.domain:
        raise BasisMismatch("codomain of f does not match domain of g")
    if f.cutoff != g.cutoff or f.monoid != g.monoid:
        raise NovikovError("maps have different cutoff or monoid")
    cols = {}
    for name, terms in f.columns.items():
        acc: set = set()
        for lvl, mid in terms:
            col = g.columns.get(mid)
            if col:
                xor_into(acc, shift_terms(col, lvl, f.cutoff))
        cols[name] = frozenset(acc)
    return LinearMap(f.domain, g.codomain, cols, f.cutoff, f.monoid, check=False)


def gf2_inverse(mat: list[list[int]]) -> list[list[int]] | None:
    """Inverse of a square 0/1 matrix over Z/2, or None if singular."""
    n = len(mat)
    if any(len(row) != n for row in mat):
        return None
    aug = [list(row) + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        for r in range(n):
            if r != col and aug[r][col]:
                aug[r] = [a ^ b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def gf2_rank(mat: list[list[int]]) -> int:
    rows = [list(r) for r in mat]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                rows[r] = [a ^ b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# valuation normal form

@dataclass(frozen=True)
class NormalForm:
    """``left @ f @ right == diagonal`` with pivots listed in ascending exponent.

    ``pivots`` holds ``(row, column, exponent)`` triples: the diagonal map
    sends ``column`` to ``T^exponent * row``.
    """

    pivots: tuple[tuple[str, str, Fraction], ...]
    left: LinearMap
    right: LinearMap
    diagonal: LinearMap

    @property
    def exponents(self) -> list[Fraction]:
        return [p[2] for p in self.pivots]


def valuation_normal_form(f: LinearMap) -> NormalForm:
    """Smith-type reduction of ``f`` over the valuation ring Lambda_0.

    Pivots are taken by minimal valuation, ties broken by the
    lexicographically smallest ``(row, column)`` name pair.
    """
    E, G = f.cutoff, f.monoid
    rows_b, cols_b = f.codomain, f.domain
    # mat[row][col] -> frozenset of exponents
    mat: dict[str, dict[str, frozenset]] = {r: {} for r in rows_b}
    for col, terms in f.columns.items():
        for lvl, row in terms:
            cur = mat[row].get(col, frozenset())
            mat[row][col] = cur ^ {lvl}
    for r in rows_b:
        mat[r] = {c: s for c, s in mat[r].items() if s}
    # U and V stored row-wise / column-wise as dict name -> dict name -> exps
    U = {r: {r: frozenset({Fraction(0)})} for r in rows_b}   # U[row][col]
    V = {c: {c: frozenset({Fraction(0)})} for c in cols_b}   # V[col_of_result][row_index] column-major

    def scal(exps):
        return NovikovScalar(exps, E, G, check=False)

    def row_add(table, target, source, factor):
        # table[target] += factor * table[source]
        tgt = dict(table[target])
        for k, s in table[source].items():
            prod = (scal(factor) * scal(s)).exponents
            if prod:
                new = tgt.get(k, frozenset()) ^ prod
                if new:
                    tgt[k] = new
                else:
                    tgt.pop(k, None)
        table[target] = tgt

    def row_scale(table, target, factor):
        table[target] = {k: p for k, s in table[target].items()
                         if (p := (scal(factor) * scal(s)).exponents)}

    active_rows = set(rows_b)
    active_cols = set(cols_b)
    pivots = []
    while True:
        best = None
        for r in active_rows:
            for c, s in mat[r].items():
                if c in active_cols and s:
                    key = (min(s), r, c)
                    if best is None or key < best:
                        best = key
        if best is None:
            break
        v, p, q = best
        unit = scal(mat[p][q]).shift(-v)
        uinv = nov_invert(unit).exponents
        row_scale(mat, p, uinv)
        row_scale(U, p, uinv)
        # clear column q in every other row
        for r in rows_b:
            if r == p:
                continue
            s = mat[r].get(q)
            if s:
                factor = scal(s).shift(-v).exponents
                row_add(mat, r, p, factor)
                row_add(U, r, p, factor)
        # clear row p in every other column (column operations)
        for c in list(mat[p]):
            if c == q:
                continue
            s = mat[p].get(c)
            if s:
                factor = scal(s).shift(-v).exponents
                # col_c += factor * col_q ; only row p has an entry in column q
                new = mat[p][c] ^ (scal(factor) * scal(mat[p][q])).exponents
                if new:
                    mat[p][c] = new
                else:
                    del mat[p][c]
                row_add(V, c, q, factor)
        pivots.append((p, q, v))
        active_rows.discard(p)
        active_cols.discard(q)

    left = LinearMap(rows_b, rows_b,
                     {c: frozenset((e, r) for r in rows_b for e in U[r].get(c, ()))
                      for c in rows_b}, E, G, check=False)
    right = LinearMap(cols_b, cols_b,
                      {c: frozenset((e, r) for r, s in V[c].items() for e in s)
                       for c in cols_b}, E, G, check=False)
    diagonal = LinearMap(cols_b, rows_b, {q: frozenset({(v, p)}) for p, q, v in pivots},
                         E, G, check=False)
    return NormalForm(tuple(pivots), left, right, diagonal)


# ---------------------------------------------------------------------------
# homology

@dataclass(frozen=True)
class HomologyReport:
    """ker d / im d ≅ Lambda_0^free_rank ⊕ ⊕_i Lambda_0 / T^lam_i.

    Exponents at or above ``validity_threshold`` cannot be told apart from
    free summands under truncation and are counted in ``free_rank``.
    """

    free_rank: int
    torsion_exponents: tuple[Fraction, ...]
    validity_threshold: Fraction
    by_degree: tuple[tuple[int, int, tuple[Fraction, ...]], ...] | None = None

    def render(self) -> str:
        tors = ", ".join(format_rational(t) for t in self.torsion_exponents)
        line = (f"free {self.free_rank}, torsion [{tors}], "
                f"threshold {format_rational(self.validity_threshold)}")
        if self.by_degree is None:
            return line
        extra = []
        for deg, free, torsion in self.by_degree:
            ts = ", ".join(format_rational(t) for t in torsion)
            extra.append(f"degree {deg}: free {free}, torsion [{ts}]")
        return "\n".join([line] + extra)

    def __str__(self):
        return self.render()

    def agrees_with(self, other: "HomologyReport") -> bool:
        """Same free rank and torsion multiset below the common threshold."""
        t = min(self.validity_threshold, other.validity_threshold)

        def visible(rep):
            free = rep.free_rank + sum(1 for x in rep.torsion_exponents if x >= t)
            return free, tuple(x for x in rep.torsion_exponents if x < t)

        return visible(self) == visible(other)


def square_zero_witness(d: LinearMap):
    """First (level, generator, residual) with d(d(g)) != 0, or None."""
    dd = compose(d, d)
    best = None
    for g in d.domain:
        terms = dd.columns.get(g)
        if not terms:
            continue
        lvl = min(t[0] for t in terms)
        key = (lvl, d.domain.index(g))
        if best is None or key < best[0]:
            best = (key, g, frozenset(h for l, h in terms if l == lvl))
    if best is None:
        return None
    (lvl, _), g, residual = best
    return lvl, g, residual


def _restrict(d: LinearMap, cols, rows) -> LinearMap:
    dom = Basis(tuple(cols))
    cod = Basis(tuple(rows))
    rs = set(rows)
    return LinearMap(dom, cod, {c: frozenset(t for t in d.columns.get(c, ()) if t[1] in rs)
                                for c in cols}, d.cutoff, d.monoid, check=False)


def _degree_shift(d: LinearMap):
    basis = d.domain
    m = basis.modulus
    shifts = set()
    for col, terms in d.columns.items():
        for _, row in terms:
            s = basis.degree(row) - basis.degree(col)
            shifts.add(s % m if m else s)
    if len(shifts) > 1:
        return None
    return shifts.pop() if shifts else 0


def homology(d: LinearMap) -> HomologyReport:
    """Homology of a square-zero endomorphism over Lambda_0."""
    if d.domain != d.codomain:
        raise BasisMismatch("a differential must be an endomorphism")
    wit = square_zero_witness(d)
    if wit is not None:
        lvl, g, residual = wit
        raise NotAComplex(
            f"d o d != 0: generator {g} at level {format_rational(lvl)} "
            f"(residual {' + '.join(sorted(residual))})", g, lvl, residual)
    nf = valuation_normal_form(d)
    rank = len(nf.pivots)
    torsion = tuple(sorted(v for _, _, v in nf.pivots if v > 0))
    by_degree = None
    if d.domain.graded:
        shift = _degree_shift(d)
        if shift is not None:
            by_degree = _graded_homology(d, shift)
    return HomologyReport(len(d.domain) - 2 * rank, torsion, d.cutoff, by_degree)


def _graded_homology(d: LinearMap, shift: int):
    basis = d.domain
    m = basis.modulus
    classes: dict[int, list[str]] = {}
    for g in basis:
        classes.setdefault(basis.degree(g), []).append(g)

    def norm(k):
        return k % m if m else k

    def pivots_from(deg):
        src = classes.get(deg, [])
        tgt = classes.get(norm(deg + shift), [])
        if not src or not tgt:
            return []
        return valuation_normal_form(_restrict(d, src, tgt)).pivots

    out = []
    for deg in sorted(classes):
        outgoing = pivots_from(deg)
        incoming = pivots_from(norm(deg - shift))
        free = len(classes[deg]) - len(outgoing) - len(incoming)
        out.append((deg, free, tuple(sorted(v for _, _, v in incoming if v > 0))))
    return tuple(out)
