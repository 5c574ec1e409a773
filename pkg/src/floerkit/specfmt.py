"""The ``.afd`` text format for structures, with a strict parser and canonical writer.

Grammar (one statement per line; ``#`` starts a comment; entries are indented)::

    document  := header section*
    header    := "format" INT NL ["monoid" RAT+ NL] ["cutoff" RAT NL]
    section   := basis | degrees | algebra | module | bimodule | morphism
               | floer | gluing | element
    basis     := "basis" NAME ":" GEN*
    degrees   := "degrees" NAME ["mod" INT] ":" (GEN "=" INT)*
    algebra   := "algebra" NAME "on" NAME  (INDENT "m" K "@" RAT ":" GEN* "->" GEN+)*
               | "algebra" NAME "opposite" NAME
    module    := "module" NAME "on" NAME "over" NAME
                 (INDENT "n" K "@" RAT ":" GEN ["|" GEN*] "->" GEN+)*
    bimodule  := "bimodule" NAME "on" NAME "over" NAME NAME
                 (INDENT "n" K "," K "@" RAT ":" GEN* "|" GEN "|" GEN* "->" GEN+)*
    morphism  := "morphism" NAME "from" NAME "to" NAME
                 (INDENT "f" K "@" RAT ":" GEN ["|" GEN*] "->" GEN+)*
    floer     := "floer" NAME "on" NAME
                 (INDENT "d" "@" RAT ":" GEN "->" GEN ["count=" INT])*
    gluing    := "gluing" NAME ":" NAME NAME NAME NAME      # module1 bimodule module2 floer
                 (INDENT "phi" K "," K "@" RAT ":" GEN "|" GEN* "|" GEN "|" GEN "|" GEN* "->" GEN+)*
    element   := "element" NAME "in" NAME ":" ("0" | TERM ("+" TERM)*)
    TERM      := "T^" RAT "*" GEN

Coefficients are in Z/2, so an entry lists the generators whose coefficient
is 1.  Canonical output orders sections as above, names alphabetically,
entries by (level, arity, inputs in basis order) and outputs in basis order.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .ainfty import (AInftyHomomorphism, FilteredAlgebra, FilteredBimodule, FilteredRightModule,
                     GappedOperationTable, StructureError, opposite_algebra, render_signature,
                     _sig_key)
from .lincomb import Basis, BasisMismatch, Element
from .novikov import DiscreteMonoid, NovikovError, as_rational, format_rational
from .pairing import FloerComplexData, GluingTensor

FORMAT_VERSION = 1

#: every diagnostic the parser can emit
DIAGNOSTIC_CODES = (
    "SYNTAX_ERROR",
    "UNSUPPORTED_VERSION",
    "UNKNOWN_SECTION",
    "UNRESOLVED_NAME",
    "DUPLICATE_NAME",
    "DUPLICATE_ENTRY",
    "INVALID_VALUE",
    "LEVEL_NOT_IN_MONOID",
    "LEVEL_OUT_OF_RANGE",
    "ARITY_MISMATCH",
    "INCOMPATIBLE_STRUCTURES",
)

SECTION_ORDER = ("basis", "algebra", "module", "bimodule", "morphism", "floer", "gluing", "element")

_NAME = r"[A-Za-z_][A-Za-z0-9_.']*"
_NAME_RE = re.compile(_NAME + r"\Z")


class ParseError(ValueError):
    def __init__(self, code: str, message: str, line: int = 0, column: int = 0):
        assert code in DIAGNOSTIC_CODES, code
        super().__init__(f"{code} at {line}:{column}: {message}")
        self.code = code
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class TableDecl:
    """Rows ``(signature, level, inputs, outputs)`` of one section."""

    rows: tuple

    def table(self) -> GappedOperationTable:
        return GappedOperationTable.from_entries(self.rows)


@dataclass(frozen=True)
class AlgebraDecl:
    basis: str
    table: TableDecl | None = None
    opposite_of: str | None = None


@dataclass(frozen=True)
class ModuleDecl:
    basis: str
    algebra: str
    table: TableDecl


@dataclass(frozen=True)
class BimoduleDecl:
    basis: str
    left: str
    right: str
    table: TableDecl


@dataclass(frozen=True)
class MorphismDecl:
    source: str
    target: str
    table: TableDecl


@dataclass(frozen=True)
class FloerDecl:
    basis: str
    weights: tuple  # ((a, b, level, count), ...)


@dataclass(frozen=True)
class GluingDecl:
    module1: str
    bimodule: str
    module2: str
    floer: str
    table: TableDecl


@dataclass(frozen=True)
class ElementDecl:
    basis: str
    terms: tuple  # ((level, gen), ...)


@dataclass
class StructureDocument:
    format_version: int = FORMAT_VERSION
    monoid: tuple = ()
    cutoff: Fraction | None = None
    bases: dict = field(default_factory=dict)
    algebras: dict = field(default_factory=dict)
    modules: dict = field(default_factory=dict)
    bimodules: dict = field(default_factory=dict)
    morphisms: dict = field(default_factory=dict)
    floers: dict = field(default_factory=dict)
    gluings: dict = field(default_factory=dict)
    elements: dict = field(default_factory=dict)
    _built: dict = field(default_factory=dict, compare=False, repr=False)

    # -- construction of engine objects ---------------------------------

    @property
    def monoid_obj(self) -> DiscreteMonoid:
        return DiscreteMonoid(self.monoid)

    def basis(self, name: str) -> Basis:
        return self.bases[name]

    def _cache(self, key, make):
        if key not in self._built:
            self._built[key] = make()
        return self._built[key]

    def algebra(self, name: str) -> FilteredAlgebra:
        def make():
            decl = self.algebras[name]
            if decl.opposite_of is not None:
                op = opposite_algebra(self.algebra(decl.opposite_of))
                return FilteredAlgebra(op.basis, op.ops, op.monoid, op.cutoff, name)
            return FilteredAlgebra(self.bases[decl.basis], decl.table.table(), self.monoid_obj,
                                   self.cutoff, name)
        return self._cache(("algebra", name), make)

    def module(self, name: str) -> FilteredRightModule:
        def make():
            decl = self.modules[name]
            return FilteredRightModule(self.algebra(decl.algebra), self.bases[decl.basis],
                                       decl.table.table(), name)
        return self._cache(("module", name), make)

    def bimodule(self, name: str) -> FilteredBimodule:
        def make():
            decl = self.bimodules[name]
            return FilteredBimodule(self.algebra(decl.left), self.algebra(decl.right),
                                    self.bases[decl.basis], decl.table.table(), name)
        return self._cache(("bimodule", name), make)

    def morphism(self, name: str) -> AInftyHomomorphism:
        def make():
            decl = self.morphisms[name]
            return AInftyHomomorphism(self.module(decl.source), self.module(decl.target),
                                      decl.table.table(), name=name)
        return self._cache(("morphism", name), make)

    def floer(self, name: str) -> FloerComplexData:
        def make():
            decl = self.floers[name]
            weights: dict = {}
            for a, b, lvl, count in decl.weights:
                weights.setdefault((a, b), []).append((lvl, count))
            return FloerComplexData(self.bases[decl.basis], weights, self.monoid_obj, self.cutoff, name)
        return self._cache(("floer", name), make)

    def gluing(self, name: str) -> GluingTensor:
        def make():
            decl = self.gluings[name]
            return GluingTensor(self.module(decl.module1), self.bimodule(decl.bimodule),
                                self.module(decl.module2), self.floer(decl.floer),
                                decl.table.table(), name)
        return self._cache(("gluing", name), make)

    def element(self, name: str) -> Element:
        def make():
            decl = self.elements[name]
            return Element(self.bases[decl.basis], decl.terms, self.cutoff, self.monoid_obj)
        return self._cache(("element", name), make)

    def build_all(self):
        for kind in SECTION_ORDER[1:]:
            getter = getattr(self, kind)
            for name in getattr(self, _plural(kind)):
                getter(name)

    def table_entry_count(self) -> int:
        n = 0
        for coll in (self.algebras, self.modules, self.bimodules, self.morphisms, self.gluings):
            for decl in coll.values():
                table = getattr(decl, "table", None)
                if table is not None:
                    n += len(table.table())
        return n

    def truncated(self, cutoff) -> "StructureDocument":
        """Same document with every level at or above ``cutoff`` dropped."""
        cutoff = as_rational(cutoff)
        if self.cutoff is None or cutoff > self.cutoff:
            raise StructureError("the cutoff can only be lowered")
        if cutoff <= 0:
            raise StructureError("cutoff must be positive")

        def cut(t: TableDecl | None):
            if t is None:
                return None
            return TableDecl(tuple(r for r in t.rows if r[1] < cutoff))

        doc = StructureDocument(self.format_version, self.monoid, cutoff, dict(self.bases))
        doc.algebras = {k: AlgebraDecl(v.basis, cut(v.table), v.opposite_of)
                        for k, v in self.algebras.items()}
        doc.modules = {k: ModuleDecl(v.basis, v.algebra, cut(v.table)) for k, v in self.modules.items()}
        doc.bimodules = {k: BimoduleDecl(v.basis, v.left, v.right, cut(v.table))
                         for k, v in self.bimodules.items()}
        doc.morphisms = {k: MorphismDecl(v.source, v.target, cut(v.table))
                         for k, v in self.morphisms.items()}
        doc.floers = {k: FloerDecl(v.basis, tuple(w for w in v.weights if w[2] < cutoff))
                      for k, v in self.floers.items()}
        doc.gluings = {k: GluingDecl(v.module1, v.bimodule, v.module2, v.floer, cut(v.table))
                       for k, v in self.gluings.items()}
        doc.elements = {k: ElementDecl(v.basis, tuple(t for t in v.terms if t[0] < cutoff))
                        for k, v in self.elements.items()}
        return doc


def _plural(kind: str) -> str:
    return {"basis": "bases"}.get(kind, kind + "s")


# ---------------------------------------------------------------------------
# parsing

_ENTRY_RE = re.compile(r"(?P<kw>[A-Za-z]+)\s*(?P<sig>\d+(?:\s*,\s*\d+)?)?\s*@\s*(?P<lvl>\S+?)\s*:"
                       r"(?P<lhs>.*?)->(?P<rhs>.*)\Z")
_TERM_RE = re.compile(r"T\^(?P<lvl>[^\s*]+)\s*\*\s*(?P<gen>" + _NAME + r")\Z")

_SECTION_HEADS = {
    "basis": re.compile(r"basis\s+(?P<name>" + _NAME + r")\s*:(?P<gens>.*)\Z"),
    "degrees": re.compile(r"degrees\s+(?P<name>" + _NAME + r")(?:\s+mod\s+(?P<mod>\S+))?\s*:(?P<rest>.*)\Z"),
    "algebra": re.compile(r"algebra\s+(?P<name>" + _NAME + r")\s+(?:on\s+(?P<basis>" + _NAME
                          + r")|opposite\s+(?P<op>" + _NAME + r"))\Z"),
    "module": re.compile(r"module\s+(?P<name>" + _NAME + r")\s+on\s+(?P<basis>" + _NAME
                         + r")\s+over\s+(?P<alg>" + _NAME + r")\Z"),
    "bimodule": re.compile(r"bimodule\s+(?P<name>" + _NAME + r")\s+on\s+(?P<basis>" + _NAME
                           + r")\s+over\s+(?P<left>" + _NAME + r")\s+(?P<right>" + _NAME + r")\Z"),
    "morphism": re.compile(r"morphism\s+(?P<name>" + _NAME + r")\s+from\s+(?P<src>" + _NAME
                           + r")\s+to\s+(?P<tgt>" + _NAME + r")\Z"),
    "floer": re.compile(r"floer\s+(?P<name>" + _NAME + r")\s+on\s+(?P<basis>" + _NAME + r")\Z"),
    "gluing": re.compile(r"gluing\s+(?P<name>" + _NAME + r")\s*:\s*(?P<m1>" + _NAME + r")\s+(?P<b>"
                         + _NAME + r")\s+(?P<m2>" + _NAME + r")\s+(?P<f>" + _NAME + r")\Z"),
    "element": re.compile(r"element\s+(?P<name>" + _NAME + r")\s+in\s+(?P<basis>" + _NAME
                          + r")\s*:(?P<terms>.*)\Z"),
}

_ENTRY_KEYWORD = {"algebra": "m", "module": "n", "bimodule": "n", "morphism": "f", "floer": "d",
                  "gluing": "phi"}
# number of "|"-separated groups and which group sizes the signature fixes
_GROUPS = {"algebra": 1, "module": 2, "bimodule": 3, "morphism": 2, "gluing": 5}


@dataclass
class _Line:
    number: int
    indent: int
    text: str


def _lines(text: str):
    out = []
    for i, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        if "\t" in body[: len(body) - len(body.lstrip())]:
            raise ParseError("SYNTAX_ERROR", "tabs are not allowed for indentation", i, 1)
        indent = len(body) - len(body.lstrip(" "))
        out.append(_Line(i, indent, body.strip()))
    return out


class _Parser:
    def __init__(self, text: str):
        self.doc = StructureDocument()
        self.lines = _lines(text)
        self.pos = 0
        self.section_lines: dict = {}
        self.entry_lines: dict = {}

    def fail(self, code, message, line: _Line | int | None = None, column: int | None = None):
        if isinstance(line, _Line):
            number, col = line.number, (line.indent + 1 if column is None else column)
        else:
            number, col = (line or 0), (column or 1)
        raise ParseError(code, message, number, col)

    def rational(self, token: str, line: _Line, what: str) -> Fraction:
        try:
            return as_rational(token)
        except NovikovError:
            self.fail("INVALID_VALUE", f"{what} {token!r} is not an exact rational", line,
                      self.col(line, token))

    def col(self, line: _Line, token: str) -> int:
        i = line.text.find(token)
        return line.indent + 1 + (i if i >= 0 else 0)

    def level(self, token: str, line: _Line) -> Fraction:
        lvl = self.rational(token, line, "level")
        if lvl >= self.doc.cutoff:
            self.fail("LEVEL_OUT_OF_RANGE", f"level {token} is not below the cutoff "
                      f"{format_rational(self.doc.cutoff)}", line, self.col(line, token))
        if not self.doc.monoid_obj.contains(lvl):
            self.fail("LEVEL_NOT_IN_MONOID",
                      f"level {token} is not in the monoid generated by "
                      f"{' '.join(format_rational(g) for g in self.doc.monoid)}",
                      line, self.col(line, token))
        return lvl

    def parse(self) -> StructureDocument:
        self.header()
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            if line.indent:
                self.fail("SYNTAX_ERROR", "indented line outside a section", line)
            kw = line.text.split()[0].rstrip(":")
            if kw not in _SECTION_HEADS:
                if kw in ("format", "monoid", "cutoff"):
                    self.fail("SYNTAX_ERROR", f"{kw} must appear in the header", line)
                self.fail("UNKNOWN_SECTION", f"unknown section {kw!r}", line)
            if self.doc.cutoff is None or not self.doc.monoid:
                self.fail("SYNTAX_ERROR", "monoid and cutoff must be declared before sections", line)
            m = _SECTION_HEADS[kw].match(line.text)
            if not m:
                self.fail("SYNTAX_ERROR", f"malformed {kw} header", line)
            self.pos += 1
            entries = []
            while self.pos < len(self.lines) and self.lines[self.pos].indent:
                entries.append(self.lines[self.pos])
                self.pos += 1
            getattr(self, "section_" + kw)(line, m, entries)
        self.resolve()
        return self.doc

    def header(self):
        if not self.lines:
            self.fail("SYNTAX_ERROR", "empty document: a format line is required", 1, 1)
        first = self.lines[0]
        parts = first.text.split()
        if parts[0] != "format" or len(parts) != 2 or first.indent:
            self.fail("SYNTAX_ERROR", "document must start with 'format <version>'", first)
        try:
            version = int(parts[1])
        except ValueError:
            self.fail("SYNTAX_ERROR", f"format version {parts[1]!r} is not an integer", first,
                      self.col(first, parts[1]))
        if version != FORMAT_VERSION:
            self.fail("UNSUPPORTED_VERSION", f"format version {version} is not supported "
                      f"(this reader understands {FORMAT_VERSION})", first, self.col(first, parts[1]))
        self.doc.format_version = version
        self.pos = 1
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            parts = line.text.split()
            if parts[0] == "monoid":
                if self.doc.monoid:
                    self.fail("DUPLICATE_NAME", "monoid declared twice", line)
                if len(parts) < 2:
                    self.fail("SYNTAX_ERROR", "monoid needs at least one generator", line)
                gens = [self.rational(t, line, "monoid generator") for t in parts[1:]]
                for t, g in zip(parts[1:], gens):
                    if g <= 0:
                        self.fail("INVALID_VALUE", f"monoid generator {t} must be positive", line,
                                  self.col(line, t))
                self.doc.monoid = tuple(sorted(set(gens)))
            elif parts[0] == "cutoff":
                if self.doc.cutoff is not None:
                    self.fail("DUPLICATE_NAME", "cutoff declared twice", line)
                if len(parts) != 2:
                    self.fail("SYNTAX_ERROR", "cutoff takes one rational", line)
                c = self.rational(parts[1], line, "cutoff")
                if c <= 0:
                    self.fail("INVALID_VALUE", "cutoff must be positive", line, self.col(line, parts[1]))
                self.doc.cutoff = c
            else:
                break
            self.pos += 1

    # -- sections -------------------------------------------------------

    def declare(self, kind: str, name: str, line: _Line):
        coll = getattr(self.doc, _plural(kind))
        if name in coll:
            self.fail("DUPLICATE_NAME", f"{kind} {name!r} is declared twice", line)
        self.section_lines[(kind, name)] = line

    def no_entries(self, kind, entries):
        if entries:
            self.fail("SYNTAX_ERROR", f"{kind} takes no indented entries", entries[0])

    def gen_list(self, text: str, line: _Line) -> list[str]:
        gens = text.split()
        for g in gens:
            if not _NAME_RE.match(g):
                self.fail("SYNTAX_ERROR", f"bad generator name {g!r}", line, self.col(line, g))
        return gens

    def section_basis(self, line, m, entries):
        self.no_entries("basis", entries)
        name = m["name"]
        self.declare("basis", name, line)
        gens = self.gen_list(m["gens"], line)
        if len(set(gens)) != len(gens):
            dup = next(g for g in gens if gens.count(g) > 1)
            self.fail("DUPLICATE_ENTRY", f"generator {dup!r} repeated in basis {name}", line,
                      self.col(line, dup))
        self.doc.bases[name] = Basis(tuple(gens), name=name)

    def section_degrees(self, line, m, entries):
        self.no_entries("degrees", entries)
        name = m["name"]
        if name not in self.doc.bases:
            self.fail("UNRESOLVED_NAME", f"degrees for undeclared basis {name!r} "
                      "(declare the basis first)", line, self.col(line, name))
        basis = self.doc.bases[name]
        if basis.degrees is not None:
            self.fail("DUPLICATE_NAME", f"degrees for {name!r} given twice", line)
        mod = 0
        if m["mod"] is not None:
            try:
                mod = int(m["mod"])
            except ValueError:
                self.fail("INVALID_VALUE", f"modulus {m['mod']!r} is not an integer", line)
            if mod < 0:
                self.fail("INVALID_VALUE", "modulus must be >= 0", line)
        degs = {}
        for tok in m["rest"].split():
            g, _, d = tok.partition("=")
            if g not in basis:
                self.fail("UNRESOLVED_NAME", f"{g!r} is not a generator of {name}", line,
                          self.col(line, tok))
            if g in degs:
                self.fail("DUPLICATE_ENTRY", f"degree of {g!r} given twice", line, self.col(line, tok))
            try:
                degs[g] = int(d)
            except ValueError:
                self.fail("INVALID_VALUE", f"degree {d!r} is not an integer", line, self.col(line, tok))
        if set(degs) != set(basis.generators):
            missing = [g for g in basis if g not in degs]
            self.fail("INVALID_VALUE", f"missing degrees for {' '.join(missing)}", line)
        self.doc.bases[name] = Basis(basis.generators, tuple(degs.items()), mod, name)

    def entry_rows(self, kind: str, entries, slot_bases: Callable, out_basis: Basis) -> TableDecl:
        rows = []
        seen = {}
        kw = _ENTRY_KEYWORD[kind]
        ngroups = _GROUPS[kind]
        for line in entries:
            m = _ENTRY_RE.match(line.text)
            if not m or m["kw"] != kw:
                self.fail("SYNTAX_ERROR", f"expected '{kw} <arity> @<level>: inputs -> outputs'", line)
            sig_text = m["sig"]
            if sig_text is None:
                self.fail("SYNTAX_ERROR", "missing arity", line)
            parts = [int(p) for p in sig_text.replace(" ", "").split(",")]
            if kind in ("bimodule", "gluing"):
                if len(parts) != 2:
                    self.fail("SYNTAX_ERROR", "this section needs an arity pair 'k1,k2'", line)
                sig = (parts[0], parts[1])
            else:
                if len(parts) != 1:
                    self.fail("SYNTAX_ERROR", "this section needs a single arity", line)
                sig = parts[0]
            lvl = self.level(m["lvl"], line)
            groups = [g.split() for g in m["lhs"].split("|")]
            if kind in ("module", "morphism") and len(groups) == 1:
                groups.append([])
            if len(groups) != ngroups:
                self.fail("SYNTAX_ERROR", f"expected {ngroups} '|'-separated input groups", line)
            inputs = tuple(g for grp in groups for g in grp)
            expected = slot_bases(sig)
            sizes = _group_sizes(kind, sig)
            if [len(g) for g in groups] != sizes:
                self.fail("ARITY_MISMATCH", f"arity {render_signature(sig)} needs input groups of "
                          f"sizes {sizes}, got {[len(g) for g in groups]}", line)
            for b, g in zip(expected, inputs):
                if g not in b:
                    self.fail("UNRESOLVED_NAME", f"{g!r} is not a generator of basis {b.name}",
                              line, self.col(line, g))
            outs = self.gen_list(m["rhs"], line)
            if not outs:
                self.fail("SYNTAX_ERROR", "an entry needs at least one output", line)
            for g in outs:
                if g not in out_basis:
                    self.fail("UNRESOLVED_NAME", f"{g!r} is not a generator of basis {out_basis.name}",
                              line, self.col(line, g))
            if len(set(outs)) != len(outs):
                self.fail("DUPLICATE_ENTRY", "an output is repeated", line)
            key = (sig, lvl, inputs)
            if key in seen:
                self.fail("DUPLICATE_ENTRY", f"entry {render_signature(sig)} @{m['lvl']} on "
                          f"({' '.join(inputs)}) repeats line {seen[key]}", line)
            seen[key] = line.number
            rows.append((sig, lvl, inputs, tuple(outs)))
        return TableDecl(_canonical_rows(rows, slot_bases, out_basis))

    def resolve_basis(self, name, line) -> Basis:
        if name not in self.doc.bases:
            self.fail("UNRESOLVED_NAME", f"unknown basis {name!r}", line, self.col(line, name))
        return self.doc.bases[name]

    def section_algebra(self, line, m, entries):
        name = m["name"]
        self.declare("algebra", name, line)
        if m["op"] is not None:
            self.no_entries("opposite algebra", entries)
            self.doc.algebras[name] = AlgebraDecl("", None, m["op"])
            return
        basis = self.resolve_basis(m["basis"], line)
        table = self.entry_rows("algebra", entries, lambda s: [basis] * s, basis)
        self.doc.algebras[name] = AlgebraDecl(m["basis"], table)

    def _alg_basis(self, alg_name, line) -> Basis:
        seen = set()
        while True:
            decl = self.doc.algebras.get(alg_name)
            if decl is None:
                self.fail("UNRESOLVED_NAME", f"unknown algebra {alg_name!r}", line,
                          self.col(line, alg_name))
            if decl.opposite_of is None:
                return self.doc.bases[decl.basis]
            if alg_name in seen:
                self.fail("INCOMPATIBLE_STRUCTURES", "cyclic chain of opposite algebras", line)
            seen.add(alg_name)
            alg_name = decl.opposite_of

    def section_module(self, line, m, entries):
        name = m["name"]
        self.declare("module", name, line)
        basis = self.resolve_basis(m["basis"], line)
        alg = self._alg_basis(m["alg"], line)
        table = self.entry_rows("module", entries, lambda s: [basis] + [alg] * s, basis)
        self.doc.modules[name] = ModuleDecl(m["basis"], m["alg"], table)

    def section_bimodule(self, line, m, entries):
        name = m["name"]
        self.declare("bimodule", name, line)
        basis = self.resolve_basis(m["basis"], line)
        left = self._alg_basis(m["left"], line)
        right = self._alg_basis(m["right"], line)
        table = self.entry_rows("bimodule", entries,
                                lambda s: [left] * s[0] + [basis] + [right] * s[1], basis)
        self.doc.bimodules[name] = BimoduleDecl(m["basis"], m["left"], m["right"], table)

    def _module_decl(self, name, line) -> ModuleDecl:
        decl = self.doc.modules.get(name)
        if decl is None:
            self.fail("UNRESOLVED_NAME", f"unknown module {name!r}", line, self.col(line, name))
        return decl

    def section_morphism(self, line, m, entries):
        name = m["name"]
        self.declare("morphism", name, line)
        src = self._module_decl(m["src"], line)
        tgt = self._module_decl(m["tgt"], line)
        sb, tb = self.doc.bases[src.basis], self.doc.bases[tgt.basis]
        alg = self._alg_basis(src.algebra, line)
        table = self.entry_rows("morphism", entries, lambda s: [sb] + [alg] * s, tb)
        self.doc.morphisms[name] = MorphismDecl(m["src"], m["tgt"], table)

    def section_floer(self, line, m, entries):
        name = m["name"]
        self.declare("floer", name, line)
        basis = self.resolve_basis(m["basis"], line)
        rows = []
        seen = {}
        pat = re.compile(r"d\s*@\s*(?P<lvl>\S+?)\s*:\s*(?P<a>\S+)\s*->\s*(?P<b>\S+)"
                         r"(?:\s+count=(?P<count>\S+))?\Z")
        for e in entries:
            mm = pat.match(e.text)
            if not mm:
                self.fail("SYNTAX_ERROR", "expected 'd @<level>: a -> b [count=N]'", e)
            lvl = self.level(mm["lvl"], e)
            for g in (mm["a"], mm["b"]):
                if g not in basis:
                    self.fail("UNRESOLVED_NAME", f"{g!r} is not a generator of basis {basis.name}",
                              e, self.col(e, g))
            count = 1
            if mm["count"] is not None:
                try:
                    count = int(mm["count"])
                except ValueError:
                    self.fail("INVALID_VALUE", f"count {mm['count']!r} is not an integer", e)
                if count < 0:
                    self.fail("INVALID_VALUE", "counts must be non-negative", e)
            if lvl == 0 and mm["a"] != mm["b"]:
                self.fail("INVALID_VALUE", "boundary weights between distinct generators need "
                          "positive energy", e, self.col(e, mm["lvl"]))
            key = (mm["a"], mm["b"], lvl)
            if key in seen:
                self.fail("DUPLICATE_ENTRY", f"weight {mm['a']} -> {mm['b']} @{mm['lvl']} repeats "
                          f"line {seen[key]}", e)
            seen[key] = e.number
            rows.append((mm["a"], mm["b"], lvl, count))
        rows.sort(key=lambda r: (r[2], basis.index(r[0]), basis.index(r[1])))
        self.doc.floers[name] = FloerDecl(m["basis"], tuple(rows))

    def section_gluing(self, line, m, entries):
        name = m["name"]
        self.declare("gluing", name, line)
        m1 = self._module_decl(m["m1"], line)
        m2 = self._module_decl(m["m2"], line)
        bdecl = self.doc.bimodules.get(m["b"])
        if bdecl is None:
            self.fail("UNRESOLVED_NAME", f"unknown bimodule {m['b']!r}", line, self.col(line, m["b"]))
        fdecl = self.doc.floers.get(m["f"])
        if fdecl is None:
            self.fail("UNRESOLVED_NAME", f"unknown floer data {m['f']!r}", line, self.col(line, m["f"]))
        B = self.doc.bases
        y1, y2, a, out = B[m1.basis], B[m2.basis], B[bdecl.basis], B[fdecl.basis]
        x1, x2 = self._alg_basis(bdecl.left, line), self._alg_basis(bdecl.right, line)
        table = self.entry_rows("gluing", entries,
                                lambda s: [y1] + [x1] * s[0] + [a, y2] + [x2] * s[1], out)
        self.doc.gluings[name] = GluingDecl(m["m1"], m["b"], m["m2"], m["f"], table)

    def section_element(self, line, m, entries):
        self.no_entries("element", entries)
        name = m["name"]
        self.declare("element", name, line)
        basis = self.resolve_basis(m["basis"], line)
        text = m["terms"].strip()
        terms = []
        if text != "0":
            if not text:
                self.fail("SYNTAX_ERROR", "element needs terms or 0", line)
            for part in text.split("+"):
                part = part.strip()
                tm = _TERM_RE.match(part)
                if not tm:
                    self.fail("SYNTAX_ERROR", f"bad term {part!r}; expected 'T^<level> * <gen>'",
                              line, self.col(line, part))
                lvl = self.level(tm["lvl"], line)
                if tm["gen"] not in basis:
                    self.fail("UNRESOLVED_NAME", f"{tm['gen']!r} is not a generator of basis {basis.name}",
                              line, self.col(line, part))
                if (lvl, tm["gen"]) in terms:
                    self.fail("DUPLICATE_ENTRY", f"term {part!r} repeated", line, self.col(line, part))
                terms.append((lvl, tm["gen"]))
        terms.sort(key=lambda t: (t[0], basis.index(t[1])))
        self.doc.elements[name] = ElementDecl(m["basis"], tuple(terms))

    def resolve(self):
        doc = self.doc
        for name, decl in doc.algebras.items():
            if decl.opposite_of is not None:
                self._alg_basis(name, self.section_lines[("algebra", name)])
        try:
            doc.build_all()
        except (StructureError, BasisMismatch, NovikovError) as exc:
            kind, name = _culprit(doc, exc)
            line = self.section_lines.get((kind, name))
            self.fail("INCOMPATIBLE_STRUCTURES", str(exc), line)


def _culprit(doc: StructureDocument, exc):
    # rebuild one section at a time to find the first failing one
    doc._built.clear()
    for kind in SECTION_ORDER[1:]:
        for name in getattr(doc, _plural(kind)):
            try:
                getattr(doc, kind)(name)
            except Exception:
                return kind, name
    return None, None


def _group_sizes(kind: str, sig) -> list[int]:
    if kind == "algebra":
        return [sig]
    if kind in ("module", "morphism"):
        return [1, sig]
    if kind == "bimodule":
        return [sig[0], 1, sig[1]]
    return [1, sig[0], 1, 1, sig[1]]


def _canonical_rows(rows, slot_bases: Callable, out_basis: Basis) -> tuple:
    def key(r):
        sig, lvl, inputs, _ = r
        return (lvl, _sig_key(sig), tuple(b.index(g) for b, g in zip(slot_bases(sig), inputs)))
    return tuple((sig, lvl, inputs, tuple(sorted(outs, key=out_basis.index)))
                 for sig, lvl, inputs, outs in sorted(rows, key=key))


def parse(text: str) -> StructureDocument:
    """Parse and fully validate a document; raises :class:`ParseError`."""
    if not isinstance(text, str):
        raise ParseError("SYNTAX_ERROR", "document must be text")
    return _Parser(text).parse()


def load(path) -> StructureDocument:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# ---------------------------------------------------------------------------
# serialization

def _render_inputs(kind: str, sig, inputs) -> str:
    groups = []
    pos = 0
    for size in _group_sizes(kind, sig):
        groups.append(" ".join(inputs[pos:pos + size]))
        pos += size
    if kind in ("module", "morphism") and sig == 0:
        return groups[0]
    if kind == "algebra":
        return groups[0]
    return " | ".join(groups).replace("  ", " ").strip()


def _render_rows(kind: str, table: TableDecl) -> list[str]:
    kw = _ENTRY_KEYWORD[kind]
    out = []
    for sig, lvl, inputs, outs in table.rows:
        lhs = _render_inputs(kind, sig, inputs)
        lhs = f" {lhs}" if lhs else ""
        out.append(f"  {kw} {render_signature(sig)} @{format_rational(lvl)}:{lhs} -> {' '.join(outs)}")
    return out


def serialize(doc: StructureDocument) -> str:
    """Canonical text of a document."""
    lines = [f"format {doc.format_version}"]
    if doc.monoid:
        lines.append("monoid " + " ".join(format_rational(g) for g in doc.monoid))
    if doc.cutoff is not None:
        lines.append(f"cutoff {format_rational(doc.cutoff)}")
    blocks = []
    for name in sorted(doc.bases):
        b = doc.bases[name]
        block = [f"basis {name}: {' '.join(b.generators)}".rstrip()]
        if b.degrees is not None:
            mod = f" mod {b.modulus}" if b.modulus else ""
            block.append(f"degrees {name}{mod}: " + " ".join(f"{g}={d}" for g, d in b.degrees))
        blocks.append(block)
    for name in sorted(doc.algebras):
        d = doc.algebras[name]
        if d.opposite_of is not None:
            blocks.append([f"algebra {name} opposite {d.opposite_of}"])
        else:
            blocks.append([f"algebra {name} on {d.basis}"] + _render_rows("algebra", d.table))
    for name in sorted(doc.modules):
        d = doc.modules[name]
        blocks.append([f"module {name} on {d.basis} over {d.algebra}"] + _render_rows("module", d.table))
    for name in sorted(doc.bimodules):
        d = doc.bimodules[name]
        blocks.append([f"bimodule {name} on {d.basis} over {d.left} {d.right}"]
                      + _render_rows("bimodule", d.table))
    for name in sorted(doc.morphisms):
        d = doc.morphisms[name]
        blocks.append([f"morphism {name} from {d.source} to {d.target}"]
                      + _render_rows("morphism", d.table))
    for name in sorted(doc.floers):
        d = doc.floers[name]
        rows = [f"  d @{format_rational(lvl)}: {a} -> {b}" + (f" count={c}" if c != 1 else "")
                for a, b, lvl, c in d.weights]
        blocks.append([f"floer {name} on {d.basis}"] + rows)
    for name in sorted(doc.gluings):
        d = doc.gluings[name]
        blocks.append([f"gluing {name}: {d.module1} {d.bimodule} {d.module2} {d.floer}"]
                      + _render_rows("gluing", d.table))
    for name in sorted(doc.elements):
        d = doc.elements[name]
        body = " + ".join(f"T^{format_rational(l)} * {g}" for l, g in d.terms) or "0"
        blocks.append([f"element {name} in {d.basis}: {body}"])
    out = "\n".join(lines)
    for block in blocks:
        out += "\n\n" + "\n".join(block)
    return out + "\n"


def to_machine(doc: StructureDocument) -> str:
    """JSON rendering with the same canonical ordering as :func:`serialize`."""
    def rows(table: TableDecl):
        return [{"arity": list(s) if isinstance(s, tuple) else s, "level": format_rational(l),
                 "inputs": list(i), "outputs": list(o)} for s, l, i, o in table.rows]

    data = {
        "format": doc.format_version,
        "monoid": [format_rational(g) for g in doc.monoid],
        "cutoff": format_rational(doc.cutoff) if doc.cutoff is not None else None,
        "bases": [{"name": n, "generators": list(doc.bases[n].generators),
                   **({"degrees": dict(doc.bases[n].degrees), "modulus": doc.bases[n].modulus}
                      if doc.bases[n].degrees is not None else {})}
                  for n in sorted(doc.bases)],
        "algebras": [{"name": n, **({"opposite": d.opposite_of} if d.opposite_of else
                                     {"basis": d.basis, "entries": rows(d.table)})}
                     for n, d in sorted(doc.algebras.items())],
        "modules": [{"name": n, "basis": d.basis, "algebra": d.algebra, "entries": rows(d.table)}
                    for n, d in sorted(doc.modules.items())],
        "bimodules": [{"name": n, "basis": d.basis, "left": d.left, "right": d.right,
                       "entries": rows(d.table)} for n, d in sorted(doc.bimodules.items())],
        "morphisms": [{"name": n, "source": d.source, "target": d.target, "entries": rows(d.table)}
                      for n, d in sorted(doc.morphisms.items())],
        "floer": [{"name": n, "basis": d.basis,
                   "weights": [{"from": a, "to": b, "level": format_rational(l), "count": c}
                               for a, b, l, c in d.weights]} for n, d in sorted(doc.floers.items())],
        "gluings": [{"name": n, "module1": d.module1, "bimodule": d.bimodule, "module2": d.module2,
                     "floer": d.floer, "entries": rows(d.table)} for n, d in sorted(doc.gluings.items())],
        "elements": [{"name": n, "basis": d.basis,
                      "terms": [[format_rational(l), g] for l, g in d.terms]}
                     for n, d in sorted(doc.elements.items())],
    }
    return json.dumps(data, indent=2) + "\n"


def from_machine(text: str) -> StructureDocument:
    """Read the JSON rendering back by translating it to text and parsing that."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("SYNTAX_ERROR", f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    try:
        return parse(_machine_to_text(data))
    except (KeyError, TypeError, AttributeError) as exc:
        raise ParseError("SYNTAX_ERROR", f"malformed machine document ({exc})") from None


def _machine_to_text(data: dict) -> str:
    lines = [f"format {data['format']}"]
    if data.get("monoid"):
        lines.append("monoid " + " ".join(data["monoid"]))
    if data.get("cutoff") is not None:
        lines.append(f"cutoff {data['cutoff']}")

    def entries(kind, rows):
        kw = _ENTRY_KEYWORD[kind]
        out = []
        for r in rows:
            sig = tuple(r["arity"]) if isinstance(r["arity"], list) else r["arity"]
            lhs = _render_inputs(kind, sig, tuple(r["inputs"]))
            out.append(f"  {kw} {render_signature(sig)} @{r['level']}: {lhs} -> {' '.join(r['outputs'])}")
        return out

    for b in data.get("bases", []):
        lines.append(f"basis {b['name']}: {' '.join(b['generators'])}")
        if "degrees" in b:
            mod = f" mod {b['modulus']}" if b.get("modulus") else ""
            lines.append(f"degrees {b['name']}{mod}: "
                         + " ".join(f"{g}={d}" for g, d in b["degrees"].items()))
    for a in data.get("algebras", []):
        if "opposite" in a:
            lines.append(f"algebra {a['name']} opposite {a['opposite']}")
        else:
            lines.append(f"algebra {a['name']} on {a['basis']}")
            lines += entries("algebra", a["entries"])
    for m in data.get("modules", []):
        lines.append(f"module {m['name']} on {m['basis']} over {m['algebra']}")
        lines += entries("module", m["entries"])
    for m in data.get("bimodules", []):
        lines.append(f"bimodule {m['name']} on {m['basis']} over {m['left']} {m['right']}")
        lines += entries("bimodule", m["entries"])
    for m in data.get("morphisms", []):
        lines.append(f"morphism {m['name']} from {m['source']} to {m['target']}")
        lines += entries("morphism", m["entries"])
    for f in data.get("floer", []):
        lines.append(f"floer {f['name']} on {f['basis']}")
        lines += [f"  d @{w['level']}: {w['from']} -> {w['to']} count={w['count']}" for w in f["weights"]]
    for g in data.get("gluings", []):
        lines.append(f"gluing {g['name']}: {g['module1']} {g['bimodule']} {g['module2']} {g['floer']}")
        lines += entries("gluing", g["entries"])
    for e in data.get("elements", []):
        body = " + ".join(f"T^{l} * {g}" for l, g in e["terms"]) or "0"
        lines.append(f"element {e['name']} in {e['basis']}: {body}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# writing engine objects as documents

class DocumentWriter:
    """Names engine objects and collects them into a canonical document.

    Equal bases and algebras are declared once; a module over the opposite
    of a declared algebra gets an ``opposite`` declaration instead of a
    table of its own.
    """

    def __init__(self, monoid: DiscreteMonoid, cutoff):
        self.doc = StructureDocument(FORMAT_VERSION, monoid.generators, as_rational(cutoff))

    def _fresh(self, coll: dict, hint: str) -> str:
        hint = hint if hint and _NAME_RE.match(hint) else "x"
        name, i = hint, 2
        while name in coll:
            name, i = f"{hint}{i}", i + 1
        return name

    def basis(self, basis: Basis, hint: str = "") -> str:
        for n, b in self.doc.bases.items():
            if b == basis:
                return n
        name = self._fresh(self.doc.bases, hint or basis.name)
        self.doc.bases[name] = Basis(basis.generators, basis.degrees, basis.modulus, name)
        return name

    def algebra(self, A: FilteredAlgebra, hint: str = "") -> str:
        for n in self.doc.algebras:
            if self.doc.algebra(n) == A:
                return n
        for n, decl in list(self.doc.algebras.items()):
            if decl.opposite_of is None and opposite_algebra(self.doc.algebra(n)) == A:
                name = self._fresh(self.doc.algebras, hint or n + "op")
                self.doc.algebras[name] = AlgebraDecl("", None, n)
                return name
        bname = self.basis(A.basis)
        name = self._fresh(self.doc.algebras, hint or A.name.replace(".", "") or "A")
        self.doc.algebras[name] = AlgebraDecl(bname, TableDecl(tuple(A.ops.entries())))
        return name

    def module(self, M: FilteredRightModule, hint: str = "") -> str:
        alg = self.algebra(M.algebra)
        bname = self.basis(M.basis)
        name = self._fresh(self.doc.modules, hint or M.name or "M")
        self.doc.modules[name] = ModuleDecl(bname, alg, TableDecl(tuple(M.ops.entries())))
        return name

    def bimodule(self, B: FilteredBimodule, hint: str = "") -> str:
        left, right = self.algebra(B.left), self.algebra(B.right)
        bname = self.basis(B.basis)
        name = self._fresh(self.doc.bimodules, hint or B.name or "P")
        self.doc.bimodules[name] = BimoduleDecl(bname, left, right, TableDecl(tuple(B.ops.entries())))
        return name

    def morphism(self, phi: AInftyHomomorphism, source: str, target: str, hint: str = "") -> str:
        name = self._fresh(self.doc.morphisms, hint or phi.name or "f")
        self.doc.morphisms[name] = MorphismDecl(source, target,
                                                TableDecl(tuple(phi.components.entries())))
        return name

    def floer(self, F: FloerComplexData, hint: str = "") -> str:
        bname = self.basis(F.generators)
        rows = tuple((a, b, lvl, c) for (a, b), ws in F.weights.items() for lvl, c in ws)
        name = self._fresh(self.doc.floers, hint or F.name or "F")
        self.doc.floers[name] = FloerDecl(bname, rows)
        return name

    def gluing(self, phi: GluingTensor, module1: str, bimodule: str, module2: str, floer: str,
               hint: str = "") -> str:
        name = self._fresh(self.doc.gluings, hint or phi.name or "Phi")
        self.doc.gluings[name] = GluingDecl(module1, bimodule, module2, floer,
                                            TableDecl(tuple(phi.components.entries())))
        return name

    def element(self, x: Element, hint: str = "") -> str:
        bname = self.basis(x.basis)
        name = self._fresh(self.doc.elements, hint or "x")
        self.doc.elements[name] = ElementDecl(bname, tuple(x.sorted_terms()))
        return name

    def document(self) -> StructureDocument:
        """The collected document, canonicalized and fully validated."""
        return parse(serialize(self.doc))

    def text(self) -> str:
        return serialize(self.document())
