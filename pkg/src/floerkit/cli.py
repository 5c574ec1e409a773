"""Command-line driver: ``python3 -m floerkit <command> FILE``.

Exit codes: 0 pass, 1 mathematical failure (with a localized witness),
2 input or environment error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field

from .ainfty import (InconsistentInput, MCViolation, StructureError, bimodule_twisted_differential,
                     check_algebra_relations, check_bimodule_relations, check_homomorphism,
                     check_module_relations, twisted_differential)
from .lincomb import BasisMismatch, Element, NotAComplex, homology
from .mc import (NotCyclic, OracleBudgetExceeded, certify_cyclic, solve_bounding_cochain,
                 unit_annihilation, verify_mc)
from .novikov import NovikovError, as_rational, format_rational
from .pairing import (PipelineFailure, check_contexts, check_pairing_relation, realize_floer_boundary,
                      verify_gluing)
from .specfmt import ParseError, StructureDocument, parse

REPORT_SCHEMA = 1
KINDS = ("algebra", "module", "bimodule", "morphism", "pairing")


class InputError(Exception):
    """Bad arguments or documents; maps to exit status 2."""


class Failure(Exception):
    """A mathematical check failed; maps to exit status 1."""

    def __init__(self, message, details=()):
        super().__init__(message)
        self.details = list(details)


@dataclass
class RunReport:
    command: str
    input: str
    digest: str = ""
    outcome: str = "error"
    details: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "fail": 1}.get(self.outcome, 2)

    def render(self, fmt: str = "text") -> str:
        if fmt == "machine":
            body = {"schema": REPORT_SCHEMA, "command": self.command, "input": self.input,
                    "digest": self.digest, "outcome": self.outcome, "details": self.details,
                    "wall_time": round(self.wall_time, 6)}
            return json.dumps(body, indent=2) + "\n"
        lines = [f"command: {self.command}", f"input: {self.input}"]
        if self.digest:
            lines.append(f"sha256: {self.digest}")
        lines.append(f"outcome: {self.outcome}")
        lines += self.details
        lines.append(f"time: {self.wall_time:.3f}s")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# helpers

def _load(path: str, report: RunReport, cutoff: str | None) -> StructureDocument:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    report.digest = hashlib.sha256(raw).hexdigest()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not UTF-8 (byte {exc.start})") from None
    try:
        doc = parse(text)
    except ParseError as exc:
        raise InputError(f"{path}:{exc.line}:{exc.column}: {exc.code}: {exc.message}") from None
    if cutoff is not None:
        try:
            new = as_rational(cutoff)
        except NovikovError:
            raise InputError(f"--cutoff {cutoff!r} is not an exact rational") from None
        if doc.cutoff is None:
            raise InputError("the document declares no cutoff to lower")
        if new <= 0 or new > doc.cutoff:
            raise InputError(f"--cutoff must lie in (0, {format_rational(doc.cutoff)}]; "
                             "it can only lower the document cutoff")
        doc = doc.truncated(new)
    return doc


def _pick(coll: dict, name: str | None, what: str, flag: str) -> str:
    if name is not None:
        if name not in coll:
            raise InputError(f"no {what} named {name!r}")
        return name
    if len(coll) == 1:
        return next(iter(coll))
    if not coll:
        raise InputError(f"the document has no {what}")
    raise InputError(f"the document has several {what}s ({', '.join(sorted(coll))}); "
                     f"choose one with {flag}")


def _pick_element(doc: StructureDocument, basis: str, name: str | None, default: str,
                  flag: str) -> Element:
    if name is None:
        candidates = {n: d for n, d in doc.elements.items() if d.basis == basis}
        if default in candidates:
            name = default
        elif len(candidates) == 1:
            name = next(iter(candidates))
        elif not candidates:
            raise InputError(f"no element in basis {basis}; add 'element {default} in {basis}: ...'")
        else:
            raise InputError(f"several elements in basis {basis}; choose one with {flag}")
    if name not in doc.elements:
        raise InputError(f"no element named {name!r}")
    if doc.elements[name].basis != basis:
        raise InputError(f"element {name!r} does not live in basis {basis}")
    return doc.element(name)


def _solve(doc, module_name, one, label="b"):
    M = doc.module(module_name)
    try:
        cert = certify_cyclic(M, one)
    except NotCyclic as exc:
        raise Failure(str(exc)) from None
    except StructureError as exc:
        raise Failure(str(exc)) from None
    try:
        b = solve_bounding_cochain(cert)
    except InconsistentInput as exc:
        raise Failure(str(exc)) from None
    res = verify_mc(M.algebra, b.value)
    if res is not None:
        raise Failure(f"{label}: {res}")
    left = unit_annihilation(M, b.value, one)
    if left:
        raise Failure(f"{label}: d^b(1) = {left} is not zero")
    return b


# ---------------------------------------------------------------------------
# commands

def cmd_check(args, report: RunReport):
    doc = _load(args.file, report, args.cutoff)
    kinds = [args.kind] if args.kind else list(KINDS)
    checks = []
    for name in sorted(doc.algebras) if "algebra" in kinds else ():
        checks.append(("algebra", name, lambda n=name: check_algebra_relations(doc.algebra(n))))
    for name in sorted(doc.modules) if "module" in kinds else ():
        checks.append(("module", name, lambda n=name: check_module_relations(doc.module(n))))
    for name in sorted(doc.bimodules) if "bimodule" in kinds else ():
        checks.append(("bimodule", name, lambda n=name: check_bimodule_relations(doc.bimodule(n))))
    for name in sorted(doc.morphisms) if "morphism" in kinds else ():
        checks.append(("morphism", name, lambda n=name: check_homomorphism(doc.morphism(n))))
    for name in sorted(doc.gluings) if "pairing" in kinds else ():
        def pairing(n=name):
            phi = doc.gluing(n)
            for stage, cex in check_contexts(phi):
                return f"{stage}: {cex}"
            return check_pairing_relation(phi)
        checks.append(("pairing", name, pairing))
    if args.kind and not checks:
        raise InputError(f"the document has no {args.kind} to check")
    failed = []
    for kind, name, run in checks:
        cex = run()
        if cex is None:
            report.details.append(f"{kind} {name}: pass")
        else:
            report.details.append(f"{kind} {name}: {cex}")
            failed.append(name)
    if failed:
        raise Failure("relation check failed")
    report.details.append(f"checked {len(checks)} structure(s) below cutoff "
                          f"{format_rational(doc.cutoff) if doc.cutoff is not None else '-'}")


def cmd_solve(args, report: RunReport):
    doc = _load(args.file, report, args.cutoff)
    name = _pick(doc.modules, args.module, "module", "--module")
    one = _pick_element(doc, doc.modules[name].basis, args.element, "one", "--element")
    report.details.append(f"module {name}, cyclic element {one}")
    b = _solve(doc, name, one)
    if args.trace:
        report.details += b.render_trace().splitlines()
    report.details.append(f"b = {b.value}")
    report.details.append(f"maurer-cartan: pass below {format_rational(b.certified_cutoff)}")
    report.details.append(f"d^b(1) = 0: pass below {format_rational(b.certified_cutoff)}")


def cmd_homology(args, report: RunReport):
    doc = _load(args.file, report, args.cutoff)
    kind = args.differential
    if kind in ("bare", "twisted"):
        name = _pick(doc.modules, args.module, "module", "--module")
        M = doc.module(name)
        if kind == "bare":
            b = Element.zero(M.algebra.basis, M.cutoff, M.monoid)
        elif args.b is not None:
            b = _pick_element(doc, _basis_name(doc, M.algebra.basis), args.b, "b", "--b")
        else:
            one = _pick_element(doc, doc.modules[name].basis, args.element, "one", "--element")
            b = _solve(doc, name, one).value
        try:
            d = twisted_differential(M, b, check_mc=kind == "twisted")
        except MCViolation as exc:
            raise Failure(str(exc)) from None
        label = f"module {name}" + (f", b = {b}" if kind == "twisted" else "")
    elif kind == "pair":
        gname = _pick(doc.gluings, args.gluing, "gluing", "--gluing")
        g = doc.gluings[gname]
        one1 = _pick_element(doc, doc.modules[g.module1].basis, args.one1, "one1", "--one1")
        one2 = _pick_element(doc, doc.modules[g.module2].basis, args.one2, "one2", "--one2")
        b1 = _solve(doc, g.module1, one1, "b1").value
        b2 = _solve(doc, g.module2, one2, "b2").value
        try:
            d = bimodule_twisted_differential(doc.bimodule(g.bimodule), b1, b2)
        except MCViolation as exc:
            raise Failure(str(exc)) from None
        label = f"bimodule {g.bimodule}, b1 = {b1}, b2 = {b2}"
    else:
        fname = _pick(doc.floers, args.floer, "floer section", "--floer")
        d = realize_floer_boundary(doc.floer(fname), check=False)
        label = f"floer {fname}"
    report.details.append(label)
    try:
        h = homology(d)
    except NotAComplex as exc:
        raise Failure(f"not a complex: {exc}") from None
    report.details += h.render().splitlines()


def _basis_name(doc: StructureDocument, basis) -> str:
    for n, b in doc.bases.items():
        if b == basis:
            return n
    raise InputError("algebra basis is not declared")


def cmd_pair(args, report: RunReport):
    doc = _load(args.file, report, args.cutoff)
    gname = _pick(doc.gluings, args.gluing, "gluing", "--gluing")
    g = doc.gluings[gname]
    one1 = _pick_element(doc, doc.modules[g.module1].basis, args.one1, "one1", "--one1")
    one2 = _pick_element(doc, doc.modules[g.module2].basis, args.one2, "one2", "--one2")
    try:
        result = verify_gluing(doc.gluing(gname), one1, one2)
    except PipelineFailure as exc:
        raise Failure(f"stage {exc.stage}: {exc.message}") from None
    report.details.append(f"gluing {gname}")
    report.details += result.render().splitlines()


def cmd_format(args, report: RunReport):
    from .specfmt import serialize, to_machine
    doc = _load(args.file, report, args.cutoff)
    text = to_machine(doc) if args.format == "machine" else serialize(doc)
    report.details += text.rstrip("\n").splitlines()


COMMANDS = {"check": cmd_check, "solve": cmd_solve, "homology": cmd_homology, "pair": cmd_pair,
            "canonical": cmd_format}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floerkit",
        description="Check, solve and compute homology for gapped filtered A-infinity structures.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="structure document (.afd)")
    common.add_argument("--cutoff", help="lower the document cutoff to this rational, e.g. 3/2")
    common.add_argument("--format", choices=("text", "machine"), default="text",
                        help="report format (default: text)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="check structure relations")
    p.add_argument("--kind", choices=KINDS, help="only check structures of this kind")

    p = sub.add_parser("solve", parents=[common], help="solve for the bounding cochain")
    p.add_argument("--module", help="module name (needed if there are several)")
    p.add_argument("--element", help="cyclic element name (default: 'one')")
    p.add_argument("--trace", action="store_true", help="print the solve level by level")

    p = sub.add_parser("homology", parents=[common], help="homology of a differential")
    p.add_argument("--differential", choices=("bare", "twisted", "pair", "floer"), default="twisted")
    p.add_argument("--module", help="module for bare/twisted")
    p.add_argument("--element", help="cyclic element used to solve for b (twisted)")
    p.add_argument("--b", help="use this element as b instead of solving (twisted)")
    p.add_argument("--gluing", help="gluing whose bimodule is used (pair)")
    p.add_argument("--one1", help="cyclic element of the first module (pair)")
    p.add_argument("--one2", help="cyclic element of the second module (pair)")
    p.add_argument("--floer", help="floer section (floer)")

    p = sub.add_parser("pair", parents=[common], help="verify a gluing end to end")
    p.add_argument("--gluing", help="gluing name (needed if there are several)")
    p.add_argument("--one1", help="cyclic element of the first module (default: 'one1')")
    p.add_argument("--one2", help="cyclic element of the second module (default: 'one2')")

    sub.add_parser("canonical", parents=[common], help="print the canonical form of a document")
    return parser


def run(args: argparse.Namespace) -> RunReport:
    report = RunReport(args.command, args.file)
    start = time.perf_counter()
    try:
        COMMANDS[args.command](args, report)
        report.outcome = "pass"
    except Failure as exc:
        report.outcome = "fail"
        report.details.append(f"failure: {exc}")
    except InputError as exc:
        report.outcome = "error"
        report.details.append(f"error: {exc}")
    except OracleBudgetExceeded as exc:
        report.outcome = "error"
        report.details.append(f"error: {exc}")
    except (StructureError, BasisMismatch, NovikovError) as exc:
        report.outcome = "error"
        report.details.append(f"error: {exc}")
    except Exception as exc:  # never let a traceback escape the CLI
        report.outcome = "error"
        report.details.append(f"internal error: {type(exc).__name__}: {exc}")
    report.wall_time = time.perf_counter() - start
    return report


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors exit 2, --help exits 0
        return 0 if exc.code in (0, None) else 2
    report = run(args)
    sys.stdout.write(report.render(args.format))
    return report.exit_code
