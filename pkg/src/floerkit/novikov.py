"""Truncated arithmetic in the universal Novikov ring over Z/2.

An element of the ring is a finite Z/2-combination of powers T^lam with
exact rational exponents lam >= 0 drawn from a discrete monoid G.  Every
scalar carries the cutoff E at which it is truncated: exponents >= E are
dropped.  Because coefficients live in Z/2, a scalar is simply the set of
exponents whose coefficient is 1.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union

RationalLike = Union[Fraction, int, str]

#: valuation of the zero scalar; compares above every rational
INFINITY = math.inf


class NovikovError(ValueError):
    pass


class IncompatibleScalars(NovikovError):
    """Raised when combining scalars with different cutoff or monoid."""


class NotAUnit(NovikovError):
    pass


def as_rational(value: RationalLike) -> Fraction:
    """Parse ``"p/q"``, ``"p"``, an int or a Fraction into a Fraction.

    Floats are refused; exponents must be exact.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise NovikovError(f"exact rational required, got {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE_ "):
            raise NovikovError(f"malformed rational {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise NovikovError(f"malformed rational {value!r}") from exc
    raise NovikovError(f"cannot interpret {value!r} as a rational")


def format_rational(value: Fraction) -> str:
    """Canonical text: ``p/q`` in lowest terms, ``p`` when q == 1."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class DiscreteMonoid:
    """Additive monoid generated by finitely many positive rationals."""

    __slots__ = ("generators", "_hash")

    def __init__(self, generators: Iterable[RationalLike]):
        gens = sorted({as_rational(g) for g in generators})
        for g in gens:
            if g <= 0:
                raise NovikovError(f"monoid generator must be positive, got {format_rational(g)}")
        self.generators: tuple[Fraction, ...] = tuple(gens)
        self._hash = hash(self.generators)

    def __eq__(self, other):
        return isinstance(other, DiscreteMonoid) and self.generators == other.generators

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "DiscreteMonoid(" + ", ".join(format_rational(g) for g in self.generators) + ")"

    def levels(self, cutoff: RationalLike) -> tuple[Fraction, ...]:
        """G intersected with [0, cutoff), ascending."""
        return _levels(self.generators, as_rational(cutoff))

    def contains(self, value: RationalLike) -> bool:
        value = as_rational(value)
        if value < 0:
            return False
        return value in _level_set(self.generators, value + 1)

    @property
    def min_positive(self) -> Fraction | None:
        return self.generators[0] if self.generators else None


@lru_cache(maxsize=None)
def _levels(generators: tuple[Fraction, ...], cutoff: Fraction) -> tuple[Fraction, ...]:
    if cutoff <= 0:
        return ()
    found = {Fraction(0)}
    frontier = [Fraction(0)]
    while frontier:
        nxt = []
        for base in frontier:
            for g in generators:
                s = base + g
                if s < cutoff and s not in found:
                    found.add(s)
                    nxt.append(s)
        frontier = nxt
    return tuple(sorted(found))


@lru_cache(maxsize=None)
def _level_set(generators: tuple[Fraction, ...], cutoff: Fraction) -> frozenset:
    return frozenset(_levels(generators, cutoff))


def monoid_levels(monoid: DiscreteMonoid, cutoff: RationalLike) -> list[Fraction]:
    """Enumerate G ∩ [0, E) in ascending order; first element is 0."""
    cutoff = as_rational(cutoff)
    if cutoff <= 0:
        raise NovikovError("cutoff must be positive")
    return list(monoid.levels(cutoff))


class NovikovScalar:
    """Element of the truncated Novikov ring with Z/2 coefficients.

    ``exponents`` is the set of lam with coefficient 1.  Instances are
    immutable and hashable.
    """

    __slots__ = ("exponents", "cutoff", "monoid")

    def __init__(self, exponents: Iterable[RationalLike], cutoff: RationalLike,
                 monoid: DiscreteMonoid, *, check: bool = True):
        cutoff = as_rational(cutoff)
        if check:
            parity: dict[Fraction, int] = {}
            for e in exponents:
                e = as_rational(e)
                if not monoid.contains(e):
                    raise NovikovError(f"exponent {format_rational(e)} not in {monoid!r}")
                parity[e] = parity.get(e, 0) ^ 1
            exps = frozenset(e for e, bit in parity.items() if bit and e < cutoff)
        else:
            exps = frozenset(exponents)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "cutoff", cutoff)
        object.__setattr__(self, "monoid", monoid)

    def __setattr__(self, name, value):
        raise AttributeError("NovikovScalar is immutable")

    # construction helpers
    @classmethod
    def zero(cls, cutoff, monoid):
        return cls((), cutoff, monoid, check=False)

    @classmethod
    def one(cls, cutoff, monoid):
        return cls((Fraction(0),), cutoff, monoid, check=False)

    @classmethod
    def monomial(cls, exponent, cutoff, monoid):
        return cls((exponent,), cutoff, monoid)

    def _like(self, exps) -> "NovikovScalar":
        return NovikovScalar(exps, self.cutoff, self.monoid, check=False)

    def _compatible(self, other: "NovikovScalar"):
        if not isinstance(other, NovikovScalar):
            raise TypeError(f"expected NovikovScalar, got {type(other).__name__}")
        if other.cutoff != self.cutoff or other.monoid != self.monoid:
            raise IncompatibleScalars(
                f"cutoff/monoid mismatch: {format_rational(self.cutoff)} {self.monoid!r} vs "
                f"{format_rational(other.cutoff)} {other.monoid!r}")

    def __add__(self, other: "NovikovScalar") -> "NovikovScalar":
        self._compatible(other)
        return self._like(self.exponents ^ other.exponents)

    __sub__ = __add__

    def __mul__(self, other: "NovikovScalar") -> "NovikovScalar":
        self._compatible(other)
        return self._like(convolve(self.exponents, other.exponents, self.cutoff))

    def __neg__(self):
        return self

    def __bool__(self):
        return bool(self.exponents)

    def __eq__(self, other):
        if not isinstance(other, NovikovScalar):
            return NotImplemented
        return (self.exponents == other.exponents and self.cutoff == other.cutoff
                and self.monoid == other.monoid)

    def __hash__(self):
        return hash((self.exponents, self.cutoff))

    def __repr__(self):
        return f"NovikovScalar({self})"

    def __str__(self):
        if not self.exponents:
            return "0"
        return " + ".join(f"T^{format_rational(e)}" for e in self.sorted_exponents())

    def sorted_exponents(self) -> list[Fraction]:
        return sorted(self.exponents)

    @property
    def valuation(self):
        return min(self.exponents) if self.exponents else INFINITY

    def shift(self, amount: Fraction) -> "NovikovScalar":
        """Multiply by T^amount (amount may be negative if it stays >= 0)."""
        out = [e + amount for e in self.exponents]
        if any(e < 0 for e in out):
            raise NovikovError("shift would produce a negative exponent")
        return self._like(frozenset(e for e in out if e < self.cutoff))

    def truncate(self, cutoff: RationalLike) -> "NovikovScalar":
        cutoff = as_rational(cutoff)
        return NovikovScalar((e for e in self.exponents if e < cutoff), cutoff,
                             self.monoid, check=False)

    def residue(self) -> int:
        """Image in Z/2 under T -> 0."""
        return 1 if Fraction(0) in self.exponents else 0

    def to_strings(self) -> list[str]:
        return [format_rational(e) for e in self.sorted_exponents()]


def convolve(a: frozenset, b: frozenset, cutoff: Fraction) -> frozenset:
    out: set = set()
    for x in a:
        for y in b:
            s = x + y
            if s < cutoff:
                if s in out:
                    out.remove(s)
                else:
                    out.add(s)
    return frozenset(out)


def nov_add(a: NovikovScalar, b: NovikovScalar) -> NovikovScalar:
    return a + b


def nov_mul(a: NovikovScalar, b: NovikovScalar) -> NovikovScalar:
    return a * b


def nov_val(a: NovikovScalar):
    return a.valuation


def nov_invert(a: NovikovScalar) -> NovikovScalar:
    """Inverse of a valuation-zero scalar, by the truncated geometric series."""
    if a.valuation != 0:
        raise NotAUnit(f"{a} has valuation {a.valuation}, not a unit of Lambda_0")
    # a = 1 + u with val(u) > 0, so a^-1 = sum_n u^n (signs vanish mod 2)
    u = a + NovikovScalar.one(a.cutoff, a.monoid)
    result = NovikovScalar.one(a.cutoff, a.monoid)
    power = u
    while power:
        result = result + power
        power = power * u
    return result
