"""Sparse multivariate polynomials with exact Gaussian-rational coefficients.

A polynomial is a map from exponent tuples to coefficients.  Coefficients are
kept exact (pairs of ``Fraction``) so that face and Euler-relation checks are
decided without rounding; evaluation converts to ``complex``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "QQi",
    "SparsePoly",
    "PolyMap",
    "ParseError",
    "parse_poly",
    "parse_map",
    "evaluate",
    "partial",
    "jacobian",
    "face_restriction",
    "CompiledMap",
]


@dataclass(frozen=True, slots=True)
class QQi:
    """Gaussian rational ``re + im*i``."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, value) -> "QQi":
        if isinstance(value, QQi):
            return value
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        return cls(Fraction(value), Fraction(0))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __add__(self, other) -> "QQi":
        other = QQi.of(other)
        return QQi(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self) -> "QQi":
        return QQi(-self.re, -self.im)

    def __sub__(self, other) -> "QQi":
        return self + (-QQi.of(other))

    def __rsub__(self, other) -> "QQi":
        return QQi.of(other) - self

    def __mul__(self, other) -> "QQi":
        o = QQi.of(other)
        return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        try:
            o = QQi.of(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"({_imag_str(self.im)})"
        sign = "-" if self.im < 0 else "+"
        return f"({self.re}{sign}{_imag_str(abs(self.im))})"

    def __repr__(self) -> str:
        return f"QQi({self})"


def _imag_str(v: Fraction) -> str:
    if v == 1:
        return "i"
    if v == -1:
        return "-i"
    return f"{v}i"


Exponent = tuple[int, ...]


def _grlex_key(alpha: Exponent):
    return (sum(alpha), alpha)


class SparsePoly:
    """Polynomial in ``nvars`` variables stored as ``{exponent: QQi}``.

    Instances are treated as immutable; arithmetic returns new objects.
    """

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        self.nvars = nvars
        clean: dict[Exponent, QQi] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != nvars:
                raise ValueError(f"exponent {alpha} has length {len(alpha)}, expected {nvars}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            q = QQi.of(c)
            s = clean.get(alpha, QQi()) + q
            if s:
                clean[alpha] = s
            else:
                clean.pop(alpha, None)
        self._terms = clean
        self._hash = None

    @classmethod
    def constant(cls, nvars: int, c) -> "SparsePoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "SparsePoly":
        alpha = [0] * nvars
        alpha[i] = 1
        return cls(nvars, {tuple(alpha): 1})

    @property
    def terms(self) -> dict[Exponent, QQi]:
        return dict(self._terms)

    def support(self) -> list[Exponent]:
        return sorted(self._terms, key=_grlex_key, reverse=True)

    def coeff(self, alpha: Sequence[int]) -> QQi:
        return self._terms.get(tuple(alpha), QQi())

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(a) for a in self._terms), default=0)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparsePoly):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def _coerce(self, other) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return SparsePoly.constant(self.nvars, other)

    def __add__(self, other) -> "SparsePoly":
        other = self._coerce(other)
        out = dict(self._terms)
        for a, c in other._terms.items():
            out[a] = out.get(a, QQi()) + c
        return SparsePoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "SparsePoly":
        return SparsePoly(self.nvars, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other) -> "SparsePoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "SparsePoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "SparsePoly":
        other = self._coerce(other)
        out: dict[Exponent, QQi] = {}
        for a, c in self._terms.items():
            for b, d in other._terms.items():
                k = tuple(x + y for x, y in zip(a, b))
                out[k] = out.get(k, QQi()) + c * d
        return SparsePoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "SparsePoly":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = SparsePoly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def to_string(self, names: Sequence[str] | None = None) -> str:
        """Canonical text form in graded-lex order; re-parses to the same terms."""
        names = list(names) if names is not None else [f"x{i + 1}" for i in range(self.nvars)]
        if not self._terms:
            return "0"
        pieces: list[str] = []
        for alpha in self.support():
            c = self._terms[alpha]
            mono = "*".join(
                name if e == 1 else f"{name}^{e}" for name, e in zip(names, alpha) if e
            )
            negative = not c.im and c.re < 0
            mag = -c if negative else c
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            if not pieces:
                pieces.append(("-" if negative else "") + body)
            else:
                pieces.append(("- " if negative else "+ ") + body)
        return " ".join(pieces)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"SparsePoly({self.to_string()!r})"


class PolyMap:
    """An m-tuple of polynomials over the same n variables, 1 <= m < n."""

    def __init__(self, components: Sequence[SparsePoly], names: Sequence[str] | None = None,
                 check_dims: bool = True):
        comps = tuple(components)
        if not comps:
            raise ValueError("a map needs at least one component")
        n = comps[0].nvars
        if any(c.nvars != n for c in comps):
            raise ValueError("components have different variable counts")
        if check_dims and not len(comps) < n:
            raise ValueError(f"need n > m, got n={n}, m={len(comps)}")
        self.components = comps
        self.names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(n))
        if len(self.names) != n:
            raise ValueError("names do not match variable count")

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def n(self) -> int:
        return self.components[0].nvars

    def __getitem__(self, i: int) -> SparsePoly:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __len__(self) -> int:
        return self.m

    def jacobian_polys(self) -> list[list[SparsePoly]]:
        return [[partial(f, i) for i in range(self.n)] for f in self.components]

    def minor_polys(self) -> list[SparsePoly]:
        """All m x m minors of the formal Jacobian, column subsets in lex order."""
        J = self.jacobian_polys()
        return [poly_det([[J[r][c] for c in cols] for r in range(self.m)])
                for cols in combinations(range(self.n), self.m)]

    def __repr__(self) -> str:
        return "PolyMap(" + ", ".join(repr(c.to_string(self.names)) for c in self.components) + ")"


def poly_det(M: list[list[SparsePoly]]) -> SparsePoly:
    """Determinant by cofactor expansion (matrices here are at most 3x3 or so)."""
    k = len(M)
    if k == 1:
        return M[0][0]
    total = None
    for j in range(k):
        sub = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * poly_det(sub)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------- parsing

class ParseError(ValueError):
    """Raised for malformed polynomial text; ``pos`` is the offending offset."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


_NUM = r"\d+(?:/\d+)?"
_COMPLEX_RE = re.compile(
    rf"\(\s*(?:(?P<re>[+-]?\s*{_NUM})\s*(?P<sign>[+-])\s*|(?P<lone>[+-])\s*)?(?P<im>{_NUM})?\s*i\s*\)"
)
_TOKEN_RE = re.compile(rf"\s*(?:(?P<num>{_NUM})|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*^()/.]))")


def _frac(s: str) -> Fraction:
    s = s.replace(" ", "")
    if "/" in s:
        p, q = s.split("/")
        if int(q) == 0:
            raise ZeroDivisionError
    return Fraction(s)


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.names = {name: i for i, name in enumerate(names)}
        self.n = len(names)
        self.pos = 0

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> SparsePoly:
        if not self.text.strip():
            raise ParseError("empty expression", 0)
        p = self.expr()
        if self.peek():
            raise ParseError(f"unexpected {self.peek()!r}", self.pos)
        return p

    def expr(self) -> SparsePoly:
        sign = 1
        if self.peek() in "+-" and self.peek():
            sign = -1 if self.text[self.pos] == "-" else 1
            self.pos += 1
        acc = self.term() * sign
        while self.peek() in ("+", "-") and self.peek():
            op = self.text[self.pos]
            self.pos += 1
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> SparsePoly:
        acc = self.factor()
        while self.peek() == "*":
            self.pos += 1
            acc = acc * self.factor()
        return acc

    def factor(self) -> SparsePoly:
        base = self.base()
        if self.peek() == "^":
            self.pos += 1
            self.skip()
            start = self.pos
            m = re.match(r"\d+", self.text[self.pos:])
            if not m:
                if self.peek() in ("-", "+"):
                    raise ParseError("exponent must be a non-negative integer", start)
                raise ParseError("expected integer exponent", start)
            self.pos += m.end()
            if self.pos < len(self.text) and self.text[self.pos] in "./":
                raise ParseError("fractional exponent", start)
            return base ** int(m.group())
        return base

    def base(self) -> SparsePoly:
        c = self.peek()
        start = self.pos
        if not c:
            raise ParseError("unexpected end of expression", start)
        if c == "(":
            m = _COMPLEX_RE.match(self.text, self.pos)
            if m and not (m.group("im") is None and "i" in self.names):
                self.pos = m.end()
                return SparsePoly.constant(self.n, _complex_literal(m))
            self.pos += 1
            inner = self.expr()
            if self.peek() != ")":
                raise ParseError("expected ')'", self.pos)
            self.pos += 1
            return inner
        m = _TOKEN_RE.match(self.text, self.pos)
        if m is None:
            raise ParseError(f"unexpected character {c!r}", start)
        if m.group("num"):
            self.pos = m.end()
            try:
                value = _frac(m.group("num"))
            except ZeroDivisionError:
                raise ParseError("zero denominator", start) from None
            return SparsePoly.constant(self.n, value)
        if m.group("name"):
            name = m.group("name")
            if name not in self.names:
                raise ParseError(f"unknown variable {name!r}", start)
            self.pos = m.end()
            return SparsePoly.variable(self.n, self.names[name])
        raise ParseError(f"unexpected {c!r}", start)


def _complex_literal(m: re.Match) -> QQi:
    re_part = _frac(m.group("re")) if m.group("re") else Fraction(0)
    im = _frac(m.group("im")) if m.group("im") else Fraction(1)
    sign = m.group("sign") or m.group("lone") or "+"
    if sign == "-":
        im = -im
    return QQi(re_part, im)


def parse_poly(text: str, names: Sequence[str]) -> SparsePoly:
    """Parse ``text`` as a polynomial in the variables ``names``.

    >>> parse_poly("x*y - 1", ["x", "y", "z"]).terms == {(1, 1, 0): 1, (0, 0, 0): -1}
    True
    """
    names = list(names)
    if len(set(names)) != len(names):
        raise ValueError("duplicate variable names")
    return _Parser(text, names).parse()


def parse_map(texts: Iterable[str], names: Sequence[str]) -> PolyMap:
    return PolyMap([parse_poly(t, names) for t in texts], names)


# ---------------------------------------------------------------- calculus

def evaluate(f: SparsePoly, z: Sequence[complex]) -> complex:
    z = list(z)
    if len(z) != f.nvars:
        raise ValueError(f"point has {len(z)} coordinates, polynomial has {f.nvars} variables")
    total = 0j
    for alpha, c in f._terms.items():
        mono = complex(c)
        for zi, a in zip(z, alpha):
            if a:
                mono *= complex(zi) ** a
        total += mono
    return total


def partial(f: SparsePoly, i: int) -> SparsePoly:
    """Formal derivative with respect to variable ``i`` (0-based)."""
    if not 0 <= i < f.nvars:
        raise IndexError(f"variable index {i} out of range for {f.nvars} variables")
    out = {}
    for alpha, c in f._terms.items():
        if alpha[i]:
            beta = list(alpha)
            beta[i] -= 1
            out[tuple(beta)] = c * alpha[i]
    return SparsePoly(f.nvars, out)


def jacobian(F: PolyMap, z: Sequence[complex]) -> np.ndarray:
    z = list(z)
    if len(z) != F.n:
        raise ValueError(f"point has {len(z)} coordinates, map has {F.n} variables")
    return CompiledMap(F).jacobian(np.asarray(z, dtype=complex))


def face_restriction(f: SparsePoly, points: Iterable[Sequence[int]]) -> SparsePoly:
    """Sum of the terms of ``f`` whose exponents lie in ``points``.

    The origin may be listed even when ``f`` has no constant term; any other
    exponent missing from ``f`` is an error.
    """
    pts = {tuple(int(a) for a in p) for p in points}
    zero = (0,) * f.nvars
    missing = [p for p in pts if p not in f._terms and p != zero]
    if missing:
        raise ValueError(f"face points {sorted(missing)} are not in the support")
    return SparsePoly(f.nvars, {a: c for a, c in f._terms.items() if a in pts})


# ---------------------------------------------------------------- fast numerics

class _Compiled:
    """Vectorized evaluator for a list of polynomials sharing variables."""

    def __init__(self, polys: Sequence[SparsePoly], n: int):
        exps = sorted({a for p in polys for a in p._terms})
        self.count = len(polys)
        if not exps:
            exps = [(0,) * n]
        self.E = np.array(exps, dtype=np.int64).reshape(len(exps), n)
        index = {a: k for k, a in enumerate(exps)}
        C = np.zeros((len(polys), len(exps)), dtype=complex)
        for j, p in enumerate(polys):
            for a, c in p._terms.items():
                C[j, index[a]] = complex(c)
        self.C = C

    def __call__(self, z: np.ndarray) -> np.ndarray:
        mono = np.prod(z[None, :] ** self.E, axis=1)
        return self.C @ mono

    def magnitude(self, z: np.ndarray) -> np.ndarray:
        """Sum of absolute term values, the natural scale of rounding error."""
        mono = np.prod(np.abs(z)[None, :] ** self.E, axis=1)
        return np.abs(self.C) @ mono


class CompiledMap:
    """Numeric evaluation of F, its Jacobian and the Jacobian's derivatives."""

    def __init__(self, F: PolyMap):
        self.F = F
        self.m, self.n = F.m, F.n
        self._values = _Compiled(F.components, self.n)
        jp = F.jacobian_polys()
        self._jac = _Compiled([p for row in jp for p in row], self.n)
        self._jac_polys = jp
        self._djac = None

    def values(self, z: np.ndarray) -> np.ndarray:
        return self._values(np.asarray(z, dtype=complex))

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        return self._jac(np.asarray(z, dtype=complex)).reshape(self.m, self.n)

    def jacobian_derivatives(self, z: np.ndarray) -> np.ndarray:
        """Array D with D[k] = d J / d z_k (holomorphic), shape (n, m, n)."""
        if self._djac is None:
            polys = [partial(p, k) for k in range(self.n) for row in self._jac_polys for p in row]
            self._djac = _Compiled(polys, self.n)
        return self._djac(np.asarray(z, dtype=complex)).reshape(self.n, self.m, self.n)
