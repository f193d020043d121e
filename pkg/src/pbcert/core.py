"""Normalized pseudo-Boolean constraints and their elementary transformations.

Literals are nonzero ints: ``v`` is the variable with id ``v`` and ``-v`` its
negation.  Coefficients and degrees are plain Python ints, so they never
overflow.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Union

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class Namespace(Enum):
    INPUT = "input"
    AUXILIARY = "auxiliary"


class Variable(NamedTuple):
    id: int
    namespace: Namespace = Namespace.INPUT


def var_of(lit: int) -> int:
    return lit if lit > 0 else -lit


class VariableRegistry:
    """Bidirectional map between variable names and integer ids.

    Ids are handed out consecutively from 1.  Auxiliary variables share the
    id space with input variables but are flagged, and never reuse a name.
    """

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._names: list[str] = [""]
        self._aux: set[int] = set()

    def __len__(self) -> int:
        return len(self._names) - 1

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def add(self, name: str, auxiliary: bool = False) -> int:
        if not NAME_RE.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        vid = self._ids.get(name)
        if vid is None:
            vid = len(self._names)
            self._ids[name] = vid
            self._names.append(name)
            if auxiliary:
                self._aux.add(vid)
        return vid

    def copy(self) -> "VariableRegistry":
        out = VariableRegistry()
        out._ids = dict(self._ids)
        out._names = list(self._names)
        out._aux = set(self._aux)
        return out

    def names(self) -> list[str]:
        return self._names[1:]

    def id(self, name: str) -> int:
        return self._ids[name]

    def name(self, vid: int) -> str:
        return self._names[vid]

    def variable(self, vid: int) -> Variable:
        ns = Namespace.AUXILIARY if vid in self._aux else Namespace.INPUT
        return Variable(vid, ns)

    def is_auxiliary(self, vid: int) -> bool:
        return vid in self._aux

    def fresh(self, prefix: str = "y") -> int:
        """Allocate an auxiliary variable whose name is not yet taken."""
        k = len(self._aux) + 1
        while f"{prefix}{k}" in self._ids:
            k += 1
        return self.add(f"{prefix}{k}", auxiliary=True)

    def parse_literal(self, token: str, create: bool = True, auxiliary: bool = False) -> int:
        neg = token.startswith("~")
        name = token[1:] if neg else token
        if create:
            vid = self.add(name, auxiliary)
        else:
            vid = self._ids[name]
        return -vid if neg else vid

    def literal_name(self, lit: int) -> str:
        return ("~" if lit < 0 else "") + self._names[var_of(lit)]


class PBConstraint:
    """Normalized constraint ``sum(a_i * l_i) >= degree``.

    ``terms`` is a tuple of ``(coefficient, literal)`` pairs sorted by
    variable id, over distinct variables, with every coefficient >= 1.
    Build instances through :func:`normalize` unless the terms are already
    canonical.
    """

    __slots__ = ("terms", "degree", "_hash", "_max_coef", "_coef_sum")

    def __init__(self, terms: tuple[tuple[int, int], ...], degree: int) -> None:
        self.terms = terms
        self.degree = degree
        self._hash: int | None = None
        self._max_coef: int | None = None
        self._coef_sum: int | None = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PBConstraint):
            return NotImplemented
        return self.degree == other.degree and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.terms, self.degree))
        return self._hash

    def __repr__(self) -> str:
        lhs = " ".join(f"{a}*{'~' if l < 0 else ''}v{var_of(l)}" for a, l in self.terms)
        return f"PBConstraint({lhs or '0'} >= {self.degree})"

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def max_coef(self) -> int:
        if self._max_coef is None:
            self._max_coef = max((a for a, _ in self.terms), default=0)
        return self._max_coef

    @property
    def coef_sum(self) -> int:
        if self._coef_sum is None:
            self._coef_sum = sum(a for a, _ in self.terms)
        return self._coef_sum

    @property
    def literals(self) -> list[int]:
        return [l for _, l in self.terms]

    def is_trivial(self) -> bool:
        return self.degree == 0

    def is_contradiction(self) -> bool:
        """True for the canonical contradiction: empty left-hand side, degree >= 1."""
        return not self.terms and self.degree >= 1

    def is_clause(self) -> bool:
        return self.degree == 1 and all(a == 1 for a, _ in self.terms)

    def format(self, registry: VariableRegistry) -> str:
        parts = [f"+{a} {registry.literal_name(l)}" for a, l in self.terms]
        parts.append(f">= {self.degree}")
        return " ".join(parts)


def normalize(terms: Iterable[tuple[int, int]], degree: int) -> PBConstraint:
    """Rewrite a signed linear inequality ``sum(c*l) >= degree`` into normal form.

    Repeated and opposite literals are merged using ``~x = 1 - x``; zero
    coefficients vanish and a non-positive degree is clamped to 0.
    """
    acc: dict[int, int] = {}
    for a, lit in terms:
        if lit > 0:
            acc[lit] = acc.get(lit, 0) + a
        else:
            acc[-lit] = acc.get(-lit, 0) - a
            degree -= a
    out = []
    for v in sorted(acc):
        a = acc[v]
        if a > 0:
            out.append((a, v))
        elif a < 0:
            out.append((-a, -v))
            degree -= a
    return PBConstraint(tuple(out), degree if degree > 0 else 0)


def clause(lits: Iterable[int]) -> PBConstraint:
    return normalize(((1, l) for l in lits), 1)


def negate(c: PBConstraint) -> PBConstraint:
    return normalize(((-a, l) for a, l in c.terms), 1 - c.degree)


Value = Union[bool, int]


class Substitution:
    """Partial map from variables to ``True``/``False`` or to a literal.

    Constants are stored as ``bool`` and literals as ``int``; since ``bool``
    subclasses ``int`` the two are told apart with ``type(v) is bool``.
    """

    __slots__ = ("mapping",)

    def __init__(self, mapping: Mapping[int, Value] | Iterable[tuple[int, Value]] = ()) -> None:
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        m: dict[int, Value] = {}
        for v, val in items:
            if v in m:
                raise ValueError(f"variable {v} mapped twice in substitution")
            if v <= 0:
                raise ValueError("substitution domain must be variable ids")
            if type(val) is not bool and (not isinstance(val, int) or val == 0):
                raise ValueError(f"bad substitution value {val!r}")
            m[v] = val
        self.mapping = m

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Substitution):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(tuple(self._key()))

    def _key(self) -> list:
        return sorted((v, type(x) is bool, int(x)) for v, x in self.mapping.items())

    def __repr__(self) -> str:
        return f"Substitution({self.mapping!r})"

    def __len__(self) -> int:
        return len(self.mapping)

    def __contains__(self, v: int) -> bool:
        return v in self.mapping

    def domain(self) -> list[int]:
        return sorted(self.mapping)

    def apply_literal(self, lit: int) -> Value:
        """Image of a literal: a bool, or a literal (identity outside the domain)."""
        v = var_of(lit)
        val = self.mapping.get(v)
        if val is None:
            return lit
        if type(val) is bool:
            return val if lit > 0 else not val
        return val if lit > 0 else -val


def restrict(c: PBConstraint, s: Substitution | Mapping[int, Value]) -> PBConstraint:
    if not isinstance(s, Substitution):
        s = Substitution(s)
    if not s.mapping:
        return c
    degree = c.degree
    out = []
    for a, lit in c.terms:
        img = s.apply_literal(lit)
        if type(img) is bool:
            if img:
                degree -= a
        else:
            out.append((a, img))
    return normalize(out, degree)


@dataclass(frozen=True)
class LinearEquality:
    """``sum(c*l) = constant`` with signed integer coefficients."""

    terms: tuple[tuple[int, int], ...]
    constant: int


def expand_equality(e: LinearEquality) -> tuple[PBConstraint, PBConstraint]:
    geq = normalize(e.terms, e.constant)
    leq = normalize(((-a, l) for a, l in e.terms), -e.constant)
    return geq, leq


def implies_syntactically(c: PBConstraint, d: PBConstraint) -> bool:
    """Decide whether ``d`` follows from ``c`` by adding literal axioms."""
    dmap = {var_of(l): (b, l) for b, l in d.terms}
    penalty = 0
    for a, lit in c.terms:
        b, dl = dmap.get(var_of(lit), (0, 0))
        if dl == lit:
            if b < a:
                penalty += a - b
        else:
            penalty += a
    return d.degree <= max(c.degree - penalty, 0)


class UnassignedVariable(KeyError):
    pass


def evaluate(c: PBConstraint, alpha: Mapping[int, bool | int]) -> bool:
    total = 0
    for a, lit in c.terms:
        v = var_of(lit)
        try:
            val = alpha[v]
        except KeyError:
            raise UnassignedVariable(v) from None
        if bool(val) == (lit > 0):
            total += a
    return total >= c.degree
