"""Cutting-planes derivation rules and the postfix expression evaluator."""

from __future__ import annotations

from enum import Enum
from typing import Callable, Iterable, NamedTuple, Optional, Union

from .core import PBConstraint, normalize, var_of


class CuttingPlanesError(ValueError):
    pass


def linear_combination(a: PBConstraint, b: PBConstraint, ca: int = 1, cb: int = 1) -> PBConstraint:
    if ca < 0 or cb < 0:
        raise CuttingPlanesError("linear combination factors must be non-negative")
    terms = [(ca * x, l) for x, l in a.terms]
    terms += [(cb * x, l) for x, l in b.terms]
    return normalize(terms, ca * a.degree + cb * b.degree)


def add(a: PBConstraint, b: PBConstraint) -> PBConstraint:
    """``a + b``, merged directly since both sides are sorted by variable."""
    ta, tb = a.terms, b.terms
    i = j = 0
    na, nb = len(ta), len(tb)
    out = []
    degree = a.degree + b.degree
    while i < na and j < nb:
        ca, la = ta[i]
        cb, lb = tb[j]
        va, vb = var_of(la), var_of(lb)
        if va < vb:
            out.append(ta[i])
            i += 1
        elif vb < va:
            out.append(tb[j])
            j += 1
        else:
            i += 1
            j += 1
            if la == lb:
                out.append((ca + cb, la))
            elif ca > cb:
                degree -= cb
                out.append((ca - cb, la))
            elif cb > ca:
                degree -= ca
                out.append((cb - ca, lb))
            else:
                degree -= ca
    out.extend(ta[i:])
    out.extend(tb[j:])
    return PBConstraint(tuple(out), degree if degree > 0 else 0)


def divide(c: PBConstraint, d: int) -> PBConstraint:
    if d <= 0:
        raise CuttingPlanesError(f"divisor must be positive, got {d}")
    if d == 1:
        return c
    return PBConstraint(tuple((-(-a // d), l) for a, l in c.terms), -(-c.degree // d))


def multiply(c: PBConstraint, m: int) -> PBConstraint:
    if m <= 0:
        raise CuttingPlanesError(f"factor must be positive, got {m}")
    if m == 1:
        return c
    return PBConstraint(tuple((a * m, l) for a, l in c.terms), c.degree * m)


def saturate(c: PBConstraint) -> PBConstraint:
    A = c.degree
    if c.max_coef <= A:
        return c
    return PBConstraint(tuple((min(a, A), l) for a, l in c.terms), A)


def literal_axiom(lit: int) -> PBConstraint:
    return PBConstraint(((1, lit),), 0)


class RpnKind(Enum):
    INTEGER = "int"
    LITERAL = "lit"
    ADD = "+"
    MUL = "*"
    DIV = "d"
    SAT = "s"


class RpnToken(NamedTuple):
    kind: RpnKind
    value: int = 0

    def text(self, literal_name: Callable[[int], str]) -> str:
        if self.kind is RpnKind.INTEGER:
            return str(self.value)
        if self.kind is RpnKind.LITERAL:
            return literal_name(self.value)
        return self.kind.value


OPERATORS = {"+": RpnKind.ADD, "*": RpnKind.MUL, "d": RpnKind.DIV, "s": RpnKind.SAT}

ADD = RpnToken(RpnKind.ADD)
MUL = RpnToken(RpnKind.MUL)
DIV = RpnToken(RpnKind.DIV)
SAT = RpnToken(RpnKind.SAT)


def num(n: int) -> RpnToken:
    return RpnToken(RpnKind.INTEGER, n)


def lit(l: int) -> RpnToken:
    return RpnToken(RpnKind.LITERAL, l)


Lookup = Callable[[int], Optional[PBConstraint]]
_Item = Union[int, PBConstraint]


def eval_rpn(tokens: Iterable[RpnToken], db: Union[Lookup, "object"]) -> PBConstraint:
    """Evaluate a ``p`` expression.

    ``db`` is either a callable mapping ids to constraints (``None`` when
    unknown) or an object with a ``get`` method.  Integers stay unresolved on
    the stack until an operator decides whether they are scalars or ids.
    """
    get = db if callable(db) else db.get  # type: ignore[attr-defined]

    def resolve(item: _Item) -> PBConstraint:
        if isinstance(item, PBConstraint):
            return item
        c = get(item)
        if c is None:
            raise CuttingPlanesError(f"unknown constraint id {item}")
        return c

    stack: list[_Item] = []
    for tok in tokens:
        kind = tok.kind
        if kind is RpnKind.INTEGER:
            stack.append(tok.value)
        elif kind is RpnKind.LITERAL:
            stack.append(literal_axiom(tok.value))
        elif kind is RpnKind.ADD:
            if len(stack) < 2:
                raise CuttingPlanesError("stack underflow at '+'")
            b = resolve(stack.pop())
            a = resolve(stack.pop())
            stack.append(add(a, b))
        elif kind is RpnKind.SAT:
            if not stack:
                raise CuttingPlanesError("stack underflow at 's'")
            stack.append(saturate(resolve(stack.pop())))
        else:
            if len(stack) < 2:
                raise CuttingPlanesError(f"stack underflow at '{kind.value}'")
            k = stack.pop()
            if not isinstance(k, int):
                raise CuttingPlanesError(f"'{kind.value}' expects a scalar operand")
            c = resolve(stack.pop())
            if k <= 0:
                raise CuttingPlanesError(f"non-positive scalar {k} for '{kind.value}'")
            stack.append(multiply(c, k) if kind is RpnKind.MUL else divide(c, k))
    if len(stack) != 1:
        raise CuttingPlanesError(
            "empty expression" if not stack else f"{len(stack)} items left on the stack"
        )
    return resolve(stack[0])
