"""Readers for OPB and DIMACS inputs, the proof line grammar, and a proof writer.

Proof lines understood here::

    pseudo-Boolean proof version 1.1
    f <count>
    red <constraint> ; <var> [->] <0|1|literal> ...
    p|pol <postfix expression>
    rup <constraint> ;
    del id <id> [<id> ...]
    c <id>
    * comment

Constraints are written as ``+a lit +b lit ... >= A`` (``<=`` is accepted on
input).  Literals are variable names, optionally prefixed by ``~``.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

from .core import NAME_RE, PBConstraint, Substitution, Value, VariableRegistry, normalize
from .cutting_planes import OPERATORS, RpnKind, RpnToken


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


Source = Union[str, IO[str], Iterable[str]]


def _lines(source: Source) -> Iterator[str]:
    if isinstance(source, str):
        return iter(io.StringIO(source))
    return iter(source)


class Formula:
    """Input constraints in file order (ids 1..m) and their variable table."""

    def __init__(self, registry: Optional[VariableRegistry] = None,
                 constraints: Optional[list[PBConstraint]] = None) -> None:
        self.registry = registry if registry is not None else VariableRegistry()
        self.constraints: list[PBConstraint] = constraints if constraints is not None else []

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self) -> Iterator[PBConstraint]:
        return iter(self.constraints)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Formula):
            return NotImplemented
        return (self.constraints == other.constraints
                and self.registry.names() == other.registry.names())

    def __repr__(self) -> str:
        return f"Formula({len(self.registry)} variables, {len(self.constraints)} constraints)"

    @property
    def num_vars(self) -> int:
        return len(self.registry)

    def is_clausal(self) -> bool:
        return all(c.is_clause() or (not c.terms and c.degree == 1) for c in self.constraints)


_CONSTRAINT_TOKEN = re.compile(r">=|<=|=|;|[^\s;<>=]+")
_RED_TOKEN = re.compile(r"->|>=|<=|=|;|[^\s;<>=]+")
_INT = re.compile(r"[+-]?\d+\Z")


def _parse_terms(tokens: list[str], pos: int, registry: VariableRegistry, auxiliary: bool,
                 line: Optional[int]) -> tuple[list[tuple[int, int]], int]:
    terms = []
    n = len(tokens)
    while pos < n and tokens[pos] not in (">=", "<=", "=", ";"):
        coef_tok = tokens[pos]
        if not _INT.match(coef_tok):
            raise ParseError(f"expected coefficient, got {coef_tok!r}", line)
        if pos + 1 >= n:
            raise ParseError("coefficient without literal", line)
        lit_tok = tokens[pos + 1]
        name = lit_tok[1:] if lit_tok.startswith("~") else lit_tok
        if not NAME_RE.match(name):
            raise ParseError(f"bad literal {lit_tok!r}", line)
        terms.append((int(coef_tok), registry.parse_literal(lit_tok, True, auxiliary and name not in registry)))
        pos += 2
    return terms, pos


def _parse_relation(tokens: list[str], pos: int, terms: list[tuple[int, int]],
                    line: Optional[int], allow_eq: bool) -> tuple[list[PBConstraint], int]:
    if pos >= len(tokens):
        raise ParseError("missing relational operator", line)
    op = tokens[pos]
    if op not in (">=", "<=", "="):
        raise ParseError(f"expected relational operator, got {op!r}", line)
    if op == "=" and not allow_eq:
        raise ParseError("equality not allowed here", line)
    if pos + 1 >= len(tokens) or not _INT.match(tokens[pos + 1]):
        raise ParseError("missing right-hand side", line)
    rhs = int(tokens[pos + 1])
    pos += 2
    geq = normalize(terms, rhs)
    leq = normalize([(-a, l) for a, l in terms], -rhs)
    out = {">=": [geq], "<=": [leq], "=": [geq, leq]}[op]
    return out, pos


_HEADER = re.compile(r"#variable=\s*(\d+)\s+#constraint=\s*(\d+)")


def parse_opb(source: Source) -> Formula:
    """Parse OPB text (or a stream of lines).  Equalities add two constraints."""
    formula = Formula()
    reg = formula.registry
    declared_vars: Optional[int] = None
    declared_cons: Optional[int] = None
    seen = 0
    for lineno, raw in enumerate(_lines(source), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*"):
            m = _HEADER.search(line)
            if m and declared_vars is None:
                declared_vars, declared_cons = int(m.group(1)), int(m.group(2))
                for k in range(1, declared_vars + 1):
                    reg.add(f"x{k}")
            continue
        if line.startswith("min:") or line.startswith("max:"):
            raise ParseError("objective functions are not supported", lineno)
        tokens = _CONSTRAINT_TOKEN.findall(line)
        terms, pos = _parse_terms(tokens, 0, reg, False, lineno)
        cons, pos = _parse_relation(tokens, pos, terms, lineno, True)
        if pos >= len(tokens) or tokens[pos] != ";":
            raise ParseError("constraint must end with ';'", lineno)
        if pos + 1 != len(tokens):
            raise ParseError("trailing tokens after ';'", lineno)
        formula.constraints.extend(cons)
        seen += 1
    if declared_cons is not None and seen != declared_cons:
        raise ParseError(f"header declares {declared_cons} constraints, body has {seen}")
    if declared_vars is not None and len(reg) > declared_vars:
        raise ParseError(f"header declares {declared_vars} variables, body uses {len(reg)}")
    return formula


def parse_cnf(source: Source) -> Formula:
    """Parse DIMACS CNF.  Variable ``k`` is named ``xk``."""
    formula = Formula()
    reg = formula.registry
    declared: Optional[tuple[int, int]] = None
    current: list[int] = []
    count = 0
    for lineno, raw in enumerate(_lines(source), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError("malformed problem line", lineno)
            declared = (int(parts[2]), int(parts[3]))
            for k in range(1, declared[0] + 1):
                reg.add(f"x{k}")
            continue
        if declared is None:
            raise ParseError("clause before problem line", lineno)
        for tok in line.split():
            try:
                n = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno) from None
            if n == 0:
                formula.constraints.append(normalize([(1, l) for l in dict.fromkeys(current)], 1))
                current = []
                count += 1
            else:
                if abs(n) > declared[0]:
                    raise ParseError(f"variable {abs(n)} exceeds declared count", lineno)
                current.append(n)
    if current:
        raise ParseError("last clause not terminated by 0")
    if declared is not None and count != declared[1]:
        raise ParseError(f"header declares {declared[1]} clauses, body has {count}")
    return formula


def read_formula(path: Union[str, Path]) -> Formula:
    path = Path(path)
    with open(path) as fh:
        if path.suffix.lower() == ".opb":
            return parse_opb(fh)
        return parse_cnf(fh)


def write_cnf(clauses: Iterable[Iterable[int]], num_vars: int, stream: IO[str]) -> None:
    clauses = [list(c) for c in clauses]
    stream.write(f"p cnf {num_vars} {len(clauses)}\n")
    for c in clauses:
        stream.write(" ".join(map(str, c)) + " 0\n")


@dataclass(frozen=True)
class Header:
    version: str = "1.1"


@dataclass(frozen=True)
class Load:
    count: Optional[int] = None


@dataclass(frozen=True)
class Red:
    constraint: PBConstraint
    witness: Substitution


@dataclass(frozen=True)
class Pol:
    tokens: tuple[RpnToken, ...]


@dataclass(frozen=True)
class Rup:
    constraint: PBConstraint


@dataclass(frozen=True)
class Delete:
    ids: tuple[int, ...]


@dataclass(frozen=True)
class Conclusion:
    id: int


ProofStep = Union[Header, Load, Red, Pol, Rup, Delete, Conclusion]

HEADER_PREFIX = "pseudo-Boolean proof version"


def _parse_constraint(tokens: list[str], registry: VariableRegistry, line: Optional[int]) -> tuple[PBConstraint, int]:
    terms, pos = _parse_terms(tokens, 0, registry, True, line)
    cons, pos = _parse_relation(tokens, pos, terms, line, False)
    if pos >= len(tokens) or tokens[pos] != ";":
        raise ParseError("constraint must end with ';'", line)
    return cons[0], pos + 1


def _parse_witness(tokens: list[str], registry: VariableRegistry, line: Optional[int]) -> Substitution:
    pairs: list[tuple[int, Value]] = []
    i = 0
    n = len(tokens)
    while i < n:
        name = tokens[i]
        if not NAME_RE.match(name):
            raise ParseError(f"bad witness variable {name!r}", line)
        v = registry.add(name, auxiliary=name not in registry)
        i += 1
        if i < n and tokens[i] == "->":
            i += 1
        if i >= n:
            raise ParseError(f"missing value for witness variable {name!r}", line)
        val_tok = tokens[i]
        i += 1
        if val_tok in ("0", "1"):
            pairs.append((v, val_tok == "1"))
        else:
            lname = val_tok[1:] if val_tok.startswith("~") else val_tok
            if not NAME_RE.match(lname):
                raise ParseError(f"bad witness value {val_tok!r}", line)
            pairs.append((v, registry.parse_literal(val_tok, True, lname not in registry)))
    try:
        return Substitution(pairs)
    except ValueError as e:
        raise ParseError(str(e), line) from None


def parse_rpn(tokens: Iterable[str], registry: VariableRegistry, line: Optional[int] = None) -> tuple[RpnToken, ...]:
    out = []
    for t in tokens:
        op = OPERATORS.get(t)
        if op is not None:
            out.append(RpnToken(op))
        elif t.isdigit():
            out.append(RpnToken(RpnKind.INTEGER, int(t)))
        else:
            name = t[1:] if t.startswith("~") else t
            if not NAME_RE.match(name):
                raise ParseError(f"bad token {t!r} in expression", line)
            out.append(RpnToken(RpnKind.LITERAL, registry.parse_literal(t, True, name not in registry)))
    if not out:
        raise ParseError("empty expression", line)
    return tuple(out)


def parse_proof_line(text: str, registry: VariableRegistry, line: Optional[int] = None) -> Optional[ProofStep]:
    """Parse one proof line; comments and blank lines give ``None``."""
    s = text.strip()
    if not s or s.startswith("*"):
        return None
    if s.startswith(HEADER_PREFIX):
        version = s[len(HEADER_PREFIX):].strip()
        if not re.fullmatch(r"\d+(\.\d+)*", version):
            raise ParseError(f"bad proof version {version!r}", line)
        return Header(version)
    head, _, rest = s.partition(" ")
    rest = rest.strip()
    if head == "f":
        if not rest:
            return Load(None)
        if not rest.isdigit():
            raise ParseError(f"bad constraint count {rest!r}", line)
        return Load(int(rest))
    if head in ("p", "pol"):
        return Pol(parse_rpn(rest.split(), registry, line))
    if head in ("rup", "u"):
        tokens = _CONSTRAINT_TOKEN.findall(rest)
        c, pos = _parse_constraint(tokens, registry, line)
        if pos != len(tokens):
            raise ParseError("trailing tokens after rup constraint", line)
        return Rup(c)
    if head == "red":
        tokens = _RED_TOKEN.findall(rest)
        c, pos = _parse_constraint(tokens, registry, line)
        return Red(c, _parse_witness(tokens[pos:], registry, line))
    if head == "del":
        parts = rest.split()
        if not parts or parts[0] != "id":
            raise ParseError("expected 'del id <ids>'", line)
        if len(parts) < 2 or not all(p.isdigit() for p in parts[1:]):
            raise ParseError("bad deletion id list", line)
        return Delete(tuple(int(p) for p in parts[1:]))
    if head == "c":
        if not rest.isdigit():
            raise ParseError(f"bad conclusion id {rest!r}", line)
        return Conclusion(int(rest))
    raise ParseError(f"unknown rule {head!r}", line)


def iter_proof(source: Source, registry: VariableRegistry) -> Iterator[tuple[int, ProofStep]]:
    """Yield ``(line number, step)`` pairs, skipping comments and blank lines."""
    for lineno, raw in enumerate(_lines(source), 1):
        step = parse_proof_line(raw, registry, lineno)
        if step is not None:
            yield lineno, step


def format_step(step: ProofStep, registry: VariableRegistry) -> str:
    name = registry.literal_name
    if isinstance(step, Header):
        return f"{HEADER_PREFIX} {step.version}"
    if isinstance(step, Load):
        return "f" if step.count is None else f"f {step.count}"
    if isinstance(step, Pol):
        return "p " + " ".join(t.text(name) for t in step.tokens)
    if isinstance(step, Rup):
        return f"rup {step.constraint.format(registry)} ;"
    if isinstance(step, Red):
        parts = []
        for v in step.witness.domain():
            val = step.witness.mapping[v]
            img = str(int(val)) if type(val) is bool else name(val)
            parts.append(f"{registry.name(v)} -> {img}")
        return f"red {step.constraint.format(registry)} ; " + " ".join(parts)
    if isinstance(step, Delete):
        return "del id " + " ".join(map(str, step.ids))
    if isinstance(step, Conclusion):
        return f"c {step.id}"
    raise TypeError(f"not a proof step: {step!r}")


class ProofWriter:
    """Buffered sequential writer of proof lines; counts bytes and lines written."""

    def __init__(self, stream: Optional[IO[str]], registry: VariableRegistry) -> None:
        self.stream = stream
        self.registry = registry
        self.bytes_written = 0
        self.lines_written = 0

    def write_step(self, step: ProofStep) -> str:
        text = format_step(step, self.registry)
        self.write_line(text)
        return text

    def write_line(self, text: str) -> None:
        self.bytes_written += len(text) + 1
        self.lines_written += 1
        if self.stream is not None:
            self.stream.write(text)
            self.stream.write("\n")

    def flush(self) -> None:
        if self.stream is not None:
            self.stream.flush()


def write_step(writer: ProofWriter, step: ProofStep) -> str:
    return writer.write_step(step)

