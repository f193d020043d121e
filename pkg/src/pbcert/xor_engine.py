"""Parity reasoning with pseudo-Boolean proof logging.

A parity ``x1 + ... + xk = b (mod 2)`` is certified in the proof by a pair of
PB constraints that together say ``sum(x) = b + 2 * sum(aux)`` for fresh
auxiliary variables:

    geq:  sum(x) + 2 * sum(~aux) >= b + 2m
    leq:  sum(~x) + 2 * sum(aux) >= k - b

Pairs can be added half by half, which realises addition over GF(2).  Rows
are bit masks over variable ids; Gaussian elimination works on the masks and
only turns a combined row into PB constraints when its reason is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

from .core import PBConstraint, Substitution, VariableRegistry, clause, negate, normalize, var_of
from .cutting_planes import ADD, DIV, MUL, SAT, RpnToken, eval_rpn, lit, num
from .database import ConstraintDatabase
from .proofio import Conclusion, Delete, Formula, Header, Load, Pol, Red, Rup, ProofWriter
from .propagation import rup_check
from .redundancy import redundancy_check

K_MAX = 6


class XorLoggingError(RuntimeError):
    pass


def mask_vars(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def vars_mask(vs: Iterable[int]) -> int:
    m = 0
    for v in vs:
        m |= 1 << v
    return m


@dataclass
class XorConstraint:
    """Parity over the variables in ``vars`` (a bit mask) with right-hand side ``rhs``.

    ``origin`` records which base rows were added to produce this one.
    """

    vars: int
    rhs: int
    geq_id: Optional[int] = None
    leq_id: Optional[int] = None
    origin: int = 0

    @classmethod
    def of(cls, variables: Iterable[int], rhs: int, **kw) -> "XorConstraint":
        m = 0
        for v in variables:
            m ^= 1 << v
        return cls(m, rhs & 1, **kw)

    def variables(self) -> list[int]:
        return mask_vars(self.vars)

    def __len__(self) -> int:
        return self.vars.bit_count()

    def holds(self, values: Mapping[int, bool]) -> bool:
        return (sum(1 for v in self.variables() if values[v]) & 1) == self.rhs

    def __add__(self, other: "XorConstraint") -> "XorConstraint":
        return XorConstraint(self.vars ^ other.vars, self.rhs ^ other.rhs, origin=self.origin ^ other.origin)


class AuxAllocator:
    """Hands out fresh auxiliary variables in the logger's namespace."""

    def __init__(self, registry: VariableRegistry, prefix: str = "y") -> None:
        self.registry = registry
        self.prefix = prefix

    @property
    def next_id(self) -> int:
        return len(self.registry) + 1

    def fresh(self) -> int:
        return self.registry.fresh(self.prefix)


class ProofLogger:
    """Writes proof steps and mirrors them in a shadow database.

    With ``check`` set, ``red`` and ``rup`` steps are validated in the shadow
    before being written.  ``pol`` steps are always evaluated, since later
    steps need the derived constraints.
    """

    def __init__(self, registry: VariableRegistry, stream: Optional[IO[str]] = None, check: bool = False) -> None:
        self.registry = registry
        self.writer = ProofWriter(stream, registry)
        self.db = ConstraintDatabase(registry)
        self.check = check

    @property
    def bytes_written(self) -> int:
        return self.writer.bytes_written

    def header(self, version: str = "1.1") -> None:
        self.writer.write_step(Header(version))

    def load(self, formula: Formula) -> list[int]:
        self.writer.write_step(Load(len(formula.constraints)))
        return self.db.extend(formula.constraints)

    def red(self, c: PBConstraint, witness: Union[Substitution, Mapping]) -> int:
        if not isinstance(witness, Substitution):
            witness = Substitution(witness)
        if self.check and not redundancy_check(self.db, c, witness):
            raise XorLoggingError(f"redundancy step would be rejected: {c!r}")
        self.writer.write_step(Red(c, witness))
        return self.db.add(c)

    def pol(self, tokens: Sequence[RpnToken]) -> int:
        c = eval_rpn(tokens, self.db.get)
        self.writer.write_step(Pol(tuple(tokens)))
        return self.db.add(c)

    def rup(self, c: PBConstraint) -> int:
        if self.check and not rup_check(self.db, c):
            raise XorLoggingError(f"rup step would be rejected: {c!r}")
        self.writer.write_step(Rup(c))
        return self.db.add(c)

    def try_rup(self, c: PBConstraint) -> Optional[int]:
        if not rup_check(self.db, c):
            return None
        self.writer.write_step(Rup(c))
        return self.db.add(c)

    def delete(self, ids: Sequence[int]) -> None:
        if not ids:
            return
        self.writer.write_step(Delete(tuple(ids)))
        for cid in ids:
            self.db.delete(cid)

    def conclude(self, cid: int) -> None:
        self.writer.write_step(Conclusion(cid))

    def __getitem__(self, cid: int) -> PBConstraint:
        return self.db[cid]


def detect_xors(formula: Formula, k_max: int = K_MAX) -> list[tuple[XorConstraint, tuple[int, ...]]]:
    """Find parities whose complete clausal encoding occurs among the clauses.

    Returns each parity with the ids of the clauses forming its encoding,
    ordered by the lowest such id.
    """
    groups: dict[int, dict[int, int]] = {}
    for i, c in enumerate(formula.constraints, 1):
        if not c.is_clause() or not 2 <= len(c.terms) <= k_max:
            continue
        vm = 0
        neg = 0
        for _, l in c.terms:
            vm |= 1 << var_of(l)
            if l < 0:
                neg |= 1 << var_of(l)
        groups.setdefault(vm, {}).setdefault(neg, i)
    found = []
    for vm, patterns in groups.items():
        k = vm.bit_count()
        if len(patterns) < 1 << (k - 1):
            continue
        vs = mask_vars(vm)
        for p in (0, 1):
            ids = []
            for key in range(1 << k):
                if (key.bit_count() & 1) != p:
                    continue
                neg = 0
                for j, v in enumerate(vs):
                    if key >> (k - 1 - j) & 1:
                        neg |= 1 << v
                cid = patterns.get(neg)
                if cid is None:
                    break
                ids.append(cid)
            else:
                found.append((XorConstraint(vm, 1 - p), tuple(ids)))
    found.sort(key=lambda e: min(e[1]))
    return found


def log_reification(alloc: AuxAllocator, c: PBConstraint, logger: ProofLogger) -> tuple[int, int, int]:
    """Introduce ``y <=> c`` by two redundance steps; returns ``(y, fwd_id, bwd_id)``.

    The forward half ``A*~y + c`` (witness ``y -> 0``) is written first.
    """
    y = alloc.fresh()
    fwd = normalize(list(c.terms) + [(c.degree, -y)], c.degree)
    nc = negate(c)
    bwd = normalize(list(nc.terms) + [(nc.degree, y)], nc.degree)
    id_fwd = logger.red(fwd, {y: False})
    id_bwd = logger.red(bwd, {y: True})
    return y, id_fwd, id_bwd


def log_adder(alloc: AuxAllocator, in1: Optional[int], in2: Optional[int], in3: Optional[int],
              logger: ProofLogger) -> tuple[int, int, int, int]:
    """Full adder ``2y + z = in1 + in2 + in3``; a ``None`` input gives a half adder.

    Returns ``(carry, sum, geq_id, leq_id)`` where the two ids hold the halves
    of the equality.
    """
    ins = [l for l in (in1, in2, in3) if l]
    base = [(1, l) for l in ins]
    y, yf, yb = log_reification(alloc, normalize(base, 2), logger)
    z, zf, zb = log_reification(alloc, normalize(base + [(-2, y)], 1), logger)
    g = logger.pol([num(zf), num(yf), num(2), MUL, ADD, num(3), DIV])
    l = logger.pol([num(zb), num(yb), num(2), MUL, ADD, num(3), DIV])
    return y, z, g, l


def _sum_tokens(ids: Sequence[int]) -> list[RpnToken]:
    toks = [num(ids[0])]
    for i in ids[1:]:
        toks += [num(i), ADD]
    return toks


def _reason_tokens(geq_id: int, leq_id: int, falsified: Sequence[int], leq: PBConstraint) -> list[RpnToken]:
    """Postfix derivation of the clause refuting an assignment that violates a parity.

    ``falsified`` are the parity literals (as they occur in the geq half)
    that the assignment makes false; each cancels against its negation in
    the leq half.
    """
    coef = {l: a for a, l in leq.terms}
    toks = [num(leq_id)]
    scaled = False
    for l in falsified:
        toks.append(lit(l))
        a = coef.get(-l, 1)
        if a > 1:
            toks += [num(a), MUL]
            scaled = True
    toks += [ADD] * len(falsified)
    toks += [num(2), DIV, num(2), MUL, num(geq_id), ADD]
    if scaled:
        toks.append(SAT)
    return toks


def log_cnf_to_pb(alloc: AuxAllocator, xor: XorConstraint, clause_ids: Sequence[int],
                  logger: ProofLogger) -> XorConstraint:
    """Derive the PB pair of a parity from its clausal encoding.

    The clauses may appear in any order; each is matched to the assignment
    it forbids.
    """
    xs = xor.variables()
    k = len(xs)
    b = xor.rhs
    if k == 0:
        raise XorLoggingError("empty parity has no clausal encoding")
    pos = {v: j for j, v in enumerate(xs)}
    forbidden: dict[int, int] = {}
    for cid in clause_ids:
        c = logger.db[cid]
        key = 0
        for _, l in c.terms:
            if var_of(l) not in pos:
                raise XorLoggingError(f"clause {cid} mentions a variable outside the parity")
            if l < 0:
                key |= 1 << (k - 1 - pos[var_of(l)])
        forbidden.setdefault(key, cid)

    def input_clause(key: int) -> int:
        cid = forbidden.get(key)
        if cid is None:
            raise XorLoggingError(f"encoding clause for assignment {key:0{k}b} is missing")
        return cid

    if k == 1:
        x = xs[0]
        if b:
            return XorConstraint(xor.vars, b, input_clause(0), logger.pol([lit(-x)]), xor.origin)
        return XorConstraint(xor.vars, b, logger.pol([lit(x)]), input_clause(1), xor.origin)

    kp = k // 2
    ext: list[int] = list(xs)
    t = t_unit = None
    if k % 2 == 0:
        t = alloc.fresh()
        t_unit = logger.red(clause([-t]), {t: False})
        ext.append(t)
    geqs, leqs = [], []
    z: Optional[int] = None
    for i in range(kp, 0, -1):
        third = ext[2 * i] if i == kp else z
        _, z, g, l = log_adder(alloc, ext[2 * i - 2], ext[2 * i - 1], third, logger)
        geqs.append(g)
        leqs.append(l)
    assert z is not None
    yp = z
    if len(geqs) == 1 and t is None:
        g0, l0 = geqs[0], leqs[0]
    else:
        gt = _sum_tokens(geqs)
        lt = _sum_tokens(leqs)
        if t is not None:
            gt += [num(t_unit), ADD]
            lt += [lit(t), ADD]
        g0 = logger.pol(gt)
        l0 = logger.pol(lt)

    ulit = yp if b else -yp
    leaves: list[int] = []
    for key in range(1 << k):
        if (key.bit_count() & 1) != b:
            leaves.append(input_clause(key))
            continue
        lits = [xs[j] if not key >> (k - 1 - j) & 1 else -xs[j] for j in range(k)]
        cid = logger.try_rup(clause(lits + [ulit]))
        if cid is None:
            falsified = [xs[j] for j in range(k) if not key >> (k - 1 - j) & 1]
            if not b:
                falsified.append(-yp)
            cid = logger.pol(_reason_tokens(g0, l0, falsified, logger.db[l0]))
        leaves.append(cid)

    def cascade(lo: int, hi: int) -> list[RpnToken]:
        if hi - lo == 1:
            return [num(leaves[lo])]
        mid = (lo + hi) // 2
        return cascade(lo, mid) + cascade(mid, hi) + [ADD, num(2), DIV]

    unit = logger.pol(cascade(0, len(leaves)))
    if b:
        g = logger.pol([num(g0), num(unit), ADD])
        l = logger.pol([num(l0), lit(-yp), ADD])
    else:
        g = logger.pol([num(g0), lit(yp), ADD])
        l = logger.pol([num(l0), num(unit), ADD])
    return XorConstraint(xor.vars, b, g, l, xor.origin)


def log_xor_add(a: XorConstraint, b: XorConstraint, logger: ProofLogger) -> XorConstraint:
    if None in (a.geq_id, a.leq_id, b.geq_id, b.leq_id):
        raise XorLoggingError("both parities need PB encodings before they can be added")
    g = logger.pol([num(a.geq_id), num(b.geq_id), ADD])  # type: ignore[arg-type]
    l = logger.pol([num(a.leq_id), num(b.leq_id), ADD])  # type: ignore[arg-type]
    return XorConstraint(a.vars ^ b.vars, a.rhs ^ b.rhs, g, l, a.origin ^ b.origin)


def log_xor_sum(xors: Sequence[XorConstraint], logger: ProofLogger) -> XorConstraint:
    """Add several encoded parities with one ``p`` line per half."""
    if not xors:
        raise XorLoggingError("nothing to add")
    if len(xors) == 1:
        return xors[0]
    vm = rhs = origin = 0
    for x in xors:
        if x.geq_id is None or x.leq_id is None:
            raise XorLoggingError("parity without PB encoding")
        vm ^= x.vars
        rhs ^= x.rhs
        origin ^= x.origin
    g = logger.pol(_sum_tokens([x.geq_id for x in xors]))  # type: ignore[misc]
    l = logger.pol(_sum_tokens([x.leq_id for x in xors]))  # type: ignore[misc]
    return XorConstraint(vm, rhs, g, l, origin)


def log_reason_clause(x: XorConstraint, rho: Mapping[int, bool], logger: ProofLogger) -> int:
    """Derive the clause ruling out ``rho`` on the variables of ``x``.

    ``rho`` must assign every variable of ``x`` and violate the parity.
    """
    if x.geq_id is None or x.leq_id is None:
        raise XorLoggingError("parity without PB encoding")
    vs = x.variables()
    try:
        ones = sum(1 for v in vs if rho[v])
    except KeyError as e:
        raise XorLoggingError(f"variable {e.args[0]} unassigned") from None
    if (ones & 1) == x.rhs:
        raise XorLoggingError("assignment satisfies the parity")
    falsified = [v for v in vs if not rho[v]]
    return logger.pol(_reason_tokens(x.geq_id, x.leq_id, falsified, logger.db[x.leq_id]))


# Gaussian elimination ------------------------------------------------------

Row = tuple[int, int, int]  # (variable mask, rhs, origin mask)


@dataclass
class GaussResult:
    conflict: Optional[Row] = None
    propagations: list[tuple[int, Row]] = field(default_factory=list)


def gauss_eliminate(rows: Sequence[Row], true_mask: int, assigned_mask: int) -> GaussResult:
    """Eliminate over the unassigned variables.

    Each row is reduced by the current assignment (assigned variables are
    removed and folded into the right-hand side) and brought to reduced row
    echelon form, while the full rows are combined alongside so every
    consequence is paired with the row that implies it.  A row left with a
    single unassigned variable propagates it; a row left empty with odd
    right-hand side is a conflict.
    """
    unassigned = ~assigned_mask
    piv: list[list[int]] = []  # [eff_mask, eff_rhs, vars, rhs, origin, pivot_bit]
    for vm, r, o in rows:
        eff = vm & unassigned
        er = r ^ ((vm & true_mask).bit_count() & 1)
        for p in piv:
            if eff & p[5]:
                eff ^= p[0]
                er ^= p[1]
                vm ^= p[2]
                r ^= p[3]
                o ^= p[4]
        if not eff:
            if er:
                return GaussResult(conflict=(vm, r, o))
            continue
        pb = eff & -eff
        for p in piv:
            if p[0] & pb:
                p[0] ^= eff
                p[1] ^= er
                p[2] ^= vm
                p[3] ^= r
                p[4] ^= o
        piv.append([eff, er, vm, r, o, pb])
    res = GaussResult()
    for eff, er, vm, r, o, pb in piv:
        if eff == pb:
            v = pb.bit_length() - 1
            res.propagations.append((v if er else -v, (vm, r, o)))
    res.propagations.sort(key=lambda e: var_of(e[0]))
    return res


class XorMatrix:
    """The parity rows handed to Gaussian elimination."""

    def __init__(self, rows: Sequence[XorConstraint] = ()) -> None:
        self.rows: list[XorConstraint] = []
        self.pivots: dict[int, int] = {}
        for x in rows:
            self.add(x)

    def add(self, x: XorConstraint) -> int:
        i = len(self.rows)
        if not x.origin:
            x.origin = 1 << i
        self.rows.append(x)
        return i

    def as_rows(self) -> list[Row]:
        return [(x.vars, x.rhs, x.origin) for x in self.rows]

    def eliminate(self, values: Mapping[int, bool]) -> GaussResult:
        t = a = 0
        for v, val in values.items():
            a |= 1 << v
            if val:
                t |= 1 << v
        return gauss_eliminate(self.as_rows(), t, a)


def gauss_step(m: XorMatrix, trail) -> tuple[str, Optional[int], Optional[XorConstraint]]:
    """First consequence of the rows under ``trail``.

    Returns ``("conflict", None, row)``, ``("propagation", literal, row)`` or
    ``("none", None, None)``.
    """
    values = trail.values if hasattr(trail, "values") and not isinstance(trail, Mapping) else trail
    res = m.eliminate(values)
    if res.conflict is not None:
        vm, r, o = res.conflict
        return "conflict", None, XorConstraint(vm, r, origin=o)
    if res.propagations:
        l, (vm, r, o) = res.propagations[0]
        return "propagation", l, XorConstraint(vm, r, origin=o)
    return "none", None, None


class XorPropagator:
    """Parity propagation for a host solver, with lazily produced reasons.

    The host calls :meth:`on_assignment` and :meth:`on_unassign` as its trail
    changes, :meth:`propagate` to obtain consequences, and
    :meth:`reason_clause` when conflict analysis needs the clause behind a
    parity propagation or conflict.
    """

    def __init__(self, xors: Sequence[XorConstraint], logger: Optional[ProofLogger]) -> None:
        self.base = list(xors)
        for i, x in enumerate(self.base):
            x.origin = 1 << i
        self.rows: list[Row] = [(x.vars, x.rhs, x.origin) for x in self.base]
        self.logger = logger
        self.relevant = 0
        for x in self.base:
            self.relevant |= x.vars
        self.true_mask = 0
        self.assigned_mask = 0
        self.dirty = True
        self._encoded: dict[int, XorConstraint] = {}
        self.stats = {"gauss_calls": 0, "xor_props": 0, "xor_conflicts": 0, "reasons": 0, "sums": 0}

    def attach(self, solver) -> None:
        self.solver = solver

    def on_assignment(self, lit: int) -> None:
        v = lit if lit > 0 else -lit
        bit = 1 << v
        if self.relevant & bit:
            self.assigned_mask |= bit
            if lit > 0:
                self.true_mask |= bit
            self.dirty = True

    def on_unassign(self, lit: int) -> None:
        v = lit if lit > 0 else -lit
        bit = 1 << v
        if self.assigned_mask & bit:
            self.assigned_mask &= ~bit
            self.true_mask &= ~bit
            self.dirty = True

    def on_backjump(self, unassigned: Iterable[int]) -> None:
        for l in unassigned:
            self.on_unassign(l)

    def propagate(self) -> GaussResult:
        if not self.dirty:
            return GaussResult()
        self.dirty = False
        self.stats["gauss_calls"] += 1
        res = gauss_eliminate(self.rows, self.true_mask, self.assigned_mask)
        if res.conflict is not None:
            self.stats["xor_conflicts"] += 1
            self.dirty = True
        else:
            self.stats["xor_props"] += len(res.propagations)
        return res

    def encoded(self, origin: int) -> XorConstraint:
        """PB encoding of the sum of the base rows in ``origin`` (cached)."""
        x = self._encoded.get(origin)
        if x is None:
            parts = [self.base[i] for i in mask_vars(origin)]
            if len(parts) == 1:
                x = parts[0]
            else:
                assert self.logger is not None
                x = log_xor_sum(parts, self.logger)
                self.stats["sums"] += 1
            self._encoded[origin] = x
        return x

    def reason_clause(self, row: Row, values: Mapping[int, bool], flip: Optional[int] = None) -> tuple[list[int], Optional[int]]:
        """Clause refuting the row under ``values`` and its proof id.

        For a propagation pass the propagated variable as ``flip``: its value
        is inverted first, so the clause contains the propagated literal.
        """
        vm, r, o = row
        rho = {v: values[v] for v in mask_vars(vm)}
        if flip is not None:
            rho[flip] = not rho[flip]
        lits = [v if not val else -v for v, val in rho.items()]
        self.stats["reasons"] += 1
        if self.logger is None:
            return lits, None
        x = self.encoded(o)
        return lits, log_reason_clause(x, rho, self.logger)
