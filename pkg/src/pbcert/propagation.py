"""Slack-based unit propagation over PB constraints and the RUP check."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .core import PBConstraint, negate, var_of
from .database import ConstraintDatabase


class Trail:
    """Assigned literals in order, each with the id of its reason (or ``None``)."""

    __slots__ = ("entries", "values")

    def __init__(self) -> None:
        self.entries: list[tuple[int, Optional[int]]] = []
        self.values: dict[int, bool] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def assign(self, lit: int, reason: Optional[int] = None) -> None:
        v = var_of(lit)
        if v in self.values:
            raise ValueError(f"variable {v} assigned twice")
        self.values[v] = lit > 0
        self.entries.append((lit, reason))

    def value(self, lit: int) -> Optional[bool]:
        val = self.values.get(var_of(lit))
        if val is None:
            return None
        return val if lit > 0 else not val

    def literals(self) -> list[int]:
        return [l for l, _ in self.entries]


Assignment = Union[Mapping[int, bool], Trail, Iterable[int], None]


def _as_values(rho: Assignment) -> dict[int, bool]:
    if rho is None:
        return {}
    if isinstance(rho, Trail):
        return dict(rho.values)
    if isinstance(rho, Mapping):
        return {v: bool(b) for v, b in rho.items()}
    out: dict[int, bool] = {}
    for l in rho:
        out[var_of(l)] = l > 0
    return out


def slack(c: PBConstraint, rho: Assignment) -> int:
    values = rho.values if isinstance(rho, Trail) else _as_values(rho)
    total = 0
    for a, l in c.terms:
        val = values.get(l if l > 0 else -l)
        if val is None or val == (l > 0):
            total += a
    return total - c.degree


@dataclass
class PropagationResult:
    conflict: Optional[int]
    trail: Trail = field(default_factory=Trail)
    propagations: int = 0

    @property
    def outcome(self) -> str:
        return "fixpoint" if self.conflict is None else "conflict"

    @property
    def is_conflict(self) -> bool:
        return self.conflict is not None


def _as_database(db: Union[ConstraintDatabase, Iterable[PBConstraint]]) -> ConstraintDatabase:
    if isinstance(db, ConstraintDatabase):
        return db
    out = ConstraintDatabase()
    out.extend(db)
    return out


def unit_propagate(
    db: Union[ConstraintDatabase, Iterable[PBConstraint]],
    rho: Assignment = None,
    extra: Iterable[PBConstraint] = (),
) -> PropagationResult:
    """Propagate ``db`` plus ``extra`` from ``rho`` to a fixpoint or the first conflict.

    Extra constraints get ids -1, -2, ... in order.  Candidates are visited in
    ascending id order (extras last), then in FIFO order of discovery.
    """
    db = _as_database(db)
    live = db.constraints
    occ = db.occurrences
    extras: dict[int, PBConstraint] = {}
    xocc: dict[int, list[tuple[int, int]]] = {}
    for i, c in enumerate(extra, 1):
        extras[-i] = c
        for a, l in c.terms:
            xocc.setdefault(l, []).append((-i, a))

    trail = Trail()
    values = trail.values
    initial = _as_values(rho)
    for v, b in initial.items():
        trail.assign(v if b else -v)

    cache: dict[int, int] = {}
    queued: set[int] = set()
    queue: deque[int] = deque()
    result = PropagationResult(None, trail)

    def lookup(cid: int) -> PBConstraint:
        return live[cid] if cid > 0 else extras[cid]

    def full_slack(c: PBConstraint) -> int:
        total = 0
        for a, l in c.terms:
            val = values.get(l if l > 0 else -l)
            if val is None or val == (l > 0):
                total += a
        return total - c.degree

    seeds = set(db.live_roots())
    for l in trail.literals():
        for cid, _ in occ.get(-l, ()):
            if cid in live:
                seeds.add(cid)
        for cid, _ in xocc.get(-l, ()):
            seeds.add(cid)
    order = sorted(s for s in seeds if s > 0) + [x for x in sorted(extras, reverse=True)]
    for cid in order:
        c = lookup(cid)
        s = full_slack(c)
        cache[cid] = s
        if s < 0:
            result.conflict = cid
            return result
        if s < c.max_coef and cid not in queued:
            queued.add(cid)
            queue.append(cid)

    while queue:
        cid = queue.popleft()
        queued.discard(cid)
        c = lookup(cid)
        s = cache[cid]
        if s >= c.max_coef:
            continue
        for a, l in c.terms:
            if a <= s:
                continue
            v = l if l > 0 else -l
            if v in values:
                continue
            values[v] = l > 0
            trail.entries.append((l, cid))
            result.propagations += 1
            nl = -l
            for src in (occ.get(nl), xocc.get(nl)):
                if not src:
                    continue
                for cid2, a2 in src:
                    if cid2 > 0 and cid2 not in live:
                        continue
                    s2 = cache.get(cid2)
                    c2 = lookup(cid2)
                    if s2 is None:
                        s2 = full_slack(c2)
                    else:
                        s2 -= a2
                    cache[cid2] = s2
                    if s2 < 0:
                        result.conflict = cid2
                        return result
                    if s2 < c2.max_coef and cid2 not in queued:
                        queued.add(cid2)
                        queue.append(cid2)
    return result


def rup_check(
    db: Union[ConstraintDatabase, Iterable[PBConstraint]],
    c: PBConstraint,
    extra: Iterable[PBConstraint] = (),
) -> bool:
    """True iff ``db`` plus ``extra`` plus the negation of ``c`` propagates to a conflict."""
    return unit_propagate(db, None, [*extra, negate(c)]).is_conflict
