"""Checking redundance-based strengthening steps against an explicit witness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from .core import PBConstraint, Substitution, Value, implies_syntactically, negate, restrict
from .database import ConstraintDatabase
from .propagation import _as_database, rup_check


@dataclass(frozen=True)
class RedundancyVerdict:
    accepted: bool
    failing: Optional[PBConstraint] = None
    failing_id: Optional[int] = None
    check: str = ""

    def __bool__(self) -> bool:
        return self.accepted

    @property
    def outcome(self) -> str:
        return "accept" if self.accepted else "reject"


ACCEPT = RedundancyVerdict(True)


def redundancy_check(
    db: Union[ConstraintDatabase, Iterable[PBConstraint]],
    c: PBConstraint,
    omega: Union[Substitution, Mapping[int, Value]],
) -> RedundancyVerdict:
    """Decide whether ``c`` may be added to ``db`` with witness ``omega``.

    Only constraints mentioning a variable in the witness domain can change
    under restriction; every other constraint restricts to itself and passes
    the membership test, so it is skipped.  The candidates are visited in
    ascending id order with ``c`` last (reported as ``failing_id`` ``None``).
    """
    if not isinstance(omega, Substitution):
        omega = Substitution(omega)
    db = _as_database(db)
    if rup_check(db, c):
        return ACCEPT
    neg = negate(c)
    candidates: list[tuple[Optional[int], PBConstraint]] = [
        (cid, db.constraints[cid]) for cid in db.ids_with_variables(omega.domain())
    ]
    candidates.append((None, c))
    for cid, orig in candidates:
        d = restrict(orig, omega)
        if d.degree == 0:
            continue
        if db.contains_constraint(d):
            continue
        if implies_syntactically(neg, d):
            continue
        if rup_check(db, d, extra=[neg]):
            continue
        return RedundancyVerdict(False, d, cid, "no check establishes the restricted constraint")
    return ACCEPT
