"""Id-indexed constraint store shared by the checker and the proof logger."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Iterator, Optional

from .core import PBConstraint, VariableRegistry, var_of


class ConstraintDatabase:
    """Constraints keyed by consecutive positive ids.

    Besides the id map the store keeps occurrence lists (literal to
    ``(id, coefficient)``), a multiset of canonical forms for structural
    membership, and the ids whose constraints already propagate or conflict
    under the empty assignment.  Deleted ids are dropped lazily from the
    auxiliary indexes and never reused.
    """

    def __init__(self, registry: Optional[VariableRegistry] = None) -> None:
        self.registry = registry if registry is not None else VariableRegistry()
        self.constraints: dict[int, PBConstraint] = {}
        self.next_id = 1
        self.occurrences: dict[int, list[tuple[int, int]]] = {}
        self._canon: Counter[PBConstraint] = Counter()
        self.roots: list[int] = []
        self.peak_size = 0
        self._stale = 0

    def __len__(self) -> int:
        return len(self.constraints)

    def __contains__(self, cid: int) -> bool:
        return cid in self.constraints

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.constraints))

    def __getitem__(self, cid: int) -> PBConstraint:
        return self.constraints[cid]

    def get(self, cid: int) -> Optional[PBConstraint]:
        return self.constraints.get(cid)

    def items(self) -> list[tuple[int, PBConstraint]]:
        return sorted(self.constraints.items())

    def add(self, c: PBConstraint) -> int:
        cid = self.next_id
        self.next_id += 1
        self.constraints[cid] = c
        occ = self.occurrences
        for a, l in c.terms:
            lst = occ.get(l)
            if lst is None:
                occ[l] = [(cid, a)]
            else:
                lst.append((cid, a))
        self._canon[c] += 1
        if c.coef_sum - c.degree < c.max_coef:
            self.roots.append(cid)
        if len(self.constraints) > self.peak_size:
            self.peak_size = len(self.constraints)
        return cid

    def extend(self, cs: Iterable[PBConstraint]) -> list[int]:
        return [self.add(c) for c in cs]

    def delete(self, cid: int) -> PBConstraint:
        c = self.constraints.pop(cid)
        n = self._canon[c] - 1
        if n:
            self._canon[c] = n
        else:
            del self._canon[c]
        self._stale += 1
        if self._stale > len(self.constraints) + 1024:
            self.compact()
        return c

    def contains_constraint(self, c: PBConstraint) -> bool:
        """Structural membership of a canonical constraint."""
        return c in self._canon

    def ids_with_variables(self, variables: Iterable[int]) -> list[int]:
        """Live ids of constraints mentioning any of ``variables``, ascending."""
        found: set[int] = set()
        live = self.constraints
        for v in variables:
            for l in (v, -v):
                for cid, _ in self.occurrences.get(l, ()):
                    if cid in live:
                        found.add(cid)
        return sorted(found)

    def live_roots(self) -> list[int]:
        live = self.constraints
        if len(self.roots) > 2 * len(live) + 16:
            self.roots = [cid for cid in self.roots if cid in live]
        return [cid for cid in self.roots if cid in live]

    def compact(self) -> None:
        """Drop index entries that refer to deleted constraints."""
        live = self.constraints
        for l, lst in list(self.occurrences.items()):
            kept = [e for e in lst if e[0] in live]
            if kept:
                self.occurrences[l] = kept
            else:
                del self.occurrences[l]
        self.roots = [cid for cid in self.roots if cid in live]
        self._stale = 0

    def variables(self) -> set[int]:
        return {var_of(l) for l, lst in self.occurrences.items() if lst}
