"""Conflict-driven clause learning with a Gaussian-elimination parity propagator.

Every learned clause is written to the proof as a ``rup`` step.  Parity
reasons are produced only when conflict analysis asks for them, except at
decision level 0 where they are written immediately so the checker can
replay root-level propagation.
"""

from __future__ import annotations

import heapq
import random
import time
from dataclasses import dataclass, field
from typing import IO, Optional

from .core import PBConstraint, var_of
from .proofio import Formula
from .xor_engine import (
    K_MAX, AuxAllocator, ProofLogger, Row, XorLoggingError, XorPropagator, detect_xors, log_cnf_to_pb,
    mask_vars,
)

SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"


@dataclass
class SolveResult:
    status: str
    model: Optional[list[int]] = None
    stats: dict[str, float] = field(default_factory=dict)
    reason: str = ""


class Solver:
    """CDCL over the clauses of a formula.

    Literals are signed ints; the value and watch tables are indexed by the
    literal itself, so negative literals use Python's negative indexing.
    """

    def __init__(
        self,
        formula: Formula,
        proof: Optional[IO[str]] = None,
        use_xor: bool = True,
        seed: int = 0,
        conflict_budget: Optional[int] = None,
        time_limit: Optional[float] = None,
        k_max: int = K_MAX,
        check_proof: bool = False,
        log_proof: Optional[bool] = None,
    ) -> None:
        if not formula.is_clausal():
            raise ValueError("the solver accepts clausal formulas only")
        self.formula = formula
        self.n = n = formula.num_vars
        self.rng = random.Random(seed)
        self.conflict_budget = conflict_budget
        self.time_limit = time_limit
        self.use_xor = use_xor
        self.k_max = k_max
        if log_proof is None:
            log_proof = proof is not None
        self.logger: Optional[ProofLogger] = None
        if log_proof:
            self.logger = ProofLogger(formula.registry.copy(), proof, check=check_proof)

        self.lv = [0] * (2 * n + 1)
        self.level = [0] * (n + 1)
        self.reason: list[Optional[int]] = [None] * (n + 1)
        self.lazy: dict[int, Row] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.watches: list[list[int]] = [[] for _ in range(2 * n + 1)]
        self.clauses: list[Optional[list[int]]] = []
        self.pid: list[Optional[int]] = []
        self.learnt: list[bool] = []
        self.cla_act: list[float] = []
        self.cla_inc = 1.0
        self.num_learnts = 0

        self.activity = [self.rng.random() * 1e-5 for _ in range(n + 1)]
        self.var_inc = 1.0
        self.var_decay = 0.95
        self.phase = [False] * (n + 1)
        self.heap = [(-self.activity[v], v) for v in range(1, n + 1)]
        heapq.heapify(self.heap)
        self.seen = [False] * (n + 1)

        self.xor: Optional[XorPropagator] = None
        self.stats: dict[str, float] = {
            "conflicts": 0, "decisions": 0, "propagations": 0, "learned": 0, "deleted": 0,
            "restarts": 0, "xors": 0,
        }
        self._empty_input: Optional[int] = None
        self._root_conflict = False

    # basic operations ---------------------------------------------------

    def value(self, lit: int) -> int:
        return self.lv[lit]

    def decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, lit: int, reason: Optional[int]) -> None:
        v = var_of(lit)
        self.lv[lit] = 1
        self.lv[-lit] = -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)
        if self.xor is not None:
            self.xor.on_assignment(lit)

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        stop = self.trail_lim[lvl]
        lv, heap, act = self.lv, self.heap, self.activity
        for i in range(len(self.trail) - 1, stop - 1, -1):
            l = self.trail[i]
            v = var_of(l)
            lv[l] = 0
            lv[-l] = 0
            self.reason[v] = None
            self.lazy.pop(v, None)
            self.phase[v] = l > 0
            heapq.heappush(heap, (-act[v], v))
            if self.xor is not None:
                self.xor.on_unassign(l)
        del self.trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = min(self.qhead, stop)

    def _attach(self, lits: list[int], proof_id: Optional[int], learnt: bool) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.pid.append(proof_id)
        self.learnt.append(learnt)
        self.cla_act.append(0.0)
        if learnt:
            self.num_learnts += 1
        if len(lits) >= 2:
            self.watches[lits[0]].append(ci)
            self.watches[lits[1]].append(ci)
        return ci

    def _order_for_watch(self, lits: list[int]) -> list[int]:
        """Put true literals first, then false ones by decreasing level."""
        lv, level = self.lv, self.level

        def key(l: int):
            val = lv[l]
            if val == 1:
                return (0, 0)
            if val == 0:
                return (1, 0)
            return (2, -level[var_of(l)])

        return sorted(lits, key=key)

    # propagation --------------------------------------------------------

    def _propagate(self) -> Optional[int]:
        lv, clauses, watches, trail = self.lv, self.clauses, self.watches, self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            fl = -p
            ws = watches[fl]
            keep: list[int] = []
            i = 0
            nws = len(ws)
            while i < nws:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c is None:
                    continue
                if c[0] == fl:
                    c[0] = c[1]
                    c[1] = fl
                first = c[0]
                if lv[first] == 1:
                    keep.append(ci)
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if lv[lk] != -1:
                        c[1] = lk
                        c[k] = fl
                        watches[lk].append(ci)
                        break
                else:
                    keep.append(ci)
                    if lv[first] == -1:
                        keep.extend(ws[i:])
                        watches[fl] = keep
                        return ci
                    self._enqueue(first, ci)
                    self.stats["propagations"] += 1
            watches[fl] = keep
        return None

    def _xor_clause(self, row: Row, flip: Optional[int]) -> int:
        """Turn a parity reason or conflict into a stored clause."""
        assert self.xor is not None
        values = {}
        for v in mask_vars(row[0]):
            values[v] = self.lv[v] == 1
        lits, proof_id = self.xor.reason_clause(row, values, flip)
        lits = self._order_for_watch(lits)
        return self._attach(lits, proof_id, True)

    def _propagate_xor(self) -> tuple[Optional[int], bool]:
        """Run Gaussian elimination; returns (conflict clause, assigned anything)."""
        assert self.xor is not None
        res = self.xor.propagate()
        if res.conflict is not None:
            return self._xor_clause(res.conflict, None), False
        assigned = False
        root = not self.trail_lim
        for l, row in res.propagations:
            if self.lv[l] != 0:
                continue
            v = var_of(l)
            if root:
                # root-level facts need their reasons in the proof right away
                self._enqueue(l, None)
                self.reason[v] = self._xor_clause(row, v)
            else:
                self._enqueue(l, None)
                self.lazy[v] = row
            self.stats["propagations"] += 1
            assigned = True
        return None, assigned

    def _reason_of(self, v: int) -> Optional[int]:
        r = self.reason[v]
        if r is None and v in self.lazy:
            r = self._xor_clause(self.lazy.pop(v), v)
            self.reason[v] = r
        return r

    # conflict analysis --------------------------------------------------

    def _bump_var(self, v: int) -> None:
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for u in range(1, self.n + 1):
                act[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-act[u], u) for u in range(1, self.n + 1) if self.lv[u] == 0]
            heapq.heapify(self.heap)
        elif self.lv[v] == 0:
            heapq.heappush(self.heap, (-act[v], v))

    def _bump_clause(self, ci: int) -> None:
        if not self.learnt[ci]:
            return
        self.cla_act[ci] += self.cla_inc
        if self.cla_act[ci] > 1e20:
            self.cla_act = [a * 1e-20 for a in self.cla_act]
            self.cla_inc *= 1e-20

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        seen, level, trail = self.seen, self.level, self.trail
        cur = self.decision_level()
        learnt: list[int] = [0]
        counter = 0
        p: Optional[int] = None
        idx = len(trail) - 1
        c = self.clauses[confl]
        ci = confl
        touched = []
        while True:
            assert c is not None
            self._bump_clause(ci)
            for q in c:
                if q == p:
                    continue
                v = var_of(q)
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    touched.append(v)
                    self._bump_var(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[var_of(trail[idx])]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            v = var_of(p)
            seen[v] = False
            counter -= 1
            if counter <= 0:
                break
            r = self._reason_of(v)
            assert r is not None, "implied literal without reason"
            ci = r
            c = self.clauses[r]
        assert p is not None
        learnt[0] = -p
        for v in touched:
            seen[v] = False
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: level[var_of(learnt[i])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[var_of(learnt[1])]

    # database reduction -------------------------------------------------

    def _locked(self, ci: int) -> bool:
        c = self.clauses[ci]
        assert c is not None
        v = var_of(c[0])
        return self.lv[c[0]] == 1 and self.reason[v] == ci

    def _reduce_db(self) -> None:
        cands = [ci for ci, c in enumerate(self.clauses)
                 if c is not None and self.learnt[ci] and len(c) > 2 and not self._locked(ci)]
        cands.sort(key=lambda ci: self.cla_act[ci])
        victims = cands[: len(cands) // 2]
        ids = []
        for ci in victims:
            self.clauses[ci] = None
            self.num_learnts -= 1
            if self.pid[ci] is not None:
                ids.append(self.pid[ci])
        if self.logger is not None and ids:
            self.logger.delete(sorted(ids))
        self.stats["deleted"] += len(victims)

    # main loop ----------------------------------------------------------

    def _setup(self) -> bool:
        """Load clauses and parities; returns False if the root is already inconsistent."""
        lg = self.logger
        if lg is not None:
            lg.header()
            lg.load(self.formula)
        for i, c in enumerate(self.formula.constraints, 1):
            if c.degree == 0:
                continue
            lits = [l for _, l in c.terms]
            if not lits:
                self._empty_input = i
                return False
            if len(lits) == 1:
                l = lits[0]
                if self.lv[l] == -1:
                    self._root_conflict = True
                    return False
                if self.lv[l] == 0:
                    ci = self._attach(lits, i, False)
                    self._enqueue(l, ci)
                continue
            self._attach(lits, i, False)
        if self.use_xor:
            found = detect_xors(self.formula, self.k_max)
            xors = []
            alloc = AuxAllocator(lg.registry) if lg is not None else None
            for x, ids in found:
                if lg is not None:
                    try:
                        x = log_cnf_to_pb(alloc, x, ids, lg)  # type: ignore[arg-type]
                    except XorLoggingError:
                        continue
                xors.append(x)
            self.stats["xors"] = len(xors)
            if xors:
                self.xor = XorPropagator(xors, lg)
                self.xor.attach(self)
                for l in self.trail:
                    self.xor.on_assignment(l)
        return True

    def _finish_unsat(self, confl: Optional[int]) -> SolveResult:
        lg = self.logger
        if lg is not None:
            if self._empty_input is not None:
                lg.conclude(self._empty_input)
            else:
                cid = None
                if confl is not None:
                    pid = self.pid[confl]
                    if pid is not None and lg.db[pid].is_contradiction():
                        cid = pid
                if cid is None:
                    cid = lg.rup(PBConstraint((), 1))
                lg.conclude(cid)
        return SolveResult(UNSAT, None, self._final_stats())

    def _final_stats(self) -> dict[str, float]:
        st = dict(self.stats)
        if self.xor is not None:
            st.update(self.xor.stats)
        if self.logger is not None:
            st["proof_bytes"] = self.logger.bytes_written
        return st

    def solve(self) -> SolveResult:
        start = time.monotonic()
        if not self._setup():
            return self._finish_unsat(None)
        restart_limit = 100.0
        conflicts_since_restart = 0
        max_learnts = max(len(self.clauses) / 3, 200.0)
        while True:
            confl = self._propagate()
            if confl is None and self.xor is not None:
                confl, assigned = self._propagate_xor()
                if confl is None and assigned:
                    continue
            if confl is not None:
                self.stats["conflicts"] += 1
                conflicts_since_restart += 1
                c = self.clauses[confl]
                assert c is not None
                top = max((self.level[var_of(l)] for l in c), default=0)
                if top < self.decision_level():
                    self._cancel_until(top)
                if top == 0:
                    return self._finish_unsat(confl)
                learnt, bt = self._analyze(confl)
                self._cancel_until(bt)
                pid = None
                if self.logger is not None:
                    pid = self.logger.rup(PBConstraint(tuple((1, l) for l in sorted(learnt, key=var_of)), 1))
                ci = self._attach(learnt, pid, True)
                self._bump_clause(ci)
                self._enqueue(learnt[0], ci)
                self.stats["learned"] += 1
                self.var_inc /= self.var_decay
                self.cla_inc /= 0.999
                if self.conflict_budget is not None and self.stats["conflicts"] >= self.conflict_budget:
                    return SolveResult(UNKNOWN, None, self._final_stats(), "conflict budget exhausted")
                if self.time_limit is not None and time.monotonic() - start > self.time_limit:
                    return SolveResult(UNKNOWN, None, self._final_stats(), "time limit reached")
                if conflicts_since_restart >= restart_limit:
                    conflicts_since_restart = 0
                    restart_limit *= 1.5
                    self.stats["restarts"] += 1
                    self._cancel_until(0)
                if self.num_learnts - len(self.trail) >= max_learnts:
                    self._reduce_db()
                    max_learnts *= 1.1
                continue
            v = self._pick()
            if v is None:
                model = [u if self.lv[u] == 1 else -u for u in range(1, self.n + 1)]
                return SolveResult(SAT, model, self._final_stats())
            self.stats["decisions"] += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(v if self.phase[v] else -v, None)

    def _pick(self) -> Optional[int]:
        heap, lv, act = self.heap, self.lv, self.activity
        while heap:
            a, v = heapq.heappop(heap)
            if lv[v] == 0 and -a == act[v]:
                return v
        for v in range(1, self.n + 1):
            if lv[v] == 0:
                return v
        return None


def solve(formula: Formula, proof: Optional[IO[str]] = None, **kw) -> SolveResult:
    return Solver(formula, proof, **kw).solve()
