"""Proof checker: replays a proof stream against a formula."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping, Optional, Union

from .core import PBConstraint, UnassignedVariable, evaluate, negate, var_of
from .cutting_planes import CuttingPlanesError, eval_rpn
from .database import ConstraintDatabase
from .proofio import (
    Conclusion, Delete, Formula, Header, Load, ParseError, Pol, ProofStep, Red, Rup,
    parse_proof_line,
)
from .propagation import unit_propagate
from .redundancy import redundancy_check

__all__ = ["ConstraintDatabase", "Verdict", "Verifier", "verify", "check_model"]

VERIFIED_UNSAT = "verified-unsat"
ALL_STEPS_VALID = "all-steps-valid"
REJECTED = "rejected"


@dataclass
class Verdict:
    status: str
    step: Optional[int] = None
    reason: str = ""
    stats: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status != REJECTED

    def __str__(self) -> str:
        if self.status == REJECTED:
            return f"{REJECTED} at step {self.step}: {self.reason}"
        return self.status


class Rejection(Exception):
    pass


class Verifier:
    """Checks proof steps one at a time against an id-indexed database."""

    def __init__(self, formula: Formula, trace: int = 0, trace_stream: Optional[IO[str]] = None) -> None:
        self.formula = formula
        self.db = ConstraintDatabase(formula.registry.copy())
        self.seen_header = False
        self.loaded = False
        self.concluded = False
        self.trace = trace
        self.trace_stream = trace_stream if trace_stream is not None else sys.stderr
        self.stats = {"steps": 0, "pol": 0, "rup": 0, "red": 0, "del": 0, "propagations": 0}

    @property
    def registry(self):
        return self.db.registry

    def _store(self, c: PBConstraint) -> int:
        return self.db.add(c)

    def check(self, index: int, step: ProofStep) -> Optional[int]:
        """Validate one step; returns the id of a newly stored constraint, if any."""
        if self.concluded:
            raise Rejection("step after conclusion")
        if isinstance(step, Header):
            if self.seen_header:
                raise Rejection("duplicate header")
            if step.version.split(".")[0] != "1":
                raise Rejection(f"unsupported proof version {step.version}")
            self.seen_header = True
            return None
        if not self.seen_header:
            raise Rejection("proof must start with a header")
        self.stats["steps"] += 1
        new_id: Optional[int] = None
        if isinstance(step, Load):
            if self.loaded:
                raise Rejection("formula loaded twice")
            n = len(self.formula.constraints)
            if step.count is not None and step.count != n:
                raise Rejection(f"expected {step.count} constraints, formula has {n}")
            if self.db.next_id != 1:
                raise Rejection("formula must be loaded before any derivation")
            self.db.extend(self.formula.constraints)
            self.loaded = True
        elif isinstance(step, Pol):
            try:
                c = eval_rpn(step.tokens, self.db.get)
            except CuttingPlanesError as e:
                raise Rejection(str(e)) from None
            new_id = self._store(c)
            self.stats["pol"] += 1
        elif isinstance(step, Rup):
            res = unit_propagate(self.db, None, [negate(step.constraint)])
            self.stats["propagations"] += res.propagations
            if not res.is_conflict:
                raise Rejection("constraint is not implied by unit propagation")
            new_id = self._store(step.constraint)
            self.stats["rup"] += 1
        elif isinstance(step, Red):
            verdict = redundancy_check(self.db, step.constraint, step.witness)
            if not verdict.accepted:
                where = "the new constraint" if verdict.failing_id is None else f"constraint {verdict.failing_id}"
                raise Rejection(f"redundancy check failed on {where} under the witness")
            new_id = self._store(step.constraint)
            self.stats["red"] += 1
        elif isinstance(step, Delete):
            for cid in step.ids:
                if cid not in self.db:
                    raise Rejection(f"cannot delete unknown constraint id {cid}")
                self.db.delete(cid)
            self.stats["del"] += 1
        elif isinstance(step, Conclusion):
            c = self.db.get(step.id)
            if c is None:
                raise Rejection(f"unknown constraint id {step.id}")
            if not c.is_contradiction():
                raise Rejection(f"constraint {step.id} is not the contradiction 0 >= 1")
            self.concluded = True
        else:
            raise Rejection(f"unknown step {step!r}")
        if self.trace and self.stats["steps"] <= self.trace:
            self._echo(index, step, new_id)
        return new_id

    def _echo(self, index: int, step: ProofStep, new_id: Optional[int]) -> None:
        kind = type(step).__name__.lower()
        msg = f"step {index}: {kind} ok"
        if new_id is not None:
            msg += f" -> {new_id}: {self.db[new_id].format(self.registry)}"
        print(msg, file=self.trace_stream)

    def finish(self, expect_unsat: bool = False) -> Verdict:
        self.stats["peak_db"] = self.db.peak_size
        if self.concluded:
            return Verdict(VERIFIED_UNSAT, stats=dict(self.stats))
        if expect_unsat:
            return Verdict(REJECTED, None, "proof ends without a conclusion", dict(self.stats))
        return Verdict(ALL_STEPS_VALID, stats=dict(self.stats))


ProofSource = Union[str, IO[str], Iterable[Union[str, ProofStep, tuple[int, ProofStep]]]]


def _steps(source: ProofSource, verifier: Verifier) -> Iterator[tuple[int, Union[ProofStep, ParseError]]]:
    if isinstance(source, str):
        source = source.splitlines()
    for i, item in enumerate(source, 1):
        if isinstance(item, str):
            try:
                step = parse_proof_line(item, verifier.registry, i)
            except ParseError as e:
                yield i, e
                return
            if step is not None:
                yield i, step
        elif isinstance(item, tuple):
            yield item
        else:
            yield i, item


def verify(
    formula: Formula,
    proof: ProofSource,
    expect_unsat: bool = False,
    trace: int = 0,
    trace_stream: Optional[IO[str]] = None,
    verifier: Optional[Verifier] = None,
) -> Verdict:
    """Check ``proof`` against ``formula``.

    ``proof`` may be proof text, a stream of lines, or a sequence of parsed
    steps.  Step indexes are line numbers for text input and 1-based
    positions otherwise.
    """
    v = verifier if verifier is not None else Verifier(formula, trace, trace_stream)
    for index, step in _steps(proof, v):
        if isinstance(step, ParseError):
            return Verdict(REJECTED, index, f"syntax error: {step}", dict(v.stats))
        try:
            v.check(index, step)
        except Rejection as e:
            v.stats["peak_db"] = v.db.peak_size
            return Verdict(REJECTED, index, str(e), dict(v.stats))
    return v.finish(expect_unsat)


def check_model(formula: Formula, model: Union[Mapping[int, bool], Iterable[int]]) -> list[int]:
    """Return the 1-based indexes of input constraints the model violates.

    Raises :class:`UnassignedVariable` if the model leaves a variable open.
    """
    if not isinstance(model, Mapping):
        model = {var_of(l): l > 0 for l in model}
    bad = []
    for i, c in enumerate(formula.constraints, 1):
        if not evaluate(c, model):
            bad.append(i)
    return bad


__all__ += ["UnassignedVariable", "VERIFIED_UNSAT", "ALL_STEPS_VALID", "REJECTED"]
