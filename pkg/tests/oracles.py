"""Brute-force reference implementations used as test oracles.

Everything here enumerates assignments explicitly and shares no code with
the propagation or derivation machinery under test.
"""

from __future__ import annotations

import itertools
import random
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from pbcert.core import PBConstraint, normalize, var_of

FIXTURES = Path(__file__).parent / "fixtures"


def holds(c: PBConstraint, alpha: dict[int, bool]) -> bool:
    return sum(a for a, l in c.terms if alpha[var_of(l)] == (l > 0)) >= c.degree


def variables_of(cs: Iterable[PBConstraint]) -> list[int]:
    return sorted({var_of(l) for c in cs for _, l in c.terms})


def assignments(vs: Sequence[int]) -> Iterator[dict[int, bool]]:
    for bits in itertools.product((False, True), repeat=len(vs)):
        yield dict(zip(vs, bits))


def entails(premises: Sequence[PBConstraint], conclusion: PBConstraint) -> bool:
    vs = variables_of([*premises, conclusion])
    for alpha in assignments(vs):
        if all(holds(p, alpha) for p in premises) and not holds(conclusion, alpha):
            return False
    return True


def satisfiable(cs: Sequence[PBConstraint], extra_vars: Sequence[int] = ()) -> bool:
    vs = sorted(set(variables_of(cs)) | set(extra_vars))
    return any(all(holds(c, a) for c in cs) for a in assignments(vs))


def solutions(cs: Sequence[PBConstraint], vs: Sequence[int]) -> set[tuple[bool, ...]]:
    return {tuple(a[v] for v in vs) for a in assignments(vs) if all(holds(c, a) for c in cs)}


def random_constraint(rng: random.Random, nv: int, max_terms: int = 5, max_coef: int = 4,
                      max_degree: int = 8) -> PBConstraint:
    k = rng.randint(0, min(max_terms, nv))
    vs = rng.sample(range(1, nv + 1), k)
    terms = [(rng.randint(-max_coef, max_coef), v if rng.random() < 0.5 else -v) for v in vs]
    return normalize(terms, rng.randint(-2, max_degree))


def feasible_constraint(rng: random.Random, nv: int, max_terms: int = 5, max_coef: int = 4) -> PBConstraint:
    """Random constraint with 1 <= degree <= coefficient sum, so neither trivial nor contradictory."""
    vs = rng.sample(range(1, nv + 1), rng.randint(1, min(max_terms, nv)))
    terms = [(rng.randint(1, max_coef), v if rng.random() < 0.5 else -v) for v in vs]
    return normalize(terms, rng.randint(1, sum(a for a, _ in terms)))


def random_clause(rng: random.Random, nv: int, k: int) -> PBConstraint:
    vs = rng.sample(range(1, nv + 1), k)
    return normalize([(1, v if rng.random() < 0.5 else -v) for v in vs], 1)


def pb(*terms: tuple[int, int], degree: int) -> PBConstraint:
    return normalize(list(terms), degree)


def read_fixture(name: str) -> str:
    return (FIXTURES / name).read_text()


def replay(formula, proof_text: str, lines: int | None = None):
    """Run the verifier over the first ``lines`` proof lines; returns (verdict, verifier)."""
    from pbcert.verifier import Verifier, verify

    if lines is not None:
        proof_text = "".join(proof_text.splitlines(keepends=True)[:lines])
    v = Verifier(formula)
    return verify(formula, proof_text, verifier=v), v


def reification_pair(d: PBConstraint, y: int) -> tuple[PBConstraint, PBConstraint]:
    """``y -> d`` and ``d -> y`` as PB constraints, built from the definition."""
    A = d.degree
    fwd = normalize([(A, -y), *d.terms], A)
    slack_top = d.coef_sum - A + 1
    bwd = normalize([(slack_top, y), *[(a, -l) for a, l in d.terms]], slack_top)
    return fwd, bwd


def random_triple(rng: random.Random, nv: int = 10):
    """A random (database, constraint, witness) triple over at most ``nv`` variables.

    Roughly a third of the constraints mention a variable absent from the
    database so that the witness has something to work with.
    """
    from pbcert.core import Substitution

    live = rng.randint(3, nv - 1)
    db = [feasible_constraint(rng, live) if rng.random() < 0.6 else random_clause(rng, live, rng.randint(1, 3))
          for _ in range(rng.randint(1, 6))]
    c = feasible_constraint(rng, nv if rng.random() < 0.5 else live)
    m: dict[int, object] = {}
    if c.terms and rng.random() < 0.5:
        # aim the witness at satisfying c
        for a, l in rng.sample(c.terms, rng.randint(1, min(3, len(c.terms)))):
            m[var_of(l)] = l > 0
    for v in rng.sample(range(1, nv + 1), rng.randint(0, 3 - min(len(m), 3))):
        if v in m:
            continue
        r = rng.random()
        if r < 0.7:
            m[v] = rng.random() < 0.5
        else:
            m[v] = rng.choice([1, -1]) * rng.randint(1, nv)
    return db, c, Substitution(m)


def expected_worked_ids(registry) -> dict[int, PBConstraint]:
    from pbcert.proofio import parse_proof_line

    out = {}
    for line in read_fixture("worked_example_ids.txt").splitlines():
        if not line or line.startswith("*"):
            continue
        cid, _, text = line.partition(":")
        out[int(cid)] = parse_proof_line(f"rup {text.strip()} ;", registry).constraint
    return out


def gf2_reference(rows, nv: int, values: dict[int, bool]):
    """Brute-force GF(2) consequences of ``rows`` (``(var list, rhs)``) under ``values``.

    Enumerates every completion of the unassigned variables with numpy and
    returns ``None`` when no completion satisfies all rows, otherwise the set
    of literals that hold in every satisfying completion and are unassigned.
    """
    import numpy as np

    free = [v for v in range(1, nv + 1) if v not in values]
    n = len(free)
    grid = ((np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)
    full = np.zeros((1 << n, nv + 1), dtype=np.uint8)
    for v, b in values.items():
        full[:, v] = int(b)
    full[:, free] = grid
    ok = np.ones(1 << n, dtype=bool)
    for vs, rhs in rows:
        par = full[:, list(vs)].sum(axis=1) & 1 if vs else np.zeros(1 << n, dtype=np.int64)
        ok &= par == rhs
    if not ok.any():
        return None
    sols = full[ok]
    implied = set()
    for v in free:
        col = sols[:, v]
        if col.min() == col.max():
            implied.add(v if col[0] else -v)
    return implied


def parity_formula(variables, rhs: int, nv: int | None = None):
    """Clausal encoding of one parity as a parsed CNF formula."""
    from pbcert.bench import parity_clauses
    from pbcert.proofio import parse_cnf

    cls = parity_clauses(list(variables), rhs)
    nv = nv if nv is not None else max(variables)
    body = "".join(" ".join(map(str, c)) + " 0\n" for c in cls)
    return parse_cnf(f"p cnf {nv} {len(cls)}\n{body}")


def aux_extendable(cs: Sequence[PBConstraint], fixed: dict[int, bool]) -> bool:
    """Whether some assignment to the remaining variables of ``cs`` satisfies them all."""
    rest = [v for v in variables_of(cs) if v not in fixed]
    for alpha in assignments(rest):
        alpha.update(fixed)
        if all(holds(c, alpha) for c in cs):
            return True
    return False
