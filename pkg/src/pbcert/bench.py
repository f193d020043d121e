"""Tseitin formulas on random regular graphs and the proof-size scaling run."""

from __future__ import annotations

import csv
import io
import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .proofio import Formula, parse_cnf, write_cnf


@dataclass
class TseitinInstance:
    n: int
    d: int
    edges: list[tuple[int, int]]
    charges: list[int]
    cnf_text: str

    @property
    def formula(self) -> Formula:
        return parse_cnf(self.cnf_text)

    @property
    def num_vars(self) -> int:
        return len(self.edges)

    @property
    def num_clauses(self) -> int:
        return self.n * (1 << (self.d - 1))

    def incident(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for e, (u, v) in enumerate(self.edges, 1):
            out[u].append(e)
            out[v].append(e)
        return out


class InfeasibleGraph(ValueError):
    pass


def random_regular_multigraph(n: int, d: int, rng: random.Random, max_tries: int = 10000) -> list[tuple[int, int]]:
    """Pairing model: match ``n*d`` stubs uniformly, rejecting self-loops.

    Parallel edges are kept.
    """
    if n <= 0 or d <= 0 or (n * d) % 2:
        raise InfeasibleGraph(f"no {d}-regular graph on {n} nodes")
    if n == 1:
        raise InfeasibleGraph("a single node can only carry self-loops")
    stubs = [v for v in range(n) for _ in range(d)]
    for _ in range(max_tries):
        rng.shuffle(stubs)
        edges = [(stubs[i], stubs[i + 1]) for i in range(0, len(stubs), 2)]
        if all(u != v for u, v in edges):
            return [(min(u, v), max(u, v)) for u, v in edges]
    raise InfeasibleGraph(f"no loop-free pairing found for n={n}, d={d}")


def parity_clauses(variables: Sequence[int], rhs: int) -> list[list[int]]:
    """The 2^(k-1) clauses forbidding every assignment of the wrong parity."""
    k = len(variables)
    out = []
    for key in range(1 << k):
        if (key.bit_count() & 1) == rhs:
            continue
        out.append([-v if key >> (k - 1 - j) & 1 else v for j, v in enumerate(variables)])
    return out


def gen_tseitin(n: int, d: int, seed: int = 0, total_charge: str = "odd", k_max: int = 6) -> TseitinInstance:
    """Tseitin formula of a random ``d``-regular multigraph on ``n`` nodes.

    With odd total charge a single random node gets charge 1; with even
    total charge all charges are 0.
    """
    if total_charge not in ("odd", "even"):
        raise ValueError("total_charge must be 'odd' or 'even'")
    if d > k_max:
        raise InfeasibleGraph(f"degree {d} exceeds the parity size limit {k_max}")
    rng = random.Random(f"tseitin-{n}-{d}-{seed}")
    edges = random_regular_multigraph(n, d, rng)
    charges = [0] * n
    if total_charge == "odd":
        charges[rng.randrange(n)] = 1
    inst = TseitinInstance(n, d, edges, charges, "")
    clauses = []
    for node, inc in enumerate(inst.incident()):
        clauses.extend(parity_clauses(sorted(inc), charges[node]))
    buf = io.StringIO()
    buf.write(f"c tseitin n={n} d={d} seed={seed} charge={total_charge}\n")
    write_cnf(clauses, len(edges), buf)
    inst.cnf_text = buf.getvalue()
    return inst


REPORT_FIELDS = ["instance", "n", "d", "seed", "cnf_bytes", "proof_bytes", "solve_ms", "verify_ms", "verdict"]


def run_instance(n: int, d: int, seed: int, out_dir: Optional[str] = None, timeout: Optional[float] = 60.0,
                 use_xor: bool = True) -> dict:
    """Generate, solve with proof logging, verify; returns one report row."""
    from .cdcl import UNSAT, Solver
    from .verifier import verify

    inst = gen_tseitin(n, d, seed)
    name = f"tseitin_n{n}_d{d}_s{seed}"
    formula = inst.formula
    proof = io.StringIO()
    t0 = time.perf_counter()
    res = Solver(formula, proof, use_xor=use_xor, seed=seed, time_limit=timeout).solve()
    t1 = time.perf_counter()
    row = {"instance": name, "n": n, "d": d, "seed": seed, "cnf_bytes": len(inst.cnf_text.encode()),
           "proof_bytes": len(proof.getvalue().encode()), "solve_ms": round((t1 - t0) * 1000, 1)}
    if res.status != UNSAT:
        row.update(verify_ms="", verdict="timeout" if res.status == "unknown" else res.status)
    else:
        t2 = time.perf_counter()
        verdict = verify(formula, proof.getvalue(), expect_unsat=True)
        row.update(verify_ms=round((time.perf_counter() - t2) * 1000, 1), verdict=str(verdict))
    if out_dir is not None:
        p = Path(out_dir)
        p.mkdir(parents=True, exist_ok=True)
        (p / f"{name}.cnf").write_text(inst.cnf_text)
        (p / f"{name}.pbp").write_text(proof.getvalue())
    return row


def _run_star(args: tuple) -> dict:
    return run_instance(*args)


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    import numpy as np

    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def run_scaling(
    nodes: Iterable[int],
    seeds: Iterable[int],
    degree: int = 5,
    out_dir: Optional[str] = None,
    workers: Optional[int] = None,
    timeout: Optional[float] = 60.0,
) -> tuple[list[dict], Optional[float]]:
    """Run every (n, seed) pair; see :func:`run_batch`."""
    seeds = list(seeds)
    return run_batch([(n, s) for n in nodes for s in seeds], degree, out_dir, workers, timeout)


def run_batch(
    pairs: Iterable[tuple[int, int]],
    degree: int = 5,
    out_dir: Optional[str] = None,
    workers: Optional[int] = None,
    timeout: Optional[float] = 60.0,
) -> tuple[list[dict], Optional[float]]:
    """Solve and verify each ``(n, seed)`` instance; returns rows sorted by key and the log-log slope.

    When ``out_dir`` is given the instances, proofs, ``report.csv`` and a
    one-line ``summary.txt`` are written there.
    """
    jobs = [(n, degree, s, out_dir, timeout) for n, s in pairs]
    workers = workers if workers is not None else min(len(jobs), os.cpu_count() or 1)
    if workers <= 1:
        rows = [_run_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_run_star, jobs))
    rows.sort(key=lambda r: (r["n"], r["seed"]))
    ok = [r for r in rows if r["verdict"] == "verified-unsat" and r["proof_bytes"] > 0]
    slope = None
    if len({r["cnf_bytes"] for r in ok}) >= 2:
        slope = fit_loglog_slope([r["cnf_bytes"] for r in ok], [r["proof_bytes"] for r in ok])
    if out_dir is not None:
        p = Path(out_dir)
        p.mkdir(parents=True, exist_ok=True)
        with open(p / "report.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, REPORT_FIELDS)
            w.writeheader()
            w.writerows(rows)
        (p / "summary.txt").write_text(summary_line(rows, slope) + "\n")
    return rows, slope


def summary_line(rows: Sequence[dict], slope: Optional[float]) -> str:
    done = sum(1 for r in rows if r["verdict"] == "verified-unsat")
    s = "n/a" if slope is None or math.isnan(slope) else f"{slope:.3f}"
    return f"instances={len(rows)} verified={done} loglog_slope={s}"
