import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbcert.core import clause, restrict
from pbcert.proofio import parse_cnf, parse_proof_line
from pbcert.propagation import Trail
from pbcert.verifier import ALL_STEPS_VALID, verify
from pbcert.xor_engine import (
    K_MAX,
    AuxAllocator,
    ProofLogger,
    XorConstraint,
    XorLoggingError,
    XorMatrix,
    XorPropagator,
    detect_xors,
    gauss_step,
    log_adder,
    log_cnf_to_pb,
    log_reason_clause,
    log_reification,
    log_xor_add,
    mask_vars,
    vars_mask,
)

from oracles import (
    assignments,
    aux_extendable,
    expected_worked_ids,
    gf2_reference,
    holds,
    parity_formula,
    pb,
    solutions,
)


def start(formula):
    buf = io.StringIO()
    logger = ProofLogger(formula.registry.copy(), buf, check=True)
    logger.header()
    logger.load(formula)
    return logger, AuxAllocator(logger.registry), buf


def replays(formula, buf):
    return verify(formula, buf.getvalue()).status == ALL_STEPS_VALID


def encode(variables, rhs, nv=None):
    f = parity_formula(variables, rhs, nv)
    logger, alloc, buf = start(f)
    if len(variables) == 1:  # below the detection arity
        x, ids = XorConstraint.of(variables, rhs), list(range(1, len(f) + 1))
    else:
        [(x, ids)] = detect_xors(f)
    return f, logger, buf, log_cnf_to_pb(alloc, x, ids, logger)


def test_masks():
    assert mask_vars(vars_mask([5, 1, 3])) == [1, 3, 5]
    x = XorConstraint.of([1, 2, 2, 3], 1)
    assert x.variables() == [1, 3]
    assert x.holds({1: True, 3: False})


def test_detect_worked_example(worked_formula):
    found = detect_xors(worked_formula)
    assert [(x.variables(), x.rhs) for x, _ in found] == [([1, 2, 3], 0), ([2, 3, 4], 1)]
    assert sorted(found[0][1]) == [1, 2, 3, 4]


def test_detect_odd_parity_and_incomplete_encoding():
    f = parity_formula([1, 2, 3], 1)
    [(x, ids)] = detect_xors(f)
    assert x.variables() == [1, 2, 3] and x.rhs == 1 and len(ids) == 4
    partial = parse_cnf("p cnf 3 3\n1 2 3 0\n1 -2 -3 0\n-1 2 -3 0\n")
    assert detect_xors(partial) == []


def test_detect_respects_k_max():
    f = parity_formula(range(1, 8), 1)
    assert detect_xors(f, k_max=K_MAX) == []
    assert len(detect_xors(f, k_max=7)) == 1


def test_golden_regeneration(worked_formula, worked_proof_text):
    logger, alloc, buf = start(worked_formula)
    xs = [log_cnf_to_pb(alloc, x, ids, logger) for x, ids in detect_xors(worked_formula)]
    assert [(x.geq_id, x.leq_id) for x in xs] == [(20, 21), (33, 34)]
    s = log_xor_add(xs[0], xs[1], logger)
    assert (s.variables(), s.rhs, s.geq_id, s.leq_id) == ([1, 4], 1, 35, 36)
    assert log_reason_clause(s, {1: False, 4: False}, logger) == 37
    expected = expected_worked_ids(logger.registry)
    for cid, c in expected.items():
        assert logger.db[cid] == c, cid
    # identical steps, and p lines identical byte for byte
    reg = logger.registry
    ours = buf.getvalue().splitlines()
    gold = worked_proof_text.splitlines()
    assert len(ours) == len(gold)
    for a, b in zip(ours, gold):
        assert parse_proof_line(a, reg) == parse_proof_line(b, reg)
        if a.startswith("p "):
            assert a == b


def test_reification_shapes(worked_formula):
    logger, alloc, buf = start(worked_formula)
    y, f_id, b_id = log_reification(alloc, pb((1, 1), (1, 2), (1, 3), degree=2), logger)
    assert (f_id, b_id) == (9, 10)
    assert logger.registry.name(y) == "y1"
    y2, f2, b2 = log_reification(alloc, pb((1, 1), (1, 2), (1, 3), (-2, y), degree=1), logger)
    assert (f2, b2) == (11, 12)
    assert logger.db[11] == pb((3, -y2), (1, 1), (1, 2), (1, 3), (2, -y), degree=3)
    y3, f3, b3 = log_reification(alloc, clause([1]), logger)
    assert logger.db[f3] == clause([-y3, 1]) and logger.db[b3] == clause([y3, -1])
    assert replays(worked_formula, buf)


def test_adder_pol_lines(worked_formula):
    logger, alloc, buf = start(worked_formula)
    y, z, g, l = log_adder(alloc, 1, 2, 3, logger)
    assert (g, l) == (13, 14)
    tail = buf.getvalue().splitlines()[-2:]
    assert tail == ["p 11 9 2 * + 3 d", "p 12 10 2 * + 3 d"]


@pytest.mark.parametrize("inputs", [(1, 2, 3), (1, -2, 3), (1, 2, None), (-1, None, 2)])
def test_adder_computes_binary_sum(inputs):
    f = parse_cnf("p cnf 3 0\n")
    logger, alloc, buf = start(f)
    y, z, g, l = log_adder(alloc, *inputs, logger)
    pair = [logger.db[g], logger.db[l]]
    ins = [i for i in inputs if i]
    for alpha in assignments([1, 2, 3]):
        total = sum(alpha[abs(i)] == (i > 0) for i in ins)
        rest = [restrict(c, alpha) for c in pair]
        assert solutions(rest, [y, z]) == {(total >= 2, total % 2 == 1)}
    assert replays(f, buf)


def test_worked_parity_pairs(worked_formula):
    logger, alloc, _ = start(worked_formula)
    (x1, ids1), (x2, ids2) = detect_xors(worked_formula)
    a = log_cnf_to_pb(alloc, x1, ids1, logger)
    y1 = logger.registry.id("y1")
    assert logger.db[a.geq_id] == pb((1, 1), (1, 2), (1, 3), (2, -y1), degree=2)
    assert logger.db[a.leq_id] == pb((1, -1), (1, -2), (1, -3), (2, y1), degree=3)


@pytest.mark.parametrize("k", range(1, K_MAX + 1))
@pytest.mark.parametrize("rhs", [0, 1])
def test_encoding_extendable_iff_parity(k, rhs):
    xs = list(range(1, k + 1))
    f, logger, buf, x = encode(xs, rhs)
    pair = [logger.db[x.geq_id], logger.db[x.leq_id]]
    for alpha in assignments(xs):
        assert aux_extendable(pair, alpha) == (sum(alpha.values()) % 2 == rhs)
    assert replays(f, buf)


def test_two_xor_forces_equality():
    f, logger, buf, x = encode([1, 2], 0)
    pair = [logger.db[x.geq_id], logger.db[x.leq_id]]
    for alpha in assignments([1, 2]):
        assert aux_extendable(pair, alpha) == (alpha[1] == alpha[2])


def test_missing_clause_aborts():
    f = parse_cnf("p cnf 3 3\n1 2 3 0\n1 -2 -3 0\n-1 2 -3 0\n")
    logger, alloc, _ = start(f)
    with pytest.raises(XorLoggingError):
        log_cnf_to_pb(alloc, XorConstraint.of([1, 2, 3], 1), [1, 2, 3], logger)


def two_parities(a, ra, b, rb, nv):
    fa = parity_formula(a, ra, nv)
    fb = parity_formula(b, rb, nv)
    text = f"p cnf {nv} {len(fa) + len(fb)}\n" + "".join(
        " ".join(map(str, c.literals)) + " 0\n" for c in [*fa.constraints, *fb.constraints])
    f = parse_cnf(text)
    logger, alloc, buf = start(f)
    xs = [log_cnf_to_pb(alloc, x, ids, logger) for x, ids in detect_xors(f)]
    return f, logger, buf, xs


def test_xor_add():
    f, logger, buf, (a, b) = two_parities([1, 2], 1, [2, 3], 1, 3)
    s = log_xor_add(a, b, logger)
    assert (s.variables(), s.rhs) == ([1, 3], 0)
    pair = [logger.db[s.geq_id], logger.db[s.leq_id]]
    for alpha in assignments([1, 2, 3]):
        if aux_extendable(pair, alpha):
            assert alpha[1] == alpha[3]
    t = log_xor_add(a, a, logger)
    assert t.vars == 0 and t.rhs == 0
    assert replays(f, buf)


def test_reason_clauses():
    f, logger, buf, x = encode([1, 2, 3], 1)
    cid = log_reason_clause(x, {1: False, 2: False, 3: False}, logger)
    assert logger.db[cid] == clause([1, 2, 3])
    with pytest.raises(XorLoggingError):
        log_reason_clause(x, {1: True, 2: True, 3: True}, logger)
    with pytest.raises(XorLoggingError):
        log_reason_clause(x, {1: True}, logger)
    g, logger2, buf2, x0 = encode([1, 2, 3], 0)
    cid = log_reason_clause(x0, {1: True, 2: True, 3: True}, logger2)
    assert logger2.db[cid] == clause([-1, -2, -3])
    assert replays(f, buf) and replays(g, buf2)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reason_for_combined_rows(seed):
    # sums of encoded parities give reasons that are falsified by the assignment
    rng = random.Random(seed)
    nv = 6
    a = sorted(rng.sample(range(1, nv + 1), rng.randint(2, 4)))
    b = sorted(rng.sample(range(1, nv + 1), rng.randint(2, 4)))
    if a == b:
        return
    f, logger, buf, xs = two_parities(a, rng.randint(0, 1), b, rng.randint(0, 1), nv)
    if len(xs) != 2:
        return
    s = log_xor_add(xs[0], xs[1], logger)
    vs = s.variables()
    if not vs:
        return
    for alpha in assignments(vs):
        if sum(alpha.values()) % 2 != s.rhs:
            cid = log_reason_clause(s, alpha, logger)
            r = logger.db[cid]
            assert {abs(l) for l in r.literals} <= set(vs)
            assert not holds(r, alpha)
    assert replays(f, buf)


def test_gauss_examples():
    m = XorMatrix([XorConstraint.of([1, 2, 3], 0), XorConstraint.of([2, 3, 4], 1)])
    t = Trail()
    t.assign(-1)
    kind, l, row = gauss_step(m, t)
    assert (kind, l) == ("propagation", 4)
    assert row.variables() == [1, 4] and row.rhs == 1 and row.origin == 0b11
    assert gauss_step(XorMatrix([XorConstraint.of([1], 1)]), Trail())[:2] == ("propagation", 1)
    kind, _, row = gauss_step(XorMatrix([XorConstraint.of([1, 2], 0), XorConstraint.of([1, 2], 1)]), {})
    assert kind == "conflict" and row.vars == 0 and row.rhs == 1
    assert gauss_step(XorMatrix([XorConstraint.of([1, 2], 0)]), {})[0] == "none"


def random_system(rng, nv=16, max_rows=20):
    rows = []
    for _ in range(rng.randint(1, max_rows)):
        vs = rng.sample(range(1, nv + 1), rng.randint(1, min(nv, 5)))
        rows.append((sorted(vs), rng.randint(0, 1)))
    values = {v: rng.random() < 0.5 for v in rng.sample(range(1, nv + 1), rng.randint(0, nv))}
    return rows, values


def check_against_reference(rows, values, nv):
    m = XorMatrix([XorConstraint.of(vs, r) for vs, r in rows])
    ref = gf2_reference(rows, nv, values)
    res = m.eliminate(values)
    kind, lit, row = gauss_step(m, values)
    if ref is None:
        assert kind == "conflict" and res.conflict is not None
        combined = XorConstraint(0, 0)
        for i in mask_vars(row.origin):
            combined = combined + m.rows[i]
        assert (combined.vars, combined.rhs) == (row.vars, row.rhs)
        assert not row.holds(values)
        return
    assert res.conflict is None
    assert {l for l, _ in res.propagations} == ref
    if not ref:
        assert kind == "none"
        return
    assert kind == "propagation" and lit in ref
    open_vars = [v for v in row.variables() if v not in values]
    assert open_vars == [abs(lit)]
    assert row.holds({**values, abs(lit): lit > 0})


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gauss_matches_brute_force(seed):
    rng = random.Random(seed)
    nv = rng.randint(1, 12)
    rows, values = random_system(rng, nv, 12)
    check_against_reference(rows, values, nv)


def test_propagator_lazy_reasons(worked_formula):
    logger, alloc, buf = start(worked_formula)
    xs = [log_cnf_to_pb(alloc, x, ids, logger) for x, ids in detect_xors(worked_formula)]
    before = logger.writer.lines_written
    prop = XorPropagator(xs, logger)
    prop.on_assignment(-1)
    res = prop.propagate()
    assert [l for l, _ in res.propagations] == [4]
    assert logger.writer.lines_written == before  # nothing logged until asked
    lits, cid = prop.reason_clause(res.propagations[0][1], {1: False, 4: True}, flip=4)
    assert sorted(lits) == [1, 4] and logger.db[cid] == clause([1, 4])
    assert prop.propagate().propagations == []  # clean until the trail changes
    prop.on_unassign(-1)
    assert prop.propagate().propagations == []
    assert replays(worked_formula, buf)
