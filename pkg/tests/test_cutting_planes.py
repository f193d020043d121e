import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbcert.core import PBConstraint, clause, normalize
from pbcert.cutting_planes import (
    ADD,
    DIV,
    MUL,
    SAT,
    CuttingPlanesError,
    add,
    divide,
    eval_rpn,
    linear_combination,
    lit,
    literal_axiom,
    multiply,
    num,
    saturate,
)

from oracles import entails, pb, random_constraint

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=300)
@given(seeds)
def test_add_matches_linear_combination(seed):
    rng = random.Random(seed)
    a, b = random_constraint(rng, 5), random_constraint(rng, 5)
    assert add(a, b) == linear_combination(a, b)


@settings(max_examples=300)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_linear_combination_sound(seed, ca, cb):
    rng = random.Random(seed)
    a, b = random_constraint(rng, 5), random_constraint(rng, 5)
    assert entails([a, b], linear_combination(a, b, ca, cb))


@settings(max_examples=300)
@given(seeds, st.integers(1, 5))
def test_divide_and_multiply_sound(seed, d):
    c = random_constraint(random.Random(seed), 5)
    assert entails([c], divide(c, d))
    assert entails([c], multiply(c, d))
    assert entails([multiply(c, d)], c)


@settings(max_examples=300)
@given(seeds)
def test_saturation_equivalent(seed):
    c = random_constraint(random.Random(seed), 5)
    s = saturate(c)
    assert entails([c], s) and entails([s], c)
    assert s.max_coef <= max(s.degree, 0) or not s.terms


def test_division_rounds_up():
    # 3x + 2y + z >= 4, divided by 2: 2x + y + z >= 2
    c = pb((3, 1), (2, 2), (1, 3), degree=4)
    assert divide(c, 2) == pb((2, 1), (1, 2), (1, 3), degree=2)


def test_addition_cancels_opposite_literals():
    # (x + y >= 1) + (~x + z >= 1) = y + z >= 1
    assert add(clause([1, 2]), clause([-1, 3])) == clause([2, 3])


def test_saturation_example():
    assert saturate(pb((5, 1), (1, 2), degree=2)) == pb((2, 1), (1, 2), degree=2)


def test_negative_factors_rejected():
    c = clause([1])
    with pytest.raises(CuttingPlanesError):
        divide(c, 0)
    with pytest.raises(CuttingPlanesError):
        multiply(c, -1)
    with pytest.raises(CuttingPlanesError):
        linear_combination(c, c, -1, 1)


def test_literal_axiom_is_trivial():
    assert literal_axiom(-3) == PBConstraint(((1, -3),), 0)


def test_rpn_evaluation():
    db = {1: clause([1, 2]), 2: clause([-1, 2])}
    # 1 2 + 2 d  ->  y >= 1
    assert eval_rpn([num(1), num(2), ADD, num(2), DIV], db.get) == clause([2])
    # 1 3 * x1 +  ->  4 x1 + 3 x2 >= 3  (literal axiom adds x1 >= 0)
    assert eval_rpn([num(1), num(3), MUL, lit(1), ADD], db.get) == pb((4, 1), (3, 2), degree=3)
    assert eval_rpn([num(1), num(3), MUL, SAT], db.get) == pb((3, 1), (3, 2), degree=3)


@pytest.mark.parametrize(
    "tokens",
    [
        [ADD],
        [num(1), num(9), ADD],
        [num(1), num(2)],
        [num(1), num(0), DIV],
        [num(1), lit(1), MUL],
        [],
    ],
)
def test_rpn_errors(tokens):
    db = {1: clause([1, 2]), 2: clause([-1, 2])}
    with pytest.raises(CuttingPlanesError):
        eval_rpn(tokens, db.get)


@settings(max_examples=200)
@given(seeds)
def test_rpn_chain_sound(seed):
    rng = random.Random(seed)
    premises = {i: random_constraint(rng, 4) for i in range(1, 4)}
    toks = [num(1)]
    for _ in range(rng.randint(1, 4)):
        op = rng.choice("+*ds")
        if op == "+":
            toks += [num(rng.randint(1, 3)), ADD]
        elif op == "*":
            toks += [num(rng.randint(1, 3)), MUL]
        elif op == "d":
            toks += [num(rng.randint(1, 3)), DIV]
        else:
            toks.append(SAT)
    assert entails(list(premises.values()), eval_rpn(toks, premises.get))


def test_normalize_degree_clamp_in_addition():
    c = add(pb((1, 1), degree=1), pb((1, -1), degree=1))
    assert c == normalize([], 1) and c.is_contradiction()
