from __future__ import annotations

import random

import pytest

from gatcwf.errors import LevelError
from gatcwf.levels import (
    LevelNF,
    LevelSubst,
    LJoin,
    LNext,
    LVar,
    canonical,
    leq_check,
    level_eq,
    lsubst_apply,
    lsubst_comp,
    lsubst_empty,
    lsubst_eq,
    lsubst_id,
    lsubst_lift,
    lsubst_p,
    lsubst_pair,
    lsubst_q,
    lt_check,
    normalize,
    readback,
)
from levels_bruteforce import Closure, enumerate_terms

a0 = LVar(0)
a1 = LVar(1)


def random_term(rng: random.Random, nvars: int, budget: int) -> LVar | LNext | LJoin:
    if budget <= 1:
        return LVar(rng.randrange(nvars))
    match rng.randrange(3):
        case 0:
            return LVar(rng.randrange(nvars))
        case 1:
            return LNext(random_term(rng, nvars, budget - 1))
        case _:
            left = rng.randint(1, budget - 2) if budget > 2 else 1
            return LJoin(
                random_term(rng, nvars, left),
                random_term(rng, nvars, budget - 1 - left),
            )


def test_normalize_absorbs_inflation():
    assert normalize(1, LJoin(a0, LNext(a0))) == LevelNF(((0, 1),))


def test_normalize_commutative():
    assert normalize(2, LJoin(a0, a1)) == normalize(2, LJoin(a1, a0)) == LevelNF(((0, 0), (1, 0)))


def test_normalize_variable():
    assert normalize(1, a0) == LevelNF(((0, 0),))


def test_normalize_next_distributes():
    assert normalize(2, LNext(LJoin(a0, a1))) == LevelNF(((0, 1), (1, 1)))


def test_level_eq_idempotence():
    assert level_eq(1, LJoin(a0, a0), a0)


def test_level_eq_refutes_successor():
    assert not level_eq(1, a0, LNext(a0))


def test_level_eq_reflexive_random():
    rng = random.Random(7)
    for _ in range(200):
        t = random_term(rng, 2, rng.randint(1, 9))
        assert level_eq(2, t, t)


def test_leq_check_inflation():
    assert leq_check(1, LJoin(LNext(a0), a0), LNext(a0)) is not None


def test_leq_check_distinct_variables():
    assert leq_check(2, a0, a1) is None


def test_leq_check_reflexivity_random():
    rng = random.Random(8)
    for _ in range(200):
        t = random_term(rng, 2, rng.randint(1, 9))
        w = leq_check(2, t, t)
        assert w is not None and w.level == normalize(2, t)


def test_lt_check_successor():
    assert lt_check(1, a0, LNext(a0)) is not None
    assert lt_check(1, a0, LNext(LNext(a0))) is not None


def test_lt_check_irreflexive():
    assert lt_check(1, a0, a0) is None


def test_lt_check_strict_order_on_random_normal_forms():
    rng = random.Random(9)
    terms = [canonical(2, random_term(rng, 2, rng.randint(1, 7))) for _ in range(40)]
    for t in terms:
        assert lt_check(2, t, t) is None
    for x in terms[:15]:
        for y in terms[:15]:
            for z in terms[:15]:
                if lt_check(2, x, y) and lt_check(2, y, z):
                    assert lt_check(2, x, z) is not None


def test_empty_context_has_no_terms():
    with pytest.raises(LevelError):
        normalize(0, a0)
    with pytest.raises(LevelError):
        normalize(0, LNext(a0))


def test_scope_violation():
    with pytest.raises(LevelError):
        normalize(1, a1)


def test_normal_form_idempotent():
    rng = random.Random(10)
    for _ in range(300):
        t = random_term(rng, 2, rng.randint(1, 9))
        nf = normalize(2, t)
        assert normalize(2, readback(nf)) == nf


def law_rewrites(t) -> list:
    """All single-step rewrites of t by the five laws, either orientation."""
    out = [LJoin(t, t)]  # idempotence, expanding
    match t:
        case LJoin(LJoin(a, b), c):
            out.append(LJoin(a, LJoin(b, c)))
        case _:
            pass
    match t:
        case LJoin(a, LJoin(b, c)):
            out.append(LJoin(LJoin(a, b), c))
        case _:
            pass
    match t:
        case LJoin(a, b):
            out.append(LJoin(b, a))
            if a == b:
                out.append(a)
            if b == LNext(a):
                out.append(b)
        case _:
            pass
    match t:
        case LNext(a):
            out.append(LJoin(a, t))
            match a:
                case LJoin(x, y):
                    out.append(LJoin(LNext(x), LNext(y)))
                case _:
                    pass
        case _:
            pass
    match t:
        case LJoin(LNext(x), LNext(y)):
            out.append(LNext(LJoin(x, y)))
        case _:
            pass
    match t:
        case LNext(a):
            out.extend(LNext(a2) for a2 in law_rewrites(a))
        case LJoin(a, b):
            out.extend(LJoin(a2, b) for a2 in law_rewrites(a))
            out.extend(LJoin(a, b2) for b2 in law_rewrites(b))
        case _:
            pass
    return out


def test_normalize_invariant_under_law_rewrites():
    rng = random.Random(11)
    for _ in range(300):
        t = random_term(rng, 2, rng.randint(1, 7))
        nf = normalize(2, t)
        for u in law_rewrites(t):
            assert normalize(2, u) == nf, (t, u)


def test_agrees_with_bruteforce_closure_small_fragment():
    universe = enumerate_terms(2, 3)
    closure = Closure(universe)
    for t in universe:
        for u in universe:
            assert level_eq(2, t, u) == closure.equal(t, u), (t, u)


def test_closure_is_sound_on_larger_universe():
    universe = enumerate_terms(2, 5)
    closure = Closure(universe)
    for t in universe:
        for u in universe:
            if closure.equal(t, u):
                assert level_eq(2, t, u), (t, u)


# ---------------------------------------------------------------------------
# substitutions


def random_subst(rng: random.Random, source: int, target: int) -> LevelSubst:
    return LevelSubst(
        source, target, tuple(random_term(rng, source, rng.randint(1, 5)) for _ in range(target))
    )


def test_apply_distributes_over_join():
    s = LevelSubst(1, 1, (LNext(a0),))
    assert lsubst_apply(s, LJoin(a0, a0)) == LJoin(LNext(a0), LNext(a0))


def test_apply_identity():
    rng = random.Random(12)
    for _ in range(100):
        t = random_term(rng, 3, rng.randint(1, 7))
        assert level_eq(3, lsubst_apply(lsubst_id(3), t), t)


def test_apply_composition():
    rng = random.Random(13)
    for _ in range(100):
        s = random_subst(rng, 2, 3)
        t = random_subst(rng, 2, 2)
        term = random_term(rng, 3, rng.randint(1, 6))
        assert level_eq(
            2,
            lsubst_apply(lsubst_comp(s, t), term),
            lsubst_apply(t, lsubst_apply(s, term)),
        )


def test_ucwf_unit_laws():
    rng = random.Random(14)
    for _ in range(50):
        s = random_subst(rng, 2, 3)
        assert lsubst_eq(lsubst_comp(lsubst_id(3), s), s)
        assert lsubst_eq(lsubst_comp(s, lsubst_id(2)), s)


def test_ucwf_associativity():
    rng = random.Random(15)
    for _ in range(50):
        s = random_subst(rng, 3, 2)
        t = random_subst(rng, 2, 3)
        u = random_subst(rng, 2, 2)
        assert lsubst_eq(
            lsubst_comp(lsubst_comp(s, t), u), lsubst_comp(s, lsubst_comp(t, u))
        )


def test_ucwf_projection_laws():
    rng = random.Random(16)
    for _ in range(50):
        s = random_subst(rng, 2, 3)
        l = random_term(rng, 2, 4)
        ext = lsubst_pair(s, l)
        assert lsubst_eq(lsubst_comp(lsubst_p(3), ext), s)
        assert level_eq(2, lsubst_apply(ext, lsubst_q(3)), l)


def test_ucwf_pair_after_composition():
    rng = random.Random(17)
    for _ in range(50):
        s = random_subst(rng, 2, 2)
        t = random_subst(rng, 3, 2)
        l = random_term(rng, 2, 4)
        assert lsubst_eq(
            lsubst_comp(lsubst_pair(s, l), t),
            lsubst_pair(lsubst_comp(s, t), lsubst_apply(t, l)),
        )


def test_ucwf_surjective_pairing():
    assert lsubst_eq(lsubst_id(3), lsubst_pair(lsubst_p(2), lsubst_q(2)))


def test_empty_laws():
    assert lsubst_eq(lsubst_id(0), lsubst_empty(0))
    rng = random.Random(18)
    s = random_subst(rng, 2, 3)
    assert lsubst_eq(lsubst_comp(lsubst_empty(3), s), lsubst_empty(2))


def test_apply_commutes_with_operators():
    rng = random.Random(19)
    for _ in range(50):
        s = random_subst(rng, 2, 2)
        l = random_term(rng, 2, 4)
        l2 = random_term(rng, 2, 4)
        assert level_eq(
            2, lsubst_apply(s, LJoin(l, l2)), LJoin(lsubst_apply(s, l), lsubst_apply(s, l2))
        )
        assert level_eq(2, lsubst_apply(s, LNext(l)), LNext(lsubst_apply(s, l)))


def test_size_mismatch_rejected():
    with pytest.raises(LevelError):
        LevelSubst(1, 2, (a0,))
    with pytest.raises(LevelError):
        lsubst_comp(lsubst_id(2), lsubst_id(3))


def test_lift_matches_pair_of_comp_p_and_q():
    rng = random.Random(20)
    for _ in range(50):
        s = random_subst(rng, 2, 3)
        assert lsubst_eq(
            lsubst_lift(s), lsubst_pair(lsubst_comp(s, lsubst_p(2)), lsubst_q(2))
        )
