r"""The algebra of universe levels.

Level contexts are plain sizes: a context of size n provides level
variables 0 .. n-1, numbered left to right, so the variable bound last
in a context of size n+1 has index n.  There are no closed level
constants, hence no level terms exist over the empty context and every
universe ends up polymorphic.

Level terms are generated by variables, `next` (strict successor) and
`join` (least upper bound), quotiented by the semilattice laws for join
and the two laws making `next` an inflationary endomorphism that
distributes over join.  Every term is equal to a unique normal form

    var(i1)^{+s1} \/ ... \/ var(ik)^{+sk}      (i1 < ... < ik)

with at most one atom per variable, which makes equality, the ordering
guard and substitution all decidable by computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from .errors import LevelError

# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class LVar:
    index: int

    def __repr__(self):
        return f"a{self.index}"


@dataclass(frozen=True)
class LNext:
    arg: "LevelTerm"

    def __repr__(self):
        return f"{self.arg!r}^+"


@dataclass(frozen=True)
class LJoin:
    left: "LevelTerm"
    right: "LevelTerm"

    def __repr__(self):
        return f"({self.left!r} \\/ {self.right!r})"


LevelTerm = LVar | LNext | LJoin


def check_scope(size: int, term: LevelTerm) -> None:
    """Reject any variable with index >= size.

    Called with size 0 this rejects every term: no closed levels exist.
    """
    match term:
        case LVar(i):
            if not 0 <= i < size:
                raise LevelError(f"level variable a{i} out of scope (context size {size})")
        case LNext(arg):
            check_scope(size, arg)
        case LJoin(left, right):
            check_scope(size, left)
            check_scope(size, right)
        case _:
            raise TypeError(f"not a level term: {term!r}")


# ---------------------------------------------------------------------------
# normal forms


@dataclass(frozen=True)
class LevelNF:
    """Canonical join of shifted variables; atoms sorted by variable index."""

    atoms: tuple[tuple[int, int], ...]  # (variable, shift), nonempty

    def __post_init__(self):
        if not self.atoms:
            raise LevelError("empty level normal form")
        indices = [v for v, _ in self.atoms]
        if indices != sorted(set(indices)):
            raise LevelError(f"atoms not strictly sorted: {self.atoms!r}")

    def shift(self, by: int) -> "LevelNF":
        return LevelNF(tuple((v, s + by) for v, s in self.atoms))

    def join(self, other: "LevelNF") -> "LevelNF":
        merged = dict(self.atoms)
        for v, s in other.atoms:
            merged[v] = max(merged.get(v, -1), s)
        return LevelNF(tuple(sorted(merged.items())))


def normalize(size: int, term: LevelTerm) -> LevelNF:
    """Normal form of a term scoped in a context of the given size."""
    check_scope(size, term)
    return nf_of(term)


def nf_of(term: LevelTerm) -> LevelNF:
    """Normal form without a scope check (for comparing already-checked terms)."""
    return _nf(term)


def _nf(term: LevelTerm) -> LevelNF:
    match term:
        case LVar(i):
            return LevelNF(((i, 0),))
        case LNext(arg):
            return _nf(arg).shift(1)
        case LJoin(left, right):
            return _nf(left).join(_nf(right))
    raise TypeError(f"not a level term: {term!r}")


def readback(nf: LevelNF) -> LevelTerm:
    """Canonical term denoting a normal form (left-nested join, sorted atoms)."""
    parts = []
    for v, s in nf.atoms:
        t: LevelTerm = LVar(v)
        for _ in range(s):
            t = LNext(t)
        parts.append(t)
    return reduce(LJoin, parts)


def canonical(size: int, term: LevelTerm) -> LevelTerm:
    """Replace a term by the readback of its normal form."""
    return readback(normalize(size, term))


def level_eq(size: int, left: LevelTerm, right: LevelTerm) -> bool:
    return normalize(size, left) == normalize(size, right)


# ---------------------------------------------------------------------------
# the level-equality sort

# A proof of level equality carries no information beyond the common
# normal form; it exists exactly when the two terms are equal, and two
# witnesses for the same pair are always identical.


@dataclass(frozen=True)
class LeqWitness:
    level: LevelNF


def leq_check(size: int, left: LevelTerm, right: LevelTerm) -> LeqWitness | None:
    lnf = normalize(size, left)
    rnf = normalize(size, right)
    if lnf == rnf:
        return LeqWitness(lnf)
    return None


def lt_check(size: int, lo: LevelTerm, hi: LevelTerm) -> LeqWitness | None:
    """Strict order lo < hi, defined as the equality lo^+ \\/ hi = hi."""
    return leq_check(size, LJoin(LNext(lo), hi), hi)


# ---------------------------------------------------------------------------
# level substitutions

# A substitution from a context of size `source` to one of size `target`
# is a tuple of `target` terms over `source` variables; entry i
# interprets variable i.  All the unityped-cwf operations below are
# computations on such tuples, so the cwf equations hold by construction
# (up to level_eq on entries); the tests spell this out.


@dataclass(frozen=True)
class LevelSubst:
    source: int
    target: int
    entries: tuple[LevelTerm, ...]

    def __post_init__(self):
        if len(self.entries) != self.target:
            raise LevelError(
                f"substitution into context of size {self.target} "
                f"needs {self.target} entries, got {len(self.entries)}"
            )
        for e in self.entries:
            check_scope(self.source, e)

    def is_identity(self) -> bool:
        return self.source == self.target and all(
            e == LVar(i) for i, e in enumerate(self.entries)
        )


def lsubst_apply(subst: LevelSubst, term: LevelTerm) -> LevelTerm:
    """Replace each variable of a term over subst.target by its entry."""
    check_scope(subst.target, term)
    return _apply(subst.entries, term)


def _apply(entries: tuple[LevelTerm, ...], term: LevelTerm) -> LevelTerm:
    match term:
        case LVar(i):
            return entries[i]
        case LNext(arg):
            return LNext(_apply(entries, arg))
        case LJoin(left, right):
            return LJoin(_apply(entries, left), _apply(entries, right))
    raise TypeError(f"not a level term: {term!r}")


def lsubst_id(size: int) -> LevelSubst:
    return LevelSubst(size, size, tuple(LVar(i) for i in range(size)))


def lsubst_empty(size: int) -> LevelSubst:
    return LevelSubst(size, 0, ())


def lsubst_comp(outer: LevelSubst, inner: LevelSubst) -> LevelSubst:
    """outer after inner: entries of outer, rewritten through inner."""
    if outer.source != inner.target:
        raise LevelError(
            f"cannot compose: outer source {outer.source} != inner target {inner.target}"
        )
    return LevelSubst(
        inner.source, outer.target, tuple(_apply(inner.entries, e) for e in outer.entries)
    )


def lsubst_pair(subst: LevelSubst, term: LevelTerm) -> LevelSubst:
    """Extend the target by one variable, interpreted by the given term."""
    check_scope(subst.source, term)
    return LevelSubst(subst.source, subst.target + 1, subst.entries + (term,))


def lsubst_p(size: int) -> LevelSubst:
    """Weakening from size+1 to size: forget the last variable."""
    return LevelSubst(size + 1, size, tuple(LVar(i) for i in range(size)))


def lsubst_q(size: int) -> LevelTerm:
    """The last variable of a context of size size+1."""
    return LVar(size)


def lsubst_lift(subst: LevelSubst) -> LevelSubst:
    """Push a substitution under one level binder: pair(comp(subst, p), q)."""
    return LevelSubst(
        subst.source + 1, subst.target + 1, subst.entries + (LVar(subst.source),)
    )


def lsubst_eq(left: LevelSubst, right: LevelSubst) -> bool:
    """Pointwise equality of entries up to level_eq."""
    if (left.source, left.target) != (right.source, right.target):
        return False
    return all(
        normalize(left.source, a) == normalize(right.source, b)
        for a, b in zip(left.entries, right.entries)
    )


def canonical_subst(subst: LevelSubst) -> LevelSubst:
    return LevelSubst(
        subst.source,
        subst.target,
        tuple(canonical(subst.source, e) for e in subst.entries),
    )
