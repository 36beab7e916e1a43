"""Brute-force equational oracle for the level algebra.

Enumerates all level terms up to a node bound and saturates an
equivalence relation under single applications of the five laws
(associativity, commutativity, idempotence of join; join-inflation and
join-distribution of next), closed under congruence, to a fixpoint.
Everything stays inside the finite universe, so the closure is the set
of equalities provable without detouring through larger terms.
"""

from __future__ import annotations

from gatcwf.levels import LJoin, LNext, LVar, LevelTerm


def size(term: LevelTerm) -> int:
    match term:
        case LVar(_):
            return 1
        case LNext(a):
            return 1 + size(a)
        case LJoin(a, b):
            return 1 + size(a) + size(b)
    raise TypeError(term)


def enumerate_terms(nvars: int, max_nodes: int) -> list[LevelTerm]:
    by_size: dict[int, list[LevelTerm]] = {1: [LVar(i) for i in range(nvars)]}
    for n in range(2, max_nodes + 1):
        terms: list[LevelTerm] = [LNext(t) for t in by_size[n - 1]]
        for i in range(1, n - 1):
            for a in by_size[i]:
                for b in by_size[n - 1 - i]:
                    terms.append(LJoin(a, b))
        by_size[n] = terms
    return [t for n in range(1, max_nodes + 1) for t in by_size[n]]


def _root_rewrites(term: LevelTerm) -> list[LevelTerm]:
    out: list[LevelTerm] = []
    match term:
        case LJoin(LJoin(a, b), c):
            out.append(LJoin(a, LJoin(b, c)))
        case _:
            pass
    match term:
        case LJoin(a, LJoin(b, c)):
            out.append(LJoin(LJoin(a, b), c))
        case _:
            pass
    match term:
        case LJoin(a, b):
            out.append(LJoin(b, a))
            if a == b:
                out.append(a)
            if b == LNext(a):
                out.append(b)
        case _:
            pass
    out.append(LJoin(term, term))
    match term:
        case LNext(a):
            out.append(LJoin(a, term))
            match a:
                case LJoin(x, y):
                    out.append(LJoin(LNext(x), LNext(y)))
                case _:
                    pass
        case _:
            pass
    match term:
        case LJoin(LNext(x), LNext(y)):
            out.append(LNext(LJoin(x, y)))
        case _:
            pass
    return out


def one_step(term: LevelTerm) -> list[LevelTerm]:
    """All single-law rewrites of term, at the root or inside."""
    results = list(_root_rewrites(term))
    match term:
        case LNext(a):
            results.extend(LNext(a2) for a2 in one_step(a))
        case LJoin(a, b):
            results.extend(LJoin(a2, b) for a2 in one_step(a))
            results.extend(LJoin(a, b2) for b2 in one_step(b))
        case _:
            pass
    return results


class Closure:
    """Union-find over a finite term universe, saturated to fixpoint."""

    def __init__(self, universe: list[LevelTerm]):
        self.universe = list(universe)
        self.index = {t: i for i, t in enumerate(self.universe)}
        self.parent = list(range(len(self.universe)))
        self._saturate()

    def _find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def _union(self, i: int, j: int) -> bool:
        ri, rj = self._find(i), self._find(j)
        if ri == rj:
            return False
        self.parent[max(ri, rj)] = min(ri, rj)
        return True

    def _saturate(self) -> None:
        changed = True
        while changed:
            changed = False
            for t in self.universe:
                for u in one_step(t):
                    if u in self.index:
                        changed |= self._union(self.index[t], self.index[u])
            for t in self.universe:
                for u in self.universe:
                    if self._congruent(t, u):
                        changed |= self._union(self.index[t], self.index[u])

    def _congruent(self, t: LevelTerm, u: LevelTerm) -> bool:
        match t, u:
            case LNext(a), LNext(b):
                return self.equal(a, b)
            case LJoin(a, b), LJoin(c, d):
                return self.equal(a, c) and self.equal(b, d)
            case _:
                return False

    def equal(self, t: LevelTerm, u: LevelTerm) -> bool:
        return self._find(self.index[t]) == self._find(self.index[u])
