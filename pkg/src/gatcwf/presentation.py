"""Declarative presentations of generalized algebraic theories.

A presentation is a finite list of sort symbols, operator symbols and
equations; each declaration may use only the names before it.  The
shipped theory files are data for validation and documentation: the
kernel implements the same rules by hand and a mechanical cross-check
ties the two together (operator names/arities against the kernel's
typing table, equation labels against the conversion rule registry).

Dependent sort-checking of an arbitrary presentation would decide
arbitrary word problems, so equation sides are sort-checked only up to
the equations already declared, by a budgeted best-first search over
single rewrite steps in either orientation.  Exhausting the budget
yields Unknown, never a false acceptance.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

from .core import Mode
from .errors import GatError
from .parser import DEqDecl, DOpDecl, DSortDecl, PTerm, parse


@dataclass(frozen=True)
class SortDecl:
    name: str
    telescope: tuple[tuple[str, PTerm], ...]


@dataclass(frozen=True)
class OpDecl:
    name: str
    telescope: tuple[tuple[str, PTerm], ...]
    result: PTerm


@dataclass(frozen=True)
class EqDecl:
    label: str
    telescope: tuple[tuple[str, PTerm], ...]
    lhs: PTerm
    rhs: PTerm
    sort: PTerm


Decl = SortDecl | OpDecl | EqDecl


@dataclass(frozen=True)
class Presentation:
    decls: tuple[Decl, ...]

    def sorts(self) -> dict[str, SortDecl]:
        return {d.name: d for d in self.decls if isinstance(d, SortDecl)}

    def ops(self) -> dict[str, OpDecl]:
        return {d.name: d for d in self.decls if isinstance(d, OpDecl)}

    def equations(self) -> list[EqDecl]:
        return [d for d in self.decls if isinstance(d, EqDecl)]


@dataclass(frozen=True)
class PresResult:
    name: str
    kind: str  # sort | op | eq
    verdict: str  # ok | error | unknown
    message: str | None = None

    def render(self) -> str:
        if self.verdict == "ok":
            return f"ok {self.kind} {self.name}"
        word = "unknown" if self.verdict == "unknown" else "fail"
        return f"{word} {self.kind} {self.name}: {self.message}"


@dataclass(frozen=True)
class PresReport:
    results: tuple[PresResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.verdict == "ok" for r in self.results)


# ---------------------------------------------------------------------------
# first-order terms: matching, substitution, rewriting


def subst_pterm(term: PTerm, binding: dict[str, PTerm]) -> PTerm:
    if not term.args:
        return binding.get(term.head, term)
    return PTerm(term.head, tuple(subst_pterm(a, binding) for a in term.args))


def match_pterm(pattern: PTerm, term: PTerm, variables: frozenset[str],
                binding: dict[str, PTerm]) -> dict[str, PTerm] | None:
    if not pattern.args and pattern.head in variables:
        bound = binding.get(pattern.head)
        if bound is None:
            out = dict(binding)
            out[pattern.head] = term
            return out
        return binding if bound == term else None
    if pattern.head != term.head or len(pattern.args) != len(term.args):
        return None
    for p, t in zip(pattern.args, term.args):
        binding = match_pterm(p, t, variables, binding)
        if binding is None:
            return None
    return binding


def pterm_vars(term: PTerm, out: set[str] | None = None) -> set[str]:
    if out is None:
        out = set()
    if not term.args:
        out.add(term.head)
    for a in term.args:
        pterm_vars(a, out)
    return out


def _size(term: PTerm) -> int:
    return 1 + sum(_size(a) for a in term.args)


class WordProblem:
    """Budgeted equality of first-order terms modulo a list of equations.

    Best-first (smallest term first) bidirectional closure; the budget
    counts expanded terms per `equal` query.  Orientations that would
    introduce fresh variables are unusable as rewrites and are skipped;
    bidirectionality makes up for the missing expansions in practice.

    Rules of a dependently sorted theory repeat annotation arguments, so
    a rule may only apply to a term whose annotations are provably (not
    syntactically) equal to the instance's.  Matching therefore defers
    mismatched subterms whose pattern becomes closed by the rest of the
    match and discharges them with a recursive, smaller-budget query.

    Exhausting both closures refutes equality only when neither side
    admits any rewrite at all; with expansions filtered out, anything
    larger is inconclusive.
    """

    def __init__(self, equations: list[EqDecl], budget: int = 3000, depth: int = 0):
        self.by_head: dict[str, list] = {}
        for eq in equations:
            # rename rule variables apart from the object-level symbols of
            # the terms being compared ("%" cannot occur in identifiers)
            renaming = {v: PTerm(f"%{i}") for i, (v, _) in enumerate(eq.telescope)}
            variables = frozenset(t.head for t in renaming.values())
            lhs0 = subst_pterm(eq.lhs, renaming)
            rhs0 = subst_pterm(eq.rhs, renaming)
            for lhs, rhs in ((lhs0, rhs0), (rhs0, lhs0)):
                if pterm_vars(rhs) & variables <= (pterm_vars(lhs) & variables):
                    if not lhs.args and lhs.head in variables:
                        continue  # a bare variable matches everything
                    self.by_head.setdefault(lhs.head, []).append((variables, lhs, rhs))
        self.budget = budget
        self.depth = depth
        self.equations = equations
        self._sub: "WordProblem | None" = None
        self._eq_cache: dict[tuple[PTerm, PTerm], str] = {}

    def _match_strict(self, pattern, term, variables, binding) -> bool:
        """Structural match extending binding; False on any mismatch."""
        if not pattern.args and pattern.head in variables:
            bound = binding.get(pattern.head)
            if bound is None:
                binding[pattern.head] = term
                return True
            return bound == term
        if pattern.head != term.head or len(pattern.args) != len(term.args):
            return False
        return all(
            self._match_strict(p, t, variables, binding)
            for p, t in zip(pattern.args, term.args)
        )

    def _apply_rule(self, rule, term) -> PTerm | None:
        variables, lhs, rhs = rule
        if lhs.head != term.head or len(lhs.args) != len(term.args):
            return None
        # subjects conventionally come last, annotations repeat them; bind
        # from the right and re-check mismatched annotation arguments up to
        # provable equality with a smaller budget
        binding: dict[str, PTerm] = {}
        deferred: list[tuple[PTerm, PTerm]] = []
        for p, t in zip(reversed(lhs.args), reversed(term.args)):
            attempt = dict(binding)
            if self._match_strict(p, t, variables, attempt):
                binding = attempt
            else:
                deferred.append((p, t))
        if deferred:
            if self.depth >= 2:
                return None
            if self._sub is None:
                self._sub = WordProblem(self.equations, budget=max(self.budget // 16, 64),
                                        depth=self.depth + 1)
            for pattern, actual in deferred:
                expected = subst_pterm(pattern, binding)
                if pterm_vars(expected) & variables:
                    return None  # pattern piece stayed open
                if self._sub.equal(expected, actual) != "yes":
                    return None
        return subst_pterm(rhs, binding)

    def rewrites(self, term: PTerm) -> list[PTerm]:
        out = []
        for rule in self.by_head.get(term.head, ()):
            rewritten = self._apply_rule(rule, term)
            if rewritten is not None:
                out.append(rewritten)
        for i, arg in enumerate(term.args):
            for rewritten in self.rewrites(arg):
                out.append(PTerm(term.head, term.args[:i] + (rewritten,) + term.args[i + 1:]))
        return out

    def equal(self, t1: PTerm, t2: PTerm) -> str:
        """"yes" | "no" | "unknown"."""
        if t1 == t2:
            return "yes"
        key = (t1, t2) if (id(t1) <= id(t2)) else (t2, t1)
        key = (t1, t2)
        cached = self._eq_cache.get(key) or self._eq_cache.get((t2, t1))
        if cached is not None:
            return cached
        result = self._equal_search(t1, t2)
        self._eq_cache[key] = result
        return result

    def _equal_search(self, t1: PTerm, t2: PTerm) -> str:
        seen = ({t1}, {t2})
        frontier: list[tuple[int, int, int, PTerm]] = []
        tiebreak = itertools.count()
        heapq.heappush(frontier, (_size(t1), next(tiebreak), 0, t1))
        heapq.heappush(frontier, (_size(t2), next(tiebreak), 1, t2))
        spent = 0
        while frontier:
            if spent >= self.budget:
                return "unknown"
            _, _, side, term = heapq.heappop(frontier)
            spent += 1
            for rewritten in self.rewrites(term):
                if rewritten in seen[1 - side]:
                    return "yes"
                if rewritten not in seen[side]:
                    seen[side].add(rewritten)
                    heapq.heappush(
                        frontier, (_size(rewritten), next(tiebreak), side, rewritten)
                    )
        if len(seen[0]) == 1 and len(seen[1]) == 1:
            return "no"  # both sides rigid and distinct
        return "unknown"


# ---------------------------------------------------------------------------
# the presentation checker


class _Scope:
    def __init__(self):
        self.sorts: dict[str, SortDecl] = {}
        self.ops: dict[str, OpDecl] = {}
        self.equations: list[EqDecl] = []
        self.labels: set[str] = set()
        self.word: WordProblem | None = None

    def word_problem(self, budget: int) -> WordProblem:
        if self.word is None:
            self.word = WordProblem(self.equations, budget)
        return self.word

    def add_equation(self, eq: EqDecl) -> None:
        self.equations.append(eq)
        self.word = None


class PresentationChecker:
    def __init__(self, word_budget: int = 3000):
        self.word_budget = word_budget

    def check(self, pres: Presentation) -> PresReport:
        scope = _Scope()
        return PresReport(tuple(self.check_decl(scope, d) for d in pres.decls))

    # each declaration is validated against the prefix before it and then
    # added to the scope, so later declarations still resolve names even
    # after a soft failure

    def check_decl(self, scope: _Scope, decl: Decl) -> PresResult:
        try:
            if isinstance(decl, SortDecl):
                self._check_name_fresh(scope, decl.name)
                self._check_telescope(scope, decl.telescope)
                scope.sorts[decl.name] = decl
                return PresResult(decl.name, "sort", "ok")
            if isinstance(decl, OpDecl):
                self._check_name_fresh(scope, decl.name)
                variables = self._check_telescope(scope, decl.telescope)
                unknowns: list[str] = []
                self._check_sort_expr(scope, decl.result, variables, unknowns)
                scope.ops[decl.name] = decl
                if unknowns:
                    return PresResult(decl.name, "op", "unknown",
                                      "undecided within budget: " + "; ".join(unknowns))
                return PresResult(decl.name, "op", "ok")
            if isinstance(decl, EqDecl):
                label = decl.label or f"eq#{len(scope.equations) + 1}"
                if decl.label and decl.label in scope.labels:
                    raise GatError(f"duplicate equation label: {decl.label}")
                variables = self._check_telescope(scope, decl.telescope)
                word = scope.word_problem(self.word_budget)
                unknowns = []
                lhs_sort = self._infer(scope, decl.lhs, variables, word, unknowns)
                rhs_sort = self._infer(scope, decl.rhs, variables, word, unknowns)
                self._check_sort_expr(scope, decl.sort, variables, unknowns)
                verdict = None
                for side, got in (("left side", lhs_sort), ("right side", rhs_sort)):
                    answer = self._sorts_equal(got, decl.sort, word)
                    if answer == "no":
                        verdict = PresResult(label, "eq", "error",
                                             f"{side} has sort {got}, declared {decl.sort}")
                        break
                    if answer == "unknown":
                        unknowns.append(f"{side} sort comparison")
                scope.add_equation(decl)
                scope.labels.add(label)
                if verdict is not None:
                    return verdict
                if unknowns:
                    return PresResult(label, "eq", "unknown",
                                      "undecided within budget: " + "; ".join(unknowns))
                return PresResult(label, "eq", "ok")
        except GatError as ex:
            name = getattr(decl, "name", getattr(decl, "label", "?")) or "?"
            kind = {SortDecl: "sort", OpDecl: "op", EqDecl: "eq"}[type(decl)]
            return PresResult(name, kind, "error", str(ex))
        raise GatError(f"not a presentation declaration: {decl!r}")

    def _check_name_fresh(self, scope: _Scope, name: str) -> None:
        if name in scope.sorts or name in scope.ops:
            raise GatError(f"duplicate name: {name}")

    def _check_telescope(self, scope, telescope) -> dict[str, PTerm]:
        variables: dict[str, PTerm] = {}
        word = scope.word_problem(self.word_budget)
        for var, sort_expr in telescope:
            if var in variables:
                raise GatError(f"duplicate telescope variable: {var}")
            self._check_sort_expr(scope, sort_expr, dict(variables), [], word)
            variables[var] = sort_expr
        return variables

    def _check_sort_expr(self, scope, sort_expr: PTerm, variables, unknowns,
                         word: WordProblem | None = None) -> None:
        if word is None:
            word = scope.word_problem(self.word_budget)
        sort = scope.sorts.get(sort_expr.head)
        if sort is None:
            raise GatError(f"unknown sort symbol: {sort_expr.head}")
        if len(sort_expr.args) != len(sort.telescope):
            raise GatError(
                f"sort {sort_expr.head} expects {len(sort.telescope)} arguments, "
                f"got {len(sort_expr.args)}")
        binding: dict[str, PTerm] = {}
        for arg, (var, expected) in zip(sort_expr.args, sort.telescope):
            got = self._infer(scope, arg, variables, word, unknowns)
            want = subst_pterm(expected, binding)
            answer = self._sorts_equal(got, want, word)
            if answer == "no":
                raise GatError(f"argument {arg} has sort {got}, expected {want}")
            if answer == "unknown":
                unknowns.append(f"argument {arg}")
            binding[var] = arg

    def _infer(self, scope, term: PTerm, variables, word, unknowns) -> PTerm:
        if not term.args and term.head in variables:
            return variables[term.head]
        op = scope.ops.get(term.head)
        if op is None:
            raise GatError(f"unknown operator: {term}")
        if len(term.args) != len(op.telescope):
            raise GatError(
                f"operator {term.head} expects {len(op.telescope)} arguments, "
                f"got {len(term.args)}")
        binding: dict[str, PTerm] = {}
        for arg, (var, expected) in zip(term.args, op.telescope):
            got = self._infer(scope, arg, variables, word, unknowns)
            want = subst_pterm(expected, binding)
            answer = self._sorts_equal(got, want, word)
            if answer == "no":
                raise GatError(
                    f"in {term}: argument {arg} has sort {got}, expected {want}")
            if answer == "unknown":
                unknowns.append(f"in {term}: argument {arg}")
            binding[var] = arg
        return subst_pterm(op.result, binding)

    def _sorts_equal(self, got: PTerm, want: PTerm, word: WordProblem) -> str:
        if got == want:
            return "yes"
        if got.head != want.head:
            return "no"  # distinct sort symbols never become equal
        return word.equal(got, want)


def check_presentation(pres: Presentation, word_budget: int = 3000) -> PresReport:
    return PresentationChecker(word_budget=word_budget).check(pres)


# ---------------------------------------------------------------------------
# loading and printing


def decls_to_presentation(decls) -> Presentation:
    out: list[Decl] = []
    for d in decls:
        if isinstance(d, DSortDecl):
            out.append(SortDecl(d.name, d.telescope))
        elif isinstance(d, DOpDecl):
            out.append(OpDecl(d.name, d.telescope, d.result))
        elif isinstance(d, DEqDecl):
            out.append(EqDecl(d.label, d.telescope, d.lhs, d.rhs, d.sort))
        else:
            raise GatError(f"not a presentation declaration: {type(d).__name__}")
    return Presentation(tuple(out))


def load_presentation(text: str) -> Presentation:
    return decls_to_presentation(parse(text, Mode.TOWER))


def print_presentation(pres: Presentation) -> str:
    lines = []
    for d in pres.decls:
        tele = ", ".join(f"{v} : {s}" for v, s in d.telescope)
        if isinstance(d, SortDecl):
            lines.append(f"sort {d.name} ({tele});")
        elif isinstance(d, OpDecl):
            lines.append(f"op {d.name} ({tele}) : {d.result};")
        else:
            label = f"@{d.label} " if d.label else ""
            lines.append(f"eq {label}({tele}) {d.lhs} = {d.rhs} : {d.sort};")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# the truncated tower presentations

# The theory with an external tower is infinitary (one universe, one
# decoder and one family of codes per index), so its initial model is
# built in stages along a chain of finite truncations.  Stage k adds the
# k-th universe, its decoder, the product codes whose larger index is k
# and the codes for smaller universes inside the k-th, each with their
# equations; the declaration lists of successive truncations are then
# prefixes of one another by construction.

_TOWER_BASE = """
sort ctx ();
sort hom (D : ctx, G : ctx);
sort ty (G : ctx);
sort tm (G : ctx, A : ty(G));

op id (G : ctx) : hom(G, G);
op comp (X : ctx, D : ctx, G : ctx, g : hom(D, G), d : hom(X, D)) : hom(X, G);
op tysub (G : ctx, D : ctx, A : ty(G), g : hom(D, G)) : ty(D);
op tmsub (G : ctx, D : ctx, A : ty(G), g : hom(D, G), a : tm(G, A))
  : tm(D, tysub(G, D, A, g));
op terminal () : ctx;
op empty (G : ctx) : hom(G, terminal());
op ext (G : ctx, A : ty(G)) : ctx;
op pair (G : ctx, D : ctx, A : ty(G), g : hom(D, G), a : tm(D, tysub(G, D, A, g)))
  : hom(D, ext(G, A));
op proj (G : ctx, A : ty(G)) : hom(ext(G, A), G);
op var (G : ctx, A : ty(G))
  : tm(ext(G, A), tysub(G, ext(G, A), A, proj(G, A)));

eq @comp-id-left (D : ctx, G : ctx, g : hom(D, G))
  comp(D, G, G, id(G), g) = g : hom(D, G);
eq @comp-id-right (D : ctx, G : ctx, g : hom(D, G))
  comp(D, D, G, g, id(D)) = g : hom(D, G);
eq @comp-assoc (W : ctx, X : ctx, D : ctx, G : ctx,
                g : hom(D, G), d : hom(X, D), x : hom(W, X))
  comp(W, X, G, comp(X, D, G, g, d), x)
    = comp(W, D, G, g, comp(W, X, D, d, x)) : hom(W, G);
eq @tysub-id (G : ctx, A : ty(G)) tysub(G, G, A, id(G)) = A : ty(G);
eq @tmsub-id (G : ctx, A : ty(G), a : tm(G, A))
  tmsub(G, G, A, id(G), a) = a : tm(G, A);
eq @tysub-comp (X : ctx, D : ctx, G : ctx, A : ty(G), g : hom(D, G), d : hom(X, D))
  tysub(G, X, A, comp(X, D, G, g, d)) = tysub(D, X, tysub(G, D, A, g), d) : ty(X);
eq @tmsub-comp (X : ctx, D : ctx, G : ctx, A : ty(G),
                g : hom(D, G), d : hom(X, D), a : tm(G, A))
  tmsub(G, X, A, comp(X, D, G, g, d), a)
    = tmsub(D, X, tysub(G, D, A, g), d, tmsub(G, D, A, g, a))
    : tm(X, tysub(G, X, A, comp(X, D, G, g, d)));
eq @id-terminal () id(terminal()) = empty(terminal()) : hom(terminal(), terminal());
eq @empty-comp (D : ctx, G : ctx, g : hom(D, G))
  comp(D, G, terminal(), empty(G), g) = empty(D) : hom(D, terminal());
eq @proj-ext (G : ctx, D : ctx, A : ty(G), g : hom(D, G),
              a : tm(D, tysub(G, D, A, g)))
  comp(D, ext(G, A), G, proj(G, A), pair(G, D, A, g, a)) = g : hom(D, G);
eq @var-ext (G : ctx, D : ctx, A : ty(G), g : hom(D, G),
             a : tm(D, tysub(G, D, A, g)))
  tmsub(ext(G, A), D, tysub(G, ext(G, A), A, proj(G, A)), pair(G, D, A, g, a), var(G, A))
    = a : tm(D, tysub(G, D, A, g));
eq @ext-comp (G : ctx, D : ctx, X : ctx, A : ty(G), g : hom(D, G),
              a : tm(D, tysub(G, D, A, g)), d : hom(X, D))
  comp(X, D, ext(G, A), pair(G, D, A, g, a), d)
    = pair(G, X, A, comp(X, D, G, g, d), tmsub(D, X, tysub(G, D, A, g), d, a))
    : hom(X, ext(G, A));
eq @id-ext (G : ctx, A : ty(G))
  id(ext(G, A)) = pair(G, ext(G, A), A, proj(G, A), var(G, A))
  : hom(ext(G, A), ext(G, A));

op pi (G : ctx, A : ty(G), B : ty(ext(G, A))) : ty(G);
op lam (G : ctx, A : ty(G), B : ty(ext(G, A)), b : tm(ext(G, A), B))
  : tm(G, pi(G, A, B));
op app (G : ctx, A : ty(G), B : ty(ext(G, A)), c : tm(G, pi(G, A, B)), a : tm(G, A))
  : tm(G, tysub(ext(G, A), G, B, pair(G, G, A, id(G), a)));

eq @pi-sub (G : ctx, D : ctx, A : ty(G), B : ty(ext(G, A)), g : hom(D, G))
  tysub(G, D, pi(G, A, B), g)
    = pi(D, tysub(G, D, A, g),
         tysub(ext(G, A), ext(D, tysub(G, D, A, g)), B,
               pair(G, ext(D, tysub(G, D, A, g)), A,
                    comp(ext(D, tysub(G, D, A, g)), D, G, g,
                         proj(D, tysub(G, D, A, g))),
                    var(D, tysub(G, D, A, g)))))
    : ty(D);
eq @lam-sub (G : ctx, D : ctx, A : ty(G), B : ty(ext(G, A)),
             b : tm(ext(G, A), B), g : hom(D, G))
  tmsub(G, D, pi(G, A, B), g, lam(G, A, B, b))
    = lam(D, tysub(G, D, A, g),
          tysub(ext(G, A), ext(D, tysub(G, D, A, g)), B,
                pair(G, ext(D, tysub(G, D, A, g)), A,
                     comp(ext(D, tysub(G, D, A, g)), D, G, g,
                          proj(D, tysub(G, D, A, g))),
                     var(D, tysub(G, D, A, g)))),
          tmsub(ext(G, A), ext(D, tysub(G, D, A, g)), B,
                pair(G, ext(D, tysub(G, D, A, g)), A,
                     comp(ext(D, tysub(G, D, A, g)), D, G, g,
                          proj(D, tysub(G, D, A, g))),
                     var(D, tysub(G, D, A, g))),
                b))
    : tm(D, tysub(G, D, pi(G, A, B), g));
eq @app-sub (G : ctx, D : ctx, A : ty(G), B : ty(ext(G, A)),
             c : tm(G, pi(G, A, B)), a : tm(G, A), g : hom(D, G))
  tmsub(G, D, tysub(ext(G, A), G, B, pair(G, G, A, id(G), a)), g,
        app(G, A, B, c, a))
    = app(D, tysub(G, D, A, g),
          tysub(ext(G, A), ext(D, tysub(G, D, A, g)), B,
                pair(G, ext(D, tysub(G, D, A, g)), A,
                     comp(ext(D, tysub(G, D, A, g)), D, G, g,
                          proj(D, tysub(G, D, A, g))),
                     var(D, tysub(G, D, A, g)))),
          tmsub(G, D, pi(G, A, B), g, c), tmsub(G, D, A, g, a))
    : tm(D, tysub(G, D, tysub(ext(G, A), G, B, pair(G, G, A, id(G), a)), g));
eq @beta (G : ctx, A : ty(G), B : ty(ext(G, A)), b : tm(ext(G, A), B), a : tm(G, A))
  app(G, A, B, lam(G, A, B, b), a)
    = tmsub(ext(G, A), G, B, pair(G, G, A, id(G), a), b)
    : tm(G, tysub(ext(G, A), G, B, pair(G, G, A, id(G), a)));
eq @eta (G : ctx, A : ty(G), B : ty(ext(G, A)), c : tm(G, pi(G, A, B)))
  lam(G, A, B,
      app(ext(G, A), tysub(G, ext(G, A), A, proj(G, A)),
          tysub(ext(G, A), ext(ext(G, A), tysub(G, ext(G, A), A, proj(G, A))), B,
                pair(G, ext(ext(G, A), tysub(G, ext(G, A), A, proj(G, A))), A,
                     comp(ext(ext(G, A), tysub(G, ext(G, A), A, proj(G, A))),
                          ext(G, A), G, proj(G, A),
                          proj(ext(G, A), tysub(G, ext(G, A), A, proj(G, A)))),
                     var(ext(G, A), tysub(G, ext(G, A), A, proj(G, A))))),
          tmsub(G, ext(G, A), pi(G, A, B), proj(G, A), c),
          var(G, A)))
    = c : tm(G, pi(G, A, B));
"""


def _pt(head: str, *args) -> PTerm:
    return PTerm(head, tuple(a if isinstance(a, PTerm) else PTerm(a) for a in args))


def _tower_stage(k: int) -> list[Decl]:
    """Declarations added by the k-th universe."""
    G, D, g, a, b = _pt("G"), _pt("D"), _pt("g"), _pt("a"), _pt("b")
    ctx = _pt("ctx")

    def hom(d, c):
        return _pt("hom", d, c)

    def ty(c):
        return _pt("ty", c)

    def tm(c, t):
        return _pt("tm", c, t)

    def univ(i, c):
        return _pt(f"univ{i}", c)

    def el(i, c, code):
        return _pt(f"el{i}", c, code)

    def tysub(src, dst, t, sub):
        return _pt("tysub", src, dst, t, sub)

    def tmsub(src, dst, t, sub, term):
        return _pt("tmsub", src, dst, t, sub, term)

    decls: list[Decl] = [
        OpDecl(f"univ{k}", (("G", ctx),), ty(G)),
        OpDecl(f"el{k}", (("G", ctx), ("a", tm(G, univ(k, G)))), ty(G)),
        EqDecl(f"univ{k}-sub", (("D", ctx), ("G", ctx), ("g", hom(D, G))),
               tysub(G, D, univ(k, G), g), univ(k, D), ty(D)),
        EqDecl(f"el{k}-sub",
               (("D", ctx), ("G", ctx), ("g", hom(D, G)), ("a", tm(G, univ(k, G)))),
               tysub(G, D, el(k, G, a), g),
               el(k, D, tmsub(G, D, univ(k, G), g, a)), ty(D)),
    ]

    def picode(lo, hi, c, x, y):
        return _pt(f"picode{lo}_{hi}", c, x, y)

    for lo, hi in sorted((lo, hi) for lo in range(k + 1) for hi in range(k + 1)
                         if max(lo, hi) == k):
        ext_dom = _pt("ext", G, el(lo, G, a))
        decls.append(OpDecl(
            f"picode{lo}_{hi}",
            (("G", ctx), ("a", tm(G, univ(lo, G))),
             ("b", tm(ext_dom, univ(hi, ext_dom)))),
            tm(G, univ(k, G)),
        ))
        decls.append(EqDecl(
            f"el-picode{lo}_{hi}",
            (("G", ctx), ("a", tm(G, univ(lo, G))), ("b", tm(ext_dom, univ(hi, ext_dom)))),
            el(k, G, picode(lo, hi, G, a, b)),
            _pt("pi", G, el(lo, G, a), el(hi, ext_dom, b)),
            ty(G),
        ))
        # b[g+] where g+ pushes g under the binder of the decoded domain
        dom_d = tysub(G, D, el(lo, G, a), g)
        ext_d = _pt("ext", D, dom_d)
        wk = _pt("pair", G, ext_d, el(lo, G, a),
                 _pt("comp", ext_d, D, G, g, _pt("proj", D, dom_d)),
                 _pt("var", D, dom_d))
        decls.append(EqDecl(
            f"picode{lo}_{hi}-sub",
            (("D", ctx), ("G", ctx), ("g", hom(D, G)), ("a", tm(G, univ(lo, G))),
             ("b", tm(ext_dom, univ(hi, ext_dom)))),
            tmsub(G, D, univ(k, G), g, picode(lo, hi, G, a, b)),
            picode(lo, hi, D,
                   tmsub(G, D, univ(lo, G), g, a),
                   tmsub(ext_dom, ext_d, univ(hi, ext_dom), wk, b)),
            tm(D, tysub(G, D, univ(k, G), g)),
        ))

    for lo in range(k):
        decls.append(OpDecl(f"ucode{lo}_{k}", (("G", ctx),), tm(G, univ(k, G))))
        decls.append(EqDecl(
            f"el-ucode{lo}_{k}", (("G", ctx),),
            el(k, G, _pt(f"ucode{lo}_{k}", G)), univ(lo, G), ty(G),
        ))
        decls.append(EqDecl(
            f"ucode{lo}_{k}-sub", (("D", ctx), ("G", ctx), ("g", hom(D, G))),
            tmsub(G, D, univ(k, G), g, _pt(f"ucode{lo}_{k}", G)),
            _pt(f"ucode{lo}_{k}", D),
            tm(D, tysub(G, D, univ(k, G), g)),
        ))
    return decls


def truncate_tower(n: int) -> Presentation:
    """Finite presentation with n universes; a prefix of truncate_tower(n+1)."""
    if n < 1:
        raise GatError("a truncated tower needs at least one universe")
    decls = list(load_presentation(_TOWER_BASE).decls)
    for k in range(n):
        decls.extend(_tower_stage(k))
    return Presentation(tuple(decls))
