"""Decision procedure for judgmental equality.

Strategy: innermost rewriting.  Substitution and level-substitution
propagation rules run first, then the categorical laws, then beta and
universe decoding, with eta-contraction last.  Substitution application
on a stuck head fuses into a single composite, so normal forms carry
substitutions only on constants and variables.  Level positions are kept
in canonical form throughout (the readback of the semilattice normal
form) and compared by normal form, never rewritten in place.

Two normal forms are compared structurally except that the extension
type stored on a substitution pairing is ignored (with equal sorts it is
determined up to conversion) and a folded identity at an extended
context matches its surjective pairing.

Whether normalize-and-compare is complete for the full theories is not
known; a No verdict means "not identified by the oriented system".  Fuel
exhaustion is a distinct Unknown verdict, never silently collapsed into
Yes or No.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import levels
from .core import Flags, IsCtx, IsHom, IsTm, IsTy, Mode, Signature, Sort
from .errors import FuelExhausted, GatError
from .expr import (
    App,
    Comp,
    CtxConst,
    CtxE,
    CtxLSub,
    El,
    EmptySub,
    Expr,
    Ext,
    Id,
    Lam,
    LevelApp,
    LevelLam,
    LevelPi,
    Lift,
    Pi,
    PiCode,
    PiCodeCum,
    Proj,
    SubConst,
    SubE,
    SubExt,
    SubLSub,
    Terminal,
    TmConst,
    TmE,
    TmLSub,
    TmSub,
    TyConst,
    TyE,
    TyLSub,
    TySub,
    UIdx,
    UnivCode,
    Univ,
    Var,
)
from .levels import (
    LevelSubst,
    LevelTerm,
    canonical,
    canonical_subst,
    lsubst_apply,
    lsubst_comp,
    lsubst_id,
    lsubst_lift,
    lsubst_p,
    lsubst_pair,
)


class Verdict(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class TraceStep:
    rule: str
    path: tuple[str, ...]

    def __str__(self):
        return f"{self.rule} @ {'.'.join(self.path) or '<root>'}"


@dataclass(frozen=True)
class NormalForm:
    expr: Expr
    steps: int
    trace: tuple[TraceStep, ...] | None = None


@dataclass(frozen=True)
class RewriteRule:
    """Metadata for one oriented equation of the rewrite system."""

    name: str
    equation: str  # label of the equation in the shipped theory data
    orientation: str  # "lr" or "rl" relative to the equation as shipped
    pattern: str
    template: str


_R = RewriteRule

# fmt: off
REWRITE_RULES: dict[str, RewriteRule] = {r.name: r for r in [
    # categorical laws
    _R("comp-id-left", "comp-id-left", "lr", "id o g", "g"),
    _R("comp-id-right", "comp-id-right", "lr", "g o id", "g"),
    _R("comp-assoc", "comp-assoc", "lr", "(f o g) o h", "f o (g o h)"),
    _R("tysub-id", "tysub-id", "lr", "A[id]", "A"),
    _R("tmsub-id", "tmsub-id", "lr", "a[id]", "a"),
    _R("tysub-comp", "tysub-comp", "rl", "A[f][g]", "A[f o g]"),
    _R("tmsub-comp", "tmsub-comp", "rl", "a[f][g]", "a[f o g]"),
    _R("id-terminal", "id-terminal", "lr", "id(1)", "<>(1)"),
    _R("empty-comp", "empty-comp", "lr", "<>(G) o g", "<>(D)"),
    _R("proj-ext", "proj-ext", "lr", "p o <g, a>", "g"),
    _R("var-ext", "var-ext", "lr", "q[<g, a>]", "a"),
    _R("ext-comp", "ext-comp", "lr", "<f, a> o g", "<f o g, a[g]>"),
    _R("id-ext", "id-ext", "rl", "<p, q>", "id(G.A)"),
    # dependent products
    _R("beta", "beta", "lr", "app(lam(b), a)", "b[<id, a>]"),
    _R("eta", "eta", "lr", "lam(app(c[p], q))", "c"),
    _R("pi-sub", "pi-sub", "lr", "Pi(A,B)[g]", "Pi(A[g], B[<g o p, q>])"),
    _R("lam-sub", "lam-sub", "lr", "lam(b)[g]", "lam(b[<g o p, q>])"),
    _R("app-sub", "app-sub", "lr", "app(c,a)[g]", "app(c[g], a[g])"),
    # level-substitution functor laws
    _R("ctx-lsub-id", "ctx-lsub-id", "lr", "G[lid]", "G"),
    _R("ctx-lsub-comp", "ctx-lsub-comp", "rl", "G[s][t]", "G[s o t]"),
    _R("sub-lsub-id", "sub-lsub-id", "lr", "g[lid]", "g"),
    _R("sub-lsub-comp", "sub-lsub-comp", "rl", "g[s][t]", "g[s o t]"),
    _R("ty-lsub-id", "ty-lsub-id", "lr", "A[lid]", "A"),
    _R("ty-lsub-comp", "ty-lsub-comp", "rl", "A[s][t]", "A[s o t]"),
    _R("tm-lsub-id", "tm-lsub-id", "lr", "a[lid]", "a"),
    _R("tm-lsub-comp", "tm-lsub-comp", "rl", "a[s][t]", "a[s o t]"),
    # level substitution preserves the cwf structure strictly
    _R("terminal-lsub", "terminal-lsub", "lr", "1[s]", "1"),
    _R("ext-lsub", "ext-lsub", "lr", "(G.A)[s]", "G[s].A[s]"),
    _R("id-lsub", "id-lsub", "lr", "id(G)[s]", "id(G[s])"),
    _R("comp-lsub", "comp-lsub", "lr", "(f o g)[s]", "f[s] o g[s]"),
    _R("empty-lsub", "empty-lsub", "lr", "<>(G)[s]", "<>(G[s])"),
    _R("pair-lsub", "pair-lsub", "lr", "<f, a>[s]", "<f[s], a[s]>"),
    _R("proj-lsub", "proj-lsub", "lr", "p(G,A)[s]", "p(G[s], A[s])"),
    _R("var-lsub", "var-lsub", "lr", "q(G,A)[s]", "q(G[s], A[s])"),
    _R("tysub-lsub", "tysub-lsub", "lr", "A[g][s]", "A[s][g[s]]"),
    _R("tmsub-lsub", "tmsub-lsub", "lr", "a[g][s]", "a[s][g[s]]"),
    _R("pi-lsub", "pi-lsub", "lr", "Pi(A,B)[s]", "Pi(A[s], B[s])"),
    _R("lam-lsub", "lam-lsub", "lr", "lam(b)[s]", "lam(b[s])"),
    _R("app-lsub", "app-lsub", "lr", "app(c,a)[s]", "app(c[s], a[s])"),
    # universes and decoding
    _R("el-picode", "el-picode", "lr", "El(l\\/l2, pi{l,l2}(a,b))", "Pi(El(l,a), El(l2,b))"),
    _R("el-ucode", "el-ucode", "lr", "El(m, ucode{l,m})", "U(l)"),
    _R("univ-sub", "univ-sub", "lr", "U(l)[g]", "U(l)"),
    _R("el-sub", "el-sub", "lr", "El(l,a)[g]", "El(l, a[g])"),
    _R("picode-sub", "picode-sub", "lr", "pi{l,l2}(a,b)[g]", "pi{l,l2}(a[g], b[<g o p, q>])"),
    _R("ucode-sub", "ucode-sub", "lr", "ucode{l,m}[g]", "ucode{l,m}"),
    _R("univ-lsub", "univ-lsub", "lr", "U(l)[s]", "U(l[s])"),
    _R("el-lsub", "el-lsub", "lr", "El(l,a)[s]", "El(l[s], a[s])"),
    _R("picode-lsub", "picode-lsub", "lr", "pi{l,l2}(a,b)[s]", "pi{l[s],l2[s]}(a[s], b[s])"),
    _R("ucode-lsub", "ucode-lsub", "lr", "ucode{l,m}[s]", "ucode{l[s],m[s]}"),
    # cumulativity
    _R("el-lift", "el-lift", "lr", "El(m, lift{l,m}(a))", "El(l, a)"),
    _R("lift-sub", "lift-sub", "lr", "lift{l,m}(a)[g]", "lift{l,m}(a[g])"),
    _R("lift-picode", "lift-picode", "lr", "lift{l,m}(pi{l}(a,b))",
       "pi{m}(lift{l,m}(a), lift{l,m}(b))"),
    _R("lift-ucode", "lift-ucode", "lr", "lift{l,m}(ucode{k,l})", "ucode{k,m}"),
    _R("lift-lsub", "lift-lsub", "lr", "lift{l,m}(a)[s]", "lift{l[s],m[s]}(a[s])"),
    _R("el-picodecum", "el-picodecum", "lr", "El(l, pi{l}(a,b))", "Pi(El(l,a), El(l,b))"),
    _R("picodecum-sub", "picodecum-sub", "lr", "pi{l}(a,b)[g]", "pi{l}(a[g], b[<g o p, q>])"),
    _R("picodecum-lsub", "picodecum-lsub", "lr", "pi{l}(a,b)[s]", "pi{l[s]}(a[s], b[s])"),
    # level-indexed products
    _R("level-beta", "level-beta", "lr", "lapp(llam(b), l)", "b[{lid, l}]"),
    _R("level-eta", "level-eta", "lr", "llam(lapp(c[lp], lq))", "c"),
    _R("levelpi-sub", "levelpi-sub", "lr", "forall(B)[g]", "forall(B[g[lp]])"),
    _R("levellam-sub", "levellam-sub", "lr", "llam(b)[g]", "llam(b[g[lp]])"),
    _R("levelapp-sub", "levelapp-sub", "lr", "lapp(c,l)[g]", "lapp(c[g], l)"),
    _R("levelpi-lsub", "levelpi-lsub", "lr", "forall(B)[s]", "forall(B[{s o lp, lq}])"),
    _R("levellam-lsub", "levellam-lsub", "lr", "llam(b)[s]", "llam(b[{s o lp, lq}])"),
    _R("levelapp-lsub", "levelapp-lsub", "lr", "lapp(c,l)[s]", "lapp(c[s], l[s])"),
    # engine-internal steps, not equations of the theory
    _R("unfold", "<definition>", "lr", "<name>", "<body>"),
    _R("terminal-eta", "<derived: id-terminal, empty-comp>", "lr", "g : hom(G,1)", "<>(G)"),
]}
# fmt: on


def join_levels(flags: Flags, a: UIdx, b: UIdx) -> UIdx:
    if flags.mode is Mode.TOWER:
        return max(a, b)
    return levels.LJoin(a, b)


def map_children(e: Expr, ambient: int | None, fn) -> Expr:
    """Rebuild a node with fn(child, child_ambient, field) applied to each
    expression child.  Level-substitution application re-scopes its inner
    expression to the substitution's target; level binders add a variable."""
    match e:
        case Ext(b, t):
            return Ext(fn(b, ambient, "base"), fn(t, ambient, "ty"))
        case CtxLSub(c, s):
            return CtxLSub(fn(c, s.target, "ctx"), s)
        case Id(c):
            return Id(fn(c, ambient, "ctx") if c is not None else None)
        case Comp(f, g):
            return Comp(fn(f, ambient, "outer"), fn(g, ambient, "inner"))
        case EmptySub(c):
            return EmptySub(fn(c, ambient, "ctx") if c is not None else None)
        case SubExt(f, a, t):
            return SubExt(
                fn(f, ambient, "sub"),
                fn(a, ambient, "tm"),
                fn(t, ambient, "ty") if t is not None else None,
            )
        case Proj(c, t):
            return Proj(
                fn(c, ambient, "ctx") if c is not None else None,
                fn(t, ambient, "ty") if t is not None else None,
            )
        case SubLSub(g, s):
            return SubLSub(fn(g, s.target, "sub"), s)
        case TySub(t, g):
            return TySub(fn(t, ambient, "ty"), fn(g, ambient, "sub"))
        case Pi(a, b):
            return Pi(fn(a, ambient, "dom"), fn(b, ambient, "cod"))
        case El(l, a):
            return El(l, fn(a, ambient, "code"))
        case LevelPi(b):
            return LevelPi(fn(b, None if ambient is None else ambient + 1, "body"))
        case TyLSub(t, s):
            return TyLSub(fn(t, s.target, "ty"), s)
        case Var(c, t):
            return Var(
                fn(c, ambient, "ctx") if c is not None else None,
                fn(t, ambient, "ty") if t is not None else None,
            )
        case TmSub(a, g):
            return TmSub(fn(a, ambient, "tm"), fn(g, ambient, "sub"))
        case Lam(b):
            return Lam(fn(b, ambient, "body"))
        case App(c, a):
            return App(fn(c, ambient, "fn"), fn(a, ambient, "arg"))
        case PiCode(l, l2, a, b):
            return PiCode(l, l2, fn(a, ambient, "dom"), fn(b, ambient, "cod"))
        case PiCodeCum(l, a, b):
            return PiCodeCum(l, fn(a, ambient, "dom"), fn(b, ambient, "cod"))
        case Lift(lo, hi, a):
            return Lift(lo, hi, fn(a, ambient, "code"))
        case LevelLam(b):
            return LevelLam(fn(b, None if ambient is None else ambient + 1, "body"))
        case LevelApp(c, l):
            return LevelApp(fn(c, ambient, "fn"), l)
        case _:
            return e


def child_ambient(e: Expr, field: str, ambient: int | None) -> int | None:
    match e:
        case CtxLSub(_, s) | SubLSub(_, s) | TyLSub(_, s) | TmLSub(_, s):
            return s.target
        case LevelPi(_) | LevelLam(_):
            return None if ambient is None else ambient + 1
        case _:
            return ambient


class Normalizer:
    """Shared state for one batch of conversion queries: fuel, cache, trace."""

    def __init__(self, sig: Signature, flags: Flags, fuel: int | None = None,
                 want_trace: bool = False):
        self.sig = sig
        self.flags = flags
        self.fuel = flags.fuel if fuel is None else fuel
        self.steps = 0
        self.trace: list[TraceStep] | None = [] if want_trace else None
        self._cache: dict[tuple[Expr, int | None], Expr] = {}

    # -- fuel and trace ------------------------------------------------------

    def _spend(self, rule: str, path: tuple[str, ...]) -> None:
        self.steps += 1
        if self.steps > self.fuel:
            raise FuelExhausted(f"conversion fuel exhausted after {self.fuel} steps")
        if self.trace is not None:
            self.trace.append(TraceStep(rule, path))

    def _quiet_normalize(self, e: Expr, ambient: int | None) -> Expr:
        """Normalize without recording trace steps (internal side queries)."""
        saved, self.trace = self.trace, None
        try:
            return self.normalize(e, ambient)
        finally:
            self.trace = saved

    # -- level canonicalization ----------------------------------------------

    def canon_uidx(self, level: UIdx, ambient: int | None) -> UIdx:
        if isinstance(level, int):
            return level
        if ambient is None:
            raise GatError("level term used outside the level-indexed theory")
        return canonical(ambient, level)

    def canon_node(self, e: Expr, ambient: int | None) -> Expr:
        match e:
            case Univ(l):
                return Univ(self.canon_uidx(l, ambient))
            case El(l, a):
                return El(self.canon_uidx(l, ambient), a)
            case PiCode(l, l2, a, b):
                return PiCode(self.canon_uidx(l, ambient), self.canon_uidx(l2, ambient), a, b)
            case PiCodeCum(l, a, b):
                return PiCodeCum(self.canon_uidx(l, ambient), a, b)
            case UnivCode(lo, hi):
                return UnivCode(self.canon_uidx(lo, ambient), self.canon_uidx(hi, ambient))
            case Lift(lo, hi, a):
                return Lift(self.canon_uidx(lo, ambient), self.canon_uidx(hi, ambient), a)
            case LevelApp(c, l):
                return LevelApp(c, self.canon_uidx(l, ambient))
            case CtxLSub(c, s):
                return CtxLSub(c, canonical_subst(s))
            case SubLSub(c, s):
                return SubLSub(c, canonical_subst(s))
            case TyLSub(c, s):
                return TyLSub(c, canonical_subst(s))
            case TmLSub(c, s):
                return TmLSub(c, canonical_subst(s))
            case _:
                return e

    def _apply_level(self, s: LevelSubst, level: UIdx) -> UIdx:
        return canonical(s.source, lsubst_apply(s, level))

    # -- structural sort helpers (partial; defined on normal forms) -----------

    def sub_dom(self, g: SubE, ambient: int | None) -> CtxE | None:
        match g:
            case Id(c) | EmptySub(c):
                return c
            case Comp(_, inner):
                return self.sub_dom(inner, ambient)
            case SubExt(f, _, _):
                return self.sub_dom(f, ambient)
            case Proj(c, t):
                return Ext(c, t) if c is not None and t is not None else None
            case SubLSub(f, s):
                base = self.sub_dom(f, s.target)
                return None if base is None else self._quiet_normalize(CtxLSub(base, s), ambient)
            case SubConst(name):
                entry = self.sig.lookup(name)
                if entry is not None and isinstance(entry.sort, IsHom):
                    return entry.sort.dom
        return None

    def sub_cod(self, g: SubE, ambient: int | None) -> CtxE | None:
        match g:
            case Id(c):
                return c
            case EmptySub(_):
                return Terminal()
            case Comp(outer, _):
                return self.sub_cod(outer, ambient)
            case SubExt(f, _, t):
                base = self.sub_cod(f, ambient)
                return Ext(base, t) if base is not None and t is not None else None
            case Proj(c, _):
                return c
            case SubLSub(f, s):
                base = self.sub_cod(f, s.target)
                return None if base is None else self._quiet_normalize(CtxLSub(base, s), ambient)
            case SubConst(name):
                entry = self.sig.lookup(name)
                if entry is not None and isinstance(entry.sort, IsHom):
                    return entry.sort.cod
        return None

    def tm_ctx(self, a: TmE, ambient: int | None) -> CtxE | None:
        match a:
            case Var(c, t):
                return Ext(c, t) if c is not None and t is not None else None
            case TmSub(_, g):
                return self.sub_dom(g, ambient)
            case TmLSub(a0, s):
                base = self.tm_ctx(a0, s.target)
                return None if base is None else self._quiet_normalize(CtxLSub(base, s), ambient)
            case Lam(b):
                match self.tm_ctx(b, ambient):
                    case Ext(base, _):
                        return base
                    case _:
                        return None
            case App(c, x):
                got = self.tm_ctx(c, ambient)
                return got if got is not None else self.tm_ctx(x, ambient)
            case PiCode(_, _, x, _) | PiCodeCum(_, x, _) | Lift(_, _, x):
                return self.tm_ctx(x, ambient)
            case LevelApp(c, _):
                return self.tm_ctx(c, ambient)
            case LevelLam(b):
                if ambient is None:
                    return None
                inner = self.tm_ctx(b, ambient + 1)
                return None if inner is None else self.strengthen(inner, ambient + 1)
            case TmConst(name):
                entry = self.sig.lookup(name)
                if entry is not None and isinstance(entry.sort, IsTm):
                    return entry.sort.ctx
        return None

    def tm_ty(self, a: TmE, ambient: int | None) -> TyE | None:
        match a:
            case Var(c, t):
                if c is None or t is None:
                    return None
                return TySub(t, Proj(c, t))
            case TmSub(a0, g):
                inner = self.tm_ty(a0, ambient)
                return None if inner is None else TySub(inner, g)
            case TmLSub(a0, s):
                inner = self.tm_ty(a0, s.target)
                return None if inner is None else TyLSub(inner, s)
            case Lam(b):
                inner_ty = self.tm_ty(b, ambient)
                match self.tm_ctx(b, ambient):
                    case Ext(_, dom) if inner_ty is not None:
                        return Pi(dom, inner_ty)
                    case _:
                        return None
            case App(c, x):
                fn_ty = self.tm_ty(c, ambient)
                if fn_ty is None:
                    return None
                match self._quiet_normalize(fn_ty, ambient):
                    case Pi(dom, cod):
                        ctx = self.tm_ctx(c, ambient) or self.tm_ctx(x, ambient)
                        if ctx is None:
                            return None
                        return TySub(cod, SubExt(Id(ctx), x, dom))
                    case _:
                        return None
            case PiCode(l, l2, _, _):
                return Univ(self.canon_uidx(join_levels(self.flags, l, l2), ambient))
            case PiCodeCum(l, _, _):
                return Univ(l)
            case UnivCode(_, hi) | Lift(_, hi, _):
                return Univ(hi)
            case LevelLam(b):
                inner = self.tm_ty(b, None if ambient is None else ambient + 1)
                return None if inner is None else LevelPi(inner)
            case LevelApp(c, l):
                fn_ty = self.tm_ty(c, ambient)
                if fn_ty is None or ambient is None:
                    return None
                match self._quiet_normalize(fn_ty, ambient):
                    case LevelPi(body):
                        return TyLSub(body, lsubst_pair(lsubst_id(ambient), l))
                    case _:
                        return None
            case TmConst(name):
                entry = self.sig.lookup(name)
                if entry is not None and isinstance(entry.sort, IsTm):
                    return entry.sort.ty
        return None

    def wk(self, g: SubE, ty: TyE, ambient: int | None) -> SubE | None:
        """Push a substitution under one binder of the given domain type."""
        dom = self.sub_dom(g, ambient)
        if dom is None:
            return None
        under = TySub(ty, g)
        return SubExt(Comp(g, Proj(dom, under)), Var(dom, under), ty)

    # -- strengthening: inverse image of the level weakening -------------------

    def strengthen(self, e, ambient: int):
        """Remove the last level variable (index ambient-1) if unused.

        Succeeds exactly when e is the image of something under the level
        weakening; since weakening does not renumber earlier variables the
        tree comes back unchanged except that level-substitution sources
        shrink by one.  A constant sitting at the outer ambient blocks it:
        it depends on the whole level context.  Returns None on failure.
        """
        drop = ambient - 1

        def used(level: UIdx) -> bool:
            if isinstance(level, int):
                return False
            return any(v == drop for v, _ in levels.nf_of(level).atoms)

        def go(node):
            match node:
                case CtxLSub(c, s) | SubLSub(c, s) | TyLSub(c, s) | TmLSub(c, s):
                    if any(used(entry) for entry in s.entries):
                        return None
                    return type(node)(c, LevelSubst(s.source - 1, s.target, s.entries))
                case CtxConst(_) | SubConst(_) | TyConst(_) | TmConst(_):
                    return None
                case Univ(l) | UnivCode(l, _) | PiCode(l, _, _, _) | PiCodeCum(l, _, _):
                    pass  # level fields handled uniformly below
                case _:
                    pass
            for field in getattr(node, "__dataclass_fields__", ()):
                value = getattr(node, field)
                if isinstance(value, (int, LevelTerm)) and field != "index":
                    if used(value):
                        return None
            bad = False

            def walk(child, amb, field):
                nonlocal bad
                got = go(child)
                if got is None:
                    bad = True
                    return child
                return got

            rebuilt = map_children(node, ambient, walk)
            return None if bad else rebuilt

        return go(e)

    # -- the rewrite engine ----------------------------------------------------

    def normalize(self, e: Expr, ambient: int | None, path: tuple[str, ...] = ()) -> Expr:
        key = (e, ambient)
        if self.trace is None and key in self._cache:
            return self._cache[key]
        current = e
        while True:
            current = self.canon_node(
                map_children(
                    current, ambient, lambda c, amb, f: self.normalize(c, amb, path + (f,))
                ),
                ambient,
            )
            stepped = self.head_step(current, ambient)
            if stepped is None:
                break
            rule, current = stepped
            self._spend(rule, path)
        if self.trace is None:
            self._cache[key] = current
            self._cache[(current, ambient)] = current
        return current

    def head_step(self, e: Expr, ambient: int | None) -> tuple[str, Expr] | None:
        for fn in (self._step_sub, self._step_ctx, self._step_ty, self._step_tm,
                   self._step_const):
            got = fn(e, ambient)
            if got is not None:
                return got
        return None

    def _step_const(self, e, ambient):
        match e:
            case CtxConst(name) | SubConst(name) | TyConst(name) | TmConst(name):
                entry = self.sig.lookup(name)
                if entry is not None and entry.body is not None:
                    return ("unfold", entry.body)
        return None

    def _step_ctx(self, e, ambient):
        match e:
            case CtxLSub(c, s):
                if s.is_identity():
                    return ("ctx-lsub-id", c)
                match c:
                    case CtxLSub(c0, t):
                        return ("ctx-lsub-comp", CtxLSub(c0, canonical_subst(lsubst_comp(t, s))))
                    case Terminal():
                        return ("terminal-lsub", Terminal())
                    case Ext(b, t):
                        return ("ext-lsub", Ext(CtxLSub(b, s), TyLSub(t, s)))
        return None

    def _step_sub(self, e, ambient):
        match e:
            case Id(Terminal()):
                return ("id-terminal", EmptySub(Terminal()))
            case SubExt(Proj(c1, t1), Var(c2, t2), _) if (
                c1 is not None and t1 is not None
                and self.nf_eq(c1, c2) and self.nf_eq(t1, t2)
            ):
                return ("id-ext", Id(Ext(c1, t1)))
            case Comp(Id(_), g):
                return ("comp-id-left", g)
            case Comp(g, Id(_)):
                return ("comp-id-right", g)
            case Comp(Comp(f, g), h):
                return ("comp-assoc", Comp(f, Comp(g, h)))
            case Comp(EmptySub(_), g):
                dom = self.sub_dom(g, ambient)
                if dom is not None:
                    return ("empty-comp", EmptySub(dom))
            case Comp(SubExt(f, a, t), g):
                return ("ext-comp", SubExt(Comp(f, g), TmSub(a, g), t))
            case Comp(Proj(_, _), SubExt(f, _, _)):
                return ("proj-ext", f)
            case SubLSub(g, s):
                if s.is_identity():
                    return ("sub-lsub-id", g)
                match g:
                    case SubLSub(g0, t):
                        return ("sub-lsub-comp", SubLSub(g0, canonical_subst(lsubst_comp(t, s))))
                    case Id(c):
                        return ("id-lsub", Id(CtxLSub(c, s) if c is not None else None))
                    case Comp(f, h):
                        return ("comp-lsub", Comp(SubLSub(f, s), SubLSub(h, s)))
                    case EmptySub(c):
                        return ("empty-lsub", EmptySub(CtxLSub(c, s) if c is not None else None))
                    case SubExt(f, a, t):
                        return ("pair-lsub", SubExt(
                            SubLSub(f, s), TmLSub(a, s),
                            TyLSub(t, s) if t is not None else None,
                        ))
                    case Proj(c, t) if c is not None and t is not None:
                        return ("proj-lsub", Proj(CtxLSub(c, s), TyLSub(t, s)))
        # any morphism into the terminal context equals the empty one;
        # derivable from id-terminal and empty-comp, which make hom(G,1)
        # a singleton
        match e:
            case EmptySub(_):
                return None
            case Id(_) | Comp(_, _) | SubExt(_, _, _) | Proj(_, _) | SubLSub(_, _) | SubConst(_):
                if self.sub_cod(e, ambient) == Terminal():
                    dom = self.sub_dom(e, ambient)
                    if dom is not None:
                        return ("terminal-eta", EmptySub(dom))
        return None

    def _step_ty(self, e, ambient):
        match e:
            case TySub(a, Id(_)):
                return ("tysub-id", a)
            case TySub(Pi(a, b), g):
                lifted = self.wk(g, a, ambient)
                if lifted is not None:
                    return ("pi-sub", Pi(TySub(a, g), TySub(b, lifted)))
            case TySub(Univ(l), _):
                return ("univ-sub", Univ(l))
            case TySub(El(l, a), g):
                return ("el-sub", El(l, TmSub(a, g)))
            case TySub(LevelPi(b), g) if ambient is not None:
                return ("levelpi-sub", LevelPi(TySub(b, SubLSub(g, lsubst_p(ambient)))))
            case TySub(TySub(a, f), g):
                return ("tysub-comp", TySub(a, Comp(f, g)))
            case TyLSub(a, s):
                if s.is_identity():
                    return ("ty-lsub-id", a)
                match a:
                    case TyLSub(a0, t):
                        return ("ty-lsub-comp", TyLSub(a0, canonical_subst(lsubst_comp(t, s))))
                    case TySub(a0, g):
                        return ("tysub-lsub", TySub(TyLSub(a0, s), SubLSub(g, s)))
                    case Pi(x, y):
                        return ("pi-lsub", Pi(TyLSub(x, s), TyLSub(y, s)))
                    case Univ(l):
                        return ("univ-lsub", Univ(self._apply_level(s, l)))
                    case El(l, x):
                        return ("el-lsub", El(self._apply_level(s, l), TmLSub(x, s)))
                    case LevelPi(b):
                        return ("levelpi-lsub", LevelPi(TyLSub(b, lsubst_lift(s))))
            case El(_, PiCode(l, l2, a, b)):
                return ("el-picode", Pi(El(l, a), El(l2, b)))
            case El(_, UnivCode(lo, _)):
                return ("el-ucode", Univ(lo))
            case El(_, Lift(lo, _, a)):
                return ("el-lift", El(lo, a))
            case El(_, PiCodeCum(l, a, b)):
                return ("el-picodecum", Pi(El(l, a), El(l, b)))
        return None

    def _step_tm(self, e, ambient):
        match e:
            case TmSub(a, Id(_)):
                return ("tmsub-id", a)
            case TmSub(Var(_, _), SubExt(_, b, _)):
                return ("var-ext", b)
            case TmSub(Lam(b), g):
                match self.tm_ctx(b, ambient):
                    case Ext(_, dom):
                        lifted = self.wk(g, dom, ambient)
                        if lifted is not None:
                            return ("lam-sub", Lam(TmSub(b, lifted)))
                    case _:
                        pass
            case TmSub(App(c, a), g):
                return ("app-sub", App(TmSub(c, g), TmSub(a, g)))
            case TmSub(PiCode(l, l2, a, b), g):
                lifted = self.wk(g, El(l, a), ambient)
                if lifted is not None:
                    return ("picode-sub", PiCode(l, l2, TmSub(a, g), TmSub(b, lifted)))
            case TmSub(PiCodeCum(l, a, b), g):
                lifted = self.wk(g, El(l, a), ambient)
                if lifted is not None:
                    return ("picodecum-sub", PiCodeCum(l, TmSub(a, g), TmSub(b, lifted)))
            case TmSub(UnivCode(lo, hi), _):
                return ("ucode-sub", UnivCode(lo, hi))
            case TmSub(Lift(lo, hi, a), g):
                return ("lift-sub", Lift(lo, hi, TmSub(a, g)))
            case TmSub(LevelLam(b), g) if ambient is not None:
                return ("levellam-sub", LevelLam(TmSub(b, SubLSub(g, lsubst_p(ambient)))))
            case TmSub(LevelApp(c, l), g):
                return ("levelapp-sub", LevelApp(TmSub(c, g), l))
            case TmSub(TmSub(a, f), g):
                return ("tmsub-comp", TmSub(a, Comp(f, g)))
            case App(Lam(b), a):
                filled = self._beta_pair(b, a, ambient)
                if filled is not None:
                    return ("beta", TmSub(b, filled))
            case Lam(App(f, Var(c, t))) if c is not None and t is not None:
                got = self._eta(f, c, t)
                if got is not None:
                    return ("eta", got)
            case Lift(lo, hi, PiCodeCum(_, a, b)):
                return ("lift-picode", PiCodeCum(hi, Lift(lo, hi, a), Lift(lo, hi, b)))
            case Lift(_, hi, UnivCode(k, _)):
                return ("lift-ucode", UnivCode(k, hi))
            case LevelApp(LevelLam(b), l) if ambient is not None:
                return ("level-beta", TmLSub(b, lsubst_pair(lsubst_id(ambient), l)))
            case LevelLam(LevelApp(c, lv)) if (
                ambient is not None and lv == levels.LVar(ambient)
            ):
                contracted = self.strengthen(c, ambient + 1)
                if contracted is not None:
                    return ("level-eta", contracted)
            case TmLSub(a, s):
                if s.is_identity():
                    return ("tm-lsub-id", a)
                match a:
                    case TmLSub(a0, t):
                        return ("tm-lsub-comp", TmLSub(a0, canonical_subst(lsubst_comp(t, s))))
                    case Var(c, t) if c is not None and t is not None:
                        return ("var-lsub", Var(CtxLSub(c, s), TyLSub(t, s)))
                    case TmSub(a0, g):
                        return ("tmsub-lsub", TmSub(TmLSub(a0, s), SubLSub(g, s)))
                    case Lam(b):
                        return ("lam-lsub", Lam(TmLSub(b, s)))
                    case App(c, x):
                        return ("app-lsub", App(TmLSub(c, s), TmLSub(x, s)))
                    case PiCode(l, l2, x, y):
                        return ("picode-lsub", PiCode(
                            self._apply_level(s, l), self._apply_level(s, l2),
                            TmLSub(x, s), TmLSub(y, s)))
                    case PiCodeCum(l, x, y):
                        return ("picodecum-lsub", PiCodeCum(
                            self._apply_level(s, l), TmLSub(x, s), TmLSub(y, s)))
                    case UnivCode(lo, hi):
                        return ("ucode-lsub", UnivCode(
                            self._apply_level(s, lo), self._apply_level(s, hi)))
                    case Lift(lo, hi, x):
                        return ("lift-lsub", Lift(
                            self._apply_level(s, lo), self._apply_level(s, hi), TmLSub(x, s)))
                    case LevelLam(b):
                        return ("levellam-lsub", LevelLam(TmLSub(b, lsubst_lift(s))))
                    case LevelApp(c, l):
                        return ("levelapp-lsub", LevelApp(TmLSub(c, s), self._apply_level(s, l)))
        return None

    def _beta_pair(self, body, arg, ambient) -> SubExt | None:
        match self.tm_ctx(body, ambient):
            case Ext(base, dom):
                return SubExt(Id(base), arg, dom)
            case _:
                pass
        base = self.tm_ctx(arg, ambient)
        dom = self.tm_ty(arg, ambient)
        if base is not None and dom is not None:
            return SubExt(Id(base), arg, self._quiet_normalize(dom, ambient))
        return None

    def _eta(self, f, ctx, ty):
        """Match f = c[.. o p(ctx,ty)] and return c with the weakening stripped."""
        match f:
            case TmSub(c, g):
                rest = self._strip_proj(g, ctx, ty)
                if rest == "all":
                    return c
                if rest is not None:
                    return TmSub(c, rest)
        return None

    def _strip_proj(self, g, ctx, ty):
        match g:
            case Proj(c, t) if self.nf_eq(c, ctx) and self.nf_eq(t, ty):
                return "all"
            case EmptySub(Ext(Terminal(), t)) if ctx == Terminal() and self.nf_eq(t, ty):
                # over the terminal context the projection is the empty morphism
                return "all"
            case Comp(f, h):
                rest = self._strip_proj(h, ctx, ty)
                if rest == "all":
                    return f
                if rest is not None:
                    return Comp(f, rest)
        return None

    # -- comparison -------------------------------------------------------------

    def nf_eq(self, a, b) -> bool:
        """Structural equality of normal forms.

        Levels compare by normal form, the extension type on substitution
        pairings is ignored, and a folded identity at an extended context
        matches its surjective pairing.
        """
        if a is b:
            return True
        if a is None or b is None or isinstance(a, (int, str)) or isinstance(b, (int, str)):
            return a == b
        if isinstance(a, LevelTerm) and isinstance(b, LevelTerm):
            return levels.nf_of(a) == levels.nf_of(b)
        if isinstance(a, LevelSubst) and isinstance(b, LevelSubst):
            return (
                (a.source, a.target) == (b.source, b.target)
                and all(self.nf_eq(x, y) for x, y in zip(a.entries, b.entries))
            )
        match a, b:
            case SubExt(f1, t1, _), SubExt(f2, t2, _):
                return self.nf_eq(f1, f2) and self.nf_eq(t1, t2)
            case Id(Ext(c, t)), SubExt(_, _, _):
                return self.nf_eq(SubExt(Proj(c, t), Var(c, t), None), b)
            case SubExt(_, _, _), Id(Ext(c, t)):
                return self.nf_eq(a, SubExt(Proj(c, t), Var(c, t), None))
            case _:
                if type(a) is not type(b):
                    return False
                fields = getattr(a, "__dataclass_fields__", None)
                if fields is None:
                    return a == b
                return all(self.nf_eq(getattr(a, f), getattr(b, f)) for f in fields)

    def sorts_eq(self, s1: Sort, s2: Sort) -> bool:
        match s1, s2:
            case IsCtx(n1), IsCtx(n2):
                return n1 == n2
            case IsHom(n1, d1, c1), IsHom(n2, d2, c2):
                return n1 == n2 and self.nf_eq(d1, d2) and self.nf_eq(c1, c2)
            case IsTy(n1, c1), IsTy(n2, c2):
                return n1 == n2 and self.nf_eq(c1, c2)
            case IsTm(n1, c1, t1), IsTm(n2, c2, t2):
                return n1 == n2 and self.nf_eq(c1, c2) and self.nf_eq(t1, t2)
            case _:
                return False


# ---------------------------------------------------------------------------
# module-level API


def normalize_expr(
    sig: Signature,
    flags: Flags,
    e: Expr,
    ambient: int | None = None,
    fuel: int | None = None,
    want_trace: bool = False,
) -> NormalForm:
    nm = Normalizer(sig, flags, fuel=fuel, want_trace=want_trace)
    nf = nm.normalize(e, ambient)
    return NormalForm(nf, nm.steps, tuple(nm.trace) if nm.trace is not None else None)


def convertible(
    sig: Signature,
    flags: Flags,
    e1: Expr,
    e2: Expr,
    ambient: int | None = None,
    fuel: int | None = None,
) -> Verdict:
    nm = Normalizer(sig, flags, fuel=fuel)
    try:
        n1 = nm.normalize(e1, ambient)
        n2 = nm.normalize(e2, ambient)
    except FuelExhausted:
        return Verdict.UNKNOWN
    return Verdict.YES if nm.nf_eq(n1, n2) else Verdict.NO


def whnf_subst(
    sig: Signature, flags: Flags, g: SubE, ambient: int | None = None, fuel: int | None = None
) -> SubE:
    """Canonical spine form of a substitution, folded identities expanded."""
    nm = Normalizer(sig, flags, fuel=fuel)

    def expand(s: SubE) -> SubE:
        match s:
            case Id(Ext(c, t)):
                return SubExt(Proj(c, t), Var(c, t), t)
            case SubExt(f, a, t):
                return SubExt(expand(f), a, t)
            case _:
                return s

    return expand(nm.normalize(g, ambient))


def canon_expr(sig: Signature, flags: Flags, e: Expr, ambient: int | None = None) -> Expr:
    """Canonicalize every level position without applying any rewrite rule."""
    nm = Normalizer(sig, flags, fuel=0)

    def go(node, amb, _field=None):
        return nm.canon_node(map_children(node, amb, go), amb)

    return go(e, ambient)


def replay(
    sig: Signature,
    flags: Flags,
    e: Expr,
    trace: tuple[TraceStep, ...],
    ambient: int | None = None,
) -> Expr:
    """Re-apply a recorded trace step by step, validating that each step is a
    genuine single rule application at its recorded position.  Apply to the
    canonicalized query; the result matches the normal form up to level NFs."""
    nm = Normalizer(sig, flags, fuel=len(trace) + 1)
    current = canon_expr(sig, flags, e, ambient)
    for step in trace:
        current = _apply_at(nm, current, step, ambient)
    return current


def _apply_at(nm: Normalizer, e: Expr, step: TraceStep, ambient: int | None) -> Expr:
    def go(node, path, amb):
        if not path:
            node = nm.canon_node(node, amb)
            got = nm.head_step(node, amb)
            if got is None or got[0] != step.rule:
                raise GatError(f"trace replay failed: {step} does not apply")
            return got[1]
        field = path[0]
        child = getattr(node, field)
        rebuilt = {f: getattr(node, f) for f in node.__dataclass_fields__}
        rebuilt[field] = go(child, path[1:], child_ambient(node, field, amb))
        return type(node)(**rebuilt)

    return go(e, step.path, ambient)
