"""Sort synthesis for the expression language.

Every expression has at most one sort; synthesis computes it bottom-up,
discharging side conditions by conversion of already-normalized sort
components.  The one inference-like step is recovering the extension
type of a substitution pairing, which is possible exactly when the
underlying substitution is an identity or the term's type is a stuck
substitution along it; otherwise the pairing must be annotated.

A few leaves (universes and universe codes) do not determine their
context; they synthesize against a context hint that flows downward from
the declaration being checked.  Sorts embed their expressions in
conversion-normal form.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import levels
from .conversion import Normalizer, join_levels
from .core import Flags, IsCtx, IsHom, IsTm, IsTy, Mode, SigEntry, Signature, Sort
from .errors import (
    AmbiguousContextError,
    FuelExhausted,
    GatError,
    GuardFailedError,
    HoleError,
    LevelError,
    ModeViolationError,
    ScopeError,
    SortMismatchError,
)
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
    UP_ONLY_NODES,
)
from .levels import LevelSubst, LevelTerm, lsubst_id, lsubst_p, lsubst_pair, lt_check

# Operator symbols of the level-indexed theory with their official
# telescope lengths (every argument counted, including the level context
# and the pieces usually left implicit).  The shipped theory data is
# cross-checked against this table.
TYPING_RULES: dict[str, int] = {
    # the algebra of levels
    "lzero": 0, "lsucc": 1, "lid": 1, "lcomp": 5, "lsub": 4, "lempty": 1,
    "lext": 4, "lproj": 1, "lvar": 1, "lnext": 2, "ljoin": 3, "lrefl": 2,
    # cwf structure
    "terminal": 1, "ext": 3, "id": 2, "comp": 6, "tysub": 5, "tmsub": 6,
    "empty": 2, "pair": 6, "proj": 3, "var": 3,
    # dependent products
    "pi": 4, "lam": 5, "app": 6,
    # the action of level substitution
    "ctxlsub": 4, "sublsub": 6, "tylsub": 5, "tmlsub": 6,
    # universes
    "univ": 3, "el": 4, "picode": 6, "ucode": 5,
    # cumulativity
    "lift": 6, "picodecum": 5,
    # level-indexed products
    "levelpi": 3, "levellam": 4, "levelapp": 5,
}

SORT_RULES: dict[str, int] = {
    "lctx": 0, "lhom": 2, "ltm": 1, "leq": 3,
    "ctx": 1, "hom": 3, "ty": 2, "tm": 3,
}


class Checker:
    """Synthesis engine; one instance per declaration batch, sharing fuel."""

    def __init__(self, sig: Signature, flags: Flags, fuel: int | None = None):
        self.sig = sig
        self.flags = flags
        self.nm = Normalizer(sig, flags, fuel=fuel)

    def norm(self, e: Expr, ambient: int | None) -> Expr:
        return self.nm.normalize(e, ambient)

    # -- level index handling -------------------------------------------------

    def check_uidx(self, l: UIdx, ambient: int | None) -> UIdx:
        if self.flags.mode is Mode.TOWER:
            if not isinstance(l, int):
                raise ModeViolationError("level terms are not available in tower mode")
            if not 0 <= l < self.flags.max_universe:
                raise ModeViolationError(
                    f"universe index out of range: {l} (truncated at {self.flags.max_universe})"
                )
            return l
        if isinstance(l, int):
            raise ModeViolationError("numeric universe indices are not available; use level terms")
        if ambient is None:
            raise LevelError("no ambient level context")
        return levels.canonical(ambient, l)

    def check_lt(self, lo: UIdx, hi: UIdx, ambient: int | None) -> None:
        if self.flags.mode is Mode.TOWER:
            if not lo < hi:
                raise GuardFailedError(f"universe index guard failed: {lo} < {hi} does not hold")
            return
        if lt_check(ambient, lo, hi) is None:
            raise GuardFailedError(
                f"level guard failed: {lo!r} < {hi!r} is not derivable"
            )

    def check_lsubst(self, s: LevelSubst, ambient: int | None) -> LevelSubst:
        if self.flags.mode is Mode.TOWER:
            raise ModeViolationError("level substitution is not available in tower mode")
        if ambient is None or s.source != ambient:
            raise LevelError(
                f"level substitution with source {s.source} used at level context {ambient}"
            )
        return levels.canonical_subst(s)

    # -- synthesis --------------------------------------------------------------

    def synth(self, e: Expr, ambient: int | None, hint: CtxE | None = None) -> Sort:
        return self._synth(e, ambient, hint)[0]

    def elaborate(self, e: Expr, ambient: int | None, hint: CtxE | None = None):
        """Synthesize and return (sort, expression with recovered arguments)."""
        return self._synth(e, ambient, hint)

    def _require(self, cond: bool, message: str) -> None:
        if not cond:
            raise SortMismatchError(message)

    def _gate(self, e: Expr) -> None:
        if self.flags.mode is Mode.TOWER and isinstance(e, UP_ONLY_NODES):
            raise ModeViolationError(
                f"{type(e).__name__} is only available in the level-indexed theory"
            )
        if isinstance(e, (Lift, PiCodeCum)) and not self.flags.cumulative:
            raise ModeViolationError(
                f"{type(e).__name__} requires cumulativity (enable with --cumulative)"
            )
        if (
            isinstance(e, PiCode)
            and self.flags.cumulative
            and not self.flags.keep_doubly_indexed
        ):
            raise ModeViolationError(
                "doubly-indexed product codes are disabled in this cumulative configuration"
            )

    def _synth(self, e: Expr, ambient: int | None, hint: CtxE | None = None):
        self._gate(e)
        match e:
            # contexts ---------------------------------------------------------
            case Terminal():
                return IsCtx(ambient), e
            case Ext(base, ty):
                sb, base2 = self._synth(base, ambient)
                self._require(isinstance(sb, IsCtx), "context extension of a non-context")
                basen = self.norm(base2, ambient)
                st, ty2 = self._synth(ty, ambient, hint=basen)
                self._require(isinstance(st, IsTy), "context extended by a non-type")
                self._require(
                    self.nm.nf_eq(st.ctx, basen),
                    "extension type lives in a different context",
                )
                return IsCtx(ambient), Ext(base2, ty2)
            case CtxLSub(ctx, s):
                s = self.check_lsubst(s, ambient)
                sc, ctx2 = self._synth(ctx, s.target)
                self._require(isinstance(sc, IsCtx), "level substitution into a non-context")
                return IsCtx(ambient), CtxLSub(ctx2, s)
            case CtxConst(name):
                return self._const_sort(name, IsCtx, ambient), e

            # substitutions ------------------------------------------------------
            case Id(None):
                raise HoleError("cannot infer the context of a bare identity")
            case Id(ctx):
                sc, ctx2 = self._synth(ctx, ambient)
                self._require(isinstance(sc, IsCtx), "identity at a non-context")
                ctxn = self.norm(ctx2, ambient)
                return IsHom(ambient, ctxn, ctxn), Id(ctx2)
            case Comp(outer, inner):
                outer, inner = self._fill_comp_holes(outer, inner, ambient)
                so, outer2 = self._synth(outer, ambient)
                si, inner2 = self._synth(inner, ambient)
                self._require(
                    isinstance(so, IsHom) and isinstance(si, IsHom),
                    "composition of non-substitutions",
                )
                self._require(
                    self.nm.nf_eq(si.cod, so.dom),
                    "composition endpoints do not match",
                )
                return IsHom(ambient, si.dom, so.cod), Comp(outer2, inner2)
            case EmptySub(None):
                raise HoleError("cannot infer the context of a bare empty substitution")
            case EmptySub(ctx):
                sc, ctx2 = self._synth(ctx, ambient)
                self._require(isinstance(sc, IsCtx), "empty substitution at a non-context")
                return IsHom(ambient, self.norm(ctx2, ambient), Terminal()), EmptySub(ctx2)
            case SubExt(sub, tm, ty):
                if isinstance(sub, (Id, EmptySub)) and sub.ctx is None:
                    # the paired term determines the underlying domain
                    st0 = self._synth(tm, ambient)[0]
                    if isinstance(st0, IsTm):
                        sub = type(sub)(st0.ctx)
                ss, sub2 = self._synth(sub, ambient)
                self._require(isinstance(ss, IsHom), "pairing onto a non-substitution")
                st, tm2 = self._synth(tm, ambient, hint=ss.dom)
                self._require(isinstance(st, IsTm), "pairing with a non-term")
                self._require(
                    self.nm.nf_eq(st.ctx, ss.dom),
                    "pairing term lives in a different context",
                )
                subn = self.norm(sub2, ambient)
                if ty is None:
                    tyn = self._recover_ext_ty(st.ty, subn, ambient)
                else:
                    sty, ty = self._synth(ty, ambient, hint=ss.cod)
                    self._require(isinstance(sty, IsTy), "pairing annotated with a non-type")
                    self._require(
                        self.nm.nf_eq(sty.ctx, ss.cod),
                        "pairing annotation lives in a different context",
                    )
                    tyn = self.norm(ty, ambient)
                self._require(
                    self.nm.nf_eq(self.norm(TySub(tyn, subn), ambient), st.ty),
                    "pairing term does not have the substituted extension type",
                )
                return (
                    IsHom(ambient, ss.dom, self.norm(Ext(ss.cod, tyn), ambient)),
                    SubExt(sub2, tm2, tyn),
                )
            case Proj(None, _) | Proj(_, None):
                raise HoleError("cannot infer the arguments of a bare projection")
            case Proj(ctx, ty):
                ctxn, ctx2, tyn, ty2 = self._ctx_and_ty(ctx, ty, ambient)
                return IsHom(ambient, Ext(ctxn, tyn), ctxn), Proj(ctx2, ty2)
            case SubLSub(sub, s):
                s = self.check_lsubst(s, ambient)
                ss, sub2 = self._synth(sub, s.target)
                self._require(isinstance(ss, IsHom), "level substitution into a non-substitution")
                return (
                    IsHom(
                        ambient,
                        self.norm(CtxLSub(ss.dom, s), ambient),
                        self.norm(CtxLSub(ss.cod, s), ambient),
                    ),
                    SubLSub(sub2, s),
                )
            case SubConst(name):
                return self._const_sort(name, IsHom, ambient), e

            # types ----------------------------------------------------------------
            case TySub(ty, sub):
                ss, sub2 = self._synth(sub, ambient)
                self._require(isinstance(ss, IsHom), "substitution into a type by a non-morphism")
                st, ty2 = self._synth(ty, ambient, hint=ss.cod)
                self._require(isinstance(st, IsTy), "substitution into a non-type")
                self._require(
                    self.nm.nf_eq(st.ctx, ss.cod),
                    "type substitution endpoint mismatch",
                )
                return IsTy(ambient, ss.dom), TySub(ty2, sub2)
            case Pi(dom, cod):
                sd, dom2 = self._synth(dom, ambient, hint=hint)
                self._require(isinstance(sd, IsTy), "product domain is not a type")
                domn = self.norm(dom2, ambient)
                sc, cod2 = self._synth(cod, ambient, hint=Ext(sd.ctx, domn))
                self._require(isinstance(sc, IsTy), "product codomain is not a type")
                self._require(
                    self.nm.nf_eq(sc.ctx, Ext(sd.ctx, domn)),
                    "product codomain lives in the wrong context",
                )
                return IsTy(ambient, sd.ctx), Pi(dom2, cod2)
            case Univ(l):
                l = self.check_uidx(l, ambient)
                if hint is None:
                    raise AmbiguousContextError(
                        "universe type needs a context; give one via the declared sort"
                    )
                return IsTy(ambient, self.norm(hint, ambient)), Univ(l)
            case El(l, code):
                l = self.check_uidx(l, ambient)
                sc, code2 = self._synth(code, ambient, hint=hint)
                self._require(isinstance(sc, IsTm), "decoding of a non-term")
                self._require(
                    self.nm.nf_eq(sc.ty, Univ(l)),
                    "decoded term is not a code in the named universe",
                )
                return IsTy(ambient, sc.ctx), El(l, code2)
            case LevelPi(body):
                if ambient is None:
                    raise LevelError("no ambient level context")
                inner_hint = None
                if hint is not None:
                    inner_hint = self.norm(CtxLSub(hint, lsubst_p(ambient)), ambient + 1)
                sb, body2 = self._synth(body, ambient + 1, hint=inner_hint)
                self._require(isinstance(sb, IsTy), "level product over a non-type")
                base = self.nm.strengthen(sb.ctx, ambient + 1)
                if base is None:
                    raise SortMismatchError(
                        "level product body must live over a level-weakened context"
                    )
                return IsTy(ambient, self.norm(base, ambient)), LevelPi(body2)
            case TyLSub(ty, s):
                s = self.check_lsubst(s, ambient)
                st, ty2 = self._synth(ty, s.target, hint=self._unapply_lsub_ctx(hint, s, ambient))
                self._require(isinstance(st, IsTy), "level substitution into a non-type")
                return IsTy(ambient, self.norm(CtxLSub(st.ctx, s), ambient)), TyLSub(ty2, s)
            case TyConst(name):
                return self._const_sort(name, IsTy, ambient), e

            # terms -------------------------------------------------------------------
            case Var(None, _) | Var(_, None):
                raise HoleError("cannot infer the context of a bare variable")
            case Var(ctx, ty):
                ctxn, ctx2, tyn, ty2 = self._ctx_and_ty(ctx, ty, ambient)
                return (
                    IsTm(
                        ambient,
                        Ext(ctxn, tyn),
                        self.norm(TySub(tyn, Proj(ctxn, tyn)), ambient),
                    ),
                    Var(ctx2, ty2),
                )
            case TmSub(tm, sub):
                ss, sub2 = self._synth(sub, ambient)
                self._require(isinstance(ss, IsHom), "substitution into a term by a non-morphism")
                st, tm2 = self._synth(tm, ambient, hint=ss.cod)
                self._require(isinstance(st, IsTm), "substitution into a non-term")
                self._require(
                    self.nm.nf_eq(st.ctx, ss.cod),
                    "term substitution endpoint mismatch",
                )
                return (
                    IsTm(ambient, ss.dom, self.norm(TySub(st.ty, sub2), ambient)),
                    TmSub(tm2, sub2),
                )
            case Lam(body):
                sb, body2 = self._synth(body, ambient)
                self._require(isinstance(sb, IsTm), "abstraction over a non-term")
                match sb.ctx:
                    case Ext(base, dom):
                        return IsTm(ambient, base, Pi(dom, sb.ty)), Lam(body2)
                    case _:
                        raise AmbiguousContextError(
                            "abstraction body does not live in an extended context"
                        )
            case App(fn, arg):
                sf, fn2 = self._synth(fn, ambient, hint=hint)
                self._require(isinstance(sf, IsTm), "application of a non-term")
                match sf.ty:
                    case Pi(dom, cod):
                        pass
                    case _:
                        raise SortMismatchError("application of a term without product type")
                sa, arg2 = self._synth(arg, ambient, hint=sf.ctx)
                self._require(isinstance(sa, IsTm), "application to a non-term")
                self._require(
                    self.nm.nf_eq(sa.ctx, sf.ctx), "application across different contexts"
                )
                self._require(
                    self.nm.nf_eq(sa.ty, dom), "application argument has the wrong type"
                )
                result = self.norm(TySub(cod, SubExt(Id(sf.ctx), arg2, dom)), ambient)
                return IsTm(ambient, sf.ctx, result), App(fn2, arg2)
            case PiCode(l, l2, dom, cod):
                l = self.check_uidx(l, ambient)
                l2 = self.check_uidx(l2, ambient)
                sd, dom2 = self._synth(dom, ambient, hint=hint)
                self._require(isinstance(sd, IsTm), "product code domain is not a term")
                self._require(
                    self.nm.nf_eq(sd.ty, Univ(l)), "product code domain is not a code"
                )
                cod_ctx = self.norm(Ext(sd.ctx, El(l, dom2)), ambient)
                sc, cod2 = self._synth(cod, ambient, hint=cod_ctx)
                self._require(isinstance(sc, IsTm), "product code codomain is not a term")
                self._require(
                    self.nm.nf_eq(sc.ctx, cod_ctx),
                    "product code codomain lives in the wrong context",
                )
                self._require(
                    self.nm.nf_eq(sc.ty, Univ(l2)), "product code codomain is not a code"
                )
                joined = self.check_uidx(join_levels(self.flags, l, l2), ambient)
                return IsTm(ambient, sd.ctx, Univ(joined)), PiCode(l, l2, dom2, cod2)
            case PiCodeCum(l, dom, cod):
                l = self.check_uidx(l, ambient)
                sd, dom2 = self._synth(dom, ambient, hint=hint)
                self._require(isinstance(sd, IsTm), "product code domain is not a term")
                self._require(self.nm.nf_eq(sd.ty, Univ(l)), "product code domain is not a code")
                cod_ctx = self.norm(Ext(sd.ctx, El(l, dom2)), ambient)
                sc, cod2 = self._synth(cod, ambient, hint=cod_ctx)
                self._require(isinstance(sc, IsTm), "product code codomain is not a term")
                self._require(
                    self.nm.nf_eq(sc.ctx, cod_ctx),
                    "product code codomain lives in the wrong context",
                )
                self._require(self.nm.nf_eq(sc.ty, Univ(l)), "product code codomain is not a code")
                return IsTm(ambient, sd.ctx, Univ(l)), PiCodeCum(l, dom2, cod2)
            case UnivCode(lo, hi):
                lo = self.check_uidx(lo, ambient)
                hi = self.check_uidx(hi, ambient)
                self.check_lt(lo, hi, ambient)
                if hint is None:
                    raise AmbiguousContextError(
                        "universe code needs a context; give one via the declared sort"
                    )
                return IsTm(ambient, self.norm(hint, ambient), Univ(hi)), UnivCode(lo, hi)
            case Lift(lo, hi, code):
                lo = self.check_uidx(lo, ambient)
                hi = self.check_uidx(hi, ambient)
                self.check_lt(lo, hi, ambient)
                sc, code2 = self._synth(code, ambient, hint=hint)
                self._require(isinstance(sc, IsTm), "lift of a non-term")
                self._require(
                    self.nm.nf_eq(sc.ty, Univ(lo)), "lifted term is not a code in the low universe"
                )
                return IsTm(ambient, sc.ctx, Univ(hi)), Lift(lo, hi, code2)
            case LevelLam(body):
                if ambient is None:
                    raise LevelError("no ambient level context")
                inner_hint = None
                if hint is not None:
                    inner_hint = self.norm(CtxLSub(hint, lsubst_p(ambient)), ambient + 1)
                sb, body2 = self._synth(body, ambient + 1, hint=inner_hint)
                self._require(isinstance(sb, IsTm), "level abstraction over a non-term")
                base = self.nm.strengthen(sb.ctx, ambient + 1)
                if base is None:
                    raise SortMismatchError(
                        "level abstraction body must live over a level-weakened context"
                    )
                return IsTm(ambient, self.norm(base, ambient), LevelPi(sb.ty)), LevelLam(body2)
            case LevelApp(fn, l):
                if ambient is None:
                    raise LevelError("no ambient level context")
                l = self.check_uidx(l, ambient)
                sf, fn2 = self._synth(fn, ambient, hint=hint)
                self._require(isinstance(sf, IsTm), "level application of a non-term")
                match sf.ty:
                    case LevelPi(body):
                        pass
                    case _:
                        raise SortMismatchError(
                            "level application of a term without level-product type"
                        )
                result = self.norm(
                    TyLSub(body, lsubst_pair(lsubst_id(ambient), l)), ambient
                )
                return IsTm(ambient, sf.ctx, result), LevelApp(fn2, l)
            case TmLSub(tm, s):
                s = self.check_lsubst(s, ambient)
                st, tm2 = self._synth(tm, s.target, hint=self._unapply_lsub_ctx(hint, s, ambient))
                self._require(isinstance(st, IsTm), "level substitution into a non-term")
                return (
                    IsTm(
                        ambient,
                        self.norm(CtxLSub(st.ctx, s), ambient),
                        self.norm(TyLSub(st.ty, s), ambient),
                    ),
                    TmLSub(tm2, s),
                )
            case TmConst(name):
                return self._const_sort(name, IsTm, ambient), e
        raise GatError(f"cannot synthesize a sort for {e!r}")

    # -- helpers ---------------------------------------------------------------

    def _ctx_and_ty(self, ctx, ty, ambient):
        sc, ctx2 = self._synth(ctx, ambient)
        self._require(isinstance(sc, IsCtx), "projection/variable at a non-context")
        ctxn = self.norm(ctx2, ambient)
        st, ty2 = self._synth(ty, ambient, hint=ctxn)
        self._require(isinstance(st, IsTy), "projection/variable at a non-type")
        self._require(
            self.nm.nf_eq(st.ctx, ctxn), "projection/variable type lives elsewhere"
        )
        return ctxn, ctx2, self.norm(ty2, ambient), ty2

    def _unapply_lsub_ctx(self, hint, s: LevelSubst, ambient) -> CtxE | None:
        """Best-effort inverse of level substitution on a context hint, so a
        universe leaf under e[s] can still pick up its context."""
        if hint is None:
            return None
        hint = self.norm(hint, ambient)
        if s.is_identity():
            return hint
        match hint:
            case Terminal():
                return Terminal()
            case CtxLSub(base, s2) if self.nm.nf_eq(s2, s):
                return base
            case Ext(base, TyLSub(t, s2)) if self.nm.nf_eq(s2, s):
                inner = self._unapply_lsub_ctx(base, s, ambient)
                return Ext(inner, t) if inner is not None else None
            case _:
                return None

    def _fill_comp_holes(self, outer, inner, ambient):
        """id and <> composed with a known substitution need no arguments."""
        if isinstance(outer, (Id, EmptySub)) and outer.ctx is None:
            si = self.synth(inner, ambient)
            if isinstance(si, IsHom):
                outer = type(outer)(si.cod)
        if isinstance(inner, Id) and inner.ctx is None:
            so = self.synth(outer, ambient)
            if isinstance(so, IsHom):
                inner = Id(so.dom)
        return outer, inner

    def _recover_ext_ty(self, tm_ty: TyE, subn: SubE, ambient) -> TyE:
        """Find T with T[sub] equal to the term's type, where recoverable."""
        match subn:
            case Id(_):
                return tm_ty
            case _:
                pass
        match tm_ty:
            case TySub(base, g) if self.nm.nf_eq(g, subn):
                return base
            case _:
                pass
        raise HoleError(
            "cannot infer the extension type of this pairing; "
            "annotate it as < sub, term | type >"
        )

    def _const_sort(self, name: str, expected, ambient) -> Sort:
        entry = self.sig.lookup(name)
        if entry is None:
            raise ScopeError(f"unknown name: {name}")
        if not isinstance(entry.sort, expected):
            raise SortMismatchError(
                f"{name} is declared as {type(entry.sort).__name__}, used otherwise"
            )
        if self.flags.mode is Mode.UP and entry.sort.lctx != ambient:
            raise LevelError(
                f"{name} is declared at level context {entry.sort.lctx}, "
                f"used at {ambient}; apply a level substitution"
            )
        return entry.sort


def synth(
    sig: Signature,
    e: Expr,
    flags: Flags,
    ambient: int | None = None,
    hint: CtxE | None = None,
    fuel: int | None = None,
) -> Sort:
    """Sort of a well-formed expression, or a GatError subclass."""
    if flags.mode is Mode.TOWER:
        ambient = None
    elif ambient is None:
        ambient = 0
    return Checker(sig, flags, fuel=fuel).synth(e, ambient, hint=hint)


def postulate(sig: Signature, name: str, sort: Sort) -> Signature:
    return sig.extend(SigEntry(name, sort))


def define(sig: Signature, name: str, sort: Sort, body: Expr) -> Signature:
    return sig.extend(SigEntry(name, sort, body=body))


# ---------------------------------------------------------------------------
# hole filling

# Elided arguments (bare id/p/q/<> and the v(k) sugar) are recovered by
# pushing the expected sort of a checked expression down through the
# places where it stays determined.  This is best-effort: whatever stays
# unfilled is reported by synthesis.


class Filler:
    def __init__(self, checker: Checker, ambient: int | None):
        self.checker = checker
        self.ambient = ambient

    def _decompose_ext(self, ctx):
        if ctx is None:
            return None
        match self.checker.norm(ctx, self.ambient):
            case Ext(base, ty):
                return base, ty
            case _:
                return None

    def fill(self, e: Expr, ctx_exp: CtxE | None, ty_exp: TyE | None) -> Expr:
        match e:
            case Var(None, None):
                got = self._decompose_ext(ctx_exp)
                if got is not None:
                    return Var(got[0], got[1])
                return e
            case Lam(body):
                if ty_exp is not None and ctx_exp is not None:
                    match self.checker.norm(ty_exp, self.ambient):
                        case Pi(dom, cod):
                            return Lam(self.fill(body, Ext(ctx_exp, dom), cod))
                        case _:
                            pass
                return Lam(self.fill(body, None, None))
            case LevelLam(body) if ctx_exp is not None and self.ambient is not None:
                inner_ctx = CtxLSub(ctx_exp, lsubst_p(self.ambient))
                inner_ty = None
                if ty_exp is not None:
                    match self.checker.norm(ty_exp, self.ambient):
                        case LevelPi(b):
                            inner_ty = b
                        case _:
                            pass
                inner = Filler(self.checker, self.ambient + 1)
                return LevelLam(inner.fill(body, inner_ctx, inner_ty))
            case App(fn, arg):
                return App(self.fill(fn, ctx_exp, None), self.fill(arg, ctx_exp, None))
            case LevelApp(fn, l):
                return LevelApp(self.fill(fn, ctx_exp, None), l)
            case TmSub(tm, sub):
                sub2, cod = self.fill_sub(sub, ctx_exp)
                return TmSub(self.fill(tm, cod, None), sub2)
            case TySub(ty, sub):
                sub2, cod = self.fill_sub(sub, ctx_exp)
                return TySub(self.fill(ty, cod, None), sub2)
            case El(l, code):
                return El(l, self.fill(code, ctx_exp, Univ(l)))
            case Lift(lo, hi, code):
                return Lift(lo, hi, self.fill(code, ctx_exp, Univ(lo)))
            case PiCode(lo, hi, dom, cod):
                dom2 = self.fill(dom, ctx_exp, Univ(lo))
                inner = Ext(ctx_exp, El(lo, dom2)) if ctx_exp is not None else None
                return PiCode(lo, hi, dom2, self.fill(cod, inner, Univ(hi)))
            case PiCodeCum(l, dom, cod):
                dom2 = self.fill(dom, ctx_exp, Univ(l))
                inner = Ext(ctx_exp, El(l, dom2)) if ctx_exp is not None else None
                return PiCodeCum(l, dom2, self.fill(cod, inner, Univ(l)))
            case Pi(dom, cod):
                dom2 = self.fill(dom, ctx_exp, None)
                inner = Ext(ctx_exp, dom2) if ctx_exp is not None else None
                return Pi(dom2, self.fill(cod, inner, None))
            case LevelPi(body) if self.ambient is not None:
                inner_ctx = (
                    CtxLSub(ctx_exp, lsubst_p(self.ambient)) if ctx_exp is not None else None
                )
                inner = Filler(self.checker, self.ambient + 1)
                return LevelPi(inner.fill(body, inner_ctx, None))
            case Ext(base, ty):
                base2 = self.fill(base, None, None)
                return Ext(base2, self.fill(ty, base2, None))
            case SubExt(sub, tm, ann):
                sub2, _ = self.fill_sub(sub, None)
                return SubExt(sub2, self.fill(tm, None, None), ann)
            case Comp(_, _) | Id(_) | EmptySub(_) | Proj(_, _):
                sub2, _ = self.fill_sub(e, None)
                return sub2
            case TmLSub(tm, s):
                inner = Filler(self.checker, s.target)
                return TmLSub(inner.fill(tm, None, None), s)
            case TyLSub(ty, s):
                inner = Filler(self.checker, s.target)
                return TyLSub(inner.fill(ty, None, None), s)
            case SubLSub(sub, s):
                inner = Filler(self.checker, s.target)
                return SubLSub(inner.fill_sub(sub, None)[0], s)
            case CtxLSub(ctx, s):
                inner = Filler(self.checker, s.target)
                return CtxLSub(inner.fill(ctx, None, None), s)
            case _:
                return e

    def fill_sub(self, s: SubE, dom_exp: CtxE | None):
        """Fill a substitution against an expected domain; returns the filled
        substitution and its codomain where determined."""
        match s:
            case Id(None) if dom_exp is not None:
                return Id(dom_exp), dom_exp
            case Id(ctx):
                return s, ctx
            case EmptySub(None) if dom_exp is not None:
                return EmptySub(dom_exp), Terminal()
            case EmptySub(_):
                return s, Terminal()
            case Proj(None, None):
                got = self._decompose_ext(dom_exp)
                if got is not None:
                    return Proj(got[0], got[1]), got[0]
                return s, None
            case Proj(ctx, _):
                return s, ctx
            case Comp(outer, inner):
                inner2, mid = self.fill_sub(inner, dom_exp)
                outer2, cod = self.fill_sub(outer, mid)
                return Comp(outer2, inner2), cod
            case SubExt(sub, tm, ann):
                sub2, cod0 = self.fill_sub(sub, dom_exp)
                tm2 = self.fill(tm, dom_exp, None)
                cod = Ext(cod0, ann) if cod0 is not None and ann is not None else None
                return SubExt(sub2, tm2, ann), cod
            case SubLSub(sub, lsv):
                inner = Filler(self.checker, lsv.target)
                sub2, _ = inner.fill_sub(sub, None)
                return SubLSub(sub2, lsv), None
            case SubConst(name):
                entry = self.checker.sig.lookup(name)
                if entry is not None and isinstance(entry.sort, IsHom):
                    return s, entry.sort.cod
                return s, None
            case _:
                return s, None


# ---------------------------------------------------------------------------
# declaration checking


@dataclass(frozen=True)
class DeclResult:
    name: str
    kind: str  # level-ctx | postulate | def | check | check-eq
    verdict: str  # ok | error | unknown
    sort: str | None = None
    message: str | None = None
    steps: int = 0
    line: int = 0

    def render(self) -> str:
        if self.verdict == "ok":
            suffix = f" : {self.sort}" if self.sort else ""
            return f"ok {self.name}{suffix}"
        if self.verdict == "unknown":
            return f"unknown {self.name}: {self.message}"
        return f"fail {self.name}: {self.message}"


@dataclass(frozen=True)
class CheckReport:
    results: tuple[DeclResult, ...]
    elapsed: float

    @property
    def ok(self) -> bool:
        return all(r.verdict == "ok" for r in self.results)

    @property
    def hard_failure(self) -> bool:
        return any(r.verdict == "error" for r in self.results)

    @property
    def undecided(self) -> bool:
        return any(r.verdict == "unknown" for r in self.results)


def _sort_of_sortexpr(checker: Checker, sexpr, ambient):
    from .parser import SortCtx, SortHom, SortTm, SortTy

    match sexpr:
        case SortCtx():
            return IsCtx(ambient)
        case SortHom(dom, cod):
            sd = checker.synth(dom, ambient)
            sc = checker.synth(cod, ambient)
            if not (isinstance(sd, IsCtx) and isinstance(sc, IsCtx)):
                raise SortMismatchError("hom endpoints must be contexts")
            return IsHom(ambient, checker.norm(dom, ambient), checker.norm(cod, ambient))
        case SortTy(ctx):
            ctx = Filler(checker, ambient).fill(ctx, None, None)
            sc = checker.synth(ctx, ambient)
            if not isinstance(sc, IsCtx):
                raise SortMismatchError("ty index must be a context")
            return IsTy(ambient, checker.norm(ctx, ambient))
        case SortTm(ctx, ty):
            ctx = Filler(checker, ambient).fill(ctx, None, None)
            sc = checker.synth(ctx, ambient)
            if not isinstance(sc, IsCtx):
                raise SortMismatchError("tm index must be a context")
            ctxn = checker.norm(ctx, ambient)
            ty = Filler(checker, ambient).fill(ty, ctxn, None)
            st = checker.synth(ty, ambient, hint=ctxn)
            if not isinstance(st, IsTy):
                raise SortMismatchError("tm classifier must be a type")
            if not checker.nm.nf_eq(st.ctx, ctxn):
                raise SortMismatchError("tm classifier lives in a different context")
            return IsTm(ambient, ctxn, checker.norm(ty, ambient))
    raise SortMismatchError(f"unsupported sort expression: {sexpr!r}")


def _fill_for(checker: Checker, e, sort: Sort, ambient):
    filler = Filler(checker, ambient)
    match sort:
        case IsTm(_, ctx, ty):
            return filler.fill(e, ctx, ty)
        case IsTy(_, ctx):
            return filler.fill(e, ctx, None)
        case IsHom(_, dom, _):
            return filler.fill_sub(e, dom)[0] if not isinstance(e, (int,)) else e
        case _:
            return filler.fill(e, None, None)


def _hint_of(sort: Sort):
    match sort:
        case IsTm(_, ctx, _) | IsTy(_, ctx):
            return ctx
        case _:
            return None


def check_decl(sig: Signature, decl, flags: Flags):
    """Process one declaration; returns the extended signature and a result."""
    import time as _time

    from . import conversion, levels as _levels, parser as P, printer

    started = _time.perf_counter()
    ambient = getattr(decl, "ambient", None)
    if flags.mode is Mode.TOWER:
        ambient = None
    del started  # per-declaration timing stays out of reports for determinism
    checker = Checker(sig, flags)
    try:
        match decl:
            case P.DLevelCtx(size, line):
                return sig, DeclResult(f"level-ctx {size}", "level-ctx", "ok", line=line)
            case P.DPostulate(kind, name, sexpr, _, line):
                sort = _sort_of_sortexpr(checker, sexpr, ambient)
                sig2 = postulate(sig, name, sort)
                return sig2, DeclResult(name, "postulate", "ok",
                                        sort=printer.print_sort(sort),
                                        steps=checker.nm.steps, line=line)
            case P.DDef(name, body, annot, _, line):
                expected = None
                if annot is not None:
                    expected = _sort_of_sortexpr(checker, annot, ambient)
                    body = _fill_for(checker, body, expected, ambient)
                sort, elaborated = checker.elaborate(
                    body, ambient, hint=_hint_of(expected) if expected else None
                )
                if expected is not None and not checker.nm.sorts_eq(sort, expected):
                    raise SortMismatchError(
                        f"definition has sort {printer.print_sort(sort)}, "
                        f"declared {printer.print_sort(expected)}"
                    )
                sig2 = define(sig, name, sort, elaborated)
                return sig2, DeclResult(name, "def", "ok", sort=printer.print_sort(sort),
                                        steps=checker.nm.steps, line=line)
            case P.DCheck(expr, sexpr, _, line):
                name = decl.name
                if isinstance(sexpr, P.SortLevel):
                    _levels.check_scope(ambient or 0, expr)
                    return sig, DeclResult(name, "check", "ok", sort="level", line=line)
                if isinstance(sexpr, P.SortLSub):
                    if expr.target != sexpr.target or expr.source != ambient:
                        raise SortMismatchError(
                            f"level substitution has shape lhom({expr.source},{expr.target})"
                        )
                    return sig, DeclResult(name, "check", "ok",
                                           sort=f"lsub({sexpr.target})", line=line)
                expected = _sort_of_sortexpr(checker, sexpr, ambient)
                filled = _fill_for(checker, expr, expected, ambient)
                sort = checker.synth(filled, ambient, hint=_hint_of(expected))
                if not checker.nm.sorts_eq(sort, expected):
                    raise SortMismatchError(
                        f"expression has sort {printer.print_sort(sort)}, "
                        f"declared {printer.print_sort(expected)}"
                    )
                return sig, DeclResult(name, "check", "ok", sort=printer.print_sort(sort),
                                       steps=checker.nm.steps, line=line)
            case P.DCheckEq(name, lhs, rhs, sexpr, _, line):
                if isinstance(sexpr, P.SortLevel):
                    ok = _levels.level_eq(ambient or 0, lhs, rhs)
                    if not ok:
                        return sig, DeclResult(
                            name, "check-eq", "error",
                            message="level terms have different normal forms: "
                            f"{printer.print_level_nf(_levels.normalize(ambient or 0, lhs))} vs "
                            f"{printer.print_level_nf(_levels.normalize(ambient or 0, rhs))}",
                            line=line)
                    return sig, DeclResult(name, "check-eq", "ok", sort="level", line=line)
                if isinstance(sexpr, P.SortLSub):
                    if not (lhs.target == rhs.target == sexpr.target
                            and lhs.source == rhs.source == ambient):
                        raise SortMismatchError("level substitutions have different shapes")
                    if not _levels.lsubst_eq(lhs, rhs):
                        return sig, DeclResult(name, "check-eq", "error",
                                               message="level substitutions differ", line=line)
                    return sig, DeclResult(name, "check-eq", "ok",
                                           sort=f"lsub({sexpr.target})", line=line)
                expected = _sort_of_sortexpr(checker, sexpr, ambient)
                hint = _hint_of(expected)
                lhs2 = _fill_for(checker, lhs, expected, ambient)
                rhs2 = _fill_for(checker, rhs, expected, ambient)
                sl, lhs3 = checker.elaborate(lhs2, ambient, hint=hint)
                sr, rhs3 = checker.elaborate(rhs2, ambient, hint=hint)
                for side, got in (("left", sl), ("right", sr)):
                    if not checker.nm.sorts_eq(got, expected):
                        raise SortMismatchError(
                            f"{side} side has sort {printer.print_sort(got)}, "
                            f"declared {printer.print_sort(expected)}"
                        )
                verdict = conversion.convertible(
                    sig, flags, lhs3, rhs3, ambient=ambient, fuel=flags.fuel
                )
                if verdict is conversion.Verdict.YES:
                    return sig, DeclResult(name, "check-eq", "ok",
                                           sort=printer.print_sort(expected),
                                           steps=checker.nm.steps, line=line)
                if verdict is conversion.Verdict.NO:
                    nm = conversion.Normalizer(sig, flags)
                    left_nf = printer.print_expr(nm.normalize(lhs3, ambient))
                    right_nf = printer.print_expr(nm.normalize(rhs3, ambient))
                    return sig, DeclResult(
                        name, "check-eq", "error",
                        message=f"not convertible: {left_nf} vs {right_nf}", line=line)
                return sig, DeclResult(name, "check-eq", "unknown",
                                       message="conversion fuel exhausted", line=line)
    except FuelExhausted as ex:
        return sig, DeclResult(getattr(decl, "name", "?"), _decl_kind(decl), "unknown",
                               message=str(ex), line=decl.line)
    except GatError as ex:
        return sig, DeclResult(getattr(decl, "name", "?"), _decl_kind(decl), "error",
                               message=f"{type(ex).__name__}: {ex}", line=decl.line)
    raise GatError(f"unsupported declaration: {decl!r}")


def _decl_kind(decl) -> str:
    from . import parser as P

    return {
        P.DLevelCtx: "level-ctx", P.DPostulate: "postulate", P.DDef: "def",
        P.DCheck: "check", P.DCheckEq: "check-eq",
    }.get(type(decl), "decl")


def check_decls(sig: Signature, decls, flags: Flags):
    """Run a declaration stream; stops extending the signature on hard errors
    of postulates/definitions but keeps checking the remainder."""
    import time as _time

    started = _time.perf_counter()
    results = []
    for decl in decls:
        sig, result = check_decl(sig, decl, flags)
        results.append(result)
    return sig, CheckReport(tuple(results), _time.perf_counter() - started)
