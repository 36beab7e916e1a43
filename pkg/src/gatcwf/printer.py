"""Render expressions back to the surface syntax.

The output reparses to the same tree: `parse_expr(print_expr(e))` is the
identity on well-scoped expressions (level substitutions print as
literal tuples, so the ambient context of the parse must match).
"""

from __future__ import annotations

from .expr import (
    App,
    Comp,
    CtxConst,
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
    SubExt,
    SubLSub,
    Terminal,
    TmConst,
    TmLSub,
    TmSub,
    TyConst,
    TyLSub,
    TySub,
    UIdx,
    UnivCode,
    Univ,
    Var,
)
from .levels import LevelNF, LevelSubst, LJoin, LNext, LVar, LevelTerm

_DOT, _COMP, _ATOM = 0, 1, 2  # precedence levels: extension < composition < postfix


def print_level(level: UIdx) -> str:
    if isinstance(level, int):
        return str(level)
    return _level(level, 0)


def _level(t: LevelTerm, prec: int) -> str:
    match t:
        case LVar(i):
            return f"a{i}"
        case LNext(arg):
            return f"{_level(arg, 2)}^+"
        case LJoin(left, right):
            s = f"{_level(left, 1)} \\/ {_level(right, 2)}"
            return f"({s})" if prec >= 2 else s
    raise TypeError(f"not a level term: {t!r}")


def print_level_subst(s: LevelSubst) -> str:
    return "{" + ", ".join(print_level(e) for e in s.entries) + "}"


def print_level_nf(nf: LevelNF) -> str:
    from .levels import readback

    return print_level(readback(nf))


def print_expr(e: Expr) -> str:
    return _expr(e, _DOT)


def _paren(s: str, prec: int, level: int) -> str:
    return f"({s})" if prec > level else s


def _expr(e: Expr, prec: int) -> str:
    match e:
        case Terminal():
            return "1"
        case Ext(base, ty):
            return _paren(f"{_expr(base, _DOT)} . {_expr(ty, _COMP)}", prec, _DOT)
        case CtxConst(name) | SubConst(name) | TyConst(name) | TmConst(name):
            return name
        case Id(None):
            return "id"
        case Id(ctx):
            return f"id({_expr(ctx, _DOT)})"
        case Comp(outer, inner):
            return _paren(f"{_expr(outer, _COMP)} o {_expr(inner, _ATOM)}", prec, _COMP)
        case EmptySub(None):
            return "<>"
        case EmptySub(ctx):
            return f"<>({_expr(ctx, _DOT)})"
        case SubExt(sub, tm, None):
            return f"< {_expr(sub, _DOT)}, {_expr(tm, _DOT)} >"
        case SubExt(sub, tm, ty):
            return f"< {_expr(sub, _DOT)}, {_expr(tm, _DOT)} | {_expr(ty, _DOT)} >"
        case Proj(None, None):
            return "p"
        case Proj(ctx, ty):
            return f"p({_expr(ctx, _DOT)}, {_expr(ty, _DOT)})"
        case Var(None, None):
            return "q"
        case Var(ctx, ty):
            return f"q({_expr(ctx, _DOT)}, {_expr(ty, _DOT)})"
        case CtxLSub(inner, s) | SubLSub(inner, s) | TyLSub(inner, s) | TmLSub(inner, s):
            return f"{_expr(inner, _ATOM)}[{print_level_subst(s)}]"
        case TySub(inner, sub) | TmSub(inner, sub):
            return f"{_expr(inner, _ATOM)}[{_expr(sub, _DOT)}]"
        case Pi(dom, cod):
            return f"Pi({_expr(dom, _DOT)}, {_expr(cod, _DOT)})"
        case Univ(level):
            return f"U({print_level(level)})"
        case El(level, code):
            return f"El({print_level(level)}, {_expr(code, _DOT)})"
        case LevelPi(body):
            return f"forall({_expr(body, _DOT)})"
        case Lam(body):
            return f"lam({_expr(body, _DOT)})"
        case App(fn, arg):
            return f"app({_expr(fn, _DOT)}, {_expr(arg, _DOT)})"
        case PiCode(lo, hi, dom, cod):
            return (
                f"pi{{{print_level(lo)},{print_level(hi)}}}"
                f"({_expr(dom, _DOT)}, {_expr(cod, _DOT)})"
            )
        case PiCodeCum(level, dom, cod):
            return f"pi{{{print_level(level)}}}({_expr(dom, _DOT)}, {_expr(cod, _DOT)})"
        case UnivCode(lo, hi):
            return f"ucode{{{print_level(lo)},{print_level(hi)}}}"
        case Lift(lo, hi, code):
            return f"lift{{{print_level(lo)},{print_level(hi)}}}({_expr(code, _DOT)})"
        case LevelLam(body):
            return f"llam({_expr(body, _DOT)})"
        case LevelApp(fn, level):
            return f"lapp({_expr(fn, _DOT)}, {print_level(level)})"
    raise TypeError(f"not an expression: {e!r}")


def print_sort(sort) -> str:
    from .core import IsCtx, IsHom, IsTm, IsTy

    match sort:
        case IsCtx(_):
            return "ctx"
        case IsHom(_, dom, cod):
            return f"hom({print_expr(dom)}, {print_expr(cod)})"
        case IsTy(_, ctx):
            return f"ty({print_expr(ctx)})"
        case IsTm(_, ctx, ty):
            return f"tm({print_expr(ctx)}, {print_expr(ty)})"
    raise TypeError(f"not a sort: {sort!r}")
