"""Raw abstract syntax of the explicit-substitution calculi.

There are four syntactic categories: contexts, substitutions, types and
terms.  Nodes store every argument of the corresponding operator that is
not recoverable from subterms; in particular projections and variables
carry their context and type.  Substitution extension carries the type
of the new slot because it cannot be reconstructed from the extended
substitution alone; the parser leaves it None and the kernel fills it in
where it is recoverable.

Level-substitution application nodes (`*LSub`) and the level-indexed
product formers only occur in the level-indexed theory; universe indices
are external naturals in tower mode and level terms otherwise.

Variables are reached combinator-style: `Var` is the variable bound
last, earlier ones are `Var` weakened by `Proj` substitutions.  `Id`,
`EmptySub`, `Proj` and `Var` may carry None fields, standing for elided
arguments that checking resolves against an expected sort.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .levels import LevelSubst, LevelTerm

UIdx = Union[int, LevelTerm]  # external natural (tower) or level term (up)


# ---------------------------------------------------------------------------
# contexts


@dataclass(frozen=True)
class Terminal:
    """The empty context."""


@dataclass(frozen=True)
class Ext:
    base: "CtxE"
    ty: "TyE"


@dataclass(frozen=True)
class CtxLSub:
    ctx: "CtxE"
    levels: LevelSubst


@dataclass(frozen=True)
class CtxConst:
    name: str


CtxE = Union[Terminal, Ext, CtxLSub, CtxConst]


# ---------------------------------------------------------------------------
# substitutions


@dataclass(frozen=True)
class Id:
    ctx: "CtxE | None"


@dataclass(frozen=True)
class Comp:
    outer: "SubE"
    inner: "SubE"


@dataclass(frozen=True)
class EmptySub:
    ctx: "CtxE | None"


@dataclass(frozen=True)
class SubExt:
    sub: "SubE"
    tm: "TmE"
    ty: "TyE | None"  # type of the new slot, over the codomain of sub


@dataclass(frozen=True)
class Proj:
    ctx: "CtxE | None"
    ty: "TyE | None"


@dataclass(frozen=True)
class SubLSub:
    sub: "SubE"
    levels: LevelSubst


@dataclass(frozen=True)
class SubConst:
    name: str


SubE = Union[Id, Comp, EmptySub, SubExt, Proj, SubLSub, SubConst]


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class TySub:
    ty: "TyE"
    sub: "SubE"


@dataclass(frozen=True)
class Pi:
    dom: "TyE"
    cod: "TyE"


@dataclass(frozen=True)
class Univ:
    level: UIdx


@dataclass(frozen=True)
class El:
    """Decoding of a universe code into a type."""

    level: UIdx
    code: "TmE"


@dataclass(frozen=True)
class LevelPi:
    """Product of a family of types over a fresh level variable."""

    body: "TyE"


@dataclass(frozen=True)
class TyLSub:
    ty: "TyE"
    levels: LevelSubst


@dataclass(frozen=True)
class TyConst:
    name: str


TyE = Union[TySub, Pi, Univ, El, LevelPi, TyLSub, TyConst]


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    """The variable bound last in Ext(ctx, ty)."""

    ctx: "CtxE | None"
    ty: "TyE | None"


@dataclass(frozen=True)
class TmSub:
    tm: "TmE"
    sub: "SubE"


@dataclass(frozen=True)
class Lam:
    body: "TmE"


@dataclass(frozen=True)
class App:
    fn: "TmE"
    arg: "TmE"


@dataclass(frozen=True)
class PiCode:
    """Code for a product, doubly indexed; lands in the join universe."""

    dom_level: UIdx
    cod_level: UIdx
    dom: "TmE"
    cod: "TmE"


@dataclass(frozen=True)
class PiCodeCum:
    """Code for a product with both pieces in one universe (cumulative mode)."""

    level: UIdx
    dom: "TmE"
    cod: "TmE"


@dataclass(frozen=True)
class UnivCode:
    """Code for the lo-th universe inside the hi-th; requires lo < hi."""

    lo: UIdx
    hi: UIdx


@dataclass(frozen=True)
class Lift:
    """Embed a code from the lo-th universe into the hi-th; requires lo < hi."""

    lo: UIdx
    hi: UIdx
    code: "TmE"


@dataclass(frozen=True)
class LevelLam:
    body: "TmE"


@dataclass(frozen=True)
class LevelApp:
    fn: "TmE"
    level: LevelTerm


@dataclass(frozen=True)
class TmLSub:
    tm: "TmE"
    levels: LevelSubst


@dataclass(frozen=True)
class TmConst:
    name: str


TmE = Union[
    Var, TmSub, Lam, App, PiCode, PiCodeCum, UnivCode, Lift, LevelLam, LevelApp, TmLSub, TmConst
]

Expr = Union[CtxE, SubE, TyE, TmE]

CTX_NODES = (Terminal, Ext, CtxLSub, CtxConst)
SUB_NODES = (Id, Comp, EmptySub, SubExt, Proj, SubLSub, SubConst)
TY_NODES = (TySub, Pi, Univ, El, LevelPi, TyLSub, TyConst)
TM_NODES = (
    Var, TmSub, Lam, App, PiCode, PiCodeCum, UnivCode, Lift, LevelLam, LevelApp, TmLSub, TmConst,
)

LSUB_NODES = (CtxLSub, SubLSub, TyLSub, TmLSub)
UP_ONLY_NODES = LSUB_NODES + (LevelPi, LevelLam, LevelApp)
CUMULATIVE_NODES = (PiCodeCum, Lift)


def category(e: Expr) -> str:
    if isinstance(e, CTX_NODES):
        return "ctx"
    if isinstance(e, SUB_NODES):
        return "sub"
    if isinstance(e, TY_NODES):
        return "ty"
    if isinstance(e, TM_NODES):
        return "tm"
    raise TypeError(f"not an expression: {e!r}")
