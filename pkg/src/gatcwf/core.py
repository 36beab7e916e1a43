"""Sorts, signatures and checker configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from .errors import DuplicateNameError
from .expr import CtxE, Expr, TyE


class Mode(Enum):
    TOWER = "tower"  # external universe indices, no level judgments
    UP = "up"  # level-indexed sorts, internal universe polymorphism


@dataclass(frozen=True)
class Flags:
    mode: Mode
    cumulative: bool = False
    # tower mode checks against the finite truncation with this many
    # universes: indices 0 .. max_universe-1 are available
    max_universe: int = 3
    # with cumulativity on, doubly-indexed product codes stay accepted
    keep_doubly_indexed: bool = True
    fuel: int = 10_000


# ---------------------------------------------------------------------------
# sorts

# `lctx` is the number of ambient level variables; None in tower mode.
# Embedded expressions are stored in conversion-normal form, so that sort
# comparison reduces to comparing already-normalized pieces.


@dataclass(frozen=True)
class IsCtx:
    lctx: int | None


@dataclass(frozen=True)
class IsHom:
    lctx: int | None
    dom: CtxE
    cod: CtxE


@dataclass(frozen=True)
class IsTy:
    lctx: int | None
    ctx: CtxE


@dataclass(frozen=True)
class IsTm:
    lctx: int | None
    ctx: CtxE
    ty: TyE


Sort = Union[IsCtx, IsHom, IsTy, IsTm]


# ---------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class SigEntry:
    name: str
    sort: Sort
    body: Expr | None = None  # definitions carry a body and unfold; postulates do not

    @property
    def is_definition(self) -> bool:
        return self.body is not None


@dataclass(frozen=True)
class Signature:
    """Immutable map of declared constants; extension returns a new signature."""

    entries: dict[str, SigEntry] = field(default_factory=dict)
    order: tuple[str, ...] = ()

    def lookup(self, name: str) -> SigEntry | None:
        return self.entries.get(name)

    def extend(self, entry: SigEntry) -> "Signature":
        if entry.name in self.entries:
            raise DuplicateNameError(f"name already declared: {entry.name}")
        return Signature({**self.entries, entry.name: entry}, self.order + (entry.name,))

    def __contains__(self, name: str) -> bool:
        return name in self.entries
