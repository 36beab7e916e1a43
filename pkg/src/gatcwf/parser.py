"""Surface syntax: lexer, parser and name/level resolution.

Files are streams of line-oriented declarations over a single expression
grammar shared by all four syntactic categories; the category of each
expression is recovered bottom-up from its constructors and from the
categories of declared names.  Level variables are positional (a0 is the
first one declared) and are resolved against the ambient level context,
which `level-ctx n;` sets for the following declarations and which grows
by one inside level binders.

Substitution application `e[s]` covers both kinds of substitution: the
bracket holds a level substitution when it starts with `{`, `lid` or
`lp`, and an ordinary substitution expression otherwise.  Level
substitutions are tuples of level terms; `lid`, `lp` and composition
evaluate away at parse time.  A level substitution re-scopes the
expression to its left, so a postfix chain is scanned once without
scope checks to locate the brackets, the brackets are evaluated right to
left, and the head is then parsed in the level context they determine.

`id`, `p`, `q`, `<>` may appear without arguments and `v(k)` abbreviates
the k-th variable; both leave holes that checking fills in where an
expected sort determines them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import Mode
from .errors import ParseError
from .expr import (
    App,
    Comp,
    CtxConst,
    CtxE,
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
    Terminal,
    TmConst,
    TmE,
    TmSub,
    TyConst,
    TyE,
    TySub,
    UIdx,
    UnivCode,
    Univ,
    Var,
    CtxLSub,
    SubLSub,
    TyLSub,
    TmLSub,
    category,
)
from .levels import (
    LevelSubst,
    LevelTerm,
    LJoin,
    LNext,
    LVar,
    lsubst_comp,
    lsubst_id,
    lsubst_p,
)

KEYWORDS = {
    "level-ctx", "postulate", "check-eq", "check", "def", "in",
    "ctx", "hom", "ty", "tm", "sub",
    "id", "p", "q", "v", "Pi", "lam", "app",
    "U", "El", "pi", "ucode", "lift", "forall", "llam", "lapp",
    "lid", "lp", "lq", "o", "level", "lsub",
    "sort", "op", "eq",
}

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r]+)
    | (?P<comment>--[^\n]*)
    | (?P<nl>\n)
    | (?P<kw>level-ctx|check-eq)(?![A-Za-z0-9_'])
    | (?P<name>[A-Za-z_][A-Za-z0-9_'-]*)
    | (?P<num>[0-9]+)
    | (?P<op><>|:=|->|\^\+|\\/|[@<>(){},.;:=\[\]|_])
    """,
    re.VERBOSE,
)

_DRY_SCOPE = 10**6  # placeholder level-context size while scanning spans


@dataclass(frozen=True)
class Token:
    kind: str  # keyword text, "name", "num", or the operator itself
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, linestart = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - linestart + 1)
        col = pos - linestart + 1
        pos = m.end()
        if m.lastgroup == "nl":
            line += 1
            linestart = pos
            continue
        if m.lastgroup in ("ws", "comment"):
            continue
        value = m.group()
        if m.lastgroup in ("kw", "name"):
            kind = value if value in KEYWORDS else "name"
        elif m.lastgroup == "num":
            kind = "num"
        else:
            kind = value
        tokens.append(Token(kind, value, line, col))
    tokens.append(Token("eof", "", line, pos - linestart + 1))
    return tokens


# ---------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class SortCtx:
    pass


@dataclass(frozen=True)
class SortHom:
    dom: CtxE
    cod: CtxE


@dataclass(frozen=True)
class SortTy:
    ctx: CtxE


@dataclass(frozen=True)
class SortTm:
    ctx: CtxE
    ty: TyE


@dataclass(frozen=True)
class SortLevel:
    pass


@dataclass(frozen=True)
class SortLSub:
    target: int


SortExpr = SortCtx | SortHom | SortTy | SortTm | SortLevel | SortLSub


@dataclass(frozen=True)
class DLevelCtx:
    size: int
    line: int


@dataclass(frozen=True)
class DPostulate:
    kind: str  # ctx | hom | ty | tm
    name: str
    sort: SortExpr
    ambient: int | None
    line: int


@dataclass(frozen=True)
class DDef:
    name: str
    body: Expr
    annot: SortExpr | None
    ambient: int | None
    line: int


@dataclass(frozen=True)
class DCheck:
    expr: Expr | LevelTerm | LevelSubst
    sort: SortExpr
    ambient: int | None
    line: int

    @property
    def name(self) -> str:
        return f"check@{self.line}"


@dataclass(frozen=True)
class DCheckEq:
    name: str
    lhs: Expr | LevelTerm | LevelSubst
    rhs: Expr | LevelTerm | LevelSubst
    sort: SortExpr
    ambient: int | None
    line: int


@dataclass(frozen=True)
class PTerm:
    """First-order term of the presentation language: head(args)."""

    head: str
    args: tuple["PTerm", ...] = ()

    def __str__(self):
        if not self.args:
            return self.head
        return f"{self.head}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class DSortDecl:
    name: str
    telescope: tuple[tuple[str, PTerm], ...]
    line: int


@dataclass(frozen=True)
class DOpDecl:
    name: str
    telescope: tuple[tuple[str, PTerm], ...]
    result: PTerm
    line: int


@dataclass(frozen=True)
class DEqDecl:
    label: str
    telescope: tuple[tuple[str, PTerm], ...]
    lhs: PTerm
    rhs: PTerm
    sort: PTerm
    line: int


Declaration = (
    DLevelCtx | DPostulate | DDef | DCheck | DCheckEq | DSortDecl | DOpDecl | DEqDecl
)


# ---------------------------------------------------------------------------
# the parser


class Parser:
    def __init__(self, text: str, mode: Mode):
        self.tokens = tokenize(text)
        self.pos = 0
        self.mode = mode
        self.ambient: int | None = 0 if mode is Mode.UP else None
        self.dry = False  # scanning a span: consume tokens, skip scope checks
        # name -> category ("ctx" | "sub" | "ty" | "tm"), grows as the file parses
        self.categories: dict[str, str] = {}
        self._eq_count = 0

    # -- token plumbing ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text or 'end of file'!r}",
                             tok.line, tok.col)
        return self.next()

    def fail(self, message: str):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col)

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    # -- declarations ----------------------------------------------------------

    def parse_file(self) -> list[Declaration]:
        decls = []
        while not self.at("eof"):
            decls.append(self.parse_decl())
        return decls

    def parse_decl(self) -> Declaration:
        tok = self.peek()
        if tok.kind == "level-ctx":
            self.next()
            if self.mode is not Mode.UP:
                raise ParseError("level contexts are only available in the "
                                 "level-indexed theory", tok.line, tok.col)
            size = int(self.expect("num").text)
            self.expect(";")
            self.ambient = size
            return DLevelCtx(size, tok.line)
        if tok.kind == "postulate":
            return self.parse_postulate()
        if tok.kind == "def":
            self.next()
            name = self.declared_name()
            annot = None
            if self.at(":"):
                self.next()
                annot = self.parse_sort()
            self.expect(":=")
            body = self.parse_expr_any()
            self.expect(";")
            self.categories[name] = category(body)
            return DDef(name, body, annot, self.ambient, tok.line)
        if tok.kind in ("ctx", "sub", "ty", "tm") and self.peek(1).kind == "name" \
                and self.peek(2).kind == ":=":
            kind = self.next().kind
            name = self.declared_name()
            self.expect(":=")
            body = self.parse_expr_any()
            self.expect(";")
            got = category(body)
            if got != kind:
                raise ParseError(f"definition of {name} declared as {kind} "
                                 f"but its body is a {got}", tok.line, tok.col)
            self.categories[name] = got
            return DDef(name, body, None, self.ambient, tok.line)
        if tok.kind == "check":
            self.next()
            expr, sort = self.parse_checked()
            self.expect(";")
            return DCheck(expr, sort, self.ambient, tok.line)
        if tok.kind == "check-eq":
            self.next()
            label = None
            if self.at("@"):
                self.next()
                label = self.expect("name").text
            lhs, rhs, sort = self.parse_checked_eq()
            self.expect(";")
            self._eq_count += 1
            return DCheckEq(label or f"check-eq#{self._eq_count}", lhs, rhs, sort,
                            self.ambient, tok.line)
        if tok.kind == "sort":
            self.next()
            name = self._pname()
            tele = self.parse_ptelescope()
            self.expect(";")
            return DSortDecl(name, tele, tok.line)
        if tok.kind == "op":
            self.next()
            name = self._pname()
            tele = self.parse_ptelescope()
            self.expect(":")
            result = self.parse_pterm()
            self.expect(";")
            return DOpDecl(name, tele, result, tok.line)
        if tok.kind == "eq":
            self.next()
            label = ""
            if self.at("@"):
                self.next()
                label = self.expect("name").text
            tele = self.parse_ptelescope()
            lhs = self.parse_pterm()
            self.expect("=")
            rhs = self.parse_pterm()
            self.expect(":")
            sort = self.parse_pterm()
            self.expect(";")
            return DEqDecl(label, tele, lhs, rhs, sort, tok.line)
        self.fail(f"expected a declaration, found {tok.text!r}")

    def declared_name(self) -> str:
        tok = self.expect("name")
        if re.fullmatch(r"a[0-9]+", tok.text):
            raise ParseError(f"{tok.text!r} is reserved for level variables",
                             tok.line, tok.col)
        if tok.text in self.categories:
            raise ParseError(f"name already declared: {tok.text}", tok.line, tok.col)
        return tok.text

    def parse_postulate(self) -> DPostulate:
        tok = self.next()  # postulate
        kind = self.peek().kind
        if kind not in ("ctx", "hom", "ty", "tm"):
            self.fail("expected one of: postulate ctx/hom/ty/tm")
        self.next()
        name = self.declared_name()
        if kind == "ctx":
            sort: SortExpr = SortCtx()
        elif kind == "hom":
            self.expect(":")
            dom = self.parse_ctx()
            self.expect("->")
            cod = self.parse_ctx()
            sort = SortHom(dom, cod)
        elif kind == "ty":
            self.expect("in")
            sort = SortTy(self.parse_ctx())
        else:
            self.expect(":")
            ty = self.parse_ty()
            self.expect("in")
            sort = SortTm(self.parse_ctx(), ty)
        self.expect(";")
        self.categories[name] = "sub" if kind == "hom" else kind
        return DPostulate(kind, name, sort, self.ambient, tok.line)

    def parse_checked(self):
        if self._at_level_expr():
            return self.parse_level_checked()
        expr = self.parse_expr_any()
        self.expect(":")
        sort = self.parse_sort()
        if isinstance(sort, (SortLevel, SortLSub)):
            self.fail("level sorts classify level expressions, not this one")
        return expr, sort

    def parse_checked_eq(self):
        if self._at_level_expr():
            return self.parse_level_checked_eq()
        lhs = self.parse_expr_any()
        self.expect("=")
        rhs = self.parse_expr_any()
        self.expect(":")
        sort = self.parse_sort()
        if isinstance(sort, (SortLevel, SortLSub)):
            self.fail("level sorts classify level expressions, not these")
        return lhs, rhs, sort

    def _at_level_expr(self) -> bool:
        tok = self.peek()
        if tok.kind in ("{", "lid", "lp", "lq"):
            return True
        return tok.kind == "name" and re.fullmatch(r"a[0-9]+", tok.text) is not None

    def parse_level_checked(self):
        if self.at("{") or self.at("lid") or self.at("lp"):
            sub = self.parse_lsubst()
            self.expect(":")
            sort = self.parse_sort()
            if not isinstance(sort, SortLSub):
                self.fail("a level substitution must be checked at an lsub sort")
            return sub, sort
        lvl = self.parse_level()
        self.expect(":")
        sort = self.parse_sort()
        if not isinstance(sort, SortLevel):
            self.fail("a level term must be checked at sort level")
        return lvl, sort

    def parse_level_checked_eq(self):
        if self.at("{") or self.at("lid") or self.at("lp"):
            lhs = self.parse_lsubst()
            self.expect("=")
            rhs = self.parse_lsubst()
            self.expect(":")
            sort = self.parse_sort()
            if not isinstance(sort, SortLSub):
                self.fail("level substitutions must be compared at an lsub sort")
            return lhs, rhs, sort
        lhs = self.parse_level()
        self.expect("=")
        rhs = self.parse_level()
        self.expect(":")
        sort = self.parse_sort()
        if not isinstance(sort, SortLevel):
            self.fail("level terms must be compared at sort level")
        return lhs, rhs, sort

    def parse_sort(self) -> SortExpr:
        tok = self.peek()
        if tok.kind == "ctx":
            self.next()
            return SortCtx()
        if tok.kind == "hom":
            self.next()
            self.expect("(")
            dom = self.parse_ctx()
            self.expect(",")
            cod = self.parse_ctx()
            self.expect(")")
            return SortHom(dom, cod)
        if tok.kind == "ty":
            self.next()
            self.expect("(")
            ctx = self.parse_ctx()
            self.expect(")")
            return SortTy(ctx)
        if tok.kind == "tm":
            self.next()
            self.expect("(")
            ctx = self.parse_ctx()
            self.expect(",")
            ty = self.parse_ty()
            self.expect(")")
            return SortTm(ctx, ty)
        if tok.kind == "level":
            self.next()
            self._require_up(tok)
            return SortLevel()
        if tok.kind == "lsub":
            self.next()
            self._require_up(tok)
            self.expect("(")
            target = int(self.expect("num").text)
            self.expect(")")
            return SortLSub(target)
        self.fail("expected a sort: ctx, hom(..), ty(..), tm(..), level or lsub(n)")

    # -- presentation terms --------------------------------------------------------

    def parse_ptelescope(self):
        self.expect("(")
        entries = []
        if not self.at(")"):
            while True:
                name = self._pname()
                self.expect(":")
                entries.append((name, self.parse_pterm()))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        return tuple(entries)

    def _pname(self) -> str:
        tok = self.peek()
        if tok.kind in ("name", "num") or tok.text in KEYWORDS:
            self.next()
            return tok.text
        self.fail("expected an identifier")

    def parse_pterm(self) -> PTerm:
        head = self._pname()
        if self.at("("):
            self.next()
            args = []
            if not self.at(")"):
                while True:
                    args.append(self.parse_pterm())
                    if self.at(","):
                        self.next()
                        continue
                    break
            self.expect(")")
            return PTerm(head, tuple(args))
        return PTerm(head)

    # -- expressions --------------------------------------------------------------

    def parse_expr_any(self) -> Expr:
        return self.parse_dot()

    def parse_ctx(self) -> CtxE:
        return self._as("ctx", self.parse_dot())

    def parse_ty(self) -> TyE:
        return self._as("ty", self.parse_dot())

    def _as(self, want: str, e: Expr) -> Expr:
        got = category(e)
        if got != want:
            self.fail(f"expected a {want} expression, found a {got}")
        return e

    def parse_dot(self) -> Expr:
        left = self.parse_comp()
        while self.at("."):
            self.next()
            right = self.parse_comp()
            left = Ext(self._as("ctx", left), self._as("ty", right))
        return left

    def parse_comp(self) -> Expr:
        left = self.parse_postfix()
        while self.at("o"):
            self.next()
            right = self.parse_postfix()
            left = Comp(self._as("sub", left), self._as("sub", right))
        return left

    def parse_postfix(self) -> Expr:
        if self.dry:
            atom = self.parse_atom()
            while self.at("["):
                self.next()
                if self.at("{") or self.at("lid") or self.at("lp"):
                    self.parse_lsubst()
                else:
                    self.parse_expr_any()
                self.expect("]")
            return atom

        # scan the head and the bracket spans without scope checks, then
        # evaluate brackets right to left (each level bracket re-scopes
        # everything to its left) and finally parse the head where it lives
        head_start = self.pos
        was_dry = self.dry
        self.dry = True
        try:
            self.parse_atom()
        finally:
            self.dry = was_dry
        spans: list[tuple[bool, int]] = []
        while self.at("["):
            self.next()
            content_start = self.pos
            is_level = self.at("{") or self.at("lid") or self.at("lp")
            self.dry = True
            try:
                if is_level:
                    self.parse_lsubst()
                else:
                    self.parse_expr_any()
            finally:
                self.dry = was_dry
            spans.append((is_level, content_start))
            self.expect("]")
        end_pos = self.pos
        if not spans:
            self.pos = head_start
            return self.parse_atom()

        payloads: list[tuple[str, object]] = [("", None)] * len(spans)
        ambient = self.ambient
        for i in range(len(spans) - 1, -1, -1):
            is_level, content_start = spans[i]
            self.pos = content_start
            saved = self.ambient
            self.ambient = ambient
            try:
                if is_level:
                    lsub = self.parse_lsubst()
                    payloads[i] = ("level", lsub)
                    ambient = lsub.target
                else:
                    payloads[i] = ("sub", self._as("sub", self.parse_expr_any()))
            finally:
                self.ambient = saved
        self.pos = head_start
        saved = self.ambient
        self.ambient = ambient
        try:
            atom = self.parse_atom()
        finally:
            self.ambient = saved
        self.pos = end_pos
        for kind, payload in payloads:
            if kind == "level":
                atom = self._apply_lsub(atom, payload)
            else:
                atom = self._apply_sub(atom, payload)
        return atom

    def _apply_sub(self, e: Expr, sub: SubE) -> Expr:
        match category(e):
            case "ty":
                return TySub(e, sub)
            case "tm":
                return TmSub(e, sub)
            case other:
                self.fail(f"a {other} expression cannot be substituted by a morphism")

    def _apply_lsub(self, e: Expr, s: LevelSubst) -> Expr:
        match category(e):
            case "ctx":
                return CtxLSub(e, s)
            case "sub":
                return SubLSub(e, s)
            case "ty":
                return TyLSub(e, s)
            case _:
                return TmLSub(e, s)

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            if tok.text != "1":
                raise ParseError("the only context literal is 1", tok.line, tok.col)
            return Terminal()
        if tok.kind == "(":
            self.next()
            e = self.parse_expr_any()
            self.expect(")")
            return e
        if tok.kind == "<>":
            self.next()
            if self.at("("):
                self.next()
                ctx = self.parse_ctx()
                self.expect(")")
                return EmptySub(ctx)
            return EmptySub(None)
        if tok.kind == "<":
            self.next()
            sub = self._as("sub", self.parse_expr_any())
            self.expect(",")
            tm = self._as("tm", self.parse_expr_any())
            ann = None
            if self.at("|"):
                self.next()
                ann = self.parse_ty()
            self.expect(">")
            return SubExt(sub, tm, ann)
        if tok.kind == "id":
            self.next()
            if self.at("("):
                self.next()
                ctx = self.parse_ctx()
                self.expect(")")
                return Id(ctx)
            return Id(None)
        if tok.kind in ("p", "q"):
            self.next()
            cls = Proj if tok.kind == "p" else Var
            if self.at("("):
                self.next()
                ctx = self.parse_ctx()
                self.expect(",")
                ty = self.parse_ty()
                self.expect(")")
                return cls(ctx, ty)
            return cls(None, None)
        if tok.kind == "v":
            self.next()
            self.expect("(")
            k = int(self.expect("num").text)
            self.expect(")")
            return _var_sugar(k)
        if tok.kind == "Pi":
            self.next()
            self.expect("(")
            dom = self.parse_ty()
            self.expect(",")
            cod = self.parse_ty()
            self.expect(")")
            return Pi(dom, cod)
        if tok.kind == "lam":
            self.next()
            self.expect("(")
            body = self._as("tm", self.parse_expr_any())
            self.expect(")")
            return Lam(body)
        if tok.kind == "app":
            self.next()
            self.expect("(")
            fn = self._as("tm", self.parse_expr_any())
            self.expect(",")
            arg = self._as("tm", self.parse_expr_any())
            self.expect(")")
            return App(fn, arg)
        if tok.kind == "U":
            self.next()
            self.expect("(")
            lvl = self.parse_level()
            self.expect(")")
            return Univ(lvl)
        if tok.kind == "El":
            self.next()
            self.expect("(")
            lvl = self.parse_level()
            self.expect(",")
            code = self._as("tm", self.parse_expr_any())
            self.expect(")")
            return El(lvl, code)
        if tok.kind == "pi":
            self.next()
            self.expect("{")
            lo = self.parse_level()
            hi = None
            if self.at(","):
                self.next()
                hi = self.parse_level()
            self.expect("}")
            self.expect("(")
            dom = self._as("tm", self.parse_expr_any())
            self.expect(",")
            cod = self._as("tm", self.parse_expr_any())
            self.expect(")")
            if hi is None:
                return PiCodeCum(lo, dom, cod)
            return PiCode(lo, hi, dom, cod)
        if tok.kind == "ucode":
            self.next()
            self.expect("{")
            lo = self.parse_level()
            self.expect(",")
            hi = self.parse_level()
            self.expect("}")
            return UnivCode(lo, hi)
        if tok.kind == "lift":
            self.next()
            self.expect("{")
            lo = self.parse_level()
            self.expect(",")
            hi = self.parse_level()
            self.expect("}")
            self.expect("(")
            code = self._as("tm", self.parse_expr_any())
            self.expect(")")
            return Lift(lo, hi, code)
        if tok.kind == "forall":
            self.next()
            self._require_up(tok)
            self.expect("(")
            self.ambient += 1
            try:
                body = self.parse_ty()
            finally:
                self.ambient -= 1
            self.expect(")")
            return LevelPi(body)
        if tok.kind == "llam":
            self.next()
            self._require_up(tok)
            self.expect("(")
            self.ambient += 1
            try:
                body = self._as("tm", self.parse_expr_any())
            finally:
                self.ambient -= 1
            self.expect(")")
            return LevelLam(body)
        if tok.kind == "lapp":
            self.next()
            self._require_up(tok)
            self.expect("(")
            fn = self._as("tm", self.parse_expr_any())
            self.expect(",")
            lvl = self.parse_level()
            self.expect(")")
            return LevelApp(fn, lvl)
        if tok.kind == "name":
            self.next()
            cat = self.categories.get(tok.text)
            if cat is None:
                raise ParseError(f"unknown name: {tok.text}", tok.line, tok.col)
            cls = {"ctx": CtxConst, "sub": SubConst, "ty": TyConst, "tm": TmConst}[cat]
            return cls(tok.text)
        self.fail(f"expected an expression, found {tok.text!r}")

    def _require_up(self, tok: Token) -> None:
        if self.mode is not Mode.UP:
            raise ParseError(
                f"{tok.text!r} is only available in the level-indexed theory",
                tok.line, tok.col,
            )

    # -- levels ---------------------------------------------------------------------

    def parse_level(self) -> UIdx:
        if self.mode is Mode.TOWER:
            tok = self.expect("num")
            return int(tok.text)
        left = self.parse_level_next()
        while self.at("\\/"):
            self.next()
            left = LJoin(left, self.parse_level_next())
        return left

    def parse_level_next(self) -> LevelTerm:
        base = self.parse_level_atom()
        while self.at("^+"):
            self.next()
            base = LNext(base)
        return base

    def parse_level_atom(self) -> LevelTerm:
        tok = self.peek()
        if tok.kind == "(":
            self.next()
            lvl = self.parse_level()
            self.expect(")")
            return lvl
        if tok.kind == "lq":
            self.next()
            if self.dry:
                return LVar(0)
            if not self.ambient:
                raise ParseError("lq needs a nonempty level context", tok.line, tok.col)
            return LVar(self.ambient - 1)
        if tok.kind == "name":
            m = re.fullmatch(r"a([0-9]+)", tok.text)
            if m:
                self.next()
                index = int(m.group(1))
                if not self.dry and (self.ambient is None or index >= self.ambient):
                    raise ParseError(
                        f"level variable {tok.text} out of scope "
                        f"(level context has size {self.ambient or 0})",
                        tok.line, tok.col,
                    )
                return LVar(index)
        self.fail("expected a level term")

    def parse_lsubst(self) -> LevelSubst:
        """Level substitution expression, evaluated to a tuple of levels.

        Composition chains evaluate right to left: the rightmost factor is
        scoped in the ambient level context, each further factor in the
        target of the one after it.
        """
        self._require_up(self.peek())
        factors = [self.parse_lsubst_factor()]
        while self.at("o") and self.peek(1).kind in ("{", "lid", "lp", "("):
            self.next()
            factors.append(self.parse_lsubst_factor())
        if self.dry:
            return LevelSubst(_DRY_SCOPE, 0, ())
        result: LevelSubst | None = None
        for factor in reversed(factors):
            source = self.ambient if result is None else result.target
            evaluated = factor(source)
            result = evaluated if result is None else lsubst_comp(evaluated, result)
        return result

    def parse_lsubst_factor(self):
        tok = self.peek()
        if tok.kind == "lid":
            self.next()
            return lsubst_id
        if tok.kind == "lp":
            self.next()

            def weaken(source, tok=tok):
                if source < 1:
                    raise ParseError("lp needs a nonempty level context", tok.line, tok.col)
                return lsubst_p(source - 1)

            return weaken
        if tok.kind == "(":
            self.next()
            inner = self.parse_lsubst_chain_deferred()
            self.expect(")")
            return inner
        if tok.kind == "{":
            self.next()
            start = self.pos
            depth = 1
            while depth:
                nxt = self.next()
                if nxt.kind == "eof":
                    raise ParseError("unterminated level substitution", tok.line, tok.col)
                if nxt.kind == "{":
                    depth += 1
                if nxt.kind == "}":
                    depth -= 1

            def tuple_factor(source, start=start):
                saved_pos, saved_amb = self.pos, self.ambient
                self.pos, self.ambient = start, source
                try:
                    entries = []
                    if not self.at("}"):
                        while True:
                            entries.append(self.parse_level())
                            if self.at(","):
                                self.next()
                                continue
                            break
                    self.expect("}")
                    return LevelSubst(source, len(entries), tuple(entries))
                finally:
                    self.pos, self.ambient = saved_pos, saved_amb

            return tuple_factor
        self.fail("expected a level substitution: {..}, lid or lp")

    def parse_lsubst_chain_deferred(self):
        factors = [self.parse_lsubst_factor()]
        while self.at("o") and self.peek(1).kind in ("{", "lid", "lp", "("):
            self.next()
            factors.append(self.parse_lsubst_factor())

        def chain(source):
            result = None
            for factor in reversed(factors):
                inner_source = source if result is None else result.target
                evaluated = factor(inner_source)
                result = evaluated if result is None else lsubst_comp(evaluated, result)
            return result

        return chain


def _var_sugar(k: int) -> TmE:
    if k == 0:
        return Var(None, None)
    chain: SubE = Proj(None, None)
    for _ in range(k - 1):
        chain = Comp(Proj(None, None), chain)
    return TmSub(Var(None, None), chain)


def parse(text: str, mode: Mode) -> list[Declaration]:
    """Parse a declaration stream; names and level variables are resolved."""
    return Parser(text, mode).parse_file()


def parse_expr(text: str, mode: Mode, ambient: int | None = None,
               categories: dict[str, str] | None = None) -> Expr:
    """Parse one expression (mainly for tests and the round-trip property)."""
    parser = Parser(text, mode)
    if mode is Mode.UP and ambient is not None:
        parser.ambient = ambient
    if categories:
        parser.categories.update(categories)
    e = parser.parse_expr_any()
    parser.expect("eof")
    return e
