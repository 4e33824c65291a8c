"""Primitive recursive definitions, their standard equations, and fullness.

Definitions are combinator trees over the base functions (zero constants,
the successor, projections) closed under composition and primitive
recursion.  A registry maps symbol names to definitions and is
reference-closed and acyclic.  Equation emission inlines compositions and
projections, so the equations for ``add`` come out in the familiar shape
``add(x,0) = x`` and ``add(x,S(y)) = S(add(x,y))``; the raw schema with
explicit indirection symbols stays available via ``inline=False``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .syntax import (
    App,
    Equation,
    FRESH_SYM_PREFIX,
    KIND_PROGRAM,
    Program,
    SUCC,
    Symbol,
    Term,
    Var,
    equations_match_renamed,
    numeral,
    succ,
    term_symbols,
)


@dataclass(frozen=True)
class DefZero:
    """Constant zero function of the owning symbol's arity."""


@dataclass(frozen=True)
class DefSucc:
    """The successor constructor."""


@dataclass(frozen=True)
class DefProj:
    index: int  # 1-based


@dataclass(frozen=True)
class DefComp:
    outer: str
    inners: tuple  # tuple[str, ...]


@dataclass(frozen=True)
class DefRec:
    base: str
    step: str


Body = object


@dataclass(frozen=True)
class PRDefinition:
    symbol: Symbol
    body: Body


class RegistryError(Exception):
    pass


class PRRegistry:
    """Mapping from symbol names to primitive recursive definitions."""

    def __init__(self, defs: Optional[Dict[str, PRDefinition]] = None):
        self._defs: Dict[str, PRDefinition] = dict(defs or {})
        self._validate()

    def _validate(self) -> None:
        for name, d in self._defs.items():
            if d.symbol.name != name:
                raise RegistryError(f"entry {name} holds symbol {d.symbol.name}")
            body = d.body
            if isinstance(body, DefZero):
                pass
            elif isinstance(body, DefSucc):
                if d.symbol != SUCC:
                    raise RegistryError("successor entry must use the S constructor")
            elif isinstance(body, DefProj):
                if not 1 <= body.index <= d.symbol.arity:
                    raise RegistryError(f"projection index out of range in {name}")
            elif isinstance(body, DefComp):
                outer = self._need(body.outer, name)
                if outer.symbol.arity != len(body.inners):
                    raise RegistryError(f"composition arity mismatch in {name}")
                for g in body.inners:
                    inner = self._need(g, name)
                    if inner.symbol.arity != d.symbol.arity:
                        raise RegistryError(f"inner arity mismatch in {name}")
            elif isinstance(body, DefRec):
                base = self._need(body.base, name)
                step = self._need(body.step, name)
                if base.symbol.arity != d.symbol.arity - 1:
                    raise RegistryError(f"recursion base arity mismatch in {name}")
                if step.symbol.arity != d.symbol.arity + 1:
                    raise RegistryError(f"recursion step arity mismatch in {name}")
            else:
                raise RegistryError(f"unknown body in {name}")
        self._check_acyclic()

    def _need(self, name: str, owner: str) -> PRDefinition:
        d = self._defs.get(name)
        if d is None:
            raise RegistryError(f"{owner} references unregistered {name}")
        return d

    def _check_acyclic(self) -> None:
        state: Dict[str, int] = {}

        def visit(name: str) -> None:
            if state.get(name) == 2:
                return
            if state.get(name) == 1:
                raise RegistryError(f"reference cycle through {name}")
            state[name] = 1
            body = self._defs[name].body
            if isinstance(body, DefComp):
                for ref in (body.outer, *body.inners):
                    visit(ref)
            elif isinstance(body, DefRec):
                visit(body.base)
                visit(body.step)
            state[name] = 2

        for name in self._defs:
            visit(name)

    def __contains__(self, name: object) -> bool:
        return name in self._defs

    def __getitem__(self, name: str) -> PRDefinition:
        return self._defs[name]

    def __iter__(self):
        return iter(self._defs)

    def __len__(self) -> int:
        return len(self._defs)

    def keys(self):
        return self._defs.keys()

    def get(self, name: str, default=None):
        return self._defs.get(name, default)

    def symbol(self, name: str) -> Symbol:
        return self._defs[name].symbol

    def extended(self, defs: Iterable[PRDefinition]) -> "PRRegistry":
        new = dict(self._defs)
        for d in defs:
            new[d.symbol.name] = d
        return PRRegistry(new)


# ---------------------------------------------------------------------------
# Equation emission


_PARAM_POOL = ("x", "y", "z", "w", "u", "v")


def param_names(n: int) -> List[str]:
    if n <= len(_PARAM_POOL):
        return list(_PARAM_POOL[:n])
    return [f"x{i}" for i in range(1, n + 1)]


def _apply_ref(reg: PRRegistry, name: str, args: tuple, inline: bool) -> Term:
    d = reg[name]
    body = d.body
    if isinstance(body, DefSucc):
        return succ(args[0])
    if inline:
        if isinstance(body, DefZero):
            return numeral(0)
        if isinstance(body, DefProj):
            return args[body.index - 1]
        if isinstance(body, DefComp):
            inner_terms = tuple(
                _apply_ref(reg, g, args, inline) for g in body.inners
            )
            outer = reg[body.outer]
            if isinstance(outer.body, DefRec):
                return App(outer.symbol, inner_terms)
            return _apply_ref(reg, body.outer, inner_terms, inline)
    return App(d.symbol, args)


def defining_equations(
    d: PRDefinition, reg: PRRegistry, inline: bool = True
) -> List[Equation]:
    """The standard defining equations of d.  The successor has none; with
    inline=True compositions over base functions disappear into the
    right-hand sides."""
    body = d.body
    sym = d.symbol
    n = sym.arity
    names = param_names(n)
    xs = tuple(Var(v) for v in names)
    if isinstance(body, DefSucc):
        return []
    if isinstance(body, DefZero):
        return [Equation(App(sym, xs), numeral(0))]
    if isinstance(body, DefProj):
        return [Equation(App(sym, xs), xs[body.index - 1])]
    if isinstance(body, DefComp):
        inner_terms = tuple(_apply_ref(reg, g, xs, inline) for g in body.inners)
        if inline:
            outer = reg[body.outer]
            if isinstance(outer.body, DefRec):
                rhs = App(outer.symbol, inner_terms)
            else:
                rhs = _apply_ref(reg, body.outer, inner_terms, inline)
        else:
            rhs = App(reg[body.outer].symbol, inner_terms)
        return [Equation(App(sym, xs), rhs)]
    if isinstance(body, DefRec):
        params = xs[: n - 1]
        rec = xs[n - 1]
        if inline:
            base_rhs = _apply_ref(reg, body.base, params, True)
            step_rhs = _apply_ref(
                reg, body.step, params + (rec, App(sym, params + (rec,))), True
            )
        else:
            base_rhs = App(reg[body.base].symbol, params)
            step_rhs = App(
                reg[body.step].symbol,
                params + (rec, App(sym, params + (rec,))),
            )
        return [
            Equation(App(sym, params + (numeral(0),)), base_rhs),
            Equation(App(sym, params + (succ(rec),)), step_rhs),
        ]
    raise RegistryError(f"unknown body in {sym.name}")


def _apply_ref_requires(reg: PRRegistry, name: str, inline: bool) -> set:
    """Definition names whose symbols survive in emitted right-hand sides
    when this reference is applied."""
    d = reg[name]
    body = d.body
    if isinstance(body, DefSucc):
        return set()
    if not inline:
        return {name}
    if isinstance(body, (DefZero, DefProj)):
        return set()
    if isinstance(body, DefComp):
        out = set()
        for g in body.inners:
            out |= _apply_ref_requires(reg, g, inline)
        outer = reg[body.outer]
        if isinstance(outer.body, DefRec):
            out.add(body.outer)
        else:
            out |= _apply_ref_requires(reg, body.outer, inline)
        return out
    return {name}


def direct_refs(d: PRDefinition, reg: PRRegistry, inline: bool = True) -> set:
    """Registry names whose symbols occur in d's emitted equations."""
    out = set()
    for e in defining_equations(d, reg, inline):
        for s in term_symbols(e.lhs) | term_symbols(e.rhs):
            if s.kind == KIND_PROGRAM and s.name in reg and s.name != d.symbol.name:
                out.add(s.name)
    return out


def closure_names(reg: PRRegistry, roots: Iterable[str], inline: bool = True) -> List[str]:
    """roots plus everything they transitively reference in emitted
    equations, dependency-ordered (referenced first)."""
    order: List[str] = []
    seen: set = set()

    def visit(name: str) -> None:
        if name in seen:
            return
        seen.add(name)
        for ref in sorted(direct_refs(reg[name], reg, inline)):
            visit(ref)
        order.append(name)

    for name in roots:
        if name not in reg:
            raise RegistryError(f"{name} is not registered")
        visit(name)
    return order


def minimal_program(
    reg: PRRegistry,
    roots: Iterable[str],
    distinguished: Optional[str] = None,
    inline: bool = True,
) -> Program:
    """The minimal full program containing the defining equations of the
    roots and everything they reference."""
    equations: List[Equation] = []
    links: Dict[str, str] = {}
    for name in closure_names(reg, roots, inline):
        links[name] = name
        for e in defining_equations(reg[name], reg, inline):
            if not any(e == old for old in equations):
                equations.append(e)
    links = {
        name: name
        for name in links
        if any(
            any(s.name == name for s in term_symbols(e.lhs) | term_symbols(e.rhs))
            for e in equations
        )
    }
    dist = None
    if distinguished is not None:
        dist = reg.symbol(distinguished)
    return Program(tuple(equations), dist, links)


@dataclass(frozen=True)
class Fullness:
    ok: bool
    missing_symbol: Optional[str] = None
    missing_equations: tuple = ()


def is_full(p: Program, reg: PRRegistry, inline: bool = True) -> Fullness:
    """Check that every pr-linked symbol of p has all of its defining
    equations in p, recursively through references."""
    todo = sorted(p.pr_links.values())
    seen: set = set()
    while todo:
        name = todo.pop(0)
        if name in seen:
            continue
        seen.add(name)
        d = reg.get(name)
        if d is None:
            return Fullness(False, name, ())
        missing = tuple(
            e
            for e in defining_equations(d, reg, inline)
            if not any(equations_match_renamed(e, mine) for mine in p.equations)
        )
        if missing:
            return Fullness(False, name, missing)
        todo.extend(sorted(direct_refs(d, reg, inline)))
    return Fullness(True)


# ---------------------------------------------------------------------------
# Registry source format: `def name = rec(p11, comp(S, p33));`


class _RegistryParser:
    def __init__(self, text: str):
        self.text = text
        self.defs: Dict[str, PRDefinition] = {}
        self.aux_n = 0
        self._ensure_base()

    def _ensure_base(self) -> None:
        self.defs["S"] = PRDefinition(SUCC, DefSucc())
        self.defs["zero"] = PRDefinition(Symbol("zero", 0), DefZero())

    def _zero(self, arity: int) -> str:
        if arity == 0:
            return "zero"
        name = f"zero{arity}"
        self.defs.setdefault(name, PRDefinition(Symbol(name, arity), DefZero()))
        return name

    def _proj(self, i: int, n: int) -> str:
        name = f"p{i}{n}"
        self.defs.setdefault(name, PRDefinition(Symbol(name, n), DefProj(i)))
        return name

    def _aux(self) -> str:
        self.aux_n += 1
        return f"{FRESH_SYM_PREFIX}{self.aux_n}"

    def parse(self) -> PRRegistry:
        for lineno, raw in enumerate(self.text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if not line.endswith(";"):
                raise RegistryError(f"line {lineno}: missing ';'")
            line = line[:-1].strip()
            if not line.startswith("def "):
                raise RegistryError(f"line {lineno}: expected `def name = ...;`")
            head, _, expr = line[4:].partition("=")
            name = head.strip()
            if not name:
                raise RegistryError(f"line {lineno}: bad definition head")
            if name in self.defs:
                raise RegistryError(f"line {lineno}: {name} defined twice")
            toks = _tokenize_expr(expr, lineno)
            ref, arity = self._expr(toks, None, name, lineno)
            if toks:
                raise RegistryError(f"line {lineno}: trailing input {toks[0]!r}")
            if ref != name:
                # plain alias like `def id = p11;`
                target = self.defs[ref]
                self.defs[name] = PRDefinition(
                    Symbol(name, target.symbol.arity), target.body
                )
        return PRRegistry(self.defs)

    def _expr(self, toks: List[str], required: Optional[int], name: Optional[str], lineno: int):
        """Parse one combinator expression; returns (registered name, arity).
        `name` is used for the top-level definition, sub-expressions get
        auxiliary names."""
        if not toks:
            raise RegistryError(f"line {lineno}: missing expression")
        tok = toks.pop(0)
        if tok == "comp" or tok == "rec":
            if not toks or toks.pop(0) != "(":
                raise RegistryError(f"line {lineno}: expected '(' after {tok}")
            parts: List[Tuple[str, int]] = []
            if tok == "comp":
                # outer first, then inners; arity constraints resolved below
                outer = self._expr(toks, None, None, lineno)
                parts.append(outer)
                while toks and toks[0] == ",":
                    toks.pop(0)
                    parts.append(self._expr(toks, required, None, lineno))
                if not toks or toks.pop(0) != ")":
                    raise RegistryError(f"line {lineno}: expected ')'")
                outer_name, outer_arity = parts[0]
                inners = parts[1:]
                if outer_arity != len(inners):
                    raise RegistryError(
                        f"line {lineno}: {outer_name} expects {outer_arity} inner functions"
                    )
                arities = {a for _, a in inners if a is not None}
                if required is not None:
                    arities.add(required)
                if len(arities) != 1:
                    raise RegistryError(
                        f"line {lineno}: cannot infer a common inner arity"
                    )
                arity = arities.pop()
                inner_names = tuple(
                    self._coerce_zero(n, a, arity, lineno) for n, a in inners
                )
                sym_name = name or self._aux()
                self.defs[sym_name] = PRDefinition(
                    Symbol(sym_name, arity), DefComp(outer_name, inner_names)
                )
                return sym_name, arity
            base_name, base_arity = self._expr(toks, None if required is None else required - 1, None, lineno)
            if not toks or toks.pop(0) != ",":
                raise RegistryError(f"line {lineno}: rec takes two parts")
            arity = None if base_arity is None else base_arity + 1
            if required is not None:
                arity = required
            step_required = None if arity is None else arity + 1
            step_name, step_arity = self._expr(toks, step_required, None, lineno)
            if not toks or toks.pop(0) != ")":
                raise RegistryError(f"line {lineno}: expected ')'")
            if arity is None and step_arity is not None:
                arity = step_arity - 1
            if arity is None:
                raise RegistryError(f"line {lineno}: cannot infer recursion arity")
            base_name = self._coerce_zero(base_name, base_arity, arity - 1, lineno)
            step_name = self._coerce_zero(step_name, step_arity, arity + 1, lineno)
            sym_name = name or self._aux()
            self.defs[sym_name] = PRDefinition(
                Symbol(sym_name, arity), DefRec(base_name, step_name)
            )
            return sym_name, arity
        # atoms: S, zero, zero:k, pij, registered names
        if tok == "S":
            return "S", 1
        if tok in ("0", "zero"):
            if toks and toks[0] == ":":
                toks.pop(0)
                k = toks.pop(0)
                return self._zero(int(k)), int(k)
            if required is not None:
                return self._zero(required), required
            return "zero", 0
        m = tok
        if len(m) == 3 and m[0] == "p" and m[1:].isdigit():
            i, n = int(m[1]), int(m[2])
            if not 1 <= i <= n:
                raise RegistryError(f"line {lineno}: bad projection {m}")
            return self._proj(i, n), n
        if m in self.defs:
            return m, self.defs[m].symbol.arity
        raise RegistryError(f"line {lineno}: unknown reference {m!r}")

    def _coerce_zero(self, name: str, arity: Optional[int], want: int, lineno: int) -> str:
        if arity == want:
            return name
        if name == "zero" and arity == 0:
            return self._zero(want)
        raise RegistryError(
            f"line {lineno}: {name} has arity {arity}, expected {want}"
        )


def _tokenize_expr(text: str, lineno: int) -> List[str]:
    out: List[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "(),:":
            out.append(ch)
            i += 1
            continue
        j = i
        while j < len(text) and (text[j].isalnum() or text[j] == "_"):
            j += 1
        if j == i:
            raise RegistryError(f"line {lineno}: bad character {ch!r}")
        out.append(text[i:j])
        i = j
    return out


def parse_registry(text: str) -> PRRegistry:
    return _RegistryParser(text).parse()


CATALOG_SOURCE = """\
# standard primitive recursive catalog
def add = rec(p11, comp(S, p33));
def mul = rec(zero:1, comp(add, p33, p13));
def pred = rec(zero, p12);
def monus = rec(p11, comp(pred, p33));
def sg = rec(zero, comp(S, zero:2));
def exp = rec(comp(S, zero:1), comp(mul, p33, p13));
"""

#: definitions exercised as "the catalog" in tests and pipelines
CATALOG_NAMES = ("zero", "S", "p11", "add", "mul", "pred", "monus", "sg", "exp")


def catalog_registry() -> PRRegistry:
    return parse_registry(CATALOG_SOURCE)
