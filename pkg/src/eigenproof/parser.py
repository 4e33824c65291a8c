"""Parsing of terms, formulas and equation programs.

Grammar notes:

* identifiers matching ``[u-z][0-9_]*`` are variables, everything else is a
  function symbol; a quantifier may bind any identifier, and bound names are
  treated as variables inside their scope,
* ``0`` and ``S`` are reserved constructor tokens,
* connective precedence from weakest: quantifiers, ``->`` (right
  associative), ``|``, ``&``, ``~``; ``t = s``, ``N(t)`` and ``false`` are
  atoms,
* program files hold one equation per line, ``lhs = rhs.``, with ``#``
  comments.

Symbol arities are inferred from use and must be consistent within one
parse (and with an optional ambient signature).
"""

from __future__ import annotations

import re
from typing import Optional

from .syntax import (
    And,
    App,
    Eq,
    Equation,
    Exists,
    FALSUM,
    Forall,
    Implies,
    KIND_PROGRAM,
    NAtom,
    Or,
    Program,
    SUCC,
    Symbol,
    Term,
    Var,
    ZERO,
    is_variable_name,
)


class ParseError(Exception):
    """Syntax error with line/column information."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        if line:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<id>[A-Za-z_][A-Za-z0-9_]*|0)"
    r"|(?P<op>->|\||&|~|=|\(|\)|,|\.)"
    r"|(?P<bad>\S))"
)

_KEYWORDS = {"forall", "exists", "false"}


class _Tokens:
    def __init__(self, text: str, line: int = 0):
        self.text = text
        self.line = line
        self.items = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                break
            if m.group("bad"):
                raise ParseError(f"unexpected character {m.group('bad')!r}", line, m.start("bad") + 1)
            kind = "id" if m.group("id") else "op"
            self.items.append((kind, m.group(kind), m.start(kind) + 1))
            pos = m.end()
        self.i = 0

    def peek(self) -> Optional[tuple]:
        return self.items[self.i] if self.i < len(self.items) else None

    def next(self) -> tuple:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.line, len(self.text) + 1)
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.peek()
        if tok is None or tok[1] != value:
            got = tok[1] if tok else "end of input"
            col = tok[2] if tok else len(self.text) + 1
            raise ParseError(f"expected {value!r}, got {got!r}", self.line, col)
        self.i += 1

    def at_end(self) -> bool:
        return self.i >= len(self.items)


class _SignatureBuilder:
    """Tracks inferred symbol arities; complains on conflicts."""

    def __init__(self, ambient: Optional[dict] = None, line: int = 0):
        self.symbols: dict = dict(ambient or {})
        self.line = line

    def symbol(self, name: str, arity: int, column: int) -> Symbol:
        if name == "0":
            if arity != 0:
                raise ParseError("0 takes no arguments", self.line, column)
            return ZERO
        if name == "S":
            if arity != 1:
                raise ParseError("S takes exactly one argument", self.line, column)
            return SUCC
        known = self.symbols.get(name)
        if known is not None:
            if known.arity != arity:
                raise ParseError(
                    f"symbol {name} used with arity {arity}, expected {known.arity}",
                    self.line,
                    column,
                )
            return known
        sym = Symbol(name, arity, KIND_PROGRAM)
        self.symbols[name] = sym
        return sym


def _parse_term(toks: _Tokens, sig: _SignatureBuilder, bound: tuple) -> Term:
    kind, value, col = toks.next()
    if kind != "id":
        raise ParseError(f"expected a term, got {value!r}", toks.line, col)
    if value in _KEYWORDS:
        raise ParseError(f"{value!r} cannot start a term", toks.line, col)
    nxt = toks.peek()
    if nxt is not None and nxt[1] == "(":
        toks.next()
        args = []
        if toks.peek() is not None and toks.peek()[1] == ")":
            toks.next()
        else:
            while True:
                args.append(_parse_term(toks, sig, bound))
                kind2, value2, col2 = toks.next()
                if value2 == ")":
                    break
                if value2 != ",":
                    raise ParseError(f"expected ',' or ')', got {value2!r}", toks.line, col2)
        return App(sig.symbol(value, len(args), col), tuple(args))
    if value in bound or (is_variable_name(value) and value != "0"):
        return Var(value)
    return App(sig.symbol(value, 0, col), ())


def _parse_atom(toks: _Tokens, sig: _SignatureBuilder, bound: tuple):
    tok = toks.peek()
    if tok is None:
        raise ParseError("unexpected end of input", toks.line, len(toks.text) + 1)
    kind, value, col = tok
    if value in ("forall", "exists"):
        # a quantifier may start wherever an atom may; its scope extends
        # maximally to the right
        toks.next()
        kind2, name, col2 = toks.next()
        if kind2 != "id" or name in _KEYWORDS or name == "0":
            raise ParseError(f"bad bound variable {name!r}", toks.line, col2)
        body = _parse_formula(toks, sig, (name,) + bound)
        return (Forall if value == "forall" else Exists)(name, body)
    if value == "(":
        toks.next()
        f = _parse_formula(toks, sig, bound)
        toks.expect(")")
        return f
    if value == "~":
        toks.next()
        return Implies(_parse_atom(toks, sig, bound), FALSUM)
    if value == "false":
        toks.next()
        return FALSUM
    if value == "N" and toks.i + 1 < len(toks.items) and toks.items[toks.i + 1][1] == "(":
        toks.next()
        toks.expect("(")
        t = _parse_term(toks, sig, bound)
        toks.expect(")")
        return NAtom(t)
    lhs = _parse_term(toks, sig, bound)
    toks.expect("=")
    rhs = _parse_term(toks, sig, bound)
    return Eq(lhs, rhs)


def _parse_conj(toks: _Tokens, sig: _SignatureBuilder, bound: tuple):
    f = _parse_atom(toks, sig, bound)
    while toks.peek() is not None and toks.peek()[1] == "&":
        toks.next()
        f = And(f, _parse_atom(toks, sig, bound))
    return f


def _parse_disj(toks: _Tokens, sig: _SignatureBuilder, bound: tuple):
    f = _parse_conj(toks, sig, bound)
    while toks.peek() is not None and toks.peek()[1] == "|":
        toks.next()
        f = Or(f, _parse_conj(toks, sig, bound))
    return f


def _parse_impl(toks: _Tokens, sig: _SignatureBuilder, bound: tuple):
    f = _parse_disj(toks, sig, bound)
    if toks.peek() is not None and toks.peek()[1] == "->":
        toks.next()
        return Implies(f, _parse_impl(toks, sig, bound))
    return f


def _parse_formula(toks: _Tokens, sig: _SignatureBuilder, bound: tuple):
    return _parse_impl(toks, sig, bound)


def parse_formula(text: str, signature: Optional[dict] = None, line: int = 0):
    toks = _Tokens(text, line)
    sig = _SignatureBuilder(signature, line)
    f = _parse_formula(toks, sig, ())
    if not toks.at_end():
        _, value, col = toks.peek()
        raise ParseError(f"trailing input {value!r}", line, col)
    return f


def parse_term(text: str, signature: Optional[dict] = None, line: int = 0) -> Term:
    toks = _Tokens(text, line)
    sig = _SignatureBuilder(signature, line)
    t = _parse_term(toks, sig, ())
    if not toks.at_end():
        _, value, col = toks.peek()
        raise ParseError(f"trailing input {value!r}", line, col)
    return t


def parse_equation(text: str, signature: Optional[dict] = None, line: int = 0) -> Equation:
    toks = _Tokens(text, line)
    sig = _SignatureBuilder(signature, line)
    lhs = _parse_term(toks, sig, ())
    toks.expect("=")
    rhs = _parse_term(toks, sig, ())
    if toks.peek() is not None and toks.peek()[1] == ".":
        toks.next()
    if not toks.at_end():
        _, value, col = toks.peek()
        raise ParseError(f"trailing input {value!r}", line, col)
    return Equation(lhs, rhs)


def parse_program(
    text: str,
    registry=None,
    distinguished: Optional[str] = None,
) -> Program:
    """Parse a program file: one ``lhs = rhs.`` equation per line.

    When a registry mapping is supplied, program symbols whose names are
    registered become pr-linked.  The signature is inferred from the text;
    arities must be consistent across lines.
    """
    sig = _SignatureBuilder()
    equations = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sig.line = lineno
        toks = _Tokens(line, lineno)
        lhs = _parse_term(toks, sig, ())
        toks.expect("=")
        rhs = _parse_term(toks, sig, ())
        toks.expect(".")
        if not toks.at_end():
            _, value, col = toks.peek()
            raise ParseError(f"trailing input {value!r}", lineno, col)
        eqn = Equation(lhs, rhs)
        if not any(eqn == e for e in equations):
            equations.append(eqn)
    links = {}
    if registry is not None:
        for name, sym in sig.symbols.items():
            if name in registry:
                links[name] = name
    dist = None
    if distinguished is not None:
        dist = sig.symbols.get(distinguished)
        if dist is None:
            raise ParseError(f"distinguished symbol {distinguished} not in program")
    return Program(tuple(equations), dist, links)
