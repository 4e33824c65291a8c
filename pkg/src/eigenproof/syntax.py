"""First-order terms, formulas, equations and equation programs.

The term language is fixed: the constructors ``0`` and ``S`` plus whatever
function symbols an equation program introduces.  Formulas are classical
first-order formulas with equality; the unary data atom ``N(t)`` is only
meaningful in the data-predicate theory mode and is rejected elsewhere by
the proof checker.  Every value here is immutable, so all operations are
pure and safe to share between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Union

KIND_ZERO = "constructor-zero"
KIND_SUCC = "constructor-succ"
KIND_PROGRAM = "program-symbol"

#: Lexical class of variable names: u..z optionally followed by digits or
#: underscores.  Identifiers outside this class denote function symbols.
VAR_RE = re.compile(r"^[u-z][0-9_]*$")

#: Prefix reserved for machine-generated fresh variables.
FRESH_VAR_PREFIX = "v_"
#: Prefix reserved for machine-generated auxiliary function symbols.
FRESH_SYM_PREFIX = "aux_"


class CaptureViolation(Exception):
    """Substitution would capture a free variable."""


class BadPosition(Exception):
    """An occurrence path does not address the expected subterm."""


def is_variable_name(name: str) -> bool:
    return VAR_RE.match(name) is not None


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int
    kind: str = KIND_PROGRAM

    def __post_init__(self) -> None:
        if self.kind == KIND_ZERO and self.arity != 0:
            raise ValueError("zero constructor must have arity 0")
        if self.kind == KIND_SUCC and self.arity != 1:
            raise ValueError("successor constructor must have arity 1")

    def __repr__(self) -> str:
        return f"Symbol({self.name!r}/{self.arity})"


ZERO = Symbol("0", 0, KIND_ZERO)
SUCC = Symbol("S", 1, KIND_SUCC)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True, eq=False)
class Var:
    name: str

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return isinstance(other, Var) and self.name == other.name

    def __hash__(self) -> int:
        return hash(("v", self.name))

    def __repr__(self) -> str:
        return f"Var({self.name!r})"


@dataclass(frozen=True, eq=False)
class App:
    sym: Symbol
    args: tuple      # tuple[Term, ...]

    def __post_init__(self) -> None:
        if len(self.args) != self.sym.arity:
            raise ValueError(
                f"symbol {self.sym.name} expects {self.sym.arity} arguments, "
                f"got {len(self.args)}"
            )

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return (
            isinstance(other, App)
            and self.sym == other.sym
            and self.args == other.args
        )

    def __hash__(self) -> int:
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash(("a", self.sym.name, self.args))
            object.__setattr__(self, "_hash", cached)
        return cached

    def __repr__(self) -> str:
        return f"App({self.sym.name!r}, {self.args!r})"


Term = Union[Var, App]


def zero() -> App:
    return App(ZERO, ())


def succ(t: Term) -> App:
    return App(SUCC, (t,))


def numeral(n: int) -> Term:
    """The term S(...S(0)...) with n occurrences of S."""
    if n < 0:
        raise ValueError("numerals encode non-negative integers")
    t: Term = zero()
    for _ in range(n):
        t = succ(t)
    return t


def decode_numeral(t: Term) -> Optional[int]:
    """Inverse of `numeral`; None when t is not a numeral."""
    n = 0
    while True:
        if not isinstance(t, App):
            return None
        if t.sym == ZERO:
            return n
        if t.sym == SUCC:
            n += 1
            t = t.args[0]
        else:
            return None


def term_size(t: Term) -> int:
    stack = [t]
    n = 0
    while stack:
        u = stack.pop()
        n += 1
        if isinstance(u, App):
            stack.extend(u.args)
    return n


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, App):
            stack.extend(u.args)


def term_vars(t: Term) -> frozenset:
    out = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            out.add(u.name)
        else:
            stack.extend(u.args)
    return frozenset(out)


def term_symbols(t: Term) -> frozenset:
    out = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, App):
            out.add(u.sym)
            stack.extend(u.args)
    return frozenset(out)


def is_basic(t: Term) -> bool:
    """True iff t consists of 0, S and variables only."""
    return all(s.kind != KIND_PROGRAM for s in term_symbols(t))


def is_pr_term(t: Term, registry: Mapping) -> bool:
    """True iff every non-constructor symbol of t is a registered
    primitive recursive symbol (registry keyed by symbol name)."""
    return all(
        s.kind != KIND_PROGRAM or s.name in registry for s in term_symbols(t)
    )


def subst_term(t: Term, x: str, s: Term) -> Term:
    if isinstance(t, Var):
        return s if t.name == x else t
    if x not in term_vars(t):
        return t
    return App(t.sym, tuple(subst_term(a, x, s) for a in t.args))


def subst_term_map(t: Term, sigma: Mapping[str, Term]) -> Term:
    """Simultaneous substitution of several variables."""
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    return App(t.sym, tuple(subst_term_map(a, sigma) for a in t.args))


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True, eq=False)
class _Formula:
    def __eq__(self, other: object) -> bool:  # overridden per class
        raise NotImplementedError

    def __hash__(self) -> int:
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = self._compute_hash()
            object.__setattr__(self, "_hash", cached)
        return cached

    def _compute_hash(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Eq(_Formula):
    lhs: Term
    rhs: Term

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Eq) and self.lhs == other.lhs and self.rhs == other.rhs

    def _compute_hash(self):
        return hash(("eq", self.lhs, self.rhs))

    __hash__ = _Formula.__hash__


@dataclass(frozen=True, eq=False)
class NAtom(_Formula):
    term: Term

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, NAtom) and self.term == other.term

    def _compute_hash(self):
        return hash(("nat", self.term))

    __hash__ = _Formula.__hash__


@dataclass(frozen=True, eq=False)
class Falsum(_Formula):
    def __eq__(self, other):
        return isinstance(other, Falsum)

    def _compute_hash(self):
        return hash("falsum")

    __hash__ = _Formula.__hash__


@dataclass(frozen=True, eq=False)
class And(_Formula):
    left: "Formula"
    right: "Formula"

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, And) and self.left == other.left and self.right == other.right

    def _compute_hash(self):
        return hash(("and", self.left, self.right))

    __hash__ = _Formula.__hash__


@dataclass(frozen=True, eq=False)
class Or(_Formula):
    left: "Formula"
    right: "Formula"

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Or) and self.left == other.left and self.right == other.right

    def _compute_hash(self):
        return hash(("or", self.left, self.right))

    __hash__ = _Formula.__hash__


@dataclass(frozen=True, eq=False)
class Implies(_Formula):
    left: "Formula"
    right: "Formula"

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Implies) and self.left == other.left and self.right == other.right

    def _compute_hash(self):
        return hash(("imp", self.left, self.right))

    __hash__ = _Formula.__hash__


@dataclass(frozen=True, eq=False)
class Forall(_Formula):
    var: str
    body: "Formula"

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Forall) and self.var == other.var and self.body == other.body

    def _compute_hash(self):
        return hash(("all", self.var, self.body))

    __hash__ = _Formula.__hash__


@dataclass(frozen=True, eq=False)
class Exists(_Formula):
    var: str
    body: "Formula"

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Exists) and self.var == other.var and self.body == other.body

    def _compute_hash(self):
        return hash(("ex", self.var, self.body))

    __hash__ = _Formula.__hash__


Formula = Union[Eq, NAtom, Falsum, And, Or, Implies, Forall, Exists]

FALSUM = Falsum()


def neg(a: Formula) -> Formula:
    """Negation, encoded as an implication to falsum."""
    return Implies(a, FALSUM)


def free_vars(a: Union[Formula, Term]) -> frozenset:
    if isinstance(a, (Var, App)):
        return term_vars(a)
    out: set = set()
    _free_vars_into(a, frozenset(), out)
    return frozenset(out)


def _free_vars_into(a: Formula, bound: frozenset, out: set) -> None:
    if isinstance(a, Eq):
        out.update(term_vars(a.lhs) - bound)
        out.update(term_vars(a.rhs) - bound)
    elif isinstance(a, NAtom):
        out.update(term_vars(a.term) - bound)
    elif isinstance(a, Falsum):
        pass
    elif isinstance(a, (And, Or, Implies)):
        _free_vars_into(a.left, bound, out)
        _free_vars_into(a.right, bound, out)
    elif isinstance(a, (Forall, Exists)):
        _free_vars_into(a.body, bound | {a.var}, out)
    else:
        raise TypeError(f"not a formula: {a!r}")


def formula_symbols(a: Formula) -> frozenset:
    if isinstance(a, Eq):
        return term_symbols(a.lhs) | term_symbols(a.rhs)
    if isinstance(a, NAtom):
        return term_symbols(a.term)
    if isinstance(a, Falsum):
        return frozenset()
    if isinstance(a, (And, Or, Implies)):
        return formula_symbols(a.left) | formula_symbols(a.right)
    if isinstance(a, (Forall, Exists)):
        return formula_symbols(a.body)
    raise TypeError(f"not a formula: {a!r}")


def contains_natom(a: Formula) -> bool:
    if isinstance(a, NAtom):
        return True
    if isinstance(a, (Eq, Falsum)):
        return False
    if isinstance(a, (And, Or, Implies)):
        return contains_natom(a.left) or contains_natom(a.right)
    return contains_natom(a.body)


def free_for(t: Term, x: str, a: Formula) -> bool:
    """True iff no free occurrence of x in a lies below a quantifier that
    binds a variable of t."""
    tv = term_vars(t)

    def walk(f: Formula, shadowed: bool, captured: frozenset) -> bool:
        # shadowed: x is bound above; captured: t-variables bound above
        if isinstance(f, Eq):
            if shadowed or not captured:
                return True
            return x not in (term_vars(f.lhs) | term_vars(f.rhs))
        if isinstance(f, NAtom):
            if shadowed or not captured:
                return True
            return x not in term_vars(f.term)
        if isinstance(f, Falsum):
            return True
        if isinstance(f, (And, Or, Implies)):
            return walk(f.left, shadowed, captured) and walk(f.right, shadowed, captured)
        if isinstance(f, (Forall, Exists)):
            sh = shadowed or f.var == x
            cap = captured | ({f.var} & tv)
            return walk(f.body, sh, cap)
        raise TypeError(f"not a formula: {f!r}")

    return walk(a, False, frozenset())


def substitute(a: Formula, x: str, t: Term) -> Formula:
    """Replace every free occurrence of x in a by t.  Raises
    CaptureViolation when t is not free for x in a."""
    if not free_for(t, x, a):
        raise CaptureViolation(f"term is not free for {x}")
    return _substitute(a, x, t)


def _substitute(a: Formula, x: str, t: Term) -> Formula:
    if isinstance(a, Eq):
        return Eq(subst_term(a.lhs, x, t), subst_term(a.rhs, x, t))
    if isinstance(a, NAtom):
        return NAtom(subst_term(a.term, x, t))
    if isinstance(a, Falsum):
        return a
    if isinstance(a, And):
        return And(_substitute(a.left, x, t), _substitute(a.right, x, t))
    if isinstance(a, Or):
        return Or(_substitute(a.left, x, t), _substitute(a.right, x, t))
    if isinstance(a, Implies):
        return Implies(_substitute(a.left, x, t), _substitute(a.right, x, t))
    if isinstance(a, (Forall, Exists)):
        if a.var == x:
            return a
        if x not in free_vars(a):
            return a
        body = _substitute(a.body, x, t)
        return type(a)(a.var, body)
    raise TypeError(f"not a formula: {a!r}")


# ---------------------------------------------------------------------------
# Occurrence paths
#
# A path is a tuple of child indices from the formula root.  Children:
# Eq -> (lhs, rhs); NAtom -> (term,); And/Or/Implies -> (left, right);
# Forall/Exists -> (body,); App -> its argument terms.  A path addressing
# a term always crosses from formula nodes into term nodes.


Path = tuple


def node_at(a: Union[Formula, Term], path: Path) -> Union[Formula, Term]:
    node: Union[Formula, Term] = a
    for i in path:
        kids = _children(node)
        if not 0 <= i < len(kids):
            raise BadPosition(f"path {path} leaves the tree")
        node = kids[i]
    return node


def _children(node: Union[Formula, Term]) -> tuple:
    if isinstance(node, Var):
        return ()
    if isinstance(node, App):
        return node.args
    if isinstance(node, Eq):
        return (node.lhs, node.rhs)
    if isinstance(node, NAtom):
        return (node.term,)
    if isinstance(node, Falsum):
        return ()
    if isinstance(node, (And, Or, Implies)):
        return (node.left, node.right)
    if isinstance(node, (Forall, Exists)):
        return (node.body,)
    raise TypeError(f"not a formula or term: {node!r}")


def _rebuild(node: Union[Formula, Term], kids: tuple) -> Union[Formula, Term]:
    if isinstance(node, App):
        return App(node.sym, kids)
    if isinstance(node, Eq):
        return Eq(kids[0], kids[1])
    if isinstance(node, NAtom):
        return NAtom(kids[0])
    if isinstance(node, (And, Or, Implies)):
        return type(node)(kids[0], kids[1])
    if isinstance(node, (Forall, Exists)):
        return type(node)(node.var, kids[0])
    raise TypeError(f"cannot rebuild {node!r}")


def _replace_at(node, path: Path, s: Term, expect: Term):
    if not path:
        if node != expect:
            raise BadPosition(
                f"path does not address an occurrence of the expected term"
            )
        return s
    kids = _children(node)
    i = path[0]
    if not 0 <= i < len(kids):
        raise BadPosition(f"child index {i} out of range")
    new = _replace_at(kids[i], path[1:], s, expect)
    return _rebuild(node, kids[:i] + (new,) + kids[i + 1 :])


def replace_occurrences(a: Formula, t: Term, s: Term, positions) -> Formula:
    """Replace exactly the addressed occurrences of t in a by s.

    Raises BadPosition when a path does not address an occurrence of t.
    """
    result: Union[Formula, Term] = a
    for path in sorted(set(positions)):
        if node_at(a, path) != t:
            raise BadPosition(f"path {path} does not address the term")
        result = _replace_at(result, path, s, t)

    # re-validate against the original tree shape: identical-shape guarantee
    return result  # type: ignore[return-value]


def term_positions(a: Union[Formula, Term], t: Term):
    """All occurrence paths of term t inside a (formula or term)."""
    out = []

    def walk(node, path):
        if node == t and isinstance(node, (Var, App)):
            out.append(tuple(path))
            # keep walking: t cannot occur strictly inside itself, skip
            return
        for i, kid in enumerate(_children(node)):
            path.append(i)
            walk(kid, path)
            path.pop()

    walk(a, [])
    return out


def binders_on_path(a: Formula, path: Path) -> frozenset:
    """Variables bound by quantifiers crossed while following path."""
    node: Union[Formula, Term] = a
    bound = set()
    for i in path:
        if isinstance(node, (Forall, Exists)):
            bound.add(node.var)
        node = _children(node)[i]
    return frozenset(bound)


def var_positions(a: Formula, x: str):
    """Paths of the free occurrences of variable x in a."""
    out = []

    def walk(node, path, shadowed):
        if isinstance(node, Var):
            if node.name == x and not shadowed:
                out.append(tuple(path))
            return
        sh = shadowed
        if isinstance(node, (Forall, Exists)) and node.var == x:
            sh = True
        for i, kid in enumerate(_children(node)):
            path.append(i)
            walk(kid, path, sh)
            path.pop()

    walk(a, [], False)
    return out


def alpha_eq(a: Formula, b: Formula) -> bool:
    """Alpha-equivalence of formulas (bound-variable names ignored)."""
    return _alpha(a, b, {}, {})


def _alpha(a: Formula, b: Formula, ma: dict, mb: dict) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Eq):
        return _alpha_term(a.lhs, b.lhs, ma, mb) and _alpha_term(a.rhs, b.rhs, ma, mb)
    if isinstance(a, NAtom):
        return _alpha_term(a.term, b.term, ma, mb)
    if isinstance(a, Falsum):
        return True
    if isinstance(a, (And, Or, Implies)):
        return _alpha(a.left, b.left, ma, mb) and _alpha(a.right, b.right, ma, mb)
    if isinstance(a, (Forall, Exists)):
        tag = f"!{len(ma)}"
        ma2 = dict(ma)
        mb2 = dict(mb)
        ma2[a.var] = tag
        mb2[b.var] = tag
        return _alpha(a.body, b.body, ma2, mb2)
    raise TypeError(f"not a formula: {a!r}")


def _alpha_term(s: Term, t: Term, ma: dict, mb: dict) -> bool:
    if isinstance(s, Var) and isinstance(t, Var):
        return ma.get(s.name, s.name) == mb.get(t.name, t.name)
    if isinstance(s, App) and isinstance(t, App):
        return s.sym == t.sym and len(s.args) == len(t.args) and all(
            _alpha_term(u, v, ma, mb) for u, v in zip(s.args, t.args)
        )
    return False


# ---------------------------------------------------------------------------
# Equations and programs


@dataclass(frozen=True, eq=False)
class Equation:
    lhs: Term
    rhs: Term

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Equation) and self.lhs == other.lhs and self.rhs == other.rhs

    def __hash__(self):
        return hash(("eqn", self.lhs, self.rhs))

    def __repr__(self):
        return f"Equation({self.lhs!r}, {self.rhs!r})"

    def vars(self) -> frozenset:
        return term_vars(self.lhs) | term_vars(self.rhs)

    def formula(self) -> Eq:
        return Eq(self.lhs, self.rhs)


def equation_closure(e: Equation) -> Formula:
    """Universal closure of an equation, binding free variables in sorted
    name order."""
    f: Formula = e.formula()
    for v in sorted(e.vars(), reverse=True):
        f = Forall(v, f)
    return f


@dataclass(frozen=True)
class Program:
    """A finite set of equations with an optional distinguished symbol and
    links from its symbols into a primitive recursive definition registry."""

    equations: tuple            # tuple[Equation, ...]
    distinguished: Optional[Symbol] = None
    pr_links: Mapping[str, str] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.pr_links is None:
            object.__setattr__(self, "pr_links", {})
        if self.distinguished is not None:
            if self.distinguished not in self.symbols():
                raise ValueError(
                    f"distinguished symbol {self.distinguished.name} does not "
                    f"occur in the program"
                )
        for name in self.pr_links:
            if all(s.name != name for s in self.symbols()):
                raise ValueError(f"pr-linked symbol {name} not in program")

    def symbols(self) -> frozenset:
        out = set()
        for e in self.equations:
            out |= term_symbols(e.lhs) | term_symbols(e.rhs)
        return frozenset(out)

    def signature(self) -> dict:
        return {s.name: s for s in self.symbols()}

    def has_equation(self, e: Equation) -> bool:
        return any(e == mine for mine in self.equations)

    def axiom_closures(self) -> tuple:
        return tuple(equation_closure(e) for e in self.equations)

    def with_distinguished(self, sym: Symbol) -> "Program":
        return Program(self.equations, sym, dict(self.pr_links))


def equations_match_renamed(a: Equation, b: Equation) -> bool:
    """True when a and b are equal up to a bijective renaming of variables."""
    fwd: dict = {}
    bwd: dict = {}

    def go(s: Term, t: Term) -> bool:
        if isinstance(s, Var) and isinstance(t, Var):
            if fwd.setdefault(s.name, t.name) != t.name:
                return False
            if bwd.setdefault(t.name, s.name) != s.name:
                return False
            return True
        if isinstance(s, App) and isinstance(t, App):
            return s.sym == t.sym and all(go(u, v) for u, v in zip(s.args, t.args))
        return False

    return go(a.lhs, b.lhs) and go(a.rhs, b.rhs)


# ---------------------------------------------------------------------------
# Printing


def term_to_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    # compress successor chains iteratively to keep deep numerals cheap
    chain = 0
    while isinstance(t, App) and t.sym == SUCC:
        chain += 1
        t = t.args[0]
    if isinstance(t, Var):
        core = t.name
    elif t.sym == ZERO:
        core = "0"
    elif not t.args:
        core = t.sym.name
    else:
        core = f"{t.sym.name}({','.join(term_to_str(a) for a in t.args)})"
    for _ in range(chain):
        core = f"S({core})"
    return core


# precedence levels: quantifier 0 < implies 1 < or 2 < and 3 < unary 4 < atom 5
def formula_to_str(a: Formula) -> str:
    return _fmt(a, 0)


def _fmt(a: Formula, ctx: int) -> str:
    if isinstance(a, Falsum):
        return "false"
    if isinstance(a, Eq):
        return f"{term_to_str(a.lhs)} = {term_to_str(a.rhs)}"
    if isinstance(a, NAtom):
        return f"N({term_to_str(a.term)})"
    if isinstance(a, Implies):
        if isinstance(a.right, Falsum):
            s = f"~{_fmt(a.left, 4)}"
            return s if ctx <= 4 else f"({s})"
        s = f"{_fmt(a.left, 2)} -> {_fmt(a.right, 1)}"
        return s if ctx <= 1 else f"({s})"
    if isinstance(a, Or):
        s = f"{_fmt(a.left, 3)} | {_fmt(a.right, 2)}"
        return s if ctx <= 2 else f"({s})"
    if isinstance(a, And):
        s = f"{_fmt(a.left, 4)} & {_fmt(a.right, 3)}"
        return s if ctx <= 3 else f"({s})"
    if isinstance(a, (Forall, Exists)):
        q = "forall" if isinstance(a, Forall) else "exists"
        s = f"{q} {a.var} {_fmt(a.body, 0)}"
        return s if ctx == 0 else f"({s})"
    raise TypeError(f"not a formula: {a!r}")


def equation_to_str(e: Equation) -> str:
    return f"{term_to_str(e.lhs)} = {term_to_str(e.rhs)}"


def program_to_str(p: Program) -> str:
    return "".join(equation_to_str(e) + ".\n" for e in p.equations)


def path_to_str(path: Path) -> str:
    return ".".join(str(i) for i in path)


def path_from_str(text: str) -> Path:
    text = text.strip()
    if not text:
        raise ValueError("empty occurrence path")
    return tuple(int(p) for p in text.split("."))


class NameSource:
    """Generates fresh variable/symbol names with the reserved prefixes,
    avoiding a given set of used names."""

    def __init__(self, used=()):
        self._used = set(used)
        self._var_n = 0
        self._sym_n = 0

    def reserve(self, names) -> None:
        self._used.update(names)

    def fresh_var(self) -> str:
        while True:
            self._var_n += 1
            name = f"{FRESH_VAR_PREFIX}{self._var_n}"
            if name not in self._used:
                self._used.add(name)
                return name

    def fresh_symbol_name(self) -> str:
        while True:
            self._sym_n += 1
            name = f"{FRESH_SYM_PREFIX}{self._sym_n}"
            if name not in self._used:
                self._used.add(name)
                return name
