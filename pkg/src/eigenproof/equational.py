"""Equational logic over equation programs.

The calculus has four rules: program axioms, reflexivity, instantiation of
a variable by a term, and replacement of occurrences of a term by an
equal term.  Derivations are explicit certificate trees; every search
routine returns certificates that `check_eq_derivation` re-validates
independently.

Search is budget-bounded and deterministic.  A negative answer always
means "nothing found within the budget", never underivability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from .syntax import (
    App,
    BadPosition,
    Equation,
    NameSource,
    Program,
    Term,
    Var,
    decode_numeral,
    node_at,
    numeral,
    replace_occurrences,
    subst_term,
    term_size,
    term_to_str,
    term_vars,
)

AXIOM = "axiom"
REFL = "refl"
INST = "inst"
REPL = "repl"


class NotOrientable(Exception):
    """A rewrite-based routine was given a program with a variable
    left-hand side."""


@dataclass(frozen=True)
class SearchBudget:
    max_steps: int = 10000
    max_term_size: int = 64

    def __post_init__(self) -> None:
        if self.max_steps <= 0 or self.max_term_size <= 0:
            raise ValueError("budget bounds must be positive")


@dataclass(frozen=True, eq=False)
class EqStep:
    """One derivation step.  Premises are embedded step objects, so a
    derivation is the tree hanging off its final step."""

    rule: str
    premises: tuple = ()            # tuple[EqStep, ...]
    equation: Optional[Equation] = None   # axiom payload
    term: Optional[Term] = None     # refl term or inst substitute
    var: Optional[str] = None       # inst variable
    positions: tuple = ()           # repl occurrence paths over the pair


@dataclass(frozen=True)
class EqValid:
    equation: Equation

    @property
    def ok(self) -> bool:
        return True


@dataclass(frozen=True)
class EqInvalid:
    step: int
    reason: str

    @property
    def ok(self) -> bool:
        return False


def _steps_in_order(d: EqStep) -> List[EqStep]:
    """Topological (premises-first) listing of the distinct steps."""
    order: List[EqStep] = []
    seen = set()
    stack: List[tuple] = [(d, False)]
    while stack:
        step, expanded = stack.pop()
        if id(step) in seen:
            continue
        if expanded:
            seen.add(id(step))
            order.append(step)
        else:
            stack.append((step, True))
            for p in reversed(step.premises):
                if id(p) not in seen:
                    stack.append((p, False))
    return order


def _check_term_language(t: Term, signature: dict) -> Optional[str]:
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, App):
            known = signature.get(u.sym.name)
            if known is None and u.sym.kind == "program-symbol":
                return f"unknown symbol {u.sym.name}"
            if known is not None and known.arity != u.sym.arity:
                return f"arity mismatch for {u.sym.name}"
            stack.extend(u.args)
    return None


def check_eq_derivation(p: Program, d: EqStep):
    """Validate a derivation against the four rules; the verdict carries the
    derived equation or pinpoints the first failing step."""
    signature = p.signature()
    concl: dict = {}
    for idx, step in enumerate(_steps_in_order(d), start=1):
        if step.rule == AXIOM:
            if step.equation is None or step.premises:
                return EqInvalid(idx, "malformed axiom step")
            if not p.has_equation(step.equation):
                return EqInvalid(idx, "equation is not in the program")
            concl[id(step)] = step.equation
        elif step.rule == REFL:
            if step.term is None or step.premises:
                return EqInvalid(idx, "malformed reflexivity step")
            bad = _check_term_language(step.term, signature)
            if bad:
                return EqInvalid(idx, bad)
            concl[id(step)] = Equation(step.term, step.term)
        elif step.rule == INST:
            if len(step.premises) != 1 or step.var is None or step.term is None:
                return EqInvalid(idx, "malformed instantiation step")
            bad = _check_term_language(step.term, signature)
            if bad:
                return EqInvalid(idx, bad)
            prem = concl[id(step.premises[0])]
            concl[id(step)] = Equation(
                subst_term(prem.lhs, step.var, step.term),
                subst_term(prem.rhs, step.var, step.term),
            )
        elif step.rule == REPL:
            if len(step.premises) != 2 or not step.positions:
                return EqInvalid(idx, "malformed replacement step")
            main = concl[id(step.premises[0])]
            eqn = concl[id(step.premises[1])]
            pair = main.formula()
            try:
                for path in step.positions:
                    if node_at(pair, path) != eqn.lhs:
                        return EqInvalid(
                            idx, "position does not address the replaced term"
                        )
                replaced = replace_occurrences(
                    main.formula(), eqn.lhs, eqn.rhs, step.positions
                )
            except BadPosition as exc:
                return EqInvalid(idx, str(exc))
            concl[id(step)] = Equation(replaced.lhs, replaced.rhs)
        else:
            return EqInvalid(idx, f"unknown rule {step.rule}")
    return EqValid(concl[id(d)])


def conclusion_of(d: EqStep) -> Equation:
    """Conclusion of a derivation assumed well-formed (unchecked walk)."""
    concl: dict = {}
    for step in _steps_in_order(d):
        if step.rule == AXIOM:
            concl[id(step)] = step.equation
        elif step.rule == REFL:
            concl[id(step)] = Equation(step.term, step.term)
        elif step.rule == INST:
            prem = concl[id(step.premises[0])]
            concl[id(step)] = Equation(
                subst_term(prem.lhs, step.var, step.term),
                subst_term(prem.rhs, step.var, step.term),
            )
        else:
            main = concl[id(step.premises[0])]
            eqn = concl[id(step.premises[1])]
            replaced = replace_occurrences(
                main.formula(), eqn.lhs, eqn.rhs, step.positions
            )
            concl[id(step)] = Equation(replaced.lhs, replaced.rhs)
    return concl[id(d)]


# ---------------------------------------------------------------------------
# Matching and certified rewriting


def match_term(pattern: Term, subject: Term, sigma: Optional[dict] = None):
    """First-order matching; returns the substitution or None."""
    if sigma is None:
        sigma = {}
    if isinstance(pattern, Var):
        bound = sigma.get(pattern.name)
        if bound is None:
            sigma[pattern.name] = subject
            return sigma
        return sigma if bound == subject else None
    if not isinstance(subject, App) or subject.sym != pattern.sym:
        return None
    for pa, sa in zip(pattern.args, subject.args):
        if match_term(pa, sa, sigma) is None:
            return None
    return sigma


def _instantiate_equation(e: Equation, sigma: dict, names: NameSource) -> EqStep:
    """Derivation of the sigma-instance of a program equation.  The
    instantiation rule substitutes one variable at a time, so colliding
    substitutes go through fresh intermediates."""
    step = EqStep(AXIOM, equation=e)
    order = sorted(sigma)
    values = dict(sigma)
    pattern_vars = set(order)
    # rename apart when a substitute mentions a pattern variable that is
    # substituted later
    late = set(order)
    renames = []
    for v in order:
        late.discard(v)
        if term_vars(values[v]) & late:
            fresh = names.fresh_var()
            renames.append((fresh, values[v]))
            values[v] = Var(fresh)
    for v in order:
        step = EqStep(INST, (step,), var=v, term=values[v])
    for fresh, value in renames:
        step = EqStep(INST, (step,), var=fresh, term=value)
    return step


def _usable_rules(p: Program) -> List[Equation]:
    """Equations usable for left-to-right rewriting: non-variable left side
    and no extra variables on the right."""
    out = []
    for e in p.equations:
        if isinstance(e.lhs, Var):
            continue
        if term_vars(e.rhs) - term_vars(e.lhs):
            continue
        out.append(e)
    return out


def _find_redex(t: Term, rules: List[Equation], path: tuple = ()):
    """Leftmost-innermost redex: (path, rule, sigma) or None."""
    if isinstance(t, App):
        for i, a in enumerate(t.args):
            hit = _find_redex(a, rules, path + (i,))
            if hit is not None:
                return hit
        for rule in rules:
            sigma = match_term(rule.lhs, t, {})
            if sigma is not None:
                return path, rule, sigma
    return None


class _RewriteTrace:
    """Rewrites the right side of `start = start` step by step, keeping the
    certified main equation `start = current` up to date."""

    def __init__(self, p: Program, start: Term, budget: SearchBudget, names: NameSource):
        self.program = p
        self.budget = budget
        self.names = names
        self.rules = _usable_rules(p)
        self.current = start
        self.main = EqStep(REFL, term=start)
        self.steps_used = 0
        self.exhausted = False

    def seed(self, main: EqStep, current: Term) -> None:
        self.main = main
        self.current = current

    def normalize(self) -> Term:
        while self.steps_used < self.budget.max_steps:
            hit = _find_redex(self.current, self.rules, ())
            if hit is None:
                return self.current
            path, rule, sigma = hit
            rhs_inst = _subst_map(rule.rhs, sigma)
            new_term = _replace_term_at(self.current, path, rhs_inst)
            if term_size(new_term) > self.budget.max_term_size:
                self.exhausted = True
                return self.current
            rule_step = _instantiate_equation(rule, sigma, self.names)
            self.main = EqStep(
                REPL, (self.main, rule_step), positions=((1,) + path,)
            )
            self.current = new_term
            self.steps_used += 1
        self.exhausted = True
        return self.current


def _subst_map(t: Term, sigma: dict) -> Term:
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    return App(t.sym, tuple(_subst_map(a, sigma) for a in t.args))


def _replace_term_at(t: Term, path: tuple, s: Term) -> Term:
    if not path:
        return s
    args = list(t.args)
    args[path[0]] = _replace_term_at(args[path[0]], path[1:], s)
    return App(t.sym, tuple(args))


def _program_names(p: Program) -> set:
    names = {s.name for s in p.symbols()}
    for e in p.equations:
        names |= e.vars()
    return names


def rewrite_eval(p: Program, t: Term, budget: Optional[SearchBudget] = None):
    """Leftmost-innermost rewriting of t to a numeral with a certificate.

    Requires every program equation to be left-to-right orientable (left
    side not a variable).  Equations that introduce fresh right-hand-side
    variables can never fire deterministically and are skipped.
    """
    budget = budget or SearchBudget()
    for e in p.equations:
        if isinstance(e.lhs, Var):
            raise NotOrientable(f"equation {term_to_str(e.lhs)} = ... has a variable left side")
    trace = _RewriteTrace(p, t, budget, NameSource(_program_names(p) | term_vars(t)))
    normal = trace.normalize()
    value = decode_numeral(normal)
    if value is None or trace.exhausted:
        return None
    return value, trace.main


# ---------------------------------------------------------------------------
# Saturation search


class _Saturation:
    """Deterministic forward-chaining saturation.  Every materialized step
    counts against the budget, and the enumeration order is independent of
    the budget, so anything found at budget b is found at any budget >= b."""

    def __init__(self, p: Program, budget: SearchBudget):
        self.program = p
        self.budget = budget
        self.steps_used = 0
        self.by_equation: dict = {}
        self.order: List[Equation] = []
        self.pool: List[Term] = []
        self._pool_seen = set()
        self.exhausted = False

    def _add_pool_term(self, t: Term) -> None:
        if term_size(t) > self.budget.max_term_size:
            return
        if t in self._pool_seen:
            return
        self._pool_seen.add(t)
        self.pool.append(t)

    def _pool_from_term(self, t: Term) -> None:
        stack = [t]
        while stack:
            u = stack.pop()
            self._add_pool_term(u)
            if isinstance(u, App):
                stack.extend(u.args)

    def add(self, eqn: Equation, step: EqStep) -> bool:
        """Record a derived equation; returns True when it is new."""
        if self.steps_used >= self.budget.max_steps:
            self.exhausted = True
            return False
        self.steps_used += 1
        if eqn in self.by_equation:
            return False
        if (
            term_size(eqn.lhs) > self.budget.max_term_size
            or term_size(eqn.rhs) > self.budget.max_term_size
        ):
            return False
        self.by_equation[eqn] = step
        self.order.append(eqn)
        self._pool_from_term(eqn.lhs)
        self._pool_from_term(eqn.rhs)
        return True

    def run(self, found) -> Optional[EqStep]:
        """Saturate until `found(eqn, step)` returns a finished derivation,
        the budget runs out, or nothing new can be derived."""
        for e in self.program.equations:
            if self.steps_used >= self.budget.max_steps:
                self.exhausted = True
                return None
            step = EqStep(AXIOM, equation=e)
            if self.add(e, step):
                hit = found(e, step)
                if hit is not None:
                    return hit
        for n in range(self.budget.max_term_size + 1):
            t = numeral(n)
            if term_size(t) > self.budget.max_term_size:
                break
            self._add_pool_term(t)

        while not self.exhausted:
            frontier = list(self.order)
            pool = sorted(self.pool, key=lambda t: (term_size(t), term_to_str(t)))
            added_any = False
            # one variable instantiated per step, candidates smallest first
            for eqn in frontier:
                for v in sorted(eqn.vars()):
                    for cand in pool:
                        if self.steps_used >= self.budget.max_steps:
                            self.exhausted = True
                            return None
                        new = Equation(
                            subst_term(eqn.lhs, v, cand),
                            subst_term(eqn.rhs, v, cand),
                        )
                        if new in self.by_equation:
                            continue
                        step = EqStep(
                            INST, (self.by_equation[eqn],), var=v, term=cand
                        )
                        if self.add(new, step):
                            added_any = True
                            hit = found(new, step)
                            if hit is not None:
                                return hit
            # replacement between derived ground-headed equations
            for main in frontier:
                for eqn in frontier:
                    if isinstance(eqn.lhs, Var) or eqn.lhs == eqn.rhs:
                        continue
                    pair = main.formula()
                    positions = _occurrences(pair, eqn.lhs)
                    for path in positions:
                        if self.steps_used >= self.budget.max_steps:
                            self.exhausted = True
                            return None
                        replaced = replace_occurrences(
                            pair, eqn.lhs, eqn.rhs, [path]
                        )
                        new = Equation(replaced.lhs, replaced.rhs)
                        if new in self.by_equation:
                            continue
                        step = EqStep(
                            REPL,
                            (self.by_equation[main], self.by_equation[eqn]),
                            positions=(path,),
                        )
                        if self.add(new, step):
                            added_any = True
                            hit = found(new, step)
                            if hit is not None:
                                return hit
            if not added_any:
                return None
        return None


def _occurrences(pair, t: Term):
    out = []

    def walk(node, path):
        if node == t:
            out.append(tuple(path))
            return
        if isinstance(node, Var):
            return
        kids = (node.lhs, node.rhs) if not isinstance(node, (Var, App)) else node.args
        for i, kid in enumerate(kids):
            path.append(i)
            walk(kid, path)
            path.pop()

    walk(pair, [])
    return out


def _symmetrize(eqn: Equation, step: EqStep) -> EqStep:
    refl = EqStep(REFL, term=eqn.lhs)
    return EqStep(REPL, (refl, step), positions=((0,),))


def derive_bounded(
    p: Program, goal: Equation, budget: Optional[SearchBudget] = None
) -> Optional[EqStep]:
    """Bounded saturation search for a derivation of `goal`.  Absence means
    nothing was found within the budget, not underivability."""
    budget = budget or SearchBudget()
    if goal.lhs == goal.rhs:
        return EqStep(REFL, term=goal.lhs)
    reverse = Equation(goal.rhs, goal.lhs)

    def found(eqn: Equation, step: EqStep):
        if eqn == goal:
            return step
        if eqn == reverse:
            return _symmetrize(eqn, step)
        return None

    sat = _Saturation(p, budget)
    return sat.run(found)


def coherence_probe(p: Program, budget: Optional[SearchBudget] = None):
    """Search for a derivable equation between two distinct numerals.

    Returns ("incoherent", witness) or ("no-witness-within-budget", budget);
    a negative result never claims coherence.
    """
    budget = budget or SearchBudget()

    def found(eqn: Equation, step: EqStep):
        a = decode_numeral(eqn.lhs)
        b = decode_numeral(eqn.rhs)
        if a is not None and b is not None and a != b:
            return step
        return None

    sat = _Saturation(p, budget)
    witness = sat.run(found)
    if witness is not None:
        return "incoherent", witness
    return "no-witness-within-budget", budget


def evaluate(
    p: Program, f, args: Iterable[int], budget: Optional[SearchBudget] = None
):
    """Compute f on numeral arguments by equational derivation.

    Returns (value, certificate) where the certificate derives
    f(args) = value-as-numeral, or None within the budget.  Tries certified
    rewriting first, then instantiation of extra right-hand-side variables
    followed by rewriting, then general saturation.
    """
    budget = budget or SearchBudget()
    sym = f if not isinstance(f, str) else p.signature().get(f)
    if sym is None or all(s != sym for s in p.symbols()):
        raise ValueError(f"symbol not in program")
    call = App(sym, tuple(numeral(a) for a in args))
    names = NameSource(_program_names(p))

    # phase 1: plain certified rewriting
    trace = _RewriteTrace(p, call, budget, names)
    normal = trace.normalize()
    value = decode_numeral(normal)
    if value is not None:
        return value, trace.main
    steps_left = budget.max_steps - trace.steps_used

    # phase 2: instantiate extra right-hand-side variables by numerals,
    # then rewrite; this covers equations that search for a witness
    for e in p.equations:
        if not isinstance(e.lhs, App) or e.lhs.sym != sym:
            continue
        extra = sorted(term_vars(e.rhs) - term_vars(e.lhs))
        if not extra:
            continue
        sigma0 = match_term(e.lhs, call, {})
        if sigma0 is None:
            continue
        for total in range(0, budget.max_term_size):
            if steps_left <= 0:
                break
            for combo in _tuples_summing(len(extra), total):
                if steps_left <= 0:
                    break
                sigma = dict(sigma0)
                sigma.update({v: numeral(n) for v, n in zip(extra, combo)})
                seed = _instantiate_equation(e, sigma, names)
                inner = _RewriteTrace(
                    p, call, SearchBudget(max(1, steps_left), budget.max_term_size), names
                )
                inner.seed(seed, _subst_map(e.rhs, sigma))
                normal = inner.normalize()
                steps_left -= inner.steps_used + 1
                value = decode_numeral(normal)
                if value is not None:
                    return value, inner.main

    # phase 3: general saturation
    def found(eqn: Equation, step: EqStep):
        if eqn.lhs == call:
            v = decode_numeral(eqn.rhs)
            if v is not None:
                return v, step
        if eqn.rhs == call:
            v = decode_numeral(eqn.lhs)
            if v is not None:
                return v, _symmetrize(eqn, step)
        return None

    sat = _Saturation(p, SearchBudget(max(1, steps_left), budget.max_term_size))
    hit = sat.run(found)
    if hit is not None:
        return hit
    return None


def _tuples_summing(k: int, total: int):
    if k == 0:
        if total == 0:
            yield ()
        return
    if k == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _tuples_summing(k - 1, total - first):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# Certificate serialization: one step per line, `id: rule(premises, data)`


def derivation_to_str(d: EqStep) -> str:
    order = _steps_in_order(d)
    ids = {id(step): f"e{i}" for i, step in enumerate(order, start=1)}
    lines = []
    for step in order:
        sid = ids[id(step)]
        if step.rule == AXIOM:
            lines.append(f"{sid}: axiom({_eqn_str(step.equation)})")
        elif step.rule == REFL:
            lines.append(f"{sid}: refl({term_to_str(step.term)})")
        elif step.rule == INST:
            lines.append(
                f"{sid}: inst({ids[id(step.premises[0])]}, {step.var}, {term_to_str(step.term)})"
            )
        else:
            paths = ", ".join(".".join(str(i) for i in p) for p in step.positions)
            lines.append(
                f"{sid}: repl({ids[id(step.premises[0])]}, {ids[id(step.premises[1])]}, {paths})"
            )
    return "\n".join(lines) + "\n"


def _eqn_str(e: Equation) -> str:
    return f"{term_to_str(e.lhs)} = {term_to_str(e.rhs)}"


def derivation_from_str(text: str, p: Program) -> EqStep:
    from .parser import ParseError, parse_equation, parse_term

    signature = p.signature()
    steps: dict = {}
    last: Optional[EqStep] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError("expected `id: rule(...)`", lineno, 1)
        sid, rest = line.split(":", 1)
        sid = sid.strip()
        rest = rest.strip()
        if "(" not in rest or not rest.endswith(")"):
            raise ParseError("expected `rule(arguments)`", lineno, 1)
        rule, argtext = rest.split("(", 1)
        rule = rule.strip()
        args = _split_top_level(argtext[:-1])
        if rule == AXIOM:
            step = EqStep(AXIOM, equation=parse_equation(args[0], signature, lineno))
        elif rule == REFL:
            step = EqStep(REFL, term=parse_term(args[0], signature, lineno))
        elif rule == INST:
            prem = steps.get(args[0])
            if prem is None:
                raise ParseError(f"unknown step {args[0]}", lineno, 1)
            step = EqStep(
                INST, (prem,), var=args[1], term=parse_term(args[2], signature, lineno)
            )
        elif rule == REPL:
            main = steps.get(args[0])
            eqn = steps.get(args[1])
            if main is None or eqn is None:
                raise ParseError("unknown premise step", lineno, 1)
            positions = tuple(
                tuple(int(x) for x in part.split(".")) for part in args[2:]
            )
            step = EqStep(REPL, (main, eqn), positions=positions)
        else:
            raise ParseError(f"unknown rule {rule}", lineno, 1)
        steps[sid] = step
        last = step
    if last is None:
        raise ParseError("empty derivation")
    return last


def _split_top_level(text: str) -> List[str]:
    parts = []
    depth = 0
    current = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    if current:
        parts.append("".join(current).strip())
    return [p for p in parts if p]
