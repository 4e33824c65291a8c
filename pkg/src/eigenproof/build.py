"""Proof-construction helpers shared by the proof generators.

Everything here builds explicit `Proof` trees for the kernel to check; no
construction is trusted.  Conclusions are computed eagerly so mistakes
surface as kernel rejections in tests, not as silently wrong formulas.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Tuple

from .kernel import Proof
from .syntax import (
    And,
    App,
    CaptureViolation,
    Eq,
    Exists,
    Falsum,
    Forall,
    Formula,
    Implies,
    NAtom,
    NameSource,
    Or,
    Term,
    Var,
    free_for,
    free_vars,
    node_at,
    replace_occurrences,
    substitute,
    term_vars,
    var_positions,
)


def assume(label: str, formula: Formula) -> Proof:
    return Proof("assume", (), formula, label=label)


def axiom(formula: Formula) -> Proof:
    return Proof("axiom", (), formula)


def eq_refl(t: Term) -> Proof:
    return Proof("eq_refl", (), Eq(t, t))


def imp_intro(label: str, antecedent: Formula, sub: Proof) -> Proof:
    return Proof(
        "imp_intro", (sub,), Implies(antecedent, sub.conclusion), label=label
    )


def imp_elim(major: Proof, minor: Proof) -> Proof:
    return Proof("imp_elim", (major, minor), major.conclusion.right)


def and_intro(left: Proof, right: Proof) -> Proof:
    return Proof("and_intro", (left, right), And(left.conclusion, right.conclusion))


def and_elim1(sub: Proof) -> Proof:
    return Proof("and_elim1", (sub,), sub.conclusion.left)


def and_elim2(sub: Proof) -> Proof:
    return Proof("and_elim2", (sub,), sub.conclusion.right)


def forall_elim(sub: Proof, t: Term) -> Proof:
    body = substitute(sub.conclusion.body, sub.conclusion.var, t)
    return Proof("forall_elim", (sub,), body, term=t)


def generalize(sub: Proof, var: str) -> Proof:
    """Universal introduction with the bound variable as its own
    eigenvariable."""
    return Proof("forall_intro", (sub,), Forall(var, sub.conclusion), var=var)


def forall_intro_as(sub: Proof, target: Forall, eigen: str) -> Proof:
    return Proof("forall_intro", (sub,), target, var=eigen)


def exists_intro(target: Exists, sub: Proof, t: Term) -> Proof:
    return Proof("exists_intro", (sub,), target, term=t)


def exists_elim(major: Proof, minor: Proof, eigen: str, label: str) -> Proof:
    return Proof(
        "exists_elim", (major, minor), minor.conclusion, var=eigen, label=label
    )


def eq_replace(main: Proof, eqn: Proof, positions) -> Proof:
    concl = replace_occurrences(
        main.conclusion, eqn.conclusion.lhs, eqn.conclusion.rhs, tuple(positions)
    )
    return Proof("eq_replace", (main, eqn), concl, positions=tuple(positions))


def eq_symm(sub: Proof) -> Proof:
    """From t = s derive s = t."""
    t = sub.conclusion.lhs
    return eq_replace(eq_refl(t), sub, [(0,)])


def n_zero() -> Proof:
    from .syntax import zero

    return Proof("n_zero", (), NAtom(zero()))


def n_succ(sub: Proof) -> Proof:
    from .syntax import succ

    return Proof("n_succ", (sub,), NAtom(succ(sub.conclusion.term)))


def n_induction(data: Proof, base: Proof, step: Proof, var: str, formula: Formula) -> Proof:
    concl = substitute(formula, var, data.conclusion.term)
    return Proof(
        "n_induction", (data, base, step), concl, var=var, formula=formula
    )


def forall_instantiate(pf: Proof, terms: Iterable[Term], names: NameSource) -> Proof:
    """Instantiate a block of leading universal quantifiers at the given
    terms, in order.  When a term would be captured by a later binder of
    the block, the block is first eliminated at fresh variables and then
    re-generalized one variable at a time."""
    terms = list(terms)
    if not terms:
        return pf
    direct = True
    concl = pf.conclusion
    for t in terms:
        if not isinstance(concl, Forall) or not free_for(t, concl.var, concl.body):
            direct = False
            break
        concl = substitute(concl.body, concl.var, t)
    if direct:
        cur = pf
        for t in terms:
            cur = forall_elim(cur, t)
        return cur
    fresh = [names.fresh_var() for _ in terms]
    cur = pf
    for w in fresh:
        cur = forall_elim(cur, Var(w))
    for w, t in zip(fresh, terms):
        cur = generalize(cur, w)
        cur = forall_elim(cur, t)
    return cur


def attach_unused_assumptions(pf: Proof, extras: Iterable[Tuple[str, Formula]]) -> Proof:
    """Makes the given labelled assumptions open in the proof without
    changing its conclusion (conjoin and project away)."""
    cur = pf
    for label, formula in extras:
        cur = and_elim1(and_intro(cur, assume(label, formula)))
    return cur


# ---------------------------------------------------------------------------
# Free-variable renaming (for eigenvariable probes and binder cosmetics)


def rename_free_var_term(t: Term, old: str, new: str) -> Term:
    if isinstance(t, Var):
        return Var(new) if t.name == old else t
    return App(t.sym, tuple(rename_free_var_term(a, old, new) for a in t.args))


def rename_free_var(a: Formula, old: str, new: str) -> Formula:
    """Renames free occurrences of `old` to `new`.  The caller must make
    sure `new` is not captured; no check is performed."""
    if isinstance(a, Eq):
        return Eq(
            rename_free_var_term(a.lhs, old, new),
            rename_free_var_term(a.rhs, old, new),
        )
    if isinstance(a, NAtom):
        return NAtom(rename_free_var_term(a.term, old, new))
    if isinstance(a, Falsum):
        return a
    if isinstance(a, (And, Or, Implies)):
        return type(a)(
            rename_free_var(a.left, old, new), rename_free_var(a.right, old, new)
        )
    if isinstance(a, (Forall, Exists)):
        if a.var == old:
            return a
        return type(a)(a.var, rename_free_var(a.body, old, new))
    raise TypeError(f"not a formula: {a!r}")


def rename_free_var_proof(pf: Proof, old: str, new: str) -> Proof:
    """Consistently renames a free variable through a whole proof tree,
    including eigenvariable and eigenterm data.  Used to build mutants for
    the eigenvariable soundness probes."""
    memo: Dict[int, Proof] = {}

    def go(node: Proof) -> Proof:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        premises = tuple(go(p) for p in node.premises)
        out = Proof(
            node.rule,
            premises,
            rename_free_var(node.conclusion, old, new),
            label=node.label,
            label2=node.label2,
            var=new if node.var == old else node.var,
            term=None if node.term is None else rename_free_var_term(node.term, old, new),
            positions=node.positions,
            formula=None
            if node.formula is None
            else rename_free_var(node.formula, old, new),
            node_id=node.node_id,
        )
        memo[id(node)] = out
        return out

    return go(pf)


def proof_var_names(pf: Proof) -> set:
    """Every variable name mentioned anywhere in a proof (free or bound,
    in formulas or instantiation data)."""
    out: set = set()
    seen: set = set()
    stack: List[Proof] = [pf]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        _formula_names_into(node.conclusion, out)
        if node.formula is not None:
            _formula_names_into(node.formula, out)
        if node.term is not None:
            out |= term_vars(node.term)
            _term_bound_names_into(node.term, out)
        if node.var is not None:
            out.add(node.var)
        stack.extend(node.premises)
    return out


def _term_bound_names_into(t: Term, out: set) -> None:
    out |= term_vars(t)


def _formula_names_into(a: Formula, out: set) -> None:
    if isinstance(a, Eq):
        out |= term_vars(a.lhs) | term_vars(a.rhs)
    elif isinstance(a, NAtom):
        out |= term_vars(a.term)
    elif isinstance(a, Falsum):
        pass
    elif isinstance(a, (And, Or, Implies)):
        _formula_names_into(a.left, out)
        _formula_names_into(a.right, out)
    elif isinstance(a, (Forall, Exists)):
        out.add(a.var)
        _formula_names_into(a.body, out)


def proof_labels(pf: Proof) -> set:
    out: set = set()
    seen: set = set()
    stack: List[Proof] = [pf]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if node.label:
            out.add(node.label)
        if node.label2:
            out.add(node.label2)
        stack.extend(node.premises)
    return out


class LabelSource:
    def __init__(self, used: Iterable[str] = ()):
        self._used = set(used)
        self._n = 0

    def fresh(self, hint: str = "g") -> str:
        while True:
            self._n += 1
            name = f"{hint}{self._n}"
            if name not in self._used:
                self._used.add(name)
                return name


def guard_close(cur: Proof, pairs: List[Tuple[str, str]]) -> Proof:
    """Close a data-guarded block: given a proof whose conclusion mentions
    the fresh variables w_i, produce
    forall b_1 (N(b_1) -> ... forall b_k (N(b_k) -> body) ...)
    by discharging N(w_i) and generalizing, innermost first.  `pairs` lists
    (bound-name, fresh-name) outermost first; the N(w_i) assumptions must be
    labelled `N_{w_i}` by the caller."""
    for b, w in reversed(pairs):
        cur = imp_intro(f"N_{w}", NAtom(Var(w)), cur)
        target = Forall(b, rename_free_var(cur.conclusion, w, b))
        cur = forall_intro_as(cur, target, w)
    return cur
