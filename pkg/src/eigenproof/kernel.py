"""Checker for classical natural deduction proofs in two theory modes.

Arithmetic mode checks proofs over a fixed equation program: axioms are the
universal closures of the program equations, the two separation axioms and
all instances of the induction schema.  Intrinsic mode instead provides the
data-predicate rules (N-zero, N-successor, N-induction) and keeps program
equations as ordinary open assumptions; only the separation axioms remain
axioms there.

A proof is a fully explicit tree: every node carries its rule, premises,
claimed conclusion and all instantiation data, so checking never searches.
The eigenterm policy restricts which instantiating terms the universal
elimination and existential introduction rules may use; all other rules are
unaffected by the policy.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple, Union

from .syntax import (
    And,
    App,
    BadPosition,
    CaptureViolation,
    Eq,
    Exists,
    FALSUM,
    Falsum,
    Forall,
    Formula,
    Implies,
    NAtom,
    Or,
    Program,
    Term,
    Var,
    alpha_eq,
    binders_on_path,
    contains_natom,
    equation_closure,
    free_vars,
    is_basic,
    is_pr_term,
    neg,
    node_at,
    replace_occurrences,
    substitute,
    succ,
    term_to_str,
    zero,
)

POLICY_UNRESTRICTED = "unrestricted"
POLICY_PR = "pr"
POLICY_BASIC = "basic"
POLICIES = (POLICY_BASIC, POLICY_PR, POLICY_UNRESTRICTED)

_POLICY_ALIASES = {"primitive-recursive": POLICY_PR}

MODE_ARITHMETIC = "arithmetic"
MODE_INTRINSIC = "intrinsic"

#: the two separation axioms, up to renaming of bound variables
SEPARATION_ZERO = Forall("x", neg(Eq(succ(Var("x")), zero())))
SEPARATION_INJ = Forall(
    "x",
    Forall(
        "y",
        Implies(Eq(succ(Var("x")), succ(Var("y"))), Eq(Var("x"), Var("y"))),
    ),
)


def normalize_policy(policy: str) -> str:
    policy = _POLICY_ALIASES.get(policy, policy)
    if policy not in POLICIES:
        raise ValueError(f"unknown eigenterm policy {policy!r}")
    return policy


def policy_admits(policy: str, t: Term, registry: Optional[Mapping]) -> bool:
    policy = normalize_policy(policy)
    if policy == POLICY_UNRESTRICTED:
        return True
    if policy == POLICY_PR:
        return is_pr_term(t, registry or {})
    return is_basic(t)


@dataclass(frozen=True)
class TheoryConfig:
    mode: str
    program: Optional[Program] = None
    policy: str = POLICY_UNRESTRICTED
    registry: Optional[Mapping] = None

    def __post_init__(self) -> None:
        if self.mode not in (MODE_ARITHMETIC, MODE_INTRINSIC):
            raise ValueError(f"unknown theory mode {self.mode!r}")
        if self.mode == MODE_ARITHMETIC and self.program is None:
            raise ValueError("arithmetic mode needs a program")
        object.__setattr__(self, "policy", normalize_policy(self.policy))


@dataclass(frozen=True, eq=False)
class Proof:
    """One node of an explicit proof tree.

    `premises` are sub-proofs.  Data fields are used per rule: `label` and
    `label2` name dischargeable assumptions, `var` is an eigenvariable or an
    induction variable, `term` an eigenterm, `positions` the occurrence
    paths of the equality rule, and `formula` the induction formula of the
    data-predicate induction rule.  `node_id` is decorative (script line
    ids) and never takes part in equality.
    """

    rule: str
    premises: tuple = ()
    conclusion: Formula = None  # type: ignore[assignment]
    label: Optional[str] = None
    label2: Optional[str] = None
    var: Optional[str] = None
    term: Optional[Term] = None
    positions: tuple = ()
    formula: Optional[Formula] = None
    node_id: Optional[str] = field(default=None, compare=False)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Proof):
            return NotImplemented
        return (
            self.rule == other.rule
            and self.conclusion == other.conclusion
            and self.label == other.label
            and self.label2 == other.label2
            and self.var == other.var
            and self.term == other.term
            and self.positions == other.positions
            and self.formula == other.formula
            and self.premises == other.premises
        )

    def __hash__(self):
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash(
                (
                    self.rule,
                    self.conclusion,
                    self.label,
                    self.label2,
                    self.var,
                    self.term,
                    self.positions,
                    self.formula,
                    self.premises,
                )
            )
            object.__setattr__(self, "_hash", cached)
        return cached


RULES_INTRINSIC_ONLY = ("n_zero", "n_succ", "n_induction")

RULE_ARITY = {
    "assume": 0,
    "axiom": 0,
    "eq_refl": 0,
    "n_zero": 0,
    "imp_intro": 1,
    "and_elim1": 1,
    "and_elim2": 1,
    "or_intro1": 1,
    "or_intro2": 1,
    "falsum_elim": 1,
    "dne": 1,
    "forall_intro": 1,
    "forall_elim": 1,
    "exists_intro": 1,
    "n_succ": 1,
    "imp_elim": 2,
    "and_intro": 2,
    "eq_replace": 2,
    "exists_elim": 2,
    "or_elim": 3,
    "n_induction": 3,
}


@dataclass(frozen=True)
class Judgment:
    """Open assumptions (as label/formula pairs) and a conclusion."""

    assumptions: tuple  # tuple[(label, Formula), ...] sorted by label
    conclusion: Formula

    def formula_multiset(self) -> Counter:
        return Counter(f for _, f in self.assumptions)

    def formulas(self) -> tuple:
        return tuple(f for _, f in self.assumptions)


@dataclass(frozen=True)
class Accepted:
    judgment: Judgment

    @property
    def ok(self) -> bool:
        return True


@dataclass(frozen=True)
class Rejected:
    node: str
    code: str
    detail: str = ""

    @property
    def ok(self) -> bool:
        return False


Verdict = Union[Accepted, Rejected]


# ---------------------------------------------------------------------------
# Axiom recognition


def check_induction_instance(a: Formula):
    """Match a against the induction schema
    A[0] -> (forall x (A[x] -> A[S(x)])) -> forall x A[x]
    and return the induction formula with its variable, or None."""
    if not isinstance(a, Implies):
        return None
    rest = a.right
    if not isinstance(rest, Implies) or not isinstance(rest.right, Forall):
        return None
    base, step, tail = a.left, rest.left, rest.right
    x, body = tail.var, tail.body
    try:
        if base != substitute(body, x, zero()):
            return None
    except CaptureViolation:
        return None
    if not isinstance(step, Forall) or not isinstance(step.body, Implies):
        return None
    y = step.var
    # a step variable that is itself a parameter of A would conflate the
    # parameter with the bound variable; that instance is unsound
    if y != x and y in free_vars(body):
        return None
    try:
        lo = substitute(body, x, Var(y))
        hi = substitute(body, x, succ(Var(y)))
    except CaptureViolation:
        return None
    if step.body.left != lo or step.body.right != hi:
        return None
    return body, x


def _strip_foralls(a: Formula):
    bound = []
    while isinstance(a, Forall):
        bound.append(a.var)
        a = a.body
    return bound, a


def is_axiom(cfg: TheoryConfig, a: Formula):
    """Recognize a as an axiom of the configured theory; returns the kind
    name or None.  In intrinsic mode only the separation axioms qualify."""
    if alpha_eq(a, SEPARATION_ZERO) or alpha_eq(a, SEPARATION_INJ):
        return "separation"
    if cfg.mode != MODE_ARITHMETIC:
        return None
    if free_vars(a) == frozenset():
        bound, body = _strip_foralls(a)
        if isinstance(body, Eq) and len(set(bound)) == len(bound):
            body_vars = free_vars(body)
            if set(bound) == set(body_vars):
                for e in cfg.program.equations:
                    if _closure_matches(bound, body, e):
                        return "program-axiom"
    if check_induction_instance(a) is not None:
        return "induction"
    return None


def _closure_matches(bound, body: Eq, e) -> bool:
    """body, under a bijective renaming of its (bound) variables, equals the
    program equation e."""
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
            return s.sym == t.sym and all(
                go(u, v) for u, v in zip(s.args, t.args)
            )
        return False

    return go(body.lhs, e.lhs) and go(body.rhs, e.rhs)


# ---------------------------------------------------------------------------
# The checker


class _Reject(Exception):
    def __init__(self, node: str, code: str, detail: str = ""):
        self.verdict = Rejected(node, code, detail)
        super().__init__(f"{code}: {detail}")


def check_proof(cfg: TheoryConfig, pf: Proof) -> Verdict:
    """Validate every node of pf against the configured theory and policy.

    Returns Accepted with the proof's judgment, or Rejected naming the
    first offending node in premises-first order and the reason (for policy
    failures: `eigenterm-policy-violation` with the offending term).
    """
    order = _post_order(pf)
    ids = {}
    for i, node in enumerate(order, start=1):
        ids[id(node)] = node.node_id or f"#{i}"
    opens: dict = {}
    try:
        for node in order:
            opens[id(node)] = _check_node(cfg, node, ids, opens)
    except _Reject as rej:
        return rej.verdict
    final = opens[id(pf)]
    assumptions = tuple(sorted(final.items(), key=lambda kv: kv[0]))
    return Accepted(Judgment(assumptions, pf.conclusion))


def _post_order(pf: Proof):
    order = []
    seen = set()
    stack = [(pf, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            order.append(node)
        else:
            stack.append((node, True))
            for p in reversed(node.premises):
                if id(p) not in seen:
                    stack.append((p, False))
    return order


def _merge_opens(nid: str, maps) -> dict:
    out: dict = {}
    for m in maps:
        for label, formula in m.items():
            known = out.get(label)
            if known is not None and known != formula:
                raise _Reject(
                    nid,
                    "label-conflict",
                    f"label {label} names two different assumptions",
                )
            out[label] = formula
    return out


def _discharge(nid: str, opens: dict, label: Optional[str], formula: Formula) -> dict:
    if label is None:
        raise _Reject(nid, "missing-label", "discharge needs a label")
    known = opens.get(label)
    if known is None:
        return opens  # vacuous discharge
    if known != formula:
        raise _Reject(
            nid,
            "discharge-mismatch",
            f"label {label} is bound to a different formula",
        )
    out = dict(opens)
    del out[label]
    return out


def _free_in_opens(opens: dict) -> frozenset:
    out: set = set()
    for f in opens.values():
        out |= free_vars(f)
    return frozenset(out)


def _check_node(cfg: TheoryConfig, node: Proof, ids: dict, opens_by_node: dict) -> dict:
    nid = ids[id(node)]
    rule = node.rule
    concl = node.conclusion
    if concl is None:
        raise _Reject(nid, "missing-conclusion", "node carries no formula")
    if rule not in RULE_ARITY:
        raise _Reject(nid, "unknown-rule", rule)
    if len(node.premises) != RULE_ARITY[rule]:
        raise _Reject(
            nid,
            "premise-count",
            f"{rule} takes {RULE_ARITY[rule]} premises, got {len(node.premises)}",
        )
    if cfg.mode == MODE_ARITHMETIC:
        if rule in RULES_INTRINSIC_ONLY:
            raise _Reject(nid, "rule-not-available", f"{rule} needs intrinsic mode")
        if contains_natom(concl) or (
            node.formula is not None and contains_natom(node.formula)
        ):
            raise _Reject(
                nid, "natom-not-allowed", "data atoms need intrinsic mode"
            )
    prem = [p.conclusion for p in node.premises]
    sub_opens = [opens_by_node[id(p)] for p in node.premises]

    if rule == "assume":
        if node.label is None:
            raise _Reject(nid, "missing-label", "assumptions need a label")
        return {node.label: concl}

    if rule == "axiom":
        if is_axiom(cfg, concl) is None:
            raise _Reject(nid, "not-an-axiom", "formula is not an axiom here")
        return {}

    if rule == "eq_refl":
        if not isinstance(concl, Eq) or concl.lhs != concl.rhs:
            raise _Reject(nid, "bad-reflexivity", "conclusion must be t = t")
        return {}

    if rule == "n_zero":
        if concl != NAtom(zero()):
            raise _Reject(nid, "bad-conclusion", "conclusion must be N(0)")
        return {}

    merged = _merge_opens(nid, sub_opens)

    if rule == "imp_intro":
        if not isinstance(concl, Implies):
            raise _Reject(nid, "bad-conclusion", "conclusion must be an implication")
        if prem[0] != concl.right:
            raise _Reject(nid, "premise-mismatch", "premise must be the consequent")
        return _discharge(nid, merged, node.label, concl.left)

    if rule == "imp_elim":
        if not isinstance(prem[0], Implies):
            raise _Reject(nid, "premise-mismatch", "major premise must be an implication")
        if prem[0].left != prem[1] or prem[0].right != concl:
            raise _Reject(nid, "premise-mismatch", "modus ponens shape violated")
        return merged

    if rule == "and_intro":
        if concl != And(prem[0], prem[1]):
            raise _Reject(nid, "bad-conclusion", "conclusion must conjoin the premises")
        return merged

    if rule in ("and_elim1", "and_elim2"):
        if not isinstance(prem[0], And):
            raise _Reject(nid, "premise-mismatch", "premise must be a conjunction")
        want = prem[0].left if rule == "and_elim1" else prem[0].right
        if concl != want:
            raise _Reject(nid, "bad-conclusion", "wrong conjunct")
        return merged

    if rule in ("or_intro1", "or_intro2"):
        if not isinstance(concl, Or):
            raise _Reject(nid, "bad-conclusion", "conclusion must be a disjunction")
        want = concl.left if rule == "or_intro1" else concl.right
        if prem[0] != want:
            raise _Reject(nid, "premise-mismatch", "premise is not the stated disjunct")
        return merged

    if rule == "or_elim":
        if not isinstance(prem[0], Or):
            raise _Reject(nid, "premise-mismatch", "major premise must be a disjunction")
        if prem[1] != concl or prem[2] != concl:
            raise _Reject(nid, "premise-mismatch", "minor premises must conclude the goal")
        left = _discharge(nid, sub_opens[1], node.label, prem[0].left)
        right = _discharge(nid, sub_opens[2], node.label2, prem[0].right)
        return _merge_opens(nid, [sub_opens[0], left, right])

    if rule == "falsum_elim":
        if prem[0] != FALSUM:
            raise _Reject(nid, "premise-mismatch", "premise must be falsum")
        return merged

    if rule == "dne":
        if prem[0] != Implies(Implies(concl, FALSUM), FALSUM):
            raise _Reject(nid, "premise-mismatch", "premise must be the double negation")
        return merged

    if rule == "forall_intro":
        if not isinstance(concl, Forall):
            raise _Reject(nid, "bad-conclusion", "conclusion must be universal")
        y = node.var
        if y is None:
            raise _Reject(nid, "missing-eigenvariable", "rule needs an eigenvariable")
        if y in free_vars(concl):
            raise _Reject(
                nid, "eigenvariable-not-fresh", f"{y} is free in the conclusion"
            )
        try:
            want = substitute(concl.body, concl.var, Var(y))
        except CaptureViolation:
            raise _Reject(nid, "capture", f"{y} is not free for {concl.var}")
        if prem[0] != want:
            raise _Reject(nid, "premise-mismatch", "premise is not the y-instance")
        if y in _free_in_opens(merged):
            raise _Reject(
                nid,
                "eigenvariable-not-fresh",
                f"{y} is free in an open assumption",
            )
        return merged

    if rule == "forall_elim":
        if not isinstance(prem[0], Forall):
            raise _Reject(nid, "premise-mismatch", "premise must be universal")
        t = node.term
        if t is None:
            raise _Reject(nid, "missing-eigenterm", "rule needs an instantiating term")
        if not policy_admits(cfg.policy, t, cfg.registry):
            raise _Reject(
                nid, "eigenterm-policy-violation", term_to_str(t)
            )
        try:
            want = substitute(prem[0].body, prem[0].var, t)
        except CaptureViolation:
            raise _Reject(nid, "capture", "term is not free for the bound variable")
        if concl != want:
            raise _Reject(nid, "bad-conclusion", "conclusion is not the instance")
        return merged

    if rule == "exists_intro":
        if not isinstance(concl, Exists):
            raise _Reject(nid, "bad-conclusion", "conclusion must be existential")
        t = node.term
        if t is None:
            raise _Reject(nid, "missing-eigenterm", "rule needs a witnessing term")
        if not policy_admits(cfg.policy, t, cfg.registry):
            raise _Reject(
                nid, "eigenterm-policy-violation", term_to_str(t)
            )
        try:
            want = substitute(concl.body, concl.var, t)
        except CaptureViolation:
            raise _Reject(nid, "capture", "term is not free for the bound variable")
        if prem[0] != want:
            raise _Reject(nid, "premise-mismatch", "premise is not the witness instance")
        return merged

    if rule == "exists_elim":
        major = prem[0]
        if not isinstance(major, Exists):
            raise _Reject(nid, "premise-mismatch", "major premise must be existential")
        y = node.var
        if y is None:
            raise _Reject(nid, "missing-eigenvariable", "rule needs an eigenvariable")
        if y in free_vars(concl):
            raise _Reject(nid, "eigenvariable-not-fresh", f"{y} is free in the goal")
        if y in free_vars(major):
            raise _Reject(
                nid, "eigenvariable-not-fresh", f"{y} is free in the major premise"
            )
        try:
            witness = substitute(major.body, major.var, Var(y))
        except CaptureViolation:
            raise _Reject(nid, "capture", f"{y} is not free for {major.var}")
        if prem[1] != concl:
            raise _Reject(nid, "premise-mismatch", "minor premise must conclude the goal")
        minor_opens = _discharge(nid, sub_opens[1], node.label, witness)
        if y in _free_in_opens(minor_opens):
            raise _Reject(
                nid,
                "eigenvariable-not-fresh",
                f"{y} is free in an open assumption of the minor premise",
            )
        return _merge_opens(nid, [sub_opens[0], minor_opens])

    if rule == "eq_replace":
        eqp = prem[1]
        if not isinstance(eqp, Eq):
            raise _Reject(nid, "premise-mismatch", "second premise must be an equation")
        t, s = eqp.lhs, eqp.rhs
        main = prem[0]
        if not node.positions:
            raise _Reject(nid, "missing-positions", "rule needs occurrence paths")
        guard = free_vars(t) | free_vars(s)
        for path in node.positions:
            try:
                if node_at(main, path) != t:
                    raise _Reject(
                        nid, "bad-position", "path does not address the equated term"
                    )
            except BadPosition as exc:
                raise _Reject(nid, "bad-position", str(exc))
            if binders_on_path(main, path) & guard:
                raise _Reject(
                    nid,
                    "capture",
                    "replacement under a quantifier binding a variable of the equation",
                )
        want = replace_occurrences(main, t, s, node.positions)
        if concl != want:
            raise _Reject(nid, "bad-conclusion", "conclusion is not the replacement result")
        return merged

    if rule == "n_succ":
        if not isinstance(prem[0], NAtom):
            raise _Reject(nid, "premise-mismatch", "premise must be a data atom")
        if concl != NAtom(succ(prem[0].term)):
            raise _Reject(nid, "bad-conclusion", "conclusion must be N(S(t))")
        return merged

    if rule == "n_induction":
        a = node.formula
        x = node.var
        if a is None or x is None:
            raise _Reject(
                nid, "missing-data", "rule needs the induction formula and variable"
            )
        if not isinstance(prem[0], NAtom):
            raise _Reject(nid, "premise-mismatch", "first premise must be a data atom")
        t = prem[0].term
        try:
            base = substitute(a, x, zero())
            step = Forall(x, Implies(a, substitute(a, x, succ(Var(x)))))
            want = substitute(a, x, t)
        except CaptureViolation:
            raise _Reject(nid, "capture", "induction data causes capture")
        if prem[1] != base:
            raise _Reject(nid, "premise-mismatch", "second premise must be the base instance")
        if prem[2] != step:
            raise _Reject(nid, "premise-mismatch", "third premise must be the step")
        if concl != want:
            raise _Reject(nid, "bad-conclusion", "conclusion is not the t-instance")
        return merged

    raise _Reject(nid, "unknown-rule", rule)


# ---------------------------------------------------------------------------
# Reporting


def rule_counts(pf: Proof) -> Counter:
    return Counter(node.rule for node in _post_order(pf))


def check_report(cfg: TheoryConfig, pf: Proof) -> dict:
    """Machine-readable checking record."""
    verdict = check_proof(cfg, pf)
    out = {
        "verdict": "accepted" if verdict.ok else "rejected",
        "mode": cfg.mode,
        "policy": cfg.policy,
        "rule_counts": dict(sorted(rule_counts(pf).items())),
    }
    if verdict.ok:
        from .syntax import formula_to_str

        out["conclusion"] = formula_to_str(verdict.judgment.conclusion)
        out["assumptions"] = [
            [label, formula_to_str(f)] for label, f in verdict.judgment.assumptions
        ]
    else:
        out["failure"] = {
            "node": verdict.node,
            "code": verdict.code,
            "detail": verdict.detail,
        }
    return out


def program_axioms(p: Program) -> tuple:
    """The universal closures of a program's equations."""
    return tuple(equation_closure(e) for e in p.equations)
