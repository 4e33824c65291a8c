"""Reading and writing proof scripts.

One node per line:

    id: rule premise-ids [data] |- formula

Data clauses are space separated inside one bracket pair; a `term` or
`ind` clause consumes the rest of the bracket.  Examples:

    n1: assume [H] |- x = S(x)
    n2: forall_elim n1 [term add(x,0)] |- ...
    n3: imp_intro n2 [discharge H] |- ...
    n4: exists_elim n2 n3 [eigen u discharge W] |- ...
    n5: eq_replace n2 n4 [at 1 0.1] |- ...
    n6: n_induction n1 n2 n3 [ind y: N(y) & N(add(x,y))] |- ...

Premises refer to earlier ids; the last line is the root.  `#` starts a
comment.  Formulas use the shared formula grammar; symbol arities must be
consistent across the whole script.
"""

from __future__ import annotations

from typing import Optional

from .kernel import Proof, RULE_ARITY
from .parser import ParseError, _SignatureBuilder, _Tokens, _parse_formula, _parse_term
from .syntax import formula_to_str, path_from_str, path_to_str, term_to_str


def proof_from_script(text: str, signature: Optional[dict] = None) -> Proof:
    sig = _SignatureBuilder(signature)
    nodes: dict = {}
    last: Optional[Proof] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        last = _parse_line(line, lineno, sig, nodes)
    if last is None:
        raise ParseError("empty proof script")
    return last


def _parse_line(line: str, lineno: int, sig: _SignatureBuilder, nodes: dict) -> Proof:
    sig.line = lineno
    if "|-" not in line:
        raise ParseError("missing '|-'", lineno, len(line))
    head, formula_text = line.split("|-", 1)
    if ":" not in head:
        raise ParseError("missing 'id:'", lineno, 1)
    node_id, rest = head.split(":", 1)
    node_id = node_id.strip()
    if not node_id:
        raise ParseError("empty node id", lineno, 1)
    if node_id in nodes:
        raise ParseError(f"duplicate node id {node_id}", lineno, 1)
    data_text = None
    if "[" in rest:
        open_i = rest.index("[")
        close_i = rest.rindex("]") if "]" in rest else -1
        if close_i < open_i:
            raise ParseError("unterminated data bracket", lineno, open_i + 1)
        data_text = rest[open_i + 1 : close_i]
        rest = rest[:open_i] + rest[close_i + 1 :]
    parts = rest.split()
    if not parts:
        raise ParseError("missing rule name", lineno, 1)
    rule = parts[0]
    if rule not in RULE_ARITY:
        raise ParseError(f"unknown rule {rule}", lineno, 1)
    premises = []
    for ref in parts[1:]:
        node = nodes.get(ref)
        if node is None:
            raise ParseError(f"unknown premise id {ref}", lineno, 1)
        premises.append(node)

    label = label2 = var = None
    term = None
    positions: tuple = ()
    ind_formula = None

    if rule == "assume":
        if not data_text or len(data_text.split()) != 1:
            raise ParseError("assume needs a single label in brackets", lineno, 1)
        label = data_text.strip()
    elif rule in ("imp_intro", "or_elim"):
        toks = (data_text or "").split()
        want = 2 if rule == "imp_intro" else 3
        if len(toks) != want or toks[0] != "discharge":
            raise ParseError(f"{rule} needs [discharge ...]", lineno, 1)
        label = toks[1]
        if rule == "or_elim":
            label2 = toks[2]
    elif rule == "forall_intro":
        toks = (data_text or "").split()
        if len(toks) != 2 or toks[0] != "eigen":
            raise ParseError("forall_intro needs [eigen y]", lineno, 1)
        var = toks[1]
    elif rule == "exists_elim":
        toks = (data_text or "").split()
        if len(toks) != 4 or toks[0] != "eigen" or toks[2] != "discharge":
            raise ParseError("exists_elim needs [eigen y discharge L]", lineno, 1)
        var = toks[1]
        label = toks[3]
    elif rule in ("forall_elim", "exists_intro"):
        text = (data_text or "").strip()
        if not text.startswith("term"):
            raise ParseError(f"{rule} needs [term ...]", lineno, 1)
        toks = _Tokens(text[len("term") :], lineno)
        term = _parse_term(toks, sig, ())
        if not toks.at_end():
            raise ParseError("trailing input after term", lineno, 1)
    elif rule == "eq_replace":
        toks = (data_text or "").split()
        if len(toks) < 2 or toks[0] != "at":
            raise ParseError("eq_replace needs [at path ...]", lineno, 1)
        positions = tuple(path_from_str(p) for p in toks[1:])
    elif rule == "n_induction":
        text = (data_text or "").strip()
        if not text.startswith("ind") or ":" not in text:
            raise ParseError("n_induction needs [ind x: formula]", lineno, 1)
        head2, formula_part = text.split(":", 1)
        toks = head2.split()
        if len(toks) != 2:
            raise ParseError("n_induction needs [ind x: formula]", lineno, 1)
        var = toks[1]
        ftoks = _Tokens(formula_part, lineno)
        ind_formula = _parse_formula(ftoks, sig, ())
        if not ftoks.at_end():
            raise ParseError("trailing input after induction formula", lineno, 1)
    elif data_text and data_text.strip():
        raise ParseError(f"{rule} takes no data", lineno, 1)

    ftoks = _Tokens(formula_text, lineno)
    conclusion = _parse_formula(ftoks, sig, ())
    if not ftoks.at_end():
        raise ParseError("trailing input after formula", lineno, 1)

    node = Proof(
        rule,
        tuple(premises),
        conclusion,
        label=label,
        label2=label2,
        var=var,
        term=term,
        positions=positions,
        formula=ind_formula,
        node_id=node_id,
    )
    nodes[node_id] = node
    return node


def proof_to_script(pf: Proof) -> str:
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
    ids = {id(node): f"n{i}" for i, node in enumerate(order, start=1)}
    lines = []
    for node in order:
        head = f"{ids[id(node)]}: {node.rule}"
        for p in node.premises:
            head += f" {ids[id(p)]}"
        data = _data_text(node)
        if data:
            head += f" [{data}]"
        lines.append(f"{head} |- {formula_to_str(node.conclusion)}")
    return "\n".join(lines) + "\n"


def _data_text(node: Proof) -> str:
    if node.rule == "assume":
        return node.label or ""
    if node.rule == "imp_intro":
        return f"discharge {node.label}"
    if node.rule == "or_elim":
        return f"discharge {node.label} {node.label2}"
    if node.rule == "forall_intro":
        return f"eigen {node.var}"
    if node.rule == "exists_elim":
        return f"eigen {node.var} discharge {node.label}"
    if node.rule in ("forall_elim", "exists_intro"):
        return f"term {term_to_str(node.term)}"
    if node.rule == "eq_replace":
        return "at " + " ".join(path_to_str(p) for p in node.positions)
    if node.rule == "n_induction":
        return f"ind {node.var}: {formula_to_str(node.formula)}"
    return ""
