"""Core Datalog machinery: signatures, rules with inequalities, immediate
consequence, theta-subsumption, and a small text grammar.

Rules are constant-free; all rule terms are variables (lower-case
identifiers).  Datasets are finite sets of ground facts over named
constants.  Facts are plain ``(predicate, args)`` tuples so they hash and
compare fast in set algebra.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

Fact = tuple[str, tuple[str, ...]]

_VARIABLE_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_IDENT_CHARS = re.compile(r"[A-Za-z0-9_:/.']")


class DatalogError(ValueError):
    """Raised for malformed rules, programs, or grammar violations."""


@dataclass(frozen=True)
class Signature:
    """Ordered unary and binary predicate names.

    Order is load-bearing: unary index p addresses label vector position p,
    and binary index c is the edge colour c.
    """

    unaries: tuple[str, ...]
    binaries: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "unaries", tuple(self.unaries))
        object.__setattr__(self, "binaries", tuple(self.binaries))
        names = list(self.unaries) + list(self.binaries)
        if len(set(names)) != len(names):
            raise DatalogError("predicate names must be unique across the signature")

    @property
    def num_labels(self) -> int:
        return len(self.unaries)

    @property
    def num_colors(self) -> int:
        return len(self.binaries)

    def arity(self, predicate: str) -> int:
        if predicate in self.unaries:
            return 1
        if predicate in self.binaries:
            return 2
        raise DatalogError(f"unknown predicate: {predicate!r}")

    def unary_index(self, predicate: str) -> int:
        return self.unaries.index(predicate)

    def color_index(self, predicate: str) -> int:
        return self.binaries.index(predicate)


@dataclass(frozen=True)
class Atom:
    """A predicate applied to terms; in rules all terms are variables."""

    predicate: str
    args: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) not in (1, 2):
            raise DatalogError(f"atoms must be unary or binary, got {self.args!r}")

    def substitute(self, sub: Mapping[str, str]) -> Fact:
        return (self.predicate, tuple(sub[a] for a in self.args))

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True)
class Inequality:
    """Body literal asserting its two terms denote different constants."""

    left: str
    right: str

    def __post_init__(self) -> None:
        if self.left == self.right:
            raise DatalogError(f"inequality must mention two different terms, got {self.left!r} != {self.right!r}")

    def matches(self, other: "Inequality") -> bool:
        return {self.left, self.right} == {other.left, other.right}

    def __str__(self) -> str:
        return f"{self.left} != {self.right}"


Literal = Union[Atom, Inequality]


@dataclass(frozen=True)
class Rule:
    """Constant-free rule ``body -> head``; the body may be empty and the
    rule may be unsafe (head variables absent from body atoms)."""

    body: tuple[Literal, ...]
    head: Atom

    def __post_init__(self) -> None:
        object.__setattr__(self, "body", tuple(self.body))
        body_vars = {v for a in self.body_atoms for v in a.args}
        for lit in self.body:
            if isinstance(lit, Inequality) and not {lit.left, lit.right} <= body_vars:
                # Inequalities over head-only variables would be vacuous
                # under the grounding semantics; reject them early.
                raise DatalogError(f"inequality {lit} mentions a variable not bound by a body atom")

    @property
    def body_atoms(self) -> tuple[Atom, ...]:
        return tuple(lit for lit in self.body if isinstance(lit, Atom))

    @property
    def inequalities(self) -> tuple[Inequality, ...]:
        return tuple(lit for lit in self.body if isinstance(lit, Inequality))

    @property
    def variables(self) -> tuple[str, ...]:
        """All variables in first-occurrence order, body first."""
        seen: dict[str, None] = {}
        for atom in self.body_atoms:
            for v in atom.args:
                seen.setdefault(v)
        for lit in self.inequalities:
            seen.setdefault(lit.left)
            seen.setdefault(lit.right)
        for v in self.head.args:
            seen.setdefault(v)
        return tuple(seen)

    @property
    def head_only_variables(self) -> tuple[str, ...]:
        body_vars = {v for a in self.body_atoms for v in a.args}
        out: dict[str, None] = {}
        for v in self.head.args:
            if v not in body_vars:
                out.setdefault(v)
        return tuple(out)

    @property
    def is_safe(self) -> bool:
        return not self.head_only_variables

    def rename(self, mapping: Mapping[str, str]) -> "Rule":
        def r(v: str) -> str:
            return mapping.get(v, v)

        body: list[Literal] = []
        for lit in self.body:
            if isinstance(lit, Atom):
                body.append(Atom(lit.predicate, tuple(r(v) for v in lit.args)))
            else:
                body.append(Inequality(r(lit.left), r(lit.right)))
        return Rule(tuple(body), Atom(self.head.predicate, tuple(r(v) for v in self.head.args)))

    def __str__(self) -> str:
        return serialize_rule(self)


Program = tuple[Rule, ...]


class Dataset:
    """An immutable finite set of ground facts."""

    __slots__ = ("_facts", "_constants")

    def __init__(self, facts: Iterable[Fact] = ()):
        fs = frozenset((p, tuple(args)) for p, args in facts)
        for p, args in fs:
            if len(args) not in (1, 2):
                raise DatalogError(f"fact {p}{args} has unsupported arity")
        self._facts = fs
        self._constants = tuple(sorted({c for _, args in fs for c in args}))

    @property
    def facts(self) -> frozenset[Fact]:
        return self._facts

    @property
    def constants(self) -> tuple[str, ...]:
        """con(D): exactly the constants mentioned by some fact."""
        return self._constants

    def __contains__(self, fact: Fact) -> bool:
        return fact in self._facts

    def __iter__(self) -> Iterator[Fact]:
        return iter(self._facts)

    def __len__(self) -> int:
        return len(self._facts)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dataset) and self._facts == other._facts

    def __hash__(self) -> int:
        return hash(self._facts)

    def __or__(self, other: "Dataset") -> "Dataset":
        return Dataset(self._facts | other._facts)

    def issubset(self, other: "Dataset") -> bool:
        return self._facts <= other._facts

    def rename(self, mapping: Mapping[str, str]) -> "Dataset":
        """Apply an injective constant rename; missing keys map to themselves."""
        return Dataset((p, tuple(mapping.get(c, c) for c in args)) for p, args in self._facts)

    def restrict_predicates(self, predicates: Iterable[str]) -> "Dataset":
        keep = set(predicates)
        return Dataset(f for f in self._facts if f[0] in keep)

    def __repr__(self) -> str:
        shown = ", ".join(sorted(f"{p}({','.join(a)})" for p, a in self._facts))
        return f"Dataset({{{shown}}})"


# ---------------------------------------------------------------------------
# Immediate consequence
# ---------------------------------------------------------------------------


def _match_atom(atom: Atom, fact_args: Sequence[str], sub: dict[str, str]) -> dict[str, str] | None:
    out = sub
    copied = False
    for var, const in zip(atom.args, fact_args):
        bound = out.get(var)
        if bound is None:
            if not copied:
                out = dict(out)
                copied = True
            out[var] = const
        elif bound != const:
            return None
    return out


def apply_rule(rule: Rule, data: Dataset) -> Dataset:
    """Immediate consequences of one rule: every head instantiation whose
    body is satisfied in ``data``.  Single application, no fixpoint."""
    by_pred: dict[str, list[tuple[str, ...]]] = {}
    for p, args in data:
        by_pred.setdefault(p, []).append(args)

    # Cheapest atoms first keeps the backtracking join narrow.
    atoms = sorted(rule.body_atoms, key=lambda a: len(by_pred.get(a.predicate, ())))
    inequalities = rule.inequalities

    derived: set[Fact] = set()
    head_only = rule.head_only_variables
    constants = data.constants

    def ineqs_ok(sub: dict[str, str]) -> bool:
        for ineq in inequalities:
            a, b = sub.get(ineq.left), sub.get(ineq.right)
            if a is not None and b is not None and a == b:
                return False
        return True

    def walk(i: int, sub: dict[str, str]) -> None:
        if i == len(atoms):
            if not ineqs_ok(sub):
                return
            if head_only:
                if not constants:
                    return
                emit_unsafe(sub, 0)
            else:
                derived.add(rule.head.substitute(sub))
            return
        atom = atoms[i]
        for fact_args in by_pred.get(atom.predicate, ()):
            if len(fact_args) != len(atom.args):
                continue
            nxt = _match_atom(atom, fact_args, sub)
            if nxt is not None and ineqs_ok(nxt):
                walk(i + 1, nxt)

    def emit_unsafe(sub: dict[str, str], j: int) -> None:
        if j == len(head_only):
            derived.add(rule.head.substitute(sub))
            return
        for c in constants:
            sub2 = dict(sub)
            sub2[head_only[j]] = c
            emit_unsafe(sub2, j + 1)

    walk(0, {})
    return Dataset(derived)


def apply_program(program: Sequence[Rule], data: Dataset) -> Dataset:
    """Union of ``apply_rule`` over every rule of the program."""
    out: set[Fact] = set()
    for rule in program:
        out |= apply_rule(rule, data).facts
    return Dataset(out)


# ---------------------------------------------------------------------------
# Theta-subsumption
# ---------------------------------------------------------------------------


def subsumes(general: Rule, specific: Rule) -> bool:
    """True iff a substitution maps ``general``'s head onto ``specific``'s
    head and its body into ``specific``'s body (inequalities matched as
    ordinary literals, orientation-insensitively)."""
    if general.head.predicate != specific.head.predicate:
        return False
    if len(general.head.args) != len(specific.head.args):
        return False

    theta: dict[str, str] = {}
    for gv, sv in zip(general.head.args, specific.head.args):
        if theta.setdefault(gv, sv) != sv:
            return False

    spec_atoms = specific.body_atoms
    spec_ineqs = specific.inequalities

    def extend(theta: dict[str, str], pairs: Iterable[tuple[str, str]]) -> dict[str, str] | None:
        out = dict(theta)
        for gv, sv in pairs:
            if out.setdefault(gv, sv) != sv:
                return None
        return out

    literals = list(general.body)

    def walk(i: int, theta: dict[str, str]) -> bool:
        if i == len(literals):
            return True
        lit = literals[i]
        if isinstance(lit, Atom):
            for cand in spec_atoms:
                if cand.predicate != lit.predicate or len(cand.args) != len(lit.args):
                    continue
                nxt = extend(theta, zip(lit.args, cand.args))
                if nxt is not None and walk(i + 1, nxt):
                    return True
        else:
            for cand in spec_ineqs:
                for pa in ((cand.left, cand.right), (cand.right, cand.left)):
                    nxt = extend(theta, zip((lit.left, lit.right), pa))
                    if nxt is not None and walk(i + 1, nxt):
                        return True
        return False

    return walk(0, theta)


# ---------------------------------------------------------------------------
# Text grammar
# ---------------------------------------------------------------------------
#
#   rule    := [literal ("," literal)*] "->" atom
#   literal := atom | term "!=" term
#   atom    := IDENT "(" term ("," term)? ")"
#   term    := lower-case IDENT (a variable; constants are rejected)
#
# Program files hold one rule per line; "#" starts a comment.


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif text.startswith("->", i):
            tokens.append("->")
            i += 2
        elif text.startswith("!=", i):
            tokens.append("!=")
            i += 2
        elif ch in "(),":
            tokens.append(ch)
            i += 1
        elif _IDENT_CHARS.match(ch):
            j = i
            while j < n and _IDENT_CHARS.match(text[j]):
                j += 1
            tokens.append(text[i:j])
            i = j
        else:
            raise DatalogError(f"unexpected character {ch!r} in rule text")
    return tokens


class _Parser:
    def __init__(self, tokens: list[str], sig: Signature):
        self.tokens = tokens
        self.pos = 0
        self.sig = sig

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise DatalogError("unexpected end of rule text")
        if expected is not None and tok != expected:
            raise DatalogError(f"expected {expected!r}, found {tok!r}")
        self.pos += 1
        return tok

    def term(self) -> str:
        tok = self.take()
        if not _VARIABLE_RE.match(tok):
            raise DatalogError(f"constants are rejected in rules: {tok!r} is not a lower-case variable")
        return tok

    def atom(self) -> Atom:
        name = self.take()
        try:
            arity = self.sig.arity(name)
        except DatalogError:
            raise DatalogError(f"unknown predicate: {name!r}")
        self.take("(")
        args = [self.term()]
        if self.peek() == ",":
            self.take(",")
            args.append(self.term())
        self.take(")")
        if len(args) != arity:
            raise DatalogError(f"arity mismatch for {name!r}: expected {arity}, got {len(args)}")
        return Atom(name, tuple(args))

    def literal(self) -> Literal:
        # A literal is an inequality iff the token after the first term is "!=".
        if self.pos + 1 < len(self.tokens) and self.tokens[self.pos + 1] == "!=":
            left = self.term()
            self.take("!=")
            right = self.term()
            if left == right:
                raise DatalogError(f"inequality must mention two different terms, got {left!r} != {right!r}")
            return Inequality(left, right)
        return self.atom()

    def rule(self) -> Rule:
        body: list[Literal] = []
        if self.peek() != "->":
            body.append(self.literal())
            while self.peek() == ",":
                self.take(",")
                body.append(self.literal())
        self.take("->")
        head = self.atom()
        if self.peek() is not None:
            raise DatalogError(f"trailing tokens after head: {self.tokens[self.pos:]}")
        return Rule(tuple(body), head)


def parse_rule(text: str, sig: Signature) -> Rule:
    """Parse one rule; raises :class:`DatalogError` on grammar violations."""
    return _Parser(_tokenize(text), sig).rule()


def serialize_rule(rule: Rule) -> str:
    head = str(rule.head)
    if not rule.body:
        return f"-> {head}"
    return ", ".join(str(lit) for lit in rule.body) + f" -> {head}"


def parse_program(text: str, sig: Signature) -> list[Rule]:
    """Parse a program file body: one rule per line, '#' comments."""
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rules.append(parse_rule(line, sig))
        except DatalogError as exc:
            raise DatalogError(f"line {lineno}: {exc}") from exc
    return rules


def serialize_program(program: Sequence[Rule]) -> str:
    return "\n".join(serialize_rule(r) for r in program) + ("\n" if program else "")
