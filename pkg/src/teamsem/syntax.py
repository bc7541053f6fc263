"""Formula AST, concrete grammar, and syntactic transformations.

Formulas are kept in negation normal form: negation never appears as a
node, only as a sign on relation and equality literals.  Dependency atoms
are positive by construction; `poss(...)` and `restrict(... ; ...)` are
first-class nodes so that they can be desugared or compiled later.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping


class SyntaxViolation(Exception):
    """An AST was built that breaks a structural invariant."""


class ParseError(Exception):
    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Var | Const


# ---------------------------------------------------------------------------
# Formula nodes


@dataclass(frozen=True)
class Formula:
    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class BoolLit(Formula):
    value: bool


TRUE = BoolLit(True)
FALSE = BoolLit(False)


@dataclass(frozen=True)
class RelLit(Formula):
    """A (possibly negated) relation literal R(t1, ..., tk)."""

    name: str
    positive: bool
    args: tuple[Term, ...]


@dataclass(frozen=True)
class EqLit(Formula):
    """t = t' when positive, t != t' otherwise."""

    positive: bool
    left: Term
    right: Term


@dataclass(frozen=True)
class DepAtom(Formula):
    """A dependency atom applied to groups of variables.

    `groups` keeps the argument structure, e.g. dep(x, y; z) has groups
    ((x, y), (z)).  `param` is the numeric parameter of parameterized
    atoms (only `big` uses it).
    """

    name: str
    groups: tuple[tuple[str, ...], ...]
    param: int | None = None

    def __post_init__(self) -> None:
        for g in self.groups:
            for v in g:
                if not isinstance(v, str):
                    raise SyntaxViolation("dependency atom arguments must be variable names")
        if self.param is not None and self.param < 1:
            raise SyntaxViolation("atom parameter must be >= 1")

    @property
    def args(self) -> tuple[str, ...]:
        return tuple(v for g in self.groups for v in g)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Possibly(Formula):
    body: Formula


@dataclass(frozen=True)
class RestrictedBy(Formula):
    """`body` evaluated on the subteam where the first-order `guard` holds."""

    body: Formula
    guard: Formula

    def __post_init__(self) -> None:
        if not is_first_order(self.guard):
            raise SyntaxViolation("restriction guard must be first-order")


def ands(parts: Iterable[Formula]) -> Formula:
    """Left fold a conjunction; empty yields T."""
    out: Formula | None = None
    for p in parts:
        out = p if out is None else And(out, p)
    return TRUE if out is None else out


def ors(parts: Iterable[Formula]) -> Formula:
    """Left fold a disjunction; empty yields F."""
    out: Formula | None = None
    for p in parts:
        out = p if out is None else Or(out, p)
    return FALSE if out is None else out


def eq_tuple(left: Iterable[Term], right: Iterable[Term]) -> Formula:
    """Componentwise equality of two equal-length tuples (T when empty)."""
    return ands(EqLit(True, a, b) for a, b in zip(tuple(left), tuple(right), strict=True))


def neq_tuple(left: Iterable[Term], right: Iterable[Term]) -> Formula:
    """Negation of tuple equality: disjunction of componentwise != (F when empty)."""
    return ors(EqLit(False, a, b) for a, b in zip(tuple(left), tuple(right), strict=True))


def exists_chain(names: Iterable[str], body: Formula) -> Formula:
    out = body
    for v in reversed(tuple(names)):
        out = Exists(v, out)
    return out


def forall_chain(names: Iterable[str], body: Formula) -> Formula:
    out = body
    for v in reversed(tuple(names)):
        out = Forall(v, out)
    return out


# ---------------------------------------------------------------------------
# Walks and simple queries


def subformulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    if isinstance(phi, (Or, And)):
        yield from subformulas(phi.left)
        yield from subformulas(phi.right)
    elif isinstance(phi, (Exists, Forall)):
        yield from subformulas(phi.body)
    elif isinstance(phi, Possibly):
        yield from subformulas(phi.body)
    elif isinstance(phi, RestrictedBy):
        yield from subformulas(phi.body)
        yield from subformulas(phi.guard)


def count_nodes(phi: Formula) -> int:
    return sum(1 for _ in subformulas(phi))


def free_variables(phi: Formula) -> frozenset[str]:
    """Free variables; all arguments of a dependency atom count as free."""
    if isinstance(phi, BoolLit):
        return frozenset()
    if isinstance(phi, RelLit):
        return frozenset(t.name for t in phi.args if isinstance(t, Var))
    if isinstance(phi, EqLit):
        return frozenset(t.name for t in (phi.left, phi.right) if isinstance(t, Var))
    if isinstance(phi, DepAtom):
        return frozenset(phi.args)
    if isinstance(phi, (Or, And)):
        return free_variables(phi.left) | free_variables(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return free_variables(phi.body) - {phi.var}
    if isinstance(phi, Possibly):
        return free_variables(phi.body)
    if isinstance(phi, RestrictedBy):
        return free_variables(phi.body) | free_variables(phi.guard)
    raise SyntaxViolation(f"unknown node {phi!r}")


def all_variable_names(phi: Formula) -> frozenset[str]:
    """Every variable name occurring anywhere, bound or free (for freshness)."""
    names: set[str] = set()
    for node in subformulas(phi):
        if isinstance(node, RelLit):
            names.update(t.name for t in node.args if isinstance(t, Var))
        elif isinstance(node, EqLit):
            names.update(t.name for t in (node.left, node.right) if isinstance(t, Var))
        elif isinstance(node, DepAtom):
            names.update(node.args)
        elif isinstance(node, (Exists, Forall)):
            names.add(node.var)
    return frozenset(names)


def formula_signature(phi: Formula) -> dict[str, int]:
    """Relation names with arities used by literals of `phi`."""
    sig: dict[str, int] = {}
    for node in subformulas(phi):
        if isinstance(node, RelLit):
            arity = len(node.args)
            if sig.setdefault(node.name, arity) != arity:
                raise SyntaxViolation(f"relation {node.name} used with two arities")
    return sig


def constant_names(phi: Formula) -> frozenset[str]:
    names: set[str] = set()
    for node in subformulas(phi):
        if isinstance(node, RelLit):
            names.update(t.name for t in node.args if isinstance(t, Const))
        elif isinstance(node, EqLit):
            names.update(t.name for t in (node.left, node.right) if isinstance(t, Const))
    return frozenset(names)


def is_first_order(phi: Formula) -> bool:
    """True when no dependency atom, possibility, or restriction occurs."""
    return not any(
        isinstance(node, (DepAtom, Possibly, RestrictedBy)) for node in subformulas(phi)
    )


def is_clean(phi: Formula) -> bool:
    """A formula is clean when every disjunction and every existential
    subformula is first-order, with restriction nodes (over clean bodies)
    as the only sanctioned non-first-order disjunctive shape."""
    if is_first_order(phi):
        return True
    if isinstance(phi, DepAtom):
        return True
    if isinstance(phi, And):
        return is_clean(phi.left) and is_clean(phi.right)
    if isinstance(phi, Forall):
        return is_clean(phi.body)
    if isinstance(phi, RestrictedBy):
        return is_clean(phi.body)
    # non-first-order Or, Exists, Possibly, literals are covered above
    return False


# ---------------------------------------------------------------------------
# Fresh names


RESERVED_PREFIX = "_"


class FreshNames:
    """Deterministic fresh-variable source over the reserved `_v` namespace.

    Never returns a name in `used`; every produced name is recorded.
    """

    def __init__(self, used: Iterable[str] = (), prefix: str = "_v"):
        self._used = set(used)
        self._prefix = prefix
        self._counter = 0
        self.produced: list[str] = []

    def fresh(self) -> str:
        while True:
            name = f"{self._prefix}{self._counter}"
            self._counter += 1
            if name not in self._used:
                self._used.add(name)
                self.produced.append(name)
                return name

    def fresh_many(self, k: int) -> tuple[str, ...]:
        return tuple(self.fresh() for _ in range(k))

    def reserve(self, names: Iterable[str]) -> None:
        self._used.update(names)


# ---------------------------------------------------------------------------
# Negation (first-order only), flattening, restriction


def negate_fo(phi: Formula) -> Formula:
    """Dualize a first-order formula, keeping negation normal form."""
    if isinstance(phi, BoolLit):
        return BoolLit(not phi.value)
    if isinstance(phi, RelLit):
        return RelLit(phi.name, not phi.positive, phi.args)
    if isinstance(phi, EqLit):
        return EqLit(not phi.positive, phi.left, phi.right)
    if isinstance(phi, Or):
        return And(negate_fo(phi.left), negate_fo(phi.right))
    if isinstance(phi, And):
        return Or(negate_fo(phi.left), negate_fo(phi.right))
    if isinstance(phi, Exists):
        return Forall(phi.var, negate_fo(phi.body))
    if isinstance(phi, Forall):
        return Exists(phi.var, negate_fo(phi.body))
    raise SyntaxViolation(f"cannot negate non-first-order formula: {phi}")


def flatten(phi: Formula) -> Formula:
    """The first-order flattening: dependency atoms and possibility nodes
    become T; restriction nodes flatten through their expansion."""
    if isinstance(phi, (BoolLit, RelLit, EqLit)):
        return phi
    if isinstance(phi, DepAtom):
        return TRUE
    if isinstance(phi, Possibly):
        return TRUE
    if isinstance(phi, Or):
        return Or(flatten(phi.left), flatten(phi.right))
    if isinstance(phi, And):
        return And(flatten(phi.left), flatten(phi.right))
    if isinstance(phi, Exists):
        return Exists(phi.var, flatten(phi.body))
    if isinstance(phi, Forall):
        return Forall(phi.var, flatten(phi.body))
    if isinstance(phi, RestrictedBy):
        return Or(negate_fo(phi.guard), And(phi.guard, flatten(phi.body)))
    raise SyntaxViolation(f"unknown node {phi!r}")


def restrict(phi: Formula, theta: Formula) -> Formula:
    """The explicit expansion of restriction: (!theta) \\/ (theta /\\ phi)."""
    if not is_first_order(theta):
        raise SyntaxViolation("restriction guard must be first-order")
    return Or(negate_fo(theta), And(theta, phi))


def desugar_possibility(phi: Formula, fresh: FreshNames | None = None) -> Formula:
    """Replace every possibility node, innermost first, by its definable
    expansion with two fresh constant witnesses and a fresh selector."""
    if fresh is None:
        fresh = FreshNames(all_variable_names(phi))

    def walk(node: Formula) -> Formula:
        if isinstance(node, Or):
            return Or(walk(node.left), walk(node.right))
        if isinstance(node, And):
            return And(walk(node.left), walk(node.right))
        if isinstance(node, Exists):
            return Exists(node.var, walk(node.body))
        if isinstance(node, Forall):
            return Forall(node.var, walk(node.body))
        if isinstance(node, RestrictedBy):
            return RestrictedBy(walk(node.body), node.guard)
        if isinstance(node, Possibly):
            body = walk(node.body)
            u0, u1, v = fresh.fresh(), fresh.fresh(), fresh.fresh()
            inner = ands(
                [
                    DepAtom("const", ((u0,),)),
                    DepAtom("const", ((u1,),)),
                    Or(EqLit(True, Var(v), Var(u0)), EqLit(True, Var(v), Var(u1))),
                    RestrictedBy(body, EqLit(True, Var(v), Var(u1))),
                    DepAtom("inconst", ((v,),)),
                ]
            )
            return Exists(u0, Exists(u1, Exists(v, inner)))
        return node

    return walk(phi)


# ---------------------------------------------------------------------------
# Capture-avoiding substitution


def substitute_vars(
    phi: Formula, mapping: Mapping[str, Term], fresh: FreshNames
) -> Formula:
    """Simultaneous substitution of free variable occurrences, renaming
    binders on demand to avoid capture."""

    def sub_term(t: Term, m: Mapping[str, Term]) -> Term:
        if isinstance(t, Var) and t.name in m:
            return m[t.name]
        return t

    def value_names(m: Mapping[str, Term]) -> set[str]:
        return {t.name for t in m.values() if isinstance(t, Var)}

    def walk(node: Formula, m: Mapping[str, Term]) -> Formula:
        if not m:
            return node
        if isinstance(node, BoolLit):
            return node
        if isinstance(node, RelLit):
            return RelLit(node.name, node.positive, tuple(sub_term(t, m) for t in node.args))
        if isinstance(node, EqLit):
            return EqLit(node.positive, sub_term(node.left, m), sub_term(node.right, m))
        if isinstance(node, DepAtom):
            groups = []
            for g in node.groups:
                new_g = []
                for v in g:
                    if v in m:
                        r = m[v]
                        if not isinstance(r, Var):
                            raise SyntaxViolation(
                                "cannot substitute a constant into a dependency atom"
                            )
                        new_g.append(r.name)
                    else:
                        new_g.append(v)
                groups.append(tuple(new_g))
            return DepAtom(node.name, tuple(groups), node.param)
        if isinstance(node, Or):
            return Or(walk(node.left, m), walk(node.right, m))
        if isinstance(node, And):
            return And(walk(node.left, m), walk(node.right, m))
        if isinstance(node, (Exists, Forall)):
            cls = type(node)
            m2 = {k: v for k, v in m.items() if k != node.var}
            if node.var in value_names(m2):
                renamed = fresh.fresh()
                m2[node.var] = Var(renamed)
                return cls(renamed, walk(node.body, m2))
            return cls(node.var, walk(node.body, m2))
        if isinstance(node, Possibly):
            return Possibly(walk(node.body, m))
        if isinstance(node, RestrictedBy):
            return RestrictedBy(walk(node.body, m), walk(node.guard, m))
        raise SyntaxViolation(f"unknown node {node!r}")

    return walk(phi, dict(mapping))


def freshen_bound(phi: Formula, fresh: FreshNames) -> Formula:
    """Rename every bound variable to a fresh name (keeps free ones)."""

    def walk(node: Formula, env: dict[str, str]) -> Formula:
        if isinstance(node, BoolLit):
            return node
        if isinstance(node, RelLit):
            return RelLit(
                node.name,
                node.positive,
                tuple(Var(env.get(t.name, t.name)) if isinstance(t, Var) else t for t in node.args),
            )
        if isinstance(node, EqLit):
            left, right = (
                Var(env.get(t.name, t.name)) if isinstance(t, Var) else t
                for t in (node.left, node.right)
            )
            return EqLit(node.positive, left, right)
        if isinstance(node, DepAtom):
            return DepAtom(
                node.name,
                tuple(tuple(env.get(v, v) for v in g) for g in node.groups),
                node.param,
            )
        if isinstance(node, Or):
            return Or(walk(node.left, env), walk(node.right, env))
        if isinstance(node, And):
            return And(walk(node.left, env), walk(node.right, env))
        if isinstance(node, (Exists, Forall)):
            renamed = fresh.fresh()
            return type(node)(renamed, walk(node.body, {**env, node.var: renamed}))
        if isinstance(node, Possibly):
            return Possibly(walk(node.body, env))
        if isinstance(node, RestrictedBy):
            return RestrictedBy(walk(node.body, env), walk(node.guard, env))
        raise SyntaxViolation(f"unknown node {node!r}")

    return walk(phi, {})


# ---------------------------------------------------------------------------
# Concrete grammar
#
#   formula  := 'E' IDENT '.' formula | 'A' IDENT '.' formula | disj
#   disj     := conj ('\/' conj)*
#   conj     := atomic ('/\' atomic)*
#   atomic   := '(' formula ')' | 'T' | 'F' | 'NE'
#             | 'poss' '(' formula ')'
#             | 'restrict' '(' formula ';' formula ')'
#             | ATOM '(' groups ')'
#             | ['!'] IDENT '(' terms? ')'
#             | term '=' term | term '!=' term
#
# Quantifier bodies extend as far right as possible.  `\/` binds loosest,
# then `/\`.  Identifiers are [A-Za-z_][A-Za-z0-9_]*; E, A, T, F, NE,
# poss, restrict and the atom names are reserved.

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<or>\\/)
  | (?P<and>/\\)
  | (?P<neq>!=)
  | (?P<bang>!)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<comma>,)
  | (?P<semi>;)
  | (?P<bar>\|)
  | (?P<dot>\.)
  | (?P<eq>=)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"E", "A", "T", "F", "poss", "restrict"}

# family name -> group shape tag
_TWO_GROUP = ("dep", "excl", "incl", "indep", "intersect", "nondep", "nonexcl", "nonincl")
_ONE_GROUP = ("const", "inconst", "total")
_THREE_GROUP = ("cindep", "noncindep")


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    out = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        assert kind is not None
        if kind != "ws":
            out.append(_Token(kind, m.group(), i))
        i = m.end()
    out.append(_Token("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, constants: frozenset[str], atom_names: frozenset[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.constants = constants
        self.atom_names = atom_names

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text!r}", tok.pos)
        return tok

    def parse(self) -> Formula:
        phi = self.formula()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.pos)
        return phi

    def formula(self) -> Formula:
        tok = self.peek()
        if tok.kind == "ident" and tok.text in ("E", "A"):
            self.next()
            var = self.variable()
            self.expect("dot")
            body = self.formula()
            return Exists(var, body) if tok.text == "E" else Forall(var, body)
        return self.disj()

    def disj(self) -> Formula:
        phi = self.conj()
        while self.peek().kind == "or":
            self.next()
            phi = Or(phi, self.conj())
        return phi

    def conj(self) -> Formula:
        phi = self.atomic()
        while self.peek().kind == "and":
            self.next()
            phi = And(phi, self.atomic())
        return phi

    def atomic(self) -> Formula:
        tok = self.peek()
        if tok.kind == "lpar":
            self.next()
            phi = self.formula()
            self.expect("rpar")
            return phi
        if tok.kind == "bang":
            self.next()
            name = self.expect("ident")
            if name.text in self.atom_names or name.text in _KEYWORDS:
                raise ParseError(f"cannot negate {name.text!r}", name.pos)
            self.expect("lpar")
            args = self.term_list()
            self.expect("rpar")
            return RelLit(name.text, False, args)
        if tok.kind != "ident":
            raise ParseError(f"unexpected token {tok.text!r}", tok.pos)

        if tok.text == "T":
            self.next()
            return TRUE
        if tok.text == "F":
            self.next()
            return FALSE
        if tok.text == "NE":
            self.next()
            return DepAtom("NE", ())
        if tok.text == "poss":
            self.next()
            self.expect("lpar")
            body = self.formula()
            self.expect("rpar")
            return Possibly(body)
        if tok.text == "restrict":
            self.next()
            self.expect("lpar")
            body = self.formula()
            self.expect("semi")
            guard = self.formula()
            rp = self.expect("rpar")
            if not is_first_order(guard):
                raise ParseError("restriction guard must be first-order", rp.pos)
            return RestrictedBy(body, guard)
        if tok.text in self.atom_names:
            return self.dep_atom()
        # plain relation literal or equality
        self.next()
        if self.peek().kind == "lpar":
            self.next()
            args = self.term_list()
            self.expect("rpar")
            return RelLit(tok.text, True, args)
        left = self.classify(tok)
        nxt = self.next()
        if nxt.kind == "eq":
            return EqLit(True, left, self.term())
        if nxt.kind == "neq":
            return EqLit(False, left, self.term())
        raise ParseError(f"expected '=', '!=', or '(' after {tok.text!r}", nxt.pos)

    def dep_atom(self) -> Formula:
        tok = self.next()
        name = tok.text
        param: int | None = None
        if name == "big":
            self.expect("lpar")
            num = self.expect("num")
            param = int(num.text)
            if param < 1:
                raise ParseError("big requires a parameter >= 1", num.pos)
            self.expect("semi")
            groups = (self.var_group(),)
            self.expect("rpar")
        elif name in _ONE_GROUP:
            self.expect("lpar")
            groups = (self.var_group(),)
            self.expect("rpar")
        elif name in _TWO_GROUP:
            self.expect("lpar")
            g1 = self.var_group()
            self.expect("semi")
            g2 = self.var_group()
            self.expect("rpar")
            groups = (g1, g2)
        elif name in _THREE_GROUP:
            self.expect("lpar")
            g1 = self.var_group()
            self.expect("semi")
            g2 = self.var_group()
            self.expect("bar")
            g3 = self.var_group()
            self.expect("rpar")
            groups = (g1, g2, g3)
        else:
            # registered custom atom: a single group
            self.expect("lpar")
            groups = (self.var_group(),)
            self.expect("rpar")
        atom = DepAtom(name, groups, param)
        _validate_groups(atom, tok.pos)
        return atom

    def var_group(self) -> tuple[str, ...]:
        out = [self.variable()]
        while self.peek().kind == "comma":
            self.next()
            out.append(self.variable())
        return tuple(out)

    def variable(self) -> str:
        tok = self.expect("ident")
        if tok.text in _KEYWORDS or tok.text in self.atom_names:
            raise ParseError(f"{tok.text!r} is reserved", tok.pos)
        if tok.text in self.constants:
            raise ParseError(
                f"{tok.text!r} is a declared constant; atom and quantifier "
                "positions take variables",
                tok.pos,
            )
        return tok.text

    def term(self) -> Term:
        tok = self.expect("ident")
        if tok.text in _KEYWORDS or tok.text in self.atom_names:
            raise ParseError(f"{tok.text!r} is reserved", tok.pos)
        return self.classify(tok)

    def classify(self, tok: _Token) -> Term:
        return Const(tok.text) if tok.text in self.constants else Var(tok.text)

    def term_list(self) -> tuple[Term, ...]:
        if self.peek().kind == "rpar":
            return ()
        out = [self.term()]
        while self.peek().kind == "comma":
            self.next()
            out.append(self.term())
        return tuple(out)


def _validate_groups(atom: DepAtom, pos: int | None = None) -> None:
    """Shape checks that do not need the registry."""
    name, groups = atom.name, atom.groups
    widths = tuple(len(g) for g in groups)
    if name == "NE":
        if widths != ():
            raise ParseError("NE takes no arguments", pos)
        return
    if any(w == 0 for w in widths):
        raise ParseError(f"{name} has an empty argument group", pos)
    if name in ("excl", "incl", "intersect", "nonexcl", "nonincl") and widths[0] != widths[1]:
        raise ParseError(f"{name} needs two groups of equal width", pos)


def parse(
    text: str,
    constants: Iterable[str] = (),
    atom_names: Iterable[str] | None = None,
) -> Formula:
    """Parse a formula.  `constants` are the model-declared constant names;
    `atom_names` extends the built-in atom vocabulary (for custom atoms)."""
    from .atoms import BUILTIN_ATOM_NAMES  # cycle-free: atoms imports nothing from here at module level

    names = frozenset(BUILTIN_ATOM_NAMES if atom_names is None else atom_names)
    return _Parser(text, frozenset(constants), names).parse()


# ---------------------------------------------------------------------------
# Pretty printer (parse(pretty(phi)) round trips)

_PREC_QUANT = 0
_PREC_OR = 1
_PREC_AND = 2
_PREC_ATOM = 3


def pretty(phi: Formula) -> str:
    return _pp(phi, _PREC_QUANT)


def _pp(phi: Formula, ctx: int) -> str:
    if isinstance(phi, BoolLit):
        return "T" if phi.value else "F"
    if isinstance(phi, RelLit):
        sign = "" if phi.positive else "!"
        return f"{sign}{phi.name}({', '.join(str(t) for t in phi.args)})"
    if isinstance(phi, EqLit):
        op = "=" if phi.positive else "!="
        return f"{phi.left} {op} {phi.right}"
    if isinstance(phi, DepAtom):
        return _pp_atom(phi)
    if isinstance(phi, Or):
        s = f"{_pp(phi.left, _PREC_OR)} \\/ {_pp(phi.right, _PREC_OR + 1)}"
        return f"({s})" if ctx > _PREC_OR else s
    if isinstance(phi, And):
        s = f"{_pp(phi.left, _PREC_AND)} /\\ {_pp(phi.right, _PREC_AND + 1)}"
        return f"({s})" if ctx > _PREC_AND else s
    if isinstance(phi, (Exists, Forall)):
        q = "E" if isinstance(phi, Exists) else "A"
        s = f"{q} {phi.var}. {_pp(phi.body, _PREC_QUANT)}"
        return f"({s})" if ctx > _PREC_QUANT else s
    if isinstance(phi, Possibly):
        return f"poss({_pp(phi.body, _PREC_QUANT)})"
    if isinstance(phi, RestrictedBy):
        return f"restrict({_pp(phi.body, _PREC_QUANT)} ; {_pp(phi.guard, _PREC_QUANT)})"
    raise SyntaxViolation(f"unknown node {phi!r}")


def _pp_atom(atom: DepAtom) -> str:
    if atom.name == "NE":
        return "NE"
    rendered = [", ".join(g) for g in atom.groups]
    if atom.name in _THREE_GROUP:
        inner = f"{rendered[0]}; {rendered[1]} | {rendered[2]}"
    elif len(rendered) == 2:
        inner = f"{rendered[0]}; {rendered[1]}"
    else:
        inner = rendered[0]
    if atom.param is not None:
        inner = f"{atom.param}; {inner}"
    return f"{atom.name}({inner})"
