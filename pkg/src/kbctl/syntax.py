"""Concrete syntax: the ``.kb`` document language, rules, and the SPARQL subset.

Document statements are line oriented::

    namespace <http://example.org/onto#>
    class OralInfection subclassOf Infection
    property hasOralCondition
    individual Tim
    type Tim : Patient
    fact hasOralCondition(Tim, LocalisedChronicPeriodontitis)
    sub and(A, some(r, B)) < C
    equiv D = and(Patient, some(hasMedicalCondition, DiabetesMellitus))
    disjoint A B C
    rule R1: Patient(?x) ^ hasOralCondition(?x, ?y) -> Flagged(?x)

A statement continues onto the next line while a parenthesis is open,
the line ends in a connective (``^ -> , < = :``) or the next line starts
with ``^`` or ``->``.  Axiom statements may be
labelled with ``@id``.  There is deliberately no syntax for negation,
disjunction or built-ins; trying to use them is a targeted error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    DuplicateAxiomId,
    KBError,
    KindConflict,
    NegationUnsupported,
    ParseError,
    SourceSpan,
    UndeclaredSymbol,
    UnknownPrefix,
    UnprojectableVariable,
    UnsafeRule,
)
from .model import (
    Atom,
    Axiom,
    ClassAtom,
    ClassExpression,
    Constant,
    DisjointClasses,
    EquivalentClasses,
    Exists,
    Fact,
    Kind,
    KnowledgeBase,
    PropertyAtom,
    RelFact,
    Rule,
    SubClassOf,
    Symbol,
    SymbolTable,
    TypeFact,
    Variable,
    build_kb,
    check_rule_safety,
    conj,
    named,
)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
HEADER = "# kbctl knowledge base"


class Token(NamedTuple):
    kind: str
    value: str
    span: SourceSpan


# -- tokenizer ---------------------------------------------------------------

_KB_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r﻿]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<iri><[^\s<>]*>)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
  | (?P<number>[0-9]+(?:\.[0-9]+)?)
  | (?P<arrow>->|→)
  | (?P<punct>[(),^<=:@]|∧)
  | (?P<neg>[!¬~])
  | (?P<disj>[|∨])
    """,
    re.VERBOSE,
)

_CONTINUES = {"^", "∧", "->", "→", ",", "<", "=", ":", "(", "@"}
_LEADS = {"^", "∧", "->", "→"}


def _tokenize(text: str, file: str, pattern: re.Pattern) -> list[Token]:
    tokens: list[Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = pattern.match(text, pos)
        span = SourceSpan(file, line, pos - line_start + 1)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        value = m.group()
        if kind == "neg":
            raise NegationUnsupported(
                "negation is not supported: rules and axioms are monotone and open-world", span
            )
        if kind == "disj":
            raise ParseError("disjunction is not supported; split it into separate rules", span)
        if kind == "newline":
            tokens.append(Token("newline", value, span))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, span))
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(file, line, pos - line_start + 1)))
    return tokens


def _statements(tokens: list[Token]) -> list[list[Token]]:
    """Split a token stream into statements at unprotected newlines.

    A newline does not end a statement inside parentheses, after a trailing
    connective, or before a line that starts with ``^`` or ``->``.
    """
    out: list[list[Token]] = []
    current: list[Token] = []
    depth = 0
    pending = False
    for tok in tokens:
        if tok.kind == "eof":
            break
        if tok.kind == "newline":
            if current and depth == 0 and current[-1].value not in _CONTINUES:
                pending = True
            continue
        if pending:
            pending = False
            if tok.value not in _LEADS:
                out.append(current)
                current = []
        if tok.value == "(":
            depth += 1
        elif tok.value == ")":
            depth -= 1
        current.append(tok)
    if current:
        out.append(current)
    return out


class _Cursor:
    def __init__(self, tokens: list[Token], end_span: SourceSpan) -> None:
        self.tokens = tokens
        self.pos = 0
        self.end_span = end_span

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def span(self) -> SourceSpan:
        tok = self.peek()
        return tok.span if tok else self.end_span

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of statement", self.end_span)
        self.pos += 1
        return tok

    def expect(self, value: str) -> Token:
        tok = self.peek()
        if tok is None or tok.value != value:
            found = "end of statement" if tok is None else repr(tok.value)
            raise ParseError(f"expected {value!r}, found {found}", self.span())
        return self.next()

    def name(self, what: str = "a name") -> Token:
        tok = self.peek()
        if tok is None or tok.kind != "name":
            found = "end of statement" if tok is None else repr(tok.value)
            raise ParseError(f"expected {what}, found {found}", self.span())
        return self.next()

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def finish(self) -> None:
        if not self.at_end():
            raise ParseError(f"unexpected {self.peek().value!r}", self.span())


# -- raw (unresolved) syntax -------------------------------------------------


@dataclass
class _RawCE:
    op: str  # "name" | "and" | "some"
    span: SourceSpan
    name: str = ""
    args: list["_RawCE"] = field(default_factory=list)


@dataclass
class _RawAtom:
    pred: Token
    args: list[Token]


_UNSUPPORTED_CONSTRUCTORS = {
    "or": "disjunction (or) is not supported",
    "not": "negation (not) is not supported: the language is monotone and open-world",
    "complement": "negation (complement) is not supported: the language is monotone and open-world",
    "all": "universal restrictions (all) are not supported",
    "only": "universal restrictions (only) are not supported",
    "min": "cardinality restrictions are not supported",
    "max": "cardinality restrictions are not supported",
    "exactly": "cardinality restrictions are not supported",
    "oneof": "nominals are not supported",
}


def _parse_ce(cur: _Cursor) -> _RawCE:
    tok = cur.name("a class expression")
    nxt = cur.peek()
    if nxt is not None and nxt.value == "(":
        op = tok.value
        if op.lower() in _UNSUPPORTED_CONSTRUCTORS:
            err = NegationUnsupported if op.lower() in ("not", "complement") else ParseError
            raise err(_UNSUPPORTED_CONSTRUCTORS[op.lower()], tok.span)
        if op == "and":
            cur.next()
            args = [_parse_ce(cur)]
            while cur.peek() is not None and cur.peek().value == ",":
                cur.next()
                args.append(_parse_ce(cur))
            cur.expect(")")
            if len(args) < 2:
                raise ParseError("and(...) needs at least two members", tok.span)
            return _RawCE("and", tok.span, args=args)
        if op == "some":
            cur.next()
            prop = cur.name("a property name")
            cur.expect(",")
            filler = _parse_ce(cur)
            cur.expect(")")
            return _RawCE("some", tok.span, name=prop.value, args=[filler])
        raise ParseError(f"unknown class constructor {op!r} (expected and or some)", tok.span)
    return _RawCE("name", tok.span, name=tok.value)


def _parse_atoms(cur: _Cursor, stop: set[str]) -> list[_RawAtom]:
    atoms = [_parse_atom(cur)]
    while True:
        tok = cur.peek()
        if tok is None or tok.value in stop:
            return atoms
        if tok.value in ("^", "∧", ","):
            cur.next()
            atoms.append(_parse_atom(cur))
            continue
        if tok.kind == "name" and tok.value.lower() in ("or", "v"):
            raise ParseError("disjunction is not supported in rules", tok.span)
        raise ParseError(f"expected '^' or '->', found {tok.value!r}", tok.span)


def _parse_atom(cur: _Cursor) -> _RawAtom:
    tok = cur.peek()
    if tok is not None and tok.kind == "name" and tok.value.lower() == "not":
        raise NegationUnsupported(
            "negated atoms are not supported: rules are monotone (no negation as failure)",
            tok.span,
        )
    pred = cur.name("an atom")
    nxt = cur.peek()
    if nxt is not None and nxt.value == ":":
        raise ParseError(f"built-in atoms such as {pred.value}:... are not supported", pred.span)
    cur.expect("(")
    args = [_parse_term(cur)]
    while cur.peek() is not None and cur.peek().value == ",":
        cur.next()
        args.append(_parse_term(cur))
    cur.expect(")")
    if len(args) > 2:
        raise ParseError("atoms take one (class) or two (property) arguments", pred.span)
    return _RawAtom(pred, args)


def _parse_term(cur: _Cursor) -> Token:
    tok = cur.peek()
    if tok is not None and tok.kind == "number":
        raise ParseError("literal values are not supported: atoms relate individuals", tok.span)
    if tok is None or tok.kind not in ("var", "name"):
        found = "end of statement" if tok is None else repr(tok.value)
        raise ParseError(f"expected a variable or individual, found {found}", cur.span())
    return cur.next()


# -- resolution --------------------------------------------------------------


@dataclass
class Document:
    """Result of parsing one or more ``.kb`` sources.

    ``statements`` pairs every resulting value with the span of the
    statement that produced it.
    """

    symbols: SymbolTable
    axioms: list[Axiom] = field(default_factory=list)
    facts: list[Fact] = field(default_factory=list)
    rules: list[Rule] = field(default_factory=list)
    declarations: list[Symbol] = field(default_factory=list)
    namespace: str | None = None
    statements: list[tuple[SourceSpan, object]] = field(default_factory=list)

    def to_kb(self) -> KnowledgeBase:
        return build_kb(self.axioms, self.facts, self.rules,
                        symbols=self.symbols, namespace=self.namespace)


class _Resolver:
    def __init__(self, table: SymbolTable) -> None:
        self.table = table

    def intern(self, name: str, kind: Kind, span: SourceSpan) -> Symbol:
        try:
            return self.table.intern(name, kind)
        except KBError as exc:
            exc.span = exc.span or span
            raise

    def lookup(self, name: str, kind: Kind, span: SourceSpan) -> Symbol:
        sym = self.table.get(name, kind)
        if sym is None:
            others = self.table.kinds_of(name)
            if others:
                raise KindConflict(f"{name!r} is a {others[0].value}, not a {kind.value}", span)
            raise UndeclaredSymbol(f"{kind.value} {name!r} is not declared", span)
        return sym

    def ce(self, raw: _RawCE) -> ClassExpression:
        if raw.op == "name":
            return named(self.lookup(raw.name, Kind.CLASS, raw.span))
        if raw.op == "and":
            return conj(*(self.ce(a) for a in raw.args))
        return Exists(self.lookup(raw.name, Kind.PROPERTY, raw.span), self.ce(raw.args[0]))

    def term(self, tok: Token):
        if tok.kind == "var":
            return Variable(self.intern(tok.value, Kind.VARIABLE, tok.span))
        return Constant(self.lookup(tok.value, Kind.INDIVIDUAL, tok.span))

    def atom(self, raw: _RawAtom) -> Atom:
        terms = [self.term(t) for t in raw.args]
        if len(terms) == 1:
            return ClassAtom(self.lookup(raw.pred.value, Kind.CLASS, raw.pred.span), terms[0])
        return PropertyAtom(self.lookup(raw.pred.value, Kind.PROPERTY, raw.pred.span), *terms)


class _LenientResolver(_Resolver):
    """Interns names by position instead of requiring declarations."""

    def lookup(self, name: str, kind: Kind, span: SourceSpan) -> Symbol:
        return self.intern(name, kind, span)


def _make_rule(name: str, body: Sequence[Atom], head: Sequence[Atom], span: SourceSpan) -> Rule:
    rule = Rule(name, tuple(body), tuple(head))
    unbound = check_rule_safety(rule)
    if unbound:
        names = ", ".join(v.name for v in unbound)
        raise UnsafeRule(f"rule {name}: head variables {names} do not occur in the body", unbound, span)
    return rule


def _rule_parts(cur: _Cursor) -> tuple[list[_RawAtom], list[_RawAtom]]:
    body = _parse_atoms(cur, {"->", "→"})
    tok = cur.peek()
    if tok is None:
        raise ParseError("rule has no '->'", cur.end_span)
    cur.next()
    head = _parse_atoms(cur, set())
    cur.finish()
    return body, head


def parse_documents(sources: Iterable[tuple[str, str]], symbols: SymbolTable | None = None) -> Document:
    """Parse several ``(file name, text)`` sources as one concatenated document."""
    table = symbols if symbols is not None else SymbolTable(allow_punning=True)
    doc = Document(table)
    parsed: list[tuple[str, SourceSpan, object]] = []

    # pass 1: syntax and declarations
    for file, text in sources:
        tokens = _tokenize(text, file, _KB_TOKEN)
        for stmt in _statements(tokens):
            cur = _Cursor(stmt, _end_span(stmt))
            label = None
            if cur.peek().value == "@":
                cur.next()
                label = cur.name("an axiom id").value
            head = cur.name("a statement keyword")
            kw = head.value
            if label is not None and kw not in ("sub", "equiv", "disjoint", "class"):
                raise ParseError(f"@{label}: only axiom statements can carry an id", head.span)
            if kw == "namespace":
                tok = cur.next()
                if tok.kind != "iri":
                    raise ParseError("namespace expects an IRI in angle brackets", tok.span)
                cur.finish()
                iri = tok.value[1:-1]
                if doc.namespace is not None and doc.namespace != iri:
                    raise ParseError("conflicting namespace declarations", head.span)
                doc.namespace = iri
            elif kw in ("class", "property", "individual"):
                name = cur.name(f"a {kw} name")
                sup = None
                if kw == "class" and not cur.at_end():
                    kw2 = cur.name("'subclassOf'")
                    if kw2.value != "subclassOf":
                        raise ParseError(f"expected 'subclassOf', found {kw2.value!r}", kw2.span)
                    sup = _parse_ce(cur)
                cur.finish()
                if label is not None and sup is None:
                    raise ParseError(f"@{label}: a bare declaration is not an axiom", head.span)
                parsed.append(("decl", head.span, (Kind(kw), name)))
                if sup is not None:
                    parsed.append(("sub", head.span, (label, _RawCE("name", name.span, name=name.value), sup)))
            elif kw == "type":
                ind = cur.name("an individual")
                cur.expect(":")
                cls = cur.name("a class")
                cur.finish()
                parsed.append(("type", head.span, (ind, cls)))
            elif kw == "fact":
                prop = cur.name("a property")
                cur.expect("(")
                s = cur.name("an individual")
                cur.expect(",")
                o = cur.name("an individual")
                cur.expect(")")
                cur.finish()
                parsed.append(("fact", head.span, (prop, s, o)))
            elif kw == "sub":
                left = _parse_ce(cur)
                cur.expect("<")
                right = _parse_ce(cur)
                cur.finish()
                parsed.append(("sub", head.span, (label, left, right)))
            elif kw == "equiv":
                name = cur.name("a class name")
                if cur.peek() is not None and cur.peek().value == "(":
                    raise ParseError("equiv: the left side must be a class name", name.span)
                cur.expect("=")
                right = _parse_ce(cur)
                cur.finish()
                parsed.append(("equiv", head.span, (label, name, right)))
            elif kw == "disjoint":
                names = [cur.name("a class name")]
                while not cur.at_end():
                    names.append(cur.name("a class name"))
                if len(names) < 2:
                    raise ParseError("disjoint needs at least two classes", head.span)
                parsed.append(("disjoint", head.span, (label, names)))
            elif kw == "rule":
                rname = cur.name("a rule name")
                cur.expect(":")
                body, rhead = _rule_parts(cur)
                parsed.append(("rule", head.span, (rname.value, body, rhead)))
            else:
                raise ParseError(f"unknown statement {kw!r}", head.span)

    res = _Resolver(table)
    for kind, span, payload in parsed:
        if kind == "decl":
            k, tok = payload
            doc.declarations.append(res.intern(tok.value, k, tok.span))

    # pass 2: resolve references
    n_axioms = 0
    used_ids: dict[str, SourceSpan] = {}

    def axiom_id(label: str | None, span: SourceSpan, count: int) -> str:
        ax_id = label or f"ax{count}"
        if ax_id in used_ids:
            raise DuplicateAxiomId(f"axiom id {ax_id!r} already used at {used_ids[ax_id]}", span)
        used_ids[ax_id] = span
        return ax_id

    for kind, span, payload in parsed:
        if kind == "decl":
            continue
        if kind == "type":
            ind, cls = payload
            fact = TypeFact(res.lookup(ind.value, Kind.INDIVIDUAL, ind.span),
                            res.lookup(cls.value, Kind.CLASS, cls.span))
            doc.facts.append(fact)
            doc.statements.append((span, fact))
        elif kind == "fact":
            prop, s, o = payload
            fact = RelFact(res.lookup(prop.value, Kind.PROPERTY, prop.span),
                           res.lookup(s.value, Kind.INDIVIDUAL, s.span),
                           res.lookup(o.value, Kind.INDIVIDUAL, o.span))
            doc.facts.append(fact)
            doc.statements.append((span, fact))
        elif kind == "sub":
            label, left, right = payload
            n_axioms += 1
            ax = SubClassOf(res.ce(left), res.ce(right), axiom_id(label, span, n_axioms))
            doc.axioms.append(ax)
            doc.statements.append((span, ax))
        elif kind == "equiv":
            label, name, right = payload
            n_axioms += 1
            ax = EquivalentClasses(res.lookup(name.value, Kind.CLASS, name.span), res.ce(right),
                                   axiom_id(label, span, n_axioms))
            doc.axioms.append(ax)
            doc.statements.append((span, ax))
        elif kind == "disjoint":
            label, names = payload
            n_axioms += 1
            syms = [res.lookup(t.value, Kind.CLASS, t.span) for t in names]
            pairs = [(a, b) for i, a in enumerate(syms) for b in syms[i + 1:]]
            base = label or f"ax{n_axioms}"
            for j, (a, b) in enumerate(pairs, start=1):
                ax_id = axiom_id(base if len(pairs) == 1 else f"{base}-{j}", span, n_axioms)
                ax = DisjointClasses(a, b, ax_id)
                doc.axioms.append(ax)
                doc.statements.append((span, ax))
        elif kind == "rule":
            rname, body, rhead = payload
            rule = _make_rule(rname, [res.atom(a) for a in body], [res.atom(a) for a in rhead], span)
            doc.rules.append(rule)
            doc.statements.append((span, rule))
    return doc


def _end_span(stmt: list[Token]) -> SourceSpan:
    last = stmt[-1]
    return SourceSpan(last.span.file, last.span.line, last.span.column + len(last.value))


def parse_document(text: str, file: str = "<string>", symbols: SymbolTable | None = None) -> Document:
    return parse_documents([(file, text)], symbols)


def parse_kb(text: str, file: str = "<string>") -> KnowledgeBase:
    return parse_document(text, file).to_kb()


def load_kb(paths: Iterable, extra: Iterable[tuple[str, str]] = ()) -> KnowledgeBase:
    """Read ``.kb`` files (concatenated in order) into a knowledge base."""
    sources = []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            sources.append((str(p), fh.read()))
    sources.extend(extra)
    return parse_documents(sources).to_kb()


def parse_rule(text: str, symbols: SymbolTable | None = None, file: str = "<rule>") -> Rule:
    """Parse a single rule, e.g. ``A(?x) ^ p(?x, ?y) -> B(?y)``.

    An optional leading ``rule`` keyword and ``Name:`` label are accepted.
    Without ``symbols`` every predicate and constant is interned on the fly
    (arity decides class vs property).
    """
    tokens = [t for t in _tokenize(text, file, _KB_TOKEN) if t.kind != "newline"]
    end = tokens[-1].span
    cur = _Cursor(tokens[:-1], end)
    if cur.at_end():
        raise ParseError("empty rule", end)
    start = cur.span()
    if cur.peek().value == "rule":
        cur.next()
    name = "rule"
    nxt = cur.peek(1)
    if cur.peek() is not None and cur.peek().kind == "name" and nxt is not None and nxt.value == ":":
        name = cur.next().value
        cur.next()
    body, head = _rule_parts(cur)
    if symbols is None:
        res: _Resolver = _LenientResolver(SymbolTable(allow_punning=True))
    else:
        res = _Resolver(symbols.copy() if symbols.frozen else symbols)
    return _make_rule(name, [res.atom(a) for a in body], [res.atom(a) for a in head], start)


def parse_fact(text: str, kb: KnowledgeBase) -> Fact:
    """Parse ``C(a)`` or ``p(a, b)`` against the declarations of ``kb``."""
    tokens = [t for t in _tokenize(text, "<fact>", _KB_TOKEN) if t.kind != "newline"]
    cur = _Cursor(tokens[:-1], tokens[-1].span)
    if cur.at_end():
        raise ParseError("empty fact", tokens[-1].span)
    raw = _parse_atom(cur)
    cur.finish()
    res = _Resolver(kb.symbols)
    args = []
    for tok in raw.args:
        if tok.kind == "var":
            raise ParseError("facts are ground: variables are not allowed", tok.span)
        args.append(res.lookup(tok.value, Kind.INDIVIDUAL, tok.span))
    if len(args) == 1:
        return TypeFact(args[0], res.lookup(raw.pred.value, Kind.CLASS, raw.pred.span))
    return RelFact(res.lookup(raw.pred.value, Kind.PROPERTY, raw.pred.span), args[0], args[1])


# -- rendering ---------------------------------------------------------------


def render_expression(ce: ClassExpression) -> str:
    return str(ce)


def render_atom(atom: Atom) -> str:
    return str(atom)


def render_document(kb: KnowledgeBase) -> str:
    """Deterministic text that parses back to a structurally equal KB."""
    lines = [HEADER]
    if kb.namespace is not None:
        lines.append(f"namespace <{kb.namespace}>")
    for sym in kb.symbols:
        if sym.kind is Kind.VARIABLE or sym.id < 2:
            continue
        lines.append(f"{sym.kind.value} {sym.name}")
    for n, ax in enumerate(kb.tbox, start=1):
        label = "" if ax.id == f"ax{n}" else f"@{ax.id} "
        if isinstance(ax, SubClassOf):
            lines.append(f"{label}sub {ax.sub} < {ax.sup}")
        elif isinstance(ax, EquivalentClasses):
            lines.append(f"{label}equiv {ax.name.name} = {ax.definition}")
        else:
            lines.append(f"{label}disjoint {ax.a.name} {ax.b.name}")
    for f in kb.abox:
        if isinstance(f, TypeFact):
            lines.append(f"type {f.individual.name} : {f.cls.name}")
        else:
            lines.append(f"fact {f.prop.name}({f.subject.name}, {f.object.name})")
    for rule in kb.rules:
        lines.append(f"rule {rule}")
    return "\n".join(lines) + "\n"


# -- SPARQL subset -----------------------------------------------------------

_RQ_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n﻿]+)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}.;,*()])
  | (?P<other>.)
    """,
    re.VERBOSE,
)

_UNSUPPORTED_KEYWORDS = {
    "DISTINCT": "DISTINCT is implicit: results are always distinct",
    "REDUCED": "REDUCED is not supported",
    "FILTER": "FILTER is not supported",
    "OPTIONAL": "OPTIONAL is not supported",
    "UNION": "UNION is not supported",
    "MINUS": "MINUS is not supported (no negation under the open-world assumption)",
    "NOT": "NOT EXISTS is not supported (no negation under the open-world assumption)",
    "EXISTS": "EXISTS is not supported",
    "BIND": "BIND is not supported",
    "VALUES": "VALUES is not supported",
    "GRAPH": "GRAPH is not supported",
    "ORDER": "ORDER BY is not supported: row order is fixed",
    "GROUP": "aggregation is not supported",
    "LIMIT": "LIMIT is not supported",
    "OFFSET": "OFFSET is not supported",
    "CONSTRUCT": "only SELECT queries are supported",
    "ASK": "only SELECT queries are supported",
    "DESCRIBE": "only SELECT queries are supported",
    "BASE": "BASE is not supported",
}


@dataclass(frozen=True)
class Query:
    prefixes: dict
    projected: tuple[Symbol, ...]
    patterns: tuple[Atom, ...]
    symbols: SymbolTable = field(compare=False, repr=False)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v.name[1:] for v in self.projected)


def parse_query(text: str, file: str = "<query>") -> Query:
    tokens: list[Token] = []
    for tok in _tokenize(text, file, _RQ_TOKEN):
        if tok.kind == "other":
            raise ParseError(f"unexpected character {tok.value!r}", tok.span)
        if tok.kind == "name" and tok.value.upper() in _UNSUPPORTED_KEYWORDS and tok.value != "a":
            raise ParseError(_UNSUPPORTED_KEYWORDS[tok.value.upper()], tok.span)
        tokens.append(tok)
    end = tokens[-1].span
    cur = _Cursor(tokens[:-1], end)

    def keyword(word: str) -> bool:
        tok = cur.peek()
        return tok is not None and tok.kind == "name" and tok.value.upper() == word

    prefixes: dict[str, str] = {}
    while keyword("PREFIX"):
        cur.next()
        label = cur.next()
        if label.kind != "pname" or not label.value.endswith(":") or label.value.count(":") != 1:
            raise ParseError("expected a prefix label such as 'ex:'", label.span)
        iri = cur.next()
        if iri.kind != "iri":
            raise ParseError("expected an IRI in angle brackets", iri.span)
        prefixes[label.value[:-1]] = iri.value[1:-1]

    if not keyword("SELECT"):
        raise ParseError("expected SELECT", cur.span())
    cur.next()
    table = SymbolTable(allow_punning=True)
    projected: list[tuple[Symbol, SourceSpan]] = []
    while cur.peek() is not None and cur.peek().kind == "var":
        tok = cur.next()
        sym = table.intern("?" + tok.value[1:], Kind.VARIABLE)
        if any(s == sym for s, _ in projected):
            raise ParseError(f"variable {tok.value} is projected twice", tok.span)
        projected.append((sym, tok.span))
    if cur.peek() is not None and cur.peek().value == "*":
        raise ParseError("SELECT * is not supported: list the projected variables", cur.span())
    if not projected:
        raise ParseError("SELECT needs at least one variable", cur.span())
    if keyword("WHERE"):
        cur.next()
    cur.expect("{")

    def term(kind: Kind):
        tok = cur.next()
        if tok.kind == "var":
            return Variable(table.intern("?" + tok.value[1:], Kind.VARIABLE))
        return Constant(table.intern(resolve(tok), kind))

    def resolve(tok: Token) -> str:
        if tok.kind == "iri":
            return tok.value[1:-1]
        if tok.kind == "pname":
            label, _, local = tok.value.partition(":")
            if label not in prefixes:
                raise UnknownPrefix(f"prefix {label + ':'!r} is not declared", tok.span)
            if not local:
                raise ParseError("prefixed name has no local part", tok.span)
            return prefixes[label] + local
        raise ParseError(f"expected an IRI, prefixed name or variable, found {tok.value!r}", tok.span)

    def is_type(tok: Token) -> bool:
        if tok.kind == "name" and tok.value == "a":
            return True
        if tok.kind == "pname" and tok.value.partition(":")[::2] == ("rdf", "type"):
            return True
        return tok.kind in ("pname", "iri") and resolve(tok) == RDF_TYPE

    patterns: list[Atom] = []
    while cur.peek() is not None and cur.peek().value != "}":
        subj_tok = cur.peek()
        if subj_tok.kind not in ("var", "pname", "iri"):
            raise ParseError(f"expected a triple subject, found {subj_tok.value!r}", subj_tok.span)
        subject = term(Kind.INDIVIDUAL)
        while True:
            verb = cur.next()
            if verb.kind == "var":
                raise ParseError("variable predicates are not supported", verb.span)
            obj_tok = cur.peek()
            if obj_tok is None:
                raise ParseError("incomplete triple pattern", end)
            if is_type(verb):
                if obj_tok.kind == "var":
                    raise ParseError("the class of a type pattern must be a constant", obj_tok.span)
                cls = table.intern(resolve(cur.next()), Kind.CLASS)
                patterns.append(ClassAtom(cls, subject))
            else:
                prop = table.intern(resolve(verb), Kind.PROPERTY)
                if obj_tok.kind not in ("var", "pname", "iri"):
                    raise ParseError(f"expected a triple object, found {obj_tok.value!r}", obj_tok.span)
                patterns.append(PropertyAtom(prop, subject, term(Kind.INDIVIDUAL)))
            sep = cur.peek()
            if sep is not None and sep.value == ",":
                raise ParseError("object lists (',') are not supported; repeat the predicate", sep.span)
            if sep is not None and sep.value == ";":
                while cur.peek() is not None and cur.peek().value == ";":
                    cur.next()
                nxt = cur.peek()
                if nxt is not None and nxt.value not in (".", "}"):
                    continue
            break
        sep = cur.peek()
        if sep is not None and sep.value == ".":
            cur.next()
        elif sep is None or sep.value != "}":
            found = "end of query" if sep is None else repr(sep.value)
            raise ParseError(f"expected '.' or '}}', found {found}", cur.span())
    cur.expect("}")
    cur.finish()
    if not patterns:
        raise ParseError("WHERE block has no triple patterns", end)
    used = {t.sym for p in patterns for t in p.terms() if isinstance(t, Variable)}
    for sym, span in projected:
        if sym not in used:
            raise UnprojectableVariable(f"projected variable {sym.name} does not occur in WHERE", span)
    table.freeze()
    return Query(prefixes, tuple(s for s, _ in projected), tuple(patterns), table)
