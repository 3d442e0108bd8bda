"""Core data model: interned symbols, class expressions, axioms, rules, facts.

Everything here is immutable once built.  Symbols compare by ``(kind, name)``
so values from two parses of the same text are equal; ordering inside a
knowledge base uses the dense integer ``id``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .errors import DuplicateAxiomId, KindConflict, UndeclaredSymbol, UnsafeRule

TOP_NAME = "Top"
BOTTOM_NAME = "Bottom"


class Kind(str, enum.Enum):
    CLASS = "class"
    PROPERTY = "property"
    INDIVIDUAL = "individual"
    VARIABLE = "variable"


@dataclass(frozen=True)
class Symbol:
    id: int = field(compare=False)
    kind: Kind
    name: str
    fresh: bool = field(default=False, compare=False, repr=False)

    def __str__(self) -> str:
        return self.name

    def __lt__(self, other: "Symbol") -> bool:
        return self.id < other.id


_PUNNABLE = frozenset({Kind.CLASS, Kind.INDIVIDUAL})


class SymbolTable:
    """Bijective intern table from ``(name, kind)`` to :class:`Symbol`.

    A name keeps the kind it was first interned with.  With
    ``allow_punning`` a class and an individual may share a name; the kind
    tag keeps them apart.  ``Top`` and ``Bottom`` are always ids 0 and 1.
    """

    def __init__(self, allow_punning: bool = False) -> None:
        self.allow_punning = allow_punning
        self._symbols: list[Symbol] = []
        self._by_key: dict[tuple[str, Kind], Symbol] = {}
        self._kinds: dict[str, list[Kind]] = {}
        self._frozen = False
        self.top = self.intern(TOP_NAME, Kind.CLASS)
        self.bottom = self.intern(BOTTOM_NAME, Kind.CLASS)

    def intern(self, name: str, kind: Kind) -> Symbol:
        kind = Kind(kind)
        sym = self._by_key.get((name, kind))
        if sym is not None:
            return sym
        if not name or any(c.isspace() for c in name):
            raise ValueError(f"invalid symbol name {name!r}")
        if self._frozen:
            raise UndeclaredSymbol(f"{kind.value} {name!r} is not declared")
        for other in self._kinds.get(name, ()):
            if not (self.allow_punning and {kind, other} <= _PUNNABLE):
                raise KindConflict(
                    f"{name!r} is already a {other.value}, cannot reuse it as a {kind.value}"
                )
        sym = Symbol(len(self._symbols), kind, name)
        self._symbols.append(sym)
        self._by_key[(name, kind)] = sym
        self._kinds.setdefault(name, []).append(kind)
        return sym

    def get(self, name: str, kind: Kind) -> Symbol | None:
        return self._by_key.get((name, Kind(kind)))

    def require(self, name: str, kind: Kind) -> Symbol:
        sym = self.get(name, kind)
        if sym is None:
            raise UndeclaredSymbol(f"{Kind(kind).value} {name!r} is not declared")
        return sym

    def kinds_of(self, name: str) -> tuple[Kind, ...]:
        return tuple(self._kinds.get(name, ()))

    def of_kind(self, kind: Kind) -> list[Symbol]:
        return [s for s in self._symbols if s.kind is kind]

    def freeze(self) -> None:
        self._frozen = True

    @property
    def frozen(self) -> bool:
        return self._frozen

    def copy(self) -> "SymbolTable":
        new = SymbolTable.__new__(SymbolTable)
        new.allow_punning = self.allow_punning
        new._symbols = list(self._symbols)
        new._by_key = dict(self._by_key)
        new._kinds = {k: list(v) for k, v in self._kinds.items()}
        new._frozen = False
        new.top = self.top
        new.bottom = self.bottom
        return new

    def declarations(self) -> tuple[tuple[Kind, str], ...]:
        """Declared (non-variable) names in id order; basis of equality."""
        return tuple((s.kind, s.name) for s in self._symbols if s.kind is not Kind.VARIABLE)

    def __getitem__(self, id_: int) -> Symbol:
        return self._symbols[id_]

    def __len__(self) -> int:
        return len(self._symbols)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self._symbols)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymbolTable):
            return NotImplemented
        return self.declarations() == other.declarations()

    __hash__ = None  # type: ignore[assignment]


# -- class expressions -----------------------------------------------------


class ClassExpression:
    __slots__ = ()


@dataclass(frozen=True)
class Top(ClassExpression):
    def __str__(self) -> str:
        return TOP_NAME


@dataclass(frozen=True)
class Bottom(ClassExpression):
    def __str__(self) -> str:
        return BOTTOM_NAME


TOP = Top()
BOTTOM = Bottom()


@dataclass(frozen=True)
class Named(ClassExpression):
    cls: Symbol

    def __str__(self) -> str:
        return self.cls.name


@dataclass(frozen=True)
class Exists(ClassExpression):
    prop: Symbol
    filler: ClassExpression

    def __str__(self) -> str:
        return f"some({self.prop.name}, {self.filler})"


@dataclass(frozen=True)
class Intersection(ClassExpression):
    """Conjunction of at least two members, kept flat, deduplicated and sorted."""

    members: tuple[ClassExpression, ...]

    def __post_init__(self) -> None:
        flat: list[ClassExpression] = []
        for m in self.members:
            if isinstance(m, Intersection):
                flat.extend(m.members)
            else:
                flat.append(m)
        unique = sorted(set(flat), key=expression_key)
        if len(unique) < 2:
            raise ValueError("an intersection needs at least two distinct members")
        object.__setattr__(self, "members", tuple(unique))

    def __str__(self) -> str:
        return "and(" + ", ".join(str(m) for m in self.members) + ")"


def expression_key(ce: ClassExpression) -> tuple:
    if isinstance(ce, Top):
        return (0,)
    if isinstance(ce, Bottom):
        return (1,)
    if isinstance(ce, Named):
        return (2, ce.cls.id)
    if isinstance(ce, Exists):
        return (3, ce.prop.id, expression_key(ce.filler))
    if isinstance(ce, Intersection):
        return (4, tuple(expression_key(m) for m in ce.members))
    raise TypeError(f"not a class expression: {ce!r}")


def named(sym: Symbol) -> ClassExpression:
    if sym.kind is Kind.CLASS and sym.name == TOP_NAME:
        return TOP
    if sym.kind is Kind.CLASS and sym.name == BOTTOM_NAME:
        return BOTTOM
    return Named(sym)


def conj(*members: ClassExpression) -> ClassExpression:
    """Build a canonical conjunction; a single distinct member is returned as is."""
    flat = set()
    for m in members:
        flat.update(m.members if isinstance(m, Intersection) else (m,))
    if not flat:
        return TOP
    if len(flat) == 1:
        return next(iter(flat))
    return Intersection(tuple(flat))


def canonical(ce: ClassExpression) -> ClassExpression:
    if isinstance(ce, Named):
        return named(ce.cls)
    if isinstance(ce, Exists):
        return Exists(ce.prop, canonical(ce.filler))
    if isinstance(ce, Intersection):
        return conj(*(canonical(m) for m in ce.members))
    return ce


def expression_symbols(ce: ClassExpression) -> Iterator[Symbol]:
    if isinstance(ce, Named):
        yield ce.cls
    elif isinstance(ce, Exists):
        yield ce.prop
        yield from expression_symbols(ce.filler)
    elif isinstance(ce, Intersection):
        for m in ce.members:
            yield from expression_symbols(m)


# -- axioms ------------------------------------------------------------------


@dataclass(frozen=True)
class SubClassOf:
    sub: ClassExpression
    sup: ClassExpression
    id: str = ""


@dataclass(frozen=True)
class EquivalentClasses:
    name: Symbol
    definition: ClassExpression
    id: str = ""


@dataclass(frozen=True)
class DisjointClasses:
    a: Symbol
    b: Symbol
    id: str = ""


Axiom = Union[SubClassOf, EquivalentClasses, DisjointClasses]


# -- rules -------------------------------------------------------------------


@dataclass(frozen=True)
class Variable:
    sym: Symbol

    def __str__(self) -> str:
        return self.sym.name


@dataclass(frozen=True)
class Constant:
    sym: Symbol

    def __str__(self) -> str:
        return self.sym.name


Term = Union[Variable, Constant]


@dataclass(frozen=True)
class ClassAtom:
    cls: Symbol
    arg: Term

    def terms(self) -> tuple[Term, ...]:
        return (self.arg,)

    def __str__(self) -> str:
        return f"{self.cls.name}({self.arg})"


@dataclass(frozen=True)
class PropertyAtom:
    prop: Symbol
    subject: Term
    object: Term

    def terms(self) -> tuple[Term, ...]:
        return (self.subject, self.object)

    def __str__(self) -> str:
        return f"{self.prop.name}({self.subject}, {self.object})"


Atom = Union[ClassAtom, PropertyAtom]


def atom_variables(atoms: Iterable[Atom]) -> list[Symbol]:
    """Variables in order of first occurrence."""
    seen: dict[Symbol, None] = {}
    for atom in atoms:
        for t in atom.terms():
            if isinstance(t, Variable):
                seen.setdefault(t.sym, None)
    return list(seen)


@dataclass(frozen=True)
class Rule:
    id: str
    body: tuple[Atom, ...]
    head: tuple[Atom, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "head", tuple(self.head))
        if not self.body or not self.head:
            raise ValueError(f"rule {self.id!r} needs a nonempty body and head")

    def __str__(self) -> str:
        body = " ^ ".join(str(a) for a in self.body)
        head = " ^ ".join(str(a) for a in self.head)
        return f"{self.id}: {body} -> {head}"


def check_rule_safety(rule: Rule) -> tuple[Symbol, ...]:
    """Return the head variables that never occur in the body.

    An empty tuple means the rule is safe.
    """
    bound = set(atom_variables(rule.body))
    return tuple(v for v in atom_variables(rule.head) if v not in bound)


# -- facts -------------------------------------------------------------------


@dataclass(frozen=True)
class TypeFact:
    individual: Symbol
    cls: Symbol

    def __str__(self) -> str:
        return f"{self.cls.name}({self.individual.name})"


@dataclass(frozen=True)
class RelFact:
    prop: Symbol
    subject: Symbol
    object: Symbol

    def __str__(self) -> str:
        return f"{self.prop.name}({self.subject.name}, {self.object.name})"


Fact = Union[TypeFact, RelFact]


def fact_sort_key(fact: Fact) -> tuple:
    if isinstance(fact, TypeFact):
        return ("type", fact.individual.name, fact.cls.name)
    return ("rel", fact.prop.name, fact.subject.name, fact.object.name)


# -- knowledge base ----------------------------------------------------------


@dataclass(frozen=True)
class KnowledgeBase:
    symbols: SymbolTable
    tbox: tuple[Axiom, ...] = ()
    abox: tuple[Fact, ...] = ()
    rules: tuple[Rule, ...] = ()
    namespace: str | None = None

    def parts(self) -> dict:
        return dict(
            axioms=self.tbox,
            facts=self.abox,
            rules=self.rules,
            symbols=self.symbols,
            namespace=self.namespace,
        )

    def without_rules(self) -> "KnowledgeBase":
        return KnowledgeBase(self.symbols, self.tbox, self.abox, (), self.namespace)

    def with_facts(self, facts: Iterable[Fact]) -> "KnowledgeBase":
        return build_kb(self.tbox, tuple(self.abox) + tuple(facts), self.rules,
                        symbols=self.symbols, namespace=self.namespace)

    def cls(self, name: str) -> Symbol:
        return self.symbols.require(name, Kind.CLASS)

    def prop(self, name: str) -> Symbol:
        return self.symbols.require(name, Kind.PROPERTY)

    def individual(self, name: str) -> Symbol:
        return self.symbols.require(name, Kind.INDIVIDUAL)

    def classes(self) -> list[Symbol]:
        return self.symbols.of_kind(Kind.CLASS)

    def iri(self, sym: Symbol) -> str:
        """Full identifier of a symbol: the namespace (if any) plus its name."""
        return (self.namespace or "") + sym.name


def _check_declared(symbols: SymbolTable, sym: Symbol, kind: Kind, where: str) -> None:
    if sym.kind is not kind:
        raise UndeclaredSymbol(f"{where}: {sym.name!r} is a {sym.kind.value}, expected a {kind.value}")
    known = symbols.get(sym.name, kind)
    if known is None or known.id != sym.id:
        raise UndeclaredSymbol(f"{where}: {kind.value} {sym.name!r} is not declared")


def _check_expression(symbols: SymbolTable, ce: ClassExpression, where: str) -> None:
    if isinstance(ce, Named):
        _check_declared(symbols, ce.cls, Kind.CLASS, where)
    elif isinstance(ce, Exists):
        _check_declared(symbols, ce.prop, Kind.PROPERTY, where)
        _check_expression(symbols, ce.filler, where)
    elif isinstance(ce, Intersection):
        for m in ce.members:
            _check_expression(symbols, m, where)


def _check_term(symbols: SymbolTable, term: Term, where: str) -> None:
    if isinstance(term, Variable):
        _check_declared(symbols, term.sym, Kind.VARIABLE, where)
    else:
        _check_declared(symbols, term.sym, Kind.INDIVIDUAL, where)


def build_kb(
    axioms: Iterable[Axiom] = (),
    facts: Iterable[Fact] = (),
    rules: Iterable[Rule] = (),
    *,
    symbols: SymbolTable | None = None,
    namespace: str | None = None,
) -> KnowledgeBase:
    """Validate and canonicalize the parts of a knowledge base.

    Axioms without an id get ``ax<n>`` by position.  Raises
    :class:`UndeclaredSymbol`, :class:`DuplicateAxiomId` or
    :class:`UnsafeRule`.
    """
    table = SymbolTable() if symbols is None else symbols
    tbox: list[Axiom] = []
    seen_ids: set[str] = set()
    for n, ax in enumerate(axioms, start=1):
        ax_id = ax.id or f"ax{n}"
        if ax_id in seen_ids:
            raise DuplicateAxiomId(f"axiom id {ax_id!r} is used twice")
        seen_ids.add(ax_id)
        where = f"axiom {ax_id}"
        if isinstance(ax, SubClassOf):
            _check_expression(table, ax.sub, where)
            _check_expression(table, ax.sup, where)
            tbox.append(SubClassOf(canonical(ax.sub), canonical(ax.sup), ax_id))
        elif isinstance(ax, EquivalentClasses):
            _check_declared(table, ax.name, Kind.CLASS, where)
            _check_expression(table, ax.definition, where)
            tbox.append(EquivalentClasses(ax.name, canonical(ax.definition), ax_id))
        elif isinstance(ax, DisjointClasses):
            _check_declared(table, ax.a, Kind.CLASS, where)
            _check_declared(table, ax.b, Kind.CLASS, where)
            tbox.append(DisjointClasses(ax.a, ax.b, ax_id))
        else:
            raise TypeError(f"not an axiom: {ax!r}")

    abox: dict[Fact, None] = {}
    for f in facts:
        if isinstance(f, TypeFact):
            _check_declared(table, f.individual, Kind.INDIVIDUAL, "fact")
            _check_declared(table, f.cls, Kind.CLASS, "fact")
        elif isinstance(f, RelFact):
            _check_declared(table, f.prop, Kind.PROPERTY, "fact")
            _check_declared(table, f.subject, Kind.INDIVIDUAL, "fact")
            _check_declared(table, f.object, Kind.INDIVIDUAL, "fact")
        else:
            raise TypeError(f"not a fact: {f!r}")
        abox.setdefault(f, None)

    checked: list[Rule] = []
    rule_ids: set[str] = set()
    for rule in rules:
        if rule.id in rule_ids:
            raise DuplicateAxiomId(f"rule id {rule.id!r} is used twice")
        rule_ids.add(rule.id)
        where = f"rule {rule.id}"
        for atom in rule.body + rule.head:
            if isinstance(atom, ClassAtom):
                _check_declared(table, atom.cls, Kind.CLASS, where)
            else:
                _check_declared(table, atom.prop, Kind.PROPERTY, where)
            for t in atom.terms():
                _check_term(table, t, where)
        unbound = check_rule_safety(rule)
        if unbound:
            names = ", ".join(v.name for v in unbound)
            raise UnsafeRule(f"rule {rule.id}: head variables {names} do not occur in the body", unbound)
        checked.append(rule)

    frozen = table.copy()
    frozen.freeze()
    return KnowledgeBase(frozen, tuple(tbox), tuple(abox), tuple(checked), namespace)
