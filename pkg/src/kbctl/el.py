"""TBox services for the EL fragment: normalization and classification.

Classification saturates one completion set S(A) per class name with the
usual four completion rules plus bottom propagation, driven by a FIFO
worklist.  The result is reported over the original vocabulary only;
helper names introduced by normalization are never exposed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import UndeclaredSymbol
from .model import (
    BOTTOM_NAME,
    TOP_NAME,
    Axiom,
    Bottom,
    ClassExpression,
    DisjointClasses,
    EquivalentClasses,
    Exists,
    Intersection,
    Kind,
    Named,
    SubClassOf,
    Symbol,
    SymbolTable,
    Top,
    conj,
    expression_symbols,
)


@dataclass(frozen=True)
class Sub:
    a: Symbol
    b: Symbol
    origin: frozenset = field(default=frozenset(), compare=False)


@dataclass(frozen=True)
class SubConj:
    a1: Symbol
    a2: Symbol
    b: Symbol
    origin: frozenset = field(default=frozenset(), compare=False)


@dataclass(frozen=True)
class SubExists:
    """``a ⊑ ∃r.b``"""

    a: Symbol
    r: Symbol
    b: Symbol
    origin: frozenset = field(default=frozenset(), compare=False)


@dataclass(frozen=True)
class ExistsSub:
    """``∃r.a ⊑ b``"""

    r: Symbol
    a: Symbol
    b: Symbol
    origin: frozenset = field(default=frozenset(), compare=False)


@dataclass(frozen=True)
class SubBottom:
    """``a1 ⊓ a2 ⊑ ⊥``"""

    a1: Symbol
    a2: Symbol
    origin: frozenset = field(default=frozenset(), compare=False)


NormalAxiom = Union[Sub, SubConj, SubExists, ExistsSub, SubBottom]


@dataclass
class Normalization:
    normals: list[NormalAxiom]
    fresh_names: dict[Symbol, ClassExpression]
    top: Symbol
    bottom: Symbol


class _Normalizer:
    def __init__(self, symbols: SymbolTable | None, tbox: list[Axiom]) -> None:
        if symbols is None:
            top, bottom, next_id = _find_top_bottom(tbox)
        else:
            top, bottom, next_id = symbols.top, symbols.bottom, len(symbols)
        self.top = top
        self.bottom = bottom
        self.next_id = next_id
        self.out: dict[NormalAxiom, set[str]] = {}
        self.fresh: dict[Symbol, ClassExpression] = {}
        self._name_of: dict[object, Symbol] = {}
        self.origin = ""

    def emit(self, axiom: NormalAxiom) -> None:
        self.out.setdefault(axiom, set()).add(self.origin)

    def new_name(self, key: object, expr: ClassExpression) -> tuple[Symbol, bool]:
        sym = self._name_of.get(key)
        if sym is not None:
            return sym, False
        sym = Symbol(self.next_id, Kind.CLASS, f"_:F{len(self.fresh) + 1}", fresh=True)
        self.next_id += 1
        self._name_of[key] = sym
        self.fresh[sym] = expr
        return sym, True

    def lhs(self, ce: ClassExpression) -> Symbol:
        """A name X with ``ce ⊑ X`` entailed by the emitted axioms."""
        if isinstance(ce, Named):
            return ce.cls
        if isinstance(ce, Top):
            return self.top
        if isinstance(ce, Bottom):
            return self.bottom
        if isinstance(ce, Exists):
            filler = self.lhs(ce.filler)
            sym, _ = self.new_name(("exists", ce.prop, filler), ce)
            self.emit(ExistsSub(ce.prop, filler, sym))
            return sym
        if isinstance(ce, Intersection):
            names = [self.lhs(m) for m in ce.members]
            acc = names[0]
            for k, nxt in enumerate(names[1:], start=2):
                sym, _ = self.new_name(("and", acc, nxt), conj(*ce.members[:k]))
                self.emit(SubConj(acc, nxt, sym))
                acc = sym
            return acc
        raise TypeError(ce)

    def rhs(self, ce: ClassExpression) -> list[Symbol]:
        """Names X1..Xn with ``X1 ⊓ ... ⊓ Xn ⊑ ce`` split conjunct-wise:
        anything below every Xi is below ``ce``."""
        if isinstance(ce, Named):
            return [ce.cls]
        if isinstance(ce, Top):
            return []
        if isinstance(ce, Bottom):
            return [self.bottom]
        if isinstance(ce, Intersection):
            return [x for m in ce.members for x in self.rhs(m)]
        if isinstance(ce, Exists):
            fillers = self.rhs(ce.filler)
            filler = self._conj_name(fillers, ce.filler)
            sym, _ = self.new_name(("exists", ce.prop, filler), ce)
            self.emit(SubExists(sym, ce.prop, filler))
            return [sym]
        raise TypeError(ce)

    def _conj_name(self, names: list[Symbol], expr: ClassExpression) -> Symbol:
        """A name F with ``F ⊑ every name``."""
        if not names:
            return self.top
        if len(names) == 1:
            return names[0]
        sym, created = self.new_name(("all", tuple(names)), expr)
        if created:
            for n in names:
                self.emit(Sub(sym, n))
        return sym

    def subclass(self, sub: ClassExpression, sup: ClassExpression) -> None:
        if isinstance(sub, Bottom):
            return
        left = self.lhs(sub)
        for right in self.rhs(sup):
            if right != left:
                self.emit(Sub(left, right))

    def run(self, tbox: Iterable[Axiom]) -> Normalization:
        for ax in tbox:
            self.origin = ax.id
            if isinstance(ax, SubClassOf):
                self.subclass(ax.sub, ax.sup)
            elif isinstance(ax, EquivalentClasses):
                self.subclass(Named(ax.name), ax.definition)
                self.subclass(ax.definition, Named(ax.name))
            elif isinstance(ax, DisjointClasses):
                self.emit(SubBottom(ax.a, ax.b))
            else:
                raise TypeError(ax)
        normals = [_with_origin(ax, frozenset(o)) for ax, o in self.out.items()]
        return Normalization(normals, dict(self.fresh), self.top, self.bottom)


def _with_origin(ax: NormalAxiom, origin: frozenset) -> NormalAxiom:
    kwargs = {k: getattr(ax, k) for k in ax.__dataclass_fields__ if k != "origin"}
    return type(ax)(**kwargs, origin=origin)


def _find_top_bottom(tbox: list[Axiom]) -> tuple[Symbol, Symbol, int]:
    """Without a symbol table: Top and Bottom keep their reserved ids and
    fresh ids start past the largest id in use."""
    max_id = 1
    for ax in tbox:
        if isinstance(ax, SubClassOf):
            syms = [*expression_symbols(ax.sub), *expression_symbols(ax.sup)]
        elif isinstance(ax, EquivalentClasses):
            syms = [ax.name, *expression_symbols(ax.definition)]
        else:
            syms = [ax.a, ax.b]
        for s in syms:
            max_id = max(max_id, s.id)
    return Symbol(0, Kind.CLASS, TOP_NAME), Symbol(1, Kind.CLASS, BOTTOM_NAME), max_id + 1


def normalize(tbox: Iterable[Axiom], symbols: SymbolTable | None = None) -> Normalization:
    """Rewrite axioms into the five normal forms.

    Fresh names get ids past the end of ``symbols`` so they can never clash
    with declared symbols; pass the knowledge base's table whenever the
    result will be combined with facts.
    """
    tbox = list(tbox)
    return _Normalizer(symbols, tbox).run(tbox)


# -- classification ----------------------------------------------------------


@dataclass(frozen=True)
class TaxonomyResult:
    classes: tuple[Symbol, ...]
    supers: dict  # Symbol -> frozenset[Symbol], original vocabulary, reflexive
    partitions: tuple[frozenset, ...]
    unsatisfiable: frozenset
    top: Symbol
    bottom: Symbol
    completion: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def subsumptions(self) -> frozenset:
        return frozenset((a, b) for a, sups in self.supers.items() for b in sups)

    def direct_edges(self) -> list[tuple[Symbol, Symbol]]:
        """Transitively reduced ``(sub, super)`` pairs, Bottom omitted.

        Unsatisfiable classes are reported as subclasses of Bottom only.
        """
        by_class = {}
        for part in self.partitions:
            for c in part:
                by_class[c] = part
        sat_parts = [p for p in self.partitions if self.bottom not in p]
        edges: list[tuple[Symbol, Symbol]] = []
        for part in sat_parts:
            rep = min(part, key=lambda s: s.id)
            above = {by_class[s] for s in self.supers[rep]} - {part}
            direct = [q for q in above
                      if not any(q != r and q in {by_class[s] for s in self.supers[min(r, key=lambda s: s.id)]}
                                 for r in above if r != q)]
            for q in direct:
                for a in part:
                    for b in q:
                        edges.append((a, b))
            for a in part:
                for b in part:
                    if a != b:
                        edges.append((a, b))
        for c in self.unsatisfiable:
            if c != self.bottom:
                edges.append((c, self.bottom))
        return sorted(set(edges), key=lambda e: (e[0].name, e[1].name))


def _index(normals: Iterable[NormalAxiom]):
    sub_idx: dict[Symbol, list[Symbol]] = {}
    conj_idx: dict[Symbol, list[tuple[Symbol, Symbol]]] = {}
    subex_idx: dict[Symbol, list[tuple[Symbol, Symbol]]] = {}
    exsub_idx: dict[tuple[Symbol, Symbol], list[Symbol]] = {}
    names: dict[Symbol, None] = {}
    for ax in normals:
        if isinstance(ax, Sub):
            sub_idx.setdefault(ax.a, []).append(ax.b)
            names.update(dict.fromkeys((ax.a, ax.b)))
        elif isinstance(ax, (SubConj, SubBottom)):
            b = ax.b if isinstance(ax, SubConj) else None
            conj_idx.setdefault(ax.a1, []).append((ax.a2, b))
            if ax.a1 != ax.a2:
                conj_idx.setdefault(ax.a2, []).append((ax.a1, b))
            names.update(dict.fromkeys((ax.a1, ax.a2)))
            if b is not None:
                names[b] = None
        elif isinstance(ax, SubExists):
            subex_idx.setdefault(ax.a, []).append((ax.r, ax.b))
            names.update(dict.fromkeys((ax.a, ax.b)))
        elif isinstance(ax, ExistsSub):
            exsub_idx.setdefault((ax.r, ax.a), []).append(ax.b)
            names.update(dict.fromkeys((ax.a, ax.b)))
        else:
            raise TypeError(ax)
    return sub_idx, conj_idx, subex_idx, exsub_idx, list(names)


def saturate_tbox(normals: Iterable[NormalAxiom], classes: Iterable[Symbol],
                  top: Symbol, bottom: Symbol) -> dict[Symbol, set[Symbol]]:
    """Completion sets S(A) for every class, including fresh names."""
    normals = list(normals)
    sub_idx, conj_idx, subex_idx, exsub_idx, mentioned = _index(normals)
    order: dict[Symbol, None] = dict.fromkeys(classes)
    order.update(dict.fromkeys(mentioned))
    order.setdefault(top, None)
    order.setdefault(bottom, None)

    S: dict[Symbol, set[Symbol]] = {a: set() for a in order}
    preds: dict[Symbol, list[tuple[Symbol, Symbol]]] = {a: [] for a in order}
    edges: set[tuple[Symbol, Symbol, Symbol]] = set()
    queue: deque = deque()
    for a in order:
        queue.append((a, a))
        queue.append((a, top))

    def add_edge(a: Symbol, r: Symbol, b: Symbol) -> None:
        if (a, r, b) in edges:
            return
        edges.add((a, r, b))
        preds[b].append((a, r))
        for c in list(S[b]):
            for d in exsub_idx.get((r, c), ()):
                queue.append((a, d))
        if bottom in S[b]:
            queue.append((a, bottom))

    while queue:
        a, x = queue.popleft()
        sa = S[a]
        if x in sa:
            continue
        sa.add(x)
        for c in sub_idx.get(x, ()):
            queue.append((a, c))
        for other, c in conj_idx.get(x, ()):
            if other in sa:
                queue.append((a, bottom if c is None else c))
        for r, b in subex_idx.get(x, ()):
            add_edge(a, r, b)
        for pa, r in preds[a]:
            for d in exsub_idx.get((r, x), ()):
                queue.append((pa, d))
            if x == bottom:
                queue.append((pa, bottom))
    return S


def classify(normals: Iterable[NormalAxiom] | Normalization,
             classes: Iterable[Symbol] = (),
             symbols: SymbolTable | None = None) -> TaxonomyResult:
    """Compute the subsumption preorder over the original class names.

    ``normals`` is either a :class:`Normalization` or a list of normal
    axioms.  ``classes`` (or all classes of ``symbols``) may list declared
    classes that no axiom mentions.
    """
    if isinstance(normals, Normalization):
        top, bottom = normals.top, normals.bottom
        normals = normals.normals
    elif symbols is not None:
        top, bottom = symbols.top, symbols.bottom
    else:
        top = Symbol(0, Kind.CLASS, TOP_NAME)
        bottom = Symbol(1, Kind.CLASS, BOTTOM_NAME)
    declared = list(classes)
    if symbols is not None:
        declared = symbols.of_kind(Kind.CLASS) + declared
    normals = list(normals)
    S = saturate_tbox(normals, declared, top, bottom)

    visible = [c for c in dict.fromkeys(list(S)) if not c.fresh]
    visible_set = set(visible)
    unsat = frozenset(c for c in visible if bottom in S[c])
    supers = {}
    for c in visible:
        if c in unsat or c == bottom:
            supers[c] = frozenset(visible)
        else:
            supers[c] = frozenset(x for x in S[c] if x in visible_set)
    seen: set[Symbol] = set()
    parts = []
    for c in sorted(visible, key=lambda s: s.id):
        if c in seen:
            continue
        part = frozenset(d for d in visible if d in supers[c] and c in supers[d])
        seen |= part
        parts.append(part)
    return TaxonomyResult(tuple(sorted(visible, key=lambda s: s.id)), supers, tuple(parts),
                          unsat, top, bottom, S)


def _check(taxonomy: TaxonomyResult, c: Symbol) -> None:
    if c not in taxonomy.supers:
        raise UndeclaredSymbol(f"class {c.name!r} is not declared")


def is_subsumed(a: Symbol, b: Symbol, taxonomy: TaxonomyResult) -> bool:
    _check(taxonomy, a)
    _check(taxonomy, b)
    return b in taxonomy.supers[a]


def satisfiable(a: Symbol, taxonomy: TaxonomyResult) -> bool:
    _check(taxonomy, a)
    return a not in taxonomy.unsatisfiable


def classify_kb(kb) -> TaxonomyResult:
    return classify(normalize(kb.tbox, kb.symbols), symbols=kb.symbols)


def render_taxonomy_tsv(taxonomy: TaxonomyResult) -> str:
    return "".join(f"{a.name}\t{b.name}\n" for a, b in taxonomy.direct_edges())


def render_taxonomy_tree(taxonomy: TaxonomyResult) -> str:
    """Indented hierarchy rooted at Top; unsatisfiable classes under Bottom."""
    children: dict[Symbol, list[Symbol]] = {}
    for a, b in taxonomy.direct_edges():
        if b == taxonomy.bottom:
            continue
        children.setdefault(b, []).append(a)
    lines: list[str] = []

    def walk(node: Symbol, depth: int, path: frozenset) -> None:
        lines.append("  " * depth + node.name)
        for child in sorted(children.get(node, ()), key=lambda s: s.name):
            if child not in path:
                walk(child, depth + 1, path | {child})

    top_part = next(p for p in taxonomy.partitions if taxonomy.top in p)
    walk(taxonomy.top, 0, top_part)
    unsat = sorted((c for c in taxonomy.unsatisfiable if c != taxonomy.bottom), key=lambda s: s.name)
    if unsat:
        lines.append(taxonomy.bottom.name)
        lines.extend("  " + c.name for c in unsat)
    return "".join(line + "\n" for line in lines)
