"""Conjunctive query evaluation over a materialization.

Queries never trigger reasoning of their own: they are matched against the
saturated fact set, with set semantics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .engine import Materialization, _join
from .errors import UnknownSymbol
from .model import Atom, ClassAtom, Kind, Symbol, Variable
from .syntax import Query

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BindingTable:
    header: tuple[str, ...]
    rows: frozenset  # of tuples of Symbol, one per header variable
    prefixes: dict
    namespace: str | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def render_row(self, row: tuple) -> tuple[str, ...]:
        return tuple(compact(self.iri(s), self.prefixes) for s in row)

    def iri(self, sym: Symbol) -> str:
        return (self.namespace or "") + sym.name

    def sorted_rows(self) -> list[tuple[str, ...]]:
        return sorted(self.render_row(r) for r in self.rows)

    def names(self) -> set[tuple[str, ...]]:
        """Rows as plain local names, handy for comparisons."""
        return {tuple(s.name for s in r) for r in self.rows}


def compact(iri: str, prefixes: dict) -> str:
    """Shortest ``label:local`` form of ``iri``; the longest matching expansion wins."""
    best = None
    for label, expansion in prefixes.items():
        if expansion and iri.startswith(expansion) and len(iri) > len(expansion):
            cand = (len(expansion), label)
            if best is None or cand[0] > best[0] or (cand[0] == best[0] and label < best[1]):
                best = cand
    if best is None:
        return iri
    return f"{best[1]}:{iri[best[0]:]}"


def _local(name: str, namespace: str | None) -> str:
    if namespace and name.startswith(namespace) and len(name) > len(namespace):
        return name[len(namespace):]
    return name


class _Resolver:
    def __init__(self, m: Materialization) -> None:
        self.m = m
        self.namespace = m.namespace
        self._by_name = None if m.symbols is not None else {
            (s.kind, s.name): s for s in m._sym.values()}

    def __call__(self, sym: Symbol, kind: Kind) -> Symbol:
        name = _local(sym.name, self.namespace)
        if self._by_name is None:
            found = self.m.symbols.get(name, kind)
        else:
            found = self._by_name.get((kind, name))
        if found is None:
            raise UnknownSymbol(f"{kind.value} {sym.name!r} is not declared in the knowledge base")
        return found


def _encode(patterns: Sequence[Atom], resolve: _Resolver, slots: dict) -> list[tuple]:
    def term(t) -> int:
        if isinstance(t, Variable):
            return slots.setdefault(t.sym, -(len(slots) + 1))
        return resolve(t.sym, Kind.INDIVIDUAL).id

    out = []
    for a in patterns:
        if isinstance(a, ClassAtom):
            out.append((resolve(a.cls, Kind.CLASS).id, term(a.arg)))
        else:
            out.append((resolve(a.prop, Kind.PROPERTY).id, term(a.subject), term(a.object)))
    return out


def _cardinality(atom: tuple, m: Materialization) -> int:
    idx = m.index
    if len(atom) == 2:
        c, a = atom
        inds = idx.types.get(c, ())
        return (1 if a in inds else 0) if a >= 0 else len(inds)
    p, s, o = atom
    if s >= 0 and o >= 0:
        return 1 if o in idx.sp.get(p, {}).get(s, ()) else 0
    if s >= 0:
        return len(idx.sp.get(p, {}).get(s, ()))
    if o >= 0:
        return len(idx.op.get(p, {}).get(o, ()))
    return idx.npairs.get(p, 0)


def _greedy(encoded: list[tuple], m: Materialization) -> tuple[list[int], bool]:
    """Greedy order plus a flag telling whether a cartesian step was needed.

    A pattern is connected when it shares a bound variable or a constant
    with the patterns already placed.
    """
    sizes = [_cardinality(a, m) for a in encoded]
    if not encoded:
        return [], False
    remaining = list(range(len(encoded)))
    first = min(remaining, key=lambda i: (sizes[i], i))
    order = [first]
    remaining.remove(first)
    anchors = set(encoded[first][1:])
    cartesian = False
    while remaining:
        connected = [i for i in remaining if anchors.intersection(encoded[i][1:])]
        if connected:
            nxt = min(connected, key=lambda i: (-sum(1 for t in set(encoded[i][1:]) if t < 0 and t in anchors),
                                                sizes[i], i))
        else:
            nxt = min(remaining, key=lambda i: (sizes[i], i))
            cartesian = True
        order.append(nxt)
        remaining.remove(nxt)
        anchors.update(encoded[nxt][1:])
    return order, cartesian


def plan(query: Query, m: Materialization) -> list[Atom]:
    """Patterns in evaluation order: cheapest first, then connected and most bound."""
    slots: dict = {}
    encoded = _encode(query.patterns, _Resolver(m), slots)
    order, _ = _greedy(encoded, m)
    return [query.patterns[i] for i in order]


def evaluate(query: Query, m: Materialization, *, order: Sequence[Atom] | None = None) -> BindingTable:
    """Distinct bindings of the projected variables satisfying every pattern.

    ``order`` forces a pattern order (it must be a permutation of the
    query's patterns); by default the greedy planner decides.
    """
    if not m.consistent:
        log.warning("querying an inconsistent knowledge base; answers may be meaningless")
    header = query.variables
    resolve = _Resolver(m)
    slots: dict = {}
    if order is not None:
        if sorted(map(str, order)) != sorted(map(str, query.patterns)):
            raise ValueError("order must be a permutation of the query patterns")
        encoded = _encode(order, resolve, slots)
        steps_order = list(range(len(encoded)))
    else:
        encoded = _encode(query.patterns, resolve, slots)
        steps_order, cartesian = _greedy(encoded, m)
        if cartesian:
            log.warning("query patterns are not connected; computing a cartesian product")
    projected = [slots[v] for v in query.projected]
    store = m.index
    steps = [(encoded[i], store, None) for i in steps_order]
    found: set[tuple[int, ...]] = set()

    def emit(b: list) -> None:
        found.add(tuple(b[-s - 1] for s in projected))

    _join(steps, 0, [None] * len(slots), emit)
    rows = frozenset(tuple(m.symbol(i) for i in row) for row in found)
    return BindingTable(header, rows, dict(query.prefixes), m.namespace)


def render_tsv(table: BindingTable) -> str:
    lines = ["\t".join("?" + h for h in table.header)]
    lines.extend("\t".join(r) for r in table.sorted_rows())
    return "".join(line + "\n" for line in lines)

