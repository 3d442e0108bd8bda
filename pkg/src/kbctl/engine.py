"""Ground materialization of a knowledge base.

Normalized TBox axioms and user rules are compiled into one Horn program
which is run to its least fixpoint over the ABox with semi-naive
evaluation.  Each derived fact keeps up to ``cap`` derivation records
(rule, binding, supports, round), enough to rebuild and replay proof trees.

Internally facts are int tuples: ``(cls, ind)`` for class membership and
``(prop, subj, obj)`` for property assertions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator, Sequence

from .el import (
    ExistsSub,
    Normalization,
    NormalAxiom,
    Sub,
    SubBottom,
    SubConj,
    SubExists,
    TaxonomyResult,
    classify,
    normalize,
)
from .errors import NotEntailed
from .model import (
    BOTTOM_NAME,
    TOP_NAME,
    Atom,
    ClassAtom,
    Constant,
    Fact,
    Kind,
    KnowledgeBase,
    PropertyAtom,
    RelFact,
    Rule,
    Symbol,
    SymbolTable,
    TypeFact,
    Variable,
    atom_variables,
    fact_sort_key,
)

log = logging.getLogger(__name__)

DEFAULT_CAP = 8
ONTOLOGY = "ontology"
USER = "user"


@dataclass(frozen=True)
class CompiledRule:
    id: str
    body: tuple[Atom, ...]
    head: Atom
    kind: str
    origin: str

    def __str__(self) -> str:
        return " ^ ".join(str(a) for a in self.body) + " => " + str(self.head)

    @property
    def involves_fresh(self) -> bool:
        return any(isinstance(a, ClassAtom) and a.cls.fresh for a in (*self.body, self.head))


def _var(name: str) -> Variable:
    return Variable(Symbol(-1, Kind.VARIABLE, name))


_X, _Y = _var("?x"), _var("?y")


def _normal_to_rule(ax: NormalAxiom, bottom: Symbol) -> tuple[tuple[Atom, ...], Atom] | None:
    if isinstance(ax, Sub):
        return (ClassAtom(ax.a, _X),), ClassAtom(ax.b, _X)
    if isinstance(ax, SubConj):
        body = (ClassAtom(ax.a1, _X),) if ax.a1 == ax.a2 else (ClassAtom(ax.a1, _X), ClassAtom(ax.a2, _X))
        return body, ClassAtom(ax.b, _X)
    if isinstance(ax, ExistsSub):
        return (PropertyAtom(ax.r, _X, _Y), ClassAtom(ax.a, _Y)), ClassAtom(ax.b, _X)
    if isinstance(ax, SubBottom):
        body = (ClassAtom(ax.a1, _X),) if ax.a1 == ax.a2 else (ClassAtom(ax.a1, _X), ClassAtom(ax.a2, _X))
        return body, ClassAtom(bottom, _X)
    if isinstance(ax, SubExists):
        return None  # no anonymous individuals in the ABox
    raise TypeError(ax)


def compile_program(
    normals: Normalization | Sequence[NormalAxiom],
    rules: Iterable[Rule] = (),
    taxonomy: TaxonomyResult | None = None,
) -> list[CompiledRule]:
    """Translate normal axioms and user rules into single-head Horn rules.

    Subsumptions the classifier entails beyond chains of told ``Sub``
    axioms (typically via existentials) are added as extra ``tbox:A<B``
    rules so that realization agrees with classification.
    """
    if isinstance(normals, Normalization):
        norm = normals
    else:
        norm = Normalization(list(normals), {}, Symbol(0, Kind.CLASS, TOP_NAME),
                             Symbol(1, Kind.CLASS, BOTTOM_NAME))
    program: list[CompiledRule] = []
    used: dict[str, int] = {}

    def unique(base: str) -> str:
        n = used.get(base, 0) + 1
        used[base] = n
        return base if n == 1 else f"{base}/{n}"

    told: dict[Symbol, list[Symbol]] = {}
    for ax in norm.normals:
        translated = _normal_to_rule(ax, norm.bottom)
        if translated is None:
            continue
        body, head = translated
        if head.cls == norm.top:
            continue
        origin = "+".join(sorted(ax.origin)) or "tbox"
        program.append(CompiledRule(unique(origin), body, head, ONTOLOGY, origin))
        if isinstance(ax, Sub):
            told.setdefault(ax.a, []).append(ax.b)

    has_existentials = any(isinstance(ax, (SubExists, ExistsSub)) for ax in norm.normals)
    if norm.normals and has_existentials:
        if taxonomy is None:
            taxonomy = classify(norm)
        for a, sups in taxonomy.completion.items():
            reach = _reachable(a, told)
            for b in sorted(sups, key=lambda s: s.id):
                if b == a or b == norm.top or b in reach:
                    continue
                rid = unique(f"tbox:{a.name}<{b.name}")
                program.append(CompiledRule(rid, (ClassAtom(a, _X),), ClassAtom(b, _X), ONTOLOGY, "tbox"))

    for rule in rules:
        for k, head in enumerate(rule.head, start=1):
            rid = rule.id if len(rule.head) == 1 else f"{rule.id}/{k}"
            program.append(CompiledRule(unique(rid), rule.body, head, USER, rule.id))
    return program


def _reachable(a: Symbol, edges: dict[Symbol, list[Symbol]]) -> set[Symbol]:
    seen = {a}
    stack = [a]
    while stack:
        for b in edges.get(stack.pop(), ()):
            if b not in seen:
                seen.add(b)
                stack.append(b)
    return seen


# -- internal encoding -------------------------------------------------------


class _Encoded:
    """A compiled rule over int ids; variables are negative slots."""

    __slots__ = ("rule", "body", "head", "nvars", "varnames")

    def __init__(self, rule: CompiledRule) -> None:
        self.rule = rule
        names = atom_variables((*rule.body, rule.head))
        slots = {v: -(i + 1) for i, v in enumerate(names)}
        self.varnames = [v.name for v in names]
        self.nvars = len(names)

        def term(t) -> int:
            return slots[t.sym] if isinstance(t, Variable) else t.sym.id

        def enc(a: Atom) -> tuple:
            if isinstance(a, ClassAtom):
                return (a.cls.id, term(a.arg))
            return (a.prop.id, term(a.subject), term(a.object))

        self.body = [enc(a) for a in rule.body]
        self.head = enc(rule.head)


def _ground(atom: tuple, b: list) -> tuple:
    if len(atom) == 2:
        c, a = atom
        return (c, a if a >= 0 else b[-a - 1])
    p, s, o = atom
    return (p, s if s >= 0 else b[-s - 1], o if o >= 0 else b[-o - 1])


class _Store:
    __slots__ = ("types", "sp", "op", "npairs")

    def __init__(self, keys: Iterable[tuple] = ()) -> None:
        self.types: dict[int, set[int]] = {}
        self.sp: dict[int, dict[int, set[int]]] = {}
        self.op: dict[int, dict[int, set[int]]] = {}
        self.npairs: dict[int, int] = {}
        for k in keys:
            self.add(k)

    def add(self, key: tuple) -> None:
        if len(key) == 2:
            self.types.setdefault(key[0], set()).add(key[1])
        else:
            p, s, o = key
            objs = self.sp.setdefault(p, {}).setdefault(s, set())
            if o not in objs:
                objs.add(o)
                self.op.setdefault(p, {}).setdefault(o, set()).add(s)
                self.npairs[p] = self.npairs.get(p, 0) + 1

    def size(self, atom: tuple) -> int:
        if len(atom) == 2:
            return len(self.types.get(atom[0], ()))
        return self.npairs.get(atom[0], 0)

    def has_pred(self, atom: tuple) -> bool:
        return self.size(atom) > 0


def _join(steps: list, k: int, b: list, emit) -> None:
    if k == len(steps):
        emit(b)
        return
    atom, store, skip = steps[k]
    if len(atom) == 2:
        c, a = atom
        inds = store.types.get(c)
        if not inds:
            return
        v = a if a >= 0 else b[-a - 1]
        if v is not None:
            if v in inds and (skip is None or (c, v) not in skip):
                _join(steps, k + 1, b, emit)
            return
        slot = -a - 1
        for ind in inds:
            if skip is not None and (c, ind) in skip:
                continue
            b[slot] = ind
            _join(steps, k + 1, b, emit)
        b[slot] = None
        return
    p, s, o = atom
    sv = s if s >= 0 else b[-s - 1]
    ov = o if o >= 0 else b[-o - 1]
    if sv is not None:
        objs = store.sp.get(p, {}).get(sv)
        if not objs:
            return
        if ov is not None:
            if ov in objs and (skip is None or (p, sv, ov) not in skip):
                _join(steps, k + 1, b, emit)
            return
        slot = -o - 1
        for obj in objs:
            if skip is not None and (p, sv, obj) in skip:
                continue
            b[slot] = obj
            _join(steps, k + 1, b, emit)
        b[slot] = None
        return
    if ov is not None:
        subs = store.op.get(p, {}).get(ov)
        if not subs:
            return
        slot = -s - 1
        for subj in subs:
            if skip is not None and (p, subj, ov) in skip:
                continue
            b[slot] = subj
            _join(steps, k + 1, b, emit)
        b[slot] = None
        return
    sslot, oslot = -s - 1, -o - 1
    for subj, objs in store.sp.get(p, {}).items():
        b[sslot] = subj
        if oslot == sslot:
            if subj in objs and (skip is None or (p, subj, subj) not in skip):
                _join(steps, k + 1, b, emit)
            continue
        for obj in objs:
            if skip is not None and (p, subj, obj) in skip:
                continue
            b[oslot] = obj
            _join(steps, k + 1, b, emit)
        b[oslot] = None
    b[sslot] = None


def _atom_vars(atom: tuple) -> set[int]:
    return {t for t in atom[1:] if t < 0}


def _plan(body: list, first: int, sizes: list[int]) -> list[int]:
    """Delta atom first, then greedily atoms touching bound variables, smallest first."""
    order = [first]
    bound = _atom_vars(body[first])
    rest = [i for i in range(len(body)) if i != first]
    while rest:
        def key(i: int):
            terms = body[i][1:]
            connected = any(t >= 0 or t in bound for t in terms)
            return (not connected, sizes[i], i)

        nxt = min(rest, key=key)
        rest.remove(nxt)
        order.append(nxt)
        bound |= _atom_vars(body[nxt])
    return order


# -- materialization ---------------------------------------------------------


@dataclass(frozen=True)
class DerivedFact:
    """One derivation of ``fact``: rule ``via`` applied to ``supports``.

    Asserted facts have ``via=None`` and depth 0.
    """

    fact: Fact
    supports: tuple[Fact, ...]
    via: str | None
    depth: int
    binding: tuple[tuple[str, Symbol], ...] = ()


@dataclass(frozen=True)
class Clash:
    individual: Symbol
    axiom: str
    facts: tuple[Fact, ...]


class Materialization:
    """Saturated fact set with provenance.  Treat as read-only."""

    def __init__(self, program: list[CompiledRule], symbols: dict[int, Symbol],
                 depth: dict[tuple, int], records: dict[tuple, list], asserted: set[tuple],
                 top_id: int | None, bottom_id: int | None,
                 table: SymbolTable | None = None, namespace: str | None = None) -> None:
        self.symbols = table
        self.namespace = namespace
        self.program = list(program)
        self.rules = {r.id: r for r in program}
        self._enc = [_Encoded(r) for r in program]
        self._sym = symbols
        self._depth = depth
        self._records = records
        self._asserted = asserted
        self._top = top_id
        self._bottom = bottom_id
        self.clashes = self._find_clashes()
        self.consistent = not self.clashes

    # conversions
    def _fact(self, key: tuple) -> Fact:
        if len(key) == 2:
            return TypeFact(self._sym[key[1]], self._sym[key[0]])
        return RelFact(self._sym[key[0]], self._sym[key[1]], self._sym[key[2]])

    @staticmethod
    def _key(fact: Fact) -> tuple:
        if isinstance(fact, TypeFact):
            return (fact.cls.id, fact.individual.id)
        return (fact.prop.id, fact.subject.id, fact.object.id)

    def _hidden(self, key: tuple) -> bool:
        if len(key) == 3 or key in self._asserted:
            return False
        c = key[0]
        return c == self._top or c == self._bottom or self._sym[c].fresh

    def hidden(self, fact: Fact) -> bool:
        return self._hidden(self._key(fact))

    # fact set
    @cached_property
    def visible_keys(self) -> list[tuple]:
        return [k for k in self._depth if not self._hidden(k)]

    @cached_property
    def facts(self) -> frozenset:
        return frozenset(self._fact(k) for k in self.visible_keys)

    @cached_property
    def index(self) -> _Store:
        return _Store(self.visible_keys)

    @property
    def all_facts(self) -> frozenset:
        """Every fact including helper-class memberships."""
        return frozenset(self._fact(k) for k in self._depth)

    def __contains__(self, fact: Fact) -> bool:
        key = self._key(fact)
        return key in self._depth and self._sym.get(key[0]) is not None and not self._hidden(key)

    def __len__(self) -> int:
        return len(self.visible_keys)

    def sorted_facts(self) -> list[Fact]:
        return sorted(self.facts, key=fact_sort_key)

    def symbol(self, id_: int) -> Symbol:
        return self._sym[id_]

    def depth(self, fact: Fact) -> int:
        key = self._key(fact)
        if key not in self._depth:
            raise NotEntailed(f"{fact} is not entailed")
        return self._depth[key]

    def is_asserted(self, fact: Fact) -> bool:
        key = self._key(fact)
        return key in self._asserted or (len(key) == 2 and key[0] == self._top and key in self._depth)

    def instances(self, cls: Symbol) -> frozenset:
        return frozenset(self._sym[i] for i in self.index.types.get(cls.id, ()))

    def derivations(self, fact: Fact) -> list[DerivedFact]:
        key = self._key(fact)
        if key not in self._depth:
            raise NotEntailed(f"{fact} is not entailed")
        return [self._record(key, r) for r in self._records.get(key, ())]

    def _record(self, key: tuple, rec: tuple) -> DerivedFact:
        rule_index, binding, supports, depth = rec
        if rule_index is None:
            return DerivedFact(self._fact(key), (), None, 0)
        enc = self._enc[rule_index]
        bind = tuple((enc.varnames[i], self._sym[v]) for i, v in enumerate(binding))
        return DerivedFact(self._fact(key), tuple(self._fact(s) for s in supports),
                           enc.rule.id, depth, bind)

    def _find_clashes(self) -> list[Clash]:
        out = []
        if self._bottom is None:
            return out
        for key, recs in self._records.items():
            if len(key) != 2 or key[0] != self._bottom:
                continue
            for rec in recs:
                if rec[0] is None:
                    out.append(Clash(self._sym[key[1]], "asserted", ()))
                    continue
                rule = self._enc[rec[0]].rule
                facts = tuple(self._fact(s) for s in rec[2])
                out.append(Clash(self._sym[key[1]], rule.origin, facts))
        out.sort(key=lambda c: (c.individual.name, c.axiom, [fact_sort_key(f) for f in c.facts]))
        return out


def _symbols_of(program: Sequence[CompiledRule], abox: Iterable[Fact],
                table: SymbolTable | None = None) -> dict[int, Symbol]:
    syms: dict[int, Symbol] = {}
    if table is not None:
        # declared individuals exist even when no fact mentions them
        for s in table.of_kind(Kind.INDIVIDUAL):
            syms[s.id] = s
    for rule in program:
        for a in (*rule.body, rule.head):
            if isinstance(a, ClassAtom):
                syms[a.cls.id] = a.cls
            else:
                syms[a.prop.id] = a.prop
            for t in a.terms():
                if isinstance(t, Constant):
                    syms[t.sym.id] = t.sym
    for f in abox:
        if isinstance(f, TypeFact):
            syms[f.cls.id] = f.cls
            syms[f.individual.id] = f.individual
        else:
            syms[f.prop.id] = f.prop
            syms[f.subject.id] = f.subject
            syms[f.object.id] = f.object
    return syms


def _special_ids(syms: dict[int, Symbol], top: Symbol | None, bottom: Symbol | None):
    top_id = top.id if top is not None else None
    bottom_id = bottom.id if bottom is not None else None
    for s in syms.values():
        if s.kind is Kind.CLASS and s.name == TOP_NAME and top_id is None:
            top_id = s.id
        if s.kind is Kind.CLASS and s.name == BOTTOM_NAME and bottom_id is None:
            bottom_id = s.id
    return top_id, bottom_id


def _seed(program: Sequence[CompiledRule], abox: Sequence[Fact], syms: dict[int, Symbol],
          top: Symbol | None):
    """Asserted keys in order, plus Top membership for every individual."""
    keys = list(dict.fromkeys(Materialization._key(f) for f in abox))
    asserted = set(keys)
    if top is None:
        top = Symbol(0, Kind.CLASS, TOP_NAME)
    syms.setdefault(top.id, top)
    individuals = [s for s in syms.values() if s.kind is Kind.INDIVIDUAL]
    seeds = [(top.id, s.id) for s in sorted(individuals, key=lambda s: s.id)]
    seeds = [k for k in seeds if k not in asserted]
    return keys, asserted, seeds, top


def saturate(program: Sequence[CompiledRule], abox: Iterable[Fact], *,
             cap: int = DEFAULT_CAP, top: Symbol | None = None,
             bottom: Symbol | None = None, symbols: SymbolTable | None = None,
             namespace: str | None = None) -> Materialization:
    """Least fixpoint of ``program`` over ``abox`` by semi-naive evaluation.

    Round ``r`` only joins instantiations that use at least one fact first
    derived in round ``r - 1``; the round number becomes the fact's depth.
    """
    program = list(program)
    abox = list(abox)
    syms = _symbols_of(program, abox, symbols)
    keys, asserted, seeds, top = _seed(program, abox, syms, top)
    top_id, bottom_id = _special_ids(syms, top, bottom)
    encoded = [_Encoded(r) for r in program]

    depth: dict[tuple, int] = {}
    records: dict[tuple, list] = {}
    for k in keys:
        depth[k] = 0
        records[k] = [(None, (), (), 0)]
    for k in seeds:
        depth[k] = 0
        records[k] = [(None, (), (), 0)]
    full = _Store(depth)
    delta = list(depth)
    rnd = 0
    while delta:
        rnd += 1
        dstore = _Store(delta)
        dset = set(delta)
        new: list[tuple] = []
        for ri, enc in enumerate(encoded):
            body = enc.body
            sizes = [full.size(a) for a in body]
            for i, atom in enumerate(body):
                if not dstore.has_pred(atom):
                    continue
                order = _plan(body, i, sizes)
                steps = [(body[j], dstore if j == i else full, dset if j < i else None) for j in order]
                head = enc.head

                def emit(b, enc=enc, ri=ri, head=head):
                    key = _ground(head, b)
                    recs = records.get(key)
                    if recs is None:
                        depth[key] = rnd
                        new.append(key)
                        records[key] = [(ri, tuple(b), tuple(_ground(a, b) for a in enc.body), rnd)]
                    elif len(recs) < cap:
                        recs.append((ri, tuple(b), tuple(_ground(a, b) for a in enc.body), rnd))

                _join(steps, 0, [None] * enc.nvars, emit)
        for k in new:
            full.add(k)
        delta = new
    log.debug("saturated in %d rounds, %d facts", rnd, len(depth))
    return Materialization(program, syms, depth, records, asserted, top_id, bottom_id,
                           symbols, namespace)


def naive_saturate(program: Sequence[CompiledRule], abox: Iterable[Fact], *,
                   top: Symbol | None = None, bottom: Symbol | None = None,
                   symbols: SymbolTable | None = None,
                   namespace: str | None = None) -> Materialization:
    """Reference fixpoint: every round re-joins every rule against all facts.

    No indexes, no deltas, body atoms matched in written order.  Used as an
    oracle for :func:`saturate`.
    """
    program = list(program)
    abox = list(abox)
    syms = _symbols_of(program, abox, symbols)
    keys, asserted, seeds, top = _seed(program, abox, syms, top)
    top_id, bottom_id = _special_ids(syms, top, bottom)
    encoded = [_Encoded(r) for r in program]
    depth = {k: 0 for k in keys + seeds}
    records = {k: [(None, (), (), 0)] for k in depth}

    def matches(atom: tuple, fact: tuple, b: list) -> list | None:
        if len(atom) != len(fact) or atom[0] != fact[0]:
            return None
        out = list(b)
        for t, v in zip(atom[1:], fact[1:]):
            if t >= 0:
                if t != v:
                    return None
            elif out[-t - 1] is None:
                out[-t - 1] = v
            elif out[-t - 1] != v:
                return None
        return out

    def bindings(body: list, facts: list, b: list) -> Iterator[list]:
        if not body:
            yield b
            return
        for f in facts:
            nb = matches(body[0], f, b)
            if nb is not None:
                yield from bindings(body[1:], facts, nb)

    rnd = 0
    while True:
        rnd += 1
        facts = list(depth)
        found: dict[tuple, tuple] = {}
        for ri, enc in enumerate(encoded):
            for b in bindings(enc.body, facts, [None] * enc.nvars):
                key = _ground(enc.head, b)
                if key not in depth and key not in found:
                    found[key] = (ri, tuple(b), tuple(_ground(a, b) for a in enc.body), rnd)
        if not found:
            break
        for key, rec in found.items():
            depth[key] = rnd
            records[key] = [rec]
    return Materialization(program, syms, depth, records, asserted, top_id, bottom_id,
                           symbols, namespace)


def materialize(kb: KnowledgeBase, with_rules: bool = True, *, cap: int = DEFAULT_CAP,
                naive: bool = False) -> Materialization:
    """Normalize, classify, compile and saturate ``kb``."""
    norm = normalize(kb.tbox, kb.symbols)
    taxonomy = classify(norm, symbols=kb.symbols)
    program = compile_program(norm, kb.rules if with_rules else (), taxonomy)
    common = dict(top=kb.symbols.top, bottom=kb.symbols.bottom, symbols=kb.symbols,
                  namespace=kb.namespace)
    if naive:
        return naive_saturate(program, kb.abox, **common)
    return saturate(program, kb.abox, cap=cap, **common)


# -- justifications ----------------------------------------------------------


@dataclass(frozen=True)
class ProofTree:
    fact: Fact
    rule: str | None
    binding: tuple[tuple[str, Symbol], ...] = ()
    children: tuple["ProofTree", ...] = ()

    @property
    def height(self) -> int:
        return 0 if not self.children else 1 + max(c.height for c in self.children)

    def rules_used(self) -> list[str]:
        out = [] if self.rule is None else [self.rule]
        for c in self.children:
            out.extend(r for r in c.rules_used() if r not in out)
        return out

    def leaves(self) -> list[Fact]:
        if not self.children:
            return [self.fact]
        return [leaf for c in self.children for leaf in c.leaves()]


def justify(fact: Fact, m: Materialization) -> ProofTree:
    """Proof tree built from the first recorded derivation of every node."""
    key = m._key(fact)
    if key not in m._depth:
        raise NotEntailed(f"{fact} is not entailed")

    def build(k: tuple) -> ProofTree:
        rec = m._records[k][0]
        d = m._record(k, rec)
        if d.via is None:
            return ProofTree(d.fact, None)
        return ProofTree(d.fact, d.via, d.binding, tuple(build(s) for s in rec[2]))

    return build(key)


def _record_order(m: Materialization, key: tuple):
    def sort_key(rec):
        if rec[0] is None:
            return (0, "", ())
        d = m._record(key, rec)
        return (rec[3], d.via, tuple((n, s.name) for n, s in d.binding))

    return sorted(m._records[key], key=sort_key)


def enumerate_justifications(fact: Fact, m: Materialization, k: int) -> list[ProofTree]:
    """Up to ``k`` distinct proof trees, ordered by round, rule id, binding.

    A fact never appears below itself, so every tree is finite and acyclic.
    Only the retained derivation records (see ``cap``) are explored.
    """
    key = m._key(fact)
    if key not in m._depth:
        raise NotEntailed(f"{fact} is not entailed")
    if k <= 0:
        return []

    def trees(node: tuple, ancestors: frozenset) -> list[ProofTree]:
        out: list[ProofTree] = []
        seen: set[ProofTree] = set()
        for rec in _record_order(m, node):
            if len(out) >= k:
                break
            d = m._record(node, rec)
            if d.via is None:
                t = ProofTree(d.fact, None)
                if t not in seen:
                    seen.add(t)
                    out.append(t)
                continue
            if any(s in ancestors or s == node for s in rec[2]):
                continue
            child_lists = []
            for s in rec[2]:
                sub = trees(s, ancestors | {node})
                if not sub:
                    break
                child_lists.append(sub)
            else:
                for combo in product(*child_lists):
                    t = ProofTree(d.fact, d.via, d.binding, tuple(combo))
                    if t not in seen:
                        seen.add(t)
                        out.append(t)
                    if len(out) >= k:
                        break
        return out

    return trees(key, frozenset())


def _substitute(atom: Atom, binding: dict[str, Symbol]) -> Fact:
    def val(t) -> Symbol:
        return binding[t.sym.name] if isinstance(t, Variable) else t.sym

    if isinstance(atom, ClassAtom):
        return TypeFact(val(atom.arg), atom.cls)
    return RelFact(atom.prop, val(atom.subject), val(atom.object))


def check_proof(tree: ProofTree, m: Materialization) -> bool:
    """Replay ``tree`` bottom-up; True iff every step reproduces its fact."""
    if tree.rule is None:
        return not tree.children and m.is_asserted(tree.fact)
    rule = m.rules.get(tree.rule)
    if rule is None:
        return False
    binding = dict(tree.binding)
    try:
        body = [_substitute(a, binding) for a in rule.body]
        head = _substitute(rule.head, binding)
    except KeyError:
        return False
    if head != tree.fact or body != [c.fact for c in tree.children]:
        return False
    return all(check_proof(c, m) for c in tree.children)


def _label(rule: CompiledRule) -> str:
    return rule.origin if rule.involves_fresh else rule.id


def render_proof(tree: ProofTree, m: Materialization) -> str:
    """Indented text, two spaces per level: ``fact  [rule id]`` / ``fact  [asserted]``.

    Memberships of helper classes are folded into their parent step.
    """
    lines: list[str] = []

    def visible_children(node: ProofTree) -> tuple[list[ProofTree], list[str]]:
        kids: list[ProofTree] = []
        labels: list[str] = []
        for c in node.children:
            if m.hidden(c.fact):
                if c.rule is not None:
                    labels.append(_label(m.rules[c.rule]))
                sub_kids, sub_labels = visible_children(c)
                kids.extend(sub_kids)
                labels.extend(sub_labels)
            else:
                kids.append(c)
        return kids, labels

    def walk(node: ProofTree, level: int) -> None:
        if node.rule is None:
            lines.append(f"{'  ' * level}{node.fact}  [asserted]")
            return
        kids, labels = visible_children(node)
        names = list(dict.fromkeys([_label(m.rules[node.rule]), *labels]))
        lines.append(f"{'  ' * level}{node.fact}  [rule {', '.join(names)}]")
        for c in kids:
            walk(c, level + 1)

    walk(tree, 0)
    return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class ClashReport:
    clash: Clash
    justifications: tuple[ProofTree, ...]


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    clashes: tuple[ClashReport, ...] = field(default=())


def check_consistency(m: Materialization) -> ConsistencyReport:
    reports = tuple(ClashReport(c, tuple(justify(f, m) for f in c.facts)) for c in m.clashes)
    return ConsistencyReport(m.consistent, reports)


def render_consistency(report: ConsistencyReport, m: Materialization) -> str:
    if report.consistent:
        return "consistent\n"
    out = []
    for cr in report.clashes:
        c = cr.clash
        out.append(f"clash: {c.individual.name} violates {c.axiom}\n")
        for tree in cr.justifications:
            out.append("".join("  " + line + "\n" for line in render_proof(tree, m).splitlines()))
    return "".join(out)


def render_facts_tsv(m: Materialization) -> str:
    rows = []
    for f in m.sorted_facts():
        if isinstance(f, TypeFact):
            rows.append(f"type\t{f.individual.name}\t{f.cls.name}\n")
        else:
            rows.append(f"rel\t{f.prop.name}\t{f.subject.name}\t{f.object.name}\n")
    return "".join(rows)
