import pytest
from hypothesis import given
from hypothesis import strategies as st

from kbctl.errors import DuplicateAxiomId, KindConflict, UndeclaredSymbol, UnsafeRule
from kbctl.model import (
    BOTTOM,
    TOP,
    ClassAtom,
    Constant,
    Exists,
    Intersection,
    Kind,
    Named,
    PropertyAtom,
    RelFact,
    Rule,
    SubClassOf,
    SymbolTable,
    TypeFact,
    Variable,
    build_kb,
    check_rule_safety,
    conj,
    named,
)

from randkb import random_kb

DM_PD_CONDITIONS = [
    "DrugInducedDiabetes", "AcuteNecrotisingUlcerativePeriodontitis",
    "Type2Diabetes", "LocalisedChronicPeriodontitis",
    "Type2Diabetes", "PeriodontalAbscess",
    "MaturityOnsetDiabetesOfTheYoung", "MarginalPeriodontitis",
    "PreDiabetes", "GeneralisedAggressivePeriodontitis",
    "GestationalDiabetesMellitus", "GeneralisedAggressivePeriodontitis",
    "ImmuneMediatedDiabetes", "CombinedPeriodonticEndodonticLesion",
]


def test_intern_is_idempotent():
    t = SymbolTable()
    assert t.intern("Patient", Kind.CLASS) is t.intern("Patient", Kind.CLASS)


def test_kind_conflict():
    t = SymbolTable()
    t.intern("Patient", Kind.CLASS)
    with pytest.raises(KindConflict):
        t.intern("Patient", Kind.INDIVIDUAL)


def test_punning_only_between_class_and_individual():
    t = SymbolTable(allow_punning=True)
    c = t.intern("Type2Diabetes", Kind.CLASS)
    i = t.intern("Type2Diabetes", Kind.INDIVIDUAL)
    assert c != i and c.id != i.id
    with pytest.raises(KindConflict):
        t.intern("Type2Diabetes", Kind.PROPERTY)


def test_diabetes_periodontal_condition_names_intern_to_twelve_ids():
    t = SymbolTable()
    ids = {t.intern(n, Kind.INDIVIDUAL).id for n in DM_PD_CONDITIONS}
    assert len(ids) == 12


def test_bad_names_rejected():
    t = SymbolTable()
    for bad in ["", "two words", "tab\there"]:
        with pytest.raises(ValueError):
            t.intern(bad, Kind.CLASS)


def test_top_and_bottom_reserved():
    t = SymbolTable()
    assert (t.top.id, t.bottom.id) == (0, 1)
    assert t.intern("Top", Kind.CLASS) is t.top


@given(st.lists(st.sampled_from(["A", "B", "C", "D"]), min_size=1, max_size=8),
       st.randoms(use_true_random=False))
def test_intersection_canonical_under_permutation(names, rnd):
    t = SymbolTable()
    members = [named(t.intern(n, Kind.CLASS)) for n in names]
    shuffled = list(members)
    rnd.shuffle(shuffled)
    assert conj(*members) == conj(*shuffled)


def test_intersection_drops_duplicates_and_sorts():
    t = SymbolTable()
    a, b = t.intern("A", Kind.CLASS), t.intern("B", Kind.CLASS)
    ce = conj(named(b), named(a), named(b))
    assert isinstance(ce, Intersection)
    assert ce.members == (Named(a), Named(b))
    assert conj(named(a), named(a)) == Named(a)


def test_nested_intersections_flatten():
    t = SymbolTable()
    a, b, c = (t.intern(n, Kind.CLASS) for n in "ABC")
    assert conj(named(a), conj(named(b), named(c))) == conj(named(c), named(b), named(a))


def test_empty_kb_has_only_top_and_bottom():
    kb = build_kb()
    assert [s.name for s in kb.symbols] == ["Top", "Bottom"]
    assert kb.tbox == kb.abox == kb.rules == ()


def test_undeclared_individual_rejected():
    t = SymbolTable()
    c = t.intern("Patient", Kind.CLASS)
    other = SymbolTable()
    other.intern("x", Kind.CLASS)
    ghost = other.intern("Tim", Kind.INDIVIDUAL)
    with pytest.raises(UndeclaredSymbol):
        build_kb(facts=[TypeFact(ghost, c)], symbols=t)


def test_duplicate_axiom_id():
    t = SymbolTable()
    a, b = t.intern("A", Kind.CLASS), t.intern("B", Kind.CLASS)
    with pytest.raises(DuplicateAxiomId):
        build_kb([SubClassOf(named(a), named(b), "x"), SubClassOf(named(b), named(a), "x")], symbols=t)


def test_default_axiom_ids_by_position():
    t = SymbolTable()
    a, b = t.intern("A", Kind.CLASS), t.intern("B", Kind.CLASS)
    kb = build_kb([SubClassOf(named(a), named(b)), SubClassOf(named(b), TOP)], symbols=t)
    assert [ax.id for ax in kb.tbox] == ["ax1", "ax2"]


def _rule_table():
    t = SymbolTable()
    syms = {n: t.intern(n, Kind.CLASS) for n in ["Patient", "MedicalCondition", "Flag"]}
    syms["atRiskOf"] = t.intern("atRiskOf", Kind.PROPERTY)
    syms["hasMedicalCondition"] = t.intern("hasMedicalCondition", Kind.PROPERTY)
    syms["AntibioticProphylaxis"] = t.intern("AntibioticProphylaxis", Kind.INDIVIDUAL)
    for v in ["?x", "?y", "?z"]:
        syms[v] = t.intern(v, Kind.VARIABLE)
    return t, syms


def test_rule_safety_reports_unbound_head_variable():
    t, s = _rule_table()
    rule = Rule("r", (ClassAtom(s["Patient"], Variable(s["?x"])),),
                (PropertyAtom(s["atRiskOf"], Variable(s["?x"]), Variable(s["?z"])),))
    assert check_rule_safety(rule) == (s["?z"],)
    with pytest.raises(UnsafeRule) as info:
        build_kb(rules=[rule], symbols=t)
    assert info.value.variables == (s["?z"],)


def test_rule_safety_ok_with_constant_head():
    t, s = _rule_table()
    rule = Rule("r", (ClassAtom(s["Patient"], Variable(s["?x"])),),
                (PropertyAtom(s["atRiskOf"], Variable(s["?x"]), Constant(s["AntibioticProphylaxis"])),))
    assert check_rule_safety(rule) == ()
    assert build_kb(rules=[rule], symbols=t).rules == (rule,)


def test_rule_needs_body_and_head():
    t, s = _rule_table()
    with pytest.raises(ValueError):
        Rule("r", (), (ClassAtom(s["Flag"], Variable(s["?x"])),))


def test_table2_rules_make_five(corpus_kb):
    wanted = {"RC1-1", "RC1-2", "RC2-1", "RC2-2", "RC2-3"}
    rules = [r for r in corpus_kb.rules if r.id in wanted]
    kb = build_kb(corpus_kb.tbox, (), rules, symbols=corpus_kb.symbols, namespace=corpus_kb.namespace)
    assert len(kb.rules) == 5


@pytest.mark.parametrize("seed", range(40))
def test_build_kb_idempotent(seed):
    kb = random_kb(seed)
    again = build_kb(**kb.parts())
    assert again == kb


@pytest.mark.parametrize("seed", range(40))
def test_safe_rules_ground_their_heads(seed):
    kb = random_kb(seed)
    for rule in kb.rules:
        bound = {t.sym for a in rule.body for t in a.terms() if isinstance(t, Variable)}
        assert all(t.sym in bound for a in rule.head for t in a.terms() if isinstance(t, Variable))


def test_facts_are_ground_values():
    t = SymbolTable()
    p = t.intern("p", Kind.PROPERTY)
    a, b = t.intern("a", Kind.INDIVIDUAL), t.intern("b", Kind.INDIVIDUAL)
    assert str(RelFact(p, a, b)) == "p(a, b)"
    assert str(Exists(p, BOTTOM)) == "some(p, Bottom)"
