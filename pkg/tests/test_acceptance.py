"""One test per acceptance criterion; the terminal summary prints a line for each."""

import json
import subprocess
import sys
import time

import pytest

from kbctl.corpus import CLASH, CONTRAST, CORPUS_DIR, corpus_paths, load_corpus
from kbctl.el import classify_kb
from kbctl.engine import check_proof, enumerate_justifications, materialize
from kbctl.model import build_kb
from kbctl.query import evaluate, render_tsv
from kbctl.suite import COMPLEXITIES, ONTOLOGY_ONLY, WITH_RULES, competency_suite, run_both
from kbctl.syntax import load_kb, parse_fact, parse_kb, parse_query, render_document

from oracles import oracle_supers
from randkb import random_extra_fact, random_kb, random_tbox

UC3 = CORPUS_DIR / "queries" / "UC3-Q2.rq"
PRMOM = "PatientRequiringMedicalOralManagement"
DM_PD_ROWS = {
    ("Steve", "DrugInducedDiabetes", "AcuteNecrotisingUlcerativePeriodontitis"),
    ("Tim", "Type2Diabetes", "LocalisedChronicPeriodontitis"),
    ("Ken", "Type2Diabetes", "PeriodontalAbscess"),
    ("Sara", "MaturityOnsetDiabetesOfTheYoung", "MarginalPeriodontitis"),
    ("Martin", "PreDiabetes", "GeneralisedAggressivePeriodontitis"),
    ("Cathy", "GestationalDiabetesMellitus", "GeneralisedAggressivePeriodontitis"),
    ("Linda", "ImmuneMediatedDiabetes", "CombinedPeriodonticEndodonticLesion"),
}


@pytest.mark.acceptance(1, "diabetes/periodontal query returns the seven patients")
def test_c1_diabetes_periodontal_rows():
    from kbctl.cli import main

    start = time.perf_counter()
    assert main(["query", "--corpus", "rules", "-q", str(UC3), "-o", "/dev/null"]) == 0
    elapsed = time.perf_counter() - start
    table = evaluate(parse_query(UC3.read_text()), materialize(load_corpus("rules")))
    assert table.names() == DM_PD_ROWS
    assert render_tsv(table).encode() == (CORPUS_DIR / "golden" / "UC3-Q2.tsv").read_bytes()
    print(f"\nC1: {len(table)} rows, query command {elapsed:.3f} s")
    assert elapsed < 1.0


@pytest.mark.acceptance(2, "Tim requires combined management, with a sound proof")
def test_c2_tim(corpus_kb, corpus_m):
    f = parse_fact(f"{PRMOM}(Tim)", corpus_kb)
    assert f in corpus_m
    trees = enumerate_justifications(f, corpus_m, 8)
    assert len(trees) >= 1
    for tree in trees:
        assert check_proof(tree, corpus_m)
        assert {"RC1-1", "RC1-2"} <= set(tree.rules_used())
    print(f"\nC2: {len(trees)} proof tree(s)")


@pytest.mark.acceptance(3, "Sam's prophylaxis chain at depths 1, 2, 3")
def test_c3_sam(corpus_kb, corpus_m):
    chain = ["atRiskOf(Sam, BacteraemiaDueToSurgicalDentalProcedure)",
             "atRiskOf(Sam, BacterialEndocarditis)",
             "requiresPreventiveMeasure(Sam, AntibioticProphylaxis)"]
    depths = [corpus_m.depth(parse_fact(t, corpus_kb)) for t in chain]
    print(f"\nC3: depths {depths}")
    assert depths == [1, 2, 3]


@pytest.mark.acceptance(4, "unlinked diabetic patient qualifies under the broad variant only")
def test_c4_contrast():
    outcome = {}
    for variant in ("broad", "rules"):
        kb = load_corpus(variant, extra=(CONTRAST,))
        outcome[variant] = parse_fact(f"{PRMOM}(Quinn)", kb) in materialize(kb)
    print(f"\nC4: {outcome}")
    assert outcome == {"broad": True, "rules": False}


@pytest.mark.acceptance(5, "semi-naive and naive saturation agree on 500 random KBs")
def test_c5_semi_vs_naive():
    start = time.perf_counter()
    mismatches = 0
    for seed in range(500):
        kb = random_kb(100_000 + seed, max_classes=8, max_props=4, max_inds=6, max_rules=5)
        a, b = materialize(kb), materialize(kb, naive=True)
        if a.all_facts != b.all_facts or any(a.depth(f) != b.depth(f) for f in a.all_facts):
            mismatches += 1
    elapsed = time.perf_counter() - start
    print(f"\nC5: {mismatches} mismatches in {elapsed:.1f} s")
    assert mismatches == 0
    assert elapsed < 60


@pytest.mark.acceptance(6, "classification agrees with the canonical-model oracle on 500 TBoxes")
def test_c6_classification():
    mismatches = 0
    for seed in range(500):
        kb = random_tbox(200_000 + seed, max_classes=8)
        if oracle_supers(kb) != dict(classify_kb(kb).supers):
            mismatches += 1
    print(f"\nC6: {mismatches} mismatches")
    assert mismatches == 0


def _without(kb, drop):
    return build_kb(kb.tbox, [f for f in kb.abox if f != drop], kb.rules,
                    symbols=kb.symbols, namespace=kb.namespace)


@pytest.mark.acceptance(7, "adding a fact never removes one, deleting never adds one")
def test_c7_monotone(corpus_kb, corpus_m):
    cases = [(random_kb(300_000 + k), k) for k in range(100)]
    broken = 0
    for kb, k in cases:
        base = materialize(kb).facts
        extra = random_extra_fact(k, kb)
        grown = materialize(kb.with_facts([extra])).facts
        broken += not (base <= grown and extra in grown)
        if kb.abox:
            broken += not materialize(_without(kb, kb.abox[k % len(kb.abox)])).facts <= base
    extra = parse_fact("hasOralCondition(Tim, PoorOralHygiene)", corpus_kb)
    broken += not corpus_m.facts <= materialize(corpus_kb.with_facts([extra])).facts
    for drop in corpus_kb.abox[::7]:
        broken += not materialize(_without(corpus_kb, drop)).facts <= corpus_m.facts
    print(f"\nC7: {broken} violations")
    assert broken == 0


@pytest.mark.acceptance(8, "rules resolve at least as many questions in every cell")
def test_c8_eval(corpus_kb):
    suite = competency_suite()
    report = run_both(corpus_kb, suite)
    cells = [(uc, cx) for uc in report.use_cases() for cx in COMPLEXITIES]
    pairs = {c: (report.resolved(*c, ONTOLOGY_ONLY), report.resolved(*c, WITH_RULES)) for c in cells}
    strict = sum(r > o for o, r in pairs.values())
    print(f"\nC8: {len(suite)} questions, {strict} strict cells")
    assert len(suite) >= 25
    assert all(r >= o for o, r in pairs.values())
    assert strict >= 3


PERF_SCRIPT = """
import json, resource, sys, time
sys.path.insert(0, sys.argv[1])
from synthetic import population
from kbctl.engine import materialize
kb, n = population()
start = time.perf_counter()
m = materialize(kb)
elapsed = time.perf_counter() - start
rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024
inds = sum(1 for s in kb.symbols if s.kind.value == "individual" and s.name.startswith("Syn"))
print(json.dumps({"facts": n, "individuals": inds, "seconds": elapsed, "rss": rss,
                  "derived": len(m.facts), "consistent": m.consistent}))
"""


@pytest.mark.acceptance(9, "5,000 individuals and 20,000 facts saturate in under 5 s and 1 GB")
def test_c9_performance():
    here = str(__import__("pathlib").Path(__file__).parent)
    r = subprocess.run([sys.executable, "-c", PERF_SCRIPT, here], capture_output=True, text=True,
                       check=True)
    stats = json.loads(r.stdout.strip().splitlines()[-1])
    print(f"\nC9: {stats['individuals']} individuals, {stats['facts']} facts, "
          f"{stats['seconds']:.2f} s, {stats['rss'] / 2**20:.0f} MiB, {stats['derived']} visible facts")
    assert stats["individuals"] == 5000 and stats["facts"] == 20000
    assert stats["seconds"] < 5
    assert stats["rss"] < 2**30


CLI_RUNS = [
    ["check", "--corpus", "rules"],
    ["check", str(CLASH)],
    ["classify", "--corpus", "rules"],
    ["classify", "--corpus", "broad", "--format", "tree"],
    ["materialize", "--corpus", "rules"],
    ["materialize", "--corpus", "broad", "--no-rules"],
    ["query", "--corpus", "rules", "-q", str(UC3)],
    ["explain", "--corpus", "rules", "--all", "--fact", f"{PRMOM}(Tim)"],
    ["explain", "--corpus", "rules", "--fact", "requiresPreventiveMeasure(Sam, AntibioticProphylaxis)"],
    ["eval", "--corpus", "rules"],
]


def _roundtrips(kb):
    text = render_document(kb)
    again = parse_kb(text)
    return again == kb and render_document(again) == text


@pytest.mark.acceptance(10, "render/parse round-trip and byte-identical CLI output")
def test_c10_roundtrip_and_determinism(tmp_path):
    kbs = [load_kb(corpus_paths(v) + [CONTRAST]) for v in ("rules", "broad")] + [load_kb([CLASH])]
    kbs += [random_kb(400_000 + s, punning=s % 4 == 0) for s in range(200)]
    failed = sum(not _roundtrips(kb) for kb in kbs)
    differing = []
    for argv in CLI_RUNS:
        outs = []
        for k in range(2):
            fig = tmp_path / f"fig{k}.png"
            extra = ["--figure", str(fig)] if argv[0] == "eval" else []
            r = subprocess.run([sys.executable, "-m", "kbctl", *argv, *extra],
                               capture_output=True, check=False)
            outs.append((r.returncode, r.stdout, r.stderr, fig.read_bytes() if extra else b""))
        if outs[0] != outs[1]:
            differing.append(" ".join(argv))
    print(f"\nC10: {failed} round-trip failures over {len(kbs)} KBs, {len(differing)} differing commands")
    assert failed == 0
    assert differing == []
