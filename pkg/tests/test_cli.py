import subprocess
import sys

import pytest

from kbctl.cli import main
from kbctl.corpus import CLASH, CORPUS_DIR

UC3 = str(CORPUS_DIR / "queries" / "UC3-Q2.rq")
UC5 = str(CORPUS_DIR / "queries" / "UC5-Q3.rq")

TINY = """class A
class B subclassOf A
property r
individual a
individual b
type a : B
fact r(a, b)
rule up: r(?x, ?y) ^ B(?x) -> A(?y)
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.kb"
    p.write_text(TINY)
    return str(p)


def test_check_ok(capsys, tiny):
    code, out, _ = run(capsys, "check", tiny)
    assert code == 0 and out == "consistent\n"


def test_check_clash(capsys):
    code, out, _ = run(capsys, "check", str(CLASH))
    assert code == 1
    assert out.startswith("clash: Candidiasis violates no-overlap")
    assert "[rule infections-are-medical]" in out


def test_check_clash_without_rules(capsys):
    assert run(capsys, "check", "--no-rules", str(CLASH))[0] == 0


def test_classify_formats(capsys, tiny):
    code, out, _ = run(capsys, "classify", tiny)
    assert code == 0 and out == "A\tTop\nB\tA\n"
    code, out, _ = run(capsys, "classify", tiny, "--format", "tree")
    assert out.startswith("Top\n  A\n    B\n")


def test_materialize(capsys, tiny):
    code, out, _ = run(capsys, "materialize", tiny)
    assert code == 0
    assert out == "rel\tr\ta\tb\ntype\ta\tA\ntype\ta\tB\ntype\tb\tA\n"
    _, bare, _ = run(capsys, "materialize", "--no-rules", tiny)
    assert bare == "rel\tr\ta\tb\ntype\ta\tA\ntype\ta\tB\n"


def test_materialize_inconsistent_exit(capsys):
    code, _, err = run(capsys, "materialize", str(CLASH))
    assert code == 1 and "inconsistent" in err


def test_query_diabetes_periodontal(capsys):
    code, out, _ = run(capsys, "query", "--corpus", "rules", "-q", UC3)
    assert code == 0
    assert out.encode() == (CORPUS_DIR / "golden" / "UC3-Q2.tsv").read_bytes()


def test_query_no_rules_is_subset(capsys):
    _, full, _ = run(capsys, "query", "--corpus", "rules", "-q", UC5)
    _, bare, _ = run(capsys, "query", "--corpus", "rules", "--no-rules", "-q", UC5)
    assert full.splitlines()[0] == bare.splitlines()[0]
    assert set(bare.splitlines()[1:]) < set(full.splitlines()[1:])


def test_query_output_file(capsys, tmp_path):
    out = tmp_path / "rows.tsv"
    code, stdout, _ = run(capsys, "query", "--corpus", "rules", "-q", UC3, "-o", str(out))
    assert code == 0 and stdout == ""
    assert len(out.read_text().splitlines()) == 8


def test_query_missing_file(capsys, tiny):
    code, _, err = run(capsys, "query", tiny, "-q", "/nonexistent/q.rq")
    assert code == 4 and "cannot read query" in err


def test_query_malformed(capsys, tiny, tmp_path):
    q = tmp_path / "bad.rq"
    q.write_text("SELECT ?x WHERE { ?x a }")
    assert run(capsys, "query", tiny, "-q", str(q))[0] == 4


def test_query_unknown_symbol(capsys, tiny, tmp_path):
    q = tmp_path / "q.rq"
    q.write_text("SELECT ?x WHERE { ?x a <Nope> }")
    code, _, err = run(capsys, "query", tiny, "-q", str(q))
    assert code == 4 and "Nope" in err


def test_malformed_kb_reports_span(capsys, tmp_path):
    p = tmp_path / "bad.kb"
    p.write_text("class A\nsub A <\n")
    code, _, err = run(capsys, "check", str(p))
    assert code == 2
    assert "bad.kb:2:" in err


def test_unreadable_kb(capsys):
    code, _, err = run(capsys, "check", "/nonexistent/x.kb")
    assert code == 2 and "cannot read" in err


def test_unsafe_rule(capsys, tmp_path):
    p = tmp_path / "unsafe.kb"
    p.write_text("class A\nclass B\nrule bad: A(?x) -> B(?y)\n")
    code, _, err = run(capsys, "check", str(p))
    assert code == 3 and "bad" in err


def test_explain_asserted(capsys):
    code, out, _ = run(capsys, "explain", "--corpus", "rules", "--fact", "Patient(Tim)")
    assert code == 0 and out == "Patient(Tim)  [asserted]\n"


def test_explain_tim(capsys):
    code, out, _ = run(capsys, "explain", "--corpus", "rules", "--fact",
                       "PatientRequiringMedicalOralManagement(Tim)")
    assert code == 0
    assert out.splitlines()[0] == "PatientRequiringMedicalOralManagement(Tim)  [rule RC1-1]"
    assert "[rule RC1-2]" in out


def test_explain_all(capsys):
    code, out, _ = run(capsys, "explain", "--corpus", "rules", "--all", "--max-k", "3",
                       "--fact", "PatientRequiringMedicalOralManagement(Tim)")
    assert code == 0
    roots = [line for line in out.splitlines() if line.startswith("PatientRequiring")]
    assert 1 <= len(roots) <= 3


def test_explain_not_entailed(capsys):
    code, _, err = run(capsys, "explain", "--corpus", "rules", "--fact", "atRiskOf(Tim, Tim)")
    assert code == 5 and "not entailed" in err


@pytest.mark.parametrize("fact", ["Nope(Tim)", "Patient(", "Patient(Nobody)"])
def test_explain_bad_fact(capsys, fact):
    assert run(capsys, "explain", "--corpus", "rules", "--fact", fact)[0] == 4


def test_explain_max_k_must_be_positive(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["explain", "--corpus", "rules", "--all", "--max-k", "0", "--fact", "Patient(Tim)"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_eval_default_suite(capsys, tmp_path):
    out = tmp_path / "report.txt"
    code, _, _ = run(capsys, "eval", "--corpus", "rules", "-o", str(out))
    assert code == 0
    assert len(out.read_text().splitlines()) == 7
    assert out.with_suffix(".png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_eval_verdicts(capsys, tmp_path):
    v = tmp_path / "v.tsv"
    code, _, _ = run(capsys, "eval", "--corpus", "rules", "--verdicts", str(v))
    assert code == 0
    assert v.read_text().startswith("id\tmode\tresolved")


def _suite(tmp_path, golden_text):
    (tmp_path / "g.tsv").write_text(golden_text)
    (tmp_path / "q.rq").write_text(open(UC5).read())
    s = tmp_path / "s.tsv"
    s.write_text("id\tuse_case\tcomplexity\tquery_path\texpectation\nX1\t5\tsimple\tq.rq\tgolden:g.tsv\n")
    return str(s)


def test_eval_failing_golden(capsys, tmp_path):
    code, out, err = run(capsys, "eval", "--corpus", "rules", "--suite", _suite(tmp_path, "?x\nnobody\n"))
    assert code == 6 and "X1" in err
    assert out.splitlines()[2].split() == ["5", "0", "0", "1", "0", "0", "0"]


def test_eval_passing_custom_suite(capsys, tmp_path):
    code, out, _ = run(capsys, "eval", "--corpus", "rules", "--suite", _suite(tmp_path, "?x\noshco:Sam\n"))
    assert code == 0
    assert out.splitlines()[2].split() == ["5", "0", "1", "0", "0", "0", "0"]


def test_eval_empty_suite(capsys, tmp_path):
    s = tmp_path / "empty.tsv"
    s.write_text("")
    code, out, _ = run(capsys, "eval", "--corpus", "rules", "--suite", str(s))
    assert code == 0 and len(out.splitlines()) == 2


def test_eval_bad_suite(capsys, tmp_path):
    s = tmp_path / "bad.tsv"
    s.write_text("nope\n")
    assert run(capsys, "eval", "--corpus", "rules", "--suite", str(s))[0] == 4
    assert run(capsys, "eval", "--corpus", "rules", "--suite", str(tmp_path / "missing.tsv"))[0] == 4


def test_requires_a_kb(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check"])
    assert exc.value.code == 2
    assert "knowledge-base" in capsys.readouterr().err


def test_kb_files_after_corpus(capsys):
    code, out, _ = run(capsys, "query", "--corpus", "broad", str(CORPUS_DIR / "contrast.kb"), "-q", UC3)
    assert code == 0


COMMANDS = [
    ["check", "--corpus", "rules"],
    ["classify", "--corpus", "rules"],
    ["classify", "--corpus", "broad", "--format", "tree"],
    ["materialize", "--corpus", "rules"],
    ["query", "--corpus", "rules", "-q", UC3],
    ["explain", "--corpus", "rules", "--all", "--fact", "PatientRequiringMedicalOralManagement(Tim)"],
    ["eval", "--corpus", "rules"],
    ["check", str(CLASH)],
]


@pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: "-".join(a[:2]))
def test_deterministic_in_process(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "kbctl", "query", "--corpus", "rules", "-q", UC3],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert len(r.stdout.splitlines()) == 8
