"""Competency-question suite and the with/without-rules evaluation harness.

Every question is run twice: over the ontology alone (user rules removed,
ontology-derived rules kept) and over ontology plus rules.  A question is
resolved when its expectation holds: ``nonempty`` needs at least one row,
``golden:<path>`` needs the rendered TSV to match the file byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .engine import materialize
from .errors import KBError, ParseError, SourceSpan
from .model import KnowledgeBase
from .query import evaluate, render_tsv
from .syntax import parse_query

ONTOLOGY_ONLY = "ontology-only"
WITH_RULES = "ontology+rules"
MODES = (ONTOLOGY_ONLY, WITH_RULES)
COMPLEXITIES = ("simple", "complex")
SUITE_COLUMNS = ["id", "use_case", "complexity", "query_path", "expectation"]


@dataclass(frozen=True)
class CompetencyQuestion:
    id: str
    use_case: int
    complexity: str
    query_path: Path
    expectation: str  # "nonempty" or "golden"
    golden_path: Path | None = None

    def query_text(self) -> str:
        return self.query_path.read_text(encoding="utf-8")

    def question(self) -> str:
        """The natural-language question, taken from the query's leading comments."""
        lines = []
        for line in self.query_text().splitlines():
            if not line.startswith("#"):
                break
            lines.append(line.lstrip("# ").rstrip())
        return " ".join(lines)


def load_suite(path: str | Path) -> list[CompetencyQuestion]:
    """Read a suite TSV; paths inside it are relative to the file."""
    path = Path(path)
    base = path.parent
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        rows = list(reader)
    if not rows:
        return []
    if rows[0] != SUITE_COLUMNS:
        raise ParseError(f"suite header must be {' '.join(SUITE_COLUMNS)}", SourceSpan(str(path), 1, 1))
    out = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        span = SourceSpan(str(path), lineno, 1)
        if len(row) != len(SUITE_COLUMNS):
            raise ParseError(f"expected {len(SUITE_COLUMNS)} columns, found {len(row)}", span)
        qid, uc, cx, qpath, exp = row
        if qid in seen:
            raise ParseError(f"duplicate question id {qid!r}", span)
        seen.add(qid)
        if not uc.isdigit() or not 1 <= int(uc) <= 5:
            raise ParseError(f"use_case must be 1..5, found {uc!r}", span)
        if cx not in COMPLEXITIES:
            raise ParseError(f"complexity must be simple or complex, found {cx!r}", span)
        golden = None
        if exp == "nonempty":
            kind = "nonempty"
        elif exp.startswith("golden:") and len(exp) > len("golden:"):
            kind = "golden"
            golden = base / exp[len("golden:"):]
        else:
            raise ParseError(f"expectation must be 'nonempty' or 'golden:<path>', found {exp!r}", span)
        out.append(CompetencyQuestion(qid, int(uc), cx, base / qpath, kind, golden))
    return out


def competency_suite() -> list[CompetencyQuestion]:
    from .corpus import SUITE

    return load_suite(SUITE)


@dataclass(frozen=True)
class Verdict:
    question: str
    mode: str
    resolved: bool
    rows: int
    detail: str = ""


@dataclass
class SuiteReport:
    cells: dict = field(default_factory=dict)  # (use_case, complexity, mode) -> [resolved, unresolved]
    verdicts: list = field(default_factory=list)

    def add(self, q: CompetencyQuestion, v: Verdict) -> None:
        cell = self.cells.setdefault((q.use_case, q.complexity, v.mode), [0, 0])
        cell[0 if v.resolved else 1] += 1
        self.verdicts.append(v)

    def resolved(self, use_case: int, complexity: str, mode: str) -> int:
        return self.cells.get((use_case, complexity, mode), [0, 0])[0]

    def unresolved(self, use_case: int, complexity: str, mode: str) -> int:
        return self.cells.get((use_case, complexity, mode), [0, 0])[1]

    def use_cases(self) -> list[int]:
        return sorted({uc for uc, _, _ in self.cells})

    def merged(self, other: "SuiteReport") -> "SuiteReport":
        out = SuiteReport()
        for src in (self, other):
            for key, (r, u) in src.cells.items():
                cell = out.cells.setdefault(key, [0, 0])
                cell[0] += r
                cell[1] += u
            out.verdicts.extend(src.verdicts)
        return out

    def failures(self, mode: str = WITH_RULES) -> list[Verdict]:
        return [v for v in self.verdicts if v.mode == mode and not v.resolved]


def _judge(q: CompetencyQuestion, m, mode: str) -> Verdict:
    try:
        query = parse_query(q.query_text(), str(q.query_path))
        table = evaluate(query, m)
    except (OSError, KBError) as exc:
        return Verdict(q.id, mode, False, 0, f"error: {exc}")
    if q.expectation == "nonempty":
        ok = len(table) > 0
        return Verdict(q.id, mode, ok, len(table), "" if ok else "no rows")
    try:
        expected = q.golden_path.read_bytes()
    except OSError as exc:
        return Verdict(q.id, mode, False, len(table), f"error: {exc}")
    ok = render_tsv(table).encode("utf-8") == expected
    return Verdict(q.id, mode, ok, len(table), "" if ok else f"differs from {q.golden_path.name}")


def run_suite(kb: KnowledgeBase, suite: Sequence[CompetencyQuestion], mode: str) -> SuiteReport:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    m = materialize(kb, with_rules=(mode == WITH_RULES))
    report = SuiteReport()
    for q in suite:
        report.add(q, _judge(q, m, mode))
    return report


def run_both(kb: KnowledgeBase, suite: Sequence[CompetencyQuestion]) -> SuiteReport:
    return run_suite(kb, suite, ONTOLOGY_ONLY).merged(run_suite(kb, suite, WITH_RULES))


def render_report(report: SuiteReport) -> str:
    """Fixed-width table: one row per use case, simple and complex column groups."""
    group = f"{'OSHCO':>7}{'OSHCO+R':>9}{'UR':>5}"
    lines = [
        f"{'':<9}{'Simple questions':^21}   {'Complex questions':^21}",
        f"{'Use case':<9}{group}   {group}",
    ]
    for uc in report.use_cases():
        cells = []
        for cx in COMPLEXITIES:
            cells.append(f"{report.resolved(uc, cx, ONTOLOGY_ONLY):>7}"
                         f"{report.resolved(uc, cx, WITH_RULES):>9}"
                         f"{report.unresolved(uc, cx, WITH_RULES):>5}")
        lines.append(f"{uc:<9}{cells[0]}   {cells[1]}")
    return "".join(line.rstrip() + "\n" for line in lines)


def render_verdicts(report: SuiteReport) -> str:
    """TSV of per-question outcomes: id, mode, resolved, rows, detail."""
    lines = ["id\tmode\tresolved\trows\tdetail"]
    for v in sorted(report.verdicts, key=lambda v: (v.question, MODES.index(v.mode))):
        lines.append(f"{v.question}\t{v.mode}\t{'yes' if v.resolved else 'no'}\t{v.rows}\t{v.detail}")
    return "".join(line + "\n" for line in lines)


def cellwise_monotone(report: SuiteReport, use_cases: Iterable[int] | None = None) -> bool:
    ucs = report.use_cases() if use_cases is None else use_cases
    return all(report.resolved(uc, cx, WITH_RULES) >= report.resolved(uc, cx, ONTOLOGY_ONLY)
               for uc in ucs for cx in COMPLEXITIES)
