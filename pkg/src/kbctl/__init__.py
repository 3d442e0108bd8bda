"""kbctl: EL ontologies plus Horn rules, materialized with provenance.

Typical pipeline::

    kb = load_kb(["onto.kb", "patients.kb"])
    m = materialize(kb)
    table = evaluate(parse_query(text), m)
"""

from .el import classify, classify_kb, is_subsumed, normalize, satisfiable
from .engine import (
    check_consistency,
    compile_program,
    enumerate_justifications,
    justify,
    materialize,
    naive_saturate,
    saturate,
)
from .model import KnowledgeBase, SymbolTable, build_kb
from .query import evaluate, plan, render_tsv
from .syntax import load_kb, parse_document, parse_kb, parse_query, parse_rule, render_document

__version__ = "0.1.0"

__all__ = [
    "KnowledgeBase",
    "SymbolTable",
    "build_kb",
    "check_consistency",
    "classify",
    "classify_kb",
    "compile_program",
    "enumerate_justifications",
    "evaluate",
    "is_subsumed",
    "justify",
    "load_kb",
    "materialize",
    "naive_saturate",
    "normalize",
    "parse_document",
    "parse_kb",
    "parse_query",
    "parse_rule",
    "plan",
    "render_document",
    "render_tsv",
    "satisfiable",
    "saturate",
]
