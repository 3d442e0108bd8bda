"""The bundled oral-systemic health corpus.

Two ontology variants share every class, property and rule except the
definition of ``PatientRequiringMedicalOralManagement``:

``rules``
    two Horn rules require the patient's medical and oral conditions to be
    interdependent;
``broad``
    a class equivalence admits any diabetic patient with periodontal disease.

The patient fixtures live in ``patients.kb`` and are loaded after the
ontology file.  Everything here is a reconstruction for demonstration,
not clinical guidance.
"""

from __future__ import annotations

from pathlib import Path

from ..model import KnowledgeBase
from ..syntax import load_kb

CORPUS_DIR = Path(__file__).resolve().parent
VARIANTS = {"rules": "oshco.kb", "broad": "oshco-broad.kb"}
PATIENTS = CORPUS_DIR / "patients.kb"
CONTRAST = CORPUS_DIR / "contrast.kb"
CLASH = CORPUS_DIR / "clash.kb"
SUITE = CORPUS_DIR / "suite.tsv"


def corpus_paths(variant: str = "rules") -> list[Path]:
    try:
        name = VARIANTS[variant]
    except KeyError:
        raise ValueError(f"unknown corpus variant {variant!r}; choose from {sorted(VARIANTS)}") from None
    return [CORPUS_DIR / name, PATIENTS]


def load_corpus(variant: str = "rules", *, extra: tuple[Path, ...] = ()) -> KnowledgeBase:
    """Parse the ontology variant plus the patient fixtures (and any extra files)."""
    return load_kb([*corpus_paths(variant), *extra])
