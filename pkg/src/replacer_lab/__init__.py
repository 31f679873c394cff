"""Correctability of quantum codes under replacer and erasure channels."""

from .channels import (
    KrausSet,
    PartialReplacerChannel,
    ReplacerChannel,
    erasure_kraus_set,
    generalized_pauli,
    partial_replacer_kraus_set,
)
from .codes import CodeSubspace, generate_code, load_code, save_code, validate_code
from .corpus import Fixture, fixture, list_fixtures
from .stabilizer import PauliOperator, StabilizerGroup, codewords_from_stabilizer
from .structure import (
    CorrectabilityReport,
    DegenerateCodeword,
    NotCorrectable,
    StructureDecomposition,
    build_recovery,
    check_separability,
    decompose,
    full_report,
    knill_laflamme_check,
    mutual_information,
    verify_recovery,
)
from .tensor import SystemLayout

__version__ = "0.1.0"

__all__ = [
    "CodeSubspace",
    "CorrectabilityReport",
    "DegenerateCodeword",
    "Fixture",
    "KrausSet",
    "NotCorrectable",
    "PartialReplacerChannel",
    "PauliOperator",
    "ReplacerChannel",
    "StabilizerGroup",
    "StructureDecomposition",
    "SystemLayout",
    "build_recovery",
    "check_separability",
    "codewords_from_stabilizer",
    "decompose",
    "erasure_kraus_set",
    "fixture",
    "full_report",
    "generalized_pauli",
    "generate_code",
    "knill_laflamme_check",
    "list_fixtures",
    "load_code",
    "mutual_information",
    "partial_replacer_kraus_set",
    "save_code",
    "validate_code",
    "verify_recovery",
]
