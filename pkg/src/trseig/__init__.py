"""Trust-region subproblem solvers: GLTR and eigenvalue-based TRS_IRA / TRS_IRRA."""

from .eig import EigReport, StoppingConfig, eig_trs_solve, recover_solution, translate_tolerance
from .gltr import gltr_solve, interior_check
from .result import HardCaseDetected, Status, TrsSolution
from .sparse import BOperator, PairOperator, SparseSymMatrix, TrsProblem, read_matrix_market

__all__ = [
    "BOperator",
    "EigReport",
    "HardCaseDetected",
    "PairOperator",
    "SparseSymMatrix",
    "Status",
    "StoppingConfig",
    "TrsProblem",
    "TrsSolution",
    "eig_trs_solve",
    "gltr_solve",
    "interior_check",
    "read_matrix_market",
    "recover_solution",
    "translate_tolerance",
]
