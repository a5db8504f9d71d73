from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Status(str, enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    HARD_CASE = "HardCaseDetected"
    MAX_ITERATIONS = "MaxIterations"
    MAX_RESTARTS = "MaxRestarts"

    @property
    def converged(self):
        return self in (Status.INTERIOR, Status.BOUNDARY)


class HardCaseDetected(Exception):
    """The eigenvector's top block is below the hard-case threshold."""

    def __init__(self, y1_norm, tau):
        super().__init__(f"||y1|| = {y1_norm:.3e} <= tau = {tau:.3e}")
        self.y1_norm = y1_norm
        self.tau = tau


@dataclass(frozen=True)
class TrsSolution:
    """What every solver returns.

    ``mv_count`` is the total number of A-applications, including the CG
    prefix (``prefix_mvs``) that checks for an interior solution.
    ``res_bnorm`` is always recomputed from ``s``, never estimated.
    """

    s: np.ndarray
    lam: float
    res_bnorm: float
    rel_res: float
    mv_count: int
    iterations: int
    status: Status
    prefix_mvs: int = 0
