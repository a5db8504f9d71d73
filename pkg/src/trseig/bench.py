"""Matched-accuracy comparison of GLTR, TRS_IRA and TRS_IRRA."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eig import StoppingConfig, eig_trs_solve
from .gltr import gltr_solve
from .sparse import BOperator, DimensionError, PairOperator, SparseSymMatrix, TrsProblem, read_matrix_market

log = logging.getLogger(__name__)

DEFAULT_SIZE_CAP = 5000
HARD_SIZE_CAP = 20000
SOLVERS = ("GLTR", "TRS_IRA", "TRS_IRRA")
CSV_COLUMNS = ("matrix", "solver", "mvs", "res", "status", "iters", "ratio")


class SizeCapExceeded(ValueError):
    pass


@dataclass
class BenchConfig:
    matrices: list = field(default_factory=list)
    b_spec: str = "identity"
    deltas: tuple = (1.0, 100.0)
    tol: float = 1e-12
    m: int = 30
    max_restarts: int = 600
    solver: str = "all"  # all | gltr | ira | irra
    seed: int = 0
    fmt: str = "csv"
    size_cap: int = DEFAULT_SIZE_CAP

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if any(not d > 0 for d in self.deltas):
            raise ValueError("every delta must be positive")
        if self.m < 5:
            raise ValueError("subspace dimension must be at least 5")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")
        if self.solver not in ("all", "gltr", "ira", "irra"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.fmt not in ("csv", "md"):
            raise ValueError(f"unknown format {self.fmt!r}")
        if not 0 < self.size_cap <= HARD_SIZE_CAP:
            raise ValueError(f"size cap must be in 1..{HARD_SIZE_CAP}")

    def stopping(self):
        return StoppingConfig(tol=self.tol, m=self.m, max_restarts=self.max_restarts, seed=self.seed)


@dataclass
class BenchRecord:
    matrix: str
    solver: str
    mvs: int
    res: float
    status: str
    iters: int
    ratio: float | None = None
    wall_seconds: float = field(default=0.0, compare=False)


def parse_b_spec(spec, n):
    if spec == "identity":
        return BOperator.identity(n)
    if spec.startswith("tridiag:"):
        try:
            sub, diag, sup = (float(x) for x in spec[len("tridiag:") :].split(","))
        except ValueError as exc:
            raise ValueError(f"bad tridiagonal spec {spec!r}; expected tridiag:a,b,c") from exc
        return BOperator.tridiag(n, sub, diag, sup)
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"B spec {spec!r} is neither identity, tridiag:a,b,c nor a file")
    m = SparseSymMatrix(read_matrix_market(path))
    if m.n != n:
        raise DimensionError(f"B has order {m.n}, A has order {n}")
    return BOperator.from_matrix(m)


def unit_gradient(n, seed):
    g = np.random.default_rng(seed).standard_normal(n)
    return g / np.linalg.norm(g)


def build_problem(path, b_spec, delta, seed=0, size_cap=HARD_SIZE_CAP) -> TrsProblem:
    """A = G + G^T from a Matrix Market file, g a seeded unit vector."""
    gmat = read_matrix_market(path)
    n = gmat.shape[0]
    if n > size_cap:
        raise SizeCapExceeded(f"{path}: order {n} exceeds the size cap {size_cap}")
    a = SparseSymMatrix((gmat + gmat.T).tocsr())
    return TrsProblem(a, parse_b_spec(b_spec, n), unit_gradient(n, seed), float(delta))


def _record(name, solver, sol, iters, wall):
    return BenchRecord(name, solver, sol.mv_count, sol.rel_res, sol.status.value, iters, None, wall)


def run_comparison(p: TrsProblem, cfg: BenchConfig, name="problem"):
    """Run the solvers selected in ``cfg`` at matched accuracy.

    The eigensolvers run first at ``cfg.tol``; GLTR then runs at the
    tolerance translated with the IRA eigenvector.  Returns the records and
    the MV ratio (None unless both eigensolvers ran).
    """
    stop = cfg.stopping()
    records = []
    ira_rep = None
    sols = {}
    for variant, label, key in (("IRA", "TRS_IRA", "ira"), ("IRRA", "TRS_IRRA", "irra")):
        if cfg.solver not in ("all", key):
            continue
        t0 = time.perf_counter()
        sol, rep = eig_trs_solve(p, stop, variant)
        sols[variant] = sol
        if variant == "IRA":
            ira_rep = rep
        records.append(_record(name, label, sol, rep.restarts, time.perf_counter() - t0))
    ratio = None
    if "IRA" in sols and "IRRA" in sols and sols["IRA"].mv_count > 0:
        ratio = (sols["IRA"].mv_count - sols["IRRA"].mv_count) / sols["IRA"].mv_count
        records[-1].ratio = ratio
    if cfg.solver in ("all", "gltr"):
        tol1 = ira_rep.translated_tol1 if ira_rep is not None else None
        if tol1 is None:
            why = "no IRA run" if ira_rep is None else f"IRA status {sols['IRA'].status.value}"
            log.warning("%s: GLTR uses the untranslated tol %g (%s)", name, cfg.tol, why)
            tol1 = cfg.tol
        t0 = time.perf_counter()
        sol = gltr_solve(p, tol1)
        records.append(_record(name, "GLTR", sol, sol.iterations, time.perf_counter() - t0))
    return records, ratio


def all_converged(records):
    return all(r.status in ("Interior", "Boundary") for r in records)


def _fmt_float(x):
    return "" if x is None else repr(float(x))


def emit_table(records, fmt="csv"):
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([r.matrix, r.solver, r.mvs, _fmt_float(r.res), r.status, r.iters, _fmt_float(r.ratio)])
        return buf.getvalue()
    if fmt != "md":
        raise ValueError(f"unknown format {fmt!r}")
    lines = ["| matrix | solver | MVs | Res | status | iters | ratio |", "|---|---|---:|---:|---|---:|---:|"]
    last = None
    for r in records:
        name = r.matrix if r.matrix != last else ""
        last = r.matrix
        ratio = "" if r.ratio is None else f"{100 * r.ratio:.2f}%"
        lines.append(f"| {name} | {r.solver} | {r.mvs} | {r.res:.2e} | {r.status} | {r.iters} | {ratio} |")
    return "\n".join(lines) + "\n"


def parse_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        out.append(
            BenchRecord(
                matrix=row["matrix"],
                solver=row["solver"],
                mvs=int(row["mvs"]),
                res=float(row["res"]),
                status=row["status"],
                iters=int(row["iters"]),
                ratio=float(row["ratio"]) if row["ratio"] else None,
            )
        )
    return out


def run_bench(cfg: BenchConfig):
    """All matrices times all radii, in input order."""
    records = []
    for path in cfg.matrices:
        stem = Path(path).stem
        for delta in cfg.deltas:
            p = build_problem(path, cfg.b_spec, delta, cfg.seed, cfg.size_cap)
            recs, _ = run_comparison(p, cfg, f"{stem}:delta={delta:g}")
            records.extend(recs)
    return records


def mean_ratio(records):
    vals = [r.ratio for r in records if r.ratio is not None and math.isfinite(r.ratio)]
    return sum(vals) / len(vals) if vals else None


def m_norm(p: TrsProblem):
    return PairOperator(p).one_norm_M()
