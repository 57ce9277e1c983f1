"""Benchmark harness: seeded instance batches, summaries, CSV and trace IO.

A batch runs one solver (drt, rfdrs, or tos) over `instances` seeded QP
instances of dimension n, instance i drawing its data from seed
master+i, and collects one RunRecord per instance.  Solver failures mark
the record and the batch continues.  Summaries report min/max/mean per
numeric column as aligned text and as CSV.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass

import numpy as np

from .baselines import run_baseline
from .drs import DrsConfig, DrsState
from .drt import DrtProblem, RunRecord, delta_stop, drt_solve, residual_stop
from .errors import InvariantViolation, OracleFailure, ParseError
from .hpe import hpe_update
from .qp import generate_instance, qp_operators, reference_solution, tau0_default

__all__ = [
    "CSV_COLUMNS",
    "BenchSpec",
    "initial_point",
    "run_single",
    "run_batch",
    "summarize",
    "format_summary",
    "write_summary_csv",
    "write_records",
    "read_records",
    "write_trace",
    "summary_csv_path",
]

CSV_COLUMNS = ("instance", "algo", "n", "iters", "extragrad", "null",
               "inner", "f2_evals", "time_s", "residual", "abs_err")
_NUMERIC_COLUMNS = CSV_COLUMNS[3:]

_ALGOS = ("drt", "rfdrs", "tos")
_STOPS = ("delta", "residual")


@dataclass(frozen=True)
class BenchSpec:
    n: int
    instances: int = 100
    definite: bool = True
    algo: str = "drt"
    stop: str = "delta"
    tol: float = 1e-6
    sigma: float = 0.99
    theta: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        if self.algo not in _ALGOS:
            raise ValueError(f"algo must be one of {_ALGOS}")
        if self.stop not in _STOPS:
            raise ValueError(f"stop must be one of {_STOPS}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")


def initial_point(n: int, seed: int) -> np.ndarray:
    """Gaussian direction scaled to the box diagonal, ||z0|| = 10*sqrt(n).

    The problem family has its unique solution at the origin, so a start
    at 0 would end every run in one step; a deterministic random
    direction at box-diagonal distance makes the iteration counts
    informative.  The stream is decorrelated from the instance draw.
    """
    rng = np.random.default_rng([1, seed])
    z = rng.standard_normal(n)
    nrm = float(np.linalg.norm(z))
    if nrm < 1e-8:  # essentially impossible; keep the start well scaled
        z = np.ones(n)
        nrm = float(np.sqrt(n))
    return (10.0 * np.sqrt(n) / nrm) * z


@dataclass
class SingleResult:
    record: RunRecord
    solution: np.ndarray | None
    state: DrsState | None = None   # drt only
    gamma: float | None = None      # drt only


def run_single(spec: BenchSpec, i: int, stats: dict | None = None) -> SingleResult:
    """Run instance i of the batch; raises on solver failure.

    stats, when given, accumulates "estimate_time_s" (power-method time)
    and "reference_time_s" (solution-oracle time), both excluded from the
    record's wall time.
    """
    seed = spec.seed + i
    inst = generate_instance(spec.n, spec.definite, seed)
    z0 = initial_point(spec.n, seed)

    t0 = time.perf_counter()
    try:
        z_star = reference_solution(inst)
    except OracleFailure:
        z_star = None   # abs_err stays nan, record otherwise valid
    if stats is not None:
        stats["reference_time_s"] = stats.get("reference_time_s", 0.0) \
            + time.perf_counter() - t0

    if spec.algo == "drt":
        t0 = time.perf_counter()
        ops = qp_operators(inst)
        if stats is not None:
            stats["estimate_time_s"] = stats.get("estimate_time_s", 0.0) \
                + time.perf_counter() - t0
        gamma = 2.0 * ops.eta * spec.sigma ** 2
        cfg = DrsConfig(gamma=gamma, sigma=spec.sigma, theta=spec.theta,
                        tau0=tau0_default(inst, z0), rho_tol=spec.tol,
                        eps_tol=spec.tol)
        prob = DrtProblem(A=ops.A, C=ops.C, F1=ops.F1, F2=ops.F2, cfg=cfg)
        stop = delta_stop(spec.tol) if spec.stop == "delta" \
            else residual_stop(spec.tol)
        state = DrsState.initial(z0, cfg)
        rec, quad = drt_solve(prob, stop, state=state)
        rec.instance = i
        if z_star is not None:
            rec.abs_err = float(np.linalg.norm(state.z - z_star))
        return SingleResult(rec, quad.x, state=state, gamma=gamma)

    t0 = time.perf_counter()
    rec, sol = run_baseline(inst, spec.algo, spec.tol, stop=spec.stop,
                            z0=z0, instance_id=i, z_star=z_star)
    # run_baseline builds its config (power method) before its timer;
    # fold that setup into the estimation bucket
    if stats is not None:
        stats["estimate_time_s"] = stats.get("estimate_time_s", 0.0) \
            + (time.perf_counter() - t0 - rec.time_s)
    return SingleResult(rec, sol)


def _verify_trace_equivalence(state: DrsState, gamma: float) -> None:
    # on every extragradient step the three residual readings agree:
    # ||z_k - z_{k-1}|| = gamma*||a+b|| = ||x - y|| to 1e-12
    for idx in range(state.n_extragradient):
        zb = state.hist_z_prev[idx]
        v = gamma * (state.hist_a[idx] + state.hist_b[idx])
        za = hpe_update(zb, v, 1.0)
        shift = float(np.linalg.norm(za - zb))
        vnorm = float(np.linalg.norm(v))
        res = float(np.linalg.norm(state.hist_x[idx] - state.hist_y[idx]))
        tol = 1e-12 * (1.0 + res)
        if abs(shift - vnorm) > tol or abs(shift - res) > tol:
            raise InvariantViolation(
                f"extragradient step {idx + 1}: residual readings diverge "
                f"({shift} vs {vnorm} vs {res})")


def run_batch(spec: BenchSpec, trace_path=None, stats: dict | None = None) -> list[RunRecord]:
    """All instances in order; per-instance failures marked, never raised.

    trace_path (drt only) writes one block per instance with the
    per-iteration step log and additionally cross-checks the residual
    equivalence on every extragradient step.
    """
    if trace_path is not None and spec.algo != "drt":
        raise ValueError("trace output requires the drt solver")
    records: list[RunRecord] = []
    blocks = []
    for i in range(spec.instances):
        try:
            result = run_single(spec, i, stats=stats)
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            records.append(RunRecord(instance=i, algo=spec.algo, n=spec.n,
                                     time_s=float("nan"),
                                     error=f"{type(exc).__name__}: {exc}"))
            continue
        records.append(result.record)
        if trace_path is not None and result.state is not None:
            _verify_trace_equivalence(result.state, result.gamma)
            blocks.append((i, result.state.trace))
    if trace_path is not None:
        write_trace(trace_path, blocks)
    return records


def write_trace(path, blocks) -> None:
    """Trace file: `# instance <i>` separators, then k,type,tau,residual,eps_b lines."""
    with open(path, "w") as fh:
        for i, trace in blocks:
            fh.write(f"# instance {i}\n")
            for t in trace:
                fh.write(f"{t.k},{t.step},{t.tau!r},{t.residual!r},"
                         f"{t.eps_b!r}\n")


def summarize(records) -> dict[str, tuple[float, float, float]]:
    """Per-column (min, max, mean) over clean records, nan cells skipped.

    Error-marked records are excluded entirely; a column with no finite
    values (e.g. abs_err when every oracle failed) reports nans.
    """
    if not records:
        raise ValueError("no records to summarize")
    good = [r for r in records if r.error is None]
    stats: dict[str, tuple[float, float, float]] = {}
    for col in _NUMERIC_COLUMNS:
        vals = [float(getattr(r, col)) for r in good]
        vals = [v for v in vals if np.isfinite(v)]
        if vals:
            stats[col] = (min(vals), max(vals), sum(vals) / len(vals))
        else:
            stats[col] = (float("nan"),) * 3
    return stats


def format_summary(stats, spec: BenchSpec | None = None,
                   errors: int = 0) -> str:
    lines = []
    if spec is not None:
        kind = "definite" if spec.definite else "semidefinite"
        head = (f"algo={spec.algo} n={spec.n} instances={spec.instances} "
                f"{kind} stop={spec.stop} tol={spec.tol:g}")
        if errors:
            head += f" ({errors} failed)"
        lines.append(head)
    lines.append(f"{'column':<10}{'min':>14}{'max':>14}{'mean':>14}")
    for col, (lo, hi, mean) in stats.items():
        lines.append(f"{col:<10}{lo:>14.6g}{hi:>14.6g}{mean:>14.6g}")
    return "\n".join(lines)


def write_summary_csv(stats, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("column", "min", "max", "mean"))
        for col, (lo, hi, mean) in stats.items():
            w.writerow((col, repr(lo), repr(hi), repr(mean)))


def write_records(records, path) -> None:
    """Records CSV; repr floats round-trip bit-exactly, error rows go nan."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            if r.error is not None:
                w.writerow([r.instance, r.algo, r.n] + ["nan"] * 8)
                continue
            w.writerow([r.instance, r.algo, r.n, r.iters, r.extragrad,
                        r.null, r.inner, r.f2_evals, repr(float(r.time_s)),
                        repr(float(r.residual)), repr(float(r.abs_err))])


def read_records(path) -> list[RunRecord]:
    """Inverse of write_records; a nan iters cell marks an error row."""
    records = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header != list(CSV_COLUMNS):
            raise ParseError("bad or missing header row", 1)
        for lineno, row in enumerate(rd, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise ParseError(
                    f"expected {len(CSV_COLUMNS)} cells, found {len(row)}",
                    lineno)
            try:
                instance, n = int(row[0]), int(row[2])
                nums = [float(c) for c in row[3:]]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if not np.isfinite(nums[0]):
                records.append(RunRecord(instance=instance, algo=row[1], n=n,
                                         time_s=float("nan"),
                                         error="error row"))
                continue
            records.append(RunRecord(
                instance=instance, algo=row[1], n=n, iters=int(nums[0]),
                extragrad=int(nums[1]), null=int(nums[2]), inner=int(nums[3]),
                f2_evals=int(nums[4]), time_s=nums[5], residual=nums[6],
                abs_err=nums[7]))
    return records


def summary_csv_path(out_path) -> str:
    """Sibling path for the summary CSV next to a records CSV."""
    stem, _ = os.path.splitext(str(out_path))
    return stem + ".summary.csv"
