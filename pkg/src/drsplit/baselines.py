"""Comparison algorithms for the constrained-QP benchmark.

Two fixed-point schemes over the same three-piece decomposition
(box, nullspace, affine forward map): a three-operator splitting (TOS)
iteration and a relaxed forward-Douglas-Rachford (rFDRS) iteration,
both run with step gamma = 1.99*beta for the scheme's own cocoercivity
constant beta and unit relaxation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .drt import RunRecord
from .errors import IterationBudgetExceeded
from .operators import project_nullspace
from .qp import QpInstance, estimate_beta_V, estimate_eta

__all__ = [
    "BaselineConfig",
    "tos_config",
    "rfdrs_config",
    "tos_iterate",
    "rfdrs_iterate",
    "run_baseline",
]


@dataclass(frozen=True)
class BaselineConfig:
    gamma: float
    beta: float
    lam: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0.0):
            raise ValueError("beta must be positive and finite")
        # pinned step rule for both schemes
        if abs(self.gamma - 1.99 * self.beta) > 1e-9 * self.beta:
            raise ValueError("gamma must equal 1.99*beta")
        if not (np.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError("lam must be positive")


def tos_config(inst: QpInstance) -> BaselineConfig:
    beta = estimate_eta(inst.Q)
    if not np.isfinite(beta):
        raise ValueError("zero quadratic term: beta is unbounded")
    return BaselineConfig(gamma=1.99 * beta, beta=beta)


def rfdrs_config(inst: QpInstance) -> BaselineConfig:
    beta = estimate_beta_V(inst.Q, inst.K)
    if not np.isfinite(beta):
        raise ValueError("P_M Q P_M vanishes: beta is unbounded")
    return BaselineConfig(gamma=1.99 * beta, beta=beta)


def tos_iterate(z, inst: QpInstance, cfg: BaselineConfig):
    """One TOS step: box point, shifted nullspace projection, relaxed update."""
    z = np.asarray(z, dtype=float)
    xB = np.clip(z, inst.lo, inst.hi)
    xA = project_nullspace(
        inst.K, 2.0 * xB - z - cfg.gamma * (inst.Q @ xB + inst.e))
    return z + cfg.lam * (xA - xB)


def rfdrs_iterate(z, inst: QpInstance, cfg: BaselineConfig):
    """One rFDRS step; the forward term is evaluated through P_M."""
    z = np.asarray(z, dtype=float)
    x = project_nullspace(inst.K, z)
    w = np.clip(
        2.0 * x - z - cfg.gamma * project_nullspace(inst.K,
                                                    inst.Q @ x + inst.e),
        inst.lo, inst.hi)
    return z + cfg.lam * (w - x)


def run_baseline(inst: QpInstance, algo: str, tol: float,
                 stop: str = "delta", z0=None, max_iter: int = 10 ** 6,
                 instance_id: int = -1, z_star=None):
    """Drive a baseline to its stopping rule.

    stop="delta" tests ||z+ - z|| <= tol, stop="residual" tests the
    block gap ||z+ - z||/lam <= tol (identical at unit relaxation).
    Returns (record, solution) where the solution is the scheme's own
    solution-approximating block: P_X(z) for TOS, P_M(z) for rFDRS.
    abs_err, when z_star is given, is measured on the governing iterate.
    """
    if algo == "tos":
        cfg = tos_config(inst)
        step = tos_iterate
    elif algo == "rfdrs":
        cfg = rfdrs_config(inst)
        step = rfdrs_iterate
    else:
        raise ValueError(f"unknown baseline {algo!r}")
    if stop not in ("delta", "residual"):
        raise ValueError(f"unknown stop rule {stop!r}")
    z = np.zeros(inst.n) if z0 is None else np.asarray(z0, dtype=float).copy()
    iters = 0
    resid = float("nan")
    t0 = time.perf_counter()
    for _ in range(max_iter):
        z_new = step(z, inst, cfg)
        shift = float(np.linalg.norm(z_new - z))
        z = z_new
        iters += 1
        resid = shift / cfg.lam
        gap = shift if stop == "delta" else resid
        if gap <= tol:
            break
    else:
        raise IterationBudgetExceeded(
            f"{algo} did not reach tol {tol} in {max_iter} iterations")
    elapsed = time.perf_counter() - t0
    if algo == "tos":
        sol = np.clip(z, inst.lo, inst.hi)
    else:
        sol = project_nullspace(inst.K, z)
    abs_err = float("nan")
    if z_star is not None:
        abs_err = float(np.linalg.norm(z - np.asarray(z_star, dtype=float)))
    rec = RunRecord(instance=instance_id, algo=algo, n=inst.n, iters=iters,
                    extragrad=0, null=0, inner=0, f2_evals=iters,
                    time_s=elapsed, residual=resid, abs_err=abs_err)
    return rec, sol
