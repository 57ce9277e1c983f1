"""Four-operator splitting: Douglas-Rachford outer loop, Tseng inner solver.

Solves 0 in A(z) + C(z) + F1(z) + F2(z) by running the inexact
Douglas-Rachford iteration on A and B = C + F1 + F2, where each B-solve
is delegated to the Tseng forward-backward loop on the strongly monotone
prox subproblem.  The inner output quadruple maps to the outer triple as

    x = z_tilde,  b = (z_hat + z_prev_inner - (z_next + z_tilde))/gamma,
    eps_b = ||z_prime - z_tilde||^2 / (4 eta),

which satisfies the outer tolerance contract by the inner exit test.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .drs import (EXTRAGRADIENT, BSolver, DrsConfig, DrsState, Quadruple,
                  check_termination, drs_ergodic, drs_iterate)
from .errors import IterationBudgetExceeded
from .operators import CocoerciveMap, LipschitzMap, SplittableOperator
from .tseng import TsengProblem, gamma_max, tseng_solve

__all__ = [
    "DrtProblem",
    "RunRecord",
    "StopRule",
    "tolerance_stop",
    "delta_stop",
    "residual_stop",
    "drt_bsolver",
    "drt_solve",
]

StopRule = Callable[[DrsState], bool]


@dataclass(frozen=True)
class DrtProblem:
    A: SplittableOperator
    C: SplittableOperator
    F1: LipschitzMap
    F2: CocoerciveMap
    cfg: DrsConfig

    def __post_init__(self):
        gmax = gamma_max(self.F2.eta, self.F1.L, self.cfg.sigma)
        if self.cfg.gamma > gmax * (1.0 + 1e-12):
            raise ValueError(
                f"gamma={self.cfg.gamma} exceeds gamma_max={gmax}")


@dataclass
class RunRecord:
    """Per-solve telemetry; field order matches the benchmark CSV schema."""

    instance: int = -1
    algo: str = "drt"
    n: int = 0
    iters: int = 0
    extragrad: int = 0
    null: int = 0
    inner: int = 0
    f2_evals: int = 0
    time_s: float = 0.0
    residual: float = float("nan")
    abs_err: float = float("nan")
    error: str | None = field(default=None, compare=False)


def tolerance_stop(cfg: DrsConfig, mode: str = "both") -> StopRule:
    """Tolerance rule on the freshest quadruple.

    Pointwise: ||x-y|| <= rho_tol and eps_b <= eps_tol (eps_a = 0).
    Ergodic: same test on the uniform extragradient averages.  mode is
    "pointwise", "ergodic", or "both" (pointwise checked first).
    """
    if mode not in ("pointwise", "ergodic", "both"):
        raise ValueError(f"unknown tolerance mode: {mode}")

    def fired(state: DrsState) -> bool:
        if state.last is None:
            return False
        if mode in ("pointwise", "both"):
            x, y, a, b, eps_b = state.last
            if check_termination(x, y, a, b, 0.0, eps_b, cfg):
                return True
        if mode in ("ergodic", "both") and state.n_extragradient >= 1:
            e = drs_ergodic(state)
            if check_termination(e.x, e.y, e.a, e.b, e.eps_a, e.eps_b, cfg):
                return True
        return False

    return fired


def delta_stop(tol: float) -> StopRule:
    """Successive-iterate rule ||z_k - z_{k-1}|| <= tol, extragradient steps only."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")

    def fired(state: DrsState) -> bool:
        if state.last_step != EXTRAGRADIENT:
            return False
        return float(np.linalg.norm(state.z - state.z_prev)) <= tol

    return fired


def residual_stop(tol: float) -> StopRule:
    """Residual rule gamma*||a+b|| = ||x-y|| <= tol, every step."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")

    def fired(state: DrsState) -> bool:
        return state.last is not None and state.residual <= tol

    return fired


def drt_bsolver(p: DrtProblem, max_inner: int = 1000,
                inner_log: list | None = None,
                cert_log: list | None = None) -> BSolver:
    """B-solver running the inner Tseng loop on each outer request.

    Receives the pre-update tolerance tau_{k-1} and prox center z_{k-1};
    inner iteration counts append to inner_log, per-step certificates to
    cert_log when given.  Inner budget errors carry outer-call context.
    """
    call = 0

    def solve(z_prev, tau, gamma):
        nonlocal call
        call += 1
        sub = TsengProblem(C=p.C, F1=p.F1, F2=p.F2, z_hat=z_prev,
                           gamma=gamma, tau_hat=tau, sigma=p.cfg.sigma)
        try:
            out = tseng_solve(sub, max_inner=max_inner, cert_log=cert_log)
        except IterationBudgetExceeded as exc:
            raise IterationBudgetExceeded(
                f"outer B-solve call {call}: {exc}") from exc
        if inner_log is not None:
            inner_log.append(out.inner_iters)
        x = out.z_tilde
        b = (z_prev + out.z_prev - (out.z_next + out.z_tilde)) / gamma
        d = out.z_prime_prev - out.z_tilde
        eps_b = float(d @ d) / (4.0 * p.F2.eta)
        return x, b, eps_b

    return solve


def drt_solve(p: DrtProblem, stop: StopRule, z0=None, max_inner: int = 1000,
              state: DrsState | None = None,
              inner_cert_log: list | None = None) -> tuple[RunRecord, Quadruple]:
    """Run the outer loop until the stop rule fires.

    z0 defaults to the origin.  Passing a preconstructed state keeps the
    full iteration history accessible to the caller afterwards.  The
    cocoercive map is wrapped with an evaluation counter so the record's
    f2_evals is measured, not inferred.
    """
    if state is None:
        if z0 is None:
            z0 = np.zeros(p.A.dim)
        state = DrsState.initial(z0, p.cfg)

    calls = [0]
    base_eval = p.F2.eval

    def counted(zz):
        calls[0] += 1
        return base_eval(zz)

    counted_p = DrtProblem(A=p.A, C=p.C, F1=p.F1,
                           F2=CocoerciveMap(eval=counted, eta=p.F2.eta),
                           cfg=p.cfg)
    inner_log: list[int] = []
    bsolver = drt_bsolver(counted_p, max_inner=max_inner,
                          inner_log=inner_log, cert_log=inner_cert_log)

    t0 = time.perf_counter()
    while True:
        drs_iterate(state, p.cfg, bsolver, p.A)
        if stop(state):
            break
    elapsed = time.perf_counter() - t0

    record = RunRecord(
        algo="drt",
        n=p.A.dim,
        iters=state.k,
        extragrad=state.n_extragradient,
        null=state.n_null,
        inner=sum(inner_log),
        f2_evals=calls[0],
        time_s=elapsed,
        residual=state.residual,
    )
    return record, state.last
