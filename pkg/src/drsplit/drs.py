"""Inexact Douglas-Rachford splitting with extragradient and null steps.

The outer loop solves 0 in A(z) + B(z) through the splitting operator
whose zeros are y + gamma*b with b in B(x), a in A(y), gamma*a + y =
x - gamma*b and a + b = 0.  A B-solver produces an approximate resolvent
triple (x, b, eps_b) within a tolerance tau; the relative-error test
decides between an extragradient update of the governing iterate and a
null step that only shrinks tau.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import (ContractViolation, InvariantViolation,
                     IterationBudgetExceeded, StateError)
from .hpe import HpeStepCertificate, hpe_update, verify_hpe_inequality
from .operators import SplittableOperator, slack

__all__ = [
    "EXTRAGRADIENT",
    "NULL",
    "DrsConfig",
    "DrsState",
    "Quadruple",
    "ErgodicQuadruple",
    "TraceRecord",
    "BSolver",
    "exact_bsolver",
    "drs_iterate",
    "check_termination",
    "drs_ergodic",
    "embed_hpe",
    "null_step_bounds",
]

EXTRAGRADIENT = "extragradient"
NULL = "null"

# (z_prev, tau, gamma) -> (x, b, eps_b) with ||gamma*b + x - z_prev||^2
# + 2*gamma*eps_b <= tau and b in B^{eps_b}(x).
BSolver = Callable[[np.ndarray, float, float], tuple[np.ndarray, np.ndarray, float]]


@dataclass(frozen=True)
class DrsConfig:
    gamma: float
    sigma: float
    theta: float
    tau0: float
    rho_tol: float
    eps_tol: float
    max_iter: int = 10000

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.rho_tol <= 0 or self.eps_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


class Quadruple(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    b: np.ndarray
    eps_b: float


class ErgodicQuadruple(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    b: np.ndarray
    eps_a: float
    eps_b: float


class TraceRecord(NamedTuple):
    k: int
    step: str
    tau: float
    residual: float
    eps_b: float


class DrsState:
    """Mutable per-solve state: governing iterate, tolerance ladder, history.

    tau always equals theta**beta * tau0 in exponent arithmetic.  The
    extragradient history (one entry per extragradient index) feeds the
    ergodic averages and the step certificates; null steps only append to
    the trace.
    """

    def __init__(self, z0, tau0, theta):
        self.z = np.asarray(z0, dtype=float).copy()
        self.z_prev = self.z.copy()
        self.tau0 = float(tau0)
        self.theta = float(theta)
        self.tau = float(tau0)
        self.k = 0
        self.beta = 0
        self.step_log: list[str] = []
        self.last: Quadruple | None = None
        self.hist_z_prev: list[np.ndarray] = []
        self.hist_x: list[np.ndarray] = []
        self.hist_y: list[np.ndarray] = []
        self.hist_a: list[np.ndarray] = []
        self.hist_b: list[np.ndarray] = []
        self.hist_eps_b: list[float] = []
        self.trace: list[TraceRecord] = []

    @classmethod
    def initial(cls, z0, cfg: DrsConfig) -> "DrsState":
        return cls(z0, cfg.tau0, cfg.theta)

    @property
    def n_extragradient(self) -> int:
        return len(self.hist_x)

    @property
    def n_null(self) -> int:
        return self.beta

    @property
    def last_step(self) -> str | None:
        return self.step_log[-1] if self.step_log else None

    @property
    def residual(self) -> float:
        if self.last is None:
            raise StateError("no iteration taken yet")
        d = self.last.x - self.last.y
        return float(np.linalg.norm(d))


def exact_bsolver(opB: SplittableOperator) -> BSolver:
    """B-solver from an exact resolvent oracle; eps_b = 0, any tau."""

    def solve(z_prev, tau, gamma):
        x, u = opB.resolvent(gamma, z_prev)
        return x, u, 0.0

    return solve


def drs_iterate(state: DrsState, cfg: DrsConfig, bsolver: BSolver,
                A: SplittableOperator) -> DrsState:
    """One outer iteration: B-solve, A-resolvent, classify, update.

    Calls the B-solver with (z_{k-1}, tau_{k-1}, gamma), checks its
    contract, computes (y, a) through the resolvent of A at x - gamma*b,
    and applies the relative-error test: on success the extragradient
    update moves z and keeps tau, otherwise z freezes and tau shrinks by
    theta.  Mutates and returns state.
    """
    if state.k >= cfg.max_iter:
        raise IterationBudgetExceeded(f"max_iter={cfg.max_iter} reached")
    gamma = cfg.gamma
    tau_prev = state.tau
    z = state.z

    x, b, eps_b = bsolver(z, tau_prev, gamma)
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    eps_b = float(eps_b)
    if eps_b < 0:
        raise ContractViolation("bsolver returned negative eps_b")
    r_b = gamma * b + x - z
    lhs = float(r_b @ r_b) + 2.0 * gamma * eps_b
    if lhs > tau_prev + slack(tau_prev):
        raise ContractViolation(
            f"bsolver output violates its tolerance: {lhs} > {tau_prev}")

    y, a = A.resolvent(gamma, x - gamma * b)
    quad = Quadruple(x, y, a, b, eps_b)
    residual = float(np.linalg.norm(x - y))

    # identity gamma*(a+b) = x - y, exact modulo round-off
    v = gamma * (a + b)
    if abs(float(np.linalg.norm(v)) - residual) > slack(residual):
        raise ContractViolation("gamma*||a+b|| deviates from ||x-y||")

    r_test = gamma * b + y - z
    rhs = cfg.sigma ** 2 * float(r_test @ r_test)
    # both sides are squares of vectors computed to absolute accuracy
    # ~1e-16*scale; below (1e-13*scale)^2 their ordering is round-off, and
    # the exact-arithmetic value of lhs there is 0 (b recomposes x and z),
    # so the tie must break toward extragradient or tau underflows
    scale = float(np.linalg.norm(z) + np.linalg.norm(x)
                  + np.linalg.norm(y) + gamma * np.linalg.norm(b))
    noise = (1e-13 * (1.0 + scale)) ** 2
    state.z_prev = z
    if lhs <= rhs + noise:  # inclusive: equality classifies as extragradient
        state.hist_z_prev.append(z)
        state.hist_x.append(x)
        state.hist_y.append(y)
        state.hist_a.append(a)
        state.hist_b.append(b)
        state.hist_eps_b.append(eps_b)
        state.z = hpe_update(z, v, 1.0)
        step = EXTRAGRADIENT
    else:
        state.z = z
        state.beta += 1
        state.tau = cfg.theta ** state.beta * cfg.tau0
        step = NULL
    state.k += 1
    state.step_log.append(step)
    state.last = quad
    state.trace.append(TraceRecord(state.k, step, state.tau, residual, eps_b))
    return state


def check_termination(x, y, a, b, eps_a: float, eps_b: float,
                      cfg: DrsConfig) -> bool:
    """Tolerance test on a quadruple: ||x-y|| <= rho and eps_a+eps_b <= eps.

    Precondition: gamma*||a+b|| = ||x-y|| to 1e-10 relative slack; a
    violation signals a corrupted quadruple, not a negative answer.
    Comparisons are inclusive.
    """
    residual = float(np.linalg.norm(np.asarray(x) - np.asarray(y)))
    vnorm = cfg.gamma * float(np.linalg.norm(np.asarray(a) + np.asarray(b)))
    if abs(vnorm - residual) > slack(residual):
        raise ContractViolation("gamma*||a+b|| deviates from ||x-y||")
    return residual <= cfg.rho_tol and eps_a + eps_b <= cfg.eps_tol


def drs_ergodic(state: DrsState, upto: int | None = None) -> ErgodicQuadruple:
    """Uniform averages over the first `upto` extragradient indices.

    eps_a_bar = (1/j) sum <y_l - ybar, a_l>;
    eps_b_bar = (1/j) sum (eps_b_l + <x_l - xbar, b_l>).
    Both are >= 0 up to round-off (transported enlargements).
    """
    j = state.n_extragradient if upto is None else upto
    if j < 1:
        raise StateError("no extragradient steps taken yet")
    if j > state.n_extragradient:
        raise ValueError("upto exceeds extragradient count")
    X = np.stack(state.hist_x[:j])
    Y = np.stack(state.hist_y[:j])
    Aa = np.stack(state.hist_a[:j])
    Bb = np.stack(state.hist_b[:j])
    eps = np.asarray(state.hist_eps_b[:j])
    xbar = X.mean(axis=0)
    ybar = Y.mean(axis=0)
    abar = Aa.mean(axis=0)
    bbar = Bb.mean(axis=0)
    corr_a = np.einsum("ij,ij->i", Y - ybar, Aa)
    corr_b = np.einsum("ij,ij->i", X - xbar, Bb)
    eps_a_bar = float(corr_a.mean())
    eps_b_bar = float((eps + corr_b).mean())
    scale_a = float(np.abs(corr_a).mean())
    scale_b = float((np.abs(eps) + np.abs(corr_b)).mean())
    if eps_a_bar < -slack(scale_a) or eps_b_bar < -slack(scale_b):
        raise InvariantViolation("negative ergodic enlargement")
    return ErgodicQuadruple(xbar, ybar, abar, bbar,
                            max(eps_a_bar, 0.0), max(eps_b_bar, 0.0))


def embed_hpe(state: DrsState, cfg: DrsConfig) -> HpeStepCertificate:
    """Certificate of the last step as an inexact proximal step (lam = 1).

    Only valid right after an extragradient step: z_tilde = y + gamma*b,
    v = gamma*(a+b), eps = gamma*eps_b against the splitting operator.
    """
    if state.last is None or state.last_step != EXTRAGRADIENT:
        raise StateError("certificate requires a completed extragradient step")
    x, y, a, b, eps_b = state.last
    gamma = cfg.gamma
    cert = HpeStepCertificate(
        z_prev=state.z_prev,
        z_tilde=y + gamma * b,
        v=gamma * (a + b),
        eps=gamma * eps_b,
        lam=1.0,
        sigma=cfg.sigma,
    )
    if not verify_hpe_inequality(cert):
        raise InvariantViolation("extragradient step failed its certificate")
    return cert


def null_step_bounds(tau0: float, sigma: float, beta_prev: int,
                     theta: float) -> tuple[float, float]:
    """Upper bounds valid at any null step taken with beta_prev prior nulls.

    Returns ((1 + 1/sigma) * sqrt(theta**beta_prev * tau0),
    theta**beta_prev * tau0 / 2) bounding the residual ||x - y|| and
    gamma*eps_b respectively.
    """
    tau = theta ** beta_prev * tau0
    return (1.0 + 1.0 / sigma) * float(np.sqrt(tau)), tau / 2.0
