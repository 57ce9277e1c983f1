"""Hybrid proximal extragradient core.

Step certificates for the relative-error proximal condition, the
extragradient update, ergodic aggregation of certified steps, and the
rate-envelope calculators (pointwise, ergodic, and linear under strong
monotonicity) used as oracles by the solver tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvariantViolation, StateError
from .operators import EnlargementTriple, slack, transport_ergodic

__all__ = [
    "HpeStepCertificate",
    "verify_hpe_inequality",
    "hpe_update",
    "ErgodicAccumulator",
    "RateEnvelope",
    "pointwise_bound",
    "ergodic_bound",
    "strong_rate",
]


class HpeStepCertificate(NamedTuple):
    """One inexact proximal step with its relative-error data.

    The certified inequality is
    ``||lam*v + z_tilde - z_prev||^2 + 2*lam*eps <= sigma^2 ||z_tilde - z_prev||^2``
    for some v in T^eps(z_tilde).
    """

    z_prev: np.ndarray
    z_tilde: np.ndarray
    v: np.ndarray
    eps: float
    lam: float
    sigma: float


def verify_hpe_inequality(cert: HpeStepCertificate) -> bool:
    """Check the relative-error inequality with 1e-10 relative slack."""
    d = cert.lam * cert.v + cert.z_tilde - cert.z_prev
    lhs = float(d @ d) + 2.0 * cert.lam * cert.eps
    r = cert.z_tilde - cert.z_prev
    rhs = cert.sigma ** 2 * float(r @ r)
    return lhs <= rhs + slack(rhs)


def hpe_update(z_prev: np.ndarray, v: np.ndarray, lam: float) -> np.ndarray:
    """Extragradient update z_prev - lam*v."""
    return z_prev - lam * v


class ErgodicAccumulator:
    """Weighted-average aggregation of certified steps.

    Stores the per-step history (z_tilde, v, eps, lam) and evaluates the
    averages on read, using the expanded correction form

        ebar = (1/Lam) sum_l lam_l (eps_l + <z_tilde_l - zbar, v_l>).
    """

    def __init__(self):
        self._z = []
        self._v = []
        self._eps = []
        self._lam = []

    def push(self, z_tilde, v, eps, lam):
        if lam <= 0:
            raise ValueError("lam must be positive")
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        self._z.append(np.asarray(z_tilde, dtype=float))
        self._v.append(np.asarray(v, dtype=float))
        self._eps.append(float(eps))
        self._lam.append(float(lam))

    @property
    def count(self):
        return len(self._lam)

    @property
    def Lambda(self):
        return float(sum(self._lam))

    def read(self) -> EnlargementTriple:
        if not self._lam:
            raise StateError("accumulator is empty")
        lam = np.asarray(self._lam)
        Lam = lam.sum()
        Z = np.stack(self._z)
        V = np.stack(self._v)
        eps = np.asarray(self._eps)
        zbar = (lam @ Z) / Lam
        vbar = (lam @ V) / Lam
        corr = np.einsum("ij,ij->i", Z - zbar, V)
        ebar = float(lam @ (eps + corr)) / Lam
        scale = float(lam @ (np.abs(eps) + np.abs(corr))) / Lam
        if ebar < -slack(scale):
            raise InvariantViolation(f"ergodic eps is negative: {ebar}")
        return EnlargementTriple(zbar, vbar, max(ebar, 0.0))

    def read_transport(self) -> EnlargementTriple:
        # same averages through the transportation formula; oracle path
        if not self._lam:
            raise StateError("accumulator is empty")
        lam = np.asarray(self._lam)
        triples = [EnlargementTriple(z, v, e)
                   for z, v, e in zip(self._z, self._v, self._eps)]
        return transport_ergodic(triples, lam / lam.sum())


@dataclass(frozen=True)
class RateEnvelope:
    """Constants entering the HPE complexity bounds.

    d0 is the distance from the start point to the solution set; it must
    come from a reference solve, never a silent estimate.  mu is the
    strong-monotonicity modulus (0 when absent).
    """

    d0: float
    lambda_min: float
    sigma: float
    mu: float = 0.0

    def __post_init__(self):
        if self.d0 < 0 or self.lambda_min <= 0 or self.mu < 0:
            raise ValueError("invalid envelope constants")
        if not 0 <= self.sigma < 1:
            raise ValueError("sigma must lie in [0, 1)")

    @property
    def alpha(self) -> float:
        """Linear-rate exponent base, defined for mu > 0; lies in (0, 1)."""
        if self.mu <= 0:
            raise ValueError("alpha requires mu > 0")
        return 1.0 / (1.0 / (2.0 * self.lambda_min * self.mu)
                      + 1.0 / (1.0 - self.sigma ** 2))


def pointwise_bound(env: RateEnvelope, j: int) -> tuple[float, float]:
    """Pointwise O(1/sqrt(j)) residual and O(1/j) eps bounds.

    Some index i <= j carries a residual v_i with
    ``||v_i|| <= rho_bound`` and eps_i with ``eps_i <= eps_bound``.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    s = env.sigma
    if s >= 1:
        raise ValueError("sigma must be < 1")
    rho = env.d0 / (env.lambda_min * np.sqrt(j)) * np.sqrt((1 + s) / (1 - s))
    eps = s ** 2 * env.d0 ** 2 / (2 * (1 - s ** 2) * env.lambda_min * j)
    return float(rho), float(eps)


def ergodic_bound(env: RateEnvelope, j: int) -> tuple[float, float]:
    """Ergodic O(1/j) bounds on ||vbar_j|| and ebar_j."""
    if j < 1:
        raise ValueError("j must be >= 1")
    s = env.sigma
    if s >= 1:
        raise ValueError("sigma must be < 1")
    rho = 2.0 * env.d0 / (env.lambda_min * j)
    eps = 2.0 * (1 + s / np.sqrt(1 - s ** 2)) * env.d0 ** 2 / (env.lambda_min * j)
    return float(rho), float(eps)


def strong_rate(env: RateEnvelope, j: int) -> tuple[float, float]:
    """Linear-decay bounds under strong monotonicity (mu > 0)."""
    if env.mu <= 0:
        raise ValueError("strong_rate requires mu > 0")
    if j < 1:
        raise ValueError("j must be >= 1")
    s = env.sigma
    a = env.alpha
    v_bound = (np.sqrt((1 + s) / (1 - s))
               * (1 - a) ** ((j - 1) / 2.0) / env.lambda_min * env.d0)
    eps_bound = (s ** 2 / (2 * (1 - s ** 2))
                 * (1 - a) ** (j - 1) / env.lambda_min * env.d0 ** 2)
    return float(v_bound), float(eps_bound)
