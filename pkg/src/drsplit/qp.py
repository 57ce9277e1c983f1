"""Constrained-QP benchmark family and its solution oracles.

Instances minimize 0.5 <Qz, z> + <e, z> subject to Kz = 0 and
z in X = [0, 10]^n, with e the all-ones vector and K a single +/-1 row.
The operator decomposition used by the solvers is A = N_M (M = null(K)),
C = N_X, F1 = 0 and F2(z) = Qz + e with eta = 1/||Q||.

Oracles: KKT active-set enumeration for n <= 6, a high-accuracy
three-operator fixed-point reference for larger n, an exact-resolvent
Douglas-Rachford reference for the splitting operator's zero set, and a
box-constrained QP solver used for exact resolvents of C + F2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import OracleFailure, ParseError
from .operators import (BoxNormalCone, CocoerciveMap, LipschitzMap,
                        NullspaceNormalCone, SplittableOperator,
                        project_nullspace)

__all__ = [
    "QpInstance",
    "QpOperators",
    "generate_instance",
    "qp_operators",
    "estimate_eta",
    "estimate_beta_V",
    "reference_solution",
    "kkt_check",
    "objective",
    "box_qp_solve",
    "box_solution",
    "BoxAffineSum",
    "drs_reference_zero",
    "tau0_default",
    "save_instance",
    "load_instance",
]

# eigvalsh-based PSD validation is skipped above this size (cost only;
# generated instances are PSD by construction)
_PSD_CHECK_MAX_N = 200


@dataclass(frozen=True)
class QpInstance:
    Q: np.ndarray
    e: np.ndarray
    K: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    definite: bool
    seed: int

    def __post_init__(self):
        n = self.Q.shape[0]
        if self.Q.shape != (n, n):
            raise ValueError("Q must be square")
        for name in ("e", "K", "lo", "hi"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have length {n}")
        if not np.allclose(self.Q, self.Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric to 1e-12")
        if not np.all(np.abs(self.K) == 1.0):
            raise ValueError("K entries must be +1 or -1")
        if n <= _PSD_CHECK_MAX_N:
            w = np.linalg.eigvalsh(self.Q)
            if w[0] < -1e-10:
                raise ValueError(f"Q has eigenvalue {w[0]} < -1e-10")

    @property
    def n(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class QpOperators:
    A: NullspaceNormalCone
    C: BoxNormalCone
    F1: LipschitzMap
    F2: CocoerciveMap
    eta: float


def generate_instance(n: int, definite: bool, seed: int) -> QpInstance:
    """Seeded random instance: Q = M^T M / n (+ I when definite).

    M is n x n for definite instances and ceil(n/2) x n for semidefinite
    ones (so rank(Q) <= ceil(n/2)); K is an i.i.d. +/-1 row.  Bitwise
    deterministic for a fixed seed (M is drawn before K).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    rows = n if definite else (n + 1) // 2
    M = rng.standard_normal((rows, n))
    Q = M.T @ M / n
    if definite:
        Q = Q + np.eye(n)
    Q = (Q + Q.T) / 2.0
    K = rng.integers(0, 2, size=n) * 2.0 - 1.0
    return QpInstance(Q=Q, e=np.ones(n), K=K, lo=np.zeros(n),
                      hi=10.0 * np.ones(n), definite=bool(definite),
                      seed=int(seed))


def _power_norm(matvec, n, tol=1e-12, max_iter=10000):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    rho_prev = None
    rho = 0.0
    for _ in range(max_iter):
        y = matvec(x)
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return 0.0
        rho = float(x @ y)
        if rho_prev is not None and abs(rho - rho_prev) <= tol * abs(rho):
            break
        x = y / ny
        rho_prev = rho
    return abs(rho)


def estimate_eta(Q) -> float:
    """Reciprocal spectral norm of Q by power iteration; inf for the zero map."""
    Q = np.asarray(Q, dtype=float)
    nrm = _power_norm(lambda v: Q @ v, Q.shape[0])
    return float("inf") if nrm == 0.0 else 1.0 / nrm


def estimate_beta_V(Q, K) -> float:
    """Reciprocal spectral norm of P_M Q P_M with M = null(K)."""
    Q = np.asarray(Q, dtype=float)
    K = np.asarray(K, dtype=float)
    n = K.size

    def matvec(v):
        w = v - (K @ v / n) * K
        w = Q @ w
        return w - (K @ w / n) * K

    nrm = _power_norm(matvec, n)
    return float("inf") if nrm == 0.0 else 1.0 / nrm


def qp_operators(inst: QpInstance) -> QpOperators:
    """Operator decomposition with the estimated cocoercivity constant."""
    eta = estimate_eta(inst.Q)
    if not np.isfinite(eta):
        raise ValueError("zero quadratic term: eta is unbounded")
    Q, e = inst.Q, inst.e
    return QpOperators(
        A=NullspaceNormalCone(inst.K),
        C=BoxNormalCone(inst.lo, inst.hi),
        F1=LipschitzMap.zero(),
        F2=CocoerciveMap(eval=lambda z: Q @ z + e, eta=eta),
        eta=eta,
    )


def objective(inst: QpInstance, z) -> float:
    z = np.asarray(z, dtype=float)
    return float(0.5 * z @ inst.Q @ z + inst.e @ z)


def kkt_check(inst: QpInstance, z, tol: float = 1e-8) -> bool:
    """Feasibility plus stationarity of z for the instance, to tolerance.

    Stationarity requires a scalar multiplier lam with
    -(Qz + e + lam*K^T) in N_X(z); each coordinate contributes an
    interval constraint on lam and the test intersects them.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < inst.lo - tol) or np.any(z > inst.hi + tol):
        return False
    if abs(float(inst.K @ z)) > tol * (1.0 + float(np.linalg.norm(z))):
        return False
    w = inst.Q @ z + inst.e
    lam_lo, lam_hi = -np.inf, np.inf
    for i in range(z.size):
        Ki = inst.K[i]
        if z[i] <= inst.lo[i] + tol:        # u_i <= 0: lam*Ki >= -w_i
            b = -w[i] - tol
            if Ki > 0:
                lam_lo = max(lam_lo, b)
            else:
                lam_hi = min(lam_hi, -b)
        elif z[i] >= inst.hi[i] - tol:      # u_i >= 0: lam*Ki <= -w_i
            b = -w[i] + tol
            if Ki > 0:
                lam_hi = min(lam_hi, b)
            else:
                lam_lo = max(lam_lo, -b)
        else:                               # interior: lam*Ki = -w_i
            c = -w[i]
            if Ki > 0:
                lam_lo = max(lam_lo, c - tol)
                lam_hi = min(lam_hi, c + tol)
            else:
                lam_lo = max(lam_lo, -c - tol)
                lam_hi = min(lam_hi, -c + tol)
    return lam_lo <= lam_hi


def _kkt_enumerate(inst: QpInstance, tol: float = 1e-8) -> np.ndarray:
    # 3^n active-set patterns: each coordinate at lo, free, or at hi
    n = inst.n
    best = None
    best_obj = np.inf
    best_nrm = np.inf
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pat = np.asarray(pattern)
        fidx = np.flatnonzero(pat == 1)
        z = np.where(pat == 0, inst.lo, inst.hi)
        nf = fidx.size
        if nf:
            gidx = np.flatnonzero(pat != 1)
            A = np.zeros((nf + 1, nf + 1))
            A[:nf, :nf] = inst.Q[np.ix_(fidx, fidx)]
            A[:nf, nf] = inst.K[fidx]
            A[nf, :nf] = inst.K[fidx]
            rhs = np.zeros(nf + 1)
            rhs[:nf] = -inst.e[fidx]
            if gidx.size:
                rhs[:nf] -= inst.Q[np.ix_(fidx, gidx)] @ z[gidx]
                rhs[nf] = -float(inst.K[gidx] @ z[gidx])
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            z = z.astype(float)
            z[fidx] = sol[:nf]
        if not np.all(np.isfinite(z)):
            continue
        if not kkt_check(inst, z, tol):
            continue
        zc = np.clip(z, inst.lo, inst.hi)
        obj = objective(inst, zc)
        nrm = float(np.linalg.norm(zc))
        cmp_tol = 1e-10 * (1.0 + abs(obj))
        if best is None or obj < best_obj - cmp_tol or \
                (obj < best_obj + cmp_tol and nrm < best_nrm):
            best, best_obj, best_nrm = zc, obj, nrm
    if best is None:
        raise OracleFailure("no active-set pattern satisfied the KKT system")
    return best


def _tos_reference(inst: QpInstance, tol: float = 1e-12,
                   max_iter: int = 10 ** 6) -> np.ndarray:
    eta = estimate_eta(inst.Q)
    gamma = 1.99 * (eta if np.isfinite(eta) else 1.0)
    Q, e, K = inst.Q, inst.e, inst.K
    z = np.zeros(inst.n)
    for _ in range(max_iter):
        xB = np.clip(z, inst.lo, inst.hi)
        xA = project_nullspace(K, 2.0 * xB - z - gamma * (Q @ xB + e))
        z_new = z + (xA - xB)
        if float(np.linalg.norm(z_new - z)) <= tol:
            z = z_new
            break
        z = z_new
    else:
        raise OracleFailure("reference fixed-point iteration hit its cap")
    x = np.clip(z, inst.lo, inst.hi)
    if not kkt_check(inst, x, 1e-8):
        raise OracleFailure("reference iterate failed the KKT check")
    return x


def reference_solution(inst: QpInstance) -> np.ndarray:
    """Verified optimizer: KKT enumeration (n <= 6) or iterative reference.

    Enumeration covers all 3^n box patterns with the equality multiplier,
    verifies each candidate, and breaks objective ties by minimal norm.
    """
    if inst.n <= 6:
        return _kkt_enumerate(inst)
    return _tos_reference(inst)


def box_qp_solve(H, c, lo, hi, tol: float = 1e-13, max_iter: int = 100000,
                 lip: float | None = None) -> np.ndarray:
    """Minimize 0.5 x^T H x - c^T x over the box by projected gradient.

    H must be symmetric positive definite for the linear rate this relies
    on; stops when the successive change drops to tol (fixed-point
    residual of the projected-gradient map).
    """
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float)
    if lip is None:
        lip = float(np.linalg.norm(H, 2))
    step = 1.0 / lip
    x = np.clip(np.zeros_like(c), lo, hi)
    for _ in range(max_iter):
        x_new = np.clip(x - step * (H @ x - c), lo, hi)
        if float(np.linalg.norm(x_new - x)) <= tol:
            return x_new
        x = x_new
    raise OracleFailure("box QP projected gradient hit its cap")


def box_solution(inst: QpInstance, tol: float = 1e-13) -> np.ndarray:
    """Minimizer of the objective over the box alone (equality dropped)."""
    return box_qp_solve(inst.Q, -inst.e, inst.lo, inst.hi, tol=tol)


class BoxAffineSum(SplittableOperator):
    """Operator N_X + (Q . + e); resolvent via an inner box-QP solve.

    The resolvent at gamma solves the strongly convex box QP with
    H = I + gamma*Q, c = z - gamma*e to high accuracy, and returns
    u = (z - x)/gamma so the resolvent identity is exact.
    """

    def __init__(self, Q, e, lo, hi, tol: float = 1e-13):
        Q = np.asarray(Q, dtype=float)
        super().__init__(Q.shape[0])
        self.Q = Q
        self.e = np.asarray(e, dtype=float)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.tol = tol
        self._qnorm = float(np.linalg.norm(Q, 2)) if Q.shape[0] <= 400 \
            else 1.0 / estimate_eta(Q)

    def resolvent(self, gamma, z):
        z = self._check_dim(z)
        H = np.eye(self.dim) + gamma * self.Q
        x = box_qp_solve(H, z - gamma * self.e, self.lo, self.hi,
                         tol=self.tol, lip=1.0 + gamma * self._qnorm)
        return x, (z - x) / gamma


def drs_reference_zero(inst: QpInstance, gamma: float, z0,
                       tol: float = 1e-12, max_iter: int = 10 ** 6):
    """Exact-resolvent Douglas-Rachford run to a zero of the splitting operator.

    Returns (z_inf, d0_gamma) where d0_gamma = ||z0 - z_inf|| upper-bounds
    the distance from z0 to the limit actually reached; the limit is a
    fixed point (successive change <= tol), hence a zero of the splitting
    operator to that accuracy.
    """
    z0 = np.asarray(z0, dtype=float)
    Jb = BoxAffineSum(inst.Q, inst.e, inst.lo, inst.hi)
    z = z0.copy()
    for _ in range(max_iter):
        x, _ = Jb.resolvent(gamma, z)
        y = project_nullspace(inst.K, 2.0 * x - z)
        z_new = z + (y - x)
        if float(np.linalg.norm(z_new - z)) <= tol:
            z = z_new
            break
        z = z_new
    else:
        raise OracleFailure("exact-resolvent reference hit its cap")
    return z, float(np.linalg.norm(z0 - z))


def tau0_default(inst: QpInstance, z0, include_e: bool = False) -> float:
    """Initial inner tolerance ||z0 - P_X(z0) + Q z0||^3 + 1.

    include_e switches to the variant with the full forward map Qz0 + e
    in place of Qz0 (off by default; the printed formula omits e).
    """
    z0 = np.asarray(z0, dtype=float)
    r = z0 - np.clip(z0, inst.lo, inst.hi) + inst.Q @ z0
    if include_e:
        r = r + inst.e
    return float(np.linalg.norm(r)) ** 3 + 1.0


def save_instance(inst: QpInstance, path) -> None:
    """Write the plain-text instance file; decimal repr round-trips bit-exactly."""
    kind = "definite" if inst.definite else "semidefinite"
    lines = [f"{inst.n} {kind} {inst.seed}",
             " ".join(str(int(k)) for k in inst.K)]
    for row in inst.Q:
        lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_real(tok: str, lineno: int) -> float:
    try:
        v = float.fromhex(tok) if ("x" in tok or "X" in tok) else float(tok)
    except ValueError:
        raise ParseError(f"bad real token {tok!r}", lineno) from None
    if not np.isfinite(v):
        raise ParseError(f"non-finite value {tok!r}", lineno)
    return v


def load_instance(path) -> QpInstance:
    """Parse an instance file (decimal or hexfloat tokens accepted)."""
    with open(path) as fh:
        raw = fh.read().split("\n")
    lines = [ln for ln in raw if ln.strip()]
    if not lines:
        raise ParseError("empty file", 1)
    head = lines[0].split()
    if len(head) != 3:
        raise ParseError("expected 'n definiteness seed'", 1)
    try:
        n = int(head[0])
    except ValueError:
        raise ParseError(f"bad dimension {head[0]!r}", 1) from None
    if n < 1:
        raise ParseError("dimension must be >= 1", 1)
    if head[1] not in ("definite", "semidefinite"):
        raise ParseError(f"bad definiteness {head[1]!r}", 1)
    try:
        seed = int(head[2])
    except ValueError:
        raise ParseError(f"bad seed {head[2]!r}", 1) from None
    if len(lines) < 2 + n:
        raise ParseError(f"expected {2 + n} lines, found {len(lines)}",
                         len(lines))
    ktoks = lines[1].split()
    if len(ktoks) != n:
        raise ParseError(f"K row needs {n} entries", 2)
    K = np.array([_parse_real(t, 2) for t in ktoks])
    if not np.all(np.abs(K) == 1.0):
        raise ParseError("K entries must be +1 or -1", 2)
    Q = np.empty((n, n))
    for i in range(n):
        toks = lines[2 + i].split()
        if len(toks) != n:
            raise ParseError(f"Q row needs {n} entries", 3 + i)
        Q[i] = [_parse_real(t, 3 + i) for t in toks]
    try:
        return QpInstance(Q=Q, e=np.ones(n), K=K, lo=np.zeros(n),
                          hi=10.0 * np.ones(n),
                          definite=(head[1] == "definite"), seed=seed)
    except ValueError as exc:
        raise ParseError(str(exc), 3) from None
