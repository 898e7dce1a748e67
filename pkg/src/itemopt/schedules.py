"""Scalar sequences parametrizing ITEM, OGM, TMM and the matching lower bound."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ClassParams",
    "Schedule",
    "LowerBoundSequence",
    "build_schedule",
    "lower_bound_sequence",
    "ogm_theta_sequence",
    "tmm_limit_params",
    "potential_polynomial",
    "next_A",
]


@dataclass(frozen=True)
class ClassParams:
    """Smoothness and strong convexity constants of F_{mu,L}."""

    mu: float
    L: float
    q: float = field(init=False)

    def __post_init__(self):
        mu, L = float(self.mu), float(self.L)
        if not (math.isfinite(mu) and math.isfinite(L)):
            raise ValueError("mu and L must be finite")
        if mu < 0:
            raise ValueError(f"mu must be nonnegative, got {mu}")
        if not mu < L:
            raise ValueError(f"need mu < L, got mu={mu}, L={L}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "q", mu / L)


def next_A(A, q):
    """One step of the A_k recursion (the larger root of P(., A))."""
    return ((1 + q) * A + 2 * (1 + math.sqrt((1 + A) * (1 + q * A)))) / (1 - q) ** 2


def potential_polynomial(x, y, q):
    """P(x, y) = (y - (1-q) x)^2 - 4 x (1 + q y)."""
    return (y - (1 - q) * x) ** 2 - 4 * x * (1 + q * y)


@dataclass(frozen=True)
class Schedule:
    """A_0..A_N together with beta_k, delta_k for k = 0..N-1.

    ``log_A`` is accumulated from step ratios, so ``A_k / A_{k+1}`` stays
    accurate once ``A`` itself overflows.
    """

    params: ClassParams
    N: int
    A: np.ndarray
    log_A: np.ndarray
    beta: np.ndarray
    delta: np.ndarray

    @property
    def q(self):
        return self.params.q

    def to_dict(self):
        return {
            "mu": self.params.mu,
            "L": self.params.L,
            "N": self.N,
            "A": self.A.tolist(),
            "beta": self.beta.tolist(),
            "delta": self.delta.tolist(),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data):
        sched = build_schedule(ClassParams(data["mu"], data["L"]), int(data["N"]))
        if not np.allclose(sched.A, data["A"], rtol=1e-12, atol=0):
            raise ValueError("stored A sequence does not match the recursion")
        return sched


def build_schedule(params, N):
    """ITEM step parameters for horizon ``N``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    q = params.q
    log_A = np.full(N + 1, -np.inf)
    beta = np.zeros(N)
    delta = np.zeros(N)
    if N >= 1:
        log_A[1] = math.log(4.0) - 2 * math.log1p(-q)
        delta[0] = 2.0 / (1 + q)
    A = np.zeros(N + 1)
    if N >= 1:
        A[1] = 4.0 / (1 - q) ** 2
    for k in range(1, N):
        u = math.exp(-log_A[k])  # 1/A_k, underflows to 0 harmlessly
        ratio = ((1 + q) + 2 * (u + math.sqrt((u + 1) * (u + q)))) / (1 - q) ** 2
        beta[k] = 1.0 / ((1 - q) * ratio)
        delta[k] = 0.5 * ((1 - q) ** 2 * ratio - (1 + q)) / ((1 + q) * u + q)
        if A[k] < 1e150:
            A[k + 1] = next_A(A[k], q)
            log_A[k + 1] = math.log(A[k + 1])
        else:
            log_A[k + 1] = log_A[k] + math.log(ratio)
            A[k + 1] = math.exp(log_A[k + 1]) if log_A[k + 1] < 709.0 else math.inf
    return Schedule(params=params, N=N, A=A, log_A=log_A, beta=beta, delta=delta)


@dataclass(frozen=True)
class LowerBoundSequence:
    q: float
    lam: np.ndarray


def lower_bound_sequence(q, N):
    """lambda_0..lambda_N of the oracle-complexity lower bound.

    ``lam[N]**2 / q`` is the best ratio ``|x_N - x*|^2 / |x_0 - x*|^2`` that any
    black-box method can guarantee after N gradient evaluations.
    """
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if N < 0:
        raise ValueError("N must be nonnegative")
    lam = np.empty(N + 1)
    lam[0] = math.sqrt(q)
    for k in range(N):
        l2 = lam[k] ** 2
        rad = q - (1 - q) * l2
        # nonnegative by the identity lam_k^2 = q / (1 + q A_k)
        assert rad >= -1e-14 * q, f"negative radicand {rad} at k={k}"
        lam[k + 1] = (1 - math.sqrt(max(rad, 0.0))) / (1 + l2) * lam[k]
    return LowerBoundSequence(q=q, lam=lam)


def ogm_theta_sequence(N):
    """theta_0..theta_N of the Optimized Gradient Method (no last-step tweak)."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    theta = np.empty(N + 1)
    theta[0] = 1.0
    for k in range(N):
        theta[k + 1] = (1 + math.sqrt(4 * theta[k] ** 2 + 1)) / 2
    return theta


def tmm_limit_params(q):
    """Limits of (beta_k, delta_k) as k -> inf, plus the rate (1 - sqrt(q))^2."""
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    r = math.sqrt(q)
    return (1 - r) / (1 + r), 1 / r, (1 - r) ** 2
