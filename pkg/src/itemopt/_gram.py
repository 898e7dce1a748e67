"""Gram-matrix algebra shared by the PEP builders, certificates and design.

Everything lives over the shifted class F_{0, L-mu} with w* = 0, g* = 0, f* = 0.
The Gram basis is [w_0, g_0, ..., g_{m-1}] where m = N (distance criterion)
or N + 1 (function-value criterion); the function-value vector holds
f_0..f_{m-1}.

An interpolation inequality ``Ineq(i, j)`` reads

    f_i >= f_j + <g_j, w_i - w_j> + |g_i - g_j|^2 / (2 (L - mu))

and is stored as ``tr(G M) + F . c <= 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

STAR = "*"


class CriterionKind(str, enum.Enum):
    DIST_OVER_DIST = "dist"
    FUNC_OVER_MIX = "func"


@dataclass(frozen=True)
class Criterion:
    """Performance measure of a method.

    DIST_OVER_DIST: |w_N - w*|^2 / |w_0 - w*|^2.
    FUNC_OVER_MIX: (f(w_N) - f*) / (c_w |w_0 - w*|^2 + c_f (f(w_0) - f*)).
    """

    kind: CriterionKind
    c_w: float = 0.0
    c_f: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CriterionKind(self.kind))
        if self.kind is CriterionKind.FUNC_OVER_MIX:
            if self.c_w < 0 or self.c_f < 0 or (self.c_w == 0 and self.c_f == 0):
                raise ValueError("c_w and c_f must be nonnegative and not both zero")
        else:
            object.__setattr__(self, "c_w", 0.0)
            object.__setattr__(self, "c_f", 0.0)

    @classmethod
    def distance(cls):
        return cls(CriterionKind.DIST_OVER_DIST)

    @classmethod
    def function_value(cls, c_w, c_f):
        return cls(CriterionKind.FUNC_OVER_MIX, float(c_w), float(c_f))

    @property
    def is_distance(self):
        return self.kind is CriterionKind.DIST_OVER_DIST

    def n_grads(self, N):
        return N if self.is_distance else N + 1

    def to_dict(self):
        d = {"kind": self.kind.value}
        if not self.is_distance:
            d.update(c_w=self.c_w, c_f=self.c_f)
        return d

    @classmethod
    def from_dict(cls, data):
        if CriterionKind(data["kind"]) is CriterionKind.DIST_OVER_DIST:
            return cls.distance()
        return cls.function_value(data["c_w"], data["c_f"])


@dataclass(frozen=True)
class Ineq:
    i: object
    j: object


def unit(n, k):
    e = np.zeros(n)
    e[k] = 1.0
    return e


def sym(a, b):
    return 0.5 * (np.outer(a, b) + np.outer(b, a))


def iterate_vectors(alpha, params, size):
    """Rows w_0..w_N of the Gram coordinates for an alpha-form coefficient matrix."""
    N = alpha.shape[0]
    W = np.zeros((N + 1, size))
    W[:, 0] = 1.0
    for k in range(1, N + 1):
        row = alpha[k - 1, :k]
        W[k, 0] = 1.0 - params.q * row.sum()
        W[k, 1 : k + 1] = -row / params.L
    return W


def point(idx, W):
    return np.zeros(W.shape[1]) if idx == STAR else W[idx]


def grad(idx, size):
    return np.zeros(size) if idx == STAR else unit(size, idx + 1)


def fsel(idx, n_f):
    return np.zeros(n_f) if idx == STAR else unit(n_f, idx)


def ineq_terms(ineq, W, n_f, L_shift):
    """(M, c) with tr(G M) + F.c = f_j - f_i + <g_j, w_i - w_j> + |g_i - g_j|^2 / 2L'."""
    size = W.shape[1]
    gi, gj = grad(ineq.i, size), grad(ineq.j, size)
    M = sym(gj, point(ineq.i, W) - point(ineq.j, W)) + np.outer(gi - gj, gi - gj) / (2 * L_shift)
    c = fsel(ineq.j, n_f) - fsel(ineq.i, n_f)
    return M, c


def quad_part(ineq, size, L_shift):
    """The gradient-only part |g_i - g_j|^2 / 2L' of an inequality."""
    gi, gj = grad(ineq.i, size), grad(ineq.j, size)
    return np.outer(gi - gj, gi - gj) / (2 * L_shift)


def relaxed_ineqs(N, criterion):
    """Named constraint subset of the relaxed PEP, keyed by multiplier name."""
    out = {}
    last_chain = N - 1 if criterion.is_distance else N
    for i in range(last_chain):
        out[("chain", i)] = Ineq(i, i + 1)
    for i in range(criterion.n_grads(N)):
        out[("star", i)] = Ineq(STAR, i)
    if criterion.is_distance:
        out[("last",)] = Ineq(N - 1, STAR)
    return out


def full_ineqs(N, criterion):
    idx = [STAR] + list(range(criterion.n_grads(N)))
    return [Ineq(i, j) for i in idx for j in idx if i != j]


@dataclass
class CriterionTerms:
    """Primal objective tr(G a a^T) + F.f_obj and normalization tr(G C) + F.f_norm = 1."""

    C_norm: np.ndarray
    f_norm: np.ndarray
    a_obj: np.ndarray
    f_obj: np.ndarray


def criterion_terms(criterion, W, params, n_f):
    size = W.shape[1]
    N = W.shape[0] - 1
    e0 = unit(size, 0)
    if criterion.is_distance:
        return CriterionTerms(np.outer(e0, e0), np.zeros(n_f), W[N].copy(), np.zeros(n_f))
    mu = params.mu
    C = (criterion.c_w + criterion.c_f * mu / 2) * np.outer(e0, e0)
    return CriterionTerms(C, criterion.c_f * unit(n_f, 0), math.sqrt(mu / 2) * W[N], unit(n_f, N))


def multiplier_names(N, criterion):
    return list(relaxed_ineqs(N, criterion).keys())
