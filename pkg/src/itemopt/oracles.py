"""First-order oracles and the F_{mu,L} interpolation check."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "FirstOrderOracle",
    "SampledTriplets",
    "InterpolationReport",
    "quadratic_oracle",
    "random_quadratic",
    "load_quadratic",
    "interpolation_check",
    "sample_triplets",
    "shift_to_tilde",
    "base_quadratics",
]


@dataclass(frozen=True)
class FirstOrderOracle:
    """``oracle(x) -> (f(x), grad f(x))`` for a function declared in F_{mu,L}.

    ``x_star``/``f_star`` are optional metadata used by certifiers; methods
    never read them.
    """

    dim: int
    mu: float
    L: float
    evaluate: Callable
    x_star: np.ndarray | None = None
    f_star: float | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"oracle expects shape ({self.dim},), got {x.shape}")
        fval, grad = self.evaluate(x)
        return float(fval), np.asarray(grad, dtype=float)


def quadratic_oracle(H, x_star, mu, L, f_star=0.0, tol=1e-9):
    """f(x) = 1/2 (x - x*)^T H (x - x*) + f*, with the spectrum of H checked against [mu, L]."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    x_star = np.asarray(x_star, dtype=float).ravel()
    if H.shape != (x_star.size, x_star.size):
        raise ValueError("H and x_star have inconsistent dimensions")
    if np.max(np.abs(H - H.T)) > tol * max(1.0, np.max(np.abs(H))):
        raise ValueError("H must be symmetric")
    H = 0.5 * (H + H.T)
    eig = np.linalg.eigvalsh(H)
    if eig[0] < mu - tol or eig[-1] > L + tol:
        raise ValueError(
            f"spectrum [{eig[0]:.6g}, {eig[-1]:.6g}] not contained in [{mu}, {L}]"
        )

    def evaluate(x):
        r = x - x_star
        Hr = H @ r
        return 0.5 * r @ Hr + f_star, Hr

    return FirstOrderOracle(
        dim=x_star.size, mu=float(mu), L=float(L), evaluate=evaluate,
        x_star=x_star.copy(), f_star=float(f_star),
    )


def random_quadratic(d, mu, L, rng, x_star=None, f_star=0.0):
    """Random quadratic whose spectrum spans [mu, L] (both ends attained when d >= 2)."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = rng.uniform(mu, L, size=d)
    if d >= 2:
        eig[0], eig[1] = mu, L
    H = (Q * eig) @ Q.T
    if x_star is None:
        x_star = rng.standard_normal(d)
    return quadratic_oracle(H, x_star, mu, L, f_star=f_star)


def base_quadratics(mu, L, dim=1):
    """The two extreme quadratics mu/2 |x|^2 and L/2 |x|^2 of F_{mu,L}, minimized at 0."""
    zero = np.zeros(dim)
    eye = np.eye(dim)
    return quadratic_oracle(mu * eye, zero, mu, L), quadratic_oracle(L * eye, zero, mu, L)


def load_quadratic(path, mu=None, L=None):
    """Load ``{"eigenvalues": [...], "xstar": [...], "fstar": ...}`` as a diagonal quadratic.

    The declared class defaults to ``mu``/``L`` keys in the file, then to the
    extreme eigenvalues.
    """
    with open(path) as fh:
        data = json.load(fh)
    eig = np.asarray(data["eigenvalues"], dtype=float)
    mu = data.get("mu", float(eig.min())) if mu is None else mu
    L = data.get("L", float(eig.max())) if L is None else L
    return quadratic_oracle(np.diag(eig), data["xstar"], mu, L, f_star=data.get("fstar", 0.0))


def shift_to_tilde(oracle):
    """Oracle for f~(x) = f(x) - mu/2 |x - x*|^2, a member of F_{0, L-mu}."""
    if oracle.x_star is None:
        raise ValueError("shift_to_tilde needs an oracle with a known minimizer")
    mu, x_star = oracle.mu, oracle.x_star

    def evaluate(x):
        fval, g = oracle(x)
        r = x - x_star
        return fval - 0.5 * mu * (r @ r), g - mu * r

    return FirstOrderOracle(
        dim=oracle.dim, mu=0.0, L=oracle.L - mu, evaluate=evaluate,
        x_star=x_star, f_star=oracle.f_star,
    )


@dataclass
class SampledTriplets:
    """Rows of ``X``, ``G`` and entries of ``F`` are (x_i, g_i, f_i)."""

    X: np.ndarray
    G: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
        self.F = np.asarray(self.F, dtype=float).ravel()
        if self.X.shape != self.G.shape or self.X.shape[0] != self.F.size:
            raise ValueError("inconsistent triplet dimensions")


def sample_triplets(oracle, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    vals = [oracle(p) for p in points]
    return SampledTriplets(points, np.array([g for _, g in vals]), np.array([f for f, _ in vals]))


@dataclass
class InterpolationReport:
    min_slack: float
    pair: tuple
    tol: float

    @property
    def ok(self):
        return self.min_slack >= -self.tol


def interpolation_check(S, mu, L, tol=1e-9):
    """Smallest slack of the F_{mu,L} interpolation inequality over ordered pairs.

    slack(i, j) = f_i - f_j - <g_j, x_i - x_j> - |g_i - g_j|^2 / 2L
                  - mu / (2 (1 - mu/L)) |x_i - x_j - (g_i - g_j)/L|^2
    """
    if not mu < L:
        raise ValueError("need mu < L")
    X, G, F = S.X, S.G, S.F
    dX = X[:, None, :] - X[None, :, :]
    dG = G[:, None, :] - G[None, :, :]
    inner = np.einsum("jd,ijd->ij", G, dX)
    slack = (
        F[:, None] - F[None, :] - inner
        - np.sum(dG**2, axis=-1) / (2 * L)
        - mu / (2 * (1 - mu / L)) * np.sum((dX - dG / L) ** 2, axis=-1)
    )
    np.fill_diagonal(slack, np.inf)
    if slack.shape[0] < 2:
        return InterpolationReport(min_slack=np.inf, pair=(0, 0), tol=tol)
    i, j = np.unravel_index(np.argmin(slack), slack.shape)
    return InterpolationReport(min_slack=float(slack[i, j]), pair=(int(i), int(j)), tol=tol)
