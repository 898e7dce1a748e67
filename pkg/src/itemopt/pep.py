"""Performance-estimation problems for fixed-step first-order methods.

Primal problems are posed over the Gram matrix G of [w_0, g_0, g_1, ...] and
the function values F of the shifted function f~ = f - mu/2 |. - w*|^2, which
belongs to F_{0, L-mu}. The full problem keeps every interpolation inequality
among {*, 0, 1, ...}; the relaxed one keeps the chain/star subset whose dual
has the certificate structure used by :mod:`itemopt.certificates`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _gram
from ._gram import Criterion, CriterionKind
from .certificates import DualCertificate
from .methods import Form
from .sdp import LmiBlock, SdpProblem, SolverError, Status, solve

__all__ = [
    "Criterion",
    "CriterionKind",
    "Mode",
    "GramWitness",
    "WorstCase",
    "build_full_pep",
    "build_relaxed_pep",
    "build_dual_relaxed",
    "worst_case_bound",
    "quadratic_brute_force",
    "multiplier_var_name",
]


class Mode(str, enum.Enum):
    FULL = "full"
    RELAXED = "relaxed"


def _alpha(method):
    return method.to_alpha().coeffs if method.form is Form.H else method.coeffs


def _sym_index(n):
    return [(a, b) for a in range(n) for b in range(a, n)]


def _gram_coeff(M, pairs):
    """Linear functional G -> tr(G M) in the upper-triangular parametrization."""
    return np.array([M[a, a] if a == b else 2 * M[a, b] for a, b in pairs])


def _build_primal(method, criterion, ineqs, scale):
    alpha = _alpha(method)
    p, N = method.params, method.N
    n_f = criterion.n_grads(N)
    size = n_f + 1
    W = _gram.iterate_vectors(alpha, p, size)
    terms = _gram.criterion_terms(criterion, W, p, n_f)
    pairs = _sym_index(size)
    n_g = len(pairs)
    n_vars = n_g + n_f
    names = [f"G[{a},{b}]" for a, b in pairs] + [f"F[{i}]" for i in range(n_f)]

    gram_coeffs = np.zeros((n_vars, size, size))
    for k, (a, b) in enumerate(pairs):
        gram_coeffs[k, a, b] = gram_coeffs[k, b, a] = 1.0
    blocks = [LmiBlock(np.zeros((size, size)), gram_coeffs)]
    for ineq in ineqs:
        M, c = _gram.ineq_terms(ineq, W, n_f, p.L - p.mu)
        row = -np.concatenate((_gram_coeff(M, pairs), c))
        blocks.append(LmiBlock(np.zeros((1, 1)), row.reshape(n_vars, 1, 1)))

    obj = np.concatenate((_gram_coeff(np.outer(terms.a_obj, terms.a_obj), pairs), terms.f_obj))
    eq = np.concatenate((_gram_coeff(terms.C_norm, pairs), terms.f_norm))
    return SdpProblem(
        c=-obj, blocks=blocks, eq_matrix=eq[None, :], eq_rhs=[float(scale)], var_names=names
    )


def build_full_pep(method, criterion, scale=1.0):
    """All-pairs PEP; its optimal value (negated objective) is ``scale`` times the worst case.

    For the distance criterion the last iterate's gradient never enters, so
    the index set is {*, 0..N-1} plus w_N as a free combination.
    """
    return _build_primal(method, criterion, _gram.full_ineqs(method.N, criterion), scale)


def build_relaxed_pep(method, criterion, scale=1.0):
    ineqs = list(_gram.relaxed_ineqs(method.N, criterion).values())
    return _build_primal(method, criterion, ineqs, scale)


def multiplier_var_name(name):
    if name == ("last",):
        return "lambda_last"
    return f"lambda_{name[0]}[{name[1]}]"


def build_dual_relaxed(method, criterion, scale=1.0):
    """Dual of the relaxed PEP: minimize scale * tau over (tau, lambda >= 0)."""
    alpha = _alpha(method)
    p, N = method.params, method.N
    if N < 1:
        raise ValueError("N must be at least 1")
    n_f = criterion.n_grads(N)
    size = n_f + 1
    W = _gram.iterate_vectors(alpha, p, size)
    terms = _gram.criterion_terms(criterion, W, p, n_f)
    ineqs = _gram.relaxed_ineqs(N, criterion)
    names = ["tau"] + [multiplier_var_name(k) for k in ineqs]
    n_vars = len(names)

    mats = [terms.C_norm]
    eq = np.zeros((n_f, n_vars))
    eq[:, 0] = terms.f_norm
    for col, ineq in enumerate(ineqs.values(), start=1):
        M, c = _gram.ineq_terms(ineq, W, n_f, p.L - p.mu)
        mats.append(M)
        eq[:, col] = c

    a = terms.a_obj
    if np.any(a != 0):
        m = size + 1
        const = np.zeros((m, m))
        const[:size, size] = const[size, :size] = a
        const[size, size] = 1.0
        coeffs = np.zeros((n_vars, m, m))
        coeffs[:, :size, :size] = np.array(mats)
    else:
        const = np.zeros((size, size))
        coeffs = np.array(mats)
    lb = np.zeros(n_vars)
    lb[0] = -np.inf
    c = np.zeros(n_vars)
    c[0] = float(scale)
    return SdpProblem(
        c=c, blocks=[LmiBlock(const, coeffs)], eq_matrix=eq, eq_rhs=terms.f_obj,
        lower_bounds=lb, var_names=names,
    )


@dataclass
class GramWitness:
    """Primal optimizer: Gram matrix, shifted function values and a factor.

    Rows of ``vectors`` realize the basis [w_0, g_0, ...] in R^r with
    ``vectors @ vectors.T`` equal to ``G`` up to eigenvalue clipping.
    """

    G: np.ndarray
    F: np.ndarray
    vectors: np.ndarray


@dataclass
class WorstCase:
    value: float
    mode: Mode
    certificate: DualCertificate | None = None
    witness: GramWitness | None = None
    solution: object = None


def _witness(problem, x, size, n_f, clip=1e-10):
    pairs = _sym_index(size)
    G = np.zeros((size, size))
    for k, (a, b) in enumerate(pairs):
        G[a, b] = G[b, a] = x[k]
    F = np.array(x[len(pairs) :])
    w, V = np.linalg.eigh(G)
    keep = w > clip * max(1.0, w.max(initial=0.0))
    vectors = V[:, keep] * np.sqrt(w[keep])
    return GramWitness(G, F, vectors)


def _check(sol, what):
    if sol.status is not Status.OPTIMAL:
        raise SolverError(f"{what}: solver returned {sol.status.value}", sol)
    return sol


def worst_case_bound(method, criterion, mode=Mode.RELAXED, settings=None):
    """Worst-case ratio of ``method`` under ``criterion``.

    RELAXED solves the dual of the relaxed problem and returns its multipliers
    as a certificate; FULL solves the all-pairs primal and returns a witness.
    """
    mode = Mode(mode)
    N = method.N
    if mode is Mode.RELAXED:
        prob = build_dual_relaxed(method, criterion)
        sol = _check(solve(prob, settings), "relaxed dual PEP")
        mult = {
            k: max(float(sol.x[prob.index(multiplier_var_name(k))]), 0.0)
            for k in _gram.relaxed_ineqs(N, criterion)
        }
        cert = DualCertificate.from_multipliers(N, method.params, sol.x[0], mult, criterion)
        return WorstCase(float(sol.objective), mode, certificate=cert, solution=sol)
    prob = build_full_pep(method, criterion)
    sol = _check(solve(prob, settings), "full PEP")
    n_f = criterion.n_grads(N)
    wit = _witness(prob, sol.x, n_f + 1, n_f)
    return WorstCase(-float(sol.objective), mode, witness=wit, solution=sol)


def quadratic_brute_force(method, criterion, n_grid=4001):
    """Largest ratio over 1-d quadratics kappa/2 x^2, kappa on a grid of [mu, L].

    Every such quadratic is an instance of the class, so this is a lower bound
    on the worst case.
    """
    h = method.to_h().coeffs
    p, N = method.params, method.N
    kappa = np.linspace(p.mu, p.L, n_grid)
    w = [np.ones_like(kappa)]
    for k in range(1, N + 1):
        step = sum(h[k - 1, i] * w[i] for i in range(k))
        w.append(w[k - 1] - kappa / p.L * step)
    wN2 = w[N] ** 2
    if criterion.is_distance:
        ratio = wN2
    else:
        den = criterion.c_w + criterion.c_f * kappa / 2
        num = 0.5 * kappa * wN2
        ratio = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(ratio.max())
