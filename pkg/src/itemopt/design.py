"""Design of fixed-step methods by minimizing a certified worst-case bound.

Fixing the multipliers of the relaxed dual, the dual LMI is affine in the
method coefficients; fixing the coefficients, it is affine in the multipliers.
Both become jointly affine after substituting b_{k,j} = m_k alpha_{k,j}, where
m_k is the unique multiplier that scales iterate w_k in the dual matrix once
the equality chain is used. The last row of coefficients enters linearly
(b_{N,j} = alpha_{N,j}).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import _gram
from ._gram import Criterion
from .certificates import DualCertificate
from .methods import FixedStepMethod, Form, h_from_alpha
from .pep import build_dual_relaxed, multiplier_var_name
from .sdp import LmiBlock, SdpProblem, SolverError, Status, solve

__all__ = [
    "DesignResult",
    "design_distance",
    "design_function_value",
    "recover_alpha",
    "build_design_sdp",
    "ZERO_TOL",
    "RESID_TOL",
]

ZERO_TOL = 1e-9
RESID_TOL = 1e-7


@dataclass
class DesignResult:
    tau: float
    method: FixedStepMethod
    certificate: DualCertificate
    linearized_vars: np.ndarray | None

    @property
    def alpha(self):
        return self.method.to_alpha().coeffs

    @property
    def h(self):
        return self.method.to_h().coeffs


class _AffineMatrix:
    """Symmetric matrix const + sum_v x_v A_v, assembled term by term."""

    def __init__(self, n_vars, size):
        self.const = np.zeros((size, size))
        self.coeffs = np.zeros((n_vars, size, size))

    def add(self, var, M):
        if var is None:
            self.const += M
        else:
            self.coeffs[var] += M


def _scaled_iterate_rows(N, criterion):
    """(k, multiplier name, direction index pair) for the linearized rows 1..N-1.

    The direction of row k is g_{k+1} - g_k, except for the distance
    criterion's row N-1 whose direction is -g_{N-1}.
    """
    rows = []
    for k in range(1, N):
        if criterion.is_distance and k == N - 1:
            rows.append((k, ("last",), None))
        else:
            rows.append((k, ("chain", k), k + 1))
    return rows


def build_design_sdp(params, N, criterion):
    """Linearized minimax program over (tau, multipliers, b).

    Returns the problem and a map from (k, j) to the column of b_{k,j}.
    """
    crit = criterion
    n_f = crit.n_grads(N)
    size = n_f + 1
    q, L = params.q, params.L
    ineqs = _gram.relaxed_ineqs(N, crit)
    names = ["tau"] + [multiplier_var_name(k) for k in ineqs]
    col = {k: i + 1 for i, k in enumerate(ineqs)}
    bcol = {}
    for k in range(1, N + 1):
        for j in range(k):
            bcol[(k, j)] = len(names)
            names.append(f"b[{k},{j}]")
    n_vars = len(names)

    e0 = _gram.unit(size, 0)

    def g(i):
        return _gram.grad(i, size)

    def basis_dir(j):
        # derivative of w_k with respect to alpha_{k,j}
        return -(q * e0 + g(j) / L)

    S = _AffineMatrix(n_vars, size)
    S.add(0, np.outer(e0, e0) * (1.0 if crit.is_distance else crit.c_w + crit.c_f * params.mu / 2))
    for name, ineq in ineqs.items():
        S.add(col[name], _gram.quad_part(ineq, size, L - params.mu))
    # w_0 terms: +lambda_{0,1} g_1 - lambda_{*,0} g_0
    if ("chain", 0) in col:
        S.add(col[("chain", 0)], _gram.sym(g(1), e0))
    S.add(col[("star", 0)], -_gram.sym(g(0), e0))
    for k, mult, nxt in _scaled_iterate_rows(N, crit):
        d = (g(nxt) - g(k)) if nxt is not None else -g(k)
        S.add(col[mult], _gram.sym(d, e0))
        for j in range(k):
            S.add(bcol[(k, j)], _gram.sym(d, basis_dir(j)))

    # w_N is affine in its own row of coefficients
    wN_const = e0.copy()
    wN_coef = {bcol[(N, j)]: basis_dir(j) for j in range(N)}
    if not crit.is_distance:
        S.add(None, _gram.sym(-g(N), wN_const))
        for v, vec in wN_coef.items():
            S.add(v, _gram.sym(-g(N), vec))

    a_scale = 1.0 if crit.is_distance else np.sqrt(params.mu / 2)
    if a_scale > 0:
        m = size + 1
        const = np.zeros((m, m))
        coeffs = np.zeros((n_vars, m, m))
        const[:size, :size] = S.const
        coeffs[:, :size, :size] = S.coeffs
        const[size, size] = 1.0
        const[:size, size] = const[size, :size] = a_scale * wN_const
        for v, vec in wN_coef.items():
            coeffs[v, :size, size] = coeffs[v, size, :size] = a_scale * vec
        block = LmiBlock(const, coeffs)
    else:
        block = LmiBlock(S.const, S.coeffs)

    # equality chain, identical to the fixed-method dual
    W0 = _gram.iterate_vectors(np.zeros((N, N)), params, size)
    terms = _gram.criterion_terms(crit, W0, params, n_f)
    eq = np.zeros((n_f, n_vars))
    eq[:, 0] = terms.f_norm
    for name, ineq in ineqs.items():
        eq[:, col[name]] = _gram.fsel(ineq.j, n_f) - _gram.fsel(ineq.i, n_f)
    lb = np.full(n_vars, -np.inf)
    for name in ineqs:
        lb[col[name]] = 0.0
    c = np.zeros(n_vars)
    c[0] = 1.0
    prob = SdpProblem(
        c=c, blocks=[block], eq_matrix=eq, eq_rhs=terms.f_obj, lower_bounds=lb, var_names=names
    )
    return prob, bcol


def recover_alpha(b, multipliers, criterion, zero_tol=ZERO_TOL, resid_tol=RESID_TOL):
    """alpha from the linearized variables.

    ``b`` is N x N lower-triangular (row k-1 holds b_{k,0..k-1}); ``multipliers``
    maps names as in :class:`DualCertificate.multipliers`. Rows with a
    vanishing multiplier must have vanishing b and get alpha = 0.
    """
    b = np.asarray(b, dtype=float)
    N = b.shape[0]
    alpha = np.zeros_like(b)
    alpha[N - 1] = b[N - 1]
    for k, mult, _ in _scaled_iterate_rows(N, criterion):
        m = multipliers[mult]
        row = b[k - 1, :k]
        if m <= zero_tol:
            worst = float(np.max(np.abs(row)))
            if worst > resid_tol:
                raise SolverError(
                    f"multiplier {mult} is {m:.3g} but |b| reaches {worst:.3g} in row {k}"
                )
        else:
            alpha[k - 1, :k] = row / m
    return alpha


def _solve_design(params, N, criterion, settings):
    prob, bcol = build_design_sdp(params, N, criterion)
    sol = solve(prob, settings)
    if sol.status is not Status.OPTIMAL:
        raise SolverError(f"design program: solver returned {sol.status.value}", sol)
    mult = {
        k: max(float(sol.x[prob.index(multiplier_var_name(k))]), 0.0)
        for k in _gram.relaxed_ineqs(N, criterion)
    }
    b = np.zeros((N, N))
    for (k, j), v in bcol.items():
        b[k - 1, j] = sol.x[v]
    alpha = recover_alpha(b, mult, criterion)
    method = h_from_alpha(FixedStepMethod(params, N, Form.ALPHA, alpha))
    cert = DualCertificate.from_multipliers(N, params, sol.x[0], mult, criterion)
    return DesignResult(float(sol.objective), method, cert, b)


def _relaxed_value(params, criterion, step, settings):
    m = FixedStepMethod(params, 1, Form.H, np.array([[step]]))
    prob = build_dual_relaxed(m, criterion)
    sol = solve(prob, settings)
    if sol.status is not Status.OPTIMAL:
        raise SolverError(f"relaxed dual at step {step}: {sol.status.value}", sol)
    return sol


def design_distance(params, N, settings=None):
    """Method minimizing the certified bound on |w_N - w*|^2 / |w_0 - w*|^2."""
    if N < 1:
        raise ValueError("N must be at least 1")
    crit = Criterion.distance()
    if N >= 2:
        return _solve_design(params, N, crit, settings)
    # One step: minimize the relaxed value over the single step size directly.
    res = minimize_scalar(
        lambda h: _relaxed_value(params, crit, h, settings).objective,
        bounds=(0.0, 4.0),
        method="bounded",
        options={"xatol": 1e-10},
    )
    step = float(res.x)
    m = FixedStepMethod(params, 1, Form.H, np.array([[step]]))
    prob = build_dual_relaxed(m, crit)
    sol = _relaxed_value(params, crit, step, settings)
    mult = {
        k: max(float(sol.x[prob.index(multiplier_var_name(k))]), 0.0)
        for k in _gram.relaxed_ineqs(1, crit)
    }
    cert = DualCertificate.from_multipliers(1, params, sol.x[0], mult, crit)
    return DesignResult(float(sol.objective), m, cert, None)


def design_function_value(params, N, c_w, c_f, settings=None):
    """Method minimizing the certified bound on (f(w_N) - f*) / (c_w |w_0 - w*|^2 + c_f (f(w_0) - f*))."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return _solve_design(params, N, Criterion.function_value(c_w, c_f), settings)
