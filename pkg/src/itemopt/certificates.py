"""Potential-function checks for ITEM and dual certificates of worst-case bounds.

The potential after k iterations is

    phi_k = (1 - q) A_k psi_{k-1} + (L + mu A_k) |z_k - x*|^2

with psi(y) = f(y) - f* - |g|^2 / 2L - mu / (2 (1 - q)) |y - g/L - x*|^2, which is
nonnegative for every function in F_{mu,L}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _gram
from ._gram import Criterion
from .methods import Form, run_item
from .schedules import build_schedule, next_A, potential_polynomial
from .sdp import min_eigenvalue

__all__ = [
    "PotentialState",
    "PotentialReport",
    "FinalBoundReport",
    "IdentityResidual",
    "DualCertificate",
    "CertificateReport",
    "psi",
    "potential_decrease_check",
    "final_bound_check",
    "potential_constants",
    "weighted_sum_identity_check",
    "item_dual_certificate",
    "verify_dual_certificate",
]


def psi(point, x_star, f_star, params):
    """psi at ``point = (y, grad f(y), f(y))``."""
    y, g, fval = point
    y, g = np.asarray(y, dtype=float), np.asarray(g, dtype=float)
    L, q = params.L, params.q
    r = y - g / L - x_star
    return float(fval - f_star - g @ g / (2 * L) - params.mu / (2 * (1 - q)) * (r @ r))


@dataclass(frozen=True)
class PotentialState:
    k: int
    A_k: float
    psi_prev: float
    dist_sq: float
    phi: float


@dataclass
class PotentialReport:
    states: list
    violations: list = field(default_factory=list)
    min_psi: float = math.inf

    @property
    def phi(self):
        return np.array([s.phi for s in self.states])

    @property
    def ok(self):
        return not self.violations and self.min_psi >= -1e-10


def potential_decrease_check(trace, schedule, oracle, rel_tol=1e-9):
    """phi_0..phi_N along an ITEM trace, with every increase beyond ``rel_tol`` flagged."""
    if oracle.x_star is None or oracle.f_star is None:
        raise ValueError("potential checks need an oracle with known x* and f*")
    p, N = schedule.params, schedule.N
    if trace.n_calls != N:
        raise ValueError(f"trace has {trace.n_calls} calls, schedule has N={N}")
    zs = trace.sequences["z"]
    states, min_psi = [], math.inf
    for k in range(N + 1):
        r = zs[k] - oracle.x_star
        dist_sq = float(r @ r)
        if k == 0:
            ps = 0.0
            phi = p.L * dist_sq
        else:
            ps = psi(
                (trace.points[k - 1], trace.gradients[k - 1], trace.values[k - 1]),
                oracle.x_star, oracle.f_star, p,
            )
            min_psi = min(min_psi, ps)
            A = schedule.A[k]
            phi = (1 - p.q) * A * ps + (p.L + p.mu * A) * dist_sq
        states.append(PotentialState(k, float(schedule.A[k]), ps, dist_sq, phi))
    violations = []
    for k in range(N):
        margin = states[k + 1].phi - states[k].phi
        if margin > rel_tol * max(1.0, states[k].phi):
            violations.append((k, margin))
    return PotentialReport(states, violations, min_psi)


@dataclass(frozen=True)
class FinalBoundReport:
    N: int
    dist_sq: float
    dist_bound: float
    psi: float
    psi_bound: float

    @property
    def dist_slack(self):
        """Relative slack (bound - value) / bound; negative means violated."""
        return (self.dist_bound - self.dist_sq) / max(self.dist_bound, 1e-300)

    @property
    def psi_slack(self):
        return (self.psi_bound - self.psi) / max(self.psi_bound, 1e-300)


def final_bound_check(oracle, x0, params, N):
    """Compare |z_N - x*|^2 and psi_N against their worst-case guarantees.

    psi_N needs y_N, which ITEM forms from beta_N; the run therefore uses the
    horizon N + 1 schedule (the first N steps do not depend on the horizon).
    """
    sched = build_schedule(params, N + 1)
    trace = run_item(oracle, x0, sched)
    r0 = np.asarray(x0, dtype=float) - oracle.x_star
    d0 = float(r0 @ r0)
    rN = trace.sequences["z"][N] - oracle.x_star
    ps = psi((trace.points[N], trace.gradients[N], trace.values[N]), oracle.x_star, oracle.f_star, params)
    q = params.q
    return FinalBoundReport(
        N=N,
        dist_sq=float(rN @ rN),
        dist_bound=d0 / (1 + q * sched.A[N]),
        psi=ps,
        psi_bound=params.L * d0 / ((1 - q) * sched.A[N + 1]),
    )


def potential_constants(A_k, A_next, q):
    """(K1, K2, K3) of the exact reformulation of one potential step."""
    den = (1 + q) ** 2 + (1 - q) ** 2 * q * A_next
    K1 = q**2 / den
    K2 = den / ((1 - q) ** 2 * (1 + q + q * A_k) ** 2 * A_next**2)
    K3 = (1 + q) * ((1 + q) * A_k - (1 - q) * (2 + q * A_k) * A_next) / den
    return K1, K2, K3


@dataclass(frozen=True)
class IdentityResidual:
    residual: float
    scale: float
    P: float

    @property
    def relative(self):
        return self.residual / max(self.scale, 1e-300)


def weighted_sum_identity_check(A_k, params, rng, dim=3, A_next=None):
    """Check the exact reformulation of phi_{k+1} - phi_k on random data.

    The data (y_{k-1}, z_k, x*, the two gradients, function values) are
    arbitrary; y_k and z_{k+1} follow the ITEM update. The identity holds for
    any A_{k+1}; the default is the recursion value, where P vanishes.
    """
    if A_k < 0:
        raise ValueError("A_k must be nonnegative")
    L, mu, q = params.L, params.mu, params.q
    A1 = next_A(A_k, q) if A_next is None else float(A_next)
    y_prev, z, xs, g_prev, g = (rng.standard_normal(dim) for _ in range(5))
    f_prev, f, fs = rng.standard_normal(3)

    beta = A_k / ((1 - q) * A1)
    delta = 0.5 * ((1 - q) ** 2 * A1 - (1 + q) * A_k) / (1 + q + q * A_k)
    y = (1 - beta) * z + beta * (y_prev - g_prev / L)
    z_next = (1 - q * delta) * z + q * delta * y - delta / L * g

    def psi_at(pt, gr, fv):
        return psi((pt, gr, fv), xs, fs, params)

    def sq(v):
        return float(v @ v)

    phi_k = (1 - q) * A_k * psi_at(y_prev, g_prev, f_prev) + (L + mu * A_k) * sq(z - xs)
    phi_next = (1 - q) * A1 * psi_at(y, g, f) + (L + mu * A1) * sq(z_next - xs)

    c = mu / (2 * (1 - q))
    ineq_star = f - fs + g @ (xs - y) + sq(g) / (2 * L) + c * sq(y - xs - g / L)
    dg = g - g_prev
    ineq_prev = f - f_prev + g @ (y_prev - y) + sq(dg) / (2 * L) + c * sq(y - y_prev - dg / L)
    lam1, lam2 = (1 - q) * (A1 - A_k), (1 - q) * A_k
    lhs = phi_next - phi_k - lam1 * ineq_star - lam2 * ineq_prev

    K1, K2, K3 = potential_constants(A_k, A1, q)
    P = potential_polynomial(A1, A_k, q)
    v = (1 - q) * A1 * g - mu * A_k * (y_prev - xs - g_prev / L) + K3 * mu * (z - xs)
    rhs = -L * K1 * P * sq(z - xs) + K2 * P / (4 * L) * sq(v)

    scale = max(1.0, abs(phi_next), abs(phi_k), abs(lam1 * ineq_star), abs(lam2 * ineq_prev), abs(rhs))
    return IdentityResidual(residual=abs(lhs - rhs), scale=scale, P=P)


@dataclass(frozen=True)
class DualCertificate:
    """Multipliers of the relaxed dual problem.

    ``lambda_star[i]`` pairs with the inequality between x* and w_i,
    ``lambda_chain[i]`` with the one between w_i and w_{i+1}, and
    ``lambda_last`` (distance criterion only) with the one between w_{N-1} and x*.
    """

    N: int
    params: object
    tau: float
    lambda_star: np.ndarray
    lambda_chain: np.ndarray
    lambda_last: float | None
    criterion: Criterion

    def multipliers(self):
        out = {("chain", i): float(v) for i, v in enumerate(self.lambda_chain)}
        out.update({("star", i): float(v) for i, v in enumerate(self.lambda_star)})
        if self.criterion.is_distance:
            out[("last",)] = float(self.lambda_last)
        return out

    @classmethod
    def from_multipliers(cls, N, params, tau, mult, criterion):
        crit = criterion
        n_chain = N - 1 if crit.is_distance else N
        return cls(
            N=N,
            params=params,
            tau=float(tau),
            lambda_star=np.array([mult[("star", i)] for i in range(crit.n_grads(N))]),
            lambda_chain=np.array([mult[("chain", i)] for i in range(n_chain)]),
            lambda_last=float(mult[("last",)]) if crit.is_distance else None,
            criterion=crit,
        )

    def to_dict(self):
        return {
            "N": self.N,
            "mu": self.params.mu,
            "L": self.params.L,
            "criterion": self.criterion.to_dict(),
            "tau": self.tau,
            "lambda_star": self.lambda_star.tolist(),
            "lambda_chain": self.lambda_chain.tolist(),
            "lambda_last": self.lambda_last,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data):
        from .schedules import ClassParams

        return cls(
            N=int(data["N"]),
            params=ClassParams(data["mu"], data["L"]),
            tau=float(data["tau"]),
            lambda_star=np.asarray(data["lambda_star"], dtype=float),
            lambda_chain=np.asarray(data["lambda_chain"], dtype=float),
            lambda_last=data.get("lambda_last"),
            criterion=Criterion.from_dict(data["criterion"]),
        )


def item_dual_certificate(params, N):
    """Closed-form multipliers certifying |z_N - x*|^2 <= |z_0 - x*|^2 / (1 + q A_N)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    A = build_schedule(params, N).A
    q, L = params.q, params.L
    s = (1 - q) / (L * (1 + q * A[N]))
    cert = DualCertificate(
        N=N,
        params=params,
        tau=1.0 / (1 + q * A[N]),
        lambda_star=s * (A[1 : N + 1] - A[:N]),
        lambda_chain=s * A[1:N],
        lambda_last=s * A[N],
        criterion=Criterion.distance(),
    )
    resid = _chain_residual_scalar(cert)
    assert resid <= 1e-14 * max(1.0, s * A[N]), f"chain residual {resid}"
    return cert


def _chain_residual_scalar(cert):
    ls, lc, N = cert.lambda_star, cert.lambda_chain, cert.N
    inflow = np.concatenate(([cert.tau * cert.criterion.c_f], lc)) + ls
    if cert.criterion.is_distance:
        outflow = np.concatenate((lc, [cert.lambda_last]))
    else:
        outflow = np.concatenate((lc, [1.0]))
    return float(np.max(np.abs(inflow - outflow)))


@dataclass(frozen=True)
class CertificateReport:
    value: float
    chain_residual: float
    min_eig: float
    min_multiplier: float
    k_norm: float
    chain_tol: float
    psd_tol: float

    @property
    def feasible(self):
        return (
            self.chain_residual <= self.chain_tol
            and self.min_eig >= -self.psd_tol
            and self.min_multiplier >= -self.psd_tol
        )

    def to_dict(self):
        return {
            "value": self.value,
            "chain_residual": self.chain_residual,
            "min_eig": self.min_eig,
            "min_multiplier": self.min_multiplier,
            "k_norm": self.k_norm,
            "feasible": self.feasible,
        }


def dual_matrices(cert, alpha):
    """(S, a, chain residual vector) for the certificate applied to alpha coefficients."""
    crit, p, N = cert.criterion, cert.params, cert.N
    size = crit.n_grads(N) + 1
    n_f = crit.n_grads(N)
    W = _gram.iterate_vectors(alpha, p, size)
    terms = _gram.criterion_terms(crit, W, p, n_f)
    S = cert.tau * terms.C_norm
    fres = cert.tau * terms.f_norm - terms.f_obj
    mult = cert.multipliers()
    for name, ineq in _gram.relaxed_ineqs(N, crit).items():
        M, c = _gram.ineq_terms(ineq, W, n_f, p.L - p.mu)
        S = S + mult[name] * M
        fres = fres + mult[name] * c
    return S, terms.a_obj, fres


def verify_dual_certificate(cert, method, chain_tol=1e-9, psd_tol=1e-8):
    """Check that ``cert`` proves ``value = cert.tau`` for ``method``.

    ``k_norm`` is the spectral norm of S - a a^T, which vanishes exactly for a
    certificate that is tight along every direction (ITEM's closed form).
    """
    if method.N != cert.N:
        raise ValueError(f"certificate is for N={cert.N}, method has N={method.N}")
    if not (
        math.isclose(method.params.mu, cert.params.mu, rel_tol=1e-12, abs_tol=1e-15)
        and math.isclose(method.params.L, cert.params.L, rel_tol=1e-12)
    ):
        raise ValueError("certificate and method are for different function classes")
    alpha = method.to_alpha().coeffs if method.form is Form.H else method.coeffs
    S, a, fres = dual_matrices(cert, alpha)
    n = S.shape[0]
    schur = np.zeros((n + 1, n + 1))
    schur[:n, :n] = S
    schur[:n, n] = schur[n, :n] = a
    schur[n, n] = 1.0
    mults = np.array(list(cert.multipliers().values()))
    return CertificateReport(
        value=float(cert.tau),
        chain_residual=float(np.max(np.abs(fres))),
        min_eig=min_eigenvalue(schur),
        min_multiplier=float(min(mults.min(initial=math.inf), cert.tau)),
        k_norm=float(np.linalg.norm(S - np.outer(a, a), 2)),
        chain_tol=chain_tol,
        psd_tol=psd_tol,
    )
