"""Dense primal-dual interior-point solver for small linear matrix inequalities.

Problems are stated in "LMI form"::

    minimize    c^T x
    subject to  C_b + sum_i x_i A_{b,i}  >= 0     (PSD, every block b)
                E x = e

Nonnegativity of individual variables (or of any affine scalar) is encoded as a
1x1 block; internally all 1x1 blocks are merged into one diagonal block and
handled as a linear cone.

The method is an infeasible-start path-following scheme with Nesterov-Todd
scaling and a Mehrotra predictor-corrector; search directions are computed in
the scaled variables, which keeps the dual iterates accurate near optima that
are not strictly complementary. Everything is dense; the design
envelope is LMI dimension up to ~100 and a few hundred variables.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "Status",
    "LmiBlock",
    "SdpProblem",
    "SdpSettings",
    "SdpSolution",
    "SolverError",
    "solve",
    "min_eigenvalue",
]


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITER = "max_iter"


class SolverError(RuntimeError):
    """Raised by callers that require an OPTIMAL solve and did not get one."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


def _sym(M):
    return 0.5 * (M + M.T)


def min_eigenvalue(M, tol=1e-12):
    """Smallest eigenvalue of a symmetric matrix.

    Raises ``ValueError`` when ``M`` is not symmetric up to ``tol`` relative to
    its largest entry.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if np.max(np.abs(M - M.T), initial=0.0) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(_sym(M))[0])


@dataclass
class LmiBlock:
    """One PSD constraint ``const + sum_i x_i coeffs[i] >= 0``.

    ``coeffs`` has shape ``(n_vars, m, m)``. Both are symmetrized on
    construction.
    """

    const: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.const = _sym(np.atleast_2d(np.asarray(self.const, dtype=float)))
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 3:
            raise ValueError("coeffs must have shape (n_vars, m, m)")
        self.coeffs = 0.5 * (self.coeffs + self.coeffs.transpose(0, 2, 1))
        m = self.const.shape[0]
        if self.const.shape != (m, m) or self.coeffs.shape[1:] != (m, m):
            raise ValueError("inconsistent block dimensions")

    @property
    def size(self):
        return self.const.shape[0]

    def evaluate(self, x):
        return self.const + np.tensordot(x, self.coeffs, axes=1)


@dataclass
class SdpProblem:
    """Linear objective, block-diagonal LMI, linear equalities, lower bounds.

    ``lower_bounds`` is either ``None`` or a length ``n_vars`` array whose
    finite entries become 1x1 blocks ``x_i - lb_i >= 0``.
    """

    c: np.ndarray
    blocks: list
    eq_matrix: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    lower_bounds: np.ndarray | None = None
    var_names: list | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        for b in self.blocks:
            if b.coeffs.shape[0] != n:
                raise ValueError(
                    f"block has {b.coeffs.shape[0]} coefficient matrices, expected {n}"
                )
        if self.eq_matrix is None:
            self.eq_matrix = np.zeros((0, n))
            self.eq_rhs = np.zeros(0)
        self.eq_matrix = np.atleast_2d(np.asarray(self.eq_matrix, dtype=float))
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=float).ravel()
        if self.eq_matrix.shape != (self.eq_rhs.size, n):
            raise ValueError("equality matrix and rhs have inconsistent shapes")
        if self.lower_bounds is not None:
            self.lower_bounds = np.asarray(self.lower_bounds, dtype=float).ravel()
            if self.lower_bounds.size != n:
                raise ValueError("lower_bounds must have one entry per variable")

    @property
    def n_vars(self):
        return self.c.size

    def index(self, name):
        return self.var_names.index(name)

    def lmi_min_eigenvalue(self, x):
        """Smallest eigenvalue over all LMI blocks and bound constraints at x."""
        vals = [min_eigenvalue(b.evaluate(x)) for b in self.blocks]
        if self.lower_bounds is not None:
            finite = np.isfinite(self.lower_bounds)
            if finite.any():
                vals.append(float(np.min(x[finite] - self.lower_bounds[finite])))
        return min(vals) if vals else np.inf

    # -- debug format -------------------------------------------------------

    def to_dict(self):
        return {
            "objective": self.c.tolist(),
            "block_sizes": [b.size for b in self.blocks],
            "blocks": [
                {
                    "const": b.const.ravel().tolist(),
                    "coeffs": [a.ravel().tolist() for a in b.coeffs],
                }
                for b in self.blocks
            ],
            "eq_matrix": self.eq_matrix.tolist(),
            "eq_rhs": self.eq_rhs.tolist(),
            "lower_bounds": None
            if self.lower_bounds is None
            else [None if not np.isfinite(v) else float(v) for v in self.lower_bounds],
            "var_names": self.var_names,
        }

    @classmethod
    def from_dict(cls, data):
        n = len(data["objective"])
        blocks = []
        for size, blk in zip(data["block_sizes"], data["blocks"]):
            const = np.asarray(blk["const"], dtype=float).reshape(size, size)
            coeffs = np.asarray(blk["coeffs"], dtype=float).reshape(n, size, size)
            blocks.append(LmiBlock(const, coeffs))
        lb = data.get("lower_bounds")
        if lb is not None:
            lb = np.array([-np.inf if v is None else v for v in lb], dtype=float)
        eq = np.asarray(data["eq_matrix"], dtype=float).reshape(-1, n)
        return cls(
            c=data["objective"],
            blocks=blocks,
            eq_matrix=eq,
            eq_rhs=data["eq_rhs"],
            lower_bounds=lb,
            var_names=data.get("var_names"),
        )

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class SdpSettings:
    """Termination tolerances.

    ``feas_tol`` bounds the LMI violation and equality residual of ``x``;
    ``dual_feas_tol`` bounds the dual residual relative to 1 + |c|. The dual
    side gets the looser default because near degenerate optima its iterates
    lose accuracy first.
    """

    feas_tol: float = 1e-9
    gap_tol: float = 1e-8
    dual_feas_tol: float = 1e-8
    max_iter: int = 100
    step_fraction: float = 0.98
    infeas_tol: float = 1e-8


@dataclass
class SdpSolution:
    status: Status
    x: np.ndarray
    objective: float
    dual_objective: float
    lmi_min_eig: float
    eq_residual: float
    iterations: int
    dual_blocks: list = field(default_factory=list)
    dual_linear: np.ndarray | None = None
    dual_eq: np.ndarray | None = None

    @property
    def gap(self):
        return self.objective - self.dual_objective

    @property
    def dual_matrix(self):
        """Block-diagonal dual certificate (PSD blocks then the linear block)."""
        from scipy.linalg import block_diag

        parts = list(self.dual_blocks)
        if self.dual_linear is not None and self.dual_linear.size:
            parts.append(np.diag(self.dual_linear))
        return block_diag(*parts) if parts else np.zeros((0, 0))


class _Data:
    """Problem split into PSD blocks (size > 1) and one linear cone."""

    def __init__(self, problem):
        n = problem.n_vars
        self.n = n
        self.c = problem.c
        self.psd = []
        lin_const, lin_rows = [], []
        for b in problem.blocks:
            if b.size == 1:
                lin_const.append(b.const[0, 0])
                lin_rows.append(b.coeffs[:, 0, 0])
            else:
                self.psd.append((b.const, b.coeffs))
        if problem.lower_bounds is not None:
            for i, lb in enumerate(problem.lower_bounds):
                if np.isfinite(lb):
                    row = np.zeros(n)
                    row[i] = 1.0
                    lin_const.append(-lb)
                    lin_rows.append(row)
        self.lin_const = np.asarray(lin_const, dtype=float)
        self.lin_A = np.asarray(lin_rows, dtype=float).reshape(-1, n)
        self.E = problem.eq_matrix
        self.e = problem.eq_rhs
        self.nu = sum(C.shape[0] for C, _ in self.psd) + self.lin_const.size
        scale = [1.0, np.max(np.abs(self.c), initial=0.0)]
        for C, A in self.psd:
            scale += [np.max(np.abs(C)), np.max(np.abs(A), initial=0.0)]
        if self.lin_const.size:
            scale += [np.max(np.abs(self.lin_const)), np.max(np.abs(self.lin_A))]
        self.data_scale = float(max(scale))
        self.c_norm = 1.0 + np.linalg.norm(self.c)

    def adjoint(self, Zs, z):
        out = np.zeros(self.n)
        for (_, A), Z in zip(self.psd, Zs):
            out += np.einsum("iab,ab->i", A, Z)
        if z.size:
            out += self.lin_A.T @ z
        return out


def _max_step_scaled(lam, d):
    """Largest t with diag(lam) + t d >= 0, for lam > 0."""
    isq = 1.0 / np.sqrt(lam)
    ev = np.linalg.eigvalsh(_sym(d * isq[:, None] * isq[None, :]))[0]
    return np.inf if ev >= 0 else -1.0 / ev


def _max_step_lin(s, ds):
    neg = ds < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-s[neg] / ds[neg]))


def _solve_kkt(B, E, rhs_x, rhs_e, refine=2):
    """Solve (B^T B) dx + E^T v = rhs_x, E dx = rhs_e and return (dx, -v).

    The normal matrix B^T B is never formed: the equivalent augmented system
    [[-I, B, 0], [B^T, 0, E^T], [0, E, 0]] [u; dx; v] = [0; rhs_x; rhs_e] keeps
    the condition number of B rather than its square, which matters near
    optima that are not strictly complementary. The system is equilibrated
    symmetrically before factorization.
    """
    m, n = B.shape
    p = E.shape[0]
    K = np.zeros((m + n + p, m + n + p))
    K[:m, :m] = -np.eye(m)
    K[:m, m : m + n] = B
    K[m : m + n, :m] = B.T
    K[m : m + n, m + n :] = E.T
    K[m + n :, m : m + n] = E
    rhs = np.concatenate([np.zeros(m), rhs_x, rhs_e])
    dscale = np.sqrt(np.max(np.abs(K), axis=1))
    dscale[dscale == 0] = 1.0
    Ks = K / dscale[:, None] / dscale[None, :]
    try:
        lu = scipy.linalg.lu_factor(Ks, check_finite=False)
        sol = scipy.linalg.lu_solve(lu, rhs / dscale)
        for _ in range(refine):
            r = rhs - K @ (sol / dscale)
            sol += scipy.linalg.lu_solve(lu, r / dscale)
        sol = sol / dscale
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError("non-finite KKT solution")
    except (np.linalg.LinAlgError, ValueError):
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[m : m + n], -sol[m + n :]


class _Scaling:
    """Nesterov-Todd scaling of one PSD block.

    With S = r diag(lam) r^T and Z = rti diag(lam) rti^T (rti = r^{-T}), both
    scaled variables r^{-1} S r^{-T} and r^T Z r equal diag(lam).
    """

    def __init__(self, r, rti, lam):
        self.r, self.rti, self.lam = r, rti, lam

    def S(self):
        return _sym((self.r * self.lam) @ self.r.T)

    def Z(self):
        return _sym((self.rti * self.lam) @ self.rti.T)

    def to_scaled_primal(self, X):
        """r^{-1} X r^{-T}, which equals rti^T X rti."""
        return _sym(self.rti.T @ X @ self.rti)

    def from_scaled_dual(self, X):
        """Inverse of Z -> r^T Z r."""
        return _sym(self.rti @ X @ self.rti.T)

    def update(self, ds, dz):
        """Move to scaled points diag(lam) + ds and diag(lam) + dz and rescale."""
        L1 = np.linalg.cholesky(_sym(np.diag(self.lam) + ds))
        L2 = np.linalg.cholesky(_sym(np.diag(self.lam) + dz))
        U, lam, Vt = np.linalg.svd(L2.T @ L1)
        isq = 1.0 / np.sqrt(lam)
        self.r = (self.r @ L1 @ Vt.T) * isq
        self.rti = (self.rti @ L2 @ U) * isq
        self.lam = lam


def _lyap_solve(lam, R):
    """X with (diag(lam) X + X diag(lam)) / 2 = R."""
    return 2.0 * R / (lam[:, None] + lam[None, :])


def _circ(A, B):
    return 0.5 * (A @ B + B @ A)


def solve(problem, settings=None):
    """Solve an :class:`SdpProblem`.

    Returns an :class:`SdpSolution`; the status is ``OPTIMAL`` only when the
    LMI at ``x`` has smallest eigenvalue >= -``feas_tol``, the equality
    residual is at most ``feas_tol``, the relative dual residual is at most
    ``dual_feas_tol`` and the relative duality gap is at most ``gap_tol``. If the iteration breaks down numerically,
    the best iterate seen so far is returned with status ``MAX_ITER``.
    """
    st = settings or SdpSettings()
    d = _Data(problem)
    n = d.n

    # Start well inside the cones, scaled to the data.
    xi = 10.0 * max(1.0, d.data_scale)
    x = np.zeros(n)
    if d.E.shape[0]:
        x = np.linalg.lstsq(d.E, d.e, rcond=None)[0]
    scal = [
        _Scaling(np.eye(C.shape[0]), np.eye(C.shape[0]), np.full(C.shape[0], xi))
        for C, _ in d.psd
    ]
    s = np.full(d.lin_const.size, xi)
    z = np.full(d.lin_const.size, xi)
    y = np.zeros(d.E.shape[0])

    status = Status.MAX_ITER
    best = None
    it = 0
    for it in range(1, st.max_iter + 1):
        Ss = [w.S() for w in scal]
        Zs = [w.Z() for w in scal]
        Rp = [C + np.tensordot(x, A, axes=1) - S for (C, A), S in zip(d.psd, Ss)]
        rlin = d.lin_const + d.lin_A @ x - s
        re = d.e - d.E @ x
        Aty = d.adjoint(Zs, z) + d.E.T @ y
        rd = d.c - Aty

        gap = sum(float(w.lam @ w.lam) for w in scal) + float(s @ z)
        mu = gap / d.nu if d.nu else 0.0
        pobj = float(d.c @ x)
        dobj = float(
            -sum(np.sum(C * Z) for (C, _), Z in zip(d.psd, Zs)) - d.lin_const @ z + d.e @ y
        )
        dinf = np.linalg.norm(rd) / d.c_norm
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        # the status contract is stated on the LMI itself, not on the slack residual
        pviol = max(
            [-min_eigenvalue(C + np.tensordot(x, A, axes=1)) for C, A in d.psd]
            + ([-float(np.min(d.lin_const + d.lin_A @ x))] if s.size else [])
            + [float(np.max(np.abs(re), initial=0.0)), 0.0]
        )
        merit = max(pviol / st.feas_tol, dinf / st.dual_feas_tol, relgap / st.gap_tol)
        import os
        if best is None or merit < best[0]:
            best = (merit, x.copy(), [w.Z() for w in scal], z.copy(), y.copy(), it)
        if merit <= 1.0:
            status = Status.OPTIMAL
            break
        if best[0] < 1e3 and merit > 1e6 * best[0]:
            break  # numerical breakdown after near convergence

        # Divergence-based infeasibility detection.
        dual_size = sum(np.linalg.norm(Z) for Z in Zs) + np.linalg.norm(z) + np.linalg.norm(y)
        if dobj > 0 and dual_size > 1e6 * d.data_scale:
            if np.linalg.norm(Aty) / dobj <= st.infeas_tol * d.c_norm:
                status = Status.INFEASIBLE
                break
        if -pobj > 0 and np.linalg.norm(x) > 1e6 * d.data_scale:
            lmi_dir = min(
                [np.linalg.eigvalsh(S - C - R)[0] for (C, _), S, R in zip(d.psd, Ss, Rp)]
                + ([np.min(s - d.lin_const - rlin)] if s.size else [])
                + [np.inf]
            )
            if np.linalg.norm(d.E @ x) / -pobj <= st.infeas_tol and lmi_dir / -pobj >= -st.infeas_tol:
                status = Status.UNBOUNDED
                break

        try:
            # Scaled constraint matrices and residuals.
            At = [np.einsum("ab,ibc,cd->iad", w.rti.T, A, w.rti) for (_, A), w in zip(d.psd, scal)]
            Rt = [w.to_scaled_primal(R) for w, R in zip(scal, Rp)]
            wl = np.sqrt(s / z) if s.size else np.zeros(0)
            lam_l = np.sqrt(s * z) if s.size else np.zeros(0)
            rows = [A_.reshape(n, -1).T for A_ in At]
            if s.size:
                rows.append(d.lin_A / wl[:, None])
            B = np.vstack(rows) if rows else np.zeros((0, n))

            def direction(rhs_psd, rhs_lin):
                ts = [_lyap_solve(w.lam, R) for w, R in zip(scal, rhs_psd)]
                tl = rhs_lin / lam_l if s.size else np.zeros(0)
                h = -rd.copy()
                for A_, t, R in zip(At, ts, Rt):
                    h += np.einsum("iab,ab->i", A_, t - R)
                if s.size:
                    h += d.lin_A.T @ ((tl - rlin / wl) / wl)
                dx, dy = _solve_kkt(B, d.E, h, re)
                dss = [np.tensordot(dx, A_, axes=1) + R for A_, R in zip(At, Rt)]
                dzs = [t - ds_ for t, ds_ in zip(ts, dss)]
                dsl = (d.lin_A @ dx + rlin) / wl if s.size else np.zeros(0)
                dzl = tl - dsl
                return dx, dy, dss, dzs, dsl, dzl

            def steps(dss, dzs, dsl, dzl):
                ap = min(
                    [_max_step_scaled(w.lam, v) for w, v in zip(scal, dss)]
                    + [_max_step_lin(lam_l, dsl), np.inf]
                )
                ad = min(
                    [_max_step_scaled(w.lam, v) for w, v in zip(scal, dzs)]
                    + [_max_step_lin(lam_l, dzl), np.inf]
                )
                return min(1.0, st.step_fraction * ap), min(1.0, st.step_fraction * ad)

            # predictor
            aff = direction([-np.diag(w.lam**2) for w in scal], -(lam_l**2))
            ap, ad = steps(*aff[2:])
            gap_aff = sum(
                np.sum((np.diag(w.lam) + ap * a) * (np.diag(w.lam) + ad * b))
                for w, a, b in zip(scal, aff[2], aff[3])
            ) + float((lam_l + ap * aff[4]) @ (lam_l + ad * aff[5]))
            sigma = min(1.0, max(0.0, gap_aff / gap)) ** 3 if gap > 0 else 0.0
            # corrector
            rhs_psd = [
                sigma * mu * np.eye(w.lam.size) - np.diag(w.lam**2) - _circ(a, b)
                for w, a, b in zip(scal, aff[2], aff[3])
            ]
            rhs_lin = sigma * mu - lam_l**2 - aff[4] * aff[5]
            dx, dy, dss, dzs, dsl, dzl = direction(rhs_psd, rhs_lin)
            ap, ad = steps(dss, dzs, dsl, dzl)
            for w, a, b in zip(scal, dss, dzs):
                w.update(ap * a, ad * b)
            x = x + ap * dx
            if s.size:
                s = wl * (lam_l + ap * dsl)
                z = (lam_l + ad * dzl) / wl
            y = y + ad * dy
        except (np.linalg.LinAlgError, FloatingPointError, ValueError):
            break
        if not (np.all(np.isfinite(x)) and all(np.all(np.isfinite(w.lam)) for w in scal)):
            break

    if status is Status.MAX_ITER and best is not None:
        _, x, Zs, z, y, it = best
    else:
        Zs = [w.Z() for w in scal]
    pobj = float(d.c @ x)
    dobj = float(
        -sum(np.sum(C * Z) for (C, _), Z in zip(d.psd, Zs)) - d.lin_const @ z + d.e @ y
    )
    lmi_min = problem.lmi_min_eigenvalue(x)
    eq_res = float(np.max(np.abs(d.E @ x - d.e), initial=0.0))
    return SdpSolution(
        status=status,
        x=x,
        objective=pobj,
        dual_objective=dobj,
        lmi_min_eig=lmi_min,
        eq_residual=eq_res,
        iterations=it,
        dual_blocks=Zs,
        dual_linear=z,
        dual_eq=y,
    )
