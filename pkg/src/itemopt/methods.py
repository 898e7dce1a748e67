"""Runners for ITEM and fixed-step first-order methods, and the h <-> alpha maps.

A fixed-step method with coefficients ``h`` performs

    w_k = w_{k-1} - sum_{i<k} h[k-1, i] / L * grad f(w_i),     k = 1..N

and the same method written against f~ = f - mu/2 |. - w*|^2 reads

    w_k - w* = (w_0 - w*)(1 - mu/L sum_i alpha[k-1, i]) - sum_i alpha[k-1, i] / L * grad f~(w_i).

Coefficient matrices are N x N, strictly lower-triangular in the iterate index:
row ``k-1`` holds the entries for gradients ``0..k-1``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .oracles import FirstOrderOracle
from .schedules import ClassParams, Schedule, ogm_theta_sequence

__all__ = [
    "Form",
    "FixedStepMethod",
    "Trace",
    "run_item",
    "run_ogm",
    "run_fixed_step",
    "run_alpha_form",
    "alpha_from_h",
    "h_from_alpha",
    "extract_h",
    "item_runner",
    "ogm_runner",
    "gradient_descent_runner",
    "fixed_step_runner",
    "item_method",
    "trace_to_csv",
]


class Form(str, enum.Enum):
    H = "h"
    ALPHA = "alpha"


@dataclass(frozen=True)
class FixedStepMethod:
    params: ClassParams
    N: int
    form: Form
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(self.N, self.N)
        if np.any(np.triu(c, 1) != 0):
            raise ValueError("coefficients must be lower-triangular (row k-1 uses gradients < k)")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "form", Form(self.form))

    @classmethod
    def from_rows(cls, params, rows, form=Form.H):
        N = len(rows)
        c = np.zeros((N, N))
        for k, row in enumerate(rows):
            if len(row) != k + 1:
                raise ValueError(f"row {k + 1} must have {k + 1} entries, got {len(row)}")
            c[k, : k + 1] = row
        return cls(params, N, form, c)

    @property
    def rows(self):
        return [self.coeffs[k, : k + 1].tolist() for k in range(self.N)]

    def to_h(self):
        return self if self.form is Form.H else h_from_alpha(self)

    def to_alpha(self):
        return self if self.form is Form.ALPHA else alpha_from_h(self)

    def to_dict(self):
        return {
            "mu": self.params.mu,
            "L": self.params.L,
            "N": self.N,
            "form": self.form.value,
            "rows": self.rows,
        }

    @classmethod
    def from_dict(cls, data):
        params = ClassParams(data["mu"], data["L"])
        method = cls.from_rows(params, data["rows"], Form(data["form"]))
        if method.N != int(data["N"]):
            raise ValueError("N does not match the number of rows")
        return method

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class Trace:
    """Oracle calls of a run (one row per call) plus the returned point.

    ``sequences`` holds named iterate sequences, e.g. ``x``, ``y``, ``z`` for
    ITEM or ``w`` for fixed-step runs.
    """

    points: np.ndarray
    gradients: np.ndarray
    values: np.ndarray
    output: np.ndarray
    sequences: dict = field(default_factory=dict)

    @property
    def n_calls(self):
        return len(self.values)

    @property
    def dim(self):
        return self.output.size


def _check_start(oracle, x0):
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != oracle.dim:
        raise ValueError(f"x0 has dimension {x0.size}, oracle expects {oracle.dim}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    return x0


def _call(oracle, x, log):
    fval, g = oracle(x)
    if not (np.all(np.isfinite(g)) and np.isfinite(fval)):
        raise ValueError(f"oracle returned a non-finite value at call {len(log)}")
    log.append((x.copy(), g, fval))
    return g


def _finish(log, output, d, **seqs):
    pts = np.array([p for p, _, _ in log]).reshape(-1, d)
    grads = np.array([g for _, g, _ in log]).reshape(-1, d)
    vals = np.array([f for _, _, f in log])
    return Trace(pts, grads, vals, output, {k: np.array(v) for k, v in seqs.items()})


def _same_class(oracle, params):
    ok = np.isclose(oracle.mu, params.mu, rtol=1e-12, atol=1e-15) and np.isclose(
        oracle.L, params.L, rtol=1e-12, atol=0
    )
    if not ok:
        raise ValueError(
            f"oracle declares (mu, L) = ({oracle.mu}, {oracle.L}), "
            f"method expects ({params.mu}, {params.L})"
        )


def run_item(oracle, x0, schedule):
    """Run ITEM for ``schedule.N`` gradient evaluations (at y_0..y_{N-1})."""
    _same_class(oracle, schedule.params)
    x = z = _check_start(oracle, x0)
    L, q = schedule.params.L, schedule.q
    xs, ys, zs, log = [x], [], [z], []
    for k in range(schedule.N):
        b, dlt = schedule.beta[k], schedule.delta[k]
        y = (1 - b) * z + b * x
        g = _call(oracle, y, log)
        x = y - g / L
        z = (1 - q * dlt) * z + q * dlt * y - (dlt / L) * g
        xs.append(x)
        ys.append(y)
        zs.append(z)
    return _finish(log, z, oracle.dim, x=xs, y=ys, z=zs)


def run_ogm(oracle, x0, N, L):
    """OGM in its theta form, without the last-iteration adjustment."""
    theta = ogm_theta_sequence(N)
    x = z = _check_start(oracle, x0)
    xs, ys, zs, log = [x], [], [z], []
    for k in range(N):
        y = (theta[k] - 1) / theta[k] * x + z / theta[k]
        g = _call(oracle, y, log)
        x = y - g / L
        z = z - (2 * theta[k] / L) * g
        xs.append(x)
        ys.append(y)
        zs.append(z)
    return _finish(log, z, oracle.dim, x=xs, y=ys, z=zs)


def run_fixed_step(method, oracle, x0):
    if method.form is not Form.H:
        raise ValueError("run_fixed_step expects an h-form method")
    _same_class(oracle, method.params)
    w = _check_start(oracle, x0)
    h, L = method.coeffs, method.params.L
    ws, grads, log = [w], [], []
    for k in range(1, method.N + 1):
        grads.append(_call(oracle, ws[k - 1], log))
        step = sum(h[k - 1, i] * grads[i] for i in range(k))
        ws.append(ws[k - 1] - step / L)
    return _finish(log, ws[-1], oracle.dim, w=ws)


def run_alpha_form(method, tilde_oracle, w_star, x0):
    """Run an alpha-form method against f~; needs the minimizer (test use)."""
    if method.form is not Form.ALPHA:
        raise ValueError("run_alpha_form expects an alpha-form method")
    p = method.params
    if not (np.isclose(tilde_oracle.mu, 0.0) and np.isclose(tilde_oracle.L, p.L - p.mu)):
        raise ValueError("alpha-form runs need an oracle for f~ in F_{0, L-mu}")
    w0 = _check_start(tilde_oracle, x0)
    w_star = np.asarray(w_star, dtype=float).ravel()
    a, L, q = method.coeffs, p.L, p.q
    ws, grads, log = [w0], [], []
    for k in range(1, method.N + 1):
        grads.append(_call(tilde_oracle, ws[k - 1], log))
        row = a[k - 1, :k]
        w = w_star + (w0 - w_star) * (1 - q * row.sum()) - sum(
            row[i] * grads[i] for i in range(k)
        ) / L
        ws.append(w)
    return _finish(log, ws[-1], tilde_oracle.dim, w=ws)


def alpha_from_h(method):
    if method.form is not Form.H:
        raise ValueError("alpha_from_h expects an h-form method")
    h, q, N = method.coeffs, method.params.q, method.N
    a = np.zeros((N, N))
    # a[k-1, i] is alpha_{k,i}; h[k, i] is h_{k+1,i}
    for k in range(N):
        a[k, k] = h[k, k]
        for i in range(k):
            corr = sum(h[k, j] * a[j - 1, i] for j in range(i + 1, k + 1))
            a[k, i] = h[k, i] + a[k - 1, i] - q * corr
    return FixedStepMethod(method.params, N, Form.ALPHA, a)


def h_from_alpha(method):
    if method.form is not Form.ALPHA:
        raise ValueError("h_from_alpha expects an alpha-form method")
    a, q, N = method.coeffs, method.params.q, method.N
    h = np.zeros((N, N))
    for k in range(N):
        h[k, k] = a[k, k]
        for i in range(k - 1, -1, -1):
            corr = sum(h[k, j] * a[j - 1, i] for j in range(i + 1, k + 1))
            h[k, i] = a[k, i] - a[k - 1, i] + q * corr
    return FixedStepMethod(method.params, N, Form.H, h)


# -- runners: callables ``runner(oracle, x0) -> Trace`` --------------------------


def item_runner(schedule):
    return lambda oracle, x0: run_item(oracle, x0, schedule)


def ogm_runner(N, L):
    return lambda oracle, x0: run_ogm(oracle, x0, N, L)


def gradient_descent_runner(params, N, step=1.0):
    h = np.diag(np.full(N, float(step)))
    method = FixedStepMethod(params, N, Form.H, h)
    return lambda oracle, x0: run_fixed_step(method, oracle, x0)


def fixed_step_runner(method):
    method = method.to_h()
    return lambda oracle, x0: run_fixed_step(method, oracle, x0)


def _symbolic_run(runner, N, params, scale):
    """Run in R^{N+1}: x0 = scale*e_0 and the k-th gradient is scale*e_{k+1}."""
    calls = []

    def evaluate(x):
        k = len(calls)
        calls.append(k)
        g = np.zeros(N + 1)
        if k < N:
            g[k + 1] = scale
        return 0.0, g

    oracle = FirstOrderOracle(dim=N + 1, mu=params.mu, L=params.L, evaluate=evaluate)
    x0 = np.zeros(N + 1)
    x0[0] = scale
    trace = runner(oracle, x0)
    if trace.n_calls != N:
        raise ValueError(f"runner made {trace.n_calls} oracle calls, expected {N}")
    return np.vstack([trace.points, trace.output[None, :]]) / scale


def extract_h(runner, N, params, tol=1e-9):
    """Read the h coefficients of an affine first-order method off a symbolic run.

    Evaluation points become w_0..w_{N-1} and the runner's output becomes w_N.
    """
    W = _symbolic_run(runner, N, params, 1.0)
    W2 = _symbolic_run(runner, N, params, 2.0)
    resid = np.max(np.abs(W - W2))
    resid = max(resid, np.max(np.abs(W[:, 0] - 1.0)))
    for k in range(N + 1):
        # w_k may only depend on gradients 0..k-1
        resid = max(resid, np.max(np.abs(W[k, k + 1:]), initial=0.0))
    if resid > tol:
        raise ValueError(f"runner is not an affine fixed-step method (residual {resid:.3g})")
    L = params.L
    h = np.zeros((N, N))
    for k in range(1, N + 1):
        h[k - 1, :k] = -L * (W[k, 1 : k + 1] - W[k - 1, 1 : k + 1])
    return FixedStepMethod(params, N, Form.H, h)


def item_method(schedule, form=Form.H):
    """ITEM as a fixed-step method (w_i = y_i, w_N = z_N)."""
    m = extract_h(item_runner(schedule), schedule.N, schedule.params)
    return m if Form(form) is Form.H else alpha_from_h(m)


def trace_to_csv(trace, oracle, sequence="z", bound=None):
    """CSV with columns k, dist_sq, f_gap (and bound when given) along one sequence."""
    pts = trace.sequences[sequence]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["k", "dist_sq", "f_gap"] + (["bound"] if bound is not None else [])
    w.writerow(header)
    for k, p in enumerate(pts):
        r = p - oracle.x_star
        fval, _ = oracle(p)
        row = [k, repr(float(r @ r)), repr(fval - oracle.f_star)]
        if bound is not None:
            row.append(repr(float(bound[k])))
        w.writerow(row)
    return buf.getvalue()
