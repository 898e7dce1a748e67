"""Optimized step sizes for function-value criteria.

Solving the linearized design program gives, for each horizon N, the
fixed-step method with the smallest certified bound on

    (f(w_N) - f*) / |w_0 - w*|^2        (c_w = 1, c_f = 0)
    (f(w_N) - f*) / (f(w_0) - f*)       (c_w = 0, c_f = 1)

Step sizes h[k, j] multiply grad f(w_j) / L in the update of w_{k+1}.
"""

from itemopt import ClassParams, design_function_value

params = ClassParams(mu=0.1, L=1.0)

for label, c_w, c_f in (("f over distance", 1.0, 0.0), ("f over f", 0.0, 1.0)):
    print(f"== {label} ==")
    for N in range(1, 6):
        res = design_function_value(params, N, c_w, c_f)
        print(f"N = {N}: bound {res.tau:.4f}")
        for row in res.method.rows:
            print("   " + "  ".join(f"{v:.4f}" for v in row))

# The second family is symmetric about the anti-diagonal, and the first step
# depends on the horizon, unlike ITEM whose steps never look ahead.
h = design_function_value(params, 4, 0.0, 1.0).h
print("anti-diagonal symmetry residual:", abs(h - h[::-1, ::-1].T).max())
