"""Symbolic pressure for trigonometric-polynomial Elsasser states."""

import numpy as np
import sympy as sp

X = sp.symbols("x1 x2", real=True)


def mode_field(amp, m, L, phase="sin"):
    """Divergence-free single mode ``amp f(xi.x) xi_perp/|xi|`` with ``xi = pi m / L``."""
    xi = [sp.pi * sp.Integer(c) / L for c in m]
    arg = xi[0] * X[0] + xi[1] * X[1]
    f = sp.sin(arg) if phase == "sin" else sp.cos(arg)
    norm = sp.sqrt(xi[0] ** 2 + xi[1] ** 2)
    return [amp * f * (-xi[1]) / norm, amp * f * xi[0] / norm]


def symbolic_pressure(lp, lm):
    """Solve ``-lap p = d_i d_j (lm_i lp_j)`` mode by mode (zero mean)."""
    src = sum(sp.diff(lm[i] * lp[j], X[i], X[j]) for i in range(2) for j in range(2))
    expo = sp.expand(sp.powsimp(sp.expand(src.rewrite(sp.exp))))
    p = 0
    for term in sp.Add.make_args(expo):
        exps = [a for a in sp.Mul.make_args(term) if isinstance(a, sp.exp)]
        if not exps:
            continue  # constant source terms carry no pressure
        arg = sp.expand(sum(a.args[0] for a in exps) / sp.I)
        k1, k2 = arg.coeff(X[0]), arg.coeff(X[1])
        k2sum = k1**2 + k2**2
        if k2sum != 0:
            p += term / k2sum
    return sp.simplify(sp.expand(p).rewrite(sp.cos))


def evaluate(expr, grid):
    f = sp.lambdify(X, expr, "numpy")
    x1, x2 = grid.mesh
    return np.broadcast_to(np.asarray(f(x1, x2), dtype=float), grid.shape)


def state_arrays(field, grid):
    return np.stack([evaluate(c, grid) for c in field])
