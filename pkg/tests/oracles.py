"""Independent reference computations used by several test modules."""

import math

import numpy as np
import sympy as sp


def fd_weights(order, half_width):
    """Central finite-difference weights on offsets ``-w..w`` (Vandermonde solve)."""
    offs = np.arange(-half_width, half_width + 1, dtype=float)
    V = np.vander(offs, increasing=True).T
    rhs = np.zeros(len(offs))
    rhs[order] = math.factorial(order)
    return offs, np.linalg.solve(V, rhs)


def fd_mixed_derivative(func, points, gamma, h, half_width=4):
    """``D^gamma func`` at ``points`` (shape (P, N)) by tensor-product central differences.

    ``half_width=4`` gives 8th-order accuracy per axis.
    """
    points = np.atleast_2d(points)
    stencils = [fd_weights(g, half_width + (g - 1) // 2) if g else (np.zeros(1), np.ones(1)) for g in gamma]
    total = np.zeros(points.shape[0])
    grids = np.meshgrid(*[np.arange(len(s[0])) for s in stencils], indexing="ij")
    for idx in zip(*[g.ravel() for g in grids]):
        w = 1.0
        shift = np.zeros(points.shape[1])
        for ax, i in enumerate(idx):
            offs, wts = stencils[ax]
            w *= wts[i] / h ** gamma[ax] if gamma[ax] else wts[i]
            shift[ax] = offs[i] * h
        total += w * func(points + shift)
    return total


def chain_rule_constant_total(n):
    """Sum of the chain-rule constants for ``d^n/dx^n G(f(x))`` by symbolic differentiation."""
    x = sp.Symbol("x")
    G, f = sp.Function("G"), sp.Function("f")
    expr = sp.expand(sp.diff(G(f(x)), x, n))
    terms = expr.args if isinstance(expr, sp.Add) else (expr,)
    return int(sum(t.as_coeff_Mul()[0] for t in terms))


def chain_rule_constants(n):
    """``{(outer order, sorted part orders): constant}`` from symbolic differentiation."""
    x = sp.Symbol("x")
    G, f = sp.Function("G"), sp.Function("f")
    expr = sp.expand(sp.diff(G(f(x)), x, n))
    out = {}
    for t in (expr.args if isinstance(expr, sp.Add) else (expr,)):
        c, rest = t.as_coeff_Mul()
        outer, parts = 0, []
        for factor, power in rest.as_powers_dict().items():
            if isinstance(factor, sp.Subs) or (isinstance(factor, sp.Derivative) and factor.expr.func == G):
                outer = factor.derivative_count if isinstance(factor, sp.Derivative) else factor.expr.derivative_count
            elif isinstance(factor, sp.Derivative):
                parts += [factor.derivative_count] * int(power)
            elif factor.func == f:
                parts += [0] * int(power)
        out[(outer, tuple(sorted(parts, reverse=True)))] = int(c)
    return out


def grid_holder_quotient(values, lam):
    """Brute-force ``max |v_i - v_j| / d(x_i, x_j)^lam`` over all pairs of a 1-D periodic grid."""
    n = len(values)
    x = np.arange(n) / n
    d = np.abs(np.subtract.outer(x, x))
    d = np.minimum(d, 1 - d)
    diff = np.abs(np.subtract.outer(values, values))
    mask = d > 0
    return float(np.max(diff[mask] / d[mask] ** lam))
