"""Independent symbolic references used by the tests.

Nothing here imports the package's differentiation code: the third-order
controller is written out stage by stage with sympy doing the calculus, and
the filter coefficients come from expanding the operator product directly.
"""
from __future__ import annotations

from functools import lru_cache

import sympy as sp

X1, X2, X3, TH, DH, MU, MU1, MU2 = sp.symbols("x1 x2 x3 th dh mu mu1 mu2", real=True)
K1, K2, K3, G, GD, EPS, RHO = sp.symbols("k1 k2 k3 G gd eps rho", positive=True)


def _stage(z, w):
    ww = w * w
    root = sp.sqrt(z ** 2 * ww + EPS ** 2)
    damp = z * ww / root
    return ww, root, damp, z * damp


@lru_cache(maxsize=None)
def benchmark_controller():
    """Symbolic (u, alpha1, alpha2) for the scalar-parameter third-order chain.

    Regressors: phi1 = x1, phi2 = phi3 = 0. Gain signals mu, mu', mu'' are
    independent symbols; epsilon is constant.
    """
    phi1, phi2, phi3 = X1, 0, 0
    z1 = X1
    w1 = phi1
    ww1, root1, damp1, sig1 = _stage(z1, w1)
    a1 = -K1 * MU * z1 - w1 * TH - DH * damp1

    z2 = X2 - a1
    w2 = phi2 - sp.diff(a1, X1) * phi1
    ww2, root2, damp2, sig2 = _stage(z2, w2)
    tau_th2 = w1 * z1 + w2 * z2
    tau_d2 = sig1 + sig2
    a2 = (-K2 * MU * z2 - w2 * TH - DH * damp2
          + GD * sp.diff(a1, DH) * tau_d2
          + sp.diff(a1, X1) * X2
          - z1
          + sp.diff(a1, TH) * G * tau_th2
          + sp.diff(a1, MU) * MU1)

    z3 = X3 - a2
    w3 = phi3 - sp.diff(a2, X1) * phi1 - sp.diff(a2, X2) * phi2
    ww3, root3, damp3, sig3 = _stage(z3, w3)
    tau_th3 = tau_th2 + w3 * z3
    tau_d3 = tau_d2 + sig3
    f_on = -(sp.diff(a2, X1) * X2 + sp.diff(a2, X2) * X3) - (sp.diff(a2, MU) * MU1 + sp.diff(a2, MU1) * MU2)
    psi_th = sp.diff(a2, TH) * G * tau_th3 + sp.diff(a1, TH) * G * w3 * z2
    psi_d = GD * sp.diff(a2, DH) * tau_d3 + GD * damp3 * sp.diff(a1, DH) * z2
    Psi = z2 + w3 * TH + f_on - psi_th - psi_d
    K = K3 * MU + DH * ww3 / root3 + Psi ** 2 / sp.sqrt(z3 ** 2 * Psi ** 2 + EPS ** 2)
    u = RHO * (-K * z3)
    return u, a1, a2


ARGS = (X1, X2, X3, TH, DH, RHO, MU, MU1, MU2, K1, K2, K3, G, GD, EPS)


@lru_cache(maxsize=None)
def _compiled():
    u, a1, a2 = benchmark_controller()
    exprs = [u, a1, a2]
    for a in (a1, a2):
        exprs += [sp.diff(a, v) for v in (X1, X2, X3, TH, DH)]
    return sp.lambdify(ARGS, exprs, "mpmath")


def benchmark_values(x, th, dh, rho, mu, mu1, mu2, k=(6, 6, 6), G_=0.01, gd=0.01, eps=0.1):
    """Evaluate the symbolic controller in 40-digit mpmath arithmetic."""
    import mpmath

    with mpmath.workdps(40):
        args = [mpmath.mpf(repr(float(v))) for v in (*x, th, dh, rho, mu, mu1, mu2, *k, G_, gd, eps)]
        vals = [float(v) for v in _compiled()(*args)]
    grads = {"a1": vals[3:8], "a2": vals[8:13]}
    return vals[0], vals[1], vals[2], grads


def operator_filter(k, n):
    """Coefficients of s_n by expanding (d/dt + k_{n-1} mu)...(d/dt + k_1 mu) x_1 with mu' = mu^2.

    Returns integer lists (c, l) such that s_n = sum c_j mu^(n-j) x_j and the
    drift of s_n is sum l_j mu^(n-j+1) x_j.
    """
    t = sp.symbols("t")
    T = sp.symbols("T", positive=True)
    mu = 1 / (T - t)
    xs = [sp.Function(f"x{i + 1}")(t) for i in range(n + 1)]
    chain = {sp.Derivative(xs[i], t): xs[i + 1] for i in range(n)}
    s = xs[0]
    for i in range(1, n):
        s = sp.expand(k[i - 1] * mu * s + sp.diff(s, t).subs(chain))
    ds = sp.expand(sp.diff(s, t).subs(chain))
    c, l = [], []
    for j in range(n):
        cj = sp.simplify(s.coeff(xs[j]) / mu ** (n - 1 - j))
        lj = sp.simplify(ds.coeff(xs[j]) / mu ** (n - j))
        c.append(int(cj))
        l.append(int(lj))
    # the x_{n+1} coefficient of the drift is the input channel and must be 1
    assert sp.simplify(ds.coeff(xs[n]) - 1) == 0
    return c, l
