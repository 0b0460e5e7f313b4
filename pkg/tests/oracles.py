"""Independent reference computations used to cross-check the library.

Everything here is deliberately naive (bisection, dense grids, brute force)
and shares no code with the package.
"""

import math

import numpy as np


def bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambert_secondary(x):
    """W_{-1}(x) by bisection on w e^w = x over (-700, -1)."""
    return bisect(lambda w: w * math.exp(w) - x, -700.0, -1.0)


def lambert_principal(x):
    return bisect(lambda w: w * math.exp(w) - x, -1.0, max(1.0, math.log1p(x) + 1.0))


def m_of_rho(rho, gamma):
    return math.log(1.0 / rho) / (2.0 * (gamma - rho) ** 2)


def grid_min_m(gamma, step=1e-6):
    """Smallest integer sample size over a rho grid, with its minimiser."""
    rho = np.arange(step, min(gamma, 0.5), step)
    m = np.log(1.0 / rho) / (2.0 * (gamma - rho) ** 2)
    i = int(np.argmin(m))
    return math.ceil(m[i]), float(rho[i])


def grid_min_gamma(m, lo=1e-8, step=1e-6):
    rho = np.arange(lo, 0.5, step)
    g = rho + np.sqrt(np.log(1.0 / rho) / (2.0 * m))
    i = int(np.argmin(g))
    return float(g[i]), float(rho[i])


def brute_min_k(m, gamma, step=1e-6):
    """Smallest k over feasible rho on a grid."""
    rho = np.arange(step, min(gamma, 0.5), step)
    ok = m >= np.log(1.0 / rho) / (2.0 * (gamma - rho) ** 2)
    rho = rho[ok]
    if rho.size == 0:
        return None
    k = np.ceil(m * (1.0 - gamma + rho + np.sqrt(np.log(1.0 / rho) / (2.0 * m))) - 1e-9)
    return int(k.min())


def svm_primal_grid(X, y, C, half_width=8.0, points=61, levels=9):
    """Minimum of 0.5|w|^2 + C/n sum hinge by repeatedly refined dense grids over (w, b)."""
    n, d = X.shape
    centre = np.zeros(d + 1)
    width = half_width
    best = (math.inf, None)
    for _ in range(levels):
        axes = [np.linspace(c - width, c + width, points) for c in centre]
        mesh = np.meshgrid(*axes, indexing="ij")
        W = np.stack([g.ravel() for g in mesh[:-1]], axis=1)
        B = mesh[-1].ravel()
        margins = y[None, :] * (W @ X.T + B[:, None])
        obj = 0.5 * (W**2).sum(axis=1) + C / n * np.maximum(0.0, 1.0 - margins).sum(axis=1)
        i = int(np.argmin(obj))
        if obj[i] < best[0]:
            best = (float(obj[i]), np.append(W[i], B[i]))
        centre = best[1]
        width /= 4.0
    return best
