"""Independent reference implementations used only to check the package.

Everything here deliberately avoids the code paths of the package itself:
permanents by the naive permutation sum, inverse Fourier transforms by
adaptive QUADPACK quadrature, series by direct term-wise summation, Fredholm
determinants by exhaustive subset expansion.
"""

import itertools
import math

import numpy as np
from scipy import integrate, special


def naive_permanent(a):
    """Permutation-sum permanent, O(n! n)."""
    a = np.asarray(a)
    n = a.shape[0]
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(n)):
        prod = 1.0 + 0.0j
        for i, j in enumerate(perm):
            prod *= a[i, j]
        total += prod
    return total


def kappa_by_adaptive_quad(density, r, r_hi=None):
    """kappa(|x|=r) by adaptive radial quadrature (QUADPACK)."""
    d = density.d
    if r_hi is None:
        r_hi = density.truncation_radius(1e-12)
    if d == 1:
        f = lambda t: density.khat(t) * math.cos(t * r) / math.pi
    elif d == 2:
        f = lambda t: density.khat(t) * t * special.j0(t * r) / (2.0 * math.pi)
    else:
        f = lambda t: density.khat(t) * t * t * np.sinc(t * r / math.pi) / (2.0 * math.pi**2)
    val, _ = integrate.quad(f, 0.0, r_hi, limit=800, epsabs=1e-13, epsrel=1e-13)
    return val


def khat_l1_by_adaptive_quad(density, r_hi=None):
    surface = {1: 2.0, 2: 2 * math.pi, 3: 4 * math.pi}[density.d]
    if r_hi is None:
        r_hi = density.truncation_radius(1e-12)
    f = lambda t: abs(density.khat(t)) * t ** (density.d - 1)
    val, _ = integrate.quad(f, 0.0, r_hi, limit=800, epsabs=1e-13, epsrel=1e-13)
    return surface * val


def bose_series_direct(r, beta, z, d, tol=1e-15):
    """Direct term-by-term summation of the Bose Gaussian series."""
    acc = 0.0
    for n in range(1, 100_000):
        term = z**n * (4 * math.pi * beta * n) ** (-d / 2.0) * math.exp(-(r**2) / (4 * n * beta))
        acc += term
        if term < tol:
            return acc
    raise RuntimeError("series did not converge")


def subset_expansion_det(mat, u):
    """det(I + diag(u) M) by exhaustive expansion over principal minors."""
    n = len(u)
    total = 1.0 + 0.0j
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            sub = mat[np.ix_(subset, subset)]
            coeff = np.prod([u[j] for j in subset])
            total += coeff * np.linalg.det(sub)
    return total


def det3_hand(k0, kab, kac, kbc):
    """3x3 determinant of a symmetric kernel matrix, written out by hand."""
    return k0**3 - k0 * (kab**2 + kac**2 + kbc**2) + 2.0 * kab * kac * kbc


def binned_average(fun, edges, weight=None, n_sub=64):
    """Weighted average of fun(r) over each [e_i, e_{i+1}) bin.

    ``weight`` is the radial density of the estimator's reference measure
    (e.g. r^(d-1) times the box covariance profile); None means uniform.
    """
    out = np.empty(len(edges) - 1)
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        r = np.linspace(lo, hi, n_sub + 1)
        r = 0.5 * (r[1:] + r[:-1])
        w = np.ones_like(r) if weight is None else np.asarray(weight(r), dtype=float)
        out[i] = float(np.sum(w * fun(r)) / np.sum(w))
    return out
