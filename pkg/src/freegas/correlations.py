"""Correlation functions as determinants / permanents of kernel matrices.

The n-th correlation function of the fermion process is det(kappa(x_i - x_j)),
of the boson process per(kappa(x_i - x_j)).  Fermion values are capped by the
Hadamard-type bound ((2 pi)^-d ||khat||_1)^n n^(n/2), which is asserted at
evaluation time; boson values by the cruder n! C^n permanent cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ParameterError, SizeError

MAX_PERMANENT_N = 20

IMAG_TOL = 1e-10
VALUE_TOL = 1e-10


def permanent(a):
    """Permanent by Ryser's inclusion-exclusion with Gray-code column updates.

    O(2^n n) exact evaluation; complex entries supported.  Sizes above
    MAX_PERMANENT_N are refused.
    """
    a = np.asarray(a)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ParameterError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0.0j
    if n > MAX_PERMANENT_N:
        raise SizeError(f"permanent limited to n <= {MAX_PERMANENT_N}, got {n}")
    row = np.zeros(n, dtype=complex)
    total = 0.0 + 0.0j
    prev = 0
    size = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        j = (gray ^ prev).bit_length() - 1
        if gray & (gray ^ prev):
            row += a[:, j]
            size += 1
        else:
            row -= a[:, j]
            size -= 1
        prev = gray
        prod = np.prod(row)
        total += -prod if size % 2 else prod
    return complex(total if n % 2 == 0 else -total)


def kernel_matrix(kernel, pts):
    """Matrix kappa(x_i - x_j) for an (n, d) array of points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = pts.shape[0]
    diffs = (pts[:, None, :] - pts[None, :, :]).reshape(n * n, -1)
    vals = np.asarray(kernel.evaluate(diffs), dtype=complex)
    return vals.reshape(n, n)


def hadamard_bound(kernel, n):
    """Cap ((2 pi)^-d ||khat||_1)^n n^(n/2) for fermion correlation values."""
    if kernel.statistics != "fermion":
        raise ParameterError("the Hadamard correlation cap applies to fermion kernels")
    return kernel.sup_bound() ** n * n ** (n / 2.0)


def _permanent_cap(kernel, n):
    # per(A) <= n! max|a_ij|^n; entries are bounded by sup|kappa|
    return math.factorial(n) * kernel.sup_bound() ** n


@dataclass
class CorrelationValue:
    value: float
    order: int
    statistics: str
    bound: float


def _strip_imag(raw, what):
    if abs(raw.imag) > IMAG_TOL:
        raise ConsistencyError(f"{what} has imaginary residue {raw.imag:.3e}")
    return raw.real


def det_correlation(kernel, pts):
    """Fermion correlation det(kappa(x_i - x_j)) with bound assertions."""
    if kernel.statistics != "fermion":
        raise ParameterError("det_correlation needs a fermion kernel")
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = pts.shape[0]
    mat = kernel_matrix(kernel, pts)
    value = _strip_imag(complex(np.linalg.det(mat)), "fermion determinant")
    bound = hadamard_bound(kernel, n)
    if value < -VALUE_TOL:
        raise ConsistencyError(f"fermion correlation came out negative: {value:.3e}")
    if value > bound + VALUE_TOL * max(1.0, bound):
        raise ConsistencyError(
            f"fermion correlation {value:.6g} exceeds its cap {bound:.6g} at n={n}"
        )
    return CorrelationValue(value, n, "fermion", bound)


def per_correlation(kernel, pts):
    """Boson correlation per(kappa(x_i - x_j)) via the Ryser permanent."""
    if kernel.statistics != "boson":
        raise ParameterError("per_correlation needs a boson kernel")
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = pts.shape[0]
    if n > MAX_PERMANENT_N:
        raise SizeError(f"permanent correlations limited to n <= {MAX_PERMANENT_N}")
    mat = kernel_matrix(kernel, pts)
    value = _strip_imag(permanent(mat), "boson permanent")
    bound = _permanent_cap(kernel, n)
    if value < -VALUE_TOL or value > bound + VALUE_TOL * max(1.0, bound):
        raise ConsistencyError(
            f"boson correlation {value:.6g} outside [0, {bound:.6g}] at n={n}"
        )
    return CorrelationValue(value, n, "boson", bound)


def correlation(kernel, pts):
    """det or per correlation according to the kernel's statistics."""
    if kernel.statistics == "fermion":
        return det_correlation(kernel, pts)
    return per_correlation(kernel, pts)


# ---------------------------------------------------------------------------
# factorial -> raw moments of the smeared field <gamma, f>
# ---------------------------------------------------------------------------


def raw_moments(kernel, centers, weights, cell_volume, order):
    """Raw moments E<gamma,f>^n, n <= 3, from correlation integrals on a grid.

    The factorial-moment integrals int f^(x)n k^(n) are combined over set
    partitions (the delta-recursion between factorial and raw moments):
    E<g,f>^2 = int int f f k2 + int f^2 k1, and the analogous n = 3 formula.
    Correlation values are expanded through kappa(0) and the pair kernel, so
    the grid sums reduce to quadratic/cubic forms in the kernel matrix.
    """
    if order < 1 or order > 3:
        raise ParameterError("raw moments implemented for order 1..3")
    f = np.asarray(weights, dtype=float)
    h = float(cell_volume)
    k0 = kernel.kappa0
    sign = -1.0 if kernel.statistics == "fermion" else 1.0
    s1 = h * f.sum()
    out = [k0 * s1]
    if order >= 2:
        kmat = kernel_matrix(kernel, np.asarray(centers, dtype=float))
        sq = np.abs(kmat) ** 2
        t2 = h * h * f @ sq @ f
        sf2 = h * (f**2).sum()
        out.append((k0 * s1) ** 2 + sign * t2 + k0 * sf2)
    if order == 3:
        w = kmat * f[None, :]
        tr3 = np.trace(w @ w @ w)
        f3 = (k0 * s1) ** 3 + sign * 3.0 * k0 * s1 * t2 + 2.0 * (h**3) * tr3.real
        cross = k0 * k0 * s1 * sf2 + sign * h * h * (f**2) @ sq @ f
        sf3 = h * (f**3).sum()
        out.append(f3 + 3.0 * cross + k0 * sf3)
    return out
