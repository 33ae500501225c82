"""Momentum densities and translation-invariant position-space kernels.

A process is specified by a momentum-space density ``khat`` (radial, so a
function of ``|lambda|``) together with a statistics tag.  The position-space
kernel is the scaled inverse Fourier transform

    kappa(x) = (2 pi)^(-d) * integral khat(lambda) exp(i lambda . x) dlambda,

real and even for the radial densities built in here.  Closed forms are used
where they exist (ball indicator in d = 1, 3; Bose Gaussian series); everything
else goes through a radial quadrature reduction of the d-dimensional integral.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from .errors import (
    AccuracyError,
    ConstraintError,
    DivergenceError,
    ParameterError,
)

TWO_PI = 2.0 * math.pi

# surface area of the unit sphere and volume of the unit ball, d = 1, 2, 3
_SPHERE_AREA = {1: 2.0, 2: TWO_PI, 3: 4.0 * math.pi}
_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}

FERMION = "fermion"
BOSON = "boson"

_FAMILIES = ("fermi_dirac", "zero_temp", "bose", "tabulated")


def polylog(s, z, tol=1e-16, max_terms=100_000):
    """Polylogarithm Li_s(z) = sum_{n>=1} z^n / n^s for 0 <= z < 1."""
    if not 0.0 <= z < 1.0:
        raise ParameterError(f"polylog series needs 0 <= z < 1, got z={z}")
    acc = 0.0
    for n in range(1, max_terms + 1):
        term = z**n / n**s
        acc += term
        if term < tol * max(acc, 1e-300):
            return acc
    raise AccuracyError("polylog series did not converge")


# ---------------------------------------------------------------------------
# momentum densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentumDensity:
    """Radial momentum-space density khat(|lambda|) of a free gas.

    ``family`` selects the functional form, ``statistics`` the admissible
    bound (fermion: 0 <= khat <= 1; boson: 0 <= khat <= C).  Parameters not
    used by a family stay None.
    """

    family: str
    statistics: str
    d: int
    beta: float | None = None
    mu: float | None = None
    mass: float | None = None
    kf: float | None = None
    z: float | None = None
    grid: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ParameterError(f"unknown density family {self.family!r}")
        if self.statistics not in (FERMION, BOSON):
            raise ParameterError(f"statistics must be fermion or boson, got {self.statistics!r}")
        if not (isinstance(self.d, (int, np.integer)) and self.d >= 1):
            raise ParameterError(f"dimension must be a positive integer, got {self.d!r}")
        if self.d > 3:
            raise ParameterError("only d = 1, 2, 3 are supported")
        if self.family == "fermi_dirac":
            if self.beta is None or self.beta <= 0:
                raise ParameterError("fermi_dirac needs beta > 0")
            if self.mass is None or self.mass <= 0:
                raise ParameterError("fermi_dirac needs mass > 0")
            if self.mu is None:
                raise ParameterError("fermi_dirac needs a chemical potential mu")
        elif self.family == "zero_temp":
            if self.kf is None or self.kf <= 0:
                raise ParameterError("zero_temp needs Fermi momentum kf > 0")
        elif self.family == "bose":
            if self.beta is None or self.beta <= 0:
                raise ParameterError("bose needs beta > 0")
            if self.z is None or self.z <= 0:
                raise ParameterError("bose needs activity z > 0")
            if self.z >= 1:
                raise DivergenceError(f"bose series diverges for z = {self.z} >= 1")
        elif self.family == "tabulated":
            if self.grid is None or self.values is None:
                raise ParameterError("tabulated needs grid and values")
            g = np.asarray(self.grid, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if g.ndim != 1 or g.shape != v.shape or g.size < 2:
                raise ParameterError("tabulated grid/values must be matching 1-d arrays")
            if np.any(np.diff(g) <= 0) or g[0] < 0:
                raise ParameterError("tabulated grid must be strictly increasing radii >= 0")
            object.__setattr__(self, "grid", g)
            object.__setattr__(self, "values", v)

    # -- evaluation ---------------------------------------------------------

    def khat(self, r):
        """Evaluate khat at radial momentum |lambda| = r (vectorized)."""
        r = np.asarray(r, dtype=float)
        if self.family == "fermi_dirac":
            t = self.beta * (self.mu - r * r / (2.0 * self.mass))
            return special.expit(t)
        if self.family == "zero_temp":
            return np.where(r <= self.kf, 1.0, 0.0)
        if self.family == "bose":
            # z exp(-beta r^2) / (1 - z exp(-beta r^2)), the geometric resum
            # of the Gaussian series defining the Bose kernel
            e = self.z * np.exp(-self.beta * r * r)
            return e / (1.0 - e)
        # tabulated: linear interpolation, zero outside the grid
        return np.interp(r, self.grid, self.values, left=0.0, right=0.0)

    def upper_bound(self):
        """Analytic upper bound C with 0 <= khat <= C."""
        if self.family == "fermi_dirac":
            return float(special.expit(self.beta * self.mu))
        if self.family == "zero_temp":
            return 1.0
        if self.family == "bose":
            return self.z / (1.0 - self.z)
        return float(np.max(self.values))

    def truncation_radius(self, tol=1e-10):
        """Radius R with the analytic tail bound of the L1 integral below tol."""
        if self.family == "zero_temp":
            return float(self.kf)
        if self.family == "tabulated":
            return float(self.grid[-1])
        if self.family == "fermi_dirac":
            a = self.beta / (2.0 * self.mass)
            amp = math.exp(min(self.beta * self.mu, 700.0))
            start = math.sqrt(max(2.0 * self.mass * self.mu, 0.0)) + math.sqrt(1.0 / a)
        else:  # bose
            a = self.beta
            amp = self.z / (1.0 - self.z)
            start = math.sqrt(1.0 / a)
        r = max(start, 1e-3)
        for _ in range(300):
            if _gaussian_tail(amp, a, self.d, r) < tol:
                return r
            r *= 1.2
        raise AccuracyError("could not locate a truncation radius")

    def quad_breakpoints(self):
        """Radii where the integrand has structure the panels must resolve."""
        if self.family == "tabulated":
            return list(self.grid)
        if self.family == "fermi_dirac" and self.mu > 0:
            rf = math.sqrt(2.0 * self.mass * self.mu)
            width = 40.0 * self.mass / (self.beta * rf)
            lo, hi = max(rf - width, 0.0), rf + width
            return list(np.linspace(lo, hi, 33))
        return []


def _gaussian_tail(amp, a, d, r):
    # upper bound for amp * S_d * int_R^inf r^{d-1} exp(-a r^2) dr
    s = _SPHERE_AREA[d]
    return amp * s * 0.5 * a ** (-d / 2.0) * special.gamma(d / 2.0) * special.gammaincc(d / 2.0, a * r * r)


def fermi_dirac(beta, mu, mass=1.0, d=3, statistics=FERMION):
    return MomentumDensity("fermi_dirac", statistics, d, beta=beta, mu=mu, mass=mass)


def zero_temperature(kf, d=3, statistics=FERMION):
    return MomentumDensity("zero_temp", statistics, d, kf=kf)


def bose_gas(beta, z, d=3, statistics=BOSON):
    return MomentumDensity("bose", statistics, d, beta=beta, z=z)


def tabulated(grid, values, d=1, statistics=FERMION):
    return MomentumDensity(
        "tabulated", statistics, d, grid=np.asarray(grid, float), values=np.asarray(values, float)
    )


# ---------------------------------------------------------------------------
# closed-form kernels
# ---------------------------------------------------------------------------


def fermi_dirac_density(lam, beta, mu, mass=1.0):
    """Occupation exp(t)/(1+exp(t)) with t = beta*(mu - |lambda|^2/(2 mass)).

    ``lam`` is a momentum vector (or array of them, last axis = components).
    Evaluated through a logistic that never overflows.
    """
    if beta <= 0 or mass <= 0:
        raise ParameterError("beta and mass must be positive")
    lam = np.asarray(lam, dtype=float)
    r2 = lam * lam if lam.ndim == 0 else np.sum(lam * lam, axis=-1)
    return special.expit(beta * (mu - r2 / (2.0 * mass)))


def _zero_temp_radial_1d(r, kf):
    # sinc form with a 4-term Taylor patch near the removable singularity
    u = kf * np.asarray(r, dtype=float)
    small = u < 1e-3
    us = np.where(small, u, 1.0)
    series = (kf / math.pi) * (1.0 - us**2 / 6.0 + us**4 / 120.0 - us**6 / 5040.0)
    ub = np.where(small, 1.0, u)
    direct = (kf / math.pi) * np.sin(ub) / ub
    return np.where(small, series, direct)


def _zero_temp_radial_3d(r, kf):
    rho = kf**3 / (6.0 * math.pi**2)
    z = kf * np.asarray(r, dtype=float)
    small = z < 1e-3
    zs = np.where(small, z, 1.0)
    series = rho * (1.0 - zs**2 / 10.0 + zs**4 / 280.0 - zs**6 / 15120.0)
    zb = np.where(small, 1.0, z)
    direct = 3.0 * rho * (np.sin(zb) - zb * np.cos(zb)) / zb**3
    return np.where(small, series, direct)


def zero_temp_kernel_1d(x, kf):
    """sin(kf x)/(pi x), with the removable singularity filled at x = 0."""
    if kf <= 0:
        raise ParameterError("kf must be positive")
    x = np.asarray(x, dtype=float)
    out = _zero_temp_radial_1d(np.abs(x), kf)
    return out if out.ndim else float(out)


def zero_temp_kernel_3d(x, kf):
    """3 rho (sin z - z cos z)/z^3 at z = kf |x|, rho = kf^3/(6 pi^2)."""
    if kf <= 0:
        raise ParameterError("kf must be positive")
    x = np.asarray(x, dtype=float)
    r = np.abs(x) if x.ndim == 0 else np.linalg.norm(x, axis=-1)
    out = _zero_temp_radial_3d(r, kf)
    return out if out.ndim else float(out)


def _bose_series(r2, beta, z, d, tol=1e-12):
    """Partial sum of the Gaussian series plus its geometric tail bound."""
    r2 = np.asarray(r2, dtype=float)
    pref = (4.0 * math.pi * beta) ** (-d / 2.0)
    if z == 0.0:
        return np.zeros_like(r2), 0.0, 0
    if z >= 1.0:
        raise DivergenceError(f"bose series diverges for z = {z} >= 1")
    # tail over n > N is below z^(N+1)/(1-z) * (4 pi beta)^(-d/2)
    n_terms = max(1, int(math.ceil(math.log(tol * (1.0 - z) / pref) / math.log(z))))
    n = np.arange(1, n_terms + 1, dtype=float)
    coef = z**n * (4.0 * math.pi * beta * n) ** (-d / 2.0)
    vals = coef @ np.exp(-np.outer(1.0 / (4.0 * beta * n), r2.ravel()))
    tail = z ** (n_terms + 1) / (1.0 - z) * pref
    return vals.reshape(r2.shape), tail, n_terms


def bose_kernel(x, beta, z, d, n_terms=None, tol=1e-12):
    """Bose kernel sum_n z^n (4 pi beta n)^(-d/2) exp(-|x|^2/(4 n beta)).

    Returns (value, tail_bound).  With ``n_terms`` given the sum is truncated
    there; otherwise the truncation point is chosen from the geometric tail
    bound z^(N+1)/(1-z) * (4 pi beta)^(-d/2) < tol.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    if z < 0 or z >= 1:
        if z >= 1:
            raise DivergenceError(f"bose series diverges for z = {z} >= 1")
        raise ParameterError("activity z must be nonnegative")
    x = np.asarray(x, dtype=float)
    r2 = x * x if x.ndim == 0 else np.sum(x * x, axis=-1)
    if n_terms is not None:
        if z == 0.0:
            return (np.zeros_like(np.asarray(r2)), 0.0) if np.ndim(r2) else (0.0, 0.0)
        n = np.arange(1, n_terms + 1, dtype=float)
        coef = z**n * (4.0 * math.pi * beta * n) ** (-d / 2.0)
        vals = coef @ np.exp(-np.outer(1.0 / (4.0 * beta * n), np.atleast_1d(r2)))
        tail = z ** (n_terms + 1) / (1.0 - z) * (4.0 * math.pi * beta) ** (-d / 2.0)
        vals = vals.reshape(np.shape(r2))
        return (vals if vals.ndim else float(vals), tail)
    vals, tail, _ = _bose_series(r2, beta, z, d, tol)
    return (vals if np.ndim(vals) else float(vals), tail)


# ---------------------------------------------------------------------------
# radial quadrature for the inverse Fourier transform
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _panels(r_hi, max_width, breakpoints):
    edges = {0.0, r_hi}
    edges.update(b for b in breakpoints if 0.0 < b < r_hi)
    edges = sorted(edges)
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((hi - lo) / max_width)))
        out.extend(np.linspace(lo, hi, n + 1)[:-1])
    out.append(r_hi)
    return np.asarray(out)


def _quad_nodes(r_hi, max_width, breakpoints):
    edges = _panels(r_hi, max_width, breakpoints)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def inverse_ft_radial(density: MomentumDensity, radii, tol=1e-10):
    """kappa(|x|) for radii array by Gauss-Legendre panels on [0, R].

    The d-dimensional integral (2 pi)^(-d) int khat e^{i lambda.x} reduces to
    a 1-d radial integral against cos / J0 / sin(u)/u for d = 1 / 2 / 3.
    """
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    r_hi = density.truncation_radius(tol)
    rmax = float(np.max(radii)) if radii.size else 0.0
    max_width = min(r_hi, 8.0 / max(rmax, 1e-30), r_hi / 16.0)
    t, w = _quad_nodes(r_hi, max_width, density.quad_breakpoints())
    g = density.khat(t)
    d = density.d
    u = np.outer(radii, t)
    if d == 1:
        mat = np.cos(u)
        wg = w * g / math.pi
    elif d == 2:
        mat = special.j0(u)
        wg = w * g * t / TWO_PI
    else:
        mat = np.sinc(u / math.pi)
        wg = w * g * t * t / (2.0 * math.pi**2)
    return mat @ wg


def khat_l1_norm(density: MomentumDensity, tol=1e-10):
    """Numerical L1 norm of khat over R^d (radial quadrature)."""
    r_hi = density.truncation_radius(tol)
    t, w = _quad_nodes(r_hi, r_hi / 64.0, density.quad_breakpoints())
    g = np.abs(density.khat(t))
    return float(_SPHERE_AREA[density.d] * np.sum(w * g * t ** (density.d - 1)))


# ---------------------------------------------------------------------------
# kernel objects
# ---------------------------------------------------------------------------

_CLOSED_FORM = {("zero_temp", 1), ("zero_temp", 3), ("bose", 1), ("bose", 2), ("bose", 3)}


@dataclass(frozen=True, eq=False)
class Kernel:
    """Evaluator of the translation-invariant kernel kappa of a density.

    Stores kappa(0) and the L1 norm of khat; the latter gives the bound
    sup |kappa| <= (2 pi)^(-d) ||khat||_1 used by correlation caps.
    """

    density: MomentumDensity
    strategy: str
    kappa0: float
    l1_norm_khat: float
    quad_tol: float = 1e-10

    @property
    def d(self):
        return self.density.d

    @property
    def statistics(self):
        return self.density.statistics

    def sup_bound(self):
        """(2 pi)^(-d) ||khat||_1, a uniform bound for |kappa|."""
        return TWO_PI ** (-self.d) * self.l1_norm_khat

    def _eval_radii(self, radii):
        dens = self.density
        radii = np.asarray(radii, dtype=float)
        if self.strategy == "closed_form":
            if dens.family == "zero_temp":
                if dens.d == 1:
                    return _zero_temp_radial_1d(radii, dens.kf)
                return _zero_temp_radial_3d(radii, dens.kf)
            tol = min(self.quad_tol, 1e-13)
            vals, _, _ = _bose_series(radii * radii, dens.beta, dens.z, dens.d, tol)
            return vals
        return inverse_ft_radial(dens, radii, self.quad_tol)

    def evaluate(self, x):
        """kappa at displacement(s) x: scalar, (d,), or (N, d) array."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            r = np.abs(x)[None]
            return float(self._eval_radii(r)[0])
        if x.ndim == 1 and self.d == 1 and x.shape[0] != 1:
            return self._eval_radii(np.abs(x))
        if x.ndim == 1:
            r = np.linalg.norm(x)
            return float(self._eval_radii(np.asarray([r]))[0])
        return self._eval_radii(np.linalg.norm(x, axis=-1))

    __call__ = evaluate


def build_kernel(density: MomentumDensity, strategy=None, quad_tol=1e-10, check=True):
    """Construct the Kernel for a density, defaulting to the closed form."""
    if strategy is None:
        strategy = "closed_form" if (density.family, density.d) in _CLOSED_FORM else "quadrature"
    if strategy == "closed_form" and (density.family, density.d) not in _CLOSED_FORM:
        raise ParameterError(f"no closed form for family {density.family!r} in d={density.d}")
    if strategy not in ("closed_form", "quadrature"):
        raise ParameterError(f"unknown strategy {strategy!r}")

    if density.family == "zero_temp":
        l1 = _BALL_VOLUME[density.d] * density.kf**density.d
        kappa0 = TWO_PI ** (-density.d) * l1
    elif density.family == "bose":
        l1 = (math.pi / density.beta) ** (density.d / 2.0) * polylog(density.d / 2.0, density.z)
        kappa0 = TWO_PI ** (-density.d) * l1
    else:
        l1 = khat_l1_norm(density, quad_tol)
        kappa0 = TWO_PI ** (-density.d) * l1

    kern = Kernel(density, strategy, float(kappa0), float(l1), quad_tol)
    if check:
        # kappa(0) must match (2 pi)^(-d) ||khat||_1 whichever route computed it
        at0 = kern.evaluate(np.zeros(density.d))
        if abs(at0 - kappa0) > 1e-7 * max(1.0, abs(kappa0)):
            raise AccuracyError(
                f"kappa(0) = {at0} disagrees with (2pi)^-d ||khat||_1 = {kappa0}"
            )
    return kern


def kernel_from_density(density: MomentumDensity, x, tol=1e-10):
    """kappa(x) by quadrature of (2 pi)^(-d) int khat(lambda) e^{i lambda.x}."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        r = np.abs(x)[None]
        return float(inverse_ft_radial(density, r, tol)[0])
    if x.ndim == 1 and density.d == 1 and x.shape[0] != 1:
        return inverse_ft_radial(density, np.abs(x), tol)
    if x.ndim == 1:
        return float(inverse_ft_radial(density, np.asarray([np.linalg.norm(x)]), tol)[0])
    return inverse_ft_radial(density, np.linalg.norm(x, axis=-1), tol)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    statistics: str
    min_value: float
    max_value: float
    bound: float
    l1_norm: float
    violations: list = field(default_factory=list)
    messages: list = field(default_factory=list)


def validate_density(density: MomentumDensity, samples=4096, tol=1e-9):
    """Sample khat densely and check the range constraints of its statistics.

    Fermion densities must satisfy 0 <= khat <= 1, boson densities
    0 <= khat <= C for a finite C; both must be integrable.
    """
    r_hi = density.truncation_radius(1e-10)
    r = np.linspace(0.0, r_hi, samples)
    extra = density.quad_breakpoints()
    if extra:
        r = np.unique(np.concatenate([r, np.asarray(extra, float)]))
    vals = np.asarray(density.khat(r), dtype=float)
    report = ValidationReport(
        ok=True,
        statistics=density.statistics,
        min_value=float(np.min(vals)),
        max_value=float(np.max(vals)),
        bound=float(density.upper_bound()),
        l1_norm=khat_l1_norm(density),
    )
    bad_low = np.where(vals < -tol)[0]
    for i in bad_low[:16]:
        report.violations.append((float(r[i]), float(vals[i])))
    if bad_low.size:
        report.ok = False
        report.messages.append("khat takes negative values")
    if density.statistics == FERMION:
        bad_hi = np.where(vals > 1.0 + tol)[0]
        for i in bad_hi[:16]:
            report.violations.append((float(r[i]), float(vals[i])))
        if bad_hi.size:
            report.ok = False
            report.messages.append(
                "fermion momentum density violates 0 <= khat <= 1"
            )
    if not np.isfinite(report.l1_norm):
        report.ok = False
        report.messages.append("khat is not integrable on the truncation domain")
    return report


def require_valid(density: MomentumDensity):
    """Raise ConstraintError if the density violates its statistics bounds."""
    report = validate_density(density)
    if not report.ok:
        detail = "; ".join(report.messages)
        where = ", ".join(f"khat({r:.6g}) = {v:.6g}" for r, v in report.violations[:4])
        if where:
            detail = f"{detail} ({where})"
        raise ConstraintError(detail)
    return report


# ---------------------------------------------------------------------------
# plain-text config and CSV export
# ---------------------------------------------------------------------------


def read_keyvalue(path):
    """Parse a plain-text ``key = value`` file (# starts a comment)."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"malformed config line: {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def density_from_config(source):
    """Build a MomentumDensity from a config path or an already-parsed dict."""
    cfg = dict(source) if isinstance(source, dict) else read_keyvalue(source)
    try:
        family = cfg.pop("family")
    except KeyError:
        raise ParameterError("density config needs a 'family' entry") from None
    d = int(cfg.pop("d", 3))
    statistics = cfg.pop("statistics", None)
    kwargs = {}
    if family == "fermi_dirac":
        kwargs = dict(
            beta=float(cfg.pop("beta")),
            mu=float(cfg.pop("mu")),
            mass=float(cfg.pop("mass", 1.0)),
        )
        statistics = statistics or FERMION
    elif family == "zero_temp":
        kwargs = dict(kf=float(cfg.pop("kf")))
        statistics = statistics or FERMION
    elif family == "bose":
        kwargs = dict(beta=float(cfg.pop("beta")), z=float(cfg.pop("z")))
        statistics = statistics or BOSON
    elif family == "tabulated":
        grid = np.asarray([float(v) for v in cfg.pop("grid").split(",")])
        values = np.asarray([float(v) for v in cfg.pop("values").split(",")])
        kwargs = dict(grid=grid, values=values)
        statistics = statistics or FERMION
    else:
        raise ParameterError(f"unknown density family {family!r}")
    if cfg:
        raise ParameterError(f"unused config keys: {sorted(cfg)}")
    return MomentumDensity(family, statistics, d, **kwargs)


def write_kernel_csv(kernel: Kernel, points, path):
    """Write rows of (x components, Re kappa, Im kappa) for the given points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != kernel.d:
        raise ParameterError(f"points must have {kernel.d} columns")
    vals = kernel.evaluate(points)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(kernel.d)] + ["re_kappa", "im_kappa"])
        for row, v in zip(points, np.atleast_1d(vals)):
            writer.writerow([f"{c:.17g}" for c in row] + [f"{float(np.real(v)):.17g}", f"{float(np.imag(v)):.17g}"])
