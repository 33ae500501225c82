"""Window sampling of the fermion and boson processes and empirical estimators.

The fermion process is drawn by the spectral algorithm for determinantal
processes: Bernoulli-select eigenfunctions of the discretized kernel operator,
then peel points off the resulting projection kernel one at a time.  The boson
process uses its Cox representation: a complex Gaussian field G with
E[G(x) conj(G(y))] = kappa(x - y) is synthesized from the momentum density and
a Poisson configuration is drawn with intensity |G|^2.

Replicas are embarrassingly parallel: each owns a counter-based RNG stream
derived from (seed, replica index), so results do not depend on scheduling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DiscretizationError, ParameterError, SamplerStateError
from .kernels import TWO_PI, Kernel, MomentumDensity

_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}

CLAMP_LIMIT = 1e-3
NEGATIVE_PROB_TOL = -1e-9


def replica_rng(seed, replica):
    """Independent deterministic stream for one replica (Philox counter jump)."""
    bitgen = np.random.Philox(key=np.uint64(seed), counter=int(replica) << 128)
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class Window:
    """Axis-aligned box [0, L_1] x ... x [0, L_d]."""

    extents: tuple

    def __post_init__(self):
        ext = tuple(float(e) for e in np.atleast_1d(self.extents))
        if any(e <= 0 for e in ext):
            raise ParameterError("window extents must be positive")
        object.__setattr__(self, "extents", ext)

    @property
    def d(self):
        return len(self.extents)

    @property
    def volume(self):
        return float(np.prod(self.extents))

    def contains(self, points):
        pts = np.atleast_2d(points)
        return bool(np.all(pts >= 0) and np.all(pts <= np.asarray(self.extents)))


@dataclass(frozen=True)
class GridDiscretization:
    """Tensor grid of cells over a window; kernels are sampled at cell centers."""

    window: Window
    cells: tuple

    def __post_init__(self):
        cells = tuple(int(c) for c in np.atleast_1d(self.cells))
        if len(cells) != self.window.d:
            raise ParameterError("cells must give one count per axis")
        if any(c < 2 for c in cells):
            raise ParameterError("need at least 2 cells per axis")
        object.__setattr__(self, "cells", cells)

    @property
    def d(self):
        return self.window.d

    @property
    def n_cells(self):
        return int(np.prod(self.cells))

    @property
    def cell_sizes(self):
        return tuple(L / n for L, n in zip(self.window.extents, self.cells))

    @property
    def cell_volume(self):
        return float(np.prod(self.cell_sizes))

    def axis_centers(self, axis):
        h = self.cell_sizes[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def centers(self):
        axes = [self.axis_centers(a) for a in range(self.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def multi_indices(self):
        grids = np.meshgrid(*[np.arange(n) for n in self.cells], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass
class Configuration:
    """A finite point set sampled inside a window."""

    points: np.ndarray
    window: Window

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.window.d)
        if not np.all(np.isfinite(pts)):
            raise SamplerStateError("configuration contains non-finite points")
        if pts.size and not self.window.contains(pts):
            raise SamplerStateError("configuration has points outside the window")
        self.points = pts

    def __len__(self):
        return self.points.shape[0]


# ---------------------------------------------------------------------------
# kernel discretization
# ---------------------------------------------------------------------------


@dataclass
class DiscretizedKernel:
    """kappa(c_i - c_j) h^d on cell centers with its eigendecomposition."""

    grid: GridDiscretization
    statistics: str
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    clamp_magnitude: float

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)


def kernel_on_grid(kernel: Kernel, grid: GridDiscretization):
    """Pairwise kappa(c_i - c_j) via the difference lattice (Toeplitz structure)."""
    # unique center differences form a (2n_1-1) x ... lattice; evaluate once there
    offsets = [np.arange(-(n - 1), n) * h for n, h in zip(grid.cells, grid.cell_sizes)]
    mesh = np.meshgrid(*offsets, indexing="ij")
    diffs = np.stack([m.ravel() for m in mesh], axis=-1)
    table = np.asarray(kernel.evaluate(diffs), dtype=float).reshape(
        [2 * n - 1 for n in grid.cells]
    )
    idx = grid.multi_indices()
    lookup = tuple(
        idx[:, None, a] - idx[None, :, a] + (grid.cells[a] - 1) for a in range(grid.d)
    )
    return table[lookup]


def discretize_kernel(kernel: Kernel, grid: GridDiscretization, clamp_limit=CLAMP_LIMIT):
    """Hermitian eigendecomposition of the scaled kernel matrix on cell centers.

    Fermion eigenvalues are clamped to [0, 1] (boson: to >= 0); a clamp larger
    than ``clamp_limit`` means the grid is too coarse for the kernel.
    """
    mat = kernel_on_grid(kernel, grid) * grid.cell_volume
    w, v = np.linalg.eigh(mat)
    if kernel.statistics == "fermion":
        clamped = np.clip(w, 0.0, 1.0)
    else:
        clamped = np.clip(w, 0.0, None)
    clamp = float(np.max(np.abs(w - clamped))) if w.size else 0.0
    if clamp > clamp_limit:
        raise DiscretizationError(
            f"eigenvalue clamp {clamp:.3e} exceeds {clamp_limit:.0e}; refine the grid"
        )
    return DiscretizedKernel(grid, kernel.statistics, mat, clamped, v, clamp)


# ---------------------------------------------------------------------------
# fermion sampler (spectral / sequential projection peeling)
# ---------------------------------------------------------------------------


def _jitter(grid: GridDiscretization, flat_cells, rng):
    idx = np.unravel_index(flat_cells, grid.cells)
    centers = np.stack(
        [(np.asarray(ix) + 0.5) * h for ix, h in zip(idx, grid.cell_sizes)], axis=-1
    )
    if centers.size == 0:
        return centers.reshape(0, grid.d)
    shift = rng.uniform(-0.5, 0.5, size=centers.shape) * np.asarray(grid.cell_sizes)
    return centers + shift


def sample_fermion(disc: DiscretizedKernel, rng) -> Configuration:
    """One determinantal configuration from a discretized fermion kernel.

    Eigenvectors are kept with probability = eigenvalue; cells are then drawn
    sequentially from the projection kernel, Gram-Schmidt-reducing the basis
    after each draw; points are jittered uniformly inside their cells.
    """
    if disc.statistics != "fermion":
        raise ParameterError("sample_fermion needs a fermion discretization")
    lam = disc.eigenvalues
    keep = rng.random(lam.size) < lam
    v = disc.eigenvectors[:, keep].astype(complex)
    n_pts = v.shape[1]
    cells = []
    for remaining in range(n_pts, 0, -1):
        prob = np.einsum("ij,ij->i", v, v.conj()).real
        if prob.min() < NEGATIVE_PROB_TOL:
            raise SamplerStateError(f"negative cell probability {prob.min():.3e}")
        prob = np.clip(prob, 0.0, None)
        total = prob.sum()
        if not total > 0:
            raise SamplerStateError("projection kernel lost all mass")
        c = int(np.searchsorted(np.cumsum(prob) / total, rng.random(), side="right"))
        c = min(c, prob.size - 1)
        cells.append(c)
        if remaining == 1:
            break
        w = v[c, :].conj()
        norm = np.linalg.norm(w)
        if norm == 0.0:
            raise SamplerStateError("selected cell has zero amplitude")
        q, _ = np.linalg.qr(np.hstack([(w / norm)[:, None], np.eye(v.shape[1])]))
        v = v @ q[:, 1:]
    pts = _jitter(disc.grid, np.asarray(cells, dtype=int), rng)
    return Configuration(pts, disc.grid.window)


# ---------------------------------------------------------------------------
# boson sampler (Cox representation over a synthesized Gaussian field)
# ---------------------------------------------------------------------------


@dataclass
class BosonFieldSynthesizer:
    """Frequency-lattice synthesis of the complex Gaussian field of a boson gas.

    G(x) = sum_j sqrt((2 pi)^-d khat(lambda_j) dlam^d) xi_j exp(i lambda_j . x)
    with iid standard complex Gaussians xi_j, so E[G(x) conj(G(y))] is a
    Riemann sum for kappa(x - y).  The lattice spacing makes the field's
    period a multiple of the window, the extent covers khat's support.
    """

    density: MomentumDensity
    grid: GridDiscretization
    weights: np.ndarray
    n_freq: int

    @classmethod
    def build(cls, density, grid, period_factor=3.0, tol=1e-10):
        if density.d != grid.d:
            raise ParameterError("density and grid disagree on dimension")
        r_hi = density.truncation_radius(tol)
        axes = []
        for L in grid.window.extents:
            dlam = TWO_PI / (period_factor * L)
            n = int(math.ceil(r_hi / dlam))
            axes.append(np.arange(-n, n + 1) * dlam)
        mesh = np.meshgrid(*axes, indexing="ij")
        freqs = np.stack([m.ravel() for m in mesh], axis=-1)
        dvol = float(np.prod([ax[1] - ax[0] for ax in axes]))
        amp = np.sqrt(TWO_PI ** (-density.d) * density.khat(np.linalg.norm(freqs, axis=-1)) * dvol)
        phases = np.exp(1j * grid.centers() @ freqs.T)
        return cls(density, grid, phases * amp[None, :], freqs.shape[0])

    def field(self, rng):
        xi = (rng.standard_normal(self.n_freq) + 1j * rng.standard_normal(self.n_freq)) / math.sqrt(2.0)
        return self.weights @ xi


def sample_boson(synth: BosonFieldSynthesizer, rng) -> Configuration:
    """One Cox configuration: Poisson counts with intensity |G|^2 per cell."""
    g = synth.field(rng)
    intensity = np.abs(g) ** 2 * synth.grid.cell_volume
    counts = rng.poisson(intensity)
    flat = np.repeat(np.arange(intensity.size), counts)
    pts = _jitter(synth.grid, flat, rng)
    return Configuration(pts, synth.grid.window)


# ---------------------------------------------------------------------------
# replica orchestration
# ---------------------------------------------------------------------------


def run_replicas(statistics, grid, replicas, seed, kernel=None, density=None):
    """Draw ``replicas`` independent configurations of the requested process.

    Fermion sampling needs ``kernel`` (its discretization is computed once and
    shared); boson sampling needs ``density``.  Replica r uses the stream
    (seed, r), so any subset of replicas can be reproduced in isolation.
    """
    if statistics == "fermion":
        if kernel is None:
            raise ParameterError("fermion sampling needs a kernel")
        disc = discretize_kernel(kernel, grid)
        return [sample_fermion(disc, replica_rng(seed, r)) for r in range(replicas)], disc
    if statistics == "boson":
        if density is None:
            raise ParameterError("boson sampling needs a momentum density")
        synth = BosonFieldSynthesizer.build(density, grid)
        return [sample_boson(synth, replica_rng(seed, r)) for r in range(replicas)], synth
    raise ParameterError(f"unknown statistics {statistics!r}")


# ---------------------------------------------------------------------------
# empirical estimators
# ---------------------------------------------------------------------------


@dataclass
class IntensityEstimate:
    edges: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    global_mean: float
    global_stderr: float
    replicas: int


def estimate_intensity(configs, window: Window, bins=20):
    """Per-bin intensity along the first axis, with replica-wise standard errors."""
    if len(configs) < 2:
        raise ParameterError("need at least 2 replicas for standard errors")
    edges = np.linspace(0.0, window.extents[0], bins + 1)
    other = window.volume / window.extents[0]
    bin_vol = np.diff(edges) * other
    rows = []
    totals = []
    for cfg in configs:
        pts = cfg.points if isinstance(cfg, Configuration) else np.asarray(cfg)
        x0 = pts[:, 0] if pts.size else np.empty(0)
        rows.append(np.histogram(x0, bins=edges)[0] / bin_vol)
        totals.append(len(x0) / window.volume)
    rows = np.asarray(rows)
    totals = np.asarray(totals)
    r = len(configs)
    return IntensityEstimate(
        edges,
        rows.mean(axis=0),
        rows.std(axis=0, ddof=1) / math.sqrt(r),
        float(totals.mean()),
        float(totals.std(ddof=1) / math.sqrt(r)),
        r,
    )


def _pair_distances(pts):
    diff = pts[:, None, :] - pts[None, :, :]
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    iu = ~np.eye(pts.shape[0], dtype=bool)
    return r[iu]


_ANGLE_NODES, _ANGLE_WEIGHTS = np.polynomial.legendre.leggauss(48)


def box_covariance_profile(window: Window, r):
    """Angular average of the box set covariance at separation r, over |Lambda|.

    For ordered pairs of a box window, the measure of pairs at separation in
    [r, r+dr] is |Lambda| S_d r^(d-1) c(r) dr with c(r) the value returned
    here; c(0) = 1 and c decreases as separations start leaving the box.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    ext = np.asarray(window.extents)
    d = window.d
    if d == 1:
        prof = np.clip(1.0 - r / ext[0], 0.0, None)
    elif d == 2:
        theta = 0.25 * math.pi * (_ANGLE_NODES + 1.0)
        w = 0.25 * math.pi * _ANGLE_WEIGHTS
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        fac = np.clip(1.0 - r[:, None, None] * u[None, :, :] / ext, 0.0, None)
        prof = (np.prod(fac, axis=-1) @ w) / (0.5 * math.pi)
    else:
        theta = 0.25 * math.pi * (_ANGLE_NODES + 1.0)
        wt = 0.25 * math.pi * _ANGLE_WEIGHTS
        mu = 0.5 * (_ANGLE_NODES + 1.0)
        wm = 0.5 * _ANGLE_WEIGHTS
        st = np.sqrt(1.0 - mu**2)[:, None]
        u = np.stack(
            [
                np.broadcast_to(st * np.cos(theta)[None, :], (48, 48)),
                np.broadcast_to(st * np.sin(theta)[None, :], (48, 48)),
                np.broadcast_to(mu[:, None], (48, 48)),
            ],
            axis=-1,
        )
        fac = np.clip(1.0 - r[:, None, None, None] * u[None, ...] / ext, 0.0, None)
        integ = np.einsum("rmt,m,t->r", np.prod(fac, axis=-1), wm, wt)
        prof = integ / (0.5 * math.pi)
    return prof


def pair_reference_measure(window: Window, edges):
    """Exact per-bin measure of ordered pairs of a unit-intensity Poisson process.

    Integrates |Lambda| S_d r^(d-1) c(r) over each bin (translation-corrected
    reference; no empirical edge estimation involved).
    """
    edges = np.asarray(edges, dtype=float)
    d = window.d
    surface = {1: 2.0, 2: TWO_PI, 3: 4.0 * math.pi}[d]
    nodes, weights = np.polynomial.legendre.leggauss(24)
    out = np.empty(len(edges) - 1)
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        r = 0.5 * (hi + lo) + 0.5 * (hi - lo) * nodes
        w = 0.5 * (hi - lo) * weights
        out[i] = np.sum(w * surface * r ** (d - 1) * box_covariance_profile(window, r))
    return window.volume * out


@dataclass
class PairCorrelationEstimate:
    edges: np.ndarray
    g: np.ndarray
    stderr: np.ndarray
    pair_counts: np.ndarray
    replicas: int

    def usable(self, min_pairs=50):
        return self.pair_counts >= min_pairs


def estimate_pair_correlation(configs, window: Window, edges, intensity):
    """Normalized pair correlation g(r) = k2(r)/intensity^2 in radial bins.

    Distinct ordered pairs are binned by their true separation and normalized
    by the exact box reference measure (translation correction), which makes
    the estimator unbiased for the window-restricted process; ``edges`` must
    stay below half the shortest window extent.
    """
    edges = np.asarray(edges, dtype=float)
    if len(configs) < 2:
        raise ParameterError("need at least 2 replicas")
    if edges[-1] > min(window.extents) / 2.0 + 1e-12:
        raise ParameterError("pair-correlation bins must end below min(L)/2")
    denom = intensity**2 * pair_reference_measure(window, edges)
    rows = []
    counts = np.zeros(len(edges) - 1)
    for cfg in configs:
        pts = cfg.points if isinstance(cfg, Configuration) else np.asarray(cfg)
        if len(pts) >= 2:
            hist = np.histogram(_pair_distances(pts), bins=edges)[0]
        else:
            hist = np.zeros(len(edges) - 1)
        counts += hist
        rows.append(hist / denom)
    rows = np.asarray(rows)
    nrep = len(configs)
    return PairCorrelationEstimate(
        edges,
        rows.mean(axis=0),
        rows.std(axis=0, ddof=1) / math.sqrt(nrep),
        counts,
        nrep,
    )


def count_statistics(configs):
    """Mean and (ddof=1) variance of the configuration cardinalities."""
    counts = np.asarray([len(c) for c in configs], dtype=float)
    return float(counts.mean()), float(counts.var(ddof=1))


# ---------------------------------------------------------------------------
# CSV of sampled points
# ---------------------------------------------------------------------------


def write_points_csv(configs, path):
    d = configs[0].window.d if configs else 1
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replica"] + [f"x{i + 1}" for i in range(d)])
        for rep, cfg in enumerate(configs):
            for row in cfg.points:
                writer.writerow([rep] + [f"{c:.17g}" for c in row])


def read_points_csv(path, window: Window):
    """Read a points CSV back into per-replica Configurations."""
    by_rep = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "replica":
            raise ParameterError("points CSV must start with a 'replica' column")
        for row in reader:
            by_rep.setdefault(int(row[0]), []).append([float(v) for v in row[1:]])
    n_rep = max(by_rep) + 1 if by_rep else 0
    out = []
    for rep in range(n_rep):
        pts = np.asarray(by_rep.get(rep, []), dtype=float).reshape(-1, window.d)
        out.append(Configuration(pts, window))
    return out
