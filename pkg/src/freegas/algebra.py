"""Finite-dimensional doubled-Fock realization of quasi-free field algebras.

For an m x m Hermitian matrix K this module builds, on the Fock space over a
doubled one-particle space C^m + C^m, the fields

    fermion:  psi(f) = a_2(K2 f) + a*_1(conj(K1 f)),   K1 = K^(1/2),  K2 = (1-K)^(1/2)
    boson:    phi(f) = b_2(K2 f) + b*_1(conj(K1 f)),   K1 = K^(1/2),  K2 = (1+K)^(1/2)

as dense matrices, so that every algebraic identity of the construction (CAR /
CCR, determinant / permanent n-point formulas, normal products, factorial
moments) can be verified to machine precision by brute-force matrix algebra.

Conventions: inner products are antilinear in the first argument; vacuum
expectations are (Op vacuum, vacuum), i.e. conj(Op[0, 0]).  Fermion modes are
Jordan-Wigner ordered on the doubled index set with factor-1 modes first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .correlations import permanent
from .errors import ConstraintError, ParameterError, SizeError

FERMION = "fermion"
BOSON = "boson"

MAX_FERMION_M = 5  # dense 4^m matrices; 4^5 = 1024 is the supported envelope


def max_abs(a):
    """Max-entry norm used by all deviation checks."""
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def anticommutator(a, b):
    return a @ b + b @ a


def commutator(a, b):
    return a @ b - b @ a


# ---------------------------------------------------------------------------
# Fock spaces and mode operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FermionFockSpace:
    """Antisymmetric Fock space over C^m + C^m, basis = subsets of 2m modes.

    Basis state s occupies mode j iff bit j of s is set; the vacuum is s = 0.
    """

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError("need at least one mode")
        if self.m > MAX_FERMION_M:
            raise SizeError(f"fermion spaces limited to m <= {MAX_FERMION_M}")

    @property
    def nmodes(self):
        return 2 * self.m

    @property
    def dim(self):
        return 1 << self.nmodes


@dataclass(frozen=True)
class BosonFockSpace:
    """Symmetric Fock space over C^m + C^m truncated at total occupation n_max."""

    m: int
    n_max: int

    def __post_init__(self):
        if self.m < 1 or self.n_max < 1:
            raise ParameterError("need m >= 1 and n_max >= 1")

    @property
    def nmodes(self):
        return 2 * self.m

    @property
    def dim(self):
        return len(self.basis())

    def basis(self):
        return _boson_basis(self.nmodes, self.n_max)

    def totals(self):
        return np.array([sum(b) for b in self.basis()])


@lru_cache(maxsize=None)
def _boson_basis(nmodes, n_max):
    states = []
    for total in range(n_max + 1):
        states.extend(_occupations(nmodes, total))
    return tuple(states)


def _occupations(nmodes, total):
    if nmodes == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _occupations(nmodes - 1, total - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _car_annihilators(m):
    space = FermionFockSpace(m)
    dim, nmodes = space.dim, space.nmodes
    ops = []
    for i in range(nmodes):
        bit = 1 << i
        below = bit - 1
        a = np.zeros((dim, dim), dtype=complex)
        for s in range(dim):
            if s & bit:
                sign = -1.0 if (s & below).bit_count() % 2 else 1.0
                a[s ^ bit, s] = sign
        ops.append(a)
    return tuple(ops)


@lru_cache(maxsize=None)
def _ccr_annihilators(m, n_max):
    space = BosonFockSpace(m, n_max)
    basis = space.basis()
    index = {b: k for k, b in enumerate(basis)}
    dim, nmodes = len(basis), space.nmodes
    ops = []
    for i in range(nmodes):
        b = np.zeros((dim, dim), dtype=complex)
        for k, occ in enumerate(basis):
            n_i = occ[i]
            if n_i:
                lowered = occ[:i] + (n_i - 1,) + occ[i + 1 :]
                b[index[lowered], k] = np.sqrt(n_i)
        ops.append(b)
    return tuple(ops)


def car_operators(space: FermionFockSpace):
    """Jordan-Wigner annihilation/creation matrices a_i, a*_i, i = 0..2m-1."""
    ann = _car_annihilators(space.m)
    return list(ann), [a.conj().T for a in ann]


def ccr_operators(space: BosonFockSpace):
    """Occupation-number annihilation/creation matrices b_i, b*_i on the cutoff basis."""
    ann = _ccr_annihilators(space.m, space.n_max)
    return list(ann), [b.conj().T for b in ann]


def cutoff_projector(space: BosonFockSpace, max_total):
    """Diagonal projector onto total occupation <= max_total."""
    keep = (space.totals() <= max_total).astype(float)
    return np.diag(keep)


# ---------------------------------------------------------------------------
# K matrices
# ---------------------------------------------------------------------------

EIG_CLAMP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KMatrix:
    """Hermitian two-point matrix; eigenvalues in [0,1] (fermion) or >= 0 (boson)."""

    matrix: np.ndarray
    statistics: str

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ParameterError("K must be a square matrix")
        if max_abs(mat - mat.conj().T) > 1e-12:
            raise ConstraintError("K must be Hermitian to 1e-12")
        if self.statistics not in (FERMION, BOSON):
            raise ParameterError(f"unknown statistics {self.statistics!r}")
        object.__setattr__(self, "matrix", mat)
        w = np.linalg.eigvalsh(mat)
        if self.statistics == FERMION:
            if w.min() < -EIG_CLAMP_TOL or w.max() > 1.0 + EIG_CLAMP_TOL:
                raise ConstraintError(
                    f"fermion K needs spectrum in [0,1]; got [{w.min():.3e}, {w.max():.3e}]"
                )
        elif w.min() < -EIG_CLAMP_TOL:
            raise ConstraintError(f"boson K needs spectrum >= 0; got min {w.min():.3e}")

    @property
    def m(self):
        return self.matrix.shape[0]

    def factors(self):
        """(K1, K2) = (K^(1/2), (1 -+ K)^(1/2)) by Hermitian eigendecomposition.

        Eigenvalues are clamped to the admissible interval to absorb round-off.
        """
        w, u = np.linalg.eigh(self.matrix)
        if self.statistics == FERMION:
            w = np.clip(w, 0.0, 1.0)
            k2w = 1.0 - w
        else:
            w = np.clip(w, 0.0, None)
            k2w = 1.0 + w
        k1 = (u * np.sqrt(w)) @ u.conj().T
        k2 = (u * np.sqrt(k2w)) @ u.conj().T
        return k1, k2


def random_kmatrix(m, statistics, rng, scale=1.5):
    """Random Hermitian K with admissible spectrum (Haar-like eigenvectors)."""
    g = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    q, r = np.linalg.qr(g)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    if statistics == FERMION:
        w = rng.uniform(0.0, 1.0, size=m)
    else:
        w = rng.uniform(0.0, scale, size=m)
    return KMatrix((q * w) @ q.conj().T, statistics)


# ---------------------------------------------------------------------------
# field algebra
# ---------------------------------------------------------------------------


class FieldAlgebra:
    """Annihilation/creation fields and density operators for a given K.

    ``annihilator(f)`` is antilinear in f, ``creator(f)`` linear, and
    ``creator(f) == annihilator(f)^dagger`` as matrices.
    """

    def __init__(self, kmatrix: KMatrix, space=None, n_max=None):
        self.k = kmatrix
        self.statistics = kmatrix.statistics
        m = kmatrix.m
        if space is None:
            if self.statistics == FERMION:
                space = FermionFockSpace(m)
            else:
                if n_max is None:
                    raise ParameterError("boson fields need a space or n_max")
                space = BosonFockSpace(m, n_max)
        if space.m != m:
            raise ParameterError("space and K disagree on the number of sites")
        expected = FermionFockSpace if self.statistics == FERMION else BosonFockSpace
        if not isinstance(space, expected):
            raise ParameterError("space statistics does not match K statistics")
        self.space = space
        self.k1, self.k2 = kmatrix.factors()
        if self.statistics == FERMION:
            ann = _car_annihilators(m)
        else:
            ann = _ccr_annihilators(m, space.n_max)
        self._ann1 = ann[:m]
        self._ann2 = ann[m:]
        self._cre1 = [a.conj().T for a in self._ann1]
        self._site_density_cache = {}
        self._site_ann_cache = {}

    @property
    def m(self):
        return self.k.m

    @property
    def dim(self):
        return self.space.dim

    def vacuum(self):
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def vacuum_expectation(self, op):
        """(Op vacuum, vacuum) with the inner product antilinear on the left."""
        return complex(np.conj(op[0, 0]))

    def annihilator(self, f):
        """psi(f) (fermion) or phi(f) (boson); antilinear in f."""
        f = np.asarray(f, dtype=complex)
        c2 = np.conj(self.k2 @ f)
        c1 = np.conj(self.k1 @ f)
        op = np.zeros((self.dim, self.dim), dtype=complex)
        for j in range(self.m):
            if c2[j] != 0.0:
                op += c2[j] * self._ann2[j]
            if c1[j] != 0.0:
                op += c1[j] * self._cre1[j]
        return op

    def creator(self, f):
        """psi*(f) / phi*(f) = annihilator(f)^dagger; linear in f."""
        return self.annihilator(f).conj().T

    def site_annihilator(self, i):
        if i not in self._site_ann_cache:
            e = np.zeros(self.m)
            e[i] = 1.0
            self._site_ann_cache[i] = self.annihilator(e)
        return self._site_ann_cache[i]

    def site_density(self, i):
        """rho_i = psi*(e_i) psi(e_i)."""
        if i not in self._site_density_cache:
            a = self.site_annihilator(i)
            self._site_density_cache[i] = a.conj().T @ a
        return self._site_density_cache[i]

    def density(self, weights):
        """Smeared density rho(f) = sum_i f(i) rho_i for real site weights."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.m,):
            raise ParameterError(f"weights must have shape ({self.m},)")
        op = np.zeros((self.dim, self.dim), dtype=complex)
        for i, w in enumerate(weights):
            if w != 0.0:
                op += w * self.site_density(i)
        return op

    def safe_projector(self, degree):
        """Projector making products of ``degree`` field factors cutoff-exact.

        Identity for fermions; for bosons the projector onto total occupation
        <= n_max - degree, since each field factor raises the total by at most one.
        """
        if self.statistics == FERMION:
            return np.eye(self.dim)
        return cutoff_projector(self.space, self.space.n_max - degree)


def fermion_fields(kmatrix: KMatrix, space=None):
    if kmatrix.statistics != FERMION:
        raise ParameterError("fermion_fields needs a fermion K")
    return FieldAlgebra(kmatrix, space)


def boson_fields(kmatrix: KMatrix, space=None, n_max=None):
    if kmatrix.statistics != BOSON:
        raise ParameterError("boson_fields needs a boson K")
    return FieldAlgebra(kmatrix, space, n_max=n_max)


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------


@dataclass
class NPointCheck:
    measured: complex
    formula: complex
    deviation: float


def n_point_check(fields: FieldAlgebra, fs, gs):
    """Vacuum n-point value against the det/per formula of the quasi-free state.

    measured = (psi*(f_n)...psi*(f_1) psi(g_1)...psi(g_m) vacuum, vacuum);
    formula  = delta_{n,m} det (fermion) or per (boson) of ((f_i, K g_j)).
    """
    fs = [np.asarray(f, dtype=complex) for f in fs]
    gs = [np.asarray(g, dtype=complex) for g in gs]
    op = np.eye(fields.dim, dtype=complex)
    for f in reversed(fs):
        op = op @ fields.creator(f)
    for g in gs:
        op = op @ fields.annihilator(g)
    measured = fields.vacuum_expectation(op)
    if len(fs) != len(gs):
        formula = 0.0 + 0.0j
    else:
        gram = np.array([[np.vdot(f, fields.k.matrix @ g) for g in gs] for f in fs])
        if fields.statistics == FERMION:
            formula = complex(np.linalg.det(gram)) if len(fs) else 1.0 + 0.0j
        else:
            formula = complex(permanent(gram)) if len(fs) else 1.0 + 0.0j
    return NPointCheck(measured, formula, abs(measured - formula))


def commutativity_check(fields: FieldAlgebra, w1, w2):
    """Max-entry norm of [rho(f1), rho(f2)], cutoff-projected for bosons."""
    r1 = fields.density(w1)
    r2 = fields.density(w2)
    return max_abs(commutator(r1, r2) @ fields.safe_projector(4))


def normal_product(fields: FieldAlgebra, sites):
    """Symmetrized normal product :rho_{i_1} ... rho_{i_n}: via the recursion

    :rho_i: = rho_i,
    :rho tuple+last: = sym( rho_last :rho tuple: - (# equal sites) :rho tuple: ).
    """
    sites = tuple(sites)
    if not sites:
        raise ParameterError("need at least one site")
    memo = {}

    def build(key):
        if key in memo:
            return memo[key]
        if len(key) == 1:
            out = fields.site_density(key[0])
        else:
            out = np.zeros((fields.dim, fields.dim), dtype=complex)
            for pos in range(len(key)):
                last = key[pos]
                rest = tuple(sorted(key[:pos] + key[pos + 1 :]))
                inner = build(rest)
                dup = sum(1 for s in rest if s == last)
                out += fields.site_density(last) @ inner - dup * inner
            out /= len(key)
        memo[key] = out
        return out

    return build(tuple(sorted(sites)))


def creation_ordered_string(fields: FieldAlgebra, sites):
    """psi*(e_{i_n}) ... psi*(e_{i_1}) psi(e_{i_1}) ... psi(e_{i_n})."""
    sites = tuple(sites)
    op = np.eye(fields.dim, dtype=complex)
    for i in reversed(sites):
        op = op @ fields.site_annihilator(i).conj().T
    for i in sites:
        op = op @ fields.site_annihilator(i)
    return op


def wick_identity_check(fields: FieldAlgebra, sites):
    """Deviation of the normal product from the creation-ordered field string.

    Both sides are symmetrized over the site tuple; bosons are compared on the
    cutoff-safe subspace.
    """
    sites = tuple(sites)
    n = len(sites)
    sym = np.zeros((fields.dim, fields.dim), dtype=complex)
    perms = set(itertools.permutations(sites))
    for p in perms:
        sym += creation_ordered_string(fields, p)
    sym /= len(perms)
    diff = normal_product(fields, sites) - sym
    return max_abs(diff @ fields.safe_projector(2 * n))


@dataclass
class FactorialMoment:
    value: float
    formula: float
    deviation: float


def factorial_moment(fields: FieldAlgebra, sites):
    """Vacuum value of :rho...: against det/per of the K submatrix at the sites."""
    sites = tuple(sites)
    value = fields.vacuum_expectation(normal_product(fields, sites))
    sub = fields.k.matrix[np.ix_(sites, sites)]
    if fields.statistics == FERMION:
        formula = complex(np.linalg.det(sub))
    else:
        formula = complex(permanent(sub))
    return FactorialMoment(value.real, formula.real, abs(value - formula))


def raw_vacuum_moment(fields: FieldAlgebra, sites):
    """(rho_{i_1} ... rho_{i_n} vacuum, vacuum) by plain matrix products."""
    op = np.eye(fields.dim, dtype=complex)
    for i in sites:
        op = op @ fields.site_density(i)
    return fields.vacuum_expectation(op)


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def raw_from_factorial(fields: FieldAlgebra, sites):
    """Raw moment reconstructed from factorial moments by the delta recursion.

    Partitions of the positions contribute iff every block sits on one site;
    each contributing partition adds the factorial moment of its block
    representatives.
    """
    sites = tuple(sites)
    total = 0.0 + 0.0j
    for part in _set_partitions(list(range(len(sites)))):
        reps = []
        ok = True
        for block in part:
            vals = {sites[p] for p in block}
            if len(vals) != 1:
                ok = False
                break
            reps.append(sites[block[0]])
        if ok:
            total += fields.vacuum_expectation(normal_product(fields, tuple(reps)))
    return total


def density_span_dimension(fields: FieldAlgebra, depth):
    """Dimension of span{vacuum, rho_{i_1}...rho_{i_n} vacuum : n <= depth}.

    Reported for exploration only; no claim is attached to the value.
    """
    vecs = [fields.vacuum()]
    for n in range(1, depth + 1):
        for sites in itertools.product(range(fields.m), repeat=n):
            op_v = fields.vacuum()
            for i in sites:
                op_v = fields.site_density(i) @ op_v
            vecs.append(op_v)
    stack = np.array(vecs)
    return int(np.linalg.matrix_rank(stack, tol=1e-10))


# ---------------------------------------------------------------------------
# verification report
# ---------------------------------------------------------------------------


def _site_multisets(m, n_hi):
    out = []
    for n in range(1, n_hi + 1):
        out.extend(itertools.combinations_with_replacement(range(m), n))
    return out


def verify_fermion_algebra(m=3, draws=20, seed=7, n_hi=3):
    """Run every fermionic identity over random K draws; return check records."""
    rng = np.random.default_rng(seed)
    car_field = car_pair = 0.0
    comm = npoint = off_diag = wick = factorial = raw = 0.0
    multisets = _site_multisets(m, n_hi)
    for _ in range(draws):
        k = random_kmatrix(m, FERMION, rng)
        fields = fermion_fields(k)
        eye = np.eye(fields.dim)
        basis = np.eye(m)
        psis = [fields.site_annihilator(i) for i in range(m)]
        for i in range(m):
            for j in range(m):
                car_pair = max(car_pair, max_abs(anticommutator(psis[i], psis[j])))
                dev = anticommutator(psis[i], psis[j].conj().T) - (1.0 if i == j else 0.0) * eye
                car_field = max(car_field, max_abs(dev))
        w1 = rng.normal(size=m)
        w2 = rng.normal(size=m)
        comm = max(comm, commutativity_check(fields, w1, w2))
        for n in range(1, n_hi + 1):
            fs = [rng.normal(size=m) + 1j * rng.normal(size=m) for _ in range(n)]
            gs = [rng.normal(size=m) + 1j * rng.normal(size=m) for _ in range(n)]
            npoint = max(npoint, n_point_check(fields, fs, gs).deviation)
            if n >= 2:
                res = n_point_check(fields, fs, gs[: n - 1])
                off_diag = max(off_diag, abs(res.measured))
        for sites in multisets:
            wick = max(wick, wick_identity_check(fields, sites))
            factorial = max(factorial, factorial_moment(fields, sites).deviation)
            direct = raw_vacuum_moment(fields, sites)
            rebuilt = raw_from_factorial(fields, sites)
            raw = max(raw, abs(direct - rebuilt))
    return [
        _check("fermion_car_fields", car_field, 1e-12),
        _check("fermion_car_pair_annihilators", car_pair, 1e-12),
        _check("fermion_density_commutativity", comm, 1e-12),
        _check("fermion_n_point_determinant", npoint, 1e-10),
        _check("fermion_n_point_off_diagonal", off_diag, 1e-10),
        _check("fermion_wick_identity", wick, 1e-11),
        _check("fermion_factorial_moment_det", factorial, 1e-10),
        _check("fermion_raw_vs_factorial_recursion", raw, 1e-10),
    ]


def verify_boson_algebra(m=2, n_max=6, draws=20, seed=7, n_hi=None):
    """Run the bosonic identities on the cutoff space; return check records."""
    rng = np.random.default_rng(seed)
    n_hi_points = 2
    n_hi_moments = n_hi if n_hi is not None else n_max // 2
    ccr_pair = ccr = comm = npoint = off_diag = factorial = raw = wick = 0.0
    space = BosonFockSpace(m, n_max)
    multisets = _site_multisets(m, n_hi_moments)
    for _ in range(draws):
        k = random_kmatrix(m, BOSON, rng)
        fields = boson_fields(k, space)
        proj = fields.safe_projector(2)
        eye = np.eye(fields.dim)
        phis = [fields.site_annihilator(i) for i in range(m)]
        for i in range(m):
            for j in range(m):
                ccr_pair = max(ccr_pair, max_abs(commutator(phis[i], phis[j]) @ proj))
                dev = commutator(phis[i], phis[j].conj().T) - (1.0 if i == j else 0.0) * eye
                ccr = max(ccr, max_abs(dev @ proj))
        w1 = rng.normal(size=m)
        w2 = rng.normal(size=m)
        comm = max(comm, commutativity_check(fields, w1, w2))
        for n in range(1, n_hi_points + 1):
            fs = [rng.normal(size=m) + 1j * rng.normal(size=m) for _ in range(n)]
            gs = [rng.normal(size=m) + 1j * rng.normal(size=m) for _ in range(n)]
            npoint = max(npoint, n_point_check(fields, fs, gs).deviation)
            if n >= 2:
                res = n_point_check(fields, fs, gs[: n - 1])
                off_diag = max(off_diag, abs(res.measured))
        for sites in multisets:
            factorial = max(factorial, factorial_moment(fields, sites).deviation)
            direct = raw_vacuum_moment(fields, sites)
            rebuilt = raw_from_factorial(fields, sites)
            raw = max(raw, abs(direct - rebuilt))
            if len(sites) <= 2:
                wick = max(wick, wick_identity_check(fields, sites))
    checks = [
        _check("boson_ccr_fields", ccr, 1e-12),
        _check("boson_ccr_pair_annihilators", ccr_pair, 1e-12),
        _check("boson_density_commutativity", comm, 1e-12),
        _check("boson_n_point_permanent", npoint, 1e-10),
        _check("boson_n_point_off_diagonal", off_diag, 1e-10),
        _check("boson_factorial_moment_per", factorial, 1e-10),
        _check("boson_raw_vs_factorial_recursion", raw, 1e-10),
        _check("boson_wick_identity", wick, 1e-10, gate=False),
    ]
    return checks


def _check(name, deviation, tolerance, gate=True):
    return {
        "check": name,
        "max_deviation": float(deviation),
        "tolerance": tolerance,
        "passed": bool(deviation <= tolerance),
        "gate": gate,
    }


def verify_algebra(m=3, seed=7, draws=20, boson_m=2, n_max=6, span_depth=3):
    """Full verification report over both statistics plus the span-dimension probe."""
    report = verify_fermion_algebra(m=m, draws=draws, seed=seed)
    report += verify_boson_algebra(m=boson_m, n_max=n_max, draws=draws, seed=seed + 1)
    rng = np.random.default_rng(seed + 2)
    k = random_kmatrix(min(m, 2), FERMION, rng)
    fields = fermion_fields(k)
    dim = density_span_dimension(fields, span_depth)
    report.append(
        {
            "check": "fermion_density_span_dimension",
            "value": dim,
            "fock_dim": fields.dim,
            "note": "informational only; no pass/fail attached",
            "gate": False,
        }
    )
    return report
