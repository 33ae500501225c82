import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as npst

from freegas import correlations as C
from freegas import kernels as K
from freegas import samplers as S
from freegas.errors import ConsistencyError, ParameterError, SizeError

from oracles import naive_permanent


@pytest.fixture(scope="module")
def fermion_kernel():
    return K.build_kernel(K.zero_temperature(math.pi, d=1))


@pytest.fixture(scope="module")
def boson_kernel():
    return K.build_kernel(K.bose_gas(1.0 / (4 * math.pi), 0.5, d=1))


class TestPermanent:
    def test_small_cases(self):
        assert C.permanent(np.array([[3.0]])) == pytest.approx(3.0)
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert C.permanent(a) == pytest.approx(1 * 4 + 2 * 3)

    def test_matches_naive_sum_up_to_n6(self):
        rng = np.random.default_rng(17)
        for n in range(1, 7):
            g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            h = (g + g.conj().T) / 2
            mine = C.permanent(h)
            ref = naive_permanent(h)
            assert abs(mine - ref) <= 1e-11 * max(1.0, abs(ref))

    @given(npst.arrays(np.float64, (4, 4), elements=st.floats(-2, 2)))
    @settings(max_examples=60, deadline=None)
    def test_property_matches_naive(self, a):
        assert abs(C.permanent(a) - naive_permanent(a)) <= 1e-11 * max(1.0, abs(naive_permanent(a)))

    def test_size_cap(self):
        with pytest.raises(SizeError):
            C.permanent(np.eye(21))

    def test_non_square_rejected(self):
        with pytest.raises(ParameterError):
            C.permanent(np.ones((2, 3)))


class TestDetCorrelation:
    def test_order_one_is_kappa0(self, fermion_kernel):
        res = C.det_correlation(fermion_kernel, np.array([[4.2]]))
        assert res.value == pytest.approx(fermion_kernel.kappa0, abs=1e-12)

    def test_coincident_points_vanish(self, fermion_kernel):
        res = C.det_correlation(fermion_kernel, np.array([[1.0], [1.0]]))
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_half_spacing_hand_value(self, fermion_kernel):
        # kappa(0) = 1, kappa(0.5) = 2/pi: det = 1 - (2/pi)^2
        res = C.det_correlation(fermion_kernel, np.array([[0.0], [0.5]]))
        assert res.value == pytest.approx(1.0 - (2 / math.pi) ** 2, rel=1e-12)

    def test_statistics_guard(self, boson_kernel):
        with pytest.raises(ParameterError):
            C.det_correlation(boson_kernel, np.array([[0.0]]))

    def test_permutation_invariance(self, fermion_kernel):
        rng = np.random.default_rng(5)
        pts = rng.uniform(0, 8, size=(4, 1))
        base = C.det_correlation(fermion_kernel, pts).value
        for perm in itertools.permutations(range(4)):
            assert C.det_correlation(fermion_kernel, pts[list(perm)]).value == pytest.approx(base, abs=1e-12)

    def test_nonnegative_and_bounded_over_random_tuples(self, fermion_kernel):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n = int(rng.integers(1, 6))
            pts = rng.uniform(0, 10, size=(n, 1))
            res = C.det_correlation(fermion_kernel, pts)
            assert res.value >= -1e-10
            assert res.value <= res.bound + 1e-10


class TestPerCorrelation:
    def test_order_one(self, boson_kernel):
        res = C.per_correlation(boson_kernel, np.array([[2.0]]))
        assert res.value == pytest.approx(boson_kernel.kappa0, abs=1e-12)

    def test_pair_bunching_formula(self, boson_kernel):
        pts = np.array([[1.0], [1.7]])
        res = C.per_correlation(boson_kernel, pts)
        k0 = boson_kernel.kappa0
        kr = boson_kernel.evaluate(np.array([0.7]))
        assert res.value == pytest.approx(k0**2 + kr**2, rel=1e-10)

    def test_triplet_matches_naive_permutation_sum(self, boson_kernel):
        rng = np.random.default_rng(8)
        pts = rng.uniform(0, 6, size=(3, 1))
        mat = C.kernel_matrix(boson_kernel, pts)
        res = C.per_correlation(boson_kernel, pts)
        assert res.value == pytest.approx(naive_permanent(mat).real, abs=1e-12)

    def test_size_cap(self, boson_kernel):
        with pytest.raises(SizeError):
            C.per_correlation(boson_kernel, np.zeros((21, 1)))


class TestHadamardBound:
    def test_order_one_equals_kappa0(self, fermion_kernel):
        # (2 pi)^-d ||khat||_1 coincides with kappa(0) for nonnegative khat
        assert C.hadamard_bound(fermion_kernel, 1) == pytest.approx(fermion_kernel.kappa0, rel=1e-12)

    def test_order_two_value(self, fermion_kernel):
        assert C.hadamard_bound(fermion_kernel, 2) == pytest.approx(2.0, rel=1e-12)

    def test_monte_carlo_never_violated(self, fermion_kernel):
        rng = np.random.default_rng(99)
        for _ in range(300):
            n = int(rng.integers(1, 6))
            pts = rng.uniform(0, 10, size=(n, 1))
            res = C.det_correlation(fermion_kernel, pts)
            assert res.value <= C.hadamard_bound(fermion_kernel, n) + 1e-10

    def test_fermion_only(self, boson_kernel):
        with pytest.raises(ParameterError):
            C.hadamard_bound(boson_kernel, 2)


class TestDetPerComparison:
    def test_det_below_per_for_nonnegative_entries(self, boson_kernel):
        # bose kernel matrices are PSD with nonnegative entries
        rng = np.random.default_rng(12)
        for n in (2, 3, 4):
            pts = rng.uniform(0, 5, size=(n, 1))
            mat = C.kernel_matrix(boson_kernel, pts)
            assert np.all(mat.real >= 0)
            assert np.linalg.det(mat).real <= C.permanent(mat).real + 1e-12


class TestRawMoments:
    def test_order_one_is_intensity_integral(self, fermion_kernel):
        grid = S.GridDiscretization(S.Window((10.0,)), (64,))
        centers = grid.centers()
        f = np.exp(-((centers[:, 0] - 5) ** 2))
        m1 = C.raw_moments(fermion_kernel, centers, f, grid.cell_volume, order=1)[0]
        assert m1 == pytest.approx(fermion_kernel.kappa0 * grid.cell_volume * f.sum(), rel=1e-12)

    def test_fermion_variance_below_poisson(self, fermion_kernel):
        grid = S.GridDiscretization(S.Window((10.0,)), (128,))
        centers = grid.centers()
        f = np.exp(-((centers[:, 0] - 5) ** 2) / 2.0)
        m1, m2 = C.raw_moments(fermion_kernel, centers, f, grid.cell_volume, order=2)
        variance = m2 - m1**2
        poisson = fermion_kernel.kappa0 * grid.cell_volume * (f**2).sum()
        assert variance < poisson

    def test_boson_variance_above_poisson(self, boson_kernel):
        grid = S.GridDiscretization(S.Window((10.0,)), (128,))
        centers = grid.centers()
        f = np.exp(-((centers[:, 0] - 5) ** 2) / 2.0)
        m1, m2 = C.raw_moments(boson_kernel, centers, f, grid.cell_volume, order=2)
        poisson = boson_kernel.kappa0 * grid.cell_volume * (f**2).sum()
        assert m2 - m1**2 > poisson

    def test_against_monte_carlo(self, fermion_kernel):
        # E<gamma,f> and E<gamma,f>^2 against the sampler, 3 standard errors
        window = S.Window((10.0,))
        grid = S.GridDiscretization(window, (256,))
        disc = S.discretize_kernel(fermion_kernel, grid)
        fn = lambda pts: np.exp(-((pts[:, 0] - 5.0) ** 2) / 2.0)
        sums = []
        for r in range(4000):
            cfg = S.sample_fermion(disc, S.replica_rng(77, r))
            sums.append(float(np.sum(fn(cfg.points))) if len(cfg) else 0.0)
        sums = np.asarray(sums)
        centers = grid.centers()
        m1, m2 = C.raw_moments(fermion_kernel, centers, fn(centers), grid.cell_volume, order=2)
        se1 = sums.std(ddof=1) / math.sqrt(len(sums))
        assert abs(sums.mean() - m1) < 3 * se1
        sq = sums**2
        se2 = sq.std(ddof=1) / math.sqrt(len(sq))
        assert abs(sq.mean() - m2) < 3 * se2

    def test_third_moment_against_brute_force_grid(self, boson_kernel):
        # tiny grid: compare the trace formulas with an explicit triple sum
        grid = S.GridDiscretization(S.Window((4.0,)), (12,))
        centers = grid.centers()
        h = grid.cell_volume
        rng = np.random.default_rng(4)
        f = rng.uniform(0.0, 1.0, size=len(centers))
        m1, m2, m3 = C.raw_moments(boson_kernel, centers, f, h, order=3)
        mat = C.kernel_matrix(boson_kernel, centers).real
        k0 = boson_kernel.kappa0

        def k2(a, b):
            return k0**2 + mat[a, b] ** 2

        def k3(a, b, c):
            return (
                k0**3
                + k0 * (mat[a, b] ** 2 + mat[a, c] ** 2 + mat[b, c] ** 2)
                + 2.0 * mat[a, b] * mat[b, c] * mat[c, a]
            )

        n = len(centers)
        brute2 = sum(
            f[a] * f[b] * k2(a, b) * h * h for a in range(n) for b in range(n)
        ) + sum(f[a] ** 2 * k0 * h for a in range(n))
        assert m2 == pytest.approx(brute2, rel=1e-10)
        brute3 = (
            sum(
                f[a] * f[b] * f[c] * k3(a, b, c) * h**3
                for a in range(n)
                for b in range(n)
                for c in range(n)
            )
            + 3 * sum(f[a] ** 2 * f[b] * k2(a, b) * h * h for a in range(n) for b in range(n))
            + sum(f[a] ** 3 * k0 * h for a in range(n))
        )
        assert m3 == pytest.approx(brute3, rel=1e-10)

    def test_order_guard(self, fermion_kernel):
        with pytest.raises(ParameterError):
            C.raw_moments(fermion_kernel, np.zeros((2, 1)), np.ones(2), 0.1, order=4)
