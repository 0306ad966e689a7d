import itertools

import numpy as np
import pytest

from kseek.errors import DimensionError, DomainError
from kseek.metrics import ari, cari, k_deviation, pair_counts, response_transform


def brute_force_counts(u, v):
    """Enumerate all sample pairs directly."""
    n = len(u)
    T = P = Q = H = 0
    for i, j in itertools.combinations(range(n), 2):
        H += 1
        same_u = u[i] == u[j]
        same_v = v[i] == v[j]
        P += same_u
        Q += same_v
        T += same_u and same_v
    return T, P, Q, H


class TestPairCounts:
    def test_two_by_two_worked_example(self):
        u = [1, 1, 2, 2]
        c = pair_counts(u, u)
        assert (c.T, c.P, c.Q, c.H) == (2, 2, 2, 6)

    def test_all_in_one(self):
        u = [1, 1, 1, 1, 1]
        v = [1, 2, 1, 2, 3]
        c = pair_counts(u, v)
        assert c.P == c.H
        assert c.T == c.Q

    def test_singletons(self):
        c = pair_counts([1, 2, 3, 4], [1, 1, 2, 2])
        assert c.T == 0 and c.P == 0

    def test_matches_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n = int(rng.integers(2, 40))
            u = rng.integers(1, 5, n)
            v = rng.integers(1, 4, n)
            c = pair_counts(u, v)
            assert (c.T, c.P, c.Q, c.H) == brute_force_counts(u, v)

    def test_invariants(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            n = int(rng.integers(2, 50))
            u = rng.integers(1, 6, n)
            v = rng.integers(1, 6, n)
            c = pair_counts(u, v)
            assert c.T <= min(c.P, c.Q)
            assert c.P <= c.H and c.Q <= c.H
            assert c.H == n * (n - 1) // 2

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            pair_counts([1, 2], [1, 2, 3])


class TestAri:
    def test_identical_partitions(self):
        rng = np.random.default_rng(2)
        u = rng.integers(1, 5, 50)
        assert ari(u, u) == pytest.approx(1.0)

    def test_all_in_one_is_zero(self):
        rng = np.random.default_rng(3)
        v = rng.integers(1, 4, 30)
        assert ari(np.ones(30, dtype=int), v) == 0.0

    def test_six_point_brute_force(self):
        u = [1, 1, 1, 2, 2, 2]
        v = [1, 1, 2, 2, 2, 2]
        T, P, Q, H = brute_force_counts(u, v)
        e = Q * P / H
        m = (Q + P) / 2
        assert ari(u, v) == pytest.approx((T - e) / (m - e), abs=1e-14)

    def test_symmetry_and_relabeling(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(4, 60))
            u = rng.integers(1, 5, n)
            v = rng.integers(1, 5, n)
            assert ari(u, v) == pytest.approx(ari(v, u), abs=1e-14)
            relabeled = 6 - u  # reverse the cluster ids
            assert ari(relabeled, v) == pytest.approx(ari(u, v), abs=1e-14)

    def test_fully_degenerate_returns_zero(self):
        assert ari([1, 1, 1], [1, 1, 1]) == 0.0


class TestCari:
    def test_worked_example(self):
        u = [1, 1, 2, 2]
        got = cari(u, u)
        assert got == pytest.approx((2 - 2 / 3 + 2) / (2 - 2 / 3 + 4), abs=1e-12)
        assert got == pytest.approx(0.625, abs=1e-12)

    def test_sandwich(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            n = int(rng.integers(10, 500))
            u = rng.integers(1, int(rng.integers(2, 8)) + 1, n)
            v = rng.integers(1, int(rng.integers(2, 8)) + 1, n)
            a = ari(u, v)
            c = cari(u, v)
            if a < 0.5:
                assert a < c < 0.5
            elif a > 0.5:
                assert 0.5 < c < a

    def test_all_in_one_strictly_positive(self):
        rng = np.random.default_rng(6)
        v = rng.integers(1, 4, 40)
        c = cari(np.ones(40, dtype=int), v)
        assert 0.0 < c < 0.5

    def test_stays_inside_unit_interval(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(3, 100))
            u = rng.integers(1, 6, n)
            v = rng.integers(1, 6, n)
            assert 0.0 < cari(u, v) < 1.0


class TestKDeviation:
    def test_collapse_to_one(self):
        assert k_deviation(1, 4) == -1.0

    def test_exact_match(self):
        assert k_deviation(6, 6) == 0.0

    def test_doubling(self):
        assert k_deviation(2 * 5 - 1, 5) == 1.0

    def test_kstar_one_rejected(self):
        with pytest.raises(DomainError):
            k_deviation(3, 1)


class TestResponseTransform:
    def test_half_maps_to_zero(self):
        assert response_transform(0.5) == 0.0

    def test_worked_example(self):
        assert response_transform(0.625) == pytest.approx(0.3186, abs=1e-4)

    def test_monotone(self):
        grid = np.linspace(0.05, 0.95, 19)
        vals = [response_transform(q) for q in grid]
        assert all(a < b for a, b in zip(vals, vals[1:]))
