import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sidedist.core import (
    BallSideInfo,
    Distribution,
    InputError,
    PartitionSideInfo,
    RiskGridPoint,
    RiskReport,
    ball_contains,
    build_profile,
    l2_distance_squared,
    profile_from_counts,
    read_counts_csv,
    read_distribution_csv,
    write_distribution_csv,
)


class TestDistribution:
    def test_valid(self):
        dist = Distribution(np.array([0.4, 0.3, 0.2, 0.1]))
        assert dist.d == 4
        assert dist.l2_norm() == pytest.approx(math.sqrt(0.16 + 0.09 + 0.04 + 0.01))

    def test_zeros_allowed(self):
        Distribution(np.array([1.0, 0.0, 0.0]))

    def test_rejects_negative(self):
        with pytest.raises(InputError):
            Distribution(np.array([1.1, -0.1]))

    def test_rejects_bad_sum(self):
        with pytest.raises(InputError):
            Distribution(np.array([0.5, 0.5 + 1e-9]))

    def test_accepts_tiny_sum_error(self):
        Distribution(np.array([0.5, 0.5 + 1e-13]))

    def test_immutable(self):
        dist = Distribution.uniform(3)
        with pytest.raises(ValueError):
            dist.probs[0] = 0.5

    def test_mass_of(self):
        dist = Distribution(np.array([0.4, 0.3, 0.2, 0.1]))
        assert dist.mass_of([0, 3]) == pytest.approx(0.5)
        assert dist.mass_of([]) == 0.0

    def test_point_mass_and_uniform(self):
        assert Distribution.point_mass(4, 2).probs[2] == 1.0
        assert np.all(Distribution.uniform(5).probs == 0.2)


class TestL2Distance:
    def test_identity(self):
        p = Distribution(np.array([0.3, 0.7]))
        assert l2_distance_squared(p, p) == 0.0

    def test_extreme_corners(self):
        p = Distribution(np.array([1.0, 0.0]))
        q = Distribution(np.array([0.0, 1.0]))
        assert l2_distance_squared(p, q) == pytest.approx(2.0)

    def test_hand_value(self):
        p = Distribution(np.array([0.5, 0.5]))
        q = Distribution(np.array([1.0, 0.0]))
        assert l2_distance_squared(p, q) == pytest.approx(0.5)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        p = Distribution(rng.dirichlet(np.ones(6)))
        q = Distribution(rng.dirichlet(np.ones(6)))
        assert l2_distance_squared(p, q) == l2_distance_squared(q, p)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            l2_distance_squared(Distribution.uniform(2), Distribution.uniform(3))


class TestBall:
    def test_center_always_inside(self):
        center = Distribution(np.array([0.2, 0.8]))
        info = BallSideInfo(center, 1e-6)
        assert ball_contains(info, center)

    def test_hand_case_outside(self):
        info = BallSideInfo(Distribution(np.array([1.0, 0.0])), 0.1)
        # distance sqrt(0.02) ~ 0.1414 exceeds the radius
        assert not ball_contains(info, Distribution(np.array([0.9, 0.1])))

    def test_radius_one_covers_simplex_around_uniform(self):
        info = BallSideInfo(Distribution.uniform(4), 1.0)
        rng = np.random.default_rng(1)
        for _ in range(50):
            assert ball_contains(info, Distribution(rng.dirichlet(np.ones(4))))
        assert ball_contains(info, Distribution.point_mass(4))

    def test_radius_range(self):
        with pytest.raises(InputError):
            BallSideInfo(Distribution.uniform(2), 0.0)
        with pytest.raises(InputError):
            BallSideInfo(Distribution.uniform(2), 1.5)


class TestPartition:
    def test_validates_cover(self):
        with pytest.raises(InputError):
            PartitionSideInfo(np.array([0, 1]), np.array([3]))

    def test_nonempty_sides(self):
        with pytest.raises(InputError):
            PartitionSideInfo.from_low_set([], 4)
        with pytest.raises(InputError):
            PartitionSideInfo.from_low_set([0, 1, 2, 3], 4)

    def test_views(self):
        part = PartitionSideInfo.from_low_set([0, 2], 4)
        dist = Distribution(np.array([0.1, 0.2, 0.3, 0.4]))
        profile = build_profile([0, 1, 1, 3, 3, 3], 4, truth=dist)
        assert part.side_counts(profile) == (1, 5)
        low, high = part.split_level(profile, 0)
        assert list(low) == [2] and list(high) == []
        assert part.split_phi(profile, 3) == (0, 1)
        low_mass, high_mass = part.side_masses(dist)
        assert low_mass == pytest.approx(0.4)
        assert high_mass == pytest.approx(0.6)


class TestBuildProfile:
    def test_direct_counting(self):
        profile = build_profile([0, 0, 1], 3)
        assert profile.n == 3
        assert list(profile.counts) == [2, 1, 0]
        assert list(profile.symbols_at(0)) == [2]
        assert list(profile.symbols_at(1)) == [1]
        assert list(profile.symbols_at(2)) == [0]
        assert profile.phi_at(0) == profile.phi_at(1) == profile.phi_at(2) == 1

    def test_empty_sample(self):
        profile = build_profile([], 2)
        assert profile.n == 0
        assert profile.phi_at(0) == 2
        assert profile.phi_at(1) == 0

    def test_mass_map(self):
        dist = Distribution(np.array([0.4, 0.3, 0.2, 0.1]))
        profile = build_profile([0, 1, 2, 0, 1, 0], 4, truth=dist)
        assert profile.mass_at(0) == pytest.approx(0.1, abs=1e-15)
        assert profile.mass_at(1) == pytest.approx(0.2, abs=1e-15)
        assert profile.mass_at(2) == pytest.approx(0.3, abs=1e-15)
        assert profile.mass_at(3) == pytest.approx(0.4, abs=1e-15)
        assert sum(profile.mass.values()) == pytest.approx(1.0, abs=1e-12)

    def test_no_mass_without_truth(self):
        assert build_profile([0], 2).mass is None

    def test_symbol_out_of_range(self):
        with pytest.raises(InputError):
            build_profile([0, 3], 3)
        with pytest.raises(InputError):
            build_profile([-1], 3)

    @settings(max_examples=200, derandomize=True)
    @given(st.data())
    def test_invariants(self, data):
        d = data.draw(st.integers(1, 12))
        samples = data.draw(st.lists(st.integers(0, d - 1), max_size=60))
        profile = build_profile(samples, d)
        assert profile.n == len(samples)
        assert sum(l * phi for l, phi in profile.phi.items()) == profile.n
        assert sum(profile.phi.values()) == d
        covered = np.sort(np.concatenate([s for s in profile.occupancy.values()]))
        assert np.array_equal(covered, np.arange(d))

    @settings(max_examples=100, derandomize=True)
    @given(st.data())
    def test_permutation_invariant(self, data):
        d = data.draw(st.integers(1, 8))
        samples = data.draw(st.lists(st.integers(0, d - 1), max_size=40))
        shuffled = data.draw(st.permutations(samples))
        a = build_profile(samples, d)
        b = build_profile(shuffled, d)
        assert np.array_equal(a.counts, b.counts)
        assert a.phi == b.phi

    def test_from_counts_matches(self):
        a = build_profile([0, 0, 1, 4], 5)
        b = profile_from_counts([2, 1, 0, 0, 1])
        assert np.array_equal(a.counts, b.counts)
        assert a.phi == b.phi


class TestRiskReport:
    def test_grid_must_be_sorted(self):
        points = (RiskGridPoint(100, 0.1, 0.0, 5), RiskGridPoint(10, 0.2, 0.0, 5))
        with pytest.raises(InputError):
            RiskReport("x", points)

    def test_nonnegative(self):
        with pytest.raises(InputError):
            RiskGridPoint(10, -0.1, 0.0, 5)


class TestCsv:
    def test_distribution_round_trip(self, tmp_path):
        dist = Distribution(np.array([0.25, 0.5, 0.25]))
        path = str(tmp_path / "dist.csv")
        write_distribution_csv(dist, path)
        back = read_distribution_csv(path)
        assert np.array_equal(back.probs, dist.probs)

    def test_distribution_headerless_and_crlf(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_bytes(b"0,0.5\r\n1,0.5\r\n")
        assert read_distribution_csv(str(path)).d == 2

    def test_distribution_gap_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0,0.5\n2,0.5\n")
        with pytest.raises(InputError):
            read_distribution_csv(str(path))

    def test_distribution_bad_sum_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("index,prob\n0,0.6\n1,0.5\n")
        with pytest.raises(InputError):
            read_distribution_csv(str(path))

    def test_counts(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("index,count\n0,3\n2,1\n")
        counts = read_counts_csv(str(path), 4)
        assert list(counts) == [3, 0, 1, 0]

    def test_counts_out_of_range(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("0,3\n9,1\n")
        with pytest.raises(InputError):
            read_counts_csv(str(path), 4)
