import json

import numpy as np
import pytest
from scipy.special import ndtr

from kseek.datagen import (
    OverlapSpec,
    calibrate_overlap,
    canonical_cov_type,
    generate_base_model,
    generate_scenario_dataset,
    pairwise_overlap,
)
from kseek.errors import DomainError
from kseek.gmm import GmmModel
from kseek.rng import as_generator


def spherical_pair(delta, p=2):
    means = np.zeros((2, p))
    means[1, 0] = delta
    return GmmModel([0.5, 0.5], means, [np.eye(p), np.eye(p)])


class TestPairwiseOverlap:
    def test_identical_components_zero(self):
        model = GmmModel([0.5, 0.5], np.zeros((2, 2)), [np.eye(2), np.eye(2)])
        assert pairwise_overlap(model, 0, 1, 10_000, 0) == 0.0

    def test_far_apart_negligible(self):
        assert pairwise_overlap(spherical_pair(100.0), 0, 1, 10_000, 1) < 1e-4

    @pytest.mark.parametrize("delta", [1.0, 3.0, 5.0, 5.1517])
    def test_half_space_oracle(self, delta):
        # equal weights, equal spherical covariances: the decision boundary
        # is the perpendicular bisector, so the overlap is Phi(-delta/2)
        exact = float(ndtr(-delta / 2))
        m = 100_000
        est = pairwise_overlap(spherical_pair(delta), 0, 1, m, 7)
        se = np.sqrt(exact * (1 - exact) / m)
        assert abs(est - exact) <= 3 * se

    def test_dimension_free_for_spherical(self):
        exact = float(ndtr(-2.5))
        for p in (1, 5, 18):
            est = pairwise_overlap(spherical_pair(5.0, p), 0, 1, 50_000, 3)
            se = np.sqrt(exact * (1 - exact) / 50_000)
            assert abs(est - exact) <= 4 * se

    def test_deterministic(self):
        m = spherical_pair(2.0)
        assert pairwise_overlap(m, 0, 1, 20_000, 5) == pairwise_overlap(m, 0, 1, 20_000, 5)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(11)
        base = spherical_pair(2.0, 3)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        rot = GmmModel(
            base.weights,
            base.means @ q.T,
            np.stack([q @ c @ q.T for c in base.covariances]),
        )
        m = 100_000
        a = pairwise_overlap(base, 0, 1, m, 2)
        b = pairwise_overlap(rot, 0, 1, m, 2)
        se = np.sqrt(a * (1 - a) / m)
        assert abs(a - b) <= 4 * np.sqrt(2) * se

    def test_same_component_rejected(self):
        with pytest.raises(DomainError):
            pairwise_overlap(spherical_pair(1.0), 1, 1, 10_000, 0)


class TestGenerateBaseModel:
    def test_hom_spherical_structure(self):
        spec = OverlapSpec(4, 3, 0.05, "hom_spherical", seed=2)
        model = generate_base_model(spec)
        first = model.covariances[0]
        assert np.allclose(first, first[0, 0] * np.eye(3))
        for c in model.covariances[1:]:
            assert np.array_equal(c, first)

    def test_het_full_distinct_spd(self):
        spec = OverlapSpec(4, 3, 0.05, "het_full", seed=3)
        model = generate_base_model(spec)
        for i in range(4):
            np.linalg.cholesky(model.covariances[i])
            for j in range(i + 1, 4):
                assert not np.allclose(model.covariances[i], model.covariances[j])

    def test_het_spherical_distinct_scales(self):
        spec = OverlapSpec(3, 2, 0.05, "het_spherical", seed=4)
        model = generate_base_model(spec)
        scales = [c[0, 0] for c in model.covariances]
        assert len(set(np.round(scales, 12))) == 3

    def test_uniform_weights_and_means_in_box(self):
        spec = OverlapSpec(5, 2, 0.05, "hom_full", seed=5)
        model = generate_base_model(spec)
        np.testing.assert_allclose(model.weights, 0.2)
        assert np.all(model.means >= 0) and np.all(model.means <= 1)

    def test_wishart_has_unit_expectation(self):
        from kseek.datagen import _wishart_unit

        rng = as_generator(6)
        total = np.zeros((2, 2))
        for _ in range(10_000):
            total += _wishart_unit(2, rng)
        np.testing.assert_allclose(total / 10_000, np.eye(2), atol=0.05)

    def test_cov_type_aliases(self):
        assert canonical_cov_type(1) == "hom_spherical"
        assert canonical_cov_type(4) == "het_full"
        assert canonical_cov_type("het_full") == "het_full"
        with pytest.raises(DomainError):
            canonical_cov_type("diagonal")


class TestCalibrateOverlap:
    def test_two_component_analytic_delta(self):
        spec = OverlapSpec(2, 2, 0.01, "hom_spherical", mc_samples=100_000, seed=11)
        model, report = calibrate_overlap(spec)
        tol = max(0.05 * 0.01, 2 * report.mc_std_err)
        assert abs(report.omega_bar_hat - 0.01) <= tol
        sigma = np.sqrt(model.covariances[0][0, 0])
        delta = np.linalg.norm(model.means[0] - model.means[1]) / sigma
        # 2 Phi(-delta/2) must sit at the calibrated overlap
        assert 2 * ndtr(-delta / 2) == pytest.approx(report.omega_bar_hat, rel=0.08)
        assert delta == pytest.approx(5.1517, rel=0.05)

    def test_scale_monotone_in_target(self):
        a = calibrate_overlap(OverlapSpec(2, 2, 0.01, "hom_spherical", mc_samples=20_000, seed=21))
        b = calibrate_overlap(OverlapSpec(2, 2, 0.10, "hom_spherical", mc_samples=20_000, seed=21))
        assert b[1].scale > a[1].scale

    def test_report_invariants(self):
        spec = OverlapSpec(3, 2, 0.05, "het_full", mc_samples=20_000, seed=31)
        _, report = calibrate_overlap(spec)
        assert report.pairwise.shape == (3, 3)
        assert np.all(np.diag(report.pairwise) == 0)
        assert np.all(report.pairwise >= 0) and np.all(report.pairwise <= 1)
        pairs = report.pairwise + report.pairwise.T
        iu = np.triu_indices(3, 1)
        assert report.omega_bar_hat == pytest.approx(float(np.mean(pairs[iu])))
        json.dumps(report.to_json_dict())  # serializable

    def test_overlap_monotone_in_scale(self):
        spec = OverlapSpec(3, 2, 0.05, "hom_spherical", mc_samples=20_000, seed=41)
        model = generate_base_model(spec)
        from kseek.datagen import _overlap_matrix

        values = []
        for c in np.geomspace(1e-3, 1e3, 10):
            _, om, se = _overlap_matrix(model.scaled(c), 20_000, 41)
            values.append((om, se))
        for (a, sa), (b, sb) in zip(values, values[1:]):
            assert b >= a - 2 * (sa + sb)


class TestGenerateScenarioDataset:
    def test_labels_cover_all_components(self):
        spec = OverlapSpec(3, 2, 0.05, "hom_spherical", mc_samples=10_000, seed=51)
        _, data = generate_scenario_dataset(spec, 600, 1)
        assert set(np.unique(data.true_labels)) == {1, 2, 3}

    def test_deterministic(self):
        spec = OverlapSpec(3, 2, 0.05, "het_spherical", mc_samples=10_000, seed=52)
        _, a = generate_scenario_dataset(spec, 300, 9)
        _, b = generate_scenario_dataset(spec, 300, 9)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.true_labels, b.true_labels)

    def test_cluster_proportions_binomial(self):
        spec = OverlapSpec(4, 2, 0.05, "hom_spherical", mc_samples=10_000, seed=53)
        n = 2000
        _, data = generate_scenario_dataset(spec, n, 2)
        sigma = np.sqrt(n * 0.25 * 0.75)
        for k in range(1, 5):
            count = int(np.sum(data.true_labels == k))
            assert abs(count - n / 4) <= 4 * sigma

    def test_provenance_recorded(self):
        spec = OverlapSpec(2, 2, 0.05, "hom_spherical", mc_samples=10_000, seed=54)
        _, data = generate_scenario_dataset(spec, 100, 3)
        prov = data.provenance
        assert prov["k_star"] == 2 and prov["cov_type"] == "hom_spherical"
        assert prov["covariance_scale"] > 0
        json.dumps(prov)

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            OverlapSpec(1, 2, 0.05)
        with pytest.raises(DomainError):
            OverlapSpec(2, 2, 1.5)
        with pytest.raises(DomainError):
            OverlapSpec(2, 2, 0.05, mc_samples=100)
