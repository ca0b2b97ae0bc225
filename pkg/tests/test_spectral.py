import math

import numpy as np
import pytest

from droopspec import (
    InternalConsistencyError,
    LineRecord,
    droop_matrix,
    extract_clusters,
    susceptance_set,
    weighted_spectrum,
    weyl_bound_check,
)
from droopspec.sampling import random_added_line, random_network

from conftest import REFERENCE_EIGENVECTOR, REFERENCE_MU

OMEGA0 = 2 * math.pi * 50


@pytest.fixture(scope="module")
def kundur4_spectrum(kundur4):
    return weighted_spectrum(susceptance_set(kundur4).b_prime,
                             droop_matrix(kundur4))


class TestWeightedSpectrum:
    def test_reference_eigenvalues(self, kundur4_spectrum):
        mu = kundur4_spectrum.mu
        assert abs(mu[0]) <= kundur4_spectrum.trivial_tol
        for computed, reference in zip(mu[1:], REFERENCE_MU):
            assert computed == pytest.approx(reference, rel=0.015)

    def test_reference_eigenvector_up_to_sign(self, kundur4_spectrum):
        u = kundur4_spectrum.u[:, -1]
        ref = np.array(REFERENCE_EIGENVECTOR)
        cosine = abs(u @ ref) / np.linalg.norm(ref)
        assert cosine > 0.999

    def test_two_bus_single_mode(self):
        # One inverter against a fixed bus: B' collapses to the scalar 1/X
        # and the only eigenvalue is mu = M/X.
        x = 0.25
        m_si = 0.01 * OMEGA0
        spec = weighted_spectrum(np.array([[1 / x]]), np.array([m_si]))
        assert spec.mu[0] == pytest.approx(m_si / x, rel=1e-12)

    def test_two_inverter_pair(self):
        # Symmetric two-inverter line: nontrivial mu = (M1 + M2)/X.
        x = 0.5
        m = np.array([0.01, 0.03]) * OMEGA0
        b = np.array([[1 / x, -1 / x], [-1 / x, 1 / x]])
        spec = weighted_spectrum(b, m)
        assert spec.mu[0] == pytest.approx(0.0, abs=1e-12)
        assert spec.mu[1] == pytest.approx((m[0] + m[1]) / x, rel=1e-12)

    def test_nonpositive_droop_rejected(self):
        with pytest.raises(ValueError):
            weighted_spectrum(np.eye(2), np.array([1.0, 0.0]))

    def test_trivial_mode_is_all_ones(self, kundur4_spectrum):
        u0 = kundur4_spectrum.u[:, 0]
        ones = np.ones(4) / 2.0
        assert abs(u0 @ ones) == pytest.approx(1.0, abs=1e-12)

    def test_matches_nonsymmetric_eigensolve(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            model = random_network(rng)
            b = susceptance_set(model).b_prime
            m = droop_matrix(model)
            spec = weighted_spectrum(b, m)
            direct = np.sort(np.linalg.eigvals(spec.c).real)
            np.testing.assert_allclose(spec.mu, direct,
                                       rtol=1e-8, atol=1e-8 * spec.mu[-1])

    def test_sandwich_bound(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            model = random_network(rng, m_max=8)
            b = susceptance_set(model).b_prime
            m = droop_matrix(model)
            spec = weighted_spectrum(b, m)
            lam = np.linalg.eigvalsh(b)
            tol = 1e-9 * max(spec.mu[-1], 1.0)
            assert np.all(m.min() * lam <= spec.mu + tol)
            assert np.all(spec.mu <= m.max() * lam + tol)

    def test_sign_fixing_deterministic(self, kundur4):
        b = susceptance_set(kundur4).b_prime
        m = droop_matrix(kundur4)
        first = weighted_spectrum(b, m)
        second = weighted_spectrum(b.copy(), m.copy())
        np.testing.assert_array_equal(first.u, second.u)
        assert all(first.u[np.argmax(np.abs(first.u[:, i])), i] > 0
                   for i in range(4))


class TestExtractClusters:
    def test_reference_critical_cluster(self, kundur4, kundur4_spectrum):
        clusters = extract_clusters(kundur4_spectrum,
                                    bus_ids=list(kundur4.inverter_buses),
                                    lines=list(kundur4.lines))
        top = clusters[0]
        assert top.rank == 1
        assert {b for b, _ in top.members} == {"3", "4"}
        assert top.critical_lines == ("3-4",)
        signs = {b: c > 0 for b, c in top.members}
        assert signs["3"] != signs["4"]

    def test_trivial_mode_excluded(self, kundur4_spectrum):
        clusters = extract_clusters(kundur4_spectrum)
        assert len(clusters) == 3
        assert all(c.mu > kundur4_spectrum.trivial_tol for c in clusters)

    def test_block_diagonal_pairs_are_degenerate_clusters(self):
        # Two identical decoupled two-bus pairs: equal mu, one cluster per
        # pair, both flagged degenerate.
        x, m = 0.5, 0.01 * OMEGA0
        pair = np.array([[1 / x, -1 / x], [-1 / x, 1 / x]])
        b = np.block([[pair, np.zeros((2, 2))], [np.zeros((2, 2)), pair]])
        spec = weighted_spectrum(b, np.full(4, m))
        clusters = extract_clusters(spec, bus_ids=["a", "b", "c", "d"])
        assert len(clusters) == 2
        assert clusters[0].mu == pytest.approx(clusters[1].mu)
        assert all(c.degenerate for c in clusters)
        memberships = [{bus for bus, _ in c.members} for c in clusters]
        assert {"a", "b"} in memberships and {"c", "d"} in memberships

    def test_every_cluster_has_both_signs(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            model = random_network(rng)
            spec = weighted_spectrum(susceptance_set(model).b_prime,
                                     droop_matrix(model))
            for cluster in extract_clusters(spec):
                signs = {c > 0 for _, c in cluster.members}
                assert signs == {True, False}

    def test_threshold_controls_membership(self, kundur4_spectrum):
        loose = extract_clusters(kundur4_spectrum, threshold=0.01)
        strict = extract_clusters(kundur4_spectrum, threshold=0.5)
        assert len(loose[0].members) >= len(strict[0].members)


class TestWeylBound:
    def test_added_line_on_reference_network(self, kundur4):
        x = 1.0
        line = LineRecord(from_bus="1", to_bus="4",
                          r_pu=kundur4.rho * x, x_pu=x)
        check = weyl_bound_check(kundur4, line)
        m = droop_matrix(kundur4)
        assert check.bound == pytest.approx((m[0] + m[3]) / x)
        assert np.all(check.mu_after >= check.mu_before - 1e-9 * check.mu_after[-1])
        assert np.all(check.mu_after <= check.mu_before + check.bound
                      + 1e-9 * check.mu_after[-1])

    def test_huge_reactance_is_no_perturbation(self, kundur4):
        line = LineRecord(from_bus="1", to_bus="4", r_pu=kundur4.rho * 1e12,
                          x_pu=1e12)
        check = weyl_bound_check(kundur4, line)
        np.testing.assert_allclose(check.mu_after, check.mu_before,
                                   rtol=1e-9, atol=1e-9 * check.mu_before[-1])

    def test_doubling_existing_line_susceptance(self, kundur4):
        # A parallel branch with the same reactance doubles the susceptance of
        # line 3-4; every mu must be nondecreasing.
        x34 = kundur4.line_between("3", "4").x_pu
        line = LineRecord(from_bus="3", to_bus="4", r_pu=kundur4.rho * x34,
                          x_pu=x34)
        check = weyl_bound_check(kundur4, line)
        assert np.all(check.mu_after >= check.mu_before - 1e-12 * check.mu_after[-1])
        assert check.mu_after[-1] > check.mu_before[-1]

    def test_randomized_monotonicity_suite(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            model = random_network(rng)
            line = random_added_line(rng, model)
            weyl_bound_check(model, line)  # raises on any violation

    def test_non_inverter_endpoint_rejected(self, kundur4):
        line = LineRecord(from_bus="1", to_bus="nope", r_pu=1.4, x_pu=1.0)
        with pytest.raises(ValueError):
            weyl_bound_check(kundur4, line)
