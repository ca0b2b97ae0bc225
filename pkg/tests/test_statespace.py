import dataclasses
import math

import numpy as np
import pytest

from droopspec import (
    CharPolyModel,
    StateSpaceModel,
    assemble_state_matrix,
    droop_matrix,
    oracle_eigenvalues,
    susceptance_set,
    theorem1_check,
    time_response,
    weighted_spectrum,
)
from droopspec.sampling import random_network

OMEGA0 = 2 * math.pi * 50


def charpoly_for(model):
    return CharPolyModel(rho=model.rho, k=model.k, tau=1.0 / model.omega_c,
                         omega0=model.base.omega0)


def lengthened(model, label, factor):
    lines = tuple(
        dataclasses.replace(ln, r_pu=ln.r_pu * factor, x_pu=ln.x_pu * factor)
        if ln.label == label else ln
        for ln in model.lines)
    return dataclasses.replace(model, lines=lines)


@pytest.fixture(scope="module")
def kundur4_ss(kundur4):
    return assemble_state_matrix(kundur4, susceptance_set(kundur4).b_prime)


class TestAssembly:
    def test_dimensions_and_block_sparsity(self, kundur4, kundur4_ss):
        m = kundur4.inverter_count
        a = kundur4_ss.a
        assert a.shape == (5 * m, 5 * m)
        blocks = {(i, j): a[i * m:(i + 1) * m, j * m:(j + 1) * m]
                  for i in range(5) for j in range(5)}
        zero_blocks = [(0, 0), (0, 2), (0, 3), (0, 4),
                       (1, 0), (1, 2), (1, 4),
                       (2, 0), (2, 1), (2, 3),
                       (3, 0), (3, 1),
                       (4, 1), (4, 2)]
        for key in zero_blocks:
            assert np.all(blocks[key] == 0), f"block {key} should be zero"
        np.testing.assert_array_equal(blocks[(0, 1)], np.eye(m))
        np.testing.assert_allclose(blocks[(4, 0)], OMEGA0 * kundur4_ss.b_prime)
        np.testing.assert_allclose(blocks[(1, 3)],
                                   -kundur4.omega_c * np.diag(kundur4_ss.m_diag))

    def test_base_case_unstable(self, kundur4_ss):
        eigs = oracle_eigenvalues(kundur4_ss)
        assert eigs.real.max() > 0

    def test_long_line_34_stable(self, kundur4):
        model = lengthened(kundur4, "3-4", 5.0 / 3.0)  # 3 km -> 5 km
        ss = assemble_state_matrix(model, susceptance_set(model).b_prime)
        eigs = oracle_eigenvalues(ss)
        nontrivial = eigs[np.abs(eigs) > 1e-9 * np.abs(eigs).max()]
        assert nontrivial.real.max() < 0

    def test_two_inverter_stable_when_mu_below_threshold(self):
        # mu = (M1+M2)/X well below the threshold: everything nontrivial in
        # the open left half-plane.
        from droopspec import BaseSystem, InverterRecord, LineRecord, NetworkModel
        base = BaseSystem(voltage_v=400.0, power_va=1e4, omega0=OMEGA0)
        tau = 1 / 14.0
        x = 1.0  # mu = 2 * 0.01 * omega0 / 1.0 = 6.28, far below 195
        model = NetworkModel(
            base=base, buses=("1", "2"),
            inverters=tuple(InverterRecord(bus_id=b, m=0.01, n=0.01, tau=tau)
                            for b in "12"),
            lines=(LineRecord(from_bus="1", to_bus="2", r_pu=1.4 * x, x_pu=x),),
            rho=1.4, k=1.0, omega_c=14.0)
        ss = assemble_state_matrix(model, susceptance_set(model).b_prime)
        eigs = oracle_eigenvalues(ss)
        nontrivial = eigs[np.abs(eigs) > 1e-9 * np.abs(eigs).max()]
        assert nontrivial.real.max() < 0

    def test_dimension_mismatch_rejected(self, kundur4):
        with pytest.raises(ValueError, match="4 x 4"):
            assemble_state_matrix(kundur4, np.eye(3))


class TestOracleEigenvalues:
    def test_zero_matrix_degenerate(self, kundur4_ss):
        ss = dataclasses.replace(kundur4_ss, a=np.zeros_like(kundur4_ss.a))
        np.testing.assert_array_equal(oracle_eigenvalues(ss), np.zeros(20))

    def test_count_and_ordering(self, kundur4_ss):
        eigs = oracle_eigenvalues(kundur4_ss)
        assert eigs.shape == (20,)
        assert np.all(np.diff(eigs.real) <= 1e-12)

    def test_conjugate_closure(self, kundur4_ss):
        eigs = oracle_eigenvalues(kundur4_ss)
        scale = np.abs(eigs).max()
        for ev in eigs[np.abs(eigs.imag) > 1e-9 * scale]:
            assert np.min(np.abs(eigs - np.conj(ev))) < 1e-8 * scale

    def test_global_angle_mode_at_origin(self, kundur4_ss):
        eigs = oracle_eigenvalues(kundur4_ss)
        assert np.min(np.abs(eigs)) < 1e-8


class TestTheorem1:
    def test_reference_network_passes(self, kundur4):
        sus = susceptance_set(kundur4)
        spectrum = weighted_spectrum(sus.b_prime, droop_matrix(kundur4))
        report = theorem1_check(kundur4, spectrum, charpoly_for(kundur4))
        assert report.status == "PASS"
        assert report.max_root_distance < 1e-6 * report.spectral_radius
        assert report.max_cosine_distance < 1e-6
        assert len(report.pairs) == 20

    def test_randomized_suite(self):
        rng = np.random.default_rng(101)
        for _ in range(100):
            model = random_network(rng)
            spectrum = weighted_spectrum(susceptance_set(model).b_prime,
                                         droop_matrix(model))
            report = theorem1_check(model, spectrum, charpoly_for(model))
            assert report.status == "PASS", (model, report.max_root_distance)

    def test_nonuniform_k_skipped(self):
        model = random_network(3, m=4, nonuniform_k=True)
        spectrum = weighted_spectrum(susceptance_set(model).b_prime,
                                     droop_matrix(model))
        report = theorem1_check(model, spectrum, charpoly_for(model))
        assert report.status == "SKIPPED"
        assert "NONUNIFORM_K" in report.notice

    def test_verdict_agreement_between_paths(self):
        from droopspec import mu_critical
        rng = np.random.default_rng(29)
        for _ in range(40):
            model = random_network(rng, rho_range=(0.5, 3.0))
            spectrum = weighted_spectrum(susceptance_set(model).b_prime,
                                         droop_matrix(model))
            cp = charpoly_for(model)
            mu_cr = mu_critical(cp)
            margin = abs(spectrum.max_mu - mu_cr)
            if margin < 1e-3 * mu_cr:
                continue  # too close to the boundary to call either way
            ss = assemble_state_matrix(model, susceptance_set(model).b_prime)
            eigs = oracle_eigenvalues(ss)
            nontrivial = eigs[np.abs(eigs) > 1e-9 * np.abs(eigs).max()]
            spectral_unstable = spectrum.max_mu > mu_cr
            oracle_unstable = nontrivial.real.max() > 0
            assert spectral_unstable == oracle_unstable


class TestTimeResponse:
    def test_zero_initial_condition(self, kundur4_ss):
        trace = time_response(kundur4_ss, np.zeros(20), horizon=0.1, dt=0.01)
        np.testing.assert_array_equal(trace.states, 0.0)

    def test_stable_network_decays(self, kundur4):
        model = lengthened(kundur4, "3-4", 5.0 / 3.0)
        ss = assemble_state_matrix(model, susceptance_set(model).b_prime)
        x0 = np.zeros(20)
        x0[:4] = [0.01, -0.01, 0.02, -0.02]  # angle perturbation, no net shift
        trace = time_response(ss, x0, horizon=8.0, dt=0.01)
        assert np.abs(trace.states[-1]).max() < np.abs(x0).max()

    def test_reference_growth_lives_on_buses_3_and_4(self, kundur4, kundur4_ss):
        x0 = np.zeros(20)
        x0[:4] = [1e-4, -1e-4, 1e-4, -1e-4]
        trace = time_response(kundur4_ss, x0, horizon=3.0, dt=0.005)
        theta_amp = np.abs(trace.states[-50:, :4]).max(axis=0)
        assert theta_amp.max() > 10 * np.abs(x0).max()  # growing oscillation
        # amplitude pattern follows the critical eigenvector: 3 and 4 dominate
        assert min(theta_amp[2], theta_amp[3]) > 5 * max(theta_amp[0], theta_amp[1])

    def test_csv_format(self, kundur4_ss):
        trace = time_response(kundur4_ss, np.zeros(20), horizon=0.02, dt=0.01)
        lines = trace.to_csv().strip().split("\n")
        header = lines[0].split(",")
        assert header[0] == "t"
        assert header[1:5] == ["theta_1", "theta_2", "theta_3", "theta_4"]
        assert header[-1] == "Iq_4"
        assert len(lines) == 4  # header + 3 steps (t = 0, 0.01, 0.02)

    def test_row_cap(self, kundur4_ss):
        with pytest.raises(ValueError, match="1e6"):
            time_response(kundur4_ss, np.zeros(20), horizon=1e5, dt=1e-2)

    def test_bad_steps_rejected(self, kundur4_ss):
        with pytest.raises(ValueError):
            time_response(kundur4_ss, np.zeros(20), horizon=0.5, dt=0.0)
        with pytest.raises(ValueError):
            time_response(kundur4_ss, np.zeros(20), horizon=0.001, dt=0.01)
