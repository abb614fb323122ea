import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

import rydsim.dynamics as dyn
from rydsim.dynamics import (AnalyticRamanSolution, EvolutionResult, SolverError, analytic_gate_evolution,
                             crosscheck_analytic, default_step, dispersive_survival, evolve, propagate_lindblad,
                             propagate_unitary, unitary_trajectory)
from rydsim.model import JumpChannel, SystemSpec, decay_channels, epr_vector, h_drive, h_epr, h_gate
from rydsim.qcore import (G0, G1, RYD, DensityOperator, DimensionError, LinearOperator, PureState, basis_index,
                          basis_state, embed_single_atom, transition, zero_operator)

from conftest import random_density, random_vector


def closed_form_spec(ratio, omega_01=1.0):
    """Gate spec whose closed-form Rabi frequency is ``omega_01`` and ``delta_r = ratio * omega_01``."""
    return SystemSpec(omega_01 / 2, omega_01 / 2, ratio * omega_01)


def liouvillian(h, channels):
    d = h.shape[0]
    eye = np.eye(d)
    out = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in channels:
        j = np.sqrt(c.rate) * c.operator.matrix
        jdj = j.conj().T @ j
        out += np.kron(j, j.conj()) - 0.5 * (np.kron(jdj, eye) + np.kron(eye, jdj.T))
    return out


def exact_lindblad(h, channels, rho0, t):
    d = rho0.shape[0]
    return (expm(liouvillian(h, channels) * t) @ rho0.reshape(d * d)).reshape(d, d)


class TestUnitary:
    def test_zero_hamiltonian(self, rng):
        psi = PureState(random_vector(rng, 9), 2)
        out = propagate_unitary(zero_operator(2), psi, 3.0)
        np.testing.assert_allclose(out.amplitudes, psi.amplitudes, atol=1e-15)

    def test_single_atom_pi_pulse(self):
        omega = 1.7
        out = propagate_unitary(h_drive(0, 1, G0, RYD, omega), basis_state([G0]), np.pi / (2 * omega))
        assert abs(out.amplitudes[RYD]) == pytest.approx(1, abs=1e-12)

    def test_norm_preserved(self, rng):
        psi = PureState(random_vector(rng, 9), 2)
        out = propagate_unitary(h_epr(SystemSpec(1, 1, 13)), psi, 7.3)
        assert out.norm() == pytest.approx(1, abs=1e-9)

    def test_product_state_oracle_without_blockade(self):
        omega = 0.8
        times = np.linspace(0, 6, 61)
        traj = unitary_trajectory(h_epr(SystemSpec(omega, omega, 0)), basis_state([G0, G0]), times)
        p_epr = [abs(np.vdot(epr_vector(), s.amplitudes)) ** 2 for s in traj.states]
        np.testing.assert_allclose(p_epr, np.sin(2 * omega * times) ** 2 / 2, atol=1e-12)
        np.testing.assert_allclose(traj.populations(0), np.cos(omega * times) ** 4, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            propagate_unitary(h_epr(SystemSpec(1, 1, 1)), basis_state([G0]), 1.0)

    def test_density_input(self, rng):
        rho = DensityOperator(random_density(rng, 9), 2)
        h = h_gate(SystemSpec(1, 1, 3))
        out = propagate_unitary(h, rho, 0.9)
        u = expm(-1j * h.matrix * 0.9)
        np.testing.assert_allclose(out.matrix, u @ rho.matrix @ u.conj().T, atol=1e-12)


class TestLindblad:
    def test_exponential_decay(self):
        gamma = 0.37
        ch = [JumpChannel(transition(G0, RYD), gamma)]
        times = np.linspace(0, 5, 21)[1:]
        res = propagate_lindblad(zero_operator(1), ch, basis_state([RYD]), times)
        np.testing.assert_allclose(res.populations(RYD), np.exp(-gamma * times), atol=1e-9)
        np.testing.assert_allclose(res.populations(G0), 1 - np.exp(-gamma * times), atol=1e-9)

    def test_zero_time_grid(self, rng):
        rho = DensityOperator(random_density(rng, 3), 1)
        res = propagate_lindblad(h_drive(0, 1, G0, RYD, 1.0), [], rho, [0.0])
        np.testing.assert_array_equal(res.final.matrix, rho.matrix)

    def test_grid_validation(self):
        h = zero_operator(1)
        with pytest.raises(ValueError):
            propagate_lindblad(h, [], basis_state([G0]), [1.0, 0.5])
        with pytest.raises(ValueError):
            propagate_lindblad(h, [], basis_state([G0]), [])
        with pytest.raises(ValueError):
            EvolutionResult(np.array([0.0, 0.0]), [None, None])

    def test_step_underflow(self):
        with pytest.raises(SolverError, match="underflow"):
            propagate_lindblad(h_drive(0, 1, G0, RYD, 1.0), [], basis_state([G0]), [1.0], max_step=1e-9)

    def test_drift_diagnosed_not_renormalized(self):
        # a step far longer than the decay time breaks trace conservation of the jump term
        ch = [JumpChannel(transition(G0, RYD), 5.0)]
        with pytest.raises(SolverError, match="trace"):
            propagate_lindblad(zero_operator(1), ch, basis_state([RYD]), [10.0], max_step=2.0)
        res = propagate_lindblad(zero_operator(1), ch, basis_state([RYD]), [10.0], max_step=2.0, check=False)
        assert abs(res.final.trace() - 1) > 1e-6

    def test_matches_exact_superoperator(self, rng):
        spec = SystemSpec.from_ratios(1.0, 6.0, 0.05)
        h = h_gate(spec)
        ch = decay_channels(spec, [0, 1])
        rho0 = random_density(rng, 9)
        got = propagate_lindblad(h, ch, DensityOperator(rho0, 2), [2.5]).final.matrix
        np.testing.assert_allclose(got, exact_lindblad(h.matrix, ch, rho0, 2.5), atol=1e-8)

    @pytest.mark.parametrize("seed", range(20))
    def test_agrees_with_unitary_without_loss(self, seed):
        rng = np.random.default_rng(1000 + seed)
        omega, delta = rng.uniform(0.2, 2.0), rng.uniform(-30, 30)
        spec = SystemSpec(omega, rng.uniform(0.2, 2.0), delta)
        h = h_gate(spec) if seed % 2 else h_epr(spec)
        psi = PureState(random_vector(rng, 9), 2)
        t = rng.uniform(0.5, 5.0)
        exact = propagate_unitary(h, psi, t)
        got = propagate_lindblad(h, decay_channels(spec, [0, 1]), psi, [t]).final
        assert 1 - np.vdot(exact.amplitudes, got.matrix @ exact.amplitudes).real < 1e-7

    @pytest.mark.parametrize("gamma", [1e-3, 0.01, 0.05])
    def test_purity_never_increases_under_weak_decay(self, gamma):
        spec = SystemSpec.from_ratios(1.0, 8.0, gamma)
        res = propagate_lindblad(h_gate(spec), decay_channels(spec, [0, 1]), basis_state([G0, RYD]),
                                 np.linspace(0, 10, 201)[1:])
        purity = np.array([s.purity() for s in res.states])
        assert np.all(np.diff(purity) <= 1e-8)
        assert purity[0] <= 1 + 1e-8

    @given(st.floats(0.001, 0.2), st.floats(0.0, 3.0), st.integers(0, 2 ** 31))
    def test_purity_never_increases_under_dephasing(self, rate, delta, seed):
        # unital dissipator: purity is a Lyapunov function
        rng = np.random.default_rng(seed)
        spec = SystemSpec(1.0, 0.5, delta)
        ch = [JumpChannel(embed_single_atom(transition(k, k), a, 2), rate) for a in (0, 1) for k in (G0, RYD)]
        res = propagate_lindblad(h_gate(spec), ch, PureState(random_vector(rng, 9), 2), np.linspace(0, 4, 41)[1:])
        purity = np.array([s.purity() for s in res.states])
        assert np.all(np.diff(purity) <= 1e-8)

    def test_purity_recovers_under_strong_decay(self):
        # amplitude damping drives the atom to a pure ground state
        ch = [JumpChannel(transition(G0, RYD), 1.0)]
        rho0 = PureState.from_vector([1, 0, 1]).to_density()
        res = propagate_lindblad(zero_operator(1), ch, rho0, [0.5, 20.0])
        assert res.states[0].purity() < 0.9
        assert res.states[1].purity() == pytest.approx(1, abs=1e-6)

    def test_states_satisfy_invariants(self):
        spec = SystemSpec.from_ratios(1.0, 10.0, 0.02)
        res = propagate_lindblad(h_epr(spec), decay_channels(spec, [0, 1], ["to_g0"]), basis_state([G0, G0]),
                                 np.linspace(0, 8, 81)[1:])
        for s in res.states:
            s.validate(hermitian_atol=1e-8)
            assert abs(s.trace() - 1) < 1e-6

    def test_evolve_shortcuts(self, rng):
        rho = DensityOperator(random_density(rng, 9), 2)
        h = h_gate(SystemSpec(1, 1, 4))
        assert evolve(h, [], rho, 0.0) is rho
        lossless = evolve(h, decay_channels(SystemSpec(1, 1, 4), [0, 1]), rho, 1.2)
        np.testing.assert_allclose(lossless.matrix, propagate_unitary(h, rho, 1.2).matrix, atol=1e-13)


class TestConvergence:
    def test_fourth_order(self):
        omega, gamma, t = 1.0, 0.3, 3.0
        h = h_drive(0, 1, G0, RYD, omega) + h_drive(0, 1, G1, RYD, 0.6 * omega)
        ch = [JumpChannel(transition(G0, RYD), gamma), JumpChannel(transition(G1, RYD), 0.5 * gamma)]
        rho0 = basis_state([G0]).to_density()
        ref = exact_lindblad(h.matrix, ch, rho0.matrix, t)
        errs = []
        for step in (0.1, 0.05):
            got = propagate_lindblad(h, ch, rho0, [t], max_step=step).final.matrix
            errs.append(np.max(np.abs(got - ref)))
        assert 12 <= errs[0] / errs[1] <= 20

    def test_default_step_rule(self):
        spec = SystemSpec.from_ratios(1.0, 20.0, 0.01)
        step = default_step(h_epr(spec), decay_channels(spec, [0, 1]), 5.0)
        assert step == pytest.approx(2 * np.pi / dyn.STEPS_PER_PERIOD / 20.0)
        assert default_step(zero_operator(1), [], 0.0) == np.inf
        assert default_step(zero_operator(1), [], 4.0) == pytest.approx(2 * np.pi / dyn.STEPS_PER_PERIOD * 4.0)


class TestAnalyticSolution:
    @given(st.floats(0, 10), st.floats(-100, 100))
    def test_omega_prime(self, w, d):
        sol = AnalyticRamanSolution(w, d)
        assert sol.omega_prime ** 2 == pytest.approx(2 * w ** 2 + d ** 2, rel=1e-12, abs=1e-300)

    @given(st.floats(0.01, 10), st.floats(-100, 100), st.floats(0, 50))
    def test_norm(self, w, d, t):
        psi = analytic_gate_evolution(AnalyticRamanSolution(w, d), t)
        assert psi.norm() == pytest.approx(1, abs=1e-12)

    def test_initial_state(self):
        psi = analytic_gate_evolution(AnalyticRamanSolution(1.0, 7.0), 0.0)
        np.testing.assert_allclose(psi.amplitudes, basis_state([G0, RYD]).amplitudes, atol=1e-15)

    def test_complete_transfer_without_blockade(self):
        c0r, c1r, crr = AnalyticRamanSolution(1.3, 0.0).amplitudes(np.sqrt(2) * np.pi / 1.3)
        assert abs(c1r) == pytest.approx(1, abs=1e-12)

    def test_from_spec_requires_equal_couplings(self):
        with pytest.raises(ValueError):
            AnalyticRamanSolution.from_spec(SystemSpec(1, 2, 3))

    @pytest.mark.parametrize("ratio", [0, 5, 10, 50])
    def test_crosscheck(self, ratio):
        spec = closed_form_spec(ratio)
        period = 2 * np.pi / AnalyticRamanSolution.from_spec(spec).omega_prime
        assert crosscheck_analytic(spec, np.linspace(0, period, 200)) < 1e-8

    def test_crosscheck_without_drive(self):
        assert crosscheck_analytic(SystemSpec(0, 0, 3.0), np.linspace(0, 5, 20)) == pytest.approx(0, abs=1e-15)

    def test_crosscheck_rejects_loss(self):
        with pytest.raises(ValueError):
            crosscheck_analytic(SystemSpec.from_ratios(1, 5, 0.1), [0.0, 1.0])

    def test_dispersive_limit(self):
        ratio = 50
        spec = closed_form_spec(ratio)
        sol = AnalyticRamanSolution.from_spec(spec)
        t = np.linspace(0, 2 * np.pi * sol.delta_r / sol.omega_01 ** 2, 400)
        c0r, _, _ = sol.amplitudes(t)
        approx = dispersive_survival(sol.omega_01, sol.delta_r, t)
        assert np.max(np.abs(abs(c0r) ** 2 - approx)) < 2e-3
        traj = unitary_trajectory(h_gate(spec), basis_state([G0, RYD]), t)
        assert np.max(np.abs(traj.populations(basis_index([G0, RYD])) - approx)) < 2e-3
