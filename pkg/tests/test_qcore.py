import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rydsim.qcore import (G0, G1, RYD, DensityOperator, DimensionError, InvariantError, LevelLabel,
                          LinearOperator, PureState, basis_index, basis_state, embed, embed_single_atom,
                          fidelity, identity, partial_trace, pauli_on_subspace, projector,
                          single_atom_state, state_overlap_fidelity, tensor, tensor_all, transition)

from conftest import random_density, random_vector

complex_amp = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


class TestLevelLabel:
    def test_ordering_defines_index(self):
        assert G0 < G1 < RYD < LevelLabel.P_INT < LevelLabel.G1PRIME
        assert [int(x) for x in LevelLabel] == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("alias,expected", [("0", G0), ("g1", G1), ("r", RYD), ("ryd", RYD), (2, RYD)])
    def test_parse_aliases(self, alias, expected):
        assert LevelLabel.parse(alias) is expected

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError):
            LevelLabel.parse("q")

    def test_row_major_layout(self):
        assert basis_index(["g0", "ryd"]) == 2
        assert basis_index(["g1", "g0"]) == 3
        assert basis_index(["ryd", "g0", "g1"]) == 19

    def test_five_level_label_needs_five_levels(self):
        with pytest.raises(DimensionError):
            basis_index(["p_int"], levels=3)
        assert basis_index(["p_int"], levels=5) == 3


class TestPureState:
    def test_length_must_match(self):
        with pytest.raises(DimensionError):
            PureState(np.ones(4), 1)

    def test_levels_restricted(self):
        with pytest.raises(DimensionError):
            PureState(np.ones(4), 1, levels=4)

    @given(st.lists(complex_amp, min_size=9, max_size=9))
    def test_normalized_construction(self, amps):
        v = np.array(amps)
        if np.linalg.norm(v) < 1e-6:
            return
        psi = PureState.from_vector(v)
        assert psi.n_atoms == 2
        assert abs(psi.norm() ** 2 - 1) < 1e-9
        psi.check()

    def test_zero_vector_rejected(self):
        with pytest.raises(InvariantError):
            PureState.from_vector(np.zeros(3))

    def test_amplitudes_read_only(self):
        psi = basis_state(["g0"])
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 2

    def test_single_atom_superposition(self):
        psi = single_atom_state({"g0": 1, "ryd": 1})
        np.testing.assert_allclose(psi.amplitudes, [2 ** -0.5, 0, 2 ** -0.5])


class TestDensityOperator:
    def test_rejects_non_hermitian(self):
        m = np.diag([1.0, 0, 0]).astype(complex)
        m[0, 1] = 0.1
        with pytest.raises(InvariantError, match="Hermitian"):
            DensityOperator(m, 1)

    def test_rejects_bad_trace(self):
        with pytest.raises(InvariantError, match="trace"):
            DensityOperator(np.diag([0.5, 0.4, 0.0]), 1)

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(InvariantError, match="eigenvalue"):
            DensityOperator(np.diag([1.1, -0.1, 0.0]), 1)

    def test_tolerates_roundoff_negativity(self):
        DensityOperator(np.diag([1 + 5e-9, -5e-9, 0.0]), 1)

    def test_purity_and_population(self):
        rho = DensityOperator(np.diag([0.7, 0.3, 0.0]), 1)
        assert rho.purity() == pytest.approx(0.58)
        assert rho.population(["g1"]) == pytest.approx(0.3)


class TestTensor:
    def test_basis_product(self):
        psi = tensor(basis_state(["g0"]), basis_state(["g0"]))
        assert psi.amplitudes[0] == 1 and psi.n_atoms == 2

    def test_identity_product(self):
        np.testing.assert_array_equal(tensor(identity(1), identity(1)).matrix, np.eye(9))

    def test_superposition_index_arithmetic(self):
        psi = tensor(single_atom_state({"g0": 1, "ryd": 1}), basis_state(["ryd"]))
        expected = np.zeros(9, dtype=complex)
        expected[basis_index(["g0", "ryd"])] = expected[basis_index(["ryd", "ryd"])] = 2 ** -0.5
        np.testing.assert_allclose(psi.amplitudes, expected, atol=1e-15)

    def test_mixed_kinds_rejected(self):
        with pytest.raises(TypeError):
            tensor(basis_state(["g0"]), identity(1))

    def test_associative(self, rng):
        a, b, c = (PureState(random_vector(rng, 3), 1) for _ in range(3))
        left, right = tensor(tensor(a, b), c), tensor(a, tensor(b, c))
        np.testing.assert_allclose(left.amplitudes, right.amplitudes, atol=1e-12)
        np.testing.assert_allclose(tensor_all([a, b, c]).amplitudes, left.amplitudes, atol=1e-12)


class TestEmbed:
    def test_sigma_x_on_first_atom(self):
        sx = pauli_on_subspace("sigma_x")
        np.testing.assert_array_equal(embed_single_atom(sx, 0, 2).matrix, np.kron(sx.matrix, np.eye(3)))

    def test_excitation_of_second_atom(self):
        op = embed_single_atom(transition(RYD, G0), 1, 2)
        out = op @ basis_state(["g0", "g0"])
        np.testing.assert_array_equal(out.amplitudes, basis_state(["g0", "ryd"]).amplitudes)

    def test_last_of_three_is_kronecker(self, rng):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        got = embed_single_atom(LinearOperator(a, 1), 2, 3).matrix
        np.testing.assert_allclose(got, np.kron(np.eye(9), a), atol=0)

    def test_two_atom_operator_on_swapped_positions(self, rng):
        a, b = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
        op = LinearOperator(np.kron(a, b), 2)
        got = embed(op, [2, 0], 3).matrix
        np.testing.assert_allclose(got, np.kron(np.kron(b, np.eye(3)), a), atol=1e-14)

    def test_bad_index(self):
        with pytest.raises(IndexError):
            embed_single_atom(projector(G0), 2, 2)
        with pytest.raises(ValueError):
            embed(LinearOperator(np.eye(9), 2), [1, 1], 3)


class TestPartialTrace:
    def test_product_basis_state(self):
        red = partial_trace(basis_state(["g0", "g0"]).to_density(), [0])
        np.testing.assert_allclose(red.matrix, np.diag([1, 0, 0]))

    def test_entangled_pair_is_half_mixed(self):
        v = np.zeros(9)
        v[basis_index(["g0", "ryd"])] = v[basis_index(["ryd", "g0"])] = 2 ** -0.5
        red = partial_trace(PureState(v, 2).to_density(), [1])
        np.testing.assert_allclose(red.matrix, np.diag([0.5, 0, 0.5]), atol=1e-15)

    def test_keep_all_is_identity_map(self, rng):
        rho = DensityOperator(random_density(rng, 9), 2)
        assert partial_trace(rho, [0, 1]) is rho

    @pytest.mark.parametrize("seed", range(5))
    def test_recovers_product_factor(self, seed):
        rng = np.random.default_rng(seed)
        a = DensityOperator(random_density(rng, 3), 1)
        b = DensityOperator(random_density(rng, 9), 2)
        ab = tensor(a, b)
        np.testing.assert_allclose(partial_trace(ab, [0]).matrix, a.matrix, atol=1e-12)
        np.testing.assert_allclose(partial_trace(ab, [1, 2]).matrix, b.matrix, atol=1e-12)
        partial_trace(ab, [2]).validate()


class TestFidelity:
    def test_self_overlap_of_pure_state(self, rng):
        psi = PureState(random_vector(rng, 9), 2)
        assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert fidelity(basis_state(["g0"]), basis_state(["ryd"])) == 0.0

    def test_against_mixture(self):
        mix = DensityOperator(np.diag([0.7, 0.3, 0.0]), 1)
        assert fidelity(basis_state(["g0"]), mix) == pytest.approx(0.7, abs=1e-15)

    def test_linear_in_second_argument(self, rng):
        ideal = PureState(random_vector(rng, 9), 2)
        r1, r2 = random_density(rng, 9), random_density(rng, 9)
        for w in np.linspace(0, 1, 5):
            mix = DensityOperator(w * r1 + (1 - w) * r2, 2)
            expected = w * fidelity(ideal, DensityOperator(r1, 2)) + (1 - w) * fidelity(ideal, DensityOperator(r2, 2))
            assert fidelity(ideal, mix) == pytest.approx(expected, abs=1e-12)

    def test_register_mismatch(self):
        with pytest.raises(DimensionError):
            fidelity(basis_state(["g0"]), basis_state(["g0", "g0"]))

    def test_overlap_matches_for_pure_states(self, rng):
        a, b = PureState(random_vector(rng, 3), 1), PureState(random_vector(rng, 3), 1)
        assert state_overlap_fidelity(a, b) == pytest.approx(fidelity(a, b), abs=1e-12)


class TestPauli:
    @pytest.mark.parametrize("name", ["sigma_x", "sigma_y", "sigma_z"])
    def test_squares_to_identity(self, name):
        p = pauli_on_subspace(name).matrix
        np.testing.assert_allclose(p @ p, np.eye(3), atol=1e-15)

    def test_leaves_spectator_level(self):
        assert pauli_on_subspace("sigma_x").matrix[G1, G1] == 1

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            pauli_on_subspace("sigma_w")


class TestLinearOperator:
    def test_hermitian_hint_checked(self):
        with pytest.raises(InvariantError):
            LinearOperator(np.triu(np.ones((3, 3))), 1, hermitian=True)

    def test_arithmetic(self):
        a = transition(RYD, G0)
        h = a + a.dagger()
        assert h.element(["ryd"], ["g0"]) == 1 and h.element(["g0"], ["ryd"]) == 1
        assert (2 * h).matrix[2, 0] == 2
        np.testing.assert_array_equal((a @ a).matrix, np.zeros((3, 3)))
