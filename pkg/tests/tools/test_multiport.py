"""Tests for multiport construction, factorization and evolution."""

import math

import numpy as np
import pytest

from retroptics.tools.fock import MultimodeState, coherent_state, number_state, tensor_product
from retroptics.tools.multiport import (
    BSElement,
    MultiportPlan,
    bs_matrix,
    check_unitary,
    conditional_bs_backaction,
    dft_matrix,
    evolve_multimode,
    random_unitary,
    realize,
    reck_decompose,
    two_bs_cascade,
    unitary_with_first_column,
    verify_plan,
)

ETA = math.atan2(3.0, -1.0)


def _wrap(x):
    return math.pi - (math.pi - x) % (2 * math.pi)


class TestMatrices:
    """Test elementary multiport matrices."""

    def test_bs_matrix_block(self):
        """Test the embedded 2x2 block and unitarity."""
        T = bs_matrix(0.3, 0.7, 4, p=3, q=1)

        assert T[1, 1] == pytest.approx(np.exp(0.7j) * np.cos(0.3))
        assert T[1, 3] == pytest.approx(1j * np.sin(0.3))
        assert T[3, 1] == pytest.approx(1j * np.exp(0.7j) * np.sin(0.3))
        assert T[3, 3] == pytest.approx(np.cos(0.3))
        assert T[0, 0] == 1 and T[2, 2] == 1
        check_unitary(T)

    def test_bs_matrix_mode_order(self):
        """Test q must be below p."""
        with pytest.raises(ValueError):
            bs_matrix(0.1, 0.0, 3, p=0, q=1)

    def test_dft_matrix(self):
        """Test DFT entries and unitarity."""
        F = dft_matrix(4)

        assert F[1, 1] == pytest.approx(0.5j)
        assert F[3, 2] == pytest.approx(-0.5)
        check_unitary(F)

    def test_non_unitary_rejected(self):
        """Test a non-unitary matrix is rejected."""
        with pytest.raises(ValueError, match="non-unitary input"):
            check_unitary(np.array([[1.0, 0.1], [0.0, 1.0]]))

    def test_two_bs_cascade_first_column(self):
        """Test the cascade splits port 0 as 1/4, 1/2, 1/4."""
        U = two_bs_cascade()

        np.testing.assert_allclose(np.abs(U[:, 0]) ** 2, [0.25, 0.5, 0.25], atol=1e-15)
        check_unitary(U)

    def test_unitary_with_first_column(self):
        """Test the completion is unitary and keeps the column exactly."""
        column = np.array([0.6, 0.48j, -0.64])

        U = unitary_with_first_column(column)

        check_unitary(U)
        np.testing.assert_allclose(U[:, 0], column, atol=1e-14)


class TestReckDecompose:
    """Test Reck factorization."""

    @pytest.mark.parametrize("dim", [2, 3, 4, 5, 6])
    def test_round_trip_random_unitaries(self, dim):
        """Test realize(reck_decompose(U)) reproduces random unitaries."""
        rng = np.random.default_rng(100 + dim)

        for _ in range(10):
            U = random_unitary(dim, rng)
            plan = reck_decompose(U)

            assert np.max(np.abs(realize(plan) - U)) < 1e-8
            assert len(plan.elements) <= dim * (dim - 1) // 2
            assert all(-math.pi < d <= math.pi for d in plan.output_phases)

    def test_element_order(self):
        """Test elements come row by row, partners left to right."""
        plan = reck_decompose(dft_matrix(4))

        assert [(e.p, e.q) for e in plan.elements] == [
            (1, 0),
            (2, 0),
            (2, 1),
            (3, 0),
            (3, 1),
            (3, 2),
        ]

    def test_dft4_plan(self):
        """Test the four-port DFT factorization angles and phases."""
        plan = reck_decompose(dft_matrix(4))
        by_modes = {(e.p, e.q): e for e in plan.elements}
        expected = {
            (3, 0): (0.5, math.pi),
            (3, 1): (1 / math.sqrt(3), math.pi / 2),
            (3, 2): (1 / math.sqrt(2), 0.0),
            (2, 0): (1 / math.sqrt(3), math.pi / 4),
            (2, 1): (math.sqrt(5 / 8), ETA - 3 * math.pi / 4),
            (1, 0): (1 / math.sqrt(2), ETA - 3 * math.pi / 4),
        }

        for modes, (sin_theta, phi) in expected.items():
            element = by_modes[modes]
            assert math.sin(element.theta) == pytest.approx(sin_theta, abs=1e-4)
            assert abs(_wrap(element.phi - phi)) < 1e-4

        expected_delta = [_wrap(-math.pi / 2 - ETA), math.pi - ETA, math.pi / 4, math.pi / 2]
        np.testing.assert_allclose(plan.output_phases, expected_delta, atol=1e-4)

    def test_identity(self):
        """Test the identity gives zero angles and zero phases."""
        plan = reck_decompose(np.eye(3))

        assert all(e.theta == 0 and e.phi == 0 for e in plan.elements)
        np.testing.assert_allclose(plan.output_phases, 0.0)

    def test_plan_dict_round_trip(self):
        """Test the JSON form of a plan restores the same matrix."""
        plan = reck_decompose(dft_matrix(3))

        restored = MultiportPlan.from_dict(plan.to_dict())

        np.testing.assert_allclose(realize(restored), realize(plan), atol=1e-14)

    def test_netlist_rows(self):
        """Test one netlist row per element with its reflectivity."""
        plan = MultiportPlan(dim=2, elements=(BSElement(1, 0, math.pi / 4, 0.0),))

        rows = plan.netlist_rows()

        assert len(rows) == 1
        assert rows[0][:3] == [0, 1, 0]
        assert rows[0][5] == pytest.approx(0.5)

    def test_verify_plan(self):
        """Test plan verification against the source unitary."""
        U = dft_matrix(3)

        assert verify_plan(reck_decompose(U), U)
        assert not verify_plan(MultiportPlan(dim=3), U)

    def test_rejects_non_unitary(self):
        """Test factorizing a non-unitary matrix fails."""
        with pytest.raises(ValueError, match="non-unitary"):
            reck_decompose(np.ones((2, 2)))


class TestEvolveMultimode:
    """Test multimode Schrodinger evolution."""

    def test_single_photon_follows_column(self):
        """Test a photon in port m leaves along column m of U."""
        U = random_unitary(3, np.random.default_rng(1))
        state = tensor_product(number_state(0), number_state(1), number_state(0))

        out = evolve_multimode(U, state, "forward")

        for n in range(3):
            occupation = tuple(1 if k == n else 0 for k in range(3))
            assert out.amplitude(occupation) == pytest.approx(U[n, 1])

    def test_hong_ou_mandel(self):
        """Test two photons on a 50:50 splitter never leave in different ports."""
        U = bs_matrix(math.pi / 4, 0.0, 2, p=1, q=0)
        state = tensor_product(number_state(1), number_state(1))

        out = evolve_multimode(U, state)

        assert abs(out.amplitude((1, 1))) < 1e-12
        assert out.norm2() == pytest.approx(1.0)

    def test_backward_undoes_forward(self):
        """Test backward evolution inverts forward evolution."""
        U = random_unitary(3, np.random.default_rng(2))
        state = tensor_product(
            coherent_state(0.4, 3), number_state(1), coherent_state(0.2j, 2)
        )

        restored = evolve_multimode(U, evolve_multimode(U, state, "forward"), "backward")

        for occupation, amplitude in state.terms.items():
            assert restored.amplitude(occupation) == pytest.approx(amplitude, abs=1e-12)

    def test_norm_preserved(self):
        """Test evolution preserves the squared norm."""
        U = random_unitary(4, np.random.default_rng(9))
        state = tensor_product(*(number_state(1) for _ in range(4)))

        assert evolve_multimode(U, state).norm2() == pytest.approx(1.0, abs=1e-12)

    def test_photon_cap(self):
        """Test states above the photon cap are refused."""
        state = MultimodeState(modes=2, terms={(17, 0): 1.0}, total_photon_cap=17)

        with pytest.raises(ValueError, match="photon cap exceeded"):
            evolve_multimode(np.eye(2), state)

    def test_unknown_direction(self):
        """Test an unknown direction is rejected."""
        state = tensor_product(number_state(1), number_state(0))

        with pytest.raises(ValueError, match="direction"):
            evolve_multimode(np.eye(2), state, "sideways")


class TestConditionalBackaction:
    """Test the conditional beam-splitter operator."""

    def test_entries(self):
        """Test B[N+m, m] = (i r)^N t^m sqrt(C(N+m, m))."""
        theta = 0.4
        B = conditional_bs_backaction(2, theta, 6)

        r, t = math.sin(theta), math.cos(theta)
        assert B[5, 3] == pytest.approx((1j * r) ** 2 * t**3 * math.sqrt(10))
        assert np.count_nonzero(B) == 5

    def test_matches_multimode_projection(self):
        """Test the transpose is the forward map with N photons counted in port 1."""
        theta, N, cutoff = 0.6, 2, 6
        U = bs_matrix(theta, 0.0, 2, p=1, q=0)
        B = conditional_bs_backaction(N, theta, cutoff)

        for m in range(N, cutoff + 1):
            state = tensor_product(number_state(m), number_state(0))
            out = evolve_multimode(U, state, "forward")
            assert out.amplitude((m - N, N)) == pytest.approx(B[m, m - N], abs=1e-12)

    def test_identity_at_zero_angle(self):
        """Test no reflection and no count leaves the mode untouched."""
        np.testing.assert_allclose(conditional_bs_backaction(0, 0.0, 4), np.eye(5))
