import numpy as np
import pytest

from spinbattery.linalg import embed, operator_norm
from spinbattery.spin import (
    AXES,
    build_T,
    build_V,
    conservation_residual,
    spin_operators,
    tau_state,
    total_spin_component,
)

from oracle_utils import triple_coupling_half

SPINS = (0.5, 1.0, 1.5)


class TestSpinOperators:
    def test_spin_half_is_half_pauli(self):
        ops = spin_operators(0.5)
        assert np.allclose(ops.sx, np.array([[0, 1], [1, 0]]) / 2)
        assert np.allclose(ops.sy, np.array([[0, -1j], [1j, 0]]) / 2)
        assert np.allclose(ops.sz, np.diag([0.5, -0.5]))

    def test_spin_one_sz(self):
        assert np.allclose(spin_operators(1.0).sz, np.diag([1.0, 0.0, -1.0]))

    def test_spin_three_halves_sz(self):
        assert np.allclose(
            spin_operators(1.5).sz, np.diag([1.5, 0.5, -0.5, -1.5])
        )

    @pytest.mark.parametrize("s", SPINS)
    def test_commutation_relations(self, s):
        ops = spin_operators(s)
        pairs = [("x", "y", "z"), ("y", "z", "x"), ("z", "x", "y")]
        for a, b, c in pairs:
            sa, sb, sc = (ops.component(k) for k in (a, b, c))
            assert np.max(np.abs(sa @ sb - sb @ sa - 1j * sc)) < 1e-12

    @pytest.mark.parametrize("s", SPINS)
    def test_casimir(self, s):
        ops = spin_operators(s)
        total = sum(op @ op for op in ops.as_tuple())
        assert np.max(np.abs(total - s * (s + 1) * np.eye(ops.dim))) < 1e-12

    @pytest.mark.parametrize("s", SPINS)
    def test_hermitian_traceless(self, s):
        for op in spin_operators(s).as_tuple():
            assert np.max(np.abs(op - op.conj().T)) < 1e-14
            assert abs(np.trace(op)) < 1e-14

    @pytest.mark.parametrize("bad", [0, -0.5, 0.3, 1.2])
    def test_invalid_spin_rejected(self, bad):
        with pytest.raises(ValueError):
            spin_operators(bad)


class TestTauState:
    def test_half_z(self):
        assert np.allclose(tau_state(0.5, "z"), np.diag([1.0, 0.0]))

    def test_half_y_entries(self):
        tau = tau_state(0.5, "y")
        assert np.allclose(tau, np.array([[0.5, -0.5j], [0.5j, 0.5]]))

    def test_spin_one_x_polarization(self):
        ops = spin_operators(1.0)
        tau = tau_state(1.0, "x")
        assert abs(np.trace(ops.sx @ tau).real - 1.0) < 1e-10

    @pytest.mark.parametrize("s", SPINS)
    @pytest.mark.parametrize("axis", AXES)
    def test_pure_and_maximally_polarized(self, s, axis):
        tau = tau_state(s, axis)
        assert abs(np.trace(tau @ tau).real - 1.0) < 1e-10
        ops = spin_operators(s)
        for k in AXES:
            expected = s if k == axis else 0.0
            assert abs(np.trace(ops.component(k) @ tau).real - expected) < 1e-10


class TestTripleCoupling:
    def test_matches_cross_product_oracle(self):
        assert np.max(np.abs(build_T(0.5) - triple_coupling_half())) < 1e-14

    def test_norm_bound_spin_half(self):
        assert operator_norm(build_T(0.5)) <= 0.75

    @pytest.mark.parametrize("s", SPINS)
    def test_traceless_hermitian(self, s):
        t = build_T(s)
        assert abs(np.trace(t)) < 1e-12
        assert np.max(np.abs(t - t.conj().T)) == 0.0

    def test_cyclic_slot_permutation_invariance(self):
        # shifting all three tensor slots cyclically leaves the scalar fixed
        t = build_T(0.5)
        perm = np.zeros((8, 8))
        for i in range(8):
            b = [(i >> k) & 1 for k in (2, 1, 0)]  # bits of slots 0,1,2
            j = (b[2] << 2) | (b[0] << 1) | b[1]   # slots shifted 0->1->2->0
            perm[j, i] = 1.0
        assert np.max(np.abs(perm @ t @ perm.T - t)) < 1e-12

    def test_axis_relabeling_invariance(self):
        # renaming axes cyclically inside the sum reproduces the same operator
        ops = spin_operators(0.5)
        relabel = {"x": "y", "y": "z", "z": "x"}
        from spinbattery.spin import LEVI_CIVITA

        t2 = sum(
            sign
            * np.kron(
                ops.component(relabel[j]),
                np.kron(ops.component(relabel[k]), ops.component(relabel[l])),
            )
            for (j, k, l), sign in LEVI_CIVITA.items()
        )
        assert np.max(np.abs(t2 - build_T(0.5))) < 1e-12


class TestStepUnitary:
    def test_zero_angle_identity(self):
        v = build_V(0.5, 0.0, 10)
        assert np.array_equal(v.matrix, np.eye(8))

    def test_unitary_spin_one(self):
        v = build_V(1.0, np.pi, 100)
        assert np.max(np.abs(v.matrix @ v.matrix.conj().T - np.eye(27))) < 1e-10

    def test_coupling_reduces_to_four_alpha_over_n(self):
        # at s = 1/2 the coupling 1/(s^2 N) equals 4/N exactly
        from scipy.linalg import expm

        v = build_V(0.5, 0.7, 13)
        expected = expm(-1j * (4 * 0.7 / 13) * build_T(0.5))
        assert np.max(np.abs(v.matrix - expected)) < 1e-12


class TestTotalSpin:
    def test_single_party(self):
        ops = spin_operators(0.5)
        assert np.allclose(total_spin_component("z", [(0.5, True)]), ops.sz)

    def test_three_spin_half_spectrum(self):
        sz = total_spin_component("z", [(0.5, True)] * 3)
        w = np.linalg.eigvalsh(sz)
        assert set(np.round(w, 10)) == {-1.5, -0.5, 0.5, 1.5}

    def test_traceless(self):
        for axis in AXES:
            op = total_spin_component(axis, [(0.5, True), (1.0, True)])
            assert abs(np.trace(op)) < 1e-12

    def test_partial_flags(self):
        ops = spin_operators(0.5)
        op = total_spin_component("x", [(0.5, False), (0.5, True)])
        assert np.allclose(op, embed(ops.sx, [2, 2], 1))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            total_spin_component("x", [])


class TestConservation:
    @pytest.mark.parametrize("s", SPINS)
    @pytest.mark.parametrize("alpha", (0.1, 1.0, np.pi))
    @pytest.mark.parametrize("n_iter", (1, 10))
    def test_step_unitary_conserves_total_spin(self, s, alpha, n_iter):
        v = build_V(s, alpha, n_iter)
        for axis in AXES:
            assert conservation_residual(v, axis) <= 1e-12

    def test_identity_has_zero_residual(self):
        v = build_V(0.5, 0.0, 1)
        for axis in AXES:
            assert conservation_residual(v, axis) == 0.0
