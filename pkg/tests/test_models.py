import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynsync.exceptions import ConfigError
from dynsync.hilbert import Operator, commutator, embed_local
from dynsync.liouville import build_superoperator
from dynsync.models import (
    SZ,
    HubbardParams,
    LindbladModel,
    SpinChainParams,
    SteadyStateSpec,
    build_hubbard,
    build_spin1_chain,
    fermion_annihilator,
    fermion_creator,
    hubbard_local,
    hubbard_spin_raising,
    local_observable,
    number_op,
    product_state,
    random_product_state,
    sector_counts,
    single_occupancy_projector,
    sm_extra_symmetry_B,
    spin1_magnetizations,
    spin1_steady_state,
    spin1_symmetry,
)
from dynsync.symmetry import swap_invariance, verify_dynamical_symmetry


def _total_sz(n):
    return sum(local_observable("spin1", "Sz", j, n) for j in range(n))


def _hubbard(n, omega=1.5, mu=None, **kw):
    mu = mu if mu is not None else [0.0] * n
    return build_hubbard(HubbardParams(n, (omega,) * n, tuple(mu), **kw))


class TestSpinChain:
    def test_dimensions(self):
        m = build_spin1_chain(SpinChainParams.homogeneous(3))
        assert m.hamiltonian.shape == (27, 27)
        assert len(m.jumps) == 3

    @given(
        st.lists(st.floats(-2, 2), min_size=3, max_size=3),
        st.floats(-1, 1),
        st.floats(-1, 1),
    )
    def test_conserves_total_sz(self, omegas, delta, hop):
        m = build_spin1_chain(SpinChainParams(3, tuple(omegas), hopping=hop, anisotropy=delta))
        assert commutator(m.hamiltonian, _total_sz(3)).frobenius_norm() < 1e-12

    def test_top_symmetry_frequency(self, fig2_model):
        a3 = spin1_symmetry(3, 3)
        assert (commutator(fig2_model.hamiltonian, a3) - 6.0 * a3).frobenius_norm() < 1e-12

    def test_bad_params(self):
        with pytest.raises(ConfigError):
            SpinChainParams(3, (1.0, 1.0))
        with pytest.raises(ConfigError):
            SpinChainParams.homogeneous(2, dephasing_rate=-1.0)

    def test_non_hermitian_hamiltonian_rejected(self):
        m = build_spin1_chain(SpinChainParams.homogeneous(1))
        bad = Operator(m.space, np.triu(np.ones((3, 3))))
        with pytest.raises(ConfigError):
            LindbladModel(m.space, bad, m.jumps)


class TestSteadyState:
    def test_sector_counts_n2(self):
        assert sector_counts(2) == {-2: 1, -1: 2, 0: 3, 1: 2, 2: 1}

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_sector_counts_enumeration(self, n):
        mags = spin1_magnetizations(n)
        counted = {m: int(np.sum(mags == m)) for m in range(-n, n + 1)}
        brute = {m: 0 for m in range(-n, n + 1)}
        for digits in itertools.product([1, 0, -1], repeat=n):
            brute[sum(digits)] += 1
        assert counted == brute == sector_counts(n)

    def test_maximally_mixed(self):
        rho = spin1_steady_state(3, SteadyStateSpec.maximally_mixed(3))
        np.testing.assert_allclose(rho.dense(), np.eye(27) / 27, atol=1e-15)

    def test_random_spec_is_stationary(self, fig2_model):
        rho = spin1_steady_state(3, SteadyStateSpec.random(3, seed=4))
        lv = build_superoperator(fig2_model).apply(rho)
        assert lv.frobenius_norm() < 1e-10
        assert rho.trace() == pytest.approx(1.0)

    def test_unnormalised_spec_rejected(self):
        with pytest.raises(ConfigError):
            spin1_steady_state(2, SteadyStateSpec(2, {0: 1.0}))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_commutes_with_local_sz_and_dissipator_only(self, seed):
        n = 3
        rho = spin1_steady_state(n, SteadyStateSpec.random(n, seed=seed))
        for j in range(n):
            sz2 = local_observable("spin1", "Sz2", j, n)
            assert commutator(sz2, rho).frobenius_norm() < 1e-14
        # total magnetisation commutes too, per sector
        assert commutator(_total_sz(n), rho).frobenius_norm() < 1e-14
        m = build_spin1_chain(SpinChainParams.homogeneous(n, dephasing_rate=1.0))
        dissipator_only = m.with_hamiltonian(Operator.zeros(m.space))
        assert build_superoperator(dissipator_only).apply(rho).frobenius_norm() == 0.0


class TestSpinSymmetries:
    def test_top_is_single_dyad(self):
        a = spin1_symmetry(3, 3).dense()
        assert np.count_nonzero(a) == 1 and a[0, 26] == 1.0

    @pytest.mark.parametrize("m", [1, 2, 3, -1, -3])
    def test_nilpotent(self, m):
        a = spin1_symmetry(3, m)
        assert (a @ a).frobenius_norm() == 0.0

    def test_m1_frequency(self):
        model = build_spin1_chain(SpinChainParams.homogeneous(3, 1.0, anisotropy=0.5))
        a1 = spin1_symmetry(3, 1)
        assert (commutator(model.hamiltonian, a1) - 2.0 * a1).frobenius_norm() < 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_all_ladders(self, n):
        omega = 0.7
        model = build_spin1_chain(SpinChainParams.homogeneous(n, omega, anisotropy=0.5, dephasing_rate=1.3))
        for m in range(1, n + 1):
            a = spin1_symmetry(n, m)
            assert (commutator(model.hamiltonian, a) - 2 * m * omega * a).frobenius_norm() < 1e-11
            for op, _ in model.jumps:
                assert commutator(op, a).frobenius_norm() < 1e-13

    def test_zero_m_rejected(self):
        with pytest.raises(ConfigError):
            spin1_symmetry(3, 0)

    def test_B_commutes_with_jumps(self, fig2_model):
        b = sm_extra_symmetry_B(3)
        for op, _ in fig2_model.jumps:
            assert commutator(op, b).frobenius_norm() < 1e-13

    def test_B_not_swap_invariant(self):
        assert not swap_invariance(sm_extra_symmetry_B(3))

    def test_B_fails_with_anisotropy(self, fig2_model):
        report = verify_dynamical_symmetry(fig2_model, sm_extra_symmetry_B(3))
        assert not report.passes
        assert report.hamiltonian_residual > 1e-3


class TestHubbard:
    def test_dimensions(self):
        m = _hubbard(2)
        assert m.hamiltonian.shape == (16, 16)
        assert len(m.jumps) == 2

    def test_car(self):
        n = 2
        modes = [(j, s) for j in range(n) for s in (0, 1)]
        eye = np.eye(16)
        for (j, s), (l, t) in itertools.product(modes, modes):
            c = fermion_annihilator(n, j, s).dense()
            cd = fermion_creator(n, l, t).dense()
            expected = eye if (j, s) == (l, t) else 0 * eye
            assert np.linalg.norm(c @ cd + cd @ c - expected) < 1e-13
            c2 = fermion_annihilator(n, l, t).dense()
            assert np.linalg.norm(c @ c2 + c2 @ c) < 1e-13

    def test_conserved_quantities(self):
        m = _hubbard(2, mu=[0.1, 0.05], interaction=0.7)
        n_total = number_op(2, 0) + number_op(2, 1)
        sz = hubbard_local("Sz", 0, 2) + hubbard_local("Sz", 1, 2)
        assert commutator(m.hamiltonian, n_total).frobenius_norm() < 1e-13
        assert commutator(m.hamiltonian, sz).frobenius_norm() < 1e-13
        for s in (0, 1):
            ns = number_op(2, 0, s) + number_op(2, 1, s)
            assert commutator(m.hamiltonian, ns).frobenius_norm() < 1e-13

    def test_raising_commutes_with_charge(self):
        sp_ = hubbard_spin_raising(3)
        for j in range(3):
            assert commutator(number_op(3, j), sp_).frobenius_norm() < 1e-13

    def test_raising_frequency(self):
        rng = np.random.default_rng(3)
        m = _hubbard(2, omega=1.5, mu=list(rng.uniform(0, 0.2, 2)))
        s = hubbard_spin_raising(2)
        assert (commutator(m.hamiltonian, s) - 1.5 * s).frobenius_norm() < 1e-12

    def test_jumps_commute_with_ladder(self):
        m = _hubbard(3)
        s = hubbard_spin_raising(3)
        for op, _ in m.jumps:
            assert commutator(op, s).frobenius_norm() < 1e-13
            assert commutator(op, s.dag()).frobenius_norm() < 1e-13

    @pytest.mark.parametrize("n", [2, 3])
    def test_raising_nilpotent_on_single_occupancy(self, n):
        s = hubbard_spin_raising(n)
        proj = single_occupancy_projector(n)
        power = Operator.identity(s.space)
        for _ in range(n):
            power = s @ power
        assert (power @ proj).frobenius_norm() > 0.5
        assert (s @ power @ proj).frobenius_norm() < 1e-13

    def test_hopping_adjacency(self):
        n = 3
        m = _hubbard(n, omega=0.0, interaction=0.0, tunneling=1.0)
        h = m.hamiltonian.dense()
        vac = np.zeros(64)
        vac[0] = 1.0
        for s in (0, 1):
            kets = [fermion_creator(n, j, s).dense() @ vac for j in range(n)]
            h1 = np.array([[np.vdot(a, h @ b) for b in kets] for a in kets])
            expected = -(np.eye(n, k=1) + np.eye(n, k=-1))
            np.testing.assert_allclose(h1, expected, atol=1e-14)

    def test_sx_sum_matches_raising(self):
        n = 2
        s = hubbard_spin_raising(n)
        sx = hubbard_local("Sx", 0, n) + hubbard_local("Sx", 1, n)
        assert (sx - 0.5 * (s + s.dag())).frobenius_norm() < 1e-14


class TestStates:
    @pytest.mark.parametrize("labels,kind", [
        (["→", "0", "↓"], "spin1"), (["up", "right"], "spin1"),
        (["←", "↓", "↑"], "hubbard"), (["empty", "double"], "hubbard"),
    ])
    def test_normalised(self, labels, kind):
        assert product_state(labels, kind).norm() == pytest.approx(1.0, abs=1e-14)

    def test_right_sx2(self):
        psi = product_state(["→"])
        assert local_observable("spin1", "Sx2", 0, 1).expect(psi).real == pytest.approx(1.0)

    def test_zero_state(self):
        psi = product_state(["0"])
        assert local_observable("spin1", "Sz", 0, 1).expect(psi) == pytest.approx(0.0)
        assert local_observable("spin1", "Sz2", 0, 1).expect(psi) == pytest.approx(0.0)

    def test_unknown_label(self):
        with pytest.raises(ConfigError):
            product_state(["x"])

    def test_random_zero_mean_sx(self):
        psi = random_product_state(4, seed=9, zero_mean_sx=True)
        for j in range(4):
            assert abs(local_observable("spin1", "Sx", j, 4).expect(psi)) < 1e-14

    def test_random_hubbard_single_occupancy(self):
        psi = random_product_state(3, seed=1, kind="hubbard")
        for j in range(3):
            assert number_op(3, j).expect(psi).real == pytest.approx(1.0)

    def test_random_deterministic(self):
        a = random_product_state(3, seed=5).amplitudes
        b = random_product_state(3, seed=5).amplitudes
        np.testing.assert_array_equal(a, b)

    def test_local_sz_matrix(self):
        op = local_observable("spin1", "Sz", 1, 2)
        np.testing.assert_array_equal(op.dense(), embed_local(SZ, 1, op.space).dense())
