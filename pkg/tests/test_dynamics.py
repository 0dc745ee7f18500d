import numpy as np
import pytest

from dynsync.analysis import fourier_amplitude, nearest_bin
from dynsync.dynamics import (
    DensePropagator,
    TimeGrid,
    TimeSeries,
    TrajectoryConfig,
    evolve_dense,
    evolve_trajectories,
    evolve_unitary_reference,
    expectation,
    reduced_correlator,
    trajectory_rng,
)
from dynsync.exceptions import ConfigError, DenseCapError, NumericalError
from dynsync.hilbert import Operator, StateVector
from dynsync.liouville import vectorize
from dynsync.models import (
    HubbardParams,
    SpinChainParams,
    build_hubbard,
    build_spin1_chain,
    hubbard_local,
    local_observable,
    number_op,
    product_state,
    random_product_state,
)

from oracles import integrate_step_doubling
from oracles import lindblad_rhs as rhs_oracle


def _chain(anisotropy=0.5, gamma=1.0, n=3, omega=1.0):
    return build_spin1_chain(SpinChainParams.homogeneous(n, omega, anisotropy=anisotropy, dephasing_rate=gamma))


def _sx2(n=3):
    return {f"Sx2_{j}": local_observable("spin1", "Sx2", j, n) for j in range(n)}


def _hubbard2(gamma=2.5):
    return build_hubbard(HubbardParams(2, (1.5, 1.5), (0.04, 0.13), dephasing_rate=gamma))


class TestGrid:
    def test_uniform(self):
        g = TimeGrid(0.0, 2.0, 8)
        assert g.dt == 0.25
        assert np.all(np.diff(g.times) > 0)
        np.testing.assert_allclose(np.diff(g.times), 0.25)

    def test_from_dt(self):
        assert TimeGrid.from_dt(0.0, 10.0, 0.05).n_steps == 200

    @pytest.mark.parametrize("args", [(0.0, 1.0, 0), (1.0, 1.0, 5), (2.0, 1.0, 5)])
    def test_invalid(self, args):
        with pytest.raises(ConfigError):
            TimeGrid(*args)

    def test_csv_layout(self):
        g = TimeGrid(0.0, 1.0, 2)
        s = TimeSeries(g, ["a", "b"], np.arange(6.0).reshape(3, 2), np.ones((3, 2)))
        lines = s.to_csv().splitlines()
        assert lines[0] == "t,a,a_stderr,b,b_stderr"
        assert lines[1] == "0.0,0.0,1.0,1.0,1.0"
        det = TimeSeries(g, ["a"], np.zeros((3, 1)))
        assert det.to_csv().splitlines()[0] == "t,a"
        with pytest.raises(ValueError):
            det.stderr_column("a")

    def test_trajectory_config(self):
        with pytest.raises(ConfigError):
            TrajectoryConfig(n_traj=0)
        with pytest.raises(ConfigError):
            TrajectoryConfig(seed=-1)


class TestExpectation:
    def test_identity(self):
        rho = random_product_state(3, seed=1).density_matrix()
        assert expectation(rho, Operator.identity(rho.space)) == pytest.approx(1.0)

    def test_product_state_correlator(self):
        rho = random_product_state(3, seed=4).density_matrix()
        x = _sx2()
        assert abs(reduced_correlator(rho, x["Sx2_0"], x["Sx2_2"])) < 1e-14

    def test_shape_mismatch(self):
        rho = random_product_state(2, seed=0).density_matrix()
        with pytest.raises(ValueError):
            expectation(rho, local_observable("spin1", "Sz", 0, 3))


class TestDense:
    def test_eigenstate_is_stationary_without_dissipation(self):
        model = _chain(anisotropy=0.7, gamma=0.0)
        _, vecs = np.linalg.eigh(model.hamiltonian.dense())
        rho0 = StateVector(model.space, vecs[:, 5]).density_matrix()
        series = evolve_dense(model, rho0, TimeGrid(0, 5, 50), _sx2())
        assert np.ptp(series.values, axis=0).max() < 1e-10

    def test_maximally_mixed_stationary(self):
        model = _chain()
        rho0 = Operator(model.space, np.eye(27) / 27)
        _, final = evolve_dense(model, rho0, TimeGrid(0, 10, 20), return_final=True)
        assert (final - rho0).frobenius_norm() < 1e-12

    def test_rejects_invalid_state(self):
        model = _chain()
        bad = Operator(model.space, np.diag([2.0] + [-1.0 / 26] * 26))
        with pytest.raises(NumericalError):
            evolve_dense(model, bad, TimeGrid(0, 1, 2))

    def test_cap(self):
        model = _chain()
        rho0 = random_product_state(3, seed=0).density_matrix()
        with pytest.raises(DenseCapError):
            evolve_dense(model, rho0, TimeGrid(0, 1, 2), cap=4)

    def test_step_matches_adaptive_integrator(self):
        model = _chain(gamma=1.0)
        rho0 = random_product_state(3, seed=3).density_matrix()
        dt = 0.1
        prop = DensePropagator(model, dt)
        v1 = prop.step(vectorize(rho0)).reshape(27, 27, order="F")
        h = model.hamiltonian.dense()
        jumps = [(op.dense(), rate) for op, rate in model.jumps]
        ref = integrate_step_doubling(lambda r: rhs_oracle(h, jumps, r), rho0.dense(), dt, tol=1e-12)
        assert np.linalg.norm(v1 - ref) < 1e-8

    def test_invariants_along_trajectory(self):
        model = _chain()
        rho0 = random_product_state(3, seed=0).density_matrix()
        wit = {
            "trace_err": lambda r: abs(r.trace() - 1.0),
            "herm_err": lambda r: np.linalg.norm(r.dense() - r.dense().conj().T),
            "min_eig": lambda r: np.linalg.eigvalsh(0.5 * (r.dense() + r.dense().conj().T))[0],
        }
        s = evolve_dense(model, rho0, TimeGrid(0, 20, 200), witnesses=wit)
        assert s.column("trace_err").max() < 1e-9
        assert s.column("herm_err").max() < 1e-10
        assert s.column("min_eig").min() > -1e-7

    def test_locked_late_time_signal(self):
        model = _chain(anisotropy=0.5, gamma=1.0)
        rho0 = random_product_state(3, seed=0).density_matrix()
        grid = TimeGrid(0, 200, 4000)
        s = evolve_dense(model, rho0, grid, _sx2(), check_invariants=False)
        late = grid.times >= 150
        cols = [s.column(f"Sx2_{j}")[late] for j in range(3)]
        assert max(np.max(np.abs(c - cols[0])) for c in cols) < 1e-3
        freqs, amps = fourier_amplitude(s.column("Sx2_0"), grid.times, t_min=100)
        assert int(np.argmax(amps)) == nearest_bin(freqs, 2.0)

    def test_list_observables_get_default_labels(self):
        model = _chain(n=2)
        rho0 = random_product_state(2, seed=0).density_matrix()
        s = evolve_dense(model, rho0, TimeGrid(0, 1, 2), [local_observable("spin1", "Sz", 0, 2)])
        assert s.labels == ["obs0"]


class TestTrajectories:
    def test_closed_system_is_schrodinger(self):
        model = _hubbard2(gamma=0.0)
        psi = product_state(["←", "↓"], "hubbard")
        obs = {f"Sx_{j}": hubbard_local("Sx", j, 2) for j in range(2)}
        grid = TimeGrid(0, 5, 50)
        traj = evolve_trajectories(model, psi, grid, obs, TrajectoryConfig(n_traj=5, seed=1))
        ref = evolve_unitary_reference(model, psi, grid, obs)
        dense = evolve_dense(model, psi.density_matrix(), grid, obs)
        assert np.all(traj.stderr == 0)
        np.testing.assert_allclose(traj.values, ref.values, atol=1e-10)
        np.testing.assert_allclose(traj.values, dense.values, atol=1e-10)

    def test_matches_dense_within_stderr(self):
        model = _hubbard2()
        psi = product_state(["←", "↓"], "hubbard")
        obs = {f"Sx_{j}": hubbard_local("Sx", j, 2) for j in range(2)}
        grid = TimeGrid(0, 3, 30)
        traj = evolve_trajectories(model, psi, grid, obs, TrajectoryConfig(n_traj=400, seed=5))
        dense = evolve_dense(model, psi.density_matrix(), grid, obs)
        z = np.abs(traj.values - dense.values) / np.maximum(traj.stderr, 1e-12)
        assert np.all((np.abs(traj.values - dense.values) <= 5 * traj.stderr + 1e-9) | (z < 5))

    def test_particle_number_conserved(self):
        model = _hubbard2()
        psi = product_state(["←", "↓"], "hubbard")
        total = number_op(2, 0) + number_op(2, 1)
        grid = TimeGrid(0, 3, 30)
        traj = evolve_trajectories(model, psi, grid, {"N": total}, TrajectoryConfig(n_traj=50, seed=2))
        np.testing.assert_allclose(traj.column("N"), 2.0, atol=1e-10)
        assert np.all(traj.stderr_column("N") < 1e-10)

    def test_deterministic_and_thread_independent(self):
        model = _hubbard2()
        psi = product_state(["←", "↓"], "hubbard")
        obs = {"Sx_0": hubbard_local("Sx", 0, 2)}
        grid = TimeGrid(0, 2, 20)
        cfg = TrajectoryConfig(n_traj=24, seed=7)
        a = evolve_trajectories(model, psi, grid, obs, cfg, threads=1)
        b = evolve_trajectories(model, psi, grid, obs, cfg, threads=1)
        c = evolve_trajectories(model, psi, grid, obs, cfg, threads=3)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_allclose(a.values, c.values, rtol=0, atol=1e-14)

    def test_rng_streams_are_counter_based(self):
        x = trajectory_rng(3, 17).random(4)
        trajectory_rng(3, 0).random(100)
        np.testing.assert_array_equal(x, trajectory_rng(3, 17).random(4))
        assert not np.array_equal(x, trajectory_rng(3, 18).random(4))

    def test_unnormalised_state_rejected(self):
        model = _hubbard2()
        psi = product_state(["←", "↓"], "hubbard")
        psi.amplitudes = 2 * psi.amplitudes
        with pytest.raises(ConfigError):
            evolve_trajectories(model, psi, TimeGrid(0, 1, 2), {}, TrajectoryConfig(n_traj=1))
