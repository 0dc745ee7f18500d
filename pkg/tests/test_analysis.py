import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynsync.analysis import (
    PrevalenceHistogram,
    WindowSpec,
    coherence,
    fit_exponential_decay,
    fit_gaussian_profile,
    fit_power_law,
    fourier_amplitude,
    mean_negativity,
    negativity,
    nearest_bin,
    pearson,
    pearson_pairs,
    spectral_peaks,
    turning_point_prevalence,
    turning_points,
)
from dynsync.dynamics import TimeGrid, TimeSeries
from dynsync.exceptions import ConfigError, NumericalError
from dynsync.hilbert import Operator, SpaceDescriptor
from dynsync.models import product_state, random_product_state

from oracles import random_density_matrix, windowed_pearson

T = np.linspace(0, 40, 2001)
DT = T[1] - T[0]


class TestWindow:
    def test_half_steps(self):
        assert WindowSpec(10.0, 0.05).half_steps == 100

    def test_too_narrow(self):
        with pytest.raises(ConfigError):
            WindowSpec(0.05, 0.05)


class TestPearson:
    def test_self(self):
        f = np.sin(T) + 0.3 * np.cos(3 * T)
        r = pearson(f, f, WindowSpec(4.0, DT))
        ok = ~np.isnan(r)
        np.testing.assert_allclose(r[ok], 1.0, atol=1e-12)

    def test_negated(self):
        f = np.sin(T)
        r = pearson(f, -f, WindowSpec(4.0, DT))
        ok = ~np.isnan(r)
        np.testing.assert_allclose(r[ok], -1.0, atol=1e-12)

    def test_orthogonal_over_period(self):
        t = np.linspace(0, 4 * np.pi, 4001)
        dt = t[1] - t[0]
        r = pearson(np.sin(t), np.cos(t), WindowSpec(2 * np.pi, dt))
        assert abs(r[2000]) < 1e-6

    def test_constant_window_is_undefined(self):
        f = np.ones_like(T)
        r = pearson(f, np.sin(T), WindowSpec(4.0, DT))
        assert np.all(np.isnan(r))

    def test_edges_truncate_symmetrically(self):
        f = np.sin(T)
        g = np.sin(T + 0.4)
        r = pearson(f, g, WindowSpec(4.0, DT))
        assert np.isnan(r[0]) and np.isnan(r[-1])
        assert r[5] == pytest.approx(windowed_pearson(f, g, DT, 5, 5), abs=1e-12)

    def test_matches_oracle(self, rng):
        f = np.cumsum(rng.normal(size=T.size))
        g = np.cumsum(rng.normal(size=T.size))
        win = WindowSpec(6.0, DT)
        r = pearson(f, g, win)
        for c in (200, 1000, 1700):
            assert r[c] == pytest.approx(windowed_pearson(f, g, DT, c, win.half_steps), abs=1e-10)

    def test_backends_agree(self, rng):
        from dynsync import kernels

        f, g = rng.normal(size=(2, 500))
        win = WindowSpec(0.5, 0.01)
        a = pearson(f, g, win, backend="python")
        for name in kernels.BACKENDS:
            np.testing.assert_allclose(pearson(f, g, win, backend=name), a, atol=1e-12)

    def test_window_must_fit(self):
        with pytest.raises(ValueError):
            pearson(np.arange(5.0), np.arange(5.0), WindowSpec(10.0, 1.0))

    @given(
        st.integers(0, 2 ** 32 - 1),
        st.floats(0.1, 10),
        st.floats(-5, 5),
    )
    def test_properties(self, seed, a, b):
        r = np.random.default_rng(seed)
        f = np.cumsum(r.normal(size=300))
        g = np.cumsum(r.normal(size=300))
        win = WindowSpec(0.4, 0.01)
        p = pearson(f, g, win)
        ok = ~np.isnan(p)
        assert np.all((p[ok] >= -1) & (p[ok] <= 1))
        np.testing.assert_allclose(pearson(g, f, win)[ok], p[ok], atol=1e-12)
        np.testing.assert_allclose(pearson(a * f + b, g, win)[ok], p[ok], atol=1e-8)

    def test_pairs(self):
        grid = TimeGrid(0, 40, 2000)
        vals = np.column_stack([np.sin(grid.times), np.sin(grid.times), -np.sin(grid.times)])
        out = pearson_pairs(TimeSeries(grid, ["a", "b", "c"], vals), ["a", "b", "c"], 4.0)
        assert out.labels == ["pearson_a_b", "pearson_a_c", "pearson_b_c"]
        assert np.nanmin(out.column("pearson_a_b")) > 1 - 1e-12
        assert np.nanmax(out.column("pearson_a_c")) < -1 + 1e-12


def _bell():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    return Operator(SpaceDescriptor((2, 2)), np.outer(phi, phi))


class TestNegativity:
    @pytest.mark.parametrize("site", [0, 1])
    def test_bell(self, site):
        assert negativity(_bell(), site) == pytest.approx(0.5, abs=1e-10)

    @given(st.integers(0, 2 ** 32 - 1), st.integers(0, 2))
    def test_product_states(self, seed, site):
        rho = random_product_state(3, seed=seed).density_matrix()
        assert negativity(rho, site) < 1e-10

    def test_mixed_product(self, rng):
        rho = np.kron(random_density_matrix(3, rng), random_density_matrix(3, rng))
        assert negativity(Operator(SpaceDescriptor((3, 3)), rho), 0) < 1e-10

    def test_invalid_state(self):
        with pytest.raises(NumericalError):
            negativity(Operator(SpaceDescriptor((2, 2)), 2 * np.eye(4)), 0)

    def test_mean(self):
        assert mean_negativity(_bell()) == pytest.approx(0.5, abs=1e-10)


class TestCoherence:
    def test_diagonal(self):
        assert coherence(np.diag([0.2, 0.3, 0.5])) == 0.0

    def test_right_state(self):
        rho = product_state(["→"]).density_matrix()
        assert coherence(rho) == pytest.approx(1.0)

    def test_diagonal_phase_invariance(self, rng):
        rho = random_density_matrix(9, rng)
        d = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 9)))
        assert coherence(d @ rho @ d.conj().T) == pytest.approx(coherence(rho), abs=1e-12)

    def test_non_square(self):
        with pytest.raises(ValueError):
            coherence(np.zeros((2, 3)))


class TestFourier:
    def test_pure_tone(self):
        t = np.linspace(0, 200, 4001)
        freqs, amps = fourier_amplitude(np.cos(2 * t), t, t_min=0.0)
        assert abs(freqs[np.argmax(amps)] - 2.0) <= freqs[1]
        assert np.max(amps) == pytest.approx(1.0, rel=0.1)

    def test_constant(self):
        t = np.linspace(0, 10, 200)
        _, amps = fourier_amplitude(np.full(t.size, 3.7), t)
        assert np.max(amps) < 1e-10

    def test_default_tail_is_half(self):
        t = np.linspace(0, 10, 201)
        freqs, _ = fourier_amplitude(np.sin(t), t)
        assert freqs.size == 101 // 2 + 1

    def test_too_short(self):
        t = np.linspace(0, 1, 100)
        with pytest.raises(ValueError):
            fourier_amplitude(np.sin(t), t, t_min=0.9)

    def test_peaks(self):
        t = np.linspace(0, 200, 4001)
        freqs, amps = fourier_amplitude(np.cos(2 * t) + 0.3 * np.cos(4 * t), t, t_min=0.0)
        peaks = spectral_peaks(freqs, amps, rel_floor=0.05)
        assert peaks[0] == nearest_bin(freqs, 2.0)
        assert peaks[1] == nearest_bin(freqs, 4.0)


class TestTurningPoints:
    def test_cosine_extrema(self):
        t = np.linspace(0, 10, 1001)
        tp = turning_points(np.cos(2 * t + 0.3), t)
        expected = (np.pi * np.arange(1, 7) - 0.3) / 2
        np.testing.assert_allclose(tp, expected[expected < 10], atol=1e-4)

    @given(st.floats(0, 2 * np.pi), st.floats(0.3, 1.9))
    def test_prevalence_recovers_frequency(self, phase, w0):
        t = np.linspace(0, 100, 5001)
        hist = turning_point_prevalence({"x": np.cos(w0 * t + phase)}, t, bins=25, omega_range=(0, 2))
        assert abs(hist.peak_bin("x") - hist.bin_of(w0)) <= 1
        assert hist.counts["x"][hist.bin_of(w0)] >= 0.5 * hist.counts["x"].sum()

    def test_counts_sum_to_intervals(self):
        t = np.linspace(0, 50, 2001)
        f = np.cos(1.1 * t)
        hist = turning_point_prevalence({"x": f}, t, bins=10, omega_range=(0, 3))
        assert hist.counts["x"].sum() == turning_points(f, t).size - 1

    def test_t_max(self):
        t = np.linspace(0, 50, 2001)
        full = turning_point_prevalence({"x": np.cos(t)}, t)
        part = turning_point_prevalence({"x": np.cos(t)}, t, t_max=25)
        assert part.counts["x"].sum() < full.counts["x"].sum()

    def test_too_few(self):
        t = np.linspace(0, 1, 100)
        with pytest.raises(ValueError):
            turning_point_prevalence({"x": t}, t)

    def test_serialisation(self):
        h = PrevalenceHistogram(np.array([0.0, 1.0, 2.0]), {"a": np.array([3, 1])})
        assert json.loads(h.to_json()) == {"edges": [0.0, 1.0, 2.0], "counts": {"a": [3, 1]}}
        assert h.to_csv().splitlines() == ["bin_lo,bin_hi,a", "0.0,1.0,3", "1.0,2.0,1"]
        with pytest.raises(ValueError):
            h.bin_of(2.5)


class TestFits:
    def test_exponential(self):
        t = np.linspace(0, 100, 50)
        fit = fit_exponential_decay(t, 2.5 * np.exp(-0.04 * t))
        assert fit["d"] == pytest.approx(0.04, abs=1e-6)
        assert fit["c0"] == pytest.approx(2.5, rel=1e-9)

    def test_gaussian(self):
        d = np.linspace(0, 0.1, 11)
        fit = fit_gaussian_profile(d, 0.8 * np.exp(-d ** 2 / (2 * 0.03 ** 2)))
        assert fit["s"] == pytest.approx(0.03, rel=0.01)

    def test_power_law(self):
        x = np.linspace(0.01, 0.1, 10)
        fit = fit_power_law(x, 3.0 * x ** 2)
        assert fit["exponent"] == pytest.approx(2.0, abs=1e-10)
        assert fit["prefactor"] == pytest.approx(3.0, rel=1e-9)

    def test_nonpositive(self):
        with pytest.raises(ValueError):
            fit_exponential_decay([0, 1], [1.0, -1.0])

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_power_law([1.0], [1.0])

    def test_growing_profile(self):
        with pytest.raises(NumericalError):
            fit_gaussian_profile([0.0, 0.1, 0.2], [1.0, 2.0, 3.0])
