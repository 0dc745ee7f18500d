"""Synchronisation witnesses and signal post-processing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .dynamics import TimeGrid, TimeSeries
from .exceptions import ConfigError, NumericalError
from .hilbert import Operator, partial_transpose, trace_norm

# relative variance below which a Pearson window is treated as constant
_REL_VAR_FLOOR = 1e-24


@dataclass(frozen=True)
class WindowSpec:
    """Rolling window of total width ``width`` on a grid with spacing ``dt``."""

    width: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.width < 2 * self.dt * (1 - 1e-9):
            raise ConfigError("window must span at least two grid steps")

    @property
    def half_steps(self) -> int:
        return max(1, int(round(0.5 * self.width / self.dt)))

    @property
    def stride(self) -> float:
        return self.dt


def pearson(f, g, window: WindowSpec, backend: str | None = None) -> np.ndarray:
    """Windowed Pearson coefficient centred on every sample; NaN where undefined."""
    f = np.ascontiguousarray(f, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise ValueError("f and g must be 1-d arrays on a common grid")
    if 2 * window.half_steps + 1 > f.size:
        raise ValueError("window does not fit within the series")
    return kernels.rolling_pearson(f, g, window.dt, window.half_steps, _REL_VAR_FLOOR, backend=backend)


def pearson_pairs(series: TimeSeries, labels: Sequence[str], width: float) -> TimeSeries:
    """Pearson coefficient for every unordered pair of the given columns."""
    win = WindowSpec(width, series.grid.dt)
    out_labels, cols = [], []
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            out_labels.append(f"pearson_{labels[a]}_{labels[b]}")
            cols.append(pearson(series.column(labels[a]), series.column(labels[b]), win))
    values = np.column_stack(cols) if cols else np.zeros((series.times.size, 0))
    return TimeSeries(series.grid, out_labels, values)


def negativity(rho: Operator, site: int, tol: float = 1e-10) -> float:
    """(||rho^{T_site}||_1 - 1) / 2 for the cut between ``site`` and the rest."""
    m = rho.dense()
    if abs(np.trace(m) - 1.0) > 1e-8 or np.linalg.norm(m - m.conj().T) > 1e-8:
        raise NumericalError("negativity needs a Hermitian unit-trace state")
    val = 0.5 * (trace_norm(partial_transpose(rho, site)) - 1.0)
    if val < -tol:
        raise NumericalError(f"negativity {val:.3e} is below zero; state is not positive")
    return max(val, 0.0)


def mean_negativity(rho: Operator) -> float:
    return float(np.mean([negativity(rho, j) for j in range(rho.space.n_sites)]))


def coherence(rho: Operator | np.ndarray) -> float:
    """Sum of moduli of the off-diagonal entries in the configuration basis."""
    m = rho.dense() if isinstance(rho, Operator) else np.asarray(rho)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("coherence needs a square matrix")
    a = np.abs(m)
    return float(a.sum() - np.trace(a))


def fourier_amplitude(values, times, t_min: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude spectrum of the Hann-windowed, mean-subtracted tail t >= t_min.

    Returns angular frequencies and amplitudes normalised so that a pure tone
    A cos(w t) on a bin centre reads A.
    """
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if t_min is None:
        t_min = times[0] + 0.5 * (times[-1] - times[0])
    tail = values[times >= t_min - 1e-12]
    if tail.size < 64:
        raise ValueError(f"need at least 64 samples beyond t_min, got {tail.size}")
    dt = times[1] - times[0]
    win = np.hanning(tail.size)
    spec = np.fft.rfft((tail - tail.mean()) * win)
    amps = 2.0 * np.abs(spec) / win.sum()
    freqs = 2 * np.pi * np.fft.rfftfreq(tail.size, dt)
    return freqs, amps


def spectral_peaks(freqs: np.ndarray, amps: np.ndarray, rel_floor: float = 0.0) -> np.ndarray:
    """Indices of local maxima above ``rel_floor`` times the global maximum, strongest first."""
    inner = np.where((amps[1:-1] > amps[:-2]) & (amps[1:-1] >= amps[2:]))[0] + 1
    if amps.size > 1 and amps[0] > amps[1]:
        inner = np.concatenate([[0], inner])
    top = amps.max() if amps.size else 0.0
    inner = inner[amps[inner] > rel_floor * top]
    return inner[np.argsort(amps[inner])[::-1]]


def nearest_bin(freqs: np.ndarray, omega: float) -> int:
    return int(np.argmin(np.abs(freqs - omega)))


# --------------------------------------------------------------------------------------
# turning points
# --------------------------------------------------------------------------------------

def turning_points(values, times) -> np.ndarray:
    """Times of local extrema from derivative sign changes, refined by a parabola."""
    f = np.asarray(values, dtype=float)
    t = np.asarray(times, dtype=float)
    d = np.diff(f)
    dt = t[1] - t[0]
    out = []
    for k in range(1, f.size - 1):
        if d[k - 1] * d[k] < 0:
            denom = f[k - 1] - 2 * f[k] + f[k + 1]
            shift = 0.5 * (f[k - 1] - f[k + 1]) / denom if denom != 0 else 0.0
            out.append(t[k] + np.clip(shift, -0.5, 0.5) * dt)
    return np.array(out)


@dataclass
class PrevalenceHistogram:
    bin_edges: np.ndarray
    counts: dict[str, np.ndarray] = field(default_factory=dict)

    def peak_bin(self, label: str) -> int:
        return int(np.argmax(self.counts[label]))

    def bin_of(self, omega: float) -> int:
        idx = int(np.searchsorted(self.bin_edges, omega, side="right")) - 1
        if not 0 <= idx < len(self.bin_edges) - 1:
            raise ValueError(f"{omega} is outside the histogram range")
        return idx

    def to_json(self) -> str:
        return json.dumps(
            {"edges": [float(e) for e in self.bin_edges],
             "counts": {k: [int(c) for c in v] for k, v in self.counts.items()}}
        )

    def to_csv(self) -> str:
        labels = list(self.counts)
        lines = [",".join(["bin_lo", "bin_hi"] + labels)]
        for b in range(len(self.bin_edges) - 1):
            row = [repr(float(self.bin_edges[b])), repr(float(self.bin_edges[b + 1]))]
            row += [str(int(self.counts[k][b])) for k in labels]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def turning_point_prevalence(
    columns: Mapping[str, np.ndarray],
    times,
    t_max: float | None = None,
    bins: int = 25,
    omega_range: tuple[float, float] = (0.0, 2.0),
    t_min: float | None = None,
) -> PrevalenceHistogram:
    """Histogram of angular frequencies pi / (t_{k+1} - t_k) between successive turning points.

    Frequencies outside ``omega_range`` are not counted, so the counts sum to
    the number of intervals that fall in range.
    """
    times = np.asarray(times, dtype=float)
    mask = np.ones(times.size, dtype=bool)
    if t_max is not None:
        mask &= times <= t_max + 1e-12
    if t_min is not None:
        mask &= times >= t_min - 1e-12
    edges = np.linspace(omega_range[0], omega_range[1], bins + 1)
    counts = {}
    for label, col in columns.items():
        tp = turning_points(np.asarray(col)[mask], times[mask])
        if tp.size < 2:
            raise ValueError(f"series {label!r} has fewer than two turning points")
        omegas = np.pi / np.diff(tp)
        counts[label], _ = np.histogram(omegas, bins=edges)
    return PrevalenceHistogram(edges, counts)


# --------------------------------------------------------------------------------------
# fits
# --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    params: dict[str, float]
    residual: float

    def __getitem__(self, key: str) -> float:
        return self.params[key]


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    if x.size < 2:
        raise ValueError("need at least two points for a two-parameter fit")
    a = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.sqrt(np.mean((a @ coef - y) ** 2)))
    return float(coef[0]), float(coef[1]), resid


def _positive(y, what: str) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError(f"{what} must be strictly positive for a log-space fit")
    return y


def fit_exponential_decay(t, c) -> FitResult:
    """c(t) ~ c0 exp(-d t) via least squares on log c."""
    slope, icpt, res = _linear_fit(np.asarray(t, dtype=float), np.log(_positive(c, "data")))
    return FitResult({"d": -slope, "c0": float(np.exp(icpt))}, res)


def fit_gaussian_profile(delta, c) -> FitResult:
    """c(delta) ~ c0 exp(-delta^2 / 2 s^2) via least squares on log c against delta^2."""
    d2 = np.asarray(delta, dtype=float) ** 2
    slope, icpt, res = _linear_fit(d2, np.log(_positive(c, "data")))
    if slope >= 0:
        raise NumericalError("profile does not decay with detuning")
    return FitResult({"s": float(np.sqrt(-0.5 / slope)), "c0": float(np.exp(icpt))}, res)


def fit_power_law(x, y) -> FitResult:
    """y ~ a x^p via a log-log linear fit."""
    x = _positive(x, "abscissa")
    slope, icpt, res = _linear_fit(np.log(x), np.log(_positive(y, "data")))
    return FitResult({"exponent": slope, "prefactor": float(np.exp(icpt))}, res)


def witness_series(rho_series: Sequence[Operator], grid: TimeGrid) -> TimeSeries:
    """Mean negativity and coherence for a list of states on ``grid``."""
    vals = np.array([[mean_negativity(r), coherence(r)] for r in rho_series])
    return TimeSeries(grid, ["negativity", "coherence"], vals)
