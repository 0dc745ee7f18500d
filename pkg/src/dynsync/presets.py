"""Named experiment presets for each figure dataset, at desk scale."""

from __future__ import annotations

import copy
from dataclasses import dataclass

from .exceptions import ConfigError


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    substitution: str
    config: dict


def _spin1(n=3, omega=1.0, anisotropy=0.5, dephasing_rate=2.0, **extra) -> dict:
    return {"kind": "spin1", "n_sites": n, "omega": omega, "hopping": 1.0,
            "anisotropy": anisotropy, "dephasing_rate": dephasing_rate, **extra}


def _fig3(anisotropy: float, dephasing_rate: float, name: str, symmetry: bool) -> dict:
    cfg = {
        "name": name,
        "model": _spin1(anisotropy=anisotropy, dephasing_rate=dephasing_rate),
        "initial_state": {"random_product": {}},
        "grid": {"t_start": 0.0, "t_end": 100.0, "n_steps": 2000},
        "observables": [{"name": "Sx2", "sites": "all"}],
        "analyses": [{"type": "pearson", "observable": "Sx2", "width": 10.0, "t_min": 50.0}],
    }
    if symmetry:
        cfg["analyses"].append({"type": "symmetry", "operator": "sm_B"})
    return cfg


_DELTA_GRID = [round(0.01 * k, 2) for k in range(11)]

_PRESETS = [
    Preset(
        "fig2a",
        "spin-1 N=3 Liouvillian spectrum; w=1, Delta=0.5, gamma=2",
        "full scale",
        {"name": "fig2a", "model": _spin1(), "analyses": [{"type": "spectrum"}]},
    ),
    Preset(
        "fig2b",
        "density matrix at t=100 from a random product state; w=1, Delta=0.5, gamma=2",
        "full scale",
        {
            "name": "fig2b",
            "model": _spin1(),
            "initial_state": {"random_product": {}},
            "grid": {"t_start": 0.0, "t_end": 100.0, "n_steps": 1000},
            "analyses": [{"type": "density_matrix", "support_threshold": 1e-6}],
        },
    ),
    Preset("fig3a", "<(Sx_j)^2> and pairwise Pearson; Delta=0.5, gamma=1", "full scale",
           _fig3(0.5, 1.0, "fig3a", True)),
    Preset("fig3b", "<(Sx_j)^2> and pairwise Pearson; Delta=0, gamma=2", "full scale",
           _fig3(0.0, 2.0, "fig3b", True)),
    Preset("fig3c", "<(Sx_j)^2> and pairwise Pearson; Delta=0.5, gamma=0 (closed)", "full scale",
           _fig3(0.5, 0.0, "fig3c", False)),
    Preset(
        "fig4",
        "N=4 reduced correlators of (Sx_j)^2 and their Fourier spectrum; Delta=0.5, gamma=2",
        "full scale; transient before t=200 excluded from the agreement check",
        {
            "name": "fig4",
            "model": _spin1(n=4),
            "initial_state": {"random_product": {"zero_mean_sx": True}},
            "grid": {"t_start": 0.0, "t_end": 400.0, "n_steps": 4000},
            "analyses": [
                {"type": "correlators", "observable": "Sx2", "t_min": 200.0},
                {"type": "fourier", "series": "A_Sx2_0_1", "t_min": 200.0, "expected": [2.0, 4.0]},
            ],
        },
    ),
    Preset(
        "fig5",
        "detuning tongue of negativity and coherence from |->00>, plus turning-point "
        "prevalence for w={0.4,0.45,0.5}, gamma=1",
        "delta grid 0..0.1 (positive half; the linear spread is symmetric in delta)",
        {
            "name": "fig5",
            "model": _spin1(omegas=[0.4, 0.45, 0.5], dephasing_rate=1.0),
            "initial_state": {"labels": ["→", "0", "0"]},
            "grid": {"t_start": 0.0, "t_end": 100.0, "n_steps": 2000},
            "observables": [{"name": "Sx2", "sites": "all"}],
            "analyses": [
                {"type": "pearson", "observable": "Sx2", "width": 2.0, "t_min": 20.0},
                {"type": "prevalence", "observable": "Sx2", "t_max": 100.0, "bins": 25,
                 "range": [0.0, 2.0], "expected": 0.9},
                {"type": "detuning_scan", "deltas": _DELTA_GRID,
                 "grid": {"t_start": 0.0, "t_end": 300.0, "n_steps": 600},
                 "overrides": {"omega": 1.0, "dephasing_rate": 2.0},
                 "fit_window": [100.0, 300.0], "profile_time": 250.0,
                 "power_range": [0.02, 0.1]},
            ],
        },
    ),
    Preset(
        "fig6",
        "eigenvalue displacement of the zero/imaginary modes versus detuning; Delta=0.5, gamma=2",
        "full scale",
        {
            "name": "fig6",
            "model": _spin1(),
            "analyses": [{"type": "shift_scan", "deltas": _DELTA_GRID, "fit_range": [0.01, 0.1]}],
        },
    ),
    Preset(
        "fig7_smallN",
        "charge-dephased Hubbard <Sx_j> and Pearson from trajectories; w=1.5, gamma=2.5, U=1, "
        "mu_j uniform in [0, 0.2]",
        "reduced-scale substitute: N=4 with exact trajectories instead of N=15 MPS/TEBD",
        {
            "name": "fig7_smallN",
            "model": {"kind": "hubbard", "n_sites": 4, "omega": 1.5, "tunneling": 1.0,
                      "interaction": 1.0, "dephasing_rate": 2.5,
                      "chem_potentials": {"uniform": [0.0, 0.2]}},
            "initial_state": {"labels": ["←", "↓", "↑", "←"]},
            "grid": {"t_start": 0.0, "t_end": 10.0, "n_steps": 200},
            "method": "trajectories",
            "trajectories": {"n_traj": 200},
            "observables": [{"name": "Sx", "sites": "all"}],
            "analyses": [
                {"type": "pearson", "observable": "Sx", "width": 0.5, "t_min": 5.0},
                {"type": "symmetry", "operator": "hubbard_raising"},
            ],
        },
    ),
    Preset(
        "fig8_smallN",
        "detuned Hubbard prevalence (w={1.35,1.5,1.65}, gamma=0.5, U=1) and detuning tongue "
        "(gamma=2, U=0.5)",
        "reduced-scale substitute: N=3 instead of N=5 (tongue) and N=9 (dynamics)",
        {
            "name": "fig8_smallN",
            "model": {"kind": "hubbard", "n_sites": 3, "omegas": [1.35, 1.5, 1.65],
                      "tunneling": 1.0, "interaction": 1.0, "dephasing_rate": 0.5,
                      "chem_potentials": {"uniform": [0.0, 0.2]}},
            "initial_state": {"labels": ["→", "←", "→"]},
            "grid": {"t_start": 0.0, "t_end": 90.0, "n_steps": 1800},
            "observables": [{"name": "Sx", "sites": "all"}],
            "analyses": [
                {"type": "pearson", "observable": "Sx", "width": 2.0, "t_min": 20.0},
                {"type": "prevalence", "observable": "Sx", "t_max": 90.0, "bins": 25,
                 "range": [0.0, 3.0], "expected": 1.5},
                {"type": "detuning_scan", "deltas": _DELTA_GRID,
                 "grid": {"t_start": 0.0, "t_end": 100.0, "n_steps": 200},
                 "overrides": {"omega": 1.0, "dephasing_rate": 2.0, "interaction": 0.5},
                 "initial_state": {"labels": ["→", "↑", "→"]},
                 "fit_window": [40.0, 100.0]},
            ],
        },
    ),
    Preset(
        "sm_s1",
        "coherence cross-sections: decay rate d(delta), Gaussian profile at t=250, power law",
        "full scale; delta grid 0..0.1",
        {
            "name": "sm_s1",
            "model": _spin1(),
            "initial_state": {"labels": ["→", "0", "0"]},
            "analyses": [
                {"type": "detuning_scan", "deltas": _DELTA_GRID,
                 "grid": {"t_start": 0.0, "t_end": 300.0, "n_steps": 600},
                 "fit_window": [100.0, 300.0], "profile_time": 250.0,
                 "power_range": [0.02, 0.1]},
            ],
        },
    ),
    Preset(
        "sm_s2_random_detuning",
        "detuning tongue with w_j = 1 + eps_j, eps_j uniform on [0, delta], disorder-averaged",
        "20 disorder instances instead of 100",
        {
            "name": "sm_s2_random_detuning",
            "model": _spin1(),
            "initial_state": {"labels": ["→", "0", "0"]},
            "analyses": [
                {"type": "detuning_scan", "deltas": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25],
                 "grid": {"t_start": 0.0, "t_end": 100.0, "n_steps": 200},
                 "distribution": "uniform_random", "instances": 20,
                 "profile_time": 55.0},
            ],
        },
    ),
]

PRESETS: dict[str, Preset] = {p.name: p for p in _PRESETS}


def get_preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name].config)
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; see list-presets") from None


def list_presets() -> list[tuple[str, str, str]]:
    return [(p.name, p.description, p.substitution) for p in _PRESETS]
