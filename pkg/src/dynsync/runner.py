"""Execute a validated experiment and write its artifacts."""

from __future__ import annotations

import json
import logging
import platform
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, kernels
from .analysis import (
    WindowSpec,
    coherence,
    fit_exponential_decay,
    fit_gaussian_profile,
    fit_power_law,
    fourier_amplitude,
    mean_negativity,
    nearest_bin,
    pearson,
    spectral_peaks,
    turning_point_prevalence,
)
from .config import (
    Experiment,
    build_grid,
    build_initial_state,
    build_model,
    build_observables,
    build_trajectory_config,
    resolve_chem_potentials,
    resolve_omegas,
)
from .dynamics import DensePropagator, TimeSeries, evolve_dense, evolve_trajectories
from .exceptions import ConfigError
from .hilbert import Operator
from .liouville import (
    IMAGINARY,
    ZERO,
    build_superoperator,
    first_order_shift,
    shift_scan,
    spectrum,
    vectorize,
)
from .models import (
    detuned_omegas,
    detuning_profile,
    local_observable,
    hubbard_spin_raising,
    sm_extra_symmetry_B,
    spin1_field_ops,
    spin1_magnetizations,
    spin1_symmetry,
    spin_flip_index,
)
from .symmetry import swap_invariance, verify_dynamical_symmetry

log = logging.getLogger(__name__)


@dataclass
class RunContext:
    exp: Experiment
    model: object
    series: TimeSeries | None = None
    final_state: Operator | None = None
    derived: dict[str, np.ndarray] = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    @property
    def cfg(self) -> dict:
        return self.exp.config

    def column(self, label: str) -> np.ndarray:
        if label in self.derived:
            return self.derived[label]
        if self.series is None or label not in self.series.labels:
            raise ConfigError(f"no recorded series named {label!r}")
        return self.series.column(label)

    def labels_for(self, name: str) -> list[str]:
        if self.series is None:
            raise ConfigError(f"analysis of {name!r} needs recorded observables")
        labels = [lab for lab in self.series.labels if lab.rsplit("_", 1)[0] == name]
        if not labels:
            raise ConfigError(f"observable {name!r} is not recorded")
        return labels


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_to_builtin) + "\n"


def _to_builtin(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialise {type(x)}")


def _csv_table(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if not isinstance(v, str) else v for v in row))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------------------
# analyses
# --------------------------------------------------------------------------------------

def _spectrum(ctx: RunContext, spec: dict) -> None:
    sd = spectrum(build_superoperator(ctx.model), vectors=False)
    ctx.files["spectrum.csv"] = sd.to_csv()
    decaying = sd.eigenvalues.real[sd.classes == "decaying"]
    ctx.summary["n_zero_modes"] = sd.count(ZERO)
    ctx.summary["n_imaginary_modes"] = sd.count(IMAGINARY)
    ctx.summary["imaginary_values"] = [float(x) for x in sd.imaginary_values()]
    ctx.summary["slowest_decay_rate"] = float(-decaying.max()) if decaying.size else None


def _density_matrix(ctx: RunContext, spec: dict) -> None:
    if ctx.model.kind != "spin1" or ctx.final_state is None:
        raise ConfigError("density_matrix analysis needs a dense spin-1 run")
    thr = spec.get("support_threshold", 1e-6)
    n = ctx.model.space.n_sites
    rho = ctx.final_state.dense()
    grid = build_grid(ctx.cfg["grid"])
    h = grid.dt
    prop = DensePropagator(ctx.model, h, support=np.abs(vectorize(rho)) > 0)
    d = rho.shape[0]
    rho_next = prop.step(vectorize(rho)).reshape(d, d, order="F")
    flip = spin_flip_index(n)
    idx = np.arange(d)
    mask = np.ones((d, d), dtype=bool)
    mask[idx, idx] = False
    mask[idx, flip] = False
    ctx.summary["off_support_max"] = float(np.abs(rho[mask]).max())
    mags = spin1_magnetizations(n)
    omega = float(np.mean(ctx.model.params.omegas))
    rates = []
    for i in range(d):
        j = flip[i]
        if i == j or abs(rho[i, j]) <= thr or mags[i] == 0:
            continue
        rate = float(np.angle(rho_next[i, j] / rho[i, j]) / h)
        # Schrodinger picture: rho_ij ~ exp(-i (E_i - E_j) t) with E_i - E_j = 2 m_i w
        rates.append({"row": i, "m": int(mags[i]), "rate": rate, "expected": -2.0 * mags[i] * omega})
    ctx.summary["antidiagonal_phase_rates"] = rates
    ctx.summary["max_rel_phase_rate_error"] = (
        max(abs(r["rate"] - r["expected"]) / abs(r["expected"]) for r in rates) if rates else None
    )
    rows = [(i, j, rho[i, j].real, rho[i, j].imag) for i in range(d) for j in range(d) if abs(rho[i, j]) > thr]
    ctx.files["density_matrix.csv"] = _csv_table(["row", "col", "re", "im"], rows)


def _pearson(ctx: RunContext, spec: dict) -> None:
    name = spec["observable"]
    labels = ctx.labels_for(name)
    win = WindowSpec(spec["width"], ctx.series.grid.dt)
    times = ctx.series.times
    full = (times >= times[0] + win.half_steps * win.dt - 1e-9) & (
        times <= times[-1] - win.half_steps * win.dt + 1e-9
    )
    t_min = spec.get("t_min", times[0])
    last = np.flatnonzero(full)[-1]
    cols, out_labels, final, worst = [], [], {}, np.inf
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            r = pearson(ctx.column(labels[a]), ctx.column(labels[b]), win)
            key = f"{labels[a]}|{labels[b]}"
            out_labels.append(f"pearson_{labels[a]}_{labels[b]}")
            cols.append(r)
            final[key] = None if np.isnan(r[last]) else float(r[last])
            late = r[full & (times >= t_min - 1e-9)]
            if late.size:
                worst = min(worst, float(np.min(np.where(np.isnan(late), -np.inf, late))))
    if cols:
        ts = TimeSeries(ctx.series.grid, out_labels, np.column_stack(cols))
        ctx.files[f"pearson_{name}.csv"] = ts.to_csv()
    ctx.summary[f"pearson_{name}"] = {
        "width": spec["width"],
        "t_min": t_min,
        "final": final,
        "min_after_t_min": None if not np.isfinite(worst) else worst,
    }


def _correlator_ops(cfg: dict, observable: str, observables: dict) -> dict:
    """Extra product observables needed by a correlators analysis."""
    n = cfg["model"]["n_sites"]
    kind = cfg["model"]["kind"]
    ops = [local_observable(kind, observable, j, n) for j in range(n)]
    extra = {f"{observable}_{j}": ops[j] for j in range(n) if f"{observable}_{j}" not in observables}
    for j in range(n):
        for l in range(j + 1, n):
            extra[f"prod_{observable}_{j}_{l}"] = ops[j] @ ops[l]
    return extra


def _correlators(ctx: RunContext, spec: dict) -> None:
    name = spec["observable"]
    n = ctx.model.space.n_sites
    labels, cols = [], []
    for j in range(n):
        for l in range(j + 1, n):
            a = ctx.column(f"prod_{name}_{j}_{l}") - ctx.column(f"{name}_{j}") * ctx.column(f"{name}_{l}")
            lab = f"A_{name}_{j}_{l}"
            ctx.derived[lab] = a
            labels.append(lab)
            cols.append(a)
    ts = TimeSeries(ctx.series.grid, labels, np.column_stack(cols))
    ctx.files[f"correlators_{name}.csv"] = ts.to_csv()
    sel = ctx.series.times >= spec.get("t_min", ctx.series.times[0]) - 1e-9
    vals = ts.values[sel]
    ctx.summary[f"correlators_{name}"] = {
        "t_min": spec.get("t_min", float(ctx.series.times[0])),
        "max_pair_spread": float(np.max(vals.max(axis=1) - vals.min(axis=1))),
    }


def _fourier(ctx: RunContext, spec: dict) -> None:
    label = spec["series"]
    freqs, amps = fourier_amplitude(ctx.column(label), ctx.series.times, spec.get("t_min"))
    ctx.files[f"fourier_{label}.csv"] = _csv_table(["omega", "amplitude"], zip(freqs, amps))
    peaks = spectral_peaks(freqs, amps)
    top = float(amps[peaks[0]]) if peaks.size else 0.0
    out = {"peaks": [[float(freqs[p]), float(amps[p] / top)] for p in peaks[:8]]}
    expected = spec.get("expected")
    if expected:
        want = {nearest_bin(freqs, w) for w in expected}
        lead = set(int(p) for p in peaks[: len(want)])
        others = [amps[p] / top for p in peaks if int(p) not in want]
        out["expected"] = expected
        out["peak_bins_exact"] = lead == want
        out["max_side_lobe"] = float(max(others)) if others else 0.0
    ctx.summary[f"fourier_{label}"] = out


def _prevalence(ctx: RunContext, spec: dict) -> None:
    name = spec["observable"]
    labels = ctx.labels_for(name)
    hist = turning_point_prevalence(
        {lab: ctx.column(lab) for lab in labels},
        ctx.series.times,
        t_max=spec.get("t_max"),
        bins=spec.get("bins", 25),
        omega_range=tuple(spec.get("range", (0.0, 2.0))),
    )
    ctx.files[f"prevalence_{name}.json"] = hist.to_json() + "\n"
    ctx.files[f"prevalence_{name}.csv"] = hist.to_csv()
    out = {"peak_bins": {}}
    for lab in labels:
        b = hist.peak_bin(lab)
        out["peak_bins"][lab] = [float(hist.bin_edges[b]), float(hist.bin_edges[b + 1])]
    if "expected" in spec:
        eb = hist.bin_of(spec["expected"])
        out["expected"] = spec["expected"]
        out["all_peak_at_expected"] = all(hist.peak_bin(lab) == eb for lab in labels)
    ctx.summary[f"prevalence_{name}"] = out


def _symmetry(ctx: RunContext, spec: dict) -> None:
    op_name = spec["operator"]
    n = ctx.model.space.n_sites
    if op_name == "hubbard_raising":
        if ctx.model.kind != "hubbard":
            raise ConfigError("hubbard_raising needs a Hubbard model")
        a = hubbard_spin_raising(n)
    else:
        if ctx.model.kind != "spin1":
            raise ConfigError(f"{op_name} needs a spin-1 model")
        a = sm_extra_symmetry_B(n) if op_name == "sm_B" else spin1_symmetry(n, spec.get("m", 1))
    report = verify_dynamical_symmetry(ctx.model, a)
    ctx.files[f"symmetry_{op_name}.json"] = report.to_json() + "\n"
    ctx.summary[f"symmetry_{op_name}"] = json.loads(report.to_json())


def _shift_scan(ctx: RunContext, spec: dict) -> None:
    if ctx.model.kind != "spin1":
        raise ConfigError("shift_scan is defined for the spin-1 chain")
    base = ctx.model.params
    scan = shift_scan(base, spec["deltas"])
    ctx.files["shift_scan.csv"] = scan.to_csv()
    lo, hi = spec.get("fit_range", (0.0, np.inf))
    exps = scan.exponents(lo, hi)
    extremal = np.abs(np.abs(scan.reference.imag) - 2 * base.n_sites * np.mean(base.omegas)) < 1e-6
    # first-order shifts of swap-invariant imaginary modes under the largest detuning
    sd = spectrum(build_superoperator(ctx.model))
    omegas = detuned_omegas(max(spec["deltas"]), base.n_sites, float(np.mean(base.omegas)))
    prof = detuning_profile(spin1_field_ops(base.n_sites), omegas)
    first = []
    for i in sd.indices(ZERO, IMAGINARY):
        mode = sd.right_mode(i)
        if swap_invariance(mode, tol=1e-8):
            first.append(abs(first_order_shift(mode, prof)))
    ctx.summary["shift_scan"] = {
        "exponents": {str(k): v for k, v in exps.items()},
        "extremal_max_displacement": float(scan.displacements[:, extremal].max()) if extremal.any() else None,
        "max_first_order_shift": float(max(first)) if first else None,
    }


def _detuning_scan(ctx: RunContext, spec: dict) -> None:
    cfg = ctx.cfg
    base = {**cfg["model"], **spec.get("overrides", {})}
    if "omegas" in base:
        base.setdefault("omega", float(np.mean(base.pop("omegas"))))
    base.pop("detuning", None)
    grid = build_grid(spec["grid"])
    dist = spec.get("distribution", "linear")
    instances = spec.get("instances", 1)
    state_cfg = {"model": base, "initial_state": spec.get("initial_state", cfg.get("initial_state", {"random_product": {}}))}
    psi0 = build_initial_state(state_cfg, ctx.exp.seed)
    rho0 = psi0.density_matrix()
    deltas = [float(d) for d in spec["deltas"]]
    neg = np.zeros((grid.n_steps + 1, len(deltas)))
    coh = np.zeros_like(neg)
    witnesses = {"negativity": mean_negativity, "coherence": coherence}
    instance_seeds = [
        int(np.random.SeedSequence([ctx.exp.seed, k]).generate_state(1, np.uint64)[0]) for k in range(instances)
    ]
    for c, delta in enumerate(deltas):
        for seed in instance_seeds if dist == "uniform_random" else instance_seeds[:1]:
            mcfg = dict(base, detuning={"delta": delta, "distribution": dist, "seed": seed})
            model = build_model(mcfg, ctx.exp.seed)
            ts = evolve_dense(model, rho0, grid, None, witnesses=witnesses)
            neg[:, c] += ts.column("negativity")
            coh[:, c] += ts.column("coherence")
        n_inst = instances if dist == "uniform_random" else 1
        neg[:, c] /= n_inst
        coh[:, c] /= n_inst
    if dist == "uniform_random":
        ctx.seeds["detuning_instances"] = instance_seeds
    labels = [f"delta_{d!r}" for d in deltas]
    ctx.files["tongue_negativity.csv"] = TimeSeries(grid, labels, neg).to_csv()
    ctx.files["tongue_coherence.csv"] = TimeSeries(grid, labels, coh).to_csv()
    out: dict = {"distribution": dist, "instances": n_inst}
    if dist == "uniform_random":
        out["frequency_interval"] = "omega_j = omega * (1 + eps_j), eps_j ~ U[0, delta]"
    times = grid.times
    if "fit_window" in spec:
        lo, hi = spec["fit_window"]
        sel = (times >= lo - 1e-9) & (times <= hi + 1e-9)
        rows, rates = [], {}
        for c, delta in enumerate(deltas):
            if delta == 0:
                continue
            fit = fit_exponential_decay(times[sel], coh[sel, c])
            rows.append((delta, fit["d"], fit["c0"], fit.residual))
            rates[delta] = fit["d"]
        ctx.files["decay_fits.csv"] = _csv_table(["delta", "d", "c0", "residual"], rows)
        out["decay_rates"] = {repr(k): v for k, v in rates.items()}
        if "power_range" in spec:
            plo, phi = spec["power_range"]
            xs = [d for d in rates if plo - 1e-12 <= d <= phi + 1e-12]
            pw = fit_power_law(xs, [rates[d] for d in xs])
            out["decay_power_law"] = {"exponent": pw["exponent"], "prefactor": pw["prefactor"],
                                      "residual": pw.residual}
    if "profile_time" in spec:
        k = int(np.argmin(np.abs(times - spec["profile_time"])))
        g = fit_gaussian_profile(deltas, coh[k])
        out["gaussian_profile"] = {"t": float(times[k]), "s": g["s"], "c0": g["c0"], "residual": g.residual}
    ctx.summary["detuning_scan"] = out


def _witnesses(ctx: RunContext, spec: dict) -> None:
    ctx.summary["witnesses_final"] = {
        "negativity": float(ctx.column("negativity")[-1]),
        "coherence": float(ctx.column("coherence")[-1]),
    }


_ANALYSES: dict[str, Callable[[RunContext, dict], None]] = {
    "witnesses": _witnesses,
    "spectrum": _spectrum,
    "density_matrix": _density_matrix,
    "pearson": _pearson,
    "correlators": _correlators,
    "fourier": _fourier,
    "prevalence": _prevalence,
    "symmetry": _symmetry,
    "shift_scan": _shift_scan,
    "detuning_scan": _detuning_scan,
}

_NEEDS_DYNAMICS = {"density_matrix", "pearson", "correlators", "fourier", "prevalence", "witnesses"}
_NEEDS_STATE = {"density_matrix", "witnesses"}


# --------------------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------------------

def _evolve(ctx: RunContext) -> None:
    cfg = ctx.cfg
    analyses = cfg.get("analyses", [])
    observables = build_observables(cfg)
    for spec in analyses:
        if spec["type"] == "correlators":
            observables.update(_correlator_ops(cfg, spec["observable"], observables))
    kinds = {a["type"] for a in analyses}
    if not observables and not kinds & _NEEDS_DYNAMICS:
        return
    if "grid" not in cfg:
        raise ConfigError("a time grid is required for dynamics")
    grid = build_grid(cfg["grid"])
    psi0 = build_initial_state(cfg, ctx.exp.seed)
    method = cfg.get("method", "dense")
    if method == "trajectories":
        if kinds & _NEEDS_STATE:
            raise ConfigError(f"analyses {sorted(kinds & _NEEDS_STATE)} need the dense method")
        tcfg = build_trajectory_config(cfg, ctx.exp.seed)
        ctx.seeds["trajectories"] = {"seed": tcfg.seed, "n_traj": tcfg.n_traj}
        ctx.series = evolve_trajectories(ctx.model, psi0, grid, observables, tcfg, threads=ctx.exp.threads)
        return
    witnesses = {}
    if "witnesses" in kinds:
        witnesses = {"negativity": mean_negativity, "coherence": coherence}
    ctx.series, ctx.final_state = evolve_dense(
        ctx.model, psi0.density_matrix(), grid, observables, witnesses=witnesses, return_final=True
    )


def run_experiment(exp: Experiment, out_dir: str | Path) -> dict:
    """Run ``exp`` and write manifest.json, CSV/JSON artifacts and summary.json into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    cfg = exp.config
    with threadpool_limits(limits=exp.threads):
        model = build_model(cfg["model"], exp.seed)
        ctx = RunContext(exp, model)
        ctx.seeds["master"] = exp.seed
        if model.kind == "hubbard":
            ctx.seeds["chem_potentials"] = resolve_chem_potentials(cfg["model"], exp.seed)
        ctx.seeds["omegas"] = resolve_omegas(cfg["model"], exp.seed)
        _evolve(ctx)
        if ctx.series is not None and ctx.series.labels:
            ctx.files["series.csv"] = ctx.series.to_csv()
        for spec in cfg.get("analyses", []):
            if spec["type"] in _ANALYSES:
                _ANALYSES[spec["type"]](ctx, spec)
    for name, text in sorted(ctx.files.items()):
        (out / name).write_text(text)
    if ctx.summary:
        (out / "summary.json").write_text(_json(ctx.summary))
    manifest = {
        "config": cfg,
        "code_version": __version__,
        "seeds": ctx.seeds,
        "threads": exp.threads,
        "kernel_backend": kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started": started,
        "wall_time_s": time.perf_counter() - t0,
        "files": sorted(ctx.files) + (["summary.json"] if ctx.summary else []),
    }
    (out / "manifest.json").write_text(_json(manifest))
    return ctx.summary
