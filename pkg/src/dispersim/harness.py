"""Config-driven experiment runners: field comparison, CW sweep, broadband
impulse and grid-refinement studies, with CSV outputs and run metadata.

Every experiment is deterministic: identical configs produce bit-identical
data CSVs. Timing and memory go to separate files (resources.csv, report.txt)
and are excluded from that guarantee. Wall times are measured around the
stepping loops only.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import elbm, fdtd
from .analytic import SlabSpec, transmittance_curve
from .config import ExperimentConfig, config_to_dict, preset
from .constants import C0, H_OVER_E
from .errors import ConfigError, NumericalInstabilityError, SteadyStateError
from .materials import (
    PoleResidueModel,
    model_by_name,
    model_from_dict,
    model_to_dict,
    solver_coefficients,
)
from .sources import SourceSpec, delta_init, inject
from .spectral import (
    TimeSeries,
    error_norms,
    fft_series,
    photon_energy_axis,
    poynting_average,
    psd,
    transmittance_from_psd,
)

log = logging.getLogger("dispersim")

# Bound certified by the impulse run's stability certificate: the running
# max |E| must stay below this multiple of the launch amplitude.
STABILITY_BOUND = 25.0


@dataclass(frozen=True)
class Geometry:
    """Realized discretization for one simulation."""

    n_x: int
    dx_m: float
    dt_s: float
    slab: slice
    slab_cells: int
    source_node: int
    probe_node: int

    @property
    def slab_thickness_m(self) -> float:
        return self.slab_cells * self.dx_m


@dataclass
class RunReport:
    experiment: str
    wall_time_s: float
    peak_memory_bytes: int | None
    state_bytes: int
    steps: int
    config_echo: dict
    csv_paths: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "config_echo.yaml", "w") as fh:
            yaml.safe_dump(self.config_echo, fh, sort_keys=True)
        with open(out_dir / "report.txt", "w") as fh:
            fh.write(f"experiment: {self.experiment}\n")
            fh.write(f"wall_time_s: {self.wall_time_s:.17g}\n")
            if self.peak_memory_bytes is None:
                fh.write("peak_memory_bytes: unavailable\n")
            else:
                fh.write(f"peak_memory_bytes: {self.peak_memory_bytes}\n")
            fh.write(f"state_bytes: {self.state_bytes}\n")
            fh.write(f"steps: {self.steps}\n")
            for key in sorted(self.csv_paths):
                fh.write(f"csv.{key}: {self.csv_paths[key]}\n")
            for key in sorted(self.metrics):
                value = self.metrics[key]
                if isinstance(value, float):
                    fh.write(f"{key}: {value:.17g}\n")
                else:
                    fh.write(f"{key}: {value}\n")


def measure_resources(run):
    """Run a callable, returning (result, wall_time_s, peak_memory_bytes).

    Wall time comes from the monotonic performance counter. Memory is the
    process peak-RSS watermark from the platform's accounting facility: it is
    cumulative over the process lifetime, never fabricated, and reported as
    None where unavailable. Exact per-run array footprints are reported
    separately as state_bytes.
    """
    t0 = time.perf_counter()
    result = run()
    wall = time.perf_counter() - t0
    try:
        import resource

        peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024
    except Exception:
        peak = None
    return result, wall, peak


def resolve_model(cfg: ExperimentConfig) -> PoleResidueModel | None:
    """Material from a registry name or inline pole table; None means vacuum."""
    material = cfg.material
    if material is None:
        return None
    if isinstance(material, str):
        return model_by_name(material, eps_inf=cfg.material_eps_inf)
    if isinstance(material, dict):
        return model_from_dict(material)
    raise ConfigError(f"material must be a name or mapping, got {type(material)!r}")


def resolve_geometry(
    cfg: ExperimentConfig, n_x: int, source_node: int | None = None
) -> Geometry:
    """Realize the lattice: spacing, slab cells at center placement, probe node.

    The slab covers a whole number of cells; the probe sits midway between the
    slab's far face (or the source, if no slab) and the right boundary.
    """
    dx_m = cfg.domain_length_nm * 1e-9 / n_x
    dt_s = dx_m / C0
    if cfg.slab is not None:
        cells = round(cfg.slab.thickness_nm * 1e-9 / dx_m)
        if cells < 1:
            raise ConfigError("slab thinner than one lattice cell at this resolution")
        start = round(cfg.slab.center_fraction * n_x - cells / 2)
        if start < 2 or start + cells > n_x - 2:
            raise ConfigError("slab does not fit inside the domain interior")
        slab = slice(start, start + cells)
    else:
        cells = 0
        slab = slice(0, 0)
    if source_node is None:
        source_node = (cfg.source or {}).get("position")
    if source_node is None:
        source_node = n_x // 4
    source_node = int(source_node)
    if not 1 <= source_node <= n_x - 2:
        raise ConfigError(f"source node {source_node} must be interior to the domain")
    if cfg.probes:
        probe_node = cfg.probes[-1]
    else:
        downstream_of = slab.stop if cells else source_node
        probe_node = (downstream_of + n_x - 1) // 2
    if not 1 <= probe_node <= n_x - 2:
        raise ConfigError(f"probe node {probe_node} must be interior to the domain")
    return Geometry(
        n_x=n_x, dx_m=dx_m, dt_s=dt_s, slab=slab, slab_cells=cells,
        source_node=source_node, probe_node=probe_node,
    )


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                f"{v:.17g}" if isinstance(v, float) else v for v in row
            ])


# ---------------------------------------------------------------------------
# Broadband impulse run (shared by delta-broadband and convergence)


def _impulse_run(
    model: PoleResidueModel | None,
    geom: Geometry,
    n_t: int,
    amplitude: float = 1.0,
    snapshot_steps: tuple[int, ...] = (),
    snapshot_dir: Path | None = None,
):
    """Impulse launch on the lattice solver; returns probe series and extrema."""
    coeffs = solver_coefficients(model if geom.slab_cells else None, geom.dt_s)
    state = elbm.init_state(geom.n_x, coeffs, geom.slab, geom.dx_m)
    spec = SourceSpec(kind="delta", position=geom.source_node, amplitude=amplitude)
    delta_init(state, spec)
    e_rec = np.empty(n_t)
    h_rec = np.empty(n_t)
    snapshots = set(snapshot_steps)
    max_field = 0.0
    t0 = time.perf_counter()
    for t in range(n_t):
        pol_t = state.pol.copy() if t in snapshots else None
        E, H = elbm.step(state)
        e_rec[t] = E[geom.probe_node]
        h_rec[t] = H[geom.probe_node]
        peak = float(np.max(np.abs(E)))
        if peak > max_field:
            max_field = peak
        elbm.check_bounded(state, peak)
        if pol_t is not None and snapshot_dir is not None:
            elbm.write_snapshot_csv(
                snapshot_dir / f"elbm_snapshot_t{t}.csv", state, E, H, pol_t
            )
    wall = time.perf_counter() - t0
    series = (
        TimeSeries(e_rec, geom.dt_s, geom.probe_node),
        TimeSeries(h_rec, geom.dt_s, geom.probe_node),
    )
    return series, max_field, wall, state.state_bytes


def _impulse_spectrum(
    series, model: PoleResidueModel | None, geom: Geometry, amplitude: float,
    reference: str,
):
    """Transmittance estimate and analytic curve over the power-spectrum bins."""
    e_ts, h_ts = series
    s_spec = psd(fft_series(e_ts), fft_series(h_ts))
    if reference == "vacuum-run":
        vac_geom = Geometry(
            n_x=geom.n_x, dx_m=geom.dx_m, dt_s=geom.dt_s, slab=slice(0, 0),
            slab_cells=0, source_node=geom.source_node, probe_node=geom.probe_node,
        )
        vac_series, _, _, _ = _impulse_run(None, vac_geom, len(e_ts.values), amplitude)
        ref = psd(fft_series(vac_series[0]), fft_series(vac_series[1]))
    else:
        ref = amplitude * amplitude
    t_num = transmittance_from_psd(s_spec, ref)
    energies = photon_energy_axis(s_spec)
    t_ana = np.full_like(t_num, np.nan)
    if geom.slab_cells and model is not None:
        slab_spec = SlabSpec(thickness_m=geom.slab_thickness_m, model=model)
        t_ana[1:] = transmittance_curve(slab_spec, energies[1:])
    else:
        t_ana[1:] = 1.0
    return s_spec, energies, t_num, t_ana


def _band_mask(energies: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return (energies >= lo) & (energies <= hi)


def run_delta_broadband(cfg: ExperimentConfig, out_dir: Path | None = None) -> RunReport:
    """Single broadband impulse run: spectrum, error norms, stability certificate."""
    model = resolve_model(cfg)
    geom = resolve_geometry(cfg, cfg.n_x)
    amplitude = float((cfg.source or {}).get("amplitude", 1.0))
    out_dir = _prepare_out_dir(cfg, out_dir)
    try:
        series, max_field, wall, state_bytes = _impulse_run(
            model, geom, cfg.n_t, amplitude,
            snapshot_steps=tuple(cfg.snapshot_steps), snapshot_dir=out_dir,
        )
    except NumericalInstabilityError as exc:
        raise NumericalInstabilityError(
            f"delta-broadband run aborted (n_x={geom.n_x}): {exc}"
        ) from exc
    s_spec, energies, t_num, t_ana = _impulse_spectrum(
        series, model, geom, amplitude, cfg.reference
    )
    rel_err = np.abs(t_num - t_ana) / np.where(t_ana != 0, t_ana, np.nan)
    band = _band_mask(energies, cfg.energy_min_ev, cfg.energy_max_ev)
    band_norms = error_norms(t_num[band], t_ana[band])
    full = np.ones(len(energies), dtype=bool)
    full[0] = False
    full_norms = error_norms(t_num[full], t_ana[full], floor=cfg.analytic_floor)
    bounded = bool(np.isfinite(max_field) and max_field <= STABILITY_BOUND * amplitude)

    rows = []
    for i in range(1, len(energies)):
        rows.append([
            i, float(i * s_spec.dnu), float(energies[i]),
            float(np.abs(s_spec.bins[i])), float(t_num[i]), float(t_ana[i]),
            float(rel_err[i]) if np.isfinite(rel_err[i]) else "",
        ])
    spectrum_path = out_dir / "spectrum.csv"
    _write_csv(
        spectrum_path,
        ["bin", "nu", "energy_ev", "psd_magnitude", "T_numerical", "T_analytical",
         "rel_error"],
        rows,
    )
    report = RunReport(
        experiment=cfg.experiment,
        wall_time_s=wall,
        peak_memory_bytes=_peak_rss(),
        state_bytes=state_bytes,
        steps=cfg.n_t,
        config_echo=config_to_dict(cfg),
        csv_paths={"spectrum": str(spectrum_path)},
        metrics={
            "n_x": geom.n_x,
            "slab_cells": geom.slab_cells,
            "slab_thickness_nm": geom.slab_thickness_m * 1e9,
            "probe_node": geom.probe_node,
            "mean_rel_err_band": band_norms.l1,
            "l1_band": band_norms.l1,
            "l2_band": band_norms.l2,
            "l1_full": full_norms.l1,
            "l2_full": full_norms.l2,
            "full_bins_excluded": full_norms.excluded,
            "max_field": max_field,
            "stability_certificate": bounded,
        },
    )
    report.write(out_dir)
    return report


def run_convergence(cfg: ExperimentConfig, out_dir: Path | None = None) -> RunReport:
    """Grid-refinement study: impulse runs at n_x = 100k, n_t = 4000k.

    Error norms are fitted against n_x on the analysis band (where the
    material fit is valid); full-spectrum norms with the validity floor are
    reported alongside. Per-k failures are recorded and the fit uses the
    surviving set.
    """
    model = resolve_model(cfg)
    out_dir = _prepare_out_dir(cfg, out_dir)
    amplitude = float((cfg.source or {}).get("amplitude", 1.0))
    rows = []
    resources = []
    failures = []
    total_wall = 0.0
    total_steps = 0
    last_state_bytes = 0
    for k in range(cfg.sweep.k_min, cfg.sweep.k_max + 1):
        n_x = 100 * k
        n_t = 4000 * k
        geom = resolve_geometry(cfg, n_x, source_node=n_x // 4)
        try:
            series, max_field, wall, state_bytes = _impulse_run(
                model, geom, n_t, amplitude
            )
        except NumericalInstabilityError as exc:
            log.warning("convergence k=%d failed: %s", k, exc)
            failures.append(k)
            continue
        _, energies, t_num, t_ana = _impulse_spectrum(
            series, model, geom, amplitude, cfg.reference
        )
        band = _band_mask(energies, cfg.energy_min_ev, cfg.energy_max_ev)
        band_norms = error_norms(t_num[band], t_ana[band])
        full = np.ones(len(energies), dtype=bool)
        full[0] = False
        full_norms = error_norms(t_num[full], t_ana[full], floor=cfg.analytic_floor)
        rows.append([
            k, n_x, n_t, geom.slab_cells, int(band.sum()),
            band_norms.l1, band_norms.l2,
            int(full.sum() - full_norms.excluded), full_norms.l1, full_norms.l2,
            full_norms.excluded, max_field,
        ])
        resources.append([k, n_x, wall, state_bytes, n_t])
        total_wall += wall
        total_steps += n_t
        last_state_bytes = state_bytes
    norms_path = out_dir / "norms.csv"
    _write_csv(
        norms_path,
        ["k", "n_x", "n_t", "slab_cells", "n_nu_band", "l1_band", "l2_band",
         "n_nu_full", "l1_full", "l2_full", "full_bins_excluded", "max_field"],
        rows,
    )
    resources_path = out_dir / "resources.csv"
    _write_csv(resources_path, ["k", "n_x", "wall_time_s", "state_bytes", "steps"],
               resources)
    metrics = {"failed_k": ",".join(map(str, failures)) if failures else "none"}
    if len(rows) >= 2:
        log_nx = np.log10([r[1] for r in rows])
        for label, col in (("l1", 5), ("l2", 6)):
            log_err = np.log10([r[col] for r in rows])
            slope, stderr = _fit_slope(log_nx, log_err)
            metrics[f"slope_{label}_band"] = slope
            metrics[f"slope_{label}_band_stderr"] = stderr
            metrics[f"slope_{label}_band_ci95"] = 1.96 * stderr
    else:
        metrics["slope_l1_band"] = "not-fitted (need >= 2 points)"
    report = RunReport(
        experiment=cfg.experiment,
        wall_time_s=total_wall,
        peak_memory_bytes=_peak_rss(),
        state_bytes=last_state_bytes,
        steps=total_steps,
        config_echo=config_to_dict(cfg),
        csv_paths={"norms": str(norms_path), "resources": str(resources_path)},
        metrics=metrics,
    )
    report.write(out_dir)
    return report


def _fit_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and its standard error."""
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return float(coeffs[0]), float(np.sqrt(cov[0, 0]))


# ---------------------------------------------------------------------------
# Continuous-wave sweep


def _cw_single(
    solver: str,
    model_dict: dict | None,
    domain_nm: float,
    n_x: int,
    slab_start: int,
    slab_cells: int,
    source_node: int,
    probe_node: int,
    period_steps: int,
    amplitude: float,
    steady_rel_tol: float,
    average_periods: int,
    max_extra_periods: int,
):
    """One CW run to steady state; returns (poynting_mean, converged, wall, state_bytes).

    Runs in whole-period chunks after a deterministic warmup; stops once the
    trailing period-averages meet the steadiness criterion or the period cap
    is reached (flagged, not fatal).
    """
    dx_m = domain_nm * 1e-9 / n_x
    dt_s = dx_m / C0
    model = model_from_dict(model_dict) if (model_dict and slab_cells) else None
    coeffs = solver_coefficients(model, dt_s)
    slab = slice(slab_start, slab_start + slab_cells) if slab_cells else slice(0, 0)
    if solver == "elbm":
        state = elbm.init_state(n_x, coeffs, slab, dx_m)
        advance = elbm.step
    elif solver == "fdtd":
        state = fdtd.init_state(n_x, coeffs, slab, dx_m, courant=1.0)
        advance = fdtd.fdtd_step
    else:
        raise ValueError(f"unknown solver {solver!r}")
    spec = SourceSpec(kind="sine", position=source_node, amplitude=amplitude,
                      period_steps=float(period_steps))
    warmup = (probe_node - source_node) + 4 * slab_cells + 2 * period_steps
    t0 = time.perf_counter()
    t = 0
    for _ in range(warmup):
        inject(state, spec, t)
        advance(state)
        t += 1
    chunk_means: list[float] = []
    chunks_e: list[np.ndarray] = []
    chunks_h: list[np.ndarray] = []
    keep = average_periods + 1
    converged = False
    for _ in range(max_extra_periods):
        e_chunk = np.empty(period_steps)
        h_chunk = np.empty(period_steps)
        for i in range(period_steps):
            inject(state, spec, t)
            E, H = advance(state)
            e_chunk[i] = E[probe_node]
            h_chunk[i] = H[probe_node]
            t += 1
        chunks_e.append(e_chunk)
        chunks_h.append(h_chunk)
        chunk_means.append(float(np.mean(e_chunk * h_chunk)))
        if len(chunks_e) > keep:
            chunks_e.pop(0)
            chunks_h.pop(0)
        if len(chunk_means) >= keep:
            tail = chunk_means[-keep:]
            steady = all(
                abs(b - a) <= steady_rel_tol * max(abs(a), abs(b), 1e-300)
                for a, b in zip(tail, tail[1:])
            )
            if steady:
                converged = True
                break
    wall = time.perf_counter() - t0
    e_ts = TimeSeries(np.concatenate(chunks_e[-keep:]), dt_s, probe_node)
    h_ts = TimeSeries(np.concatenate(chunks_h[-keep:]), dt_s, probe_node)
    try:
        mean = poynting_average(e_ts, h_ts, average_periods, float(period_steps),
                                rel_tol=steady_rel_tol)
    except SteadyStateError:
        converged = False
        mean = float(np.mean(e_ts.values * h_ts.values))
    return mean, converged, wall, state.state_bytes


def _cw_task(task: dict) -> dict:
    """Worker body for one (k, energy, solver) cell: slab run over vacuum calibration."""
    out = dict(task)
    s_inc, conv_vac, wall_vac, _ = _cw_single(
        task["solver"], None, task["domain_nm"], task["n_x"], 0, 0,
        task["source_node"], task["probe_node"], task["period_steps"],
        task["amplitude"], task["steady_rel_tol"], task["average_periods"],
        task["max_extra_periods"],
    )
    s_trans, conv_slab, wall_slab, state_bytes = _cw_single(
        task["solver"], task["model"], task["domain_nm"], task["n_x"],
        task["slab_start"], task["slab_cells"],
        task["source_node"], task["probe_node"], task["period_steps"],
        task["amplitude"], task["steady_rel_tol"], task["average_periods"],
        task["max_extra_periods"],
    )
    out["transmittance"] = s_trans / s_inc if s_inc else math.nan
    out["converged"] = bool(conv_vac and conv_slab)
    out["wall_time_s"] = wall_vac + wall_slab
    out["state_bytes"] = state_bytes
    return out


def run_cw_sweep(cfg: ExperimentConfig, out_dir: Path | None = None) -> RunReport:
    """Steady-state transmittance sweep: 16k energies per k, both solvers.

    Each frequency snaps to a whole number of steps per period, so the
    realized photon energy (reported and used in the analytic comparison)
    differs slightly from the requested uniform grid. Incident power comes
    from a per-frequency vacuum calibration run with the same machinery.
    """
    model = resolve_model(cfg)
    if model is None:
        raise ConfigError("cw-sweep requires a material")
    model_dict = model_to_dict(model)
    out_dir = _prepare_out_dir(cfg, out_dir)
    solvers = ["elbm", "fdtd"] if cfg.solver == "both" else [cfg.solver]
    amplitude = float((cfg.source or {}).get("amplitude", 1.0))

    tasks = []
    geoms: dict[int, Geometry] = {}
    for k in range(cfg.sweep.k_min, cfg.sweep.k_max + 1):
        n_x = 100 * k
        geom = resolve_geometry(cfg, n_x, source_node=n_x // 4)
        geoms[k] = geom
        energies = np.linspace(cfg.energy_min_ev, cfg.energy_max_ev, 16 * k)
        for idx, energy in enumerate(energies):
            period = max(2, round(H_OVER_E / (energy * geom.dt_s)))
            realized = H_OVER_E / (period * geom.dt_s)
            for solver in solvers:
                tasks.append({
                    "k": k, "idx": idx, "solver": solver,
                    "energy_requested_ev": float(energy),
                    "energy_realized_ev": float(realized),
                    "period_steps": int(period),
                    "domain_nm": cfg.domain_length_nm, "n_x": n_x,
                    "slab_start": geom.slab.start, "slab_cells": geom.slab_cells,
                    "source_node": geom.source_node, "probe_node": geom.probe_node,
                    "amplitude": amplitude, "model": model_dict,
                    "steady_rel_tol": cfg.steady_rel_tol,
                    "average_periods": cfg.average_periods,
                    "max_extra_periods": cfg.max_extra_periods,
                })

    t0 = time.perf_counter()
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_cw_task, tasks, chunksize=4))
    else:
        results = [_cw_task(task) for task in tasks]
    total_wall = time.perf_counter() - t0

    by_cell: dict[tuple[int, int], dict] = {}
    for res in results:
        by_cell.setdefault((res["k"], res["idx"]), {}).update(
            {res["solver"]: res,
             "energy_realized_ev": res["energy_realized_ev"],
             "energy_requested_ev": res["energy_requested_ev"],
             "period_steps": res["period_steps"]}
        )

    transmittance_rows = []
    norms_rows = []
    resource_rows = []
    metrics: dict = {}
    per_solver_times: dict[str, list[tuple[int, float]]] = {s: [] for s in solvers}
    per_solver_bytes: dict[str, int] = {}
    non_converged = 0
    for k in range(cfg.sweep.k_min, cfg.sweep.k_max + 1):
        geom = geoms[k]
        n_points = 16 * k
        realized = np.array(
            [by_cell[(k, i)]["energy_realized_ev"] for i in range(n_points)]
        )
        slab_spec = SlabSpec(thickness_m=geom.slab_thickness_m, model=model)
        t_ana = transmittance_curve(slab_spec, realized)
        t_meas = {s: np.empty(n_points) for s in solvers}
        for i in range(n_points):
            cell = by_cell[(k, i)]
            row = [
                k, i, cell["energy_requested_ev"], cell["energy_realized_ev"],
                cell["period_steps"], geom.slab_cells, float(t_ana[i]),
            ]
            for solver in solvers:
                res = cell[solver]
                t_meas[solver][i] = res["transmittance"]
                row.append(float(res["transmittance"]))
                row.append(int(res["converged"]))
                if not res["converged"]:
                    non_converged += 1
            transmittance_rows.append(row)
        for solver in solvers:
            norms = error_norms(t_meas[solver], t_ana)
            norms_rows.append([k, geom.n_x, n_points, solver,
                               norms.l1, norms.l2, norms.excluded])
            metrics[f"l1_{solver}_k{k}"] = norms.l1
            metrics[f"l2_{solver}_k{k}"] = norms.l2
            wall_k = sum(
                by_cell[(k, i)][solver]["wall_time_s"] for i in range(n_points)
            )
            per_solver_times[solver].append((geom.n_x, wall_k))
            per_solver_bytes[solver] = by_cell[(k, 0)][solver]["state_bytes"]
            resource_rows.append([k, geom.n_x, solver, wall_k,
                                  by_cell[(k, 0)][solver]["state_bytes"]])

    if len(solvers) == 2:
        rel_diffs_l1 = []
        rel_diffs_l2 = []
        for k in range(cfg.sweep.k_min, cfg.sweep.k_max + 1):
            a1, b1 = metrics[f"l1_elbm_k{k}"], metrics[f"l1_fdtd_k{k}"]
            a2, b2 = metrics[f"l2_elbm_k{k}"], metrics[f"l2_fdtd_k{k}"]
            rel_diffs_l1.append(abs(a1 - b1) / max(abs(a1), abs(b1)))
            rel_diffs_l2.append(abs(a2 - b2) / max(abs(a2), abs(b2)))
        metrics["max_rel_diff_l1"] = max(rel_diffs_l1)
        metrics["max_rel_diff_l2"] = max(rel_diffs_l2)
        total_e = sum(w for _, w in per_solver_times["elbm"])
        total_f = sum(w for _, w in per_solver_times["fdtd"])
        metrics["wall_time_elbm_s"] = total_e
        metrics["wall_time_fdtd_s"] = total_f
        metrics["time_ratio_elbm_over_fdtd"] = total_e / total_f if total_f else math.nan
        metrics["memory_ratio_elbm_over_fdtd"] = (
            per_solver_bytes["elbm"] / per_solver_bytes["fdtd"]
            if per_solver_bytes.get("fdtd") else math.nan
        )
    for solver in solvers:
        pts = per_solver_times[solver]
        if len(pts) >= 2:
            slope = np.polyfit([p[0] for p in pts], [p[1] for p in pts], 1)[0]
            metrics[f"time_slope_{solver}_s_per_node"] = float(slope)
    metrics["non_converged_runs"] = non_converged

    header = ["k", "idx", "energy_requested_ev", "energy_realized_ev",
              "period_steps", "slab_cells", "T_analytical"]
    for solver in solvers:
        header += [f"T_{solver}", f"{solver}_converged"]
    transmittance_path = out_dir / "transmittance.csv"
    _write_csv(transmittance_path, header, transmittance_rows)
    norms_path = out_dir / "norms.csv"
    _write_csv(norms_path, ["k", "n_x", "n_nu", "solver", "l1", "l2", "excluded"],
               norms_rows)
    resources_path = out_dir / "resources.csv"
    _write_csv(resources_path, ["k", "n_x", "solver", "wall_time_s", "state_bytes"],
               resource_rows)

    report = RunReport(
        experiment=cfg.experiment,
        wall_time_s=total_wall,
        peak_memory_bytes=_peak_rss(),
        state_bytes=max(per_solver_bytes.values()),
        steps=0,
        config_echo=config_to_dict(cfg),
        csv_paths={"transmittance": str(transmittance_path),
                   "norms": str(norms_path), "resources": str(resources_path)},
        metrics=metrics,
    )
    report.write(out_dir)
    return report


# ---------------------------------------------------------------------------
# Ricker field comparison


_FIG2_REFERENCE = {
    "domain_length_nm": 3100.0, "n_x": 500, "slab_thickness_nm": 99.2,
    "source_position": 125, "peak_energy_ev": 3.8735,
}


def _warn_preset_mismatch(cfg: ExperimentConfig) -> None:
    ref = _FIG2_REFERENCE
    diffs = []
    if cfg.domain_length_nm != ref["domain_length_nm"]:
        diffs.append(f"domain {cfg.domain_length_nm} != {ref['domain_length_nm']} nm")
    if cfg.n_x != ref["n_x"]:
        diffs.append(f"n_x {cfg.n_x} != {ref['n_x']}")
    if cfg.slab and cfg.slab.thickness_nm != ref["slab_thickness_nm"]:
        diffs.append(f"slab {cfg.slab.thickness_nm} != {ref['slab_thickness_nm']} nm")
    src = cfg.source or {}
    if src.get("position") != ref["source_position"]:
        diffs.append(f"source at {src.get('position')} != {ref['source_position']}")
    if src.get("peak_energy_ev") != ref["peak_energy_ev"]:
        diffs.append(f"peak {src.get('peak_energy_ev')} != {ref['peak_energy_ev']} eV")
    if diffs:
        log.warning("ricker-compare config differs from the reference geometry: %s",
                    "; ".join(diffs))


def _xcorr_lag(a: np.ndarray, b: np.ndarray, max_lag: int = 4) -> float:
    """Sub-sample lag tau maximizing sum a(t + tau) b(t).

    Positive tau means ``b`` shows features earlier than ``a``. Refined by
    parabolic interpolation around the integer peak.
    """
    lags = range(-max_lag, max_lag + 1)
    corr = []
    n = len(a)
    for lag in lags:
        if lag >= 0:
            corr.append(float(np.dot(a[lag:], b[: n - lag])))
        else:
            corr.append(float(np.dot(a[: n + lag], b[-lag:])))
    corr = np.array(corr)
    i = int(np.argmax(corr))
    tau = float(i - max_lag)
    if 0 < i < len(corr) - 1:
        denom = corr[i - 1] - 2.0 * corr[i] + corr[i + 1]
        if denom != 0:
            tau += 0.5 * (corr[i - 1] - corr[i + 1]) / denom
    return tau


def run_ricker_compare(cfg: ExperimentConfig, out_dir: Path | None = None) -> RunReport:
    """Run both solvers on identical geometry and compare their fields.

    Exports per-solver snapshots at the configured steps, the max pointwise
    E-field discrepancy per snapshot, and magnetic-field lag estimates from
    raw (staggered) H series at one upstream probe (reflected wave only) and
    one downstream probe (transmitted wave only).
    """
    _warn_preset_mismatch(cfg)
    model = resolve_model(cfg)
    geom = resolve_geometry(cfg, cfg.n_x)
    out_dir = _prepare_out_dir(cfg, out_dir)
    if cfg.probes and len(cfg.probes) >= 2:
        probe_up, probe_down = cfg.probes[0], cfg.probes[1]
    else:
        probe_up = max(1, geom.source_node // 2)
        probe_down = geom.probe_node
    from .sources import spec_from_dict

    spec = spec_from_dict(cfg.source)
    coeffs = solver_coefficients(model, geom.dt_s)
    state_e = elbm.init_state(geom.n_x, coeffs, geom.slab, geom.dx_m)
    state_f = fdtd.init_state(geom.n_x, coeffs, geom.slab, geom.dx_m, courant=1.0)
    n_t = cfg.n_t
    rec = {name: np.zeros(n_t) for name in
           ("elbm_h_up", "elbm_h_down", "fdtd_h_up", "fdtd_h_down")}
    snapshots = sorted(set(cfg.snapshot_steps))
    comparison_rows = []
    t0 = time.perf_counter()
    for t in range(n_t):
        inject(state_e, spec, t)
        inject(state_f, spec, t)
        pol_t = state_e.pol.copy() if t in cfg.snapshot_steps else None
        E_e, H_e = elbm.step(state_e)
        E_f, _ = fdtd.fdtd_step(state_f)
        rec["elbm_h_up"][t] = H_e[probe_up]
        rec["elbm_h_down"][t] = H_e[probe_down]
        rec["fdtd_h_up"][t] = state_f.H[probe_up]
        rec["fdtd_h_down"][t] = state_f.H[probe_down]
        if pol_t is not None:
            elbm.write_snapshot_csv(out_dir / f"elbm_snapshot_t{t}.csv",
                                    state_e, E_e, H_e, pol_t)
            fdtd.write_snapshot_csv(out_dir / f"fdtd_snapshot_t{t}.csv",
                                    state_f, E_f, state_f.H)
            diff = float(np.max(np.abs(E_e - E_f)))
            peak = float(np.max(np.abs(E_e)))
            comparison_rows.append([t, diff, peak,
                                    diff / peak if peak else 0.0])
    wall = time.perf_counter() - t0
    lag_reflected = _xcorr_lag(rec["elbm_h_up"], rec["fdtd_h_up"])
    lag_transmitted = _xcorr_lag(rec["elbm_h_down"], rec["fdtd_h_down"])
    comparison_path = out_dir / "comparison.csv"
    _write_csv(comparison_path,
               ["snapshot_step", "max_abs_diff_e", "peak_abs_e", "ratio"],
               comparison_rows)
    max_ratio = max((row[3] for row in comparison_rows), default=math.nan)
    report = RunReport(
        experiment=cfg.experiment,
        wall_time_s=wall,
        peak_memory_bytes=_peak_rss(),
        state_bytes=state_e.state_bytes + state_f.state_bytes,
        steps=n_t,
        config_echo=config_to_dict(cfg),
        csv_paths={"comparison": str(comparison_path)},
        metrics={
            "slab_cells": geom.slab_cells,
            "slab_thickness_nm": geom.slab_thickness_m * 1e9,
            "max_e_diff_ratio": max_ratio,
            "h_lag_reflected_steps": lag_reflected,
            "h_lag_transmitted_steps": lag_transmitted,
            "probe_up": probe_up,
            "probe_down": probe_down,
        },
    )
    report.write(out_dir)
    return report


# ---------------------------------------------------------------------------


def _prepare_out_dir(cfg: ExperimentConfig, out_dir: Path | None) -> Path:
    out = Path(out_dir) if out_dir is not None else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _peak_rss() -> int | None:
    try:
        import resource

        return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024
    except Exception:
        return None


_RUNNERS = {
    "ricker-compare": run_ricker_compare,
    "cw-sweep": run_cw_sweep,
    "delta-broadband": run_delta_broadband,
    "convergence": run_convergence,
}


def run_experiment(cfg: ExperimentConfig, out_dir: Path | None = None) -> RunReport:
    """Dispatch a validated config to its experiment runner."""
    try:
        runner = _RUNNERS[cfg.experiment]
    except KeyError:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}") from None
    return runner(cfg, out_dir=out_dir)


def run_preset(name: str, out_dir: Path | None = None, **overrides) -> RunReport:
    """Run one of the built-in presets, optionally overriding config fields."""
    cfg = preset(name)
    for key, value in overrides.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown config field {key!r}")
        setattr(cfg, key, value)
    return run_experiment(cfg, out_dir=out_dir)
