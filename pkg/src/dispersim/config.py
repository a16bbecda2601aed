"""Experiment configuration: schema, validation, presets, YAML round-trip.

Configs are plain mappings with a ``schema_version`` field. Validation happens
before any allocation; errors raise :class:`ConfigError` (CLI exit code 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import yaml

from .errors import ConfigError

SCHEMA_VERSION = 1

EXPERIMENTS = ("ricker-compare", "cw-sweep", "delta-broadband", "convergence")
SOLVERS = ("elbm", "fdtd", "both")

_TOP_LEVEL_KEYS = {
    "schema_version", "experiment", "solver", "domain_length_nm", "n_x", "n_t",
    "slab", "material", "material_eps_inf", "source", "sweep", "probes",
    "output_dir", "threads", "snapshot_steps", "steady_rel_tol",
    "average_periods", "max_extra_periods", "energy_min_ev", "energy_max_ev",
    "analytic_floor", "reference",
}


@dataclass(frozen=True)
class SlabConfig:
    """Slab placement: target thickness; center as a fraction of the domain."""

    thickness_nm: float = 100.0
    center_fraction: float = 0.5


@dataclass(frozen=True)
class SweepConfig:
    """Index range for the k-indexed studies (n_x = 100k per simulation)."""

    k_min: int = 1
    k_max: int = 10


@dataclass
class ExperimentConfig:
    experiment: str
    solver: str = "elbm"
    domain_length_nm: float = 620.0
    n_x: int | None = None
    n_t: int | None = None
    slab: SlabConfig | None = None
    material: str | dict = "ag-palik-6pole"
    material_eps_inf: float = 1.0
    source: dict | None = None
    sweep: SweepConfig | None = None
    probes: list[int] | None = None
    output_dir: str = "out"
    threads: int = 1
    snapshot_steps: list[int] = field(default_factory=list)
    steady_rel_tol: float = 1e-6
    average_periods: int = 4
    max_extra_periods: int = 300
    energy_min_ev: float = 1.0
    energy_max_ev: float = 5.0
    analytic_floor: float = 1e-9
    reference: str = "analytic"
    schema_version: int = SCHEMA_VERSION


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "schema_version" not in raw:
        raise ConfigError("config requires a schema_version field")
    if int(raw["schema_version"]) != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {raw['schema_version']}; expected {SCHEMA_VERSION}"
        )
    if "experiment" not in raw:
        raise ConfigError("config requires an experiment field")
    slab = raw.get("slab")
    if slab is not None:
        if not isinstance(slab, dict):
            raise ConfigError("slab must be a mapping")
        slab = SlabConfig(
            thickness_nm=float(slab.get("thickness_nm", 100.0)),
            center_fraction=float(slab.get("center_fraction", 0.5)),
        )
    sweep = raw.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict):
            raise ConfigError("sweep must be a mapping")
        sweep = SweepConfig(k_min=int(sweep.get("k_min", 1)), k_max=int(sweep.get("k_max", 10)))
    cfg = ExperimentConfig(
        experiment=str(raw["experiment"]),
        solver=str(raw.get("solver", "elbm")),
        domain_length_nm=float(raw.get("domain_length_nm", 620.0)),
        n_x=(int(raw["n_x"]) if raw.get("n_x") is not None else None),
        n_t=(int(raw["n_t"]) if raw.get("n_t") is not None else None),
        slab=slab,
        material=raw.get("material", "ag-palik-6pole"),
        material_eps_inf=float(raw.get("material_eps_inf", 1.0)),
        source=raw.get("source"),
        sweep=sweep,
        probes=(list(map(int, raw["probes"])) if raw.get("probes") else None),
        output_dir=str(raw.get("output_dir", "out")),
        threads=int(raw.get("threads", 1)),
        snapshot_steps=list(map(int, raw.get("snapshot_steps", []))),
        steady_rel_tol=float(raw.get("steady_rel_tol", 1e-6)),
        average_periods=int(raw.get("average_periods", 4)),
        max_extra_periods=int(raw.get("max_extra_periods", 300)),
        energy_min_ev=float(raw.get("energy_min_ev", 1.0)),
        energy_max_ev=float(raw.get("energy_max_ev", 5.0)),
        analytic_floor=float(raw.get("analytic_floor", 1e-9)),
        reference=str(raw.get("reference", "analytic")),
    )
    validate_config(cfg)
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = asdict(cfg)
    if cfg.slab is not None:
        out["slab"] = {"thickness_nm": cfg.slab.thickness_nm,
                       "center_fraction": cfg.slab.center_fraction}
    if cfg.sweep is not None:
        out["sweep"] = {"k_min": cfg.sweep.k_min, "k_max": cfg.sweep.k_max}
    return out


def validate_config(cfg: ExperimentConfig) -> None:
    """Check experiment-specific mandatory fields before any allocation."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; expected one of {EXPERIMENTS}")
    if cfg.solver not in SOLVERS:
        raise ConfigError(f"unknown solver {cfg.solver!r}; expected one of {SOLVERS}")
    if not cfg.domain_length_nm > 0:
        raise ConfigError("domain_length_nm must be positive")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    if not 0 < cfg.energy_min_ev < cfg.energy_max_ev:
        raise ConfigError("need 0 < energy_min_ev < energy_max_ev")
    if cfg.reference not in ("analytic", "vacuum-run"):
        raise ConfigError("reference must be 'analytic' or 'vacuum-run'")
    exp = cfg.experiment
    if exp == "ricker-compare":
        _require(cfg.n_x, "n_x", exp)
        _require(cfg.n_t, "n_t", exp)
        _require(cfg.slab, "slab", exp)
        _require(cfg.source, "source", exp)
        if cfg.source.get("kind") != "ricker":
            raise ConfigError("ricker-compare requires a ricker source")
    elif exp == "cw-sweep":
        _require(cfg.sweep, "sweep", exp)
        _require(cfg.slab, "slab", exp)
        if not 1 <= cfg.sweep.k_min <= cfg.sweep.k_max <= 50:
            raise ConfigError("cw-sweep requires 1 <= k_min <= k_max <= 50")
        if cfg.source is not None and cfg.source.get("kind", "sine") != "sine":
            raise ConfigError("cw-sweep uses sine sources")
    elif exp == "delta-broadband":
        _require(cfg.n_x, "n_x", exp)
        _require(cfg.n_t, "n_t", exp)
        if cfg.solver == "fdtd":
            raise ConfigError(
                "delta-broadband runs on the lattice-Boltzmann solver only: the "
                "conditionally-stable leapfrog cannot carry Nyquist-limit content"
            )
        if cfg.source is not None and cfg.source.get("kind", "delta") != "delta":
            raise ConfigError("delta-broadband uses a delta source")
    elif exp == "convergence":
        _require(cfg.sweep, "sweep", exp)
        _require(cfg.slab, "slab", exp)
        if not 1 <= cfg.sweep.k_min <= cfg.sweep.k_max <= 50:
            raise ConfigError("convergence requires 1 <= k_min <= k_max <= 50")
        if cfg.solver == "fdtd":
            raise ConfigError("convergence uses the lattice-Boltzmann delta launch")
    if cfg.n_x is not None and cfg.n_x < 10:
        raise ConfigError("n_x must be at least 10")
    if cfg.n_t is not None and cfg.n_t < 2:
        raise ConfigError("n_t must be at least 2")


def _require(value, name: str, experiment: str) -> None:
    if value is None:
        raise ConfigError(f"{experiment} requires the {name!r} field")


def load_config(path) -> ExperimentConfig:
    """Read and validate a YAML config file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    return config_from_dict(raw)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True)


PRESET_DESCRIPTIONS = {
    "fig2-ricker": "Ricker pulse through a 99.2 nm silver slab; field comparison of both solvers",
    "fig3-sweep": "Continuous-wave transmittance sweep, 16k energies over 1-5 eV, k = 1..10",
    "fig6-delta": "Broadband impulse through a 100 nm silver slab, n_x = 1000, n_t = 40000",
    "fig7-convergence": "Grid-refinement study of the impulse run, k = 1..8",
}


def preset(name: str) -> ExperimentConfig:
    """Built-in experiment configurations reproducing the reference geometries."""
    if name == "fig2-ricker":
        cfg = ExperimentConfig(
            experiment="ricker-compare",
            solver="both",
            domain_length_nm=3100.0,
            n_x=500,
            n_t=650,
            slab=SlabConfig(thickness_nm=99.2, center_fraction=0.5),
            source={
                "kind": "ricker", "position": 125, "amplitude": 1.0,
                "peak_energy_ev": 3.8735, "half_breadth_as": 145.32,
            },
            snapshot_steps=[150, 195, 295],
            probes=[60, 350],
            output_dir="out/fig2-ricker",
        )
    elif name == "fig3-sweep":
        cfg = ExperimentConfig(
            experiment="cw-sweep",
            solver="both",
            domain_length_nm=620.0,
            slab=SlabConfig(thickness_nm=100.0),
            sweep=SweepConfig(k_min=1, k_max=10),
            source={"kind": "sine", "amplitude": 1.0},
            output_dir="out/fig3-sweep",
        )
    elif name == "fig6-delta":
        cfg = ExperimentConfig(
            experiment="delta-broadband",
            solver="elbm",
            domain_length_nm=620.0,
            n_x=1000,
            n_t=40000,
            slab=SlabConfig(thickness_nm=100.0),
            source={"kind": "delta", "amplitude": 1.0},
            output_dir="out/fig6-delta",
        )
    elif name == "fig7-convergence":
        cfg = ExperimentConfig(
            experiment="convergence",
            solver="elbm",
            domain_length_nm=620.0,
            slab=SlabConfig(thickness_nm=100.0),
            sweep=SweepConfig(k_min=1, k_max=8),
            source={"kind": "delta", "amplitude": 1.0},
            output_dir="out/fig7-convergence",
        )
    else:
        known = ", ".join(sorted(PRESET_DESCRIPTIONS))
        raise ConfigError(f"unknown preset {name!r}; available: {known}")
    validate_config(cfg)
    return cfg
