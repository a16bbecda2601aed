"""Source conditions: Ricker wavelet, ramped sine, and impulsive delta launch.

Soft (additive) injection throughout, so waves reflected back over the source
node pass through undisturbed. Directional launches add the co-signed E/H
combination that is an exact rightward characteristic of both solvers at unit
Courant number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import H_OVER_E
from .elbm import LATTICE_E, LATTICE_H, ElbmState
from .fdtd import FdtdState

_KINDS = ("ricker", "sine", "delta")


@dataclass(frozen=True)
class SourceSpec:
    """One source condition; fields beyond ``kind``-specific ones are ignored.

    position/start are in lattice nodes/steps, amplitude in lattice field
    units, peak energy in eV, half breadth in seconds, period in steps, eta
    the wave impedance in lattice units (1 where the wave speed is 1).
    """

    kind: str
    position: int
    start: int = 0
    amplitude: float = 1.0
    peak_energy_ev: float | None = None
    half_breadth_s: float | None = None
    period_steps: float | None = None
    eta: float = 1.0
    directional: bool = True

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "ricker":
            if not (self.peak_energy_ev and self.peak_energy_ev > 0):
                raise ValueError("ricker source requires a positive peak_energy_ev")
            if self.half_breadth_s is not None and self.half_breadth_s <= 0:
                raise ValueError("half_breadth_s must be positive when given")
        if self.kind == "sine":
            if self.period_steps is None or self.period_steps < 2:
                raise ValueError("sine source requires period_steps >= 2 (Nyquist)")


def ricker_peak_frequency(spec: SourceSpec) -> float:
    """Spectral-peak frequency in Hz from the configured peak photon energy."""
    return spec.peak_energy_ev / H_OVER_E


def ricker_zero_crossing_s(spec: SourceSpec) -> float:
    """Time from the peak to the wavelet's zero crossings: 1/(sqrt(2) pi f_p)."""
    return 1.0 / (math.sqrt(2.0) * math.pi * ricker_peak_frequency(spec))


def ricker_delay_s(spec: SourceSpec) -> float:
    """Peak delay t_c: at least 4 half-breadths and wide enough that the
    truncated start value is below 1e-6 of the peak (6 zero-crossing times)."""
    t_c = 6.0 * ricker_zero_crossing_s(spec)
    if spec.half_breadth_s is not None:
        t_c = max(t_c, 4.0 * spec.half_breadth_s)
    return t_c


def ricker_value(t: float, spec: SourceSpec, dt_seconds: float) -> float:
    """Ricker wavelet sample at step ``t``: (1 - 2u^2) e^{-u^2}, u = pi f_p (t' - t_c)."""
    if spec.kind != "ricker":
        raise ValueError(f"expected a ricker spec, got kind={spec.kind!r}")
    f_p = ricker_peak_frequency(spec)
    u = math.pi * f_p * ((t - spec.start) * dt_seconds - ricker_delay_s(spec))
    u2 = u * u
    return spec.amplitude * (1.0 - 2.0 * u2) * math.exp(-u2)


def sine_value(t: float, spec: SourceSpec) -> float:
    """Sine sample at step ``t`` with a raised-cosine turn-on over one period."""
    if spec.kind != "sine":
        raise ValueError(f"expected a sine spec, got kind={spec.kind!r}")
    u = (t - spec.start) / spec.period_steps
    if u < 0:
        return 0.0
    envelope = 1.0 if u >= 1.0 else 0.5 * (1.0 - math.cos(math.pi * u))
    return spec.amplitude * envelope * math.sin(2.0 * math.pi * u)


def source_value(t: float, spec: SourceSpec, dt_seconds: float) -> float:
    """Per-step injection value; the delta source is initial-condition only."""
    if spec.kind == "ricker":
        return ricker_value(t, spec, dt_seconds)
    if spec.kind == "sine":
        return sine_value(t, spec)
    return 0.0


def delta_init(state, spec: SourceSpec):
    """Seed the impulsive delta launch as an initial condition (lattice solver only).

    Field representation at the source node is E = A/(2 dx), H = A/(2 eta dx)
    with dx = 1; populations get twice the equilibrium weighting of those
    half-amplitude fields, so a unit-amplitude co-signed rightward pulse
    emerges after the first iteration and is maintained exactly thereafter.
    """
    if spec.kind != "delta":
        raise ValueError(f"expected a delta spec, got kind={spec.kind!r}")
    if isinstance(state, FdtdState):
        raise ValueError(
            "the staggered leapfrog solver is conditionally stable (CFL limit) and "
            "cannot carry the delta launch's frequency content at the Nyquist limit; "
            "use the lattice-Boltzmann solver for impulsive runs"
        )
    if not isinstance(state, ElbmState):
        raise TypeError(f"unsupported state type {type(state)!r}")
    x0 = spec.position
    if not 0 < x0 < state.n_x - 1:
        raise ValueError(f"source node {x0} must be interior to the domain")
    e0 = spec.amplitude / 2.0
    h0 = spec.amplitude / (2.0 * spec.eta)
    state.E[x0] = e0
    state.H[x0] = h0
    state.f[:, x0] += 0.5 * (e0 * LATTICE_E + h0 * LATTICE_H)
    state.field_scale = max(state.field_scale, abs(spec.amplitude))
    return state


def inject(state, spec: SourceSpec, t: int):
    """Soft additive injection for step ``t``; call before advancing the step.

    Directional mode adds matched E and H so the launch travels one way
    (exact at unit Courant number); otherwise only E is driven and the wave
    splits both ways.
    """
    v = source_value(t, spec, state.dt_s)
    if v == 0.0:
        return state
    x0 = spec.position
    if isinstance(state, ElbmState):
        if spec.directional:
            state.f[:, x0] += 0.25 * v * (LATTICE_E + LATTICE_H)
        else:
            state.f[:, x0] += 0.25 * v * LATTICE_E
    elif isinstance(state, FdtdState):
        state.E[x0] += v
        if spec.directional:
            state.H[x0 - 1] += v
    else:
        raise TypeError(f"unsupported state type {type(state)!r}")
    state.field_scale = max(state.field_scale, abs(v))
    return state


def spec_from_dict(cfg: dict) -> SourceSpec:
    """Build a source from a config block (``half_breadth_as`` in attoseconds)."""
    try:
        kind = cfg["kind"]
        position = int(cfg["position"])
    except KeyError as missing:
        raise ValueError(f"source config missing field {missing}") from None
    half_breadth = cfg.get("half_breadth_as")
    return SourceSpec(
        kind=kind,
        position=position,
        start=int(cfg.get("start", 0)),
        amplitude=float(cfg.get("amplitude", 1.0)),
        peak_energy_ev=(float(cfg["peak_energy_ev"]) if "peak_energy_ev" in cfg else None),
        half_breadth_s=(float(half_breadth) * 1e-18 if half_breadth is not None else None),
        period_steps=(float(cfg["period_steps"]) if "period_steps" in cfg else None),
        eta=float(cfg.get("eta", 1.0)),
        directional=bool(cfg.get("directional", True)),
    )
