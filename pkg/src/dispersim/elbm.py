"""One-dimensional electrodynamic lattice-Boltzmann solver.

Electric and magnetic fields are synchronous moments of four pseudo-particle
populations streaming on a colocated unit lattice (dx = dt = 1, wave speed 1),
so vacuum propagation is exact at every resolvable frequency. A polarization
density carries the dielectric response; dispersive media couple in through
per-pole complex polarization currents driven by backward differences of the
electric field. Populations and polarization relax by over-relaxed collisions
(relaxation time 1/2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .constants import C0
from .errors import NumericalInstabilityError
from .materials import UpdateCoefficients, solver_coefficients

# Outcome sequences: velocity, electric weight, magnetic weight. Each outcome
# is a right- or left-handed triple: velocity = electric * magnetic weight.
LATTICE_C = np.array([1, -1, -1, 1], dtype=np.int64)
LATTICE_E = np.array([1, 1, -1, -1], dtype=np.int64)
LATTICE_H = np.array([1, -1, 1, -1], dtype=np.int64)

# BGK relaxation time; dt = 1 in lattice units, so collisions over-relax.
TAU = 0.5

BLOWUP_FACTOR = 1e12


@dataclass
class ElbmState:
    """Full solver state on an ``n_x``-node lattice.

    ``jp`` holds per-pole complex polarization currents restricted to the
    contiguous dispersive slice; ``pol`` is the aggregate polarization
    density. ``E``/``H`` hold the moments of the most recent completed step.
    """

    f: np.ndarray
    pol: np.ndarray
    jp: np.ndarray
    E: np.ndarray
    H: np.ndarray
    E_prev: np.ndarray
    eps_r: np.ndarray
    mask: np.ndarray
    slab: slice
    coeffs: UpdateCoefficients
    dx_m: float
    dt_s: float
    free_left: bool = True
    free_right: bool = True
    t: int = 0
    field_scale: float = 1.0

    @property
    def n_x(self) -> int:
        return self.f.shape[1]

    @property
    def state_bytes(self) -> int:
        arrays = (self.f, self.pol, self.jp, self.E, self.H, self.E_prev,
                  self.eps_r, self.mask)
        return int(sum(a.nbytes for a in arrays))


def init_state(
    n_x: int,
    coeffs: UpdateCoefficients | None = None,
    slab: slice | None = None,
    dx_m: float = 1e-9,
    free_left: bool = True,
    free_right: bool = True,
) -> ElbmState:
    """Quiescent state with an optional dispersive slab occupying ``slab``."""
    if n_x < 3:
        raise ValueError("lattice needs at least 3 nodes")
    dt_s = dx_m / C0
    if coeffs is None:
        coeffs = solver_coefficients(None, dt_s)
    if slab is None:
        slab = slice(0, 0)
    if coeffs.eps_r <= 0:
        raise ValueError(f"non-positive equilibrium permittivity: {coeffs.eps_r}")
    eps_r = np.ones(n_x)
    eps_r[slab] = coeffs.eps_r
    mask = np.zeros(n_x, dtype=bool)
    if coeffs.n_poles:
        mask[slab] = True
    width = len(range(*slab.indices(n_x)))
    return ElbmState(
        f=np.zeros((4, n_x)),
        pol=np.zeros(n_x),
        jp=np.zeros((coeffs.n_poles, width), dtype=complex),
        E=np.zeros(n_x),
        H=np.zeros(n_x),
        E_prev=np.zeros(n_x),
        eps_r=eps_r,
        mask=mask,
        slab=slab,
        coeffs=coeffs,
        dx_m=dx_m,
        dt_s=dt_s,
        free_left=free_left,
        free_right=free_right,
    )


def equilibrium_population(E, H) -> np.ndarray:
    """Equilibrium populations (E*e_n + H*h_n)/4 for colocated field values."""
    return 0.25 * (np.multiply.outer(LATTICE_E, E) + np.multiply.outer(LATTICE_H, H))


def moments(state: ElbmState) -> tuple[np.ndarray, np.ndarray]:
    """Synchronous field moments: E = (sum f*e + P)/eps_r, H = sum f*h."""
    f = state.f
    E = (f[0] + f[1] - f[2] - f[3] + state.pol) / state.eps_r
    H = f[0] - f[1] + f[2] - f[3]
    return E, H


def pole_current_update(jp: np.ndarray, coeffs: UpdateCoefficients, dE: np.ndarray) -> np.ndarray:
    """Advance currents in place: j_p(t) = kappa_p j_p(t-1) + beta_p dE (dt = 1)."""
    jp *= coeffs.kappa[:, None]
    jp += coeffs.beta[:, None] * dE[None, :]
    return jp


def equilibrium_current(jp: np.ndarray, coeffs: UpdateCoefficients) -> np.ndarray:
    """Moment of the per-pole currents: j_eq = Re{ sum_p (1 + kappa_p) j_p }."""
    return (jp * (1.0 + coeffs.kappa)[:, None]).real.sum(axis=0)


def equilibrium_polarization(E, eps_r, j_eq, tau: float = TAU, dt: float = 1.0):
    """P_eq = (eps_r - 1) E - (tau/dt) j_eq; reduces to the non-dispersive form at j_eq = 0."""
    return (eps_r - 1.0) * E - (tau / dt) * j_eq


def polarization_collide(pol, pol_eq):
    """Over-relaxed polarization collision: P(t+1) = 2 P_eq - P(t)."""
    return 2.0 * pol_eq - pol


def collide_and_stream(f: np.ndarray, f_eq: np.ndarray) -> np.ndarray:
    """Collide (f' = 2 f_eq - f) and shift each outcome one node along its velocity.

    Streaming wraps periodically; domain ends are fixed up afterwards by
    :func:`free_boundary`.
    """
    f[0] = np.roll(2.0 * f_eq[0] - f[0], 1)
    f[1] = np.roll(2.0 * f_eq[1] - f[1], -1)
    f[2] = np.roll(2.0 * f_eq[2] - f[2], -1)
    f[3] = np.roll(2.0 * f_eq[3] - f[3], 1)
    return f


def free_boundary(state: ElbmState) -> None:
    """Absorbing closure: populations entering from outside copy the nearest
    interior node's just-streamed value (overwrites the periodic wrap)."""
    f = state.f
    if state.free_left:
        f[0, 0] = f[0, 1]
        f[3, 0] = f[3, 1]
    if state.free_right:
        f[1, -1] = f[1, -2]
        f[2, -1] = f[2, -2]


def step(state: ElbmState) -> tuple[np.ndarray, np.ndarray]:
    """Advance one time step; returns the (E, H) moments of the step's instant.

    Order: moments; current recursion from (E, E_prev); current moment;
    equilibrium polarization; polarization collision; population collision and
    streaming; boundary fix-up; E_prev update.
    """
    E, H = moments(state)
    coeffs = state.coeffs
    pol_eq = (state.eps_r - 1.0) * E
    if coeffs.n_poles:
        sl = state.slab
        pole_current_update(state.jp, coeffs, E[sl] - state.E_prev[sl])
        j_eq = equilibrium_current(state.jp, coeffs)
        pol_eq[sl] -= TAU * j_eq
    state.pol = polarization_collide(state.pol, pol_eq)
    collide_and_stream(state.f, equilibrium_population(E, H))
    free_boundary(state)
    state.E_prev[:] = E
    state.E = E
    state.H = H
    state.t += 1
    return E, H


def check_bounded(state: ElbmState, peak: float) -> None:
    """Raise on field blow-up; callers pass the current max |E|."""
    if not np.isfinite(peak) or peak > BLOWUP_FACTOR * state.field_scale:
        raise NumericalInstabilityError(
            f"field magnitude {peak:.3e} exceeds {BLOWUP_FACTOR:.0e} x scale "
            f"{state.field_scale:.3e} at step {state.t}"
        )


def write_snapshot_csv(path, state: ElbmState, E, H, pol) -> None:
    """Export one step's fields as ``node_index, x_nm, E, H, P`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "x_nm", "E", "H", "P"])
        for i in range(state.n_x):
            writer.writerow([
                i, f"{i * state.dx_m * 1e9:.17g}",
                f"{E[i]:.17g}", f"{H[i]:.17g}", f"{pol[i]:.17g}",
            ])
