"""Reference 1D FDTD (Yee) solver with the same pole-residue dispersion.

Leapfrog on a staggered grid: E at integer nodes and steps, H at half nodes
and half steps (H has n_x - 1 entries). The dispersive update consumes the
identical per-step coefficients as the lattice-Boltzmann solver; per-pole
currents follow the same backward-difference recursion, applied after each
E update. First-order Mur terminations absorb exactly at unit Courant number.
Conditionally stable (S <= 1), so impulsive content at the Nyquist limit is
out of reach; use band-limited sources.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .constants import C0
from .errors import NumericalInstabilityError
from .materials import UpdateCoefficients, solver_coefficients

BLOWUP_FACTOR = 1e12


@dataclass
class FdtdState:
    """Staggered fields plus ADE currents on the dispersive slice.

    ``H`` holds the latest half-step field, ``H_prev`` the one before it, and
    ``E_prev`` the previous integer-step E; together they colocate probe
    values at the last completed instant.
    """

    E: np.ndarray
    H: np.ndarray
    H_prev: np.ndarray
    E_prev: np.ndarray
    jp: np.ndarray
    eps_r: np.ndarray
    mask: np.ndarray
    slab: slice
    coeffs: UpdateCoefficients
    courant: float
    dx_m: float
    dt_s: float
    t: int = 0
    field_scale: float = 1.0

    @property
    def n_x(self) -> int:
        return len(self.E)

    @property
    def state_bytes(self) -> int:
        arrays = (self.E, self.H, self.H_prev, self.E_prev, self.jp,
                  self.eps_r, self.mask)
        return int(sum(a.nbytes for a in arrays))


def init_state(
    n_x: int,
    coeffs: UpdateCoefficients | None = None,
    slab: slice | None = None,
    dx_m: float = 1e-9,
    courant: float = 1.0,
) -> FdtdState:
    """Quiescent state; ``courant`` is S = c dt / dx with 0 < S <= 1."""
    if n_x < 3:
        raise ValueError("grid needs at least 3 E-nodes")
    if not 0.0 < courant <= 1.0:
        raise ValueError(f"courant number must satisfy 0 < S <= 1, got {courant}")
    dt_s = courant * dx_m / C0
    if coeffs is None:
        coeffs = solver_coefficients(None, dt_s)
    if slab is None:
        slab = slice(0, 0)
    if coeffs.eps_r <= 0:
        raise ValueError(f"non-positive equilibrium permittivity: {coeffs.eps_r}")
    start, stop, _ = slab.indices(n_x)
    if start < stop and (start < 1 or stop > n_x - 1):
        raise ValueError("dispersive slab must not touch the boundary nodes")
    eps_r = np.ones(n_x)
    eps_r[slab] = coeffs.eps_r
    mask = np.zeros(n_x, dtype=bool)
    if coeffs.n_poles:
        mask[slab] = True
    return FdtdState(
        E=np.zeros(n_x),
        H=np.zeros(n_x - 1),
        H_prev=np.zeros(n_x - 1),
        E_prev=np.zeros(n_x),
        jp=np.zeros((coeffs.n_poles, stop - start), dtype=complex),
        eps_r=eps_r,
        mask=mask,
        slab=slab,
        coeffs=coeffs,
        courant=courant,
        dx_m=dx_m,
        dt_s=dt_s,
    )


def mur_boundary(e_new: np.ndarray, e_old: np.ndarray, courant: float) -> None:
    """First-order Mur update for both end nodes (in place on ``e_new``).

    E_b(t+1) = E_adj(t) + (S-1)/(S+1) * (E_adj(t+1) - E_b(t)); the coefficient
    vanishes at S = 1, which absorbs exactly in one dimension.
    """
    k = (courant - 1.0) / (courant + 1.0)
    e_new[0] = e_old[1] + k * (e_new[1] - e_old[0])
    e_new[-1] = e_old[-2] + k * (e_new[-2] - e_old[-1])


def colocate_pair(h_before: np.ndarray, h_after: np.ndarray) -> np.ndarray:
    """Average H across the two adjacent half-nodes and half-steps.

    Returns an array on the E-grid; boundary nodes, which lack one neighbour,
    are NaN. Second-order accurate for smooth fields.
    """
    out = np.full(len(h_before) + 1, np.nan)
    out[1:-1] = 0.25 * (h_before[:-1] + h_before[1:] + h_after[:-1] + h_after[1:])
    return out


def colocate_probe(state: FdtdState, node: int) -> tuple[float, float]:
    """Colocated (E, H) at ``node`` for the last completed integer step."""
    if not 1 <= node <= state.n_x - 2:
        raise ValueError(f"colocation needs an interior node, got {node}")
    h = 0.25 * (state.H_prev[node - 1] + state.H_prev[node]
                + state.H[node - 1] + state.H[node])
    return float(state.E_prev[node]), float(h)


def fdtd_step(state: FdtdState) -> tuple[np.ndarray, np.ndarray]:
    """Advance one leapfrog step; returns (E, colocated H) at the step's instant.

    H update from the curl of E; E update adds the dispersive current moment
    Re{ sum_p (1 + kappa_p) J_p } scaled by 1/eps_r; J_p recursion then uses
    the fresh E difference. Mur terminations replace the two boundary E nodes.
    """
    S = state.courant
    coeffs = state.coeffs
    e_old = state.E.copy()
    state.H_prev[:] = state.H
    state.H -= S * np.diff(e_old)
    h_coloc = colocate_pair(state.H_prev, state.H)
    curl = -S * np.diff(state.H)
    e_new = state.E
    e_new[1:-1] += curl / state.eps_r[1:-1]
    if coeffs.n_poles:
        sl = state.slab
        drive = (state.jp * (1.0 + coeffs.kappa)[:, None]).real.sum(axis=0)
        e_new[sl] -= drive / state.eps_r[sl]
    mur_boundary(e_new, e_old, S)
    if coeffs.n_poles:
        sl = state.slab
        state.jp *= coeffs.kappa[:, None]
        state.jp += coeffs.beta[:, None] * (e_new[sl] - e_old[sl])[None, :]
    state.E_prev[:] = e_old
    state.t += 1
    peak = float(np.max(np.abs(e_new)))
    if not np.isfinite(peak) or peak > BLOWUP_FACTOR * state.field_scale:
        raise NumericalInstabilityError(
            f"field magnitude {peak:.3e} exceeds {BLOWUP_FACTOR:.0e} x scale "
            f"{state.field_scale:.3e} at step {state.t}"
        )
    return e_old, h_coloc


def write_snapshot_csv(path, state: FdtdState, E, h_raw) -> None:
    """Export staggered fields: ``node_index, x_nm, E, H, P, grid`` rows.

    E-node rows carry E (polarization is internal to the update and not
    tracked separately); H-node rows carry the raw half-node H at x + dx/2.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "x_nm", "E", "H", "P", "grid"])
        for i in range(state.n_x):
            writer.writerow([i, f"{i * state.dx_m * 1e9:.17g}",
                             f"{E[i]:.17g}", "", "", "E-node"])
        for i in range(state.n_x - 1):
            writer.writerow([i, f"{(i + 0.5) * state.dx_m * 1e9:.17g}",
                             "", f"{h_raw[i]:.17g}", "", "H-node"])
