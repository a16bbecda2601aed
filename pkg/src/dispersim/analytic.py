"""Closed-form transmittance of a single slab in vacuum (normal incidence).

Uses the Airy summation of all internal reflections with frequency-dependent
complex index from the material model, under the e^{+jwt} convention (complex
index n - jk, k >= 0, so e^{-j n_c w d / c0} decays through absorbing media).
Ground truth for the solvers' error norms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .constants import C0, HBAR_OVER_E
from .materials import PoleResidueModel, refractive_index


@dataclass(frozen=True)
class SlabSpec:
    """Slab of one material in vacuum; thickness is the exact realized value
    (an integer number of lattice cells when paired with a simulation)."""

    thickness_m: float
    model: PoleResidueModel

    def __post_init__(self) -> None:
        if not self.thickness_m > 0:
            raise ValueError(f"thickness must be positive, got {self.thickness_m}")


def slab_transmittance(spec: SlabSpec, omega):
    """Power transmittance T = |t|^2 at angular frequency ``omega`` (rad/s).

    t = t12 t23 e^{-j phi} / (1 - r^2 e^{-2j phi}) with phi = n_c w d / c0 and
    the normal-incidence Fresnel pair between vacuum and the slab. Identical
    vacuum half-spaces on both sides, so no impedance correction factor
    applies to |t|^2. Values may exceed unity only where the fitted model is
    non-passive.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("omega must be positive")
    n, k = refractive_index(spec.model, w)
    nc = np.asarray(n) - 1j * np.asarray(k)
    r = (1.0 - nc) / (1.0 + nc)
    phase = np.exp(-1j * nc * w * spec.thickness_m / C0)
    t = (2.0 / (1.0 + nc)) * (2.0 * nc / (1.0 + nc)) * phase / (1.0 - r * r * phase * phase)
    out = np.abs(t) ** 2
    return float(out) if np.isscalar(omega) else out


def transmittance_curve(spec: SlabSpec, energies_ev) -> np.ndarray:
    """Element-wise transmittance over photon energies in eV."""
    energies = np.asarray(energies_ev, dtype=float)
    if energies.size == 0:
        return np.zeros(0)
    return np.asarray(slab_transmittance(spec, energies / HBAR_OVER_E))


def write_curve_csv(path, energies_ev, transmittance) -> None:
    """Export ``energy_ev, T_analytical`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["energy_ev", "T_analytical"])
        for e, t in zip(energies_ev, transmittance):
            writer.writerow([f"{e:.17g}", f"{t:.17g}"])
