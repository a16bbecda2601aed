"""Probe time series, spectra, transmittance extraction and error norms.

Conventions fixed here once: the forward DFT is numpy's unscaled sum
(kernel e^{-2*pi*j*i*t/N}), so a unit impulse has |bin| = 1 everywhere; bin i
of an N-sample series corresponds to dimensionless frequency nu_i = i/N and
photon energy h*nu_i/dt. Products of real-signal spectra are conjugate
symmetric, so power spectra report only bins 0..N//2.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import H_OVER_E
from .errors import SteadyStateError


@dataclass(frozen=True)
class TimeSeries:
    """Samples recorded at one probe node every time step."""

    values: np.ndarray
    dt_seconds: float
    probe_node: int = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) < 2:
            raise ValueError("time series must be 1-D with at least 2 samples")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class Spectrum:
    """Discrete spectrum; bin i sits at nu_i = i*dnu with dnu = 1/N_t."""

    bins: np.ndarray
    dnu: float
    dt_seconds: float

    def __len__(self) -> int:
        return len(self.bins)


def fft_series(ts: TimeSeries) -> Spectrum:
    """Full unscaled forward DFT of a probe recording (no windowing)."""
    return Spectrum(bins=np.fft.fft(ts.values), dnu=1.0 / len(ts.values),
                    dt_seconds=ts.dt_seconds)


def psd(e_spec: Spectrum, h_spec: Spectrum) -> Spectrum:
    """Per-bin product E_hat * H_hat (the 1-D Poynting spectrum), first half only."""
    if len(e_spec) != len(h_spec):
        raise ValueError(f"spectrum length mismatch: {len(e_spec)} vs {len(h_spec)}")
    if e_spec.dt_seconds != h_spec.dt_seconds:
        raise ValueError("spectrum time-step mismatch")
    n = len(e_spec)
    product = e_spec.bins * h_spec.bins
    return Spectrum(bins=product[: n // 2 + 1], dnu=e_spec.dnu,
                    dt_seconds=e_spec.dt_seconds)


def transmittance_from_psd(s_spec: Spectrum, reference) -> np.ndarray:
    """|S(nu)| normalized by a reference power spectrum.

    ``reference`` is either a Spectrum (e.g. from a vacuum calibration run) or
    a scalar analytic constant (a unit-amplitude impulse launch has reference
    exactly 1). Bins whose reference magnitude is below 1e-300 are marked
    invalid with NaN.
    """
    mag = np.abs(s_spec.bins)
    if isinstance(reference, Spectrum):
        if len(reference) != len(s_spec):
            raise ValueError("reference spectrum length mismatch")
        ref = np.abs(reference.bins)
    else:
        ref = np.full_like(mag, float(reference))
    out = np.full_like(mag, np.nan)
    valid = ref >= 1e-300
    out[valid] = mag[valid] / ref[valid]
    return out


def photon_energy_axis(spec: Spectrum) -> np.ndarray:
    """Photon energy of each bin in eV: h * nu_i / dt."""
    nu = np.arange(len(spec.bins)) * spec.dnu
    return H_OVER_E * nu / spec.dt_seconds


class ErrorNorms(NamedTuple):
    l1: float
    l2: float
    excluded: int


def error_norms(numerical, analytical, floor: float = 0.0) -> ErrorNorms:
    """First- and second-order relative error norms against an analytic curve.

    L1 = mean |(T - S)/T|, L2 = sqrt(sum |T - S|^2 / sum |T|^2). Bins with a
    non-finite entry on either side, or |T| <= floor, are excluded from both
    norms and counted. ``floor=0`` excludes only exact zeros.
    """
    num = np.asarray(numerical, dtype=float)
    ana = np.asarray(analytical, dtype=float)
    if num.shape != ana.shape or num.ndim != 1 or len(num) < 1:
        raise ValueError("numerical and analytical must be equal-length 1-D sequences")
    valid = np.isfinite(num) & np.isfinite(ana) & (np.abs(ana) > floor)
    excluded = int((~valid).sum())
    if not valid.any():
        return ErrorNorms(l1=np.nan, l2=np.nan, excluded=excluded)
    diff = ana[valid] - num[valid]
    l1 = float(np.mean(np.abs(diff / ana[valid])))
    l2 = float(np.sqrt(np.sum(diff**2) / np.sum(ana[valid] ** 2)))
    return ErrorNorms(l1=l1, l2=l2, excluded=excluded)


def poynting_average(
    e_ts: TimeSeries,
    h_ts: TimeSeries,
    periods: int,
    period_steps: float,
    rel_tol: float = 1e-6,
) -> float:
    """Mean of E(t)*H(t) over the last ``periods`` whole periods of the series.

    Steady state requires every pair of consecutive period-averages in the
    trailing ``periods + 1`` windows to agree within ``rel_tol`` relative;
    otherwise :class:`SteadyStateError` is raised. Window boundaries are
    rounded per period so non-integer ``period_steps`` stay aligned.
    """
    if len(e_ts.values) != len(h_ts.values):
        raise ValueError("E and H series length mismatch")
    if periods < 1:
        raise ValueError("periods must be >= 1")
    if period_steps < 2:
        raise ValueError("period must span at least 2 steps")
    s = e_ts.values * h_ts.values
    n_windows = int(len(s) // period_steps)
    if n_windows < periods + 1:
        raise SteadyStateError(
            f"series covers {n_windows} periods; need at least {periods + 1}"
        )
    means = []
    for m in range(n_windows):
        b0 = round(m * period_steps)
        b1 = round((m + 1) * period_steps)
        means.append(float(np.mean(s[b0:b1])))
    tail = means[-(periods + 1):]
    # steadiness is judged relative to the instantaneous power magnitude, so
    # quadrature signals (window means at roundoff level) count as steady
    power_scale = float(np.mean(np.abs(s)))
    for a, b in zip(tail, tail[1:]):
        scale = max(abs(a), abs(b), power_scale, 1e-300)
        if abs(b - a) > rel_tol * scale:
            raise SteadyStateError(
                f"period averages not steady: |{b:.3e} - {a:.3e}| > {rel_tol} rel"
            )
    return float(np.mean(tail[1:]))


def write_spectrum_csv(path, spec: Spectrum, phase: bool | None = None) -> None:
    """Export ``bin, nu, energy_ev, magnitude[, phase]`` rows.

    Phase is included for complex bins unless disabled explicitly.
    """
    energies = photon_energy_axis(spec)
    complex_bins = np.iscomplexobj(spec.bins)
    if phase is None:
        phase = complex_bins
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["bin", "nu", "energy_ev", "magnitude"]
        if phase:
            header.append("phase")
        writer.writerow(header)
        for i, (b, e) in enumerate(zip(spec.bins, energies)):
            row = [i, f"{i * spec.dnu:.17g}", f"{e:.17g}", f"{abs(b):.17g}"]
            if phase:
                row.append(f"{np.angle(b):.17g}")
            writer.writerow(row)
