import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispersim.errors import SteadyStateError
from dispersim.spectral import (
    Spectrum,
    TimeSeries,
    error_norms,
    fft_series,
    photon_energy_axis,
    poynting_average,
    psd,
    transmittance_from_psd,
    write_spectrum_csv,
)

from _reference import dft_reference

DT = 2.0681e-17


def test_constant_series_is_dc_only():
    spec = fft_series(TimeSeries(np.full(64, 3.0), DT))
    assert abs(spec.bins[0]) == pytest.approx(192.0)
    assert np.max(np.abs(spec.bins[1:])) < 1e-12


def test_pure_sinusoid_single_bin_pair():
    n, k = 128, 5
    t = np.arange(n)
    spec = fft_series(TimeSeries(np.sin(2 * np.pi * k * t / n), DT))
    mags = np.abs(spec.bins)
    assert mags[k] == pytest.approx(n / 2, rel=1e-9)
    assert mags[n - k] == pytest.approx(n / 2, rel=1e-9)
    others = np.delete(mags, [k, n - k])
    assert np.max(others) < 1e-9


def test_parseval_and_brute_force_dft():
    rng = np.random.default_rng(7)
    values = rng.standard_normal(48)
    spec = fft_series(TimeSeries(values, DT))
    assert np.sum(np.abs(spec.bins) ** 2) / len(values) == pytest.approx(
        np.sum(values**2), rel=1e-12
    )
    ref = dft_reference(list(values))
    assert np.max(np.abs(spec.bins - np.array(ref))) < 1e-9


def test_psd_zero_and_mismatch():
    e = fft_series(TimeSeries(np.zeros(16), DT))
    h = fft_series(TimeSeries(np.ones(16), DT))
    assert np.all(psd(e, h).bins == 0)
    short = fft_series(TimeSeries(np.ones(8), DT))
    with pytest.raises(ValueError):
        psd(e, short)


def test_psd_reports_first_half():
    e = fft_series(TimeSeries(np.random.default_rng(0).standard_normal(64), DT))
    s = psd(e, e)
    assert len(s) == 33
    assert s.dnu == pytest.approx(1.0 / 64)


def test_transmittance_identity_and_guard():
    e = fft_series(TimeSeries(np.random.default_rng(1).standard_normal(32), DT))
    s = psd(e, e)
    t = transmittance_from_psd(s, s)
    valid = np.abs(s.bins) >= 1e-300
    assert np.allclose(t[valid], 1.0)
    zero_ref = Spectrum(bins=np.zeros(len(s)), dnu=s.dnu, dt_seconds=DT)
    t2 = transmittance_from_psd(s, zero_ref)
    assert np.all(np.isnan(t2))


def test_transmittance_scalar_reference():
    s = Spectrum(bins=np.array([2.0, 4.0, 8.0]), dnu=0.1, dt_seconds=DT)
    assert np.allclose(transmittance_from_psd(s, 2.0), [1.0, 2.0, 4.0])


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1e6))
def test_transmittance_ratio_normalization(scale):
    # scaling both probe series by one constant leaves T untouched when the
    # reference is a matching calibration spectrum
    values = np.sin(np.linspace(0, 7.0, 64)) + 0.3
    e = fft_series(TimeSeries(values, DT))
    h = fft_series(TimeSeries(values * 0.5, DT))
    base = transmittance_from_psd(psd(e, h), psd(e, e))
    e2 = fft_series(TimeSeries(scale * values, DT))
    h2 = fft_series(TimeSeries(scale * values * 0.5, DT))
    scaled = transmittance_from_psd(psd(e2, h2), psd(e2, e2))
    assert np.allclose(scaled, base, rtol=1e-9, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=0.1, max_value=1e3), min_size=1, max_size=32))
def test_error_norms_identity(values):
    x = np.array(values)
    norms = error_norms(x, x)
    assert norms.l1 == 0.0
    assert norms.l2 == 0.0
    assert norms.excluded == 0


def test_error_norms_single_bin():
    norms = error_norms([1.0], [2.0])
    assert norms.l1 == pytest.approx(0.5)
    assert norms.l2 == pytest.approx(0.5)


def test_error_norms_exclusions():
    norms = error_norms([1.0, 1.0, np.nan], [2.0, 0.0, 1.0])
    assert norms.excluded == 2
    assert norms.l1 == pytest.approx(0.5)
    floored = error_norms([1.0, 1.0], [2.0, 1e-12], floor=1e-9)
    assert floored.excluded == 1


def test_photon_energy_axis_landmarks():
    # 4000 samples at dt = 20.681 as: Nyquist bin near 100 eV
    spec = Spectrum(bins=np.zeros(2001), dnu=1.0 / 4000, dt_seconds=2.0681e-17)
    energies = photon_energy_axis(spec)
    assert energies[0] == 0.0
    assert energies[-1] == pytest.approx(100.0, abs=0.5)
    slope = energies[1] - energies[0]
    assert np.allclose(np.diff(energies), slope, rtol=1e-12)
    fine = Spectrum(bins=np.zeros(101), dnu=1.0 / 200, dt_seconds=0.414e-18)
    assert photon_energy_axis(fine)[-1] == pytest.approx(5000.0, rel=2e-3)


def test_poynting_average_sin_squared():
    t = np.arange(20 * 40)
    e = np.sin(2 * np.pi * t / 40)
    ts_e = TimeSeries(e, DT)
    assert poynting_average(ts_e, ts_e, periods=4, period_steps=40) == pytest.approx(0.5)


def test_poynting_average_quadrature():
    t = np.arange(20 * 40)
    e = TimeSeries(np.sin(2 * np.pi * t / 40), DT)
    h = TimeSeries(np.cos(2 * np.pi * t / 40), DT)
    assert poynting_average(e, h, periods=4, period_steps=40) == pytest.approx(0.0, abs=1e-14)


def test_poynting_average_signals_nonconvergence():
    t = np.arange(10 * 40)
    ramp = TimeSeries((1.0 + 0.01 * t) * np.sin(2 * np.pi * t / 40), DT)
    with pytest.raises(SteadyStateError):
        poynting_average(ramp, ramp, periods=4, period_steps=40)


def test_poynting_average_needs_enough_periods():
    short = TimeSeries(np.ones(50), DT)
    with pytest.raises(SteadyStateError):
        poynting_average(short, short, periods=4, period_steps=40)


def test_spectrum_csv_round_trip(tmp_path):
    spec = Spectrum(bins=np.array([1.0 + 0j, 0.5 + 0.5j]), dnu=0.25, dt_seconds=DT)
    path = tmp_path / "spec.csv"
    write_spectrum_csv(path, spec)
    lines = path.read_text().splitlines()
    assert lines[0] == "bin,nu,energy_ev,magnitude,phase"
    assert len(lines) == 3
    real_path = tmp_path / "real.csv"
    write_spectrum_csv(real_path, Spectrum(bins=np.array([1.0, 2.0]), dnu=0.5,
                                           dt_seconds=DT))
    assert real_path.read_text().splitlines()[0] == "bin,nu,energy_ev,magnitude"
