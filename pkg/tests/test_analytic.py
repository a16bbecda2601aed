import numpy as np
import pytest

from dispersim.analytic import SlabSpec, slab_transmittance, transmittance_curve
from dispersim.constants import C0, HBAR_OVER_E
from dispersim.materials import PoleResidueModel, ag_palik_model, refractive_index

from _reference import (
    transfer_matrix_transmittance,
    transfer_matrix_transmittance_reversed,
)

VACUUM = PoleResidueModel(eps_inf=1.0)
GLASS = PoleResidueModel(eps_inf=4.0)  # lossless n = 2


def test_index_matched_slab_is_transparent():
    spec = SlabSpec(thickness_m=1e-7, model=VACUUM)
    omegas = np.linspace(1e14, 1e16, 7)
    assert np.allclose(slab_transmittance(spec, omegas), 1.0, atol=1e-13)


def test_fabry_perot_transparency_at_resonance():
    d = 1e-7
    spec = SlabSpec(thickness_m=d, model=GLASS)
    for m in (1, 2, 5):
        omega = m * np.pi * C0 / (2.0 * d)  # phi = n w d / c = m pi
        assert slab_transmittance(spec, omega) == pytest.approx(1.0, abs=1e-12)


def test_off_resonance_below_unity():
    d = 1e-7
    spec = SlabSpec(thickness_m=d, model=GLASS)
    omega = 1.5 * np.pi * C0 / (2.0 * d)
    assert slab_transmittance(spec, omega) < 1.0


def test_silver_matches_transfer_matrix_oracle():
    model = ag_palik_model()
    spec = SlabSpec(thickness_m=99.2e-9, model=model)
    energies = np.linspace(0.125, 5.0, 80)
    for energy in energies:
        omega = energy / HBAR_OVER_E
        n, k = refractive_index(model, omega)
        want = transfer_matrix_transmittance(n - 1j * k, spec.thickness_m, omega)
        got = slab_transmittance(spec, omega)
        assert abs(got - want) / want < 1e-10


def test_branch_invariance():
    # |t|^2 must not depend on the square-root branch of the complex index
    model = ag_palik_model()
    d = 1e-7
    omega = 2.0 / HBAR_OVER_E
    n, k = refractive_index(model, omega)
    direct = transfer_matrix_transmittance(n - 1j * k, d, omega)
    flipped = transfer_matrix_transmittance(-(n - 1j * k), d, omega)
    assert direct == pytest.approx(flipped, rel=1e-12)


def test_reciprocity():
    model = ag_palik_model()
    omega = 3.0 / HBAR_OVER_E
    n, k = refractive_index(model, omega)
    fwd = transfer_matrix_transmittance(n - 1j * k, 1e-7, omega)
    rev = transfer_matrix_transmittance_reversed(n - 1j * k, 1e-7, omega)
    assert fwd == pytest.approx(rev, rel=1e-14)


def test_thin_slab_limit():
    spec = SlabSpec(thickness_m=1e-15, model=ag_palik_model())
    omegas = np.array([0.5, 2.0, 5.0]) / HBAR_OVER_E
    assert np.allclose(slab_transmittance(spec, omegas), 1.0, atol=1e-4)


def test_transmittance_curve_edges():
    spec = SlabSpec(thickness_m=1e-7, model=GLASS)
    assert transmittance_curve(spec, []).size == 0
    single = transmittance_curve(spec, [2.0])
    assert single.shape == (1,)
    assert single[0] == pytest.approx(slab_transmittance(spec, 2.0 / HBAR_OVER_E))


def test_curve_csv_export(tmp_path):
    from dispersim.analytic import write_curve_csv

    spec = SlabSpec(thickness_m=1e-7, model=GLASS)
    energies = [1.0, 2.0, 3.0]
    path = tmp_path / "curve.csv"
    write_curve_csv(path, energies, transmittance_curve(spec, energies))
    lines = path.read_text().splitlines()
    assert lines[0] == "energy_ev,T_analytical"
    assert len(lines) == 4


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        SlabSpec(thickness_m=0.0, model=GLASS)
    spec = SlabSpec(thickness_m=1e-7, model=GLASS)
    with pytest.raises(ValueError):
        slab_transmittance(spec, 0.0)
