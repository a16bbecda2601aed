"""Dispersive permittivity models built from complex-conjugate pole-residue pairs.

A material is a high-frequency relative permittivity ``eps_inf`` plus a list of
complex pole/residue pairs stored in eV units:

    eps(w) = eps0 * ( eps_inf + sum_p [ c_p/(jw - a_p) + c_p*/(jw - a_p*) ] )

under the e^{+jwt} time convention, so passive media have Im eps <= 0. Pole
constants convert from eV to rad/s only at evaluation boundaries (multiply by
e/hbar). Time-domain solvers consume per-time-step dimensionless coefficients
(kappa_p, beta_p, eps_r) produced by :func:`dimensionless` and
:func:`update_coefficients`; both solvers in this package share one coefficient
pipeline so their dispersion handling is bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import EPS0, HBAR_OVER_E

_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class PolePair:
    """One pole/residue pair in eV; the conjugate partner is implicit.

    The pole must not sit in the right half plane (growing response); a zero
    real part is the marginal lossless-oscillator limit.
    """

    residue: complex
    pole: complex

    def __post_init__(self) -> None:
        if self.pole.real > 0:
            raise ValueError(
                f"pole must have non-positive real part (decaying), got {self.pole!r}"
            )


@dataclass(frozen=True)
class PoleResidueModel:
    """Relative-permittivity model: eps_inf plus pole/residue pairs (eV units)."""

    eps_inf: float
    poles: tuple[PolePair, ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        if not self.eps_inf > 0:
            raise ValueError(f"eps_inf must be positive, got {self.eps_inf}")
        object.__setattr__(self, "poles", tuple(self.poles))

    @property
    def n_poles(self) -> int:
        return len(self.poles)


@dataclass(frozen=True)
class DimensionlessPoles:
    """Per-pole constants scaled by the physical time step: alpha = a*dt*e/hbar."""

    alpha: np.ndarray
    chi: np.ndarray
    dt_seconds: float


@dataclass(frozen=True)
class UpdateCoefficients:
    """Per-time-step update constants shared by both solvers.

    kappa_p = (1 + alpha_p*tau)/(1 - alpha_p*tau), beta_p = chi_p/(1 - alpha_p*tau)
    with tau = 1/2, and eps_r = eps_inf + sum Re{beta_p}, the equilibrium
    relative permittivity seen by the field updates.
    """

    kappa: np.ndarray
    beta: np.ndarray
    eps_r: float
    eps_inf: float
    dt_seconds: float

    @property
    def n_poles(self) -> int:
        return len(self.kappa)


def permittivity(model: PoleResidueModel, omega):
    """Complex permittivity in F/m at angular frequency ``omega`` (rad/s).

    Accepts a scalar or array. Negative frequencies are allowed for formal
    conjugate-symmetry checks; non-finite input is rejected.
    """
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("omega must be finite")
    rel = np.full(w.shape, complex(model.eps_inf))
    jw = 1j * w
    for p in model.poles:
        c = complex(p.residue) / HBAR_OVER_E
        a = complex(p.pole) / HBAR_OVER_E
        rel = rel + c / (jw - a) + np.conj(c) / (jw - np.conj(a))
    out = EPS0 * rel
    return complex(out) if np.isscalar(omega) else out


def relative_permittivity(model: PoleResidueModel, omega):
    """Dimensionless complex permittivity eps(omega)/eps0."""
    out = np.asarray(permittivity(model, omega)) / EPS0
    return complex(out) if np.isscalar(omega) else out


def refractive_index(model: PoleResidueModel, omega):
    """Refractive index and extinction coefficient (n, k) at ``omega`` (rad/s).

    The complex index is n - jk under e^{+jwt}; the square-root branch is
    chosen so k >= 0 (waves decay into the medium). Where the fitted model is
    locally non-passive this forces n < 0; the branch choice does not affect
    slab transmittance, which is invariant under (n - jk) -> -(n - jk).
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("omega must be positive")
    root = np.sqrt(np.asarray(relative_permittivity(model, w), dtype=complex))
    flip = root.imag > 0
    root = np.where(flip, -root, root)
    n = root.real
    k = -root.imag
    if np.isscalar(omega):
        return float(n), float(k)
    return n, k


def debye_pole(delta_eps: float, tau_relax: float) -> PolePair:
    """Pole pair for a Debye relaxation of strength ``delta_eps`` and time ``tau_relax`` (s)."""
    if not tau_relax > 0:
        raise ValueError(f"tau_relax must be positive, got {tau_relax}")
    c = 0.5 * delta_eps / tau_relax * HBAR_OVER_E
    a = -1.0 / tau_relax * HBAR_OVER_E
    return PolePair(residue=complex(c), pole=complex(a))


def lorentz_pole(delta_eps: float, omega_p: float, delta_damp: float) -> PolePair:
    """Pole pair for a Lorentz resonance (underdamped: omega_p > delta_damp >= 0).

    ``omega_p`` and ``delta_damp`` are in rad/s.
    """
    if delta_damp < 0:
        raise ValueError(f"delta_damp must be non-negative, got {delta_damp}")
    if not omega_p > delta_damp:
        raise ValueError(
            f"underdamped resonance requires omega_p > delta_damp, "
            f"got omega_p={omega_p}, delta_damp={delta_damp}"
        )
    root = np.sqrt(omega_p**2 - delta_damp**2)
    c = 1j * delta_eps * omega_p**2 / (2.0 * root) * HBAR_OVER_E
    a = (-delta_damp - 1j * root) * HBAR_OVER_E
    return PolePair(residue=complex(c), pole=complex(a))


def dimensionless(model: PoleResidueModel, dt_seconds: float) -> DimensionlessPoles:
    """Scale the model's pole constants by the time step: alpha_p = a_p*dt*e/hbar."""
    if not dt_seconds > 0:
        raise ValueError(f"dt_seconds must be positive, got {dt_seconds}")
    scale = dt_seconds / HBAR_OVER_E
    alpha = np.array([complex(p.pole) * scale for p in model.poles], dtype=complex)
    chi = np.array([complex(p.residue) * scale for p in model.poles], dtype=complex)
    return DimensionlessPoles(alpha=alpha, chi=chi, dt_seconds=dt_seconds)


def update_coefficients(
    dp: DimensionlessPoles, eps_inf: float, tau: float = 0.5
) -> UpdateCoefficients:
    """Per-step recursion constants kappa_p, beta_p and equilibrium eps_r."""
    denom = 1.0 - dp.alpha * tau
    if np.any(np.abs(denom) < _SINGULAR_TOL):
        raise ValueError("singular pole: |1 - alpha*tau| below tolerance")
    kappa = (1.0 + dp.alpha * tau) / denom
    beta = dp.chi / denom
    eps_r = float(eps_inf + beta.real.sum()) if len(beta) else float(eps_inf)
    return UpdateCoefficients(
        kappa=kappa, beta=beta, eps_r=eps_r, eps_inf=float(eps_inf),
        dt_seconds=dp.dt_seconds,
    )


def solver_coefficients(
    model: PoleResidueModel | None, dt_seconds: float
) -> UpdateCoefficients:
    """Convenience pipeline: model -> dimensionless -> update coefficients.

    ``model=None`` yields vacuum coefficients (no poles, eps_r = 1).
    """
    if model is None:
        model = PoleResidueModel(eps_inf=1.0, name="vacuum")
    return update_coefficients(dimensionless(model, dt_seconds), model.eps_inf)


# Six-pole fit to evaporated-silver optical constants (Palik data), pole
# constants in eV, valid for photon energies of roughly 0.125-5 eV.
#
# The residue of the sixth pair is stored with Im{c_6} = +81.29 eV. The
# tabulated source value carries the opposite sign, which makes the model
# strongly non-passive (Im eps up to +4.8 around 9 eV): a slab of it lases,
# and time-domain runs blow up regardless of scheme. With the sign corrected
# the model is passive at every frequency (max Im eps <= 0 over 0.05-1000 eV),
# which is clearly what the fit was constrained to. The as-printed constants
# remain available as "ag-palik-6pole-printed" for comparison.
_AG_PALIK_POLES = (
    (5.987e-1 + 4.195e3j, -2.502e-2 - 8.626e-3j),
    (-2.211e-1 + 2.680e-1j, -2.021e-1 - 9.407e-1j),
    (-4.240 + 7.324e-2j, -1.467e1 - 1.338j),
    (6.391e-1 - 7.186e-2j, -2.997e-1 - 4.034j),
    (1.806 + 4.563j, -1.896 - 4.808j),
    (1.443 + 8.129e1j, -9.396 - 6.477j),
)

_AG_PALIK_POLES_PRINTED = tuple(
    (c if i != 5 else np.conj(c), a) for i, (c, a) in enumerate(_AG_PALIK_POLES)
)


def ag_palik_model(eps_inf: float = 1.0) -> PoleResidueModel:
    """Six-pole silver model fit to evaporated-silver (Palik) measurements.

    ``eps_inf`` is a calibration knob: the pole set carries the full
    dispersive response and 1.0 matches the published n/k behaviour.
    """
    poles = tuple(PolePair(residue=complex(c), pole=complex(a)) for c, a in _AG_PALIK_POLES)
    return PoleResidueModel(eps_inf=eps_inf, poles=poles, name="ag-palik-6pole")


def ag_palik_model_printed(eps_inf: float = 1.0) -> PoleResidueModel:
    """The silver table exactly as printed in its source (non-passive; unstable in slabs)."""
    poles = tuple(
        PolePair(residue=complex(c), pole=complex(a)) for c, a in _AG_PALIK_POLES_PRINTED
    )
    return PoleResidueModel(eps_inf=eps_inf, poles=poles, name="ag-palik-6pole-printed")


_NAMED_MODELS = {
    "ag-palik-6pole": ag_palik_model,
    "ag-palik-6pole-printed": ag_palik_model_printed,
}


def model_by_name(name: str, eps_inf: float = 1.0) -> PoleResidueModel:
    """Look up a built-in material by registry name."""
    try:
        factory = _NAMED_MODELS[name]
    except KeyError:
        known = ", ".join(sorted(_NAMED_MODELS))
        raise ValueError(f"unknown material {name!r}; known models: {known}") from None
    return factory(eps_inf=eps_inf)


def model_from_dict(cfg: dict) -> PoleResidueModel:
    """Build a model from a config mapping.

    Expected keys: ``eps_inf`` (real) and ``poles`` as a list of
    ``{c_re, c_im, a_re, a_im}`` entries in eV. Optional ``name``.
    """
    try:
        eps_inf = float(cfg["eps_inf"])
    except KeyError:
        raise ValueError("material config requires 'eps_inf'") from None
    poles = []
    for entry in cfg.get("poles", []):
        try:
            c = complex(float(entry["c_re"]), float(entry["c_im"]))
            a = complex(float(entry["a_re"]), float(entry["a_im"]))
        except KeyError as missing:
            raise ValueError(f"pole entry missing field {missing}") from None
        poles.append(PolePair(residue=c, pole=a))
    return PoleResidueModel(eps_inf=eps_inf, poles=tuple(poles), name=str(cfg.get("name", "")))


def model_to_dict(model: PoleResidueModel) -> dict:
    """Inverse of :func:`model_from_dict` (used for config echo and worker dispatch)."""
    return {
        "name": model.name,
        "eps_inf": model.eps_inf,
        "poles": [
            {
                "c_re": p.residue.real, "c_im": p.residue.imag,
                "a_re": p.pole.real, "a_im": p.pole.imag,
            }
            for p in model.poles
        ],
    }
