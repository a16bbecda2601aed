"""Physical constants (SI-2019 exact values where applicable)."""

# Speed of light in vacuum, m/s.
C0 = 299_792_458.0

# Vacuum permittivity, F/m.
EPS0 = 8.8541878128e-12

# Reduced Planck constant over elementary charge, eV*s.
# Multiplying an energy in eV by 1/HBAR_OVER_E gives angular frequency in rad/s.
HBAR_OVER_E = 6.582119569e-16

# Planck constant over elementary charge, eV*s.
# photon energy [eV] = H_OVER_E * frequency [Hz]
H_OVER_E = 4.135667696e-15
