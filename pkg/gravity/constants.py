"""
Shared physical constants.

Every module imports its constants from here so that the same bit-identical
values flow through the basis, the dynamics and the prediction calculators.
"""
from scipy import constants as _codata

HBAR = _codata.hbar                  # J s
GRAVITATIONAL_CONSTANT = _codata.G   # m^3 / (kg s^2)
NEUTRON_MASS = 1.67492749e-27        # kg
PLANCK_MASS = (_codata.hbar * _codata.c / _codata.G) ** 0.5  # kg
ELECTRON_VOLT = _codata.eV           # J
PICO_ELECTRON_VOLT = 1e-12 * _codata.eV

NEUTRON_LIFETIME = 881.5             # s
STANDARD_GRAVITY = 9.81              # m/s^2
