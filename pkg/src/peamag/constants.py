"""Physical constants and default operating parameters.

All quantities SI unless stated. Phases are radians, fields tesla, times seconds.
"""

import math

# electron gyromagnetic ratio of the NV spin, angular units
GAMMA_E = 2 * math.pi * 28e9  # rad s^-1 T^-1

MU0_OVER_4PI = 1e-7  # T m / A

# magnetic dipole moments, J/T
DIPOLE_MOMENTS = {
    "electron": 9.285e-24,
    "proton": 1.411e-26,
    "carbon13": 3.54e-27,
}

# default pulse-sequence parameters
T_MIN_DEFAULT = 20e-9  # s, shortest free-evolution unit
T2_STAR_DEFAULT = 1200e-9  # s, Gaussian dephasing time

# default photon-collection efficiencies per readout shot
ALPHA0_DEFAULT = 0.010  # mean photons for |0> (bright)
ALPHA1_DEFAULT = 0.007  # mean photons for |1> (dark)

# default Bayesian grid resolution (power of two recommended so that binary
# phase separations 2pi/2^K land on whole numbers of grid cells)
N_GRID_DEFAULT = 4096
