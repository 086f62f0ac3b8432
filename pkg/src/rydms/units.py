"""Unit conversions used at the package boundary.

Internally every frequency is angular (rad/s), every time is in seconds and
every length is in metres.  Quoted lab values such as "2 pi x 2.95 MHz" map
directly onto ``2.95 * MHZ``.
"""

import numpy as np
from scipy import constants

TWO_PI = 2.0 * np.pi

MHZ = TWO_PI * 1e6
KHZ = TWO_PI * 1e3
US = 1e-6
NS = 1e-9
UM = 1e-6
NM = 1e-9
UK = 1e-6

#: c6 quoted as "X GHz um^6" (ordinary frequency) -> rad/s m^6
GHZ_UM6 = TWO_PI * 1e9 * UM**6

K_B = constants.k
CS133_MASS = 132.905451961 * constants.atomic_mass


def to_mhz(omega):
    """Angular frequency (rad/s) -> ordinary frequency in MHz."""
    return np.asarray(omega) / MHZ
