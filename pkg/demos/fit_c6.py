"""Recover c6 from synthetic J+(r) data with 5 % noise."""

import numpy as np

from rydms import DriveParams, InteractionParams, entangling_energy, fit_c6
from rydms.units import GHZ_UM6, MHZ, UM

drive = DriveParams.symmetric(2.95 * MHZ, -0.2 * MHZ)
r = np.linspace(2.2, 4.5, 10) * UM
j = entangling_energy(drive, InteractionParams(np.full(r.size, 25 * GHZ_UM6), r))
sigma = 0.05 * np.abs(j)
data = j + sigma * np.random.default_rng(7).standard_normal(r.size)

fit = fit_c6(r, data, drive, sigma)
print(f"c6 = {fit.c6 / GHZ_UM6:.2f} +- {fit.c6_se / GHZ_UM6:.2f} GHz um^6 "
      f"after {fit.iterations} iterations")
