"""Entangling energy J+ versus separation next to its blockade limit."""

import numpy as np

from rydms import DriveParams, InteractionParams, entangling_energy
from rydms.spectrum import blockade_limit_j, blockade_radius
from rydms.units import GHZ_UM6, MHZ, UM

drive = DriveParams.symmetric(2.95 * MHZ, 0.0)
pair = InteractionParams(25 * GHZ_UM6, 2.6 * UM)
r = np.linspace(1.5, 6.0, 10) * UM
j = entangling_energy(drive, InteractionParams(np.full(r.size, pair.c6), r))

print(f"blockade radius {blockade_radius(drive.omega_bar, pair) / UM:.2f} um, "
      f"blockade-limit J {blockade_limit_j(drive.omega_bar, 0.0) / MHZ:.4f} MHz")
print(" r_um   J_MHz")
for ri, ji in zip(r / UM, j / MHZ):
    print(f"{ri:5.2f}  {ji:8.4f}")
