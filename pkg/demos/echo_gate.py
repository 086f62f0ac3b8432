"""Build the echo gate at phi_J = -pi/2 and print its figures of merit."""

import numpy as np

from rydms import (DriveParams, InteractionParams, RampSchedule, decay_probability,
                   effective_unitary, entangling_power, gate_fidelity, make_echo_gate, ms_ideal)
from rydms.units import GHZ_UM6, MHZ, NS, UM, US

drive = DriveParams.symmetric(2.95 * MHZ, 2.0 * MHZ)
pair = InteractionParams(25 * GHZ_UM6, 2.6 * UM)
template = RampSchedule(3 * US, 0.0, 3 * US, 2.95 * MHZ, 16 * MHZ, 2.0 * MHZ)

gate = make_echo_gate(-np.pi / 2, template, pair, drive)
u = effective_unitary(gate, pair)
print(f"hold per pulse     {gate.pulses[0].schedule.t_hold / NS:.1f} ns")
print(f"sequence length    {gate.duration / US:.2f} us")
print(f"fidelity to MS     {gate_fidelity(ms_ideal(-np.pi / 2), u):.6f}")
print(f"entangling power   {entangling_power(u):.5f} (2/9 = {2 / 9:.5f})")
print(f"decay probability  {decay_probability(gate, pair):.2e}")
print(np.round(u, 3))
