"""Simulated parity scan through the detection model and the fidelity estimator."""

import numpy as np

from rydms import (DriveParams, InteractionParams, MeasurementModel, RampSchedule,
                   analyze_bell, make_echo_gate)
from rydms.units import GHZ_UM6, MHZ, UM, US

drive = DriveParams.symmetric(2.95 * MHZ, 2.0 * MHZ)
pair = InteractionParams(25 * GHZ_UM6, 2.6 * UM)
template = RampSchedule(3 * US, 0.0, 3 * US, 2.95 * MHZ, 16 * MHZ, 2.0 * MHZ)
gate = make_echo_gate(-np.pi / 2, template, pair, drive)

phis = np.linspace(0, np.pi, 16, endpoint=False)
for name, m in (("perfect pumping", MeasurementModel(0.939, 0.908, 0.0162, 0.0456)),
                ("experimental", MeasurementModel.experiment(n_shots=400))):
    # counting noise can push corrected probabilities well below zero, so skip the clamp
    res = analyze_bell(gate, phis, m, pair, seed=1, clamp=m.n_shots is None)
    print(f"{name:16s} raw amplitude {res['fit_raw'].amplitude:.3f}  "
          f"corrected {res['fit'].amplitude:.3f}  F {res['F']:.3f}  F_SPAM {res['F_SPAM']:.3f}")
