"""Two-atom Molmer-Sorensen gate by adiabatic Rydberg dressing.

Subpackages are plain modules; the most used entry points are re-exported
here.  Internal units are SI with angular frequencies (see :mod:`rydms.units`).
"""

from .analysis import (MeasurementModel, ParityDataset, analyze_bell, apply_confusion,
                       bell_fidelity, fit_c6, fit_parity, parity_scan)
from .core import Level, basis_index, ket, spin_y_collective
from .dynamics import (AdiabaticityWarning, PulseControls, accumulate_phi_j,
                       adiabaticity_report, propagate, solve_hold_time)
from .errors import (ConfusionError, ConvergenceError, DegeneracyError, DomainError,
                     IntegratorError, LeakageError)
from .hamiltonian import DriveParams, InteractionParams, RampSchedule, h_total
from .noise import NoiseConfig, OUNoise, TablePSD, WhiteNoise, decay_probability, mc_fidelity
from .sequence import (GateSequence, effective_unitary, entangling_power, gate_fidelity,
                       is_perfect_entangler, make_echo_gate, make_noecho_gate, ms_ideal)
from .spectrum import DressedSpectrum, dressed_branches, entangling_energy, spectrum_curve

__version__ = "0.1.0"

__all__ = [
    "AdiabaticityWarning", "ConfusionError", "ConvergenceError", "DegeneracyError",
    "DomainError", "DressedSpectrum", "DriveParams", "GateSequence", "IntegratorError",
    "InteractionParams", "LeakageError", "Level", "MeasurementModel", "NoiseConfig",
    "OUNoise", "ParityDataset", "PulseControls", "RampSchedule", "TablePSD", "WhiteNoise",
    "accumulate_phi_j", "adiabaticity_report", "analyze_bell", "apply_confusion",
    "basis_index", "bell_fidelity", "decay_probability", "dressed_branches",
    "effective_unitary", "entangling_energy", "entangling_power", "fit_c6", "fit_parity",
    "gate_fidelity", "h_total", "is_perfect_entangler", "ket", "make_echo_gate",
    "make_noecho_gate", "mc_fidelity", "ms_ideal", "parity_scan", "propagate",
    "solve_hold_time", "spectrum_curve", "spin_y_collective",
]
