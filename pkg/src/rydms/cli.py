"""Command-line entry point: ``rydms <command> [options]``.

Commands write their results into ``--out`` (default ``./out``) and print a
short summary.  Exit status is 0 on success, 2 for usage or configuration
errors and 1 when a solver fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .analysis import analyze_bell, fit_c6, write_parity_csv
from .dynamics import accumulate_phi_j
from .errors import (ConfusionError, ConvergenceError, DegeneracyError, DomainError,
                     IntegratorError, LeakageError)
from .hamiltonian import DriveParams
from .noise import decay_probability, mc_fidelity, write_shot_log
from .sequence import (gate_summary, ideal_output, local_invariants, make_echo_gate,
                       make_noecho_gate, ms_ideal)
from .spectrum import spectrum_curve, write_curve_csv
from .units import MHZ, UM, US

SOLVER_ERRORS = (ConvergenceError, DegeneracyError, DomainError, IntegratorError,
                 LeakageError, ConfusionError)


class UsageError(Exception):
    """Bad command-line input (exit status 2)."""


# -- output helpers ---------------------------------------------------------

def _atomic(path: Path, write) -> Path:
    """Call ``write(tmp_path)`` and move the result onto ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _write_json(path: Path, data: dict) -> Path:
    text = json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n"
    return _atomic(path, lambda tmp: Path(tmp).write_text(text))


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not serializable: {type(x).__name__}")


# -- commands ---------------------------------------------------------------

def _gate(run: cfgmod.Run, target=None):
    target = run.phi_j_target if target is None else target
    make = make_echo_gate if run.echo else make_noecho_gate
    kw = {"phi0": run.raman_phase}
    return make(target, run.ramp, run.interaction, run.drive, **kw)


def _sweep_values(args, run: cfgmod.Run):
    sw = run.raw["spectrum"]
    if args.r_range is not None:
        kind, rng = "r", args.r_range
    elif args.delta_range is not None:
        kind, rng = "delta", args.delta_range
    else:
        kind = sw["sweep"]
        rng = sw["r_range_um"] if kind == "r" else sw["delta_range_MHz"]
    start, stop, n = rng
    n = int(n)
    if n < 1:
        raise UsageError("sweep needs at least one point")
    if n > 1 and start == stop:
        raise UsageError("sweep range is empty (start equals stop)")
    vals = np.linspace(float(start), float(stop), n)
    if kind == "r":
        if np.any(vals <= 0):
            raise UsageError("separations must be positive")
        return kind, vals * UM
    return kind, vals * MHZ


def cmd_spectrum(args, run: cfgmod.Run, out: Path) -> dict:
    kind, vals = _sweep_values(args, run)
    rows = spectrum_curve(run.drive, run.interaction, kind, vals)
    path = _atomic(out / "spectrum.csv", lambda tmp: write_curve_csv(tmp, rows))
    return {"file": str(path), "sweep": kind, "points": len(rows)}


def cmd_gate(args, run: cfgmod.Run, out: Path) -> dict:
    """Build the gate and report its metrics.

    ``phi_j`` is ``int J dt`` of one dressing pulse as built (the MS angle the
    echo implements); ``phi_j_interferometric`` is the same angle read off the
    propagated unitary.
    """
    seq = _gate(run)
    target = run.phi_j_target
    summ = gate_summary(seq, run.interaction, run.drive, target=target)
    pulses = seq.pulses
    hold = pulses[0].schedule.t_hold if pulses else 0.0
    bell = ideal_output(-np.pi / 2)
    got = ms_ideal(target) @ np.array([0, 0, 0, 1], dtype=complex)
    g1, g2 = local_invariants(ms_ideal(target))
    phi = (accumulate_phi_j(pulses[0].schedule, run.interaction, run.drive)
           if pulses and pulses[0].duration > 0 else 0.0)
    per_pulse = 1.0 if run.echo else 0.5  # the merged no-echo pulse carries twice the angle
    result = {
        "phi_j_target": target,
        "phi_j": phi * per_pulse,
        "phi_j_interferometric": (phi + np.angle(np.exp(1j * (summ["phi_j"] - phi)))) * per_pulse,
        "leakage": summ["leakage"],
        "fidelity_to_ms": summ["fidelity_to_ms"],
        "entangling_power": summ["entangling_power"],
        "decay_probability": decay_probability(seq, run.interaction, run.drive,
                                               run.noise.rydberg_lifetime),
        "ms_angle_error": abs(abs(target) - np.pi / 2) / (np.pi / 2),
        "bell_infidelity": float(1 - abs(np.vdot(bell, got)) ** 2),
        "local_invariants": {"G1": [g1.real, g1.imag], "G2": float(g2)},
        "hold_time_us": hold / US,
        "duration_us": seq.duration / US,
        "echo": run.echo,
    }
    result["file"] = str(_write_json(out / "gate.json", result))
    return result


def _phases(run: cfgmod.Run):
    par = run.raw["parity"]
    if "phis_rad" in par:
        phis = np.asarray(par["phis_rad"], dtype=float)
    else:
        phis = np.linspace(0, 2 * np.pi, par["n_phases"], endpoint=False)
    if phis.size == 0:
        raise UsageError("parity scan has no analysis phases")
    return phis


def cmd_parity(args, run: cfgmod.Run, out: Path) -> dict:
    seq = _gate(run)
    par = run.raw["parity"]
    noise = run.noise if par["noise"] else None
    res = analyze_bell(seq, _phases(run), run.measurement, run.interaction, noise,
                       n_mc=par["n_mc"], seed=run.seed)
    path = _atomic(out / "parity.csv",
                   lambda tmp: write_parity_csv(tmp, [res["raw"], res["corrected"]]))
    summary = {
        "F": res["F"], "F_SPAM": res["F_SPAM"], "eps_op": res["eps_op"],
        "populations_raw": res["populations_raw"], "populations": res["populations"],
        "fit_raw": res["fit_raw"].to_dict(), "fit": res["fit"].to_dict(),
        "csv": str(path),
    }
    summary["file"] = str(_write_json(out / "parity.json", summary))
    return summary


def cmd_mc(args, run: cfgmod.Run, out: Path) -> dict:
    seq = _gate(run)
    res = mc_fidelity(run.n_shots, run.noise, seq, run.interaction, run.drive,
                      method=run.method, keep_samples=args.shot_log)
    summary = res.to_dict(run.noise)
    summary["infidelity"] = res.infidelity
    if args.shot_log:
        summary["shot_log"] = str(_atomic(out / "shots.csv", lambda tmp: write_shot_log(tmp, res)))
    summary["file"] = str(_write_json(out / "mc.json", summary))
    return summary


def read_j_csv(path):
    """``r_um, J_MHz[, sigma_MHz]`` table -> SI arrays (r, J, sigma or None)."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:2] != ["r_um", "J_MHz"] or header[2:] not in ([], ["sigma_MHz"]):
            raise UsageError(f"{path}:1: expected header r_um,J_MHz[,sigma_MHz]")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or not "".join(rec).strip():
                continue
            if len(rec) != len(header):
                raise UsageError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            try:
                vals = [float(x) for x in rec]
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(vals)):
                raise UsageError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise UsageError(f"{path}: no data rows")
    arr = np.array(rows)
    sigma = arr[:, 2] * MHZ if arr.shape[1] == 3 else None
    return arr[:, 0] * UM, arr[:, 1] * MHZ, sigma


def cmd_fit_c6(args, run: cfgmod.Run, out: Path) -> dict:
    r, j, sigma = read_j_csv(args.data)
    delta = run.raw["fit_c6"]["delta_MHz"] * MHZ
    d = DriveParams(run.drive.omega1, run.drive.omega2, delta, delta)
    try:
        fit = fit_c6(r, j, d, sigma, axis=run.interaction.axis)
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise UsageError(f"{args.data}: {exc}") from None
    gu = 2 * np.pi * 1e9 * UM**6
    summary = {"c6_GHz_um6": fit.c6 / gu, "c6_se_GHz_um6": fit.c6_se / gu,
               "iterations": fit.iterations, "n_points": fit.n_points,
               "weighted": sigma is not None}
    summary["file"] = str(_write_json(out / "fit_c6.json", summary))
    return summary


COMMANDS = {"spectrum": cmd_spectrum, "gate": cmd_gate, "parity": cmd_parity,
            "mc": cmd_mc, "fit-c6": cmd_fit_c6}


# -- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rydms", description=__doc__.splitlines()[0])
    ap.add_argument("--print-default-config", action="store_true",
                    help="print the default YAML configuration and exit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML configuration file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, help="override the random seed")
    sub = ap.add_subparsers(dest="command", metavar="command")

    sp = sub.add_parser("spectrum", parents=[common], help="dressed energies and J versus r or delta")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--r-range", nargs=3, type=float, metavar=("START", "STOP", "N"),
                     help="separation sweep in um")
    grp.add_argument("--delta-range", nargs=3, type=float, metavar=("START", "STOP", "N"),
                     help="detuning sweep in MHz")

    gp = sub.add_parser("gate", parents=[common], help="build and characterize the echo gate")
    gp.add_argument("--phi-j", type=float, help="target MS angle in rad")
    gp.add_argument("--echo", action=argparse.BooleanOptionalAction, default=None)

    pp = sub.add_parser("parity", parents=[common], help="simulated parity scan and Bell fidelity")
    pp.add_argument("--noise", action=argparse.BooleanOptionalAction, default=None,
                    help="average the scan over noisy shots")

    mp = sub.add_parser("mc", parents=[common], help="Monte Carlo gate fidelity")
    mp.add_argument("--shots", type=int, help="number of shots")
    mp.add_argument("--method", choices=["adiabatic", "schrodinger"])
    for ch in ("doppler", "position", "laser", "decay"):
        mp.add_argument(f"--{ch}", action=argparse.BooleanOptionalAction, default=None,
                        help=f"toggle the {ch} channel")
    mp.add_argument("--shot-log", action="store_true", help="also write shots.csv")

    fp = sub.add_parser("fit-c6", parents=[common], help="fit c6 to measured J(r)")
    fp.add_argument("data", type=Path, help="CSV with r_um,J_MHz[,sigma_MHz]")
    return ap


def _overrides(args) -> dict:
    over: dict = {}

    def put(section, key, val):
        if val is not None:
            over.setdefault(section, {})[key] = val

    if args.seed is not None:
        over["seed"] = args.seed
    if args.command == "gate":
        put("gate", "phi_j_target_rad", args.phi_j)
        put("gate", "echo", args.echo)
    elif args.command == "parity":
        put("parity", "noise", args.noise)
    elif args.command == "mc":
        put("noise", "n_shots", args.shots)
        put("noise", "method", args.method)
        chans = {c: getattr(args, c) for c in ("doppler", "position", "laser", "decay")
                 if getattr(args, c) is not None}
        if chans:
            over.setdefault("noise", {})["channels"] = chans
    return over


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.print_default_config:
        sys.stdout.write(cfgmod.dump_defaults())
        return 0
    if args.command is None:
        ap.print_usage(sys.stderr)
        return 2
    try:
        doc = cfgmod.load(args.config)
        doc = cfgmod._merge(doc, _overrides(args))
        cfgmod.validate(doc)
        run = cfgmod.build(doc)
        summary = COMMANDS[args.command](args, run, args.out)
    except (cfgmod.ConfigError, UsageError) as exc:
        print(f"rydms: error: {exc}", file=sys.stderr)
        return 2
    except SOLVER_ERRORS as exc:
        print(f"rydms: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True, default=_jsonable))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
