import numpy as np
import pytest

from rydms.errors import DegeneracyError, DomainError
from rydms.hamiltonian import DriveParams, InteractionParams, h_total, sector_blocks
from rydms.spectrum import (CURVE_COLUMNS, blockade_limit_j, blockade_radius, branch_energies,
                            dressed_branches, entangling_energy, single_atom_energy,
                            spectrum_curve, write_curve_csv)
from rydms.tracking import follow, follow_step
from rydms.units import GHZ_UM6, MHZ, UM

from conftest import C6, OMEGA


def _top_eig_j(omega, delta, v):
    """Oracle: for delta > 0 the + branch is the top eigenvalue of each block."""
    b = sector_blocks(omega, omega, delta, delta, v)
    e1 = np.linalg.eigvalsh(b["10"])[-1]
    e11 = np.linalg.eigvalsh(b["11"])[-1]
    return e11 - 2 * e1


def test_single_atom_closed_form():
    for delta in (-3 * MHZ, 0.0, 2 * MHZ):
        out = branch_energies(OMEGA, OMEGA, delta, delta, 0.0, "+")
        assert out["10"][0] == pytest.approx(single_atom_energy(OMEGA, delta, "+"), rel=1e-12)
        out = branch_energies(OMEGA, OMEGA, delta, delta, 0.0, "-")
        assert out["10"][0] == pytest.approx(single_atom_energy(OMEGA, delta, "-"), rel=1e-12)


def test_no_interaction_no_j():
    for delta in (-2 * MHZ, 0.0, 2 * MHZ):
        d = DriveParams.symmetric(OMEGA, delta)
        spec = dressed_branches(d, InteractionParams(0.0, 3 * UM))
        assert abs(spec.j_plus) < 1e-6 * OMEGA
        assert abs(spec.j_minus) < 1e-6 * OMEGA


@pytest.mark.parametrize("r_um", [2.0, 2.6, 3.5, 5.0])
def test_plus_branch_matches_eigen_oracle(r_um):
    d = DriveParams.symmetric(OMEGA, 2 * MHZ)
    p = InteractionParams(C6, r_um * UM)
    assert entangling_energy(d, p, "+") == pytest.approx(_top_eig_j(OMEGA, 2 * MHZ, p.strength),
                                                        rel=1e-9)


def test_sector_and_full_agree():
    d = DriveParams(OMEGA, 0.9 * OMEGA, 0.3 * MHZ, -0.2 * MHZ)
    p = InteractionParams(C6, 2.6 * UM)
    a = dressed_branches(d, p, "sector")
    b = dressed_branches(d, p, "full")
    assert a.j_plus == pytest.approx(b.j_plus, rel=1e-9)
    assert a.e11_minus == pytest.approx(b.e11_minus, rel=1e-9)
    assert np.allclose(np.abs(a.states["11+"]), np.abs(b.states["11+"]), atol=1e-8)


def test_eigenvector_is_eigenvector():
    d = DriveParams.symmetric(OMEGA, 0.0)
    p = InteractionParams(C6, 2.6 * UM)
    spec = dressed_branches(d, p)
    h = h_total(d, p)
    vec = spec.states["11+"]
    assert np.allclose(h @ vec, spec.e11_plus * vec, atol=1e-6 * OMEGA)


def test_blockade_limit_value():
    assert blockade_limit_j(OMEGA, 0.0) / MHZ == pytest.approx(-0.86403, abs=2e-5)
    # deep blockade: numeric J approaches the closed form
    d = DriveParams.symmetric(OMEGA, 0.0)
    j = entangling_energy(d, InteractionParams(C6, 1.0 * UM))
    assert j == pytest.approx(blockade_limit_j(OMEGA, 0.0), rel=2e-3)


def test_blockade_radius():
    p = InteractionParams(C6, 1 * UM)
    rb = blockade_radius(OMEGA, p)
    assert rb / UM == pytest.approx((25e3 / 2.95) ** (1 / 6))
    with pytest.raises(DomainError):
        blockade_radius(0.0, p)


def test_minus_branch_in_deep_blockade():
    # the minus branch is only defined by continuation inside the blockade radius
    p = InteractionParams(C6, 1 * UM)
    rb = blockade_radius(OMEGA, p)
    for delta in (-2 * MHZ, 0.0, 2 * MHZ):
        d = DriveParams.symmetric(OMEGA, delta)
        j = entangling_energy(d, p.with_r(0.3 * rb), "-")
        assert j == pytest.approx(blockade_limit_j(OMEGA, delta, "-"), rel=1e-2)


def test_plus_branch_smooth_in_r():
    r = np.linspace(2.0, 5.0, 121) * UM
    for delta in (-5 * MHZ, 0.0, 5 * MHZ):
        d = DriveParams.symmetric(OMEGA, delta)
        j = entangling_energy(d, InteractionParams(C6 * np.ones_like(r), r))
        second = np.abs(np.diff(j, 2))
        assert second.max() < 0.05 * np.abs(j).max()
        assert np.all(np.abs(j) <= np.abs(blockade_limit_j(OMEGA, delta)) * 1.5)


def test_plus_branch_smooth_in_delta():
    deltas = np.linspace(-5, 5, 201) * MHZ
    d = DriveParams(OMEGA, OMEGA, deltas, deltas)
    j = entangling_energy(d, InteractionParams(C6, 2.6 * UM))
    assert np.abs(np.diff(j, 2)).max() < 0.01 * np.abs(j).max()


def test_array_broadcasting():
    r = np.array([2.0, 3.0]) * UM
    d = DriveParams.symmetric(OMEGA, 2 * MHZ)
    j = entangling_energy(d, InteractionParams(np.full(2, C6), r))
    single = [entangling_energy(d, InteractionParams(C6, x)) for x in r]
    assert np.allclose(j, single)


def test_branch_argument():
    with pytest.raises(ValueError):
        entangling_energy(DriveParams.symmetric(OMEGA, 0.0), InteractionParams(C6, 3 * UM), "x")


# -- tracking ---------------------------------------------------------------

def test_follow_through_avoided_crossing():
    # |1> starts on the upper level at x = -2; fine steps follow the adiabatic
    # branch through the anticrossing, ending on the upper level again
    g = 0.1
    def h_at(k):
        x = -2 + 4 * k / 400
        return np.array([[x, g], [g, -x]])
    e, v = follow(h_at, 401, np.array([0.0, 1.0]))
    assert e == pytest.approx(np.sqrt(4 + g * g))
    assert abs(v[0]) > 0.99


def test_follow_step_tie_raises():
    h = np.diag([1.0, 2.0])
    with pytest.raises(DegeneracyError):
        follow_step(h, np.array([1.0, 1.0]) / np.sqrt(2))


def test_follow_step_projects_degenerate_cluster():
    h = np.diag([1.0, 1.0, 2.0])
    v = np.array([0.6, 0.8, 0.0])
    e, vec, *_ = follow_step(h, v)
    assert e == pytest.approx(1.0)
    assert abs(np.vdot(vec, v)) == pytest.approx(1.0)


# -- curves -----------------------------------------------------------------

def test_curve_rows_and_determinism(tmp_path):
    d = DriveParams.symmetric(OMEGA, 0.0)
    p = InteractionParams(C6, 2.6 * UM)
    rows = spectrum_curve(d, p, "r", np.array([2.6]) * UM)
    assert rows[0]["J_plus_MHz"] == pytest.approx(entangling_energy(d, p) / MHZ)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    rows = spectrum_curve(d, p, "delta", np.linspace(-1, 1, 5) * MHZ)
    write_curve_csv(a, rows)
    write_curve_csv(b, spectrum_curve(d, p, "delta", np.linspace(-1, 1, 5) * MHZ))
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == ",".join(("delta_MHz",) + CURVE_COLUMNS)
    with pytest.raises(ValueError):
        spectrum_curve(d, p, "r", [])
    with pytest.raises(ValueError):
        spectrum_curve(d, p, "omega", [1.0])
