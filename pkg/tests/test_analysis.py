import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydms.analysis import (CSV_HEADER, MeasurementModel, ParityDataset, apply_confusion,
                            bell_fidelity, fit_c6, fit_parity, outcome_probabilities, parity,
                            parity_scan, population_measurement, read_parity_csv,
                            write_parity_csv)
from rydms.errors import ConfusionError
from rydms.hamiltonian import DriveParams, InteractionParams
from rydms.sequence import analysis_rotation
from rydms.spectrum import entangling_energy
from rydms.units import GHZ_UM6, MHZ, UM

from conftest import OMEGA

prob = st.floats(0.0, 1.0)


def _bell(coherence=1.0):
    """Density matrix of (|11> - i|00>)/sqrt(2) with reduced coherence."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = -0.5j * coherence
    rho[3, 0] = np.conj(rho[0, 3])
    return rho


def _fringe(rho, phis):
    """Outcome probabilities after R(pi/2, phi) on both atoms (oracle by matrices)."""
    out = []
    for phi in phis:
        r = analysis_rotation(phi)
        pops = np.real(np.diag(r @ rho @ r.conj().T))
        out.append(pops[[3, 2, 1, 0]])  # (00,01,10,11) -> (BB,BD,DB,DD)
    return np.array(out)


def test_outcome_order():
    # |11> is bright-bright, |00> dark-dark
    assert np.allclose(outcome_probabilities(np.array([0, 0, 0, 1.0])), [1, 0, 0, 0])
    assert np.allclose(outcome_probabilities(np.array([1.0, 0, 0, 0])), [0, 0, 0, 1])
    # |01>: atom 1 dark, atom 2 bright
    assert np.allclose(outcome_probabilities(np.array([0, 1.0, 0, 0])), [0, 0, 1, 0])
    assert parity(np.array([0.25, 0.25, 0.25, 0.25])) == 0


def test_confusion_matrix():
    m = MeasurementModel.experiment()
    c = m.confusion()
    assert np.allclose(c.sum(axis=0), 1)
    # a bright-bright pair is read as BB with p_b1 p_b2
    assert c[0, 0] == pytest.approx(0.939 * 0.908)
    assert m.contrast == pytest.approx((0.939 - 0.0162) * (0.908 - 0.0456))
    assert m.eps_op == pytest.approx(0.5 * (1 - 0.963**2))
    with pytest.raises(ValueError):
        MeasurementModel(p_b1=1.2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 1), min_size=4, max_size=4),
       st.floats(0.6, 1), st.floats(0.6, 1), st.floats(0, 0.3), st.floats(0, 0.3))
def test_forward_invert_identity(w, pb1, pb2, pd1, pd2):
    p = np.array(w) / np.sum(w)
    m = MeasurementModel(pb1, pb2, pd1, pd2)
    back = apply_confusion(apply_confusion(p, m, "forward"), m, "invert", clamp=False)
    assert np.allclose(back, p, atol=1e-10)


def test_parity_contrast_law():
    # parity of any outcome distribution shrinks exactly by the contrast factor
    m = MeasurementModel.experiment()
    rng = np.random.default_rng(0)
    p = rng.dirichlet(np.ones(4), size=20)
    pb = (m.p_b1 + m.p_d1 - 1) * (m.p_b2 + m.p_d2 - 1)
    # <Pi> = <z1 z2>: each z maps to (pb-pd) z + (pb+pd-1); check the z1 z2 term
    obs = apply_confusion(p, m, "forward")
    z1 = p[:, 0] + p[:, 1] - p[:, 2] - p[:, 3]
    z2 = p[:, 0] - p[:, 1] + p[:, 2] - p[:, 3]
    a1, b1 = m.p_b1 - m.p_d1, m.p_b1 + m.p_d1 - 1
    a2, b2 = m.p_b2 - m.p_d2, m.p_b2 + m.p_d2 - 1
    expect = a1 * a2 * parity(p) + a1 * b2 * z1 + b1 * a2 * z2 + b1 * b2
    assert np.allclose(parity(obs), expect)
    assert pb == pytest.approx(b1 * b2)


def test_inversion_errors_and_clamp():
    m = MeasurementModel(0.5, 0.9, 0.5, 0.1)
    with pytest.raises(ConfusionError):
        apply_confusion(np.full(4, 0.25), m, "invert")
    m = MeasurementModel.experiment()
    obs = apply_confusion(np.array([0.5, 0.0, 0.0, 0.5]), m, "forward")
    slightly_off = obs + np.array([2e-4, -2e-4, 0.0, 0.0])
    assert apply_confusion(slightly_off, m, "invert", clamp=False).min() < 0
    corrected = apply_confusion(slightly_off, m, "invert")
    assert np.all(corrected >= 0) and corrected.sum() == pytest.approx(1)
    # an observation no true distribution can produce
    with pytest.raises(ConfusionError):
        apply_confusion(np.array([0.5, 0.0, 0.0, 0.5]), m, "invert")
    with pytest.raises(ValueError):
        apply_confusion(np.full(4, 0.25), m, "sideways")


def test_fit_recovers_fringe():
    phis = np.linspace(0, np.pi, 9, endpoint=False)
    for coh in (1.0, 0.71, 0.2):
        fit = fit_parity(ParityDataset(phis, _fringe(_bell(coh), phis)))
        assert fit.amplitude == pytest.approx(coh, abs=1e-12)
        assert fit.offset == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_parity(ParityDataset(phis[:3], _fringe(_bell(), phis[:3])))
    # phases that repeat modulo pi carry no new information
    rep = np.array([0.1, 0.1 + np.pi, 0.4, 0.4 + np.pi])
    with pytest.raises(ValueError):
        fit_parity(ParityDataset(rep, _fringe(_bell(), rep)))


def test_bell_fidelity_arithmetic():
    m = MeasurementModel(p_pump1=0.9, p_pump2=0.8)
    out = bell_fidelity(0.45, 0.43, 0.7, m)
    eps = 0.5 * (1 - 0.72)
    assert out["F"] == pytest.approx(0.44 + 0.35 - eps)
    assert out["F_SPAM"] == pytest.approx(out["F"] / 0.72)
    assert bell_fidelity(0.5, 0.5, 1.0, MeasurementModel())["F"] == pytest.approx(1.0)


def test_simulated_scan_matches_oracle(echo_gate, pair):
    m = MeasurementModel.experiment()
    phis = np.linspace(0, np.pi, 7, endpoint=False)
    ds = parity_scan(echo_gate, phis, m, pair)
    ideal = _fringe(_bell(), phis)
    assert np.allclose(ds.probs, apply_confusion(ideal, m, "forward"), atol=1e-4)
    assert np.allclose(ds.corrected_by(m).probs, ideal, atol=1e-4)
    pops = population_measurement(echo_gate, m, pair)
    # the propagated MS angle is ~8e-3 rad off -pi/2, which tilts the populations
    assert np.allclose(apply_confusion(pops, m, "invert"), [0.5, 0, 0, 0.5], atol=5e-3)


def test_counting_noise_is_seeded(echo_gate, pair):
    m = MeasurementModel.experiment(n_shots=100)
    phis = np.linspace(0, np.pi, 5, endpoint=False)
    a = parity_scan(echo_gate, phis, m, pair, seed=3)
    b = parity_scan(echo_gate, phis, m, pair, seed=3)
    assert np.array_equal(a.probs, b.probs)
    assert np.allclose(a.probs * 100, np.round(a.probs * 100))
    with pytest.raises(ValueError):
        parity_scan(echo_gate, [], m, pair)


def test_parity_csv_round_trip(tmp_path):
    phis = np.linspace(0, np.pi, 4, endpoint=False)
    raw = ParityDataset(phis, _fringe(_bell(0.7), phis))
    cor = ParityDataset(phis, _fringe(_bell(0.9), phis), corrected=True)
    path = tmp_path / "p.csv"
    write_parity_csv(path, [raw, cor])
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    back = read_parity_csv(path)
    assert [d.corrected for d in back] == [False, True]
    assert np.allclose(back[0].probs, raw.probs) and np.allclose(back[1].phis, phis)
    path.write_text(",".join(CSV_HEADER) + "\n0.1,0.2,0.3,0.4\n")
    with pytest.raises(ValueError, match=":2:"):
        read_parity_csv(path)


# -- c6 ---------------------------------------------------------------------

def _synthetic(c6, r):
    d = DriveParams.symmetric(OMEGA, -0.2 * MHZ)
    return d, entangling_energy(d, InteractionParams(np.full(r.size, c6), r))


def test_c6_round_trip_small():
    r = np.linspace(2.2, 4.5, 8) * UM
    d, j = _synthetic(25 * GHZ_UM6, r)
    fit = fit_c6(r, j, d)
    assert fit.c6 / GHZ_UM6 == pytest.approx(25, rel=1e-4)
    assert fit.n_points == 8


def test_c6_duplicates_and_errors():
    r = np.repeat(np.linspace(2.2, 4.0, 4), 2) * UM
    d, j = _synthetic(20 * GHZ_UM6, r)
    assert fit_c6(r, j, d).c6 / GHZ_UM6 == pytest.approx(20, rel=1e-4)
    with pytest.raises(ValueError):
        fit_c6(r[:3], j[:2], d)
    with pytest.raises(ValueError):
        fit_c6(np.full(5, 3 * UM), j[:5], d)
    with pytest.raises(ValueError):
        fit_c6(r, j, d, sigma=np.zeros_like(j))


def test_tabulated_model_matches_exact():
    # the fit evaluates J through a spline in V = c6 / r^6
    from rydms.analysis import _j_model
    rng = np.random.default_rng(4)
    d = DriveParams.symmetric(OMEGA, 2 * MHZ)
    r = rng.uniform(1.0, 12.0, 40) * UM
    c6 = np.array([5.0, 25.0, 600.0]) * GHZ_UM6
    exact = entangling_energy(d, InteractionParams(c6[:, None] * np.ones_like(r), r[None, :]))
    got = _j_model(c6, r, d, "parallel")
    assert np.allclose(got, exact, rtol=1e-7, atol=1e-9 * OMEGA)
    # separations far outside the table fall back to direct evaluation
    far = _j_model(np.array([25 * GHZ_UM6]), np.array([400 * UM]), d, "parallel")
    assert far[0, 0] == pytest.approx(float(entangling_energy(
        d, InteractionParams(25 * GHZ_UM6, 400 * UM))), rel=1e-12)
