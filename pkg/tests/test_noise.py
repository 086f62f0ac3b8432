import numpy as np
import pytest
from scipy import constants

from rydms.dynamics import PulseControls
from rydms.noise import (SHOT_LOG_COLUMNS, NoiseConfig, OUNoise, TablePSD, WhiteNoise,
                         decay_probability, doppler_sigma, laser_trajectory, mc_fidelity,
                         position_sigma, psd_variance, sample_shot, shot_output_states,
                         shot_rng, write_shot_log)
from rydms.sequence import (effective_unitary, gate_fidelity, make_noecho_gate, run_sequence)
from rydms.core import to_qubit
from rydms.units import KHZ, MHZ, NS, UK, UM, US


@pytest.fixture(scope="module")
def noecho_gate(template, pair, drive):
    return make_noecho_gate(-np.pi / 2, template, pair, drive)


def test_thermal_widths():
    m = 132.905451961 * constants.atomic_mass
    v_rms = np.sqrt(constants.k * 10e-6 / m)
    assert doppler_sigma(10 * UK, 2 * np.pi / 319e-9) == pytest.approx(2 * np.pi / 319e-9 * v_rms)
    assert doppler_sigma(10 * UK, 2 * np.pi / 319e-9) / KHZ == pytest.approx(78.4, abs=0.1)
    assert position_sigma(10 * UK, 2 * np.pi * 34e3) / UM == pytest.approx(0.1170, abs=5e-4)
    assert doppler_sigma(0.0, 1.0) == 0


def test_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(temperature=-1)
    with pytest.raises(ValueError):
        NoiseConfig(rydberg_lifetime=0)
    with pytest.raises(ValueError):
        NoiseConfig(decayed_score=2)
    with pytest.raises(ValueError):
        NoiseConfig().only("doppler", "gravity")
    cfg = NoiseConfig().only("doppler")
    assert cfg.doppler and not (cfg.position or cfg.laser or cfg.decay)
    q = NoiseConfig.quiet(seed=4)
    assert q.seed == 4 and not q.doppler
    assert NoiseConfig(laser_model=OUNoise(1.0, 1e-6)).to_dict()["laser_model"]["kind"] == "OUNoise"
    with pytest.raises(ValueError):
        OUNoise(1.0, 0.0)
    with pytest.raises(ValueError):
        TablePSD((2.0, 1.0), (1.0, 1.0))


def test_ou_statistics():
    rng = np.random.default_rng(0)
    model = OUNoise((50 * KHZ) ** 2, 1 * US)
    dt = 50 * NS
    x = np.array([laser_trajectory(model, 400, dt, rng) for _ in range(2000)])
    assert x.var() == pytest.approx(model.variance, rel=0.05)
    lag = 20  # one correlation time
    corr = np.mean(x[:, :-lag] * x[:, lag:]) / model.variance
    assert corr == pytest.approx(np.exp(-1), abs=0.03)


@pytest.mark.parametrize("model", [WhiteNoise(1e3), TablePSD((0.0, 2e6, 5e6), (2e3, 2e3, 0.0))])
def test_psd_variance(model):
    rng = np.random.default_rng(1)
    dt = 10 * NS
    x = np.array([laser_trajectory(model, 1024, dt, rng) for _ in range(400)])
    assert x.var() == pytest.approx(psd_variance(model, dt), rel=0.06)


def test_shot_streams_are_independent_of_order(pair):
    cfg = NoiseConfig(laser_model=WhiteNoise(1e3))
    a = sample_shot(cfg, 1 * US, shot_rng(cfg.seed, 5), pair.r, 5)
    b = sample_shot(cfg, 1 * US, shot_rng(cfg.seed, 5), pair.r, 5)
    c = sample_shot(cfg, 1 * US, shot_rng(cfg.seed, 6), pair.r, 6)
    assert np.array_equal(a.doppler, b.doppler) and np.array_equal(a.laser_delta, b.laser_delta)
    assert not np.array_equal(a.doppler, c.doppler)
    # switching a channel off does not shift the other draws
    d = sample_shot(cfg.only("doppler"), 1 * US, shot_rng(cfg.seed, 5), pair.r, 5)
    assert np.array_equal(a.doppler, d.doppler) and d.r == pair.r


def test_chunking_and_determinism(echo_gate, pair):
    cfg = NoiseConfig(seed=7)
    a = mc_fidelity(60, cfg, echo_gate, pair, chunk=7)
    b = mc_fidelity(60, cfg, echo_gate, pair, chunk=1000)
    assert np.array_equal(a.fidelities, b.fidelities)
    assert a.mean == b.mean
    c = mc_fidelity(60, NoiseConfig(seed=8), echo_gate, pair)
    assert not np.array_equal(a.fidelities, c.fidelities)


def test_quiet_is_ideal(echo_gate, pair):
    res = mc_fidelity(20, NoiseConfig.quiet(), echo_gate, pair)
    assert np.allclose(res.fidelities, 1.0, atol=1e-12)
    assert res.decay_fraction == 0


def test_methods_agree(echo_gate, pair):
    cfg = NoiseConfig(seed=3).only("doppler", "position")
    a = mc_fidelity(6, cfg, echo_gate, pair, method="adiabatic")
    b = mc_fidelity(6, cfg, echo_gate, pair, method="schrodinger")
    assert np.allclose(a.fidelities, b.fidelities, atol=2e-4)


def test_laser_response_is_monotone(echo_gate, pair):
    # common random numbers: each shot's trajectory scales with sqrt(level)
    infid = []
    for level in (0.0, 2e3, 8e3, 3e4):
        cfg = NoiseConfig(laser_model=WhiteNoise(level), seed=2).only("laser")
        infid.append(1 - mc_fidelity(100, cfg, echo_gate, pair).mean)
    assert infid[0] == pytest.approx(0, abs=1e-12)
    assert np.all(np.diff(infid) > 0)


def _offset_infidelity(seq, pair, delta):
    ref = to_qubit(run_sequence(seq, pair).unitary)
    u = to_qubit(run_sequence(seq, pair, controls=PulseControls((delta, delta))).unitary)
    return 1 - gate_fidelity(ref, u)


def test_quadratic_sensitivity(noecho_gate, pair):
    # small static errors enter the infidelity quadratically
    a = _offset_infidelity(noecho_gate, pair, 10 * KHZ)
    b = _offset_infidelity(noecho_gate, pair, 20 * KHZ)
    assert b / a == pytest.approx(4.0, rel=0.05)


def test_echo_suppresses_static_offsets(echo_gate, noecho_gate, pair):
    e = _offset_infidelity(echo_gate, pair, 25 * KHZ)
    n = _offset_infidelity(noecho_gate, pair, 25 * KHZ)
    assert e < n / 5


def test_decay(echo_gate, pair):
    p = decay_probability(echo_gate, pair)
    assert 1e-3 < p < 6e-3
    assert decay_probability(echo_gate, pair, tau=np.inf) == 0
    assert decay_probability(echo_gate, pair, tau=85 * US) == pytest.approx(2 * p)
    with pytest.raises(ValueError):
        decay_probability(echo_gate, pair, tau=0)
    res = mc_fidelity(4000, NoiseConfig(seed=0).only("decay"), echo_gate, pair)
    n = res.decayed.sum()
    expect = 4000 * p
    assert abs(n - expect) < 4 * np.sqrt(expect)
    assert np.all(res.fidelities[res.decayed] == 0.25)


def test_shot_log(tmp_path, echo_gate, pair):
    cfg = NoiseConfig(seed=1)
    res = mc_fidelity(5, cfg, echo_gate, pair, keep_samples=True)
    out = tmp_path / "shots.csv"
    write_shot_log(out, res)
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(SHOT_LOG_COLUMNS) and len(lines) == 6
    with pytest.raises(ValueError):
        write_shot_log(out, mc_fidelity(5, cfg, echo_gate, pair))
    with pytest.raises(ValueError):
        mc_fidelity(0, cfg, echo_gate, pair)


def test_output_states_normalized(echo_gate, pair):
    states, decayed = shot_output_states(10, NoiseConfig(seed=2), echo_gate, pair)
    assert states.shape == (10, 4) and decayed.shape == (10,)
    assert np.allclose(np.linalg.norm(states, axis=1), 1, atol=1e-6)
