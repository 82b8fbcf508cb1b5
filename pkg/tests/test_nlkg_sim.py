import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlkg.cubic_system import Coefficients, ModelSystemId, model_catalog
from nlkg.errors import InsufficientSamplesError, InvalidInputError, SupportViolationError
from nlkg.nlkg_sim import (
    GAUSSIAN_RADIUS,
    Profile,
    ProfileDiagnostics,
    SimConfig,
    decay_exponent,
    energy,
    energy_drift_per_1000,
    extract_profiles,
    fit_log_growth,
    fit_series,
    initial_state,
    run,
    step,
)

SIGMA, EPS = 2.0, 0.1


def small(**kw):
    base = dict(X=64.0, N=512, dt=0.05, T=10.0)
    base.update(kw)
    return SimConfig(**base)


@pytest.fixture(scope="module")
def free_runs():
    """Free evolution of u1 = εG, ∂t u2 = εG with both vertex conventions."""
    out = {}
    for off in (0.0, None):
        cfg = SimConfig(epsilon=EPS, u10=Profile(1.0, SIGMA), u20=Profile(0.0), u21=Profile(1.0, SIGMA),
                        X=192.0, N=2048, dt=0.05, T=160.0, snapshot_every=2, snapshot_window=2.0,
                        vertex_offset=off)
        out[off] = cfg, run(cfg)
    return out


def test_gaussian_radius_and_support():
    assert math.exp(-GAUSSIAN_RADIUS**2) == pytest.approx(1e-16)
    assert Profile(1.0, 2.0, 3.0).radius() == pytest.approx(3 + 2 * GAUSSIAN_RADIUS)
    assert Profile(0.0, 5.0).radius() == 0
    assert SimConfig(u10=Profile(1.0, 2.0)).B == pytest.approx(2 * GAUSSIAN_RADIUS)
    assert SimConfig(support_radius=3.0).B == 3.0


def test_offset_defaults_to_twice_support():
    cfg = SimConfig()
    assert cfg.offset == 2 * cfg.B
    assert SimConfig(vertex_offset=0.0).offset == 0.0


@pytest.mark.parametrize("kw", [
    dict(N=500), dict(dt=0.2), dict(dt=-1.0), dict(X=12.0), dict(kappa=3.0),
    dict(tau0=1.0), dict(vertex_offset=-1.0), dict(snapshot_every=0),
])
def test_config_validation(kw):
    with pytest.raises(InvalidInputError):
        small(**kw).validate()


def test_config_json_round_trip():
    cfg = small(coefficients=model_catalog(ModelSystemId("NewA", (1,))), taus=(20.0, 30.0))
    back = SimConfig.from_json(cfg.to_json())
    assert back.to_json() == cfg.to_json()
    cfg = SimConfig.from_json({"coefficients": "Sunagawa", "u10": {"amplitude": 2.0}})
    assert cfg.coefficients == model_catalog(ModelSystemId("Sunagawa")) and cfg.u10.amplitude == 2.0
    with pytest.raises(InvalidInputError):
        SimConfig.from_json({"bogus": 1})
    with pytest.raises(InvalidInputError):
        SimConfig.from_json({"u10": {"height": 1}})


def test_zero_data_stays_zero():
    res = run(small(epsilon=0.0, coefficients=model_catalog(ModelSystemId("New2"))))
    assert np.all(res.final.u1 == 0) and np.all(res.final.v2 == 0)
    assert res.error is None


def test_plane_wave_is_propagated_exactly():
    cfg = small(check_support=False)
    x = cfg.grid()
    k = 2 * math.pi * 5 / (2 * cfg.X)
    w = math.sqrt(1 + k * k)
    state = initial_state(cfg)
    state.u1[:] = np.cos(k * x)
    state.u2[:] = 0
    state.v1[:] = 0
    for _ in range(40):
        state = step(state, cfg)
    assert np.max(np.abs(state.u1 - np.cos(k * x) * math.cos(w * state.t))) <= 1e-12
    assert np.max(np.abs(state.v1 + w * np.cos(k * x) * math.sin(w * state.t))) <= 1e-12


def test_free_energy_is_conserved():
    res = run(small(epsilon=0.5, u11=Profile(0.5, 1.5)))
    assert energy_drift_per_1000(res) <= 1e-12


def test_energy_matches_final_state():
    cfg = small(epsilon=0.3)
    res = run(cfg)
    assert energy(res.final, cfg) == pytest.approx(res.energies[-1], rel=1e-12)


def test_strang_splitting_is_second_order():
    coeffs = model_catalog(ModelSystemId("Decoupled", (1, 1)))
    finals = []
    for dt in (0.04, 0.02, 0.01):
        cfg = small(epsilon=1.0, coefficients=coeffs, dt=dt, T=4.0)
        finals.append(run(cfg).final.u1)
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    assert 3.5 < e1 / e2 < 4.5


def test_free_decay_rate():
    cfg = SimConfig(epsilon=0.1, u10=Profile(1.0, 1.0), u20=Profile(0.0), X=128.0, N=1024,
                    dt=0.05, T=100.0, snapshot_every=20)
    res = run(cfg)
    assert decay_exponent(res, 20.0, 100.0) == pytest.approx(-0.5, abs=0.05)


def test_support_violation_detected():
    cfg = small(u10=Profile(1.0, 3.0), support_radius=1.0)
    with pytest.raises(SupportViolationError):
        run(cfg)


def test_blow_up_returns_partial_result():
    cfg = small(epsilon=3.0, coefficients=model_catalog(ModelSystemId("Decoupled", (1, 1))), check_support=False)
    res = run(cfg)
    assert res.error is not None and res.steps < round(cfg.T / cfg.dt)
    assert len(res.snapshots) == len(res.times) >= 1


def test_linear_profile_amplitude(free_runs):
    # stationary phase at x = 0: |α| = εσ/(2√2) (1 + σ⁴/(4t²))^{-1/4} (τ/t)^{1/2}, t = τ - offset
    for cfg, res in free_runs.values():
        for d in extract_profiles(res, cfg, taus=[60.0, 90.0, 120.0, 150.0], z=[0.0]):
            t = d.tau - cfg.offset
            want = EPS * SIGMA / (2 * math.sqrt(2)) * (1 + SIGMA**4 / (4 * t * t)) ** -0.25 * math.sqrt(d.tau / t)
            assert abs(d.alpha1[0]) == pytest.approx(want, rel=3e-3)
            # velocity data gives the same modulus a quarter turn behind, up to O(1/t)
            assert d.alpha2[0] / d.alpha1[0] == pytest.approx(-1j, abs=2e-2)


def test_envelope_undoes_weights(free_runs):
    cfg, res = free_runs[0.0]
    (d,) = extract_profiles(res, cfg, taus=[100.0], z=[0.0])
    assert d.envelope1[0] == pytest.approx(2 * abs(d.alpha1[0]), rel=1e-12)
    assert len(d.off_support) == 0


def test_off_window_points_are_flagged(free_runs):
    cfg, res = free_runs[0.0]
    (d,) = extract_profiles(res, cfg, taus=[100.0], z=[0.0, 0.5])
    assert list(d.off_support) == [0.5] and d.alpha1[1] == 0


def test_extraction_range_errors(free_runs):
    cfg, res = free_runs[0.0]
    with pytest.raises(InvalidInputError):
        extract_profiles(res, cfg, taus=[1.0], z=[0.0])
    with pytest.raises(InvalidInputError):
        extract_profiles(res, cfg, taus=[500.0], z=[0.0])


def test_free_run_shows_no_log_growth(free_runs):
    cfg, res = free_runs[0.0]
    diags = extract_profiles(res, cfg, taus=np.geomspace(30, 150, 8), z=[0.0])
    rep = fit_log_growth(diags)
    assert abs(rep.slope) <= 1e-4 and rep.n == 8
    assert rep.alpha1_relative_spread <= 1e-2


def test_fit_series_recovers_log_slope(rng):
    tau = np.geomspace(10, 1000, 30)
    y = 1 + 0.3 * np.log(tau) + rng.normal(0, 1e-3, tau.size)
    b, a, r2_log, _, _, r2_pow = fit_series(tau, y)
    assert b == pytest.approx(0.3, abs=0.02) and a == pytest.approx(1, abs=0.05)
    assert r2_log > r2_pow


@given(st.floats(0.1, 1.0), st.floats(0.5, 3.0))
def test_fit_series_prefers_power_law_for_power_data(p, c):
    tau = np.geomspace(10, 1000, 25)
    b, _, r2_log, p_fit, c_fit, r2_pow = fit_series(tau, c * tau**p)
    assert p_fit == pytest.approx(p, rel=1e-6) and c_fit == pytest.approx(c, rel=1e-5)
    assert r2_pow >= r2_log


def test_fit_series_constant_series():
    b, a, r2_log, p, _, _ = fit_series(np.geomspace(10, 100, 6), np.full(6, 2.0))
    assert abs(b) <= 1e-12 and a == pytest.approx(2.0) and r2_log == 0.0 and abs(p) <= 1e-9


def _diag(tau, a2):
    z = np.array([0.0])
    one = np.array([1.0 + 0j])
    return ProfileDiagnostics(tau, z, one, np.array([a2]), one, one, np.array([]))


def test_fit_needs_enough_samples():
    with pytest.raises(InsufficientSamplesError):
        fit_log_growth([_diag(t, 1.0) for t in (10, 20, 30, 40)])
    with pytest.raises(InsufficientSamplesError):
        fit_log_growth([_diag(t, 1.0) for t in (10, 12, 14, 16, 18)])
    rep = fit_log_growth([_diag(t, 1 + 0.1 * math.log(t)) for t in (10, 20, 40, 80, 160)])
    assert rep.slope == pytest.approx(0.1) and rep.verdict == "log"


def test_nonlinear_coefficients_enter_the_kick():
    lin = run(small(epsilon=0.5))
    non = run(small(epsilon=0.5, coefficients=Coefficients((1, 0, 0, 0, 0, 0, 0, 1))))
    assert np.max(np.abs(lin.final.u1 - non.final.u1)) > 1e-4
