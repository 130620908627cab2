import math

import numpy as np
import pytest

from wigner_current.currents import EnvParams, SystemParams
from wigner_current.evolution import (
    PumpSchedule,
    Scenario,
    evolve_covariance,
    max_stable_step,
    mixture_at,
    pde_evolve_oracle,
    pump_to_tau,
    snapshot_sequence,
    taus_and_fields,
)
from wigner_current.gaussian import IllConditionedFitWarning, gaussian_wigner_field, squeezed_thermal_state, vacuum
from wigner_current.grid import ScalarField, make_grid, quadrature_integral


def test_pump_to_tau_examples():
    assert pump_to_tau(PumpSchedule((1.0, 4.0, 9.0), 1.0)) == [1.0, 2.0, 3.0]
    taus = pump_to_tau(PumpSchedule.uniform(0.25, 20, 1.0))
    assert len(taus) == 20
    assert taus[0] == pytest.approx(0.5) and taus[-1] == pytest.approx(math.sqrt(5))
    assert pump_to_tau(PumpSchedule((0.0,), 1.0)) == [0.0]


@pytest.mark.parametrize("powers,k", [((), 1.0), ((-1.0, 1.0), 1.0), ((2.0, 1.0), 1.0), ((1.0, 1.0), 1.0), ((1.0,), 0.0)])
def test_pump_schedule_validation(powers, k):
    with pytest.raises(ValueError):
        PumpSchedule(powers, k)


def test_thermal_fixed_point():
    s = evolve_covariance(vacuum(), SystemParams(0.0), EnvParams(0.01, 0.1), 2000.0)
    np.testing.assert_allclose(s.cov, 0.6 * np.eye(2), atol=1e-6)


def test_pure_squeezing_closed_form():
    r = 0.7
    s = evolve_covariance(vacuum(), SystemParams(1.0), EnvParams(0.0, 0.0), r)
    np.testing.assert_allclose(s.cov, squeezed_thermal_state(r, math.pi / 2, 0.0).cov, atol=1e-13)
    lam = np.linalg.eigvalsh(s.cov)
    np.testing.assert_allclose(lam, [0.5 * math.exp(-2 * r), 0.5 * math.exp(2 * r)], rtol=1e-12)
    # theta = 0 squeezes the canonical axes
    s0 = evolve_covariance(vacuum(), SystemParams(0.5, 0.0), EnvParams(0.0, 0.0), 2 * r)
    np.testing.assert_allclose(s0.cov, np.diag([0.5 * math.exp(2 * r), 0.5 * math.exp(-2 * r)]), atol=1e-13)


def test_open_squeezing_is_asymmetric():
    s = evolve_covariance(vacuum(), SystemParams(1.0), EnvParams(0.01, 0.1), 0.8151)
    lo, hi = np.linalg.eigvalsh(s.cov)
    anti_db = 10 * math.log10(hi / 0.5)
    sq_db = -10 * math.log10(lo / 0.5)
    assert anti_db > sq_db > 0


def test_evolution_keeps_physical_states():
    rng = np.random.default_rng(7)
    for _ in range(50):
        sp = SystemParams(rng.uniform(0, 2), rng.uniform(0, 2 * math.pi))
        ep = EnvParams(rng.uniform(0, 0.5), rng.uniform(0, 2))
        s = evolve_covariance(squeezed_thermal_state(rng.uniform(0, 1), rng.uniform(0, 6), rng.uniform(0, 1)), sp, ep,
                              rng.uniform(0, 3))
        assert np.array_equal(s.cov, s.cov.T)
        assert s.det >= 0.25 - 1e-12


def test_semigroup():
    rng = np.random.default_rng(11)
    for _ in range(10):
        sp = SystemParams(rng.uniform(0, 1.5), rng.uniform(0, 2 * math.pi))
        ep = EnvParams(rng.uniform(0, 0.3), rng.uniform(0, 1))
        t1, t2 = rng.uniform(0, 1.5, size=2)
        s0 = squeezed_thermal_state(0.2, 1.0, 0.3)
        a = evolve_covariance(evolve_covariance(s0, sp, ep, t1), sp, ep, t2)
        b = evolve_covariance(s0, sp, ep, t1 + t2)
        np.testing.assert_allclose(a.cov, b.cov, rtol=1e-9, atol=1e-12)


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        evolve_covariance(vacuum(), SystemParams(1.0), EnvParams(0.0, 0.0), -0.1)


def test_purity_decays_to_thermal():
    sp, ep = SystemParams(0.0), EnvParams(0.3, 0.5)
    purities = [evolve_covariance(vacuum(), sp, ep, t).purity for t in np.linspace(0, 60, 40)]
    assert all(b < a for a, b in zip(purities, purities[1:]))
    assert purities[-1] == pytest.approx(1 / (2 * 0.5 + 1), abs=1e-6)


def test_pde_oracle_without_dynamics_is_identity():
    g = make_grid(21, 21, 3.0, 3.0)
    w0 = gaussian_wigner_field(squeezed_thermal_state(0.3, 1.0, 0.2), g)
    w = pde_evolve_oracle(w0, SystemParams(0.0), EnvParams(0.0, 0.0), 1e-3, 25)
    np.testing.assert_array_equal(w.values, w0.values)


def _moments(w: ScalarField):
    X, P = w.grid.mesh()
    W = w.as_2d()
    m = W.sum()
    return np.array([[(X * X * W).sum(), (X * P * W).sum()], [(X * P * W).sum(), (P * P * W).sum()]]) / m


def pde_vs_lyapunov(xi, theta, gamma, n_bar, s0):
    g = make_grid(81, 81, 6.0, 6.0)
    sp, ep = SystemParams(xi, theta), EnvParams(gamma, n_bar)
    w = pde_evolve_oracle(gaussian_wigner_field(s0, g), sp, ep, 1e-3, 100)
    exact = evolve_covariance(s0, sp, ep, 0.1).cov
    return _moments(w), exact


def test_pde_matches_lyapunov_for_vacuum_squeezing():
    cov, exact = pde_vs_lyapunov(1.0, math.pi / 2, 0.0, 0.0, vacuum())
    np.testing.assert_allclose(np.diag(cov), np.diag(exact), rtol=1e-3)
    np.testing.assert_allclose(np.linalg.eigvalsh(cov), np.linalg.eigvalsh(exact), rtol=1e-3)


def test_pde_matches_lyapunov_random_draws():
    rng = np.random.default_rng(2024)
    for _ in range(6):
        xi, gamma, n_bar = rng.uniform(0, 1), rng.uniform(0, 0.3), rng.uniform(0, 1)
        theta = rng.uniform(0, 2 * math.pi)
        cov, exact = pde_vs_lyapunov(xi, theta, gamma, n_bar, vacuum())
        np.testing.assert_allclose(np.linalg.eigvalsh(cov), np.linalg.eigvalsh(exact), rtol=1e-3)
        np.testing.assert_allclose(np.diag(cov), np.diag(exact), rtol=1e-3)


def test_pde_conserves_mass():
    g = make_grid(61, 61, 6.0, 6.0)
    w0 = gaussian_wigner_field(vacuum(), g)
    w = pde_evolve_oracle(w0, SystemParams(1.0), EnvParams(0.2, 1.0), 1e-3, 100)
    assert abs(quadrature_integral(w) - quadrature_integral(w0)) <= 1e-6


def test_pde_rejects_unstable_steps():
    g = make_grid(61, 61, 6.0, 6.0)
    sp, ep = SystemParams(1.0), EnvParams(0.2, 1.0)
    limit = max_stable_step(g, sp, ep)
    w0 = gaussian_wigner_field(vacuum(), g)
    with pytest.raises(ValueError):
        pde_evolve_oracle(w0, sp, ep, 2 * limit, 1)
    with pytest.raises(ValueError):
        pde_evolve_oracle(w0, sp, ep, -1e-3, 1)


def test_two_step_closed_schedule_gives_pure_squeezed_states():
    sc = Scenario(PumpSchedule((1.0, 4.0), 0.2), EnvParams(0.0, 0.0), make_grid(33, 33, 4.0, 4.0))
    # n_bar = 0 makes the squeezed-thermal term coincide with the squeezed vacuum
    with pytest.warns(IllConditionedFitWarning):
        snaps = snapshot_sequence(sc)
    rs = []
    for s in snaps:
        assert s.state.purity == pytest.approx(1.0, abs=1e-9)
        assert s.open_state.purity == pytest.approx(1.0, abs=1e-9)
        rs.append(s.open_state.squeezing_parameter())
    np.testing.assert_allclose(rs, [0.2, 0.4], rtol=1e-9)
    assert [t for t, _ in taus_and_fields(snaps)] == pytest.approx([0.2, 0.4])


def _weak():
    return Scenario(PumpSchedule.uniform(0.25, 20, 0.096), EnvParams(0.01, 0.1), make_grid(33, 33, 4.0, 4.0))


def _strong():
    return Scenario(PumpSchedule.uniform(4.4, 20, 0.096), EnvParams(0.2, 1.0), make_grid(49, 49, 6.0, 6.0))


def test_weak_endpoint_purity():
    snaps = snapshot_sequence(_weak())
    assert snaps[-1].state.purity >= 0.97


def test_strong_purity_below_weak():
    weak, strong = snapshot_sequence(_weak()), snapshot_sequence(_strong())
    for a, b in zip(weak, strong):
        assert b.state.purity < a.state.purity


def test_fixed_weight_policy():
    sc = Scenario(PumpSchedule((1.0, 2.0), 0.3), EnvParams(0.1, 0.4), make_grid(21, 21, 4.0, 4.0),
                  weights=(0.7, 0.2, 0.1))
    state, exact = mixture_at(sc, 0.3)
    assert exact is None
    assert state.weights == (0.7, 0.2, 0.1)
    assert state.components[0].squeezing_parameter() == pytest.approx(0.3)
    with pytest.raises(ValueError):
        Scenario(sc.schedule, sc.env, sc.grid, weights=(0.5, 0.2, 0.2))


def test_open_policy_tracks_exact_state():
    sc = _weak()
    state, exact = mixture_at(sc, 0.3)
    np.testing.assert_allclose(state.cov, exact.cov, atol=5e-3)
