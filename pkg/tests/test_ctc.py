import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manakov.ctc import (COLLISION_GAP, CtcState, IntegrationOptions, init_ctc_state,
                         integrate_ctc, pctc_rhs, perturbation_forces, positions_from_state,
                         state_to_config)
from manakov.harness import preset, three_soliton_train
from manakov.potential import PotentialSpec, PotentialTerm, kernel_p, kernel_r
from manakov.soliton import (Grid, SolitonParams, TrainConfig, adiabaticity_report, apply_gauge,
                             random_unitary)
from manakov.vnlse import SolverOptions, run_vnlse

AFR = three_soliton_train(0.01, (0, math.pi, 0))
BSR = three_soliton_train(0.02, (0, 0, 0))


def single(nu=0.5, mu=0.0, xi=0.0):
    return TrainConfig((SolitonParams.from_angles(nu, mu, xi, 0.0),))


def test_init_real_parts():
    s = init_ctc_state(three_soliton_train(0.0, (0, 0, 0)))
    assert np.allclose(s.q.real, [8, 0, -8], atol=1e-15)


def test_init_imag_part():
    s = init_ctc_state(three_soliton_train(0.0, (0, math.pi, 0)))
    assert s.q[0].imag == pytest.approx(-4 * math.pi / 3, abs=1e-14)


def test_init_single():
    s = init_ctc_state(single())
    assert s.lam[0] == 0.5j
    assert s.n == 1


@given(st.lists(st.floats(-30, 30), min_size=1, max_size=6, unique=True),
       st.floats(0.3, 0.8), st.floats(-0.2, 0.2))
def test_positions_roundtrip(xs, nu, mu):
    xs = sorted(xs)
    if len(xs) > 1 and min(np.diff(xs)) < 1e-3:
        return
    c = TrainConfig(tuple(SolitonParams.from_angles(nu, mu, x, 0.1) for x in xs))
    xi, nus, mus = positions_from_state(init_ctc_state(c))
    assert np.allclose(xi, xs, atol=1e-13, rtol=0)
    assert np.allclose(nus, nu) and np.allclose(mus, mu)


def test_positions_inverse_map():
    s = CtcState([0.5j] * 3, [8, 0, -8], np.tile([1, 0], (3, 1)), 0.5, 0.0)
    xi, _, _ = positions_from_state(s)
    assert np.allclose(xi, [-8, 0, 8], atol=1e-15)
    s = CtcState([0.3 + 0.6j], [0], [[1, 0]], 0.5, 0.0)
    _, nu, mu = positions_from_state(s)
    assert (mu[0], nu[0]) == (0.3, 0.6)


def test_state_to_config_roundtrip():
    c = AFR
    back = state_to_config(init_ctc_state(c))
    for a, b in zip(c.solitons, back.solitons):
        assert abs(a.xi - b.xi) < 1e-13 and abs(a.nu - b.nu) < 1e-15
        assert abs(math.remainder(a.delta - b.delta, 2 * math.pi)) < 1e-13


def test_state_validation():
    with pytest.raises(ValueError):
        CtcState([], [], np.zeros((0, 2)), 0.5, 0)
    with pytest.raises(ValueError):
        CtcState([0.5j, 0.5j], [0], [[1, 0], [1, 0]], 0.5, 0)


def test_rhs_separated_solitons():
    c = TrainConfig(tuple(SolitonParams.from_angles(0.5, 0, x, 0) for x in (-60, 0, 60)))
    d = pctc_rhs(init_ctc_state(c))
    assert np.all(np.abs(d.lam) < 1e-20)


@given(st.floats(2, 12), st.floats(0.4, 0.6), st.floats(0, math.pi), st.floats(0, 1.5))
def test_rhs_telescoping(gap, nu2, dphase, theta):
    c = TrainConfig((SolitonParams.from_angles(0.5, 0.05, 0, 0),
                     SolitonParams.from_angles(nu2, -0.02, gap, dphase, theta)))
    d = pctc_rhs(init_ctc_state(c))
    assert abs(d.lam[0] + d.lam[1]) <= 1e-15 * max(1.0, abs(d.lam[0]))


def test_rhs_well_center_no_force():
    spec = PotentialSpec((PotentialTerm(-0.1, 0.0, 1.0),))
    d = pctc_rhs(init_ctc_state(single()), spec)
    assert d.lam[0] == 0


@given(st.floats(-6, 6), st.floats(-0.2, 0.2), st.floats(-4, 4))
def test_force_consistency(xi, c, center):
    spec = PotentialSpec((PotentialTerm(c, center, 1.0),))
    s = init_ctc_state(single(xi=xi))
    d = pctc_rhs(s, spec)
    want = 2 * c * 0.5 * kernel_p(2 * 0.5 * xi - center)
    assert abs(d.lam[0].real - want) < 1e-12
    assert d.lam[0].imag == 0


def test_forces_real_potential():
    spec = PotentialSpec.uniform(-0.1, -16, 1, 33)
    f = perturbation_forces(init_ctc_state(AFR), spec)
    assert np.all(f.N == 0) and np.all(f.Xi == 0)
    assert np.array_equal(f.X, f.D)


def test_rhs_bad_mode():
    with pytest.raises(ValueError):
        pctc_rhs(init_ctc_state(AFR), PotentialSpec(), "spinning")


def test_phase_force_matches_pde():
    """Phase-rate shift of a soliton resting at a well's center.

    The phase obeys ``d(delta)/dt = 2 nu^2 + D`` in the reduced model, so a
    well (c < 0) speeds the rotation up by ``-2 c R(0) = -c``.
    """
    c = -0.1
    spec = PotentialSpec((PotentialTerm(c, 0.0, 1.0),))
    f = perturbation_forces(init_ctc_state(single()), spec)
    predicted = f.D[0]
    assert predicted == pytest.approx(-2 * c * kernel_r(0.0), abs=1e-15)
    grid = Grid.from_spacing(-30, 30, 0.05)
    mid = grid.n_points // 2
    rates = []
    for s in (PotentialSpec(), spec):
        run = run_vnlse(single(), s, grid, 20.0, SolverOptions(), 0.5, observer=lambda fl: fl.u1[mid])
        ph = np.unwrap(np.angle(np.array(run.observations)))
        rates.append(np.polyfit(run.times, ph, 1)[0])
    measured = rates[1] - rates[0]
    assert measured == pytest.approx(predicted, rel=0.1)


def test_sum_lambda_conserved():
    traj = integrate_ctc(init_ctc_state(AFR), PotentialSpec(), 500.0)
    assert traj.status == "ok"
    total = traj.lam.sum(axis=1)
    assert np.max(np.abs(total - total[0])) < 1e-10


def test_step_halving():
    s0 = init_ctc_state(AFR)
    a = integrate_ctc(s0, PotentialSpec(), 100.0, IntegrationOptions(dt=0.05))
    b = integrate_ctc(s0, PotentialSpec(), 100.0, IntegrationOptions(dt=0.025))
    assert np.max(np.abs(a.xi[-1] - b.xi[-1])) < 1e-8


def test_adaptive_agrees_with_rk4():
    s0 = init_ctc_state(AFR)
    spec = PotentialSpec.uniform(-0.1, -16, 1, 33)
    a = integrate_ctc(s0, spec, 100.0)
    b = integrate_ctc(s0, spec, 100.0, IntegrationOptions(method="adaptive"))
    assert np.array_equal(a.times, b.times)
    assert np.max(np.abs(a.xi - b.xi)) < 1e-6


def test_sample_times():
    traj = integrate_ctc(init_ctc_state(AFR), PotentialSpec(), 10.5, IntegrationOptions(sample_every=2.0))
    assert np.allclose(traj.times, [0, 2, 4, 6, 8, 10, 10.5])


def test_asymptotic_escape_speed():
    # free AFR train: lateral speeds approach 4 |Re zeta| = 4 * 0.0116
    traj = integrate_ctc(init_ctc_state(AFR), PotentialSpec(), 600.0, IntegrationOptions(sample_every=10))
    v = (traj.xi[-1] - traj.xi[-11]) / (traj.times[-1] - traj.times[-11])
    kappa = 0.011598360190996404   # 30-digit value of sqrt(2 a^2 - (dnu/2)^2)
    assert v[0] == pytest.approx(-4 * kappa, rel=2e-3)
    assert v[2] == pytest.approx(4 * kappa, rel=2e-3)
    assert abs(v[1]) < 1e-6


@pytest.mark.parametrize("mode", ["frozen", "evolving"])
def test_gauge_invariance(mode):
    g = random_unitary(np.random.default_rng(11))
    spec = PotentialSpec.uniform(-0.1, -16, 1, 33)
    opts = IntegrationOptions(pol_mode=mode)
    a = integrate_ctc(init_ctc_state(AFR), spec, 100.0, opts)
    b = integrate_ctc(init_ctc_state(apply_gauge(AFR, g)), spec, 100.0, opts)
    assert np.max(np.abs(a.xi - b.xi)) < 1e-10


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=10)
def test_gauge_invariance_property(seed):
    g = random_unitary(np.random.default_rng(seed))
    a = integrate_ctc(init_ctc_state(BSR), PotentialSpec(), 30.0)
    b = integrate_ctc(init_ctc_state(apply_gauge(BSR, g)), PotentialSpec(), 30.0)
    assert np.max(np.abs(a.xi - b.xi)) < 1e-10


def test_evolving_keeps_unit_norm():
    traj = integrate_ctc(init_ctc_state(BSR), PotentialSpec(), 100.0, IntegrationOptions(pol_mode="evolving"))
    norms = np.sum(np.abs(traj.pol) ** 2, axis=2)
    assert np.max(np.abs(norms - 1)) < 1e-9


@pytest.mark.parametrize("name", ["afr_free", "afr_well", "bsr_free", "bsr_hump", "mar_well"])
def test_frozen_vs_evolving_order_eps(name):
    s = preset(name)
    eps = adiabaticity_report(s.train).eps0
    a = integrate_ctc(init_ctc_state(s.train), s.potential, 100.0)
    b = integrate_ctc(init_ctc_state(s.train), s.potential, 100.0, IntegrationOptions(pol_mode="evolving"))
    assert np.max(np.abs(a.xi - b.xi)) < 3 * eps


@pytest.mark.parametrize("method", ["rk4", "adaptive"])
def test_collision_truncates(method):
    two = TrainConfig((SolitonParams.from_angles(0.5, 0, -2, 0), SolitonParams.from_angles(0.5, 0, 2, 0)))
    traj = integrate_ctc(init_ctc_state(two), PotentialSpec(), 100.0, IntegrationOptions(method=method))
    assert traj.status == "collision"
    assert traj.times[-1] < 10
    gap = np.abs(np.diff(traj.q[-1].real))
    assert gap[0] <= COLLISION_GAP + 1e-9


def test_bad_arguments():
    s0 = init_ctc_state(AFR)
    with pytest.raises(ValueError):
        integrate_ctc(s0, PotentialSpec(), 0.0)
    with pytest.raises(ValueError):
        integrate_ctc(s0, PotentialSpec(), 1.0, IntegrationOptions(method="euler"))


def test_csv(tmp_path):
    traj = integrate_ctc(init_ctc_state(AFR), PotentialSpec(), 5.0)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    traj.to_csv(p1)
    integrate_ctc(init_ctc_state(AFR), PotentialSpec(), 5.0).to_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()
    rows = list(csv.reader(p1.open()))
    assert rows[0][:5] == ["t", "xi_1", "nu_1", "mu_1", "delta_proxy_1"]
    assert len(rows[0]) == 13 and len(rows) == 7
    assert float(rows[1][1]) == -8.0
    assert float(rows[1][4]) == pytest.approx(0.0, abs=1e-14)


def test_delta_proxy_rate():
    # the proxy runs ahead of the true phase rate 2 nu^2 by 4 nu0 nu - 2 nu^2
    traj = integrate_ctc(init_ctc_state(single(nu=0.5)), PotentialSpec(), 10.0)
    rate = (traj.delta_proxy[-1, 0] - traj.delta_proxy[0, 0]) / 10.0
    assert rate == pytest.approx(4 * 0.5 * 0.5, abs=1e-12)
