import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from manakov.soliton import (Grid, PolarizationVector, SolitonParams, TailTruncationWarning,
                             TrainConfig, adiabaticity_report, apply_gauge, build_polarization,
                             random_unitary, sample_train, scalar_products)

angles = st.floats(-10, 10, allow_nan=False)


def ic3_train(nu=(0.5, 0.5, 0.5), delta=(0, 0, 0), xi=(-8, 0, 8)):
    return TrainConfig(tuple(SolitonParams.from_angles(nu[k], 0, xi[k], delta[k], (3 - k) * math.pi / 10)
                             for k in range(3)))


def test_build_polarization_identity():
    p = build_polarization(0, 0)
    assert p.n1 == 1 and p.n2 == 0


def test_build_polarization_diagonal():
    p = build_polarization(math.pi / 4, 0)
    assert np.allclose(p.components, [math.sqrt(0.5), math.sqrt(0.5)], atol=1e-15)


@given(st.floats(0, math.pi / 2), angles)
def test_polarization_constraints(theta, gamma):
    p = build_polarization(theta, gamma)
    assert abs(abs(p.n1) ** 2 + abs(p.n2) ** 2 - 1) < 1e-12
    if abs(p.n1) > 1e-300 and abs(p.n2) > 1e-300:
        s = np.angle(p.n1) + np.angle(p.n2)
        # the argument sum is zero modulo 2 pi
        assert abs(math.remainder(s, 2 * math.pi)) < 1e-12


@given(angles, angles)
def test_polarization_phase_exponents(theta, gamma):
    # outside [0, pi/2] a negative cos or sin adds pi to an argument, but the
    # phase exponents are still +gamma and -gamma
    p = build_polarization(theta, gamma)
    assert abs(abs(p.n1) ** 2 + abs(p.n2) ** 2 - 1) < 1e-12
    assert abs((p.n1 * np.exp(-1j * gamma)).imag) < 1e-12
    assert abs((p.n2 * np.exp(1j * gamma)).imag) < 1e-12


def test_non_unit_rejected():
    with pytest.raises(ValueError):
        PolarizationVector(1.0, 1.0)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_from_components_normalizes(c1, c2):
    if abs(c1) ** 2 + abs(c2) ** 2 < 1e-6:
        return
    p, phase = PolarizationVector.from_components(c1, c2)
    assert abs(abs(p.n1) ** 2 + abs(p.n2) ** 2 - 1) < 1e-12
    if abs(p.n1) > 1e-12 and abs(p.n2) > 1e-12:
        assert abs(math.remainder(np.angle(p.n1) + np.angle(p.n2), 2 * math.pi)) < 1e-12
    # direction preserved
    raw = np.array([c1, c2]) / math.hypot(abs(c1), abs(c2))
    assert np.allclose(p.components * np.exp(1j * phase), raw, atol=1e-12)


def test_ic3_scalar_products():
    m = scalar_products(ic3_train())
    assert np.allclose(m, [math.cos(math.pi / 10)] * 2, atol=1e-15)
    assert abs(m[0] - 0.951) < 5e-4


def test_scalar_products_trivial():
    same = TrainConfig((SolitonParams.from_angles(0.5, 0, 0, 0), SolitonParams.from_angles(0.5, 0, 8, 0)))
    ortho = TrainConfig((SolitonParams.from_angles(0.5, 0, 0, 0, 0), SolitonParams.from_angles(0.5, 0, 8, 0, math.pi / 2)))
    single = TrainConfig((SolitonParams.from_angles(0.5, 0, 0, 0),))
    assert scalar_products(same) == [1]
    assert abs(scalar_products(ortho)[0]) < 1e-16
    assert scalar_products(single) == []


def test_train_validation():
    with pytest.raises(ValueError):
        SolitonParams.from_angles(0.0, 0, 0, 0)
    with pytest.raises(ValueError):
        TrainConfig((SolitonParams.from_angles(0.5, 0, 1, 0), SolitonParams.from_angles(0.5, 0, 1, 0)))


def test_averages():
    c = ic3_train(nu=(0.51, 0.5, 0.49), delta=(0, math.pi, 0))
    assert c.nu0 == pytest.approx(0.5, abs=1e-15)
    assert c.delta0 == pytest.approx(math.pi / 3, abs=1e-15)
    assert c.r0 == 8


def test_config_roundtrip():
    c = ic3_train(nu=(0.51, 0.5, 0.49), delta=(0, math.pi, 0))
    assert TrainConfig.from_list(c.to_list()) == c


def test_sample_single_soliton():
    grid = Grid.from_spacing(-20, 20, 0.05)
    f = sample_train(TrainConfig((SolitonParams.from_angles(0.5, 0, 0, 0),)), grid)
    assert np.allclose(f.u1, 1 / np.cosh(grid.x), atol=1e-15)
    assert np.all(f.u2 == 0)
    assert np.max(np.abs(f.u1)) == pytest.approx(1.0, abs=1e-15)


def test_sample_peak_amplitude():
    grid = Grid.from_spacing(-20, 20, 0.05)
    f = sample_train(TrainConfig((SolitonParams.from_angles(0.7, 0.1, 0, 0.3, 0.4, 0.2),)), grid)
    assert np.sqrt(f.intensity.max()) == pytest.approx(1.4, abs=1e-12)


def test_sample_ic2_maxima():
    grid = Grid.from_spacing(-30, 30, 0.05)
    f = sample_train(ic3_train(nu=(0.51, 0.5, 0.49), delta=(0, math.pi, 0)), grid)
    y = f.intensity
    idx = [i for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] > y[i + 1]]
    assert len(idx) == 3
    assert np.allclose(grid.x[idx], [-8, 0, 8], atol=0.05)


@given(st.floats(0.3, 1.0), st.floats(0, 1))
def test_peak_intensity_isolated(nu, frac):
    h = 0.05
    grid = Grid.from_spacing(-40, 40, h)
    xi = frac * h  # arbitrary sub-grid offset
    f = sample_train(TrainConfig((SolitonParams.from_angles(nu, 0, xi, 0),)), grid)
    # discrete maximum misses the crest by at most h/2: error <= 4 nu^2 (2 nu h/2)^2
    assert abs(f.intensity.max() - 4 * nu ** 2) <= 4 * nu ** 2 * (nu * h) ** 2 + 1e-14


def test_tail_warning():
    grid = Grid.from_spacing(-5, 5, 0.05)
    with pytest.warns(TailTruncationWarning):
        sample_train(TrainConfig((SolitonParams.from_angles(0.5, 0, 0, 0),)), grid)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sample_train(TrainConfig((SolitonParams.from_angles(0.5, 0, 0, 0),)), Grid.from_spacing(-30, 30, 0.05))


def test_grid():
    g = Grid(-1, 1, 5)
    assert g.h == 0.5
    with pytest.raises(ValueError):
        Grid(0, 1, 2)
    with pytest.raises(ValueError):
        Grid(1, 1, 10)


def test_adiabaticity_examples():
    r = adiabaticity_report(ic3_train(nu=(0.51, 0.5, 0.49)))
    assert r.eps0 == pytest.approx(math.exp(-4), rel=1e-15)
    assert abs(r.eps0 - 0.018) < 5e-4
    assert not r.violated
    assert r.amplitude_spread == pytest.approx(0.02, abs=1e-14)
    assert adiabaticity_report(ic3_train()).amplitude_spread == 0
    close = ic3_train(xi=(-2, 0, 2))
    r = adiabaticity_report(close)
    assert r.eps0 == pytest.approx(math.exp(-1), rel=1e-15)
    assert abs(r.eps0 - 0.368) < 5e-4
    assert r.violated


def test_adiabaticity_amplitude_flag():
    assert adiabaticity_report(ic3_train(nu=(0.65, 0.5, 0.35))).violated


@given(st.integers(0, 2 ** 32 - 1))
def test_gauge_preserves_scalar_products(seed):
    c = ic3_train()
    g = random_unitary(np.random.default_rng(seed))
    assert np.allclose(g.conj().T @ g, np.eye(2), atol=1e-12)
    gc = apply_gauge(c, g)
    # products pick up the phase moved into delta; the field-level products are invariant
    for k in range(2):
        a = gc.solitons[k + 1].pol.inner(gc.solitons[k].pol) * np.exp(
            1j * (gc.solitons[k].delta - gc.solitons[k + 1].delta))
        b = c.solitons[k + 1].pol.inner(c.solitons[k].pol) * np.exp(
            1j * (c.solitons[k].delta - c.solitons[k + 1].delta))
        assert abs(a - b) < 1e-12


def test_gauge_field_covariance():
    grid = Grid.from_spacing(-30, 30, 0.1)
    c = ic3_train(nu=(0.51, 0.5, 0.49), delta=(0, math.pi, 0))
    g = random_unitary(np.random.default_rng(3))
    f = sample_train(c, grid)
    fg = sample_train(apply_gauge(c, g), grid)
    expect = g @ np.array([f.u1, f.u2])
    assert np.max(np.abs(expect - np.array([fg.u1, fg.u2]))) < 1e-13
