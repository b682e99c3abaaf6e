import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantum_forms.errors import AllMasked, NonFinite
from quantum_forms.field_core import (Grid, RealField, WaveField, fd_derivative, field_from_csv,
                                      field_from_json, field_to_csv, field_to_json, node_mask,
                                      quadrature, spectral_derivative, unwrap_phase)
from quantum_forms import states

from _support import band_limited_density, density_coeffs


def test_grid_rejects_bad_sizes():
    for n in (17, 8, 0, 100):
        with pytest.raises(ValueError, match="power of two"):
            Grid(n, 0.0, 1.0)
    with pytest.raises(ValueError):
        Grid(16, 0.0, -1.0)
    with pytest.raises(ValueError):
        Grid(16, 0.0, 1.0, hbar=0.0)


def test_grid_points():
    g = Grid(16, 1.0, 4.0)
    assert g.dx == 0.25
    assert np.allclose(g.x, 1.0 + 0.25 * np.arange(16))
    assert Grid.from_dict(g.to_dict()) == g


def test_fields_are_immutable_and_finite():
    g = Grid.centered(16, 1.0)
    f = WaveField(g, np.ones(16))
    with pytest.raises(ValueError):
        f.values[0] = 2.0
    with pytest.raises(NonFinite):
        RealField(g, np.full(16, np.nan))
    with pytest.raises(ValueError):
        RealField(g, np.ones(15))


def test_spectral_derivative_of_sine():
    g = Grid(64, 0.0, 3.0)
    k = 2 * np.pi / g.length
    f = RealField(g, np.sin(k * g.x))
    d = spectral_derivative(f, 1)
    assert np.max(np.abs(d.values - k * np.cos(k * g.x))) < 1e-13


def test_spectral_derivative_of_constant_is_zero():
    g = Grid(32, 0.0, 1.0)
    assert np.max(np.abs(spectral_derivative(RealField(g, np.full(32, 3.0)), 1).values)) < 1e-13


def test_second_derivative_of_plane_wave():
    g = Grid(64, 0.0, 2.0)
    k = 2 * np.pi * 3 / g.length
    f = WaveField(g, np.exp(1j * k * g.x))
    d = spectral_derivative(f, 2)
    assert np.max(np.abs(d.values + k ** 2 * f.values)) < 1e-10


def test_spectral_derivative_rejects_bad_order():
    g = Grid(16, 0.0, 1.0)
    with pytest.raises(ValueError):
        spectral_derivative(RealField(g, np.zeros(16)), 3)
    with pytest.raises(ValueError):
        spectral_derivative(RealField(g, np.zeros(16)), 0)


def test_quadrature_examples():
    g = Grid.centered(64, 10.0)
    assert quadrature(RealField(g, np.ones(64))) == pytest.approx(10.0, abs=1e-12)
    g2 = Grid.centered(256, 40.0)
    assert quadrature(RealField(g2, states.gaussian_packet(g2, 0.0, 1.0).density)) == \
        pytest.approx(1.0, abs=1e-10)
    g3 = Grid(64, 0.0, 5.0)
    assert abs(quadrature(RealField(g3, np.sin(2 * np.pi * g3.x / 5.0)))) < 1e-12


def test_fd_oracle_orders():
    errs = {}
    for acc in (2, 4, 8):
        e = []
        for n in (64, 128):
            g = Grid(n, 0.0, 2 * np.pi)
            f = RealField(g, np.exp(np.sin(g.x)))
            exact = np.cos(g.x) * f.values
            e.append(np.max(np.abs(fd_derivative(f, 1, acc).values - exact)))
        errs[acc] = np.log2(e[0] / e[1])
    assert errs[2] == pytest.approx(2, abs=0.2)
    assert errs[4] == pytest.approx(4, abs=0.3)
    assert errs[8] > 7


def test_unwrap_plane_wave_records_winding():
    g = Grid(64, -1.0, 4.0, hbar=0.5)
    mode = 3
    k = 2 * np.pi * mode / g.length
    ph = unwrap_phase(WaveField(g, np.exp(1j * k * g.x)))
    assert ph.winding == mode
    S = ph.S.values
    expect = g.hbar * k * g.x
    offset = S[0] - expect[0]
    assert np.max(np.abs(S - expect - offset)) < 1e-12


def test_unwrap_real_positive_is_zero():
    g = Grid.centered(64, 10.0)
    ph = unwrap_phase(states.gaussian_packet(g, 0.0, 1.0))
    assert ph.winding == 0
    assert np.max(np.abs(ph.S.values)) == 0.0


def test_unwrap_matches_accumulated_arg_oracle():
    g = Grid.centered(256, 40.0)
    psi = states.gaussian_packet(g, 1.0, 1.5, k=2.3)
    mask = node_mask(psi)
    ph = unwrap_phase(psi, mask)
    good = np.flatnonzero(~mask.flags)
    v = psi.values[good]
    steps = np.concatenate([[0.0], np.cumsum(np.angle(v[1:] / v[:-1]))])
    oracle = np.angle(v[0]) + steps
    assert np.max(np.abs(ph.S.values[good] - g.hbar * oracle)) < 1e-10


def test_unwrap_all_masked_raises():
    g = Grid(16, 0.0, 1.0)
    with pytest.raises(AllMasked):
        unwrap_phase(WaveField(g, np.zeros(16)))


def test_interior_fraction_ignores_tails():
    g = Grid.centered(256, 60.0)
    assert node_mask(states.gaussian_packet(g, 0.0, 1.0)).interior_fraction() == 0.0
    flags_rho = np.cos(2 * np.pi * 4 * g.x / g.length) ** 2
    assert node_mask(RealField(g, flags_rho)).interior_fraction() > 0.0


@settings(max_examples=30, deadline=None)
@given(density_coeffs(), st.floats(-3, 3))
def test_parseval(coeffs, k):
    g = Grid.centered(128, 12.0)
    rho = band_limited_density(g, coeffs)
    f = np.sqrt(rho.values) * np.exp(1j * k * g.x)
    lhs = quadrature(np.abs(f) ** 2, g)
    rhs = np.sum(np.abs(np.fft.fft(f)) ** 2) / g.n * g.length / g.n
    assert lhs == pytest.approx(rhs, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(density_coeffs())
def test_first_derivative_twice_equals_second(coeffs):
    g = Grid.centered(128, 12.0)
    f = band_limited_density(g, coeffs)
    d11 = spectral_derivative(spectral_derivative(f, 1), 1).values
    d2 = spectral_derivative(f, 2).values
    assert np.max(np.abs(d11 - d2)) <= 1e-8 * np.max(np.abs(d2))


@settings(max_examples=30, deadline=None)
@given(density_coeffs(), density_coeffs(amp=2.0))
def test_unwrap_recovers_phase(rcoeffs, scoeffs):
    g = Grid.centered(128, 12.0)
    R = np.sqrt(band_limited_density(g, rcoeffs).values)
    S = np.log(band_limited_density(g, scoeffs).values) * g.hbar
    ph = unwrap_phase(WaveField(g, R * np.exp(1j * S / g.hbar)))
    diff = ph.S.values - S
    shift = diff[0]
    assert abs(shift / (2 * np.pi) - round(shift / (2 * np.pi))) < 1e-9
    assert np.max(np.abs(diff - shift)) < 1e-9


def test_csv_and_json_round_trip(tmp_path):
    g = Grid.centered(32, 7.0, hbar=0.7, mass=1.3)
    psi = states.gaussian_packet(g, 0.3, 1.1, k=0.4, time=0.25)
    p = tmp_path / "psi.csv"
    field_to_csv(psi, p)
    back = field_from_csv(p, g, 0.25)
    assert np.max(np.abs(back.values - psi.values)) <= 1e-15 * np.max(np.abs(psi.values))
    rho = RealField(g, psi.density, 0.25)
    again = field_from_json(field_to_json(rho))
    assert isinstance(again, RealField)
    assert again.grid == g and again.time == 0.25
    assert np.array_equal(again.values, rho.values)
    doc = json.loads(field_to_json(psi))
    assert set(doc) >= {"grid", "time", "values"}
    assert np.array_equal(field_from_json(field_to_json(psi)).values, psi.values)
