import numpy as np
import pytest

from quantum_forms import states
from quantum_forms.errors import NodeTrap
from quantum_forms.field_core import Grid
from quantum_forms.paths import (PathEnsemble, bohm_trajectories, current_velocity,
                                 estimate_drifts, ks_distance, nelson_ensemble,
                                 osmotic_velocity, sample_density, sample_increments)
from quantum_forms.solvers import PotentialSpec, SolverParams, evolve

from _support import stationary_trajectory


def _ground(n=256, length=20.0, steps=6, dt=0.05):
    g = Grid.centered(n, length)
    V = PotentialSpec.harmonic(g, 1.0)
    return stationary_trajectory(states.harmonic_ground(g, 1.0), 0.5, V, dt, steps)


def _spreading(n_steps=300, stride=30):
    g = Grid.centered(256, 40.0)
    return evolve(states.gaussian_packet(g, 0.0, 1.0, 0.5), PotentialSpec.free(g),
                  SolverParams(dt=0.01), n_steps, stride=stride)


def test_plane_wave_paths_are_straight_lines():
    g = Grid(64, 0.0, 2 * np.pi)
    tr = stationary_trajectory(states.plane_wave(g, 2), 2.0, PotentialSpec.free(g), 0.1, 11)
    x0 = np.linspace(0.1, 6.0, 7)
    ens = bohm_trajectories(tr, 7, x0=x0)
    L = g.length
    for j, t in enumerate(tr.times):
        d = (ens.positions[:, j] - (x0 + 2.0 * t) + 0.5 * L) % L - 0.5 * L
        assert np.max(np.abs(d)) < 1e-10


def test_real_stationary_state_gives_static_paths():
    tr = _ground()
    ens = bohm_trajectories(tr, 500, seed=3)
    assert np.max(np.abs(ens.positions - ens.positions[:, :1])) == 0.0


def test_bohm_ensemble_follows_spreading_density():
    tr = _spreading()
    ens = bohm_trajectories(tr, 10000, seed=1)
    ks = [ks_distance(ens.positions[:, i], tr[i]) for i in range(len(tr))]
    assert max(ks) < 0.02


def test_increments_have_diffusive_moments():
    D, dt = 0.5, 0.01
    z = sample_increments(7, 200000, D, dt)
    assert abs(np.mean(z)) < 5 * np.sqrt(2 * D * dt / z.size)
    assert np.var(z) == pytest.approx(2 * D * dt, rel=0.02)


def test_nelson_forward_ensemble_is_stationary_on_ground_state():
    tr = _ground(steps=41)
    ens = nelson_ensemble(tr, 10000, seed=2, substeps=4)
    ks = [ks_distance(ens.positions[:, i], tr[i]) for i in range(len(tr))]
    assert max(ks) < 0.03


def test_nelson_free_packet_variance():
    g = Grid.centered(512, 60.0)
    tr = evolve(states.gaussian_packet(g, 0.0, 1.0), PotentialSpec.free(g),
                SolverParams(dt=0.01), 300, stride=30)
    ens = nelson_ensemble(tr, 20000, seed=5, substeps=4)
    t = tr.times[-1]
    assert np.var(ens.positions[:, -1]) == pytest.approx(1.0 + (t / 2) ** 2, rel=0.05)


def test_backward_ensemble_is_stored_in_forward_time():
    tr = _spreading(100, 10)
    ens = nelson_ensemble(tr, 5000, seed=4, direction="backward", substeps=4)
    assert ens.kind == "nelson_backward"
    assert ks_distance(ens.positions[:, -1], tr[-1]) < 0.03
    assert ks_distance(ens.positions[:, 0], tr[0]) < 0.03


def test_drift_estimate_covers_osmotic_velocity_on_ground_state():
    tr = _ground(n=512, length=20.0, steps=9, dt=0.01)
    fwd = nelson_ensemble(tr, 40000, seed=10, substeps=4)
    bwd = nelson_ensemble(tr, 40000, seed=11, direction="backward", substeps=4)
    est = estimate_drifts(fwd, bwd)
    p = est.populated
    assert p.sum() >= 10
    u_true = np.full(est.u_est.shape, np.nan)
    u_true[p] = -est.mean_x[p]
    assert est.coverage(u_true) >= 0.9
    assert np.max(np.abs(est.v_est[p]) - 3 * est.ci_width[p]) < 0


def test_drift_estimate_on_plane_wave():
    g = Grid(128, 0.0, 2 * np.pi)
    tr = stationary_trajectory(states.plane_wave(g, 1), 0.5, PotentialSpec.free(g), 0.01, 5)
    fwd = nelson_ensemble(tr, 40000, seed=1, substeps=2)
    bwd = nelson_ensemble(tr, 40000, seed=2, direction="backward", substeps=2)
    est = estimate_drifts(fwd, bwd, bin_points=8)
    p = est.populated
    assert np.all(p)
    assert est.coverage(np.zeros(p.size)) >= 0.9
    assert np.mean(est.v_est[p]) == pytest.approx(1.0, abs=0.1)


def test_complex_velocity_of_boosted_gaussian():
    g = Grid.centered(256, 30.0)
    sigma, k = 1.2, 0.8
    psi = states.gaussian_packet(g, 0.0, sigma, k)
    x = np.linspace(-3, 3, 13)
    assert np.max(np.abs(current_velocity(psi, x) - k)) < 1e-10
    assert np.max(np.abs(osmotic_velocity(psi, x) + 0.5 * x / sigma ** 2)) < 1e-3


def test_seeded_ensembles_are_deterministic():
    tr = _spreading(60, 10)
    a = nelson_ensemble(tr, 5000, seed=9)
    b = nelson_ensemble(tr, 5000, seed=9)
    c = nelson_ensemble(tr, 5000, seed=10)
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)
    assert np.array_equal(bohm_trajectories(tr, 300, seed=9).positions,
                          bohm_trajectories(tr, 300, seed=9).positions)


def test_binary_and_csv_round_trip(tmp_path):
    tr = _spreading(20, 10)
    ens = nelson_ensemble(tr, 50, seed=1)
    back = PathEnsemble.from_bytes(ens.to_bytes(), tr.grid, ens.kind)
    assert np.array_equal(back.positions, ens.positions)
    assert back.seed == 1 and back.dt == ens.dt
    p = tmp_path / "paths.csv"
    ens.to_csv(p)
    rows = np.loadtxt(p, delimiter=",", skiprows=1)
    assert np.array_equal(rows[:, 1:], ens.positions)


def test_paths_in_node_region_raise_trap():
    g = Grid.centered(256, 40.0)
    psi = states.superposition(states.gaussian_packet(g, -10.0, 1.0),
                               states.gaussian_packet(g, 10.0, 1.0))
    tr = stationary_trajectory(psi, 0.0, PotentialSpec.free(g), 0.1, 15)
    with pytest.raises(NodeTrap):
        bohm_trajectories(tr, 1, x0=np.array([0.0]))


def test_ks_distance_scales_as_inverse_root_n():
    g = Grid.centered(256, 20.0)
    rho = states.gaussian_packet(g).density
    sizes = np.array([500, 2000, 8000, 32000])
    ks = []
    for n in sizes:
        vals = [ks_distance(sample_density(rho, g, np.random.default_rng(s).random(n)), rho, g)
                for s in range(40)]
        ks.append(np.mean(vals))
    slope = np.polyfit(np.log(sizes), np.log(ks), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.08)


def test_invalid_direction():
    with pytest.raises(ValueError):
        nelson_ensemble(_spreading(20, 10), 10, direction="sideways")
