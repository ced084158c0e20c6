import numpy as np
import pytest
from math import comb

from mblchain import xxz
from mblchain.disorder import DisorderSpec, SeedPlan, constant_field, sample_field
from mblchain.errors import ConfigurationError, DegeneracyError

PLAN = SeedPlan(16180)
UNIFORM = DisorderSpec()


def test_basis_enumeration():
    basis = xxz.enumerate_basis(2, 2)
    assert basis.dim == comb(5, 2)
    assert basis.configs[0] == (-2, -1)
    assert basis.configs[-1] == (1, 2)
    assert basis.index[(-1, 2)] == basis.configs.index((-1, 2))
    with pytest.raises(ConfigurationError):
        xxz.enumerate_basis(6, 2)


def test_component_degree():
    assert xxz.component_degree((0, 1, 2)) == 2
    assert xxz.component_degree((0, 2, 4)) == 6
    assert xxz.component_degree((-3, -2, 1, 2, 5)) == 6


def test_neighbors_hard_core_and_walls():
    basis = xxz.enumerate_basis(2, 2)
    nbrs = xxz.neighbors((-2, -1), basis)
    # left particle blocked by wall and by the right particle;
    # right particle can only move right
    assert set(nbrs) == {(-2, 0)}
    assert all(n in basis.index for n in nbrs)


def test_droplet_geometry_distances():
    basis = xxz.enumerate_basis(3, 3)
    geo = xxz.droplet_geometry(basis)
    for idx in geo.droplet_indices:
        x = basis.configs[idx]
        assert all(b - a == 1 for a, b in zip(x, x[1:]))
    i = basis.index[(-3, 0, 3)]
    # nearest droplet around the middle particle: (-1, 0, 1)
    assert geo.distance[i] == 4
    assert geo.distance[basis.index[(-1, 0, 1)]] == 0


def test_set_distances_agree():
    basis = xxz.enumerate_basis(2, 3)
    a = [(-3, -2), (-3, 0)]
    b = [(2, 3), (1, 3)]
    direct = xxz.set_distance(a, b)
    bfs = xxz.set_distance_bfs(a, b, basis)
    assert direct == bfs
    assert xxz.set_distance(a, a) == 0


def test_sector_diagonal_hand_value():
    # single particle at the left wall: hop degree 1, one cluster,
    # no field, wall touch
    w = constant_field(0.0, 3)
    h = xxz.build_h_sector(1, 1, 2.0, 0.25, w)
    i = h.basis.index[(-1,)]
    # hop term 1/(2*2), cluster term (1/2)(1 - 1/2)*2, wall weight 0
    assert h.matrix[i, i] == pytest.approx(0.75)
    # interior site: hop degree 2, no wall touch
    j = h.basis.index[(0,)]
    assert h.matrix[j, j] == pytest.approx(0.5 + 0.5)
    assert h.matrix[i, j] == pytest.approx(-0.25)


def test_sector_positivity_and_gap():
    # every term nonnegative: spectrum >= 1 - 1/Delta for any valid input
    for delta in (2.0, 5.0):
        w = sample_field(UNIFORM, 9, PLAN, 1)
        h = xxz.build_h_sector(3, 4, delta, xxz.min_boundary_weight(delta), w)
        vals = np.linalg.eigvalsh(h.dense())
        assert vals.min() >= 1.0 - 1.0 / delta - 1e-10


def test_build_validation():
    w = constant_field(0.0, 5)
    with pytest.raises(ConfigurationError):
        xxz.build_h_sector(1, 2, 0.9, 0.5, w)
    with pytest.raises(ConfigurationError):
        xxz.build_h_sector(1, 2, 2.0, 0.1, w)
    with pytest.raises(ConfigurationError):
        xxz.build_h_sector(1, 3, 2.0, 0.5, w)  # field length mismatch
    bad = constant_field(-1.0, 5)
    with pytest.raises(ConfigurationError):
        xxz.build_h_sector(1, 2, 2.0, 0.5, bad)


def test_droplet_band_closed_forms():
    for delta in (2.0, 3.0, 6.0):
        b1 = xxz.droplet_band(1, delta)
        assert abs(b1.lower - (1 - 1 / delta)) < 1e-12
        assert abs(b1.upper - (1 + 1 / delta)) < 1e-12
        b2 = xxz.droplet_band(2, delta)
        assert abs(b2.lower - (1 - 1 / delta ** 2)) < 1e-12
        assert abs(b2.upper - 1.0) < 1e-12
        b3 = xxz.droplet_band(3, delta)
        assert abs(b3.lower - (1 - 1 / (2 * delta ** 2 - delta))) < 1e-12
        assert abs(b3.upper - (1 - 1 / (2 * delta ** 2 + delta))) < 1e-12


def test_droplet_band_nesting_and_limit():
    delta = 2.5
    limit = np.sqrt(1 - 1 / delta ** 2)
    prev = xxz.droplet_band(1, delta)
    for n in range(2, 201):
        band = xxz.droplet_band(n, delta)
        assert band.lower >= prev.lower - 1e-14
        assert band.upper <= prev.upper + 1e-14
        prev = band
    assert abs(prev.lower - limit) < 1e-10
    assert abs(prev.upper - limit) < 1e-10


def test_spectral_windows():
    delta = 2.0
    w_i = xxz.spectral_window(delta, kind="I")
    assert (w_i.lower, w_i.upper) == (0.5, 1.0)
    w_d = xxz.spectral_window(delta, 0.5, "I_delta")
    assert (w_d.lower, w_d.upper) == (0.5, 0.75)
    w_0 = xxz.spectral_window(delta, 0.5, "I_0_delta")
    assert (w_0.lower, w_0.upper) == (0.0, 0.75)
    with pytest.raises(ConfigurationError):
        xxz.spectral_window(delta, kind="I_delta")  # needs safety > 0
    with pytest.raises(ConfigurationError):
        xxz.spectral_window(delta, 0.5, "bogus")


def test_free_sector_spectrum_confined_to_band():
    # no disorder: window spectrum must sit inside the closed-form band,
    # up to a finite-size margin shrinking with L
    delta, n = 2.0, 2
    margins = {}
    for L in (10, 25, 40):
        w = constant_field(0.0, 2 * L + 1)
        h = xxz.build_h_sector(n, L, delta, xxz.min_boundary_weight(delta), w)
        vals = np.linalg.eigvalsh(h.dense())
        band = xxz.droplet_band(n, delta)
        window = xxz.spectral_window(delta, kind="I")
        inside = vals[window.contains(vals)]
        margins[L] = max(band.lower - inside.min(), 0.0)
        assert inside.max() <= band.upper + 1e-9
    assert margins[40] <= margins[10] + 1e-12


def test_eigenpairs_in_window_orthonormal():
    delta = 3.0
    # weak field so the two-particle droplet states stay inside the window
    w = sample_field(DisorderSpec(coupling=0.05), 13, PLAN, 2)
    h = xxz.build_h_sector(2, 6, delta, xxz.min_boundary_weight(delta), w)
    window = xxz.spectral_window(delta, 0.5)
    pairs = xxz.eigenpairs_in_window(h, window)
    assert pairs
    for e, psi in pairs:
        assert window.contains([e])[0]
        assert abs(np.linalg.norm(psi) - 1) < 1e-9
        assert np.linalg.norm(h.matrix @ psi - e * psi) < 1e-8


def test_droplet_profile_mass_conservation():
    delta = 3.0
    w = sample_field(UNIFORM, 13, PLAN, 3)
    h = xxz.build_h_sector(3, 6, delta, xxz.min_boundary_weight(delta), w)
    geo = xxz.droplet_geometry(h.basis)
    pairs = xxz.eigenpairs_in_window(h, xxz.spectral_window(delta, kind="I"))
    for _, psi in pairs:
        profile = xxz.droplet_profile(psi, geo)
        total = sum(v ** 2 for v in profile.values())
        assert abs(total - 1.0) < 1e-9


def test_ct_check_bound_holds_and_closed_form():
    delta, safety = 2.0, 0.5
    # closed-form constants at this parameter point
    assert 16 * delta / (safety * (delta - 1)) == 64.0
    assert 1 + safety * (delta - 1) / 8 == 1.0625
    w = sample_field(UNIFORM, 17, PLAN, 4)
    h = xxz.build_h_sector(2, 8, delta, xxz.min_boundary_weight(delta), w)
    a = [(-8, -7)]
    b = [(6, 8)]
    measured, bound = xxz.ct_check(h, 0.6, safety, a, b)
    d = xxz.set_distance(a, b)
    assert abs(bound - 64.0 * 1.0625 ** (-d)) < 1e-12
    assert measured <= bound
    with pytest.raises(ConfigurationError):
        xxz.ct_check(h, 0.9, safety, a, b)  # energy above the window


def test_sector_correlator_degeneracy_guard():
    import scipy.sparse as sp
    # a fabricated sector operator with an exactly repeated window level
    delta = 2.0
    w = constant_field(0.0, 3)
    basis = xxz.enumerate_basis(1, 1)
    degenerate = xxz.SectorHamiltonian(
        basis, delta, 0.25, w, sp.csr_matrix(np.diag([0.6, 0.6, 2.0])))
    window = xxz.spectral_window(delta, kind="I")
    with pytest.raises(DegeneracyError):
        xxz.sector_correlator(degenerate, window, 0, 1)


def test_sector_correlator_disordered():
    delta = 4.0
    w = sample_field(UNIFORM, 11, PLAN, 5)
    h = xxz.build_h_sector(2, 5, delta, xxz.min_boundary_weight(delta), w)
    window = xxz.spectral_window(delta, 0.5)
    q00 = xxz.sector_correlator(h, window, 0, 0)
    q04 = xxz.sector_correlator(h, window, 0, 4)
    assert q00 >= q04 >= 0.0


def test_chain_spectrum_window_states_and_vacuum():
    delta = 6.0
    w = sample_field(UNIFORM, 5, PLAN, 6)
    chain = xxz.ChainSpectrum(2, delta, xxz.min_boundary_weight(delta), w)
    assert chain.all_energies().size == 2 ** 5
    w0 = xxz.spectral_window(delta, 0.5, "I_0_delta")
    states = chain.window_states(w0)
    assert states[0][0] == 0 and states[0][1] == 0.0
    wd = xxz.spectral_window(delta, 0.5)
    assert all(n > 0 for n, _, _ in chain.window_states(wd))


def test_window_number_operator_projection_identity():
    delta = 6.0
    w = sample_field(UNIFORM, 5, PLAN, 7)
    chain = xxz.ChainSpectrum(2, delta, xxz.min_boundary_weight(delta), w)
    window = xxz.spectral_window(delta, 0.5)
    energies, mat = chain.window_number_operator(window, 0)
    assert np.abs(mat - mat.T).max() < 1e-12
    # N_j is a projection on the configuration basis, so 0 <= X_I <= 1
    vals = np.linalg.eigvalsh(mat)
    assert vals.min() > -1e-10 and vals.max() < 1 + 1e-10
    # evolution at t=0 is the identity
    frozen = xxz.evolve_window_observable(energies, mat, 0.0)
    assert np.abs(frozen - mat).max() < 1e-14
