import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_convolution
from torus_lab import (
    Lattice,
    LatticeMismatchError,
    PhysicalField,
    SnapshotFormatError,
    SpectralField,
    ZeroMeanError,
    dealiased_product,
    direct_convolution,
    iter_triads,
    leray_project,
    random_solenoidal,
    read_snapshot,
    sobolev_norm,
    taylor_green,
    to_physical,
    to_spectral,
    write_snapshot,
)
from torus_lab.spectral_core import symmetrize_real

SMALL = Lattice(4)


def shear(lattice, amp=1.0):
    """(0, amp cos 2 pi x, 0)."""
    return SpectralField.from_modes(lattice, {(1, 0, 0): (0, amp / 2, 0)})


def random_coeffs(lattice, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(lattice.shape) + 1j * rng.standard_normal(lattice.shape)
    c[:, ~lattice.nonzero] = 0
    return symmetrize_real(SpectralField(lattice, c))


# lattice ---------------------------------------------------------------------


def test_lattice_enumerates_cube_minus_origin():
    lat = Lattice(3, "none")
    k = lat.wavevectors()
    assert len(k) == 7**3 - 1
    assert not np.any(np.all(k == 0, axis=1))
    assert np.max(np.abs(k)) == 3


@pytest.mark.parametrize("N", [3, 4, 8, 9, 16])
def test_two_thirds_mask(N):
    lat = Lattice(N)
    K = 2 * N // 3
    assert lat.cutoff == K
    inside = np.max(np.abs(lat.kvec), axis=0) <= K
    assert np.array_equal(lat.dealias_mask, inside)
    assert Lattice(N, "none").cutoff == N


def test_lattice_rejects_bad_arguments():
    with pytest.raises(ValueError):
        Lattice(0)
    with pytest.raises(ValueError):
        Lattice(4, "half")


def test_retained_set_excludes_origin(lattice8):
    assert not lattice8.retained[lattice8.index((0, 0, 0))]
    assert len(lattice8.retained_modes) == (2 * 5 + 1) ** 3 - 1


# leray projection --------------------------------------------------------------


def test_leray_annihilates_gradients():
    u = SpectralField(SMALL, SMALL.kvec.astype(complex))
    assert np.max(np.abs(leray_project(u).coeff)) < 1e-15


def test_leray_subtracts_k_component():
    u = SpectralField.from_modes(SMALL, {(1, 0, 0): (1, 1, 0)})
    np.testing.assert_allclose(leray_project(u).mode((1, 0, 0)), [0, 1, 0], atol=1e-16)


def test_leray_leaves_solenoidal_unchanged(lattice8):
    u = random_solenoidal(lattice8, 3.0, 4)
    assert np.max(np.abs(leray_project(u).coeff - u.coeff)) <= 1e-15 * u.max_amplitude()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), s=st.floats(0.0, 3.0))
def test_leray_idempotent_and_contracting(seed, s):
    u = random_coeffs(SMALL, seed)
    p = leray_project(u)
    assert np.max(np.abs(leray_project(p).coeff - p.coeff)) < 1e-13
    assert sobolev_norm(p, s) <= sobolev_norm(u, s) * (1 + 1e-14)
    assert p.is_solenoidal()


# symmetrize --------------------------------------------------------------------


def test_symmetrize_averages_partner():
    u = SpectralField.from_modes(SMALL, {(1, 0, 0): (1, 0, 0)}, hermitian=False)
    v = symmetrize_real(u)
    np.testing.assert_allclose(v.mode((1, 0, 0)), [0.5, 0, 0])
    np.testing.assert_allclose(v.mode((-1, 0, 0)), [0.5, 0, 0])


def test_symmetrize_fixes_hermitian_and_kills_antihermitian():
    u = random_coeffs(SMALL, 3)
    np.testing.assert_array_equal(symmetrize_real(u).coeff, u.coeff)
    anti = SpectralField(SMALL, 1j * u.coeff)
    assert np.max(np.abs(symmetrize_real(anti).coeff)) == 0.0


# generators ---------------------------------------------------------------------


def test_random_solenoidal_deterministic_and_valid(lattice8):
    a = random_solenoidal(lattice8, 3.0, 7)
    b = random_solenoidal(lattice8, 3.0, 7)
    np.testing.assert_array_equal(a.coeff, b.coeff)
    assert a.hermitian_defect() == 0.0
    assert a.is_solenoidal()
    assert not np.any(a.coeff[:, ~lattice8.retained])
    assert not np.array_equal(a.coeff, random_solenoidal(lattice8, 3.0, 8).coeff)


def test_random_solenoidal_norms_increase_in_s(lattice8):
    u = random_solenoidal(lattice8, 3.0, 1)
    norms = [sobolev_norm(u, s) for s in np.linspace(0, 4, 17)]
    assert math.isfinite(sobolev_norm(u, 1.0))
    assert all(b >= a for a, b in zip(norms, norms[1:]))


def test_taylor_green_modes(lattice8):
    u = taylor_green(lattice8, 1.0)
    amp = np.sqrt(np.sum(np.abs(u.coeff) ** 2, axis=0))
    excited = lattice8.kvec[:, amp > 0].T
    assert len(excited) == 8
    assert np.all(np.sum(excited**2, axis=1) == 3)
    assert u.divergence_defect() <= 1e-15
    assert u.hermitian_defect() == 0.0


@pytest.mark.parametrize("A", [0.5, 1.0, 3.0])
def test_taylor_green_physical_samples_and_energy(lattice8, A):
    u = taylor_green(lattice8, A)
    vals = to_physical(u).values
    g = lattice8.grid_size
    X, Y, Z = np.meshgrid(*(2 * np.pi * np.arange(g) / g,) * 3, indexing="ij")
    expected = A * np.stack([np.sin(X) * np.cos(Y) * np.cos(Z), -np.cos(X) * np.sin(Y) * np.cos(Z), 0 * X])
    np.testing.assert_allclose(vals, expected, atol=1e-14 * A)
    # grid quadrature of |u|^2 (exact for trigonometric polynomials of this degree)
    l2_quad = math.sqrt(np.mean(np.sum(vals**2, axis=0)))
    assert sobolev_norm(u, 0.0) == pytest.approx(l2_quad, rel=1e-14)
    assert sobolev_norm(u, 0.0) == pytest.approx(A / 2, rel=1e-14)


# transforms ----------------------------------------------------------------------


def test_to_physical_single_mode():
    vals = to_physical(shear(SMALL)).values
    g = SMALL.grid_size
    x = np.arange(g) / g
    expected = np.broadcast_to(np.cos(2 * np.pi * x)[:, None, None], (g, g, g))
    assert np.max(np.abs(vals[0])) < 1e-15
    assert np.max(np.abs(vals[2])) < 1e-15
    np.testing.assert_allclose(vals[1], expected, atol=1e-15)


@pytest.mark.parametrize("N", [3, 4, 8])
def test_round_trip(N):
    lat = Lattice(N, "none")
    u = random_coeffs(lat, N)
    back = to_spectral(to_physical(u))
    assert np.max(np.abs(back.coeff - u.coeff)) <= 1e-12 * u.max_amplitude()


def test_to_spectral_rejects_mean_and_mismatch():
    g = SMALL.grid_size
    with pytest.raises(ZeroMeanError):
        to_spectral(PhysicalField(SMALL, np.ones((3, g, g, g))))
    with pytest.raises(LatticeMismatchError):
        to_spectral(PhysicalField(SMALL, np.zeros((3, g, g, g))), Lattice(5))
    with pytest.raises(LatticeMismatchError):
        PhysicalField(SMALL, np.zeros((3, g + 1, g + 1, g + 1)))


def test_physical_samples_are_real(lattice8):
    u = random_solenoidal(lattice8, 2.0, 0)
    assert np.isrealobj(to_physical(u).values)


# products ------------------------------------------------------------------------


def test_product_with_zero_is_zero(lattice8):
    u = random_solenoidal(lattice8, 3.0, 0)
    assert np.max(np.abs(dealiased_product(u, SpectralField.zeros(lattice8)).coeff)) == 0.0


def test_product_of_single_modes():
    # e^{2 pi i x} e^{2 pi i x} = e^{4 pi i x}; with the conjugate partners the
    # product (2 cos 2 pi x)^2 = 2 + 2 cos 4 pi x puts weight on (0,0,0) and (2,0,0).
    u = SpectralField.from_modes(SMALL, {(1, 0, 0): (1, 1, 1)})
    w = dealiased_product(u, u)
    amp = np.sqrt(np.sum(np.abs(w.coeff) ** 2, axis=0))
    support = {tuple(k) for k in SMALL.kvec[:, amp > 1e-14].T}
    assert support == {(0, 0, 0), (2, 0, 0), (-2, 0, 0)}
    np.testing.assert_allclose(w.mode((2, 0, 0)), [1, 1, 1], atol=1e-15)
    np.testing.assert_allclose(w.mode((0, 0, 0)), [2, 2, 2], atol=1e-15)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_product_matches_naive_convolution(seed):
    lat = Lattice(4)
    u = random_coeffs(lat, seed)
    v = random_coeffs(lat, seed + 100)
    ref = naive_convolution(u, v)
    w = dealiased_product(u, v)
    scale = max(np.max(np.abs(x)) for x in ref.values())
    for k, vec in ref.items():
        np.testing.assert_allclose(w.mode(k), vec, atol=1e-12 * scale)
    # nothing outside the dealias box
    assert not np.any(w.coeff[:, ~lat.dealias_mask])


def test_direct_convolution_matches_naive_oracle():
    lat = Lattice(5)
    u, v = random_coeffs(lat, 9), random_coeffs(lat, 10)
    ref = naive_convolution(u, v)
    d = direct_convolution(u, v)
    for k, vec in ref.items():
        np.testing.assert_allclose(d.mode(k), vec, atol=1e-12)


@pytest.mark.parametrize("N", [6, 8, 10])
def test_product_matches_direct_convolution(N):
    lat = Lattice(N)
    u, v = random_solenoidal(lat, 2.0, N), random_solenoidal(lat, 1.0, N + 1)
    a, b = dealiased_product(u, v).coeff, direct_convolution(u, v).coeff
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_product_lattice_mismatch():
    with pytest.raises(LatticeMismatchError):
        dealiased_product(SpectralField.zeros(Lattice(4)), SpectralField.zeros(Lattice(5)))


def test_triads_close_and_are_complete():
    lat = Lattice(3)
    modes = lat.retained_modes
    pairs = set()
    for I, J, P in iter_triads(lat):
        np.testing.assert_array_equal(modes[I] - modes[J], modes[P])
        pairs.update(zip(I.tolist(), J.tolist()))
    members = {tuple(k) for k in modes}
    expected = {
        (i, j)
        for i, k in enumerate(map(tuple, modes))
        for j, q in enumerate(map(tuple, modes))
        if tuple(a - b for a, b in zip(k, q)) in members
    }
    assert pairs == expected


def test_triads_chunked_equals_cached(lattice8):
    cached = np.concatenate([np.stack(c) for c in iter_triads(lattice8)], axis=1)
    chunked = np.concatenate([np.stack(c) for c in iter_triads(lattice8, chunk_pairs=50_000)], axis=1)
    np.testing.assert_array_equal(cached, chunked)


# snapshots -----------------------------------------------------------------------


def test_snapshot_round_trip(tmp_path, lattice8):
    u = random_solenoidal(lattice8, 3.0, 2)
    path = write_snapshot(u, tmp_path / "u.specfield")
    assert path.read_text().splitlines()[0] == "SPECFIELD v1 N=8"
    v = read_snapshot(path)
    np.testing.assert_array_equal(v.coeff, u.coeff)


@pytest.mark.parametrize(
    "body, message",
    [
        ("SPECFIELD v2 N=2\n", "header"),
        ("SPECFIELD v1 N=2\n1 0 0 1 0 0 0 0\n", "9 fields"),
        ("SPECFIELD v1 N=2\n3 0 0 1 0 0 0 0 0\n", "outside"),
        ("SPECFIELD v1 N=2\n-1 0 0 1 0 0 0 0 0\n", "canonical"),
        ("SPECFIELD v1 N=2\n1 0 0 1 0 0 0 0 0\n1 0 0 1 0 0 0 0 0\n", "duplicate"),
        ("", "empty"),
    ],
)
def test_snapshot_reader_rejects(tmp_path, body, message):
    path = tmp_path / "bad.specfield"
    path.write_text(body)
    with pytest.raises(SnapshotFormatError, match=message):
        read_snapshot(path)
