"""Noncommutative torus algebra and truncated index pairings."""

from fractions import Fraction

import numpy as np
import pytest

from topoindex.errors import InvalidParams
from topoindex.nctorus import (
    ClockShiftRep,
    NCElement,
    clock_shift,
    fixed_point_generators,
    generator_u,
    generator_v,
    lattice_degree_one_coeffs,
    nc_index_pairing_1d,
    nc_index_pairing_3d,
    theta_action,
    toeplitz_index,
    winding_loop_coeffs,
)

THETAS = [Fraction(1, 3), Fraction(2, 5), Fraction(3, 8)]


@pytest.mark.parametrize("theta", THETAS)
def test_clock_shift_commutation_exact(theta):
    rep = clock_shift(theta.numerator, theta.denominator)
    u, v = rep.clock, rep.shift
    assert np.linalg.norm(u @ v - rep.omega * v @ u) < 1e-13


def test_clock_shift_rejects_non_coprime():
    with pytest.raises(InvalidParams):
        clock_shift(2, 4)


@pytest.mark.parametrize("theta", THETAS)
def test_theta_action_on_generators(theta):
    u, v = generator_u(theta), generator_v(theta)
    assert theta_action(u).distance(v.adjoint()) < 1e-14
    assert theta_action(v).distance((-1.0) * u.adjoint()) < 1e-14
    assert theta_action(u.adjoint()).distance(v) < 1e-14
    assert theta_action(v.adjoint()).distance((-1.0) * u) < 1e-14


@pytest.mark.parametrize("theta", THETAS)
def test_theta_action_respects_product_order(theta):
    u, v = generator_u(theta), generator_v(theta)
    lhs = theta_action(u * v)
    rhs = (-1.0) * (v.adjoint() * u.adjoint())
    assert lhs.distance(rhs) < 1e-13


@pytest.mark.parametrize("theta", THETAS)
def test_theta_squares_to_minus_one_with_tracked_phase(theta):
    # Theta is multiplicative, so Theta^2 = -1 on the generators and the
    # tracked phase (-1)^{m+n} appears on higher monomials
    u, v = generator_u(theta), generator_v(theta)
    for degree, mono in ((1, u), (1, v), (2, u * v), (3, u * u * v)):
        twice = theta_action(theta_action(mono))
        assert twice.distance(((-1.0) ** degree) * mono) < 1e-12


@pytest.mark.parametrize("theta", THETAS)
def test_fixed_point_generators_identities(theta):
    x, y = fixed_point_generators(theta)
    assert theta_action(x).distance(x) < 1e-12
    assert theta_action(y).distance(y) < 1e-12
    assert x.adjoint().distance((-1.0) * y) < 1e-13
    rep = clock_shift(theta.numerator, theta.denominator)
    xm = x.represent(rep)
    ym = y.represent(rep)
    assert np.linalg.norm(xm @ xm.conj().T - np.eye(rep.q)) < 1e-12
    assert np.linalg.norm(ym @ ym.conj().T - np.eye(rep.q)) < 1e-12


def test_fixed_point_generators_commutative_limit():
    x, y = fixed_point_generators(Fraction(0, 1))
    prod = x * y - y * x
    assert all(abs(c) < 1e-14 for c in prod.terms.values())


@pytest.mark.parametrize("theta", THETAS)
def test_representation_is_star_homomorphism(theta):
    rep = clock_shift(theta.numerator, theta.denominator)
    u, v = generator_u(theta), generator_v(theta)
    a = u * v + 0.5 * v.adjoint()
    b = v * u * u + 2.0 * u.adjoint()
    lhs = (a * b).represent(rep)
    rhs = a.represent(rep) @ b.represent(rep)
    assert np.linalg.norm(lhs - rhs) < 1e-12
    assert np.linalg.norm(a.adjoint().represent(rep) - a.represent(rep).conj().T) < 1e-12


def test_nc_element_rejects_wrong_representation_angle():
    a = generator_u(Fraction(1, 3))
    with pytest.raises(InvalidParams):
        a.represent(clock_shift(1, 5))


@pytest.mark.parametrize("winding", range(-3, 4))
def test_toeplitz_index_equals_winding(winding):
    co = winding_loop_coeffs(winding)
    assert toeplitz_index(co, 64) == winding


def test_toeplitz_index_constant_loop_zero():
    assert toeplitz_index({(0,): np.array([[1.0 + 0j]])}, 32) == 0


def test_toeplitz_index_band_limited_loops():
    inside = {(0,): np.array([[0.3 + 0j]]), (1,): np.array([[1.0 + 0j]])}
    outside = {(0,): np.array([[2.0 + 0j]]), (1,): np.array([[1.0 + 0j]])}
    assert toeplitz_index(inside, 64) == 1
    assert toeplitz_index(outside, 64) == 0


def test_toeplitz_index_stable_in_cutoff():
    co = winding_loop_coeffs(2)
    assert toeplitz_index(co, 16) == toeplitz_index(co, 96) == 2


def test_toeplitz_index_needs_headroom():
    with pytest.raises(InvalidParams):
        toeplitz_index(winding_loop_coeffs(3), 8)


@pytest.mark.parametrize("winding", range(-3, 4))
def test_pairing_1d_calibrated_matches_winding(winding):
    pr = nc_index_pairing_1d(winding_loop_coeffs(winding), 64)
    assert pr.calibrated == pytest.approx(winding, abs=1e-10)
    assert pr.raw.real == pytest.approx(2.0 * winding, abs=1e-10)
    assert pr.residue < 1e-6


def test_pairing_1d_additive_for_products():
    # e^{i t} * e^{i t} = e^{2 i t}
    pr = nc_index_pairing_1d(winding_loop_coeffs(2), 64)
    single = nc_index_pairing_1d(winding_loop_coeffs(1), 64)
    assert pr.calibrated == pytest.approx(2 * single.calibrated, abs=1e-10)


def test_pairing_3d_trivial_symbol_near_zero():
    co = lattice_degree_one_coeffs(-4.0)
    pr = nc_index_pairing_3d(co, 4, residue_tol=0.3)
    assert pr.rounded == 0
    assert abs(pr.calibrated) < 0.1


def test_pairing_3d_degree_one_symbol():
    co = lattice_degree_one_coeffs(-2.0)
    pr = nc_index_pairing_3d(co, 4, residue_tol=0.3)
    assert pr.rounded == 1
    assert 0.7 < pr.calibrated < 1.1


def test_pairing_3d_band_limit_guard():
    wide = {(2, 0, 0): np.eye(2, dtype=complex),
            (0, 0, 0): np.eye(2, dtype=complex)}
    with pytest.raises(InvalidParams):
        nc_index_pairing_3d(wide, 4)


def test_pairing_3d_singular_symbol_rejected():
    # mass -3 closes the symbol gap
    co = lattice_degree_one_coeffs(-3.0)
    with pytest.raises(InvalidParams):
        nc_index_pairing_3d(co, 4)


def test_coeffs_from_json_round_trip():
    from topoindex.nctorus import coeffs_from_json

    doc = [{"n": [1], "matrix": [[[1.0, 0.0]]]},
           {"n": [0], "matrix": [[[0.25, -0.5]]]}]
    co = coeffs_from_json(doc)
    assert set(co) == {(1,), (0,)}
    assert co[(0,)][0, 0] == 0.25 - 0.5j
    assert toeplitz_index({(1,): co[(1,)]}, 16) == 1
    with pytest.raises(InvalidParams):
        coeffs_from_json([{"n": [0]}])


def test_truncated_module_invariants_exact():
    from topoindex.nctorus import fredholm_module_1d, fredholm_module_3d

    m1 = fredholm_module_1d(16)
    assert m1.involution_defect() == 0.0
    assert m1.projection_defect() == 0.0
    # zero mode carries sign +1: the projection annihilates it
    zero_index = 16
    assert m1.projection[zero_index, zero_index] == 0.0

    m3 = fredholm_module_3d(2)
    assert m3.involution_defect() < 1e-13
    assert m3.projection_defect() < 1e-13
