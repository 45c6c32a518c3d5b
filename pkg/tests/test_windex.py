"""Winding numbers, the odd Chern character and the boundary-circle index."""

import numpy as np
import pytest

from topoindex.errors import BranchUnsafe, NotUnitary, ResidueTooLarge, UnsupportedDegree
from topoindex.model import MomentumGrid, builtin
from topoindex.windex import (
    UnitaryField,
    boundary_index_2d,
    degree_one_field,
    degree_one_map,
    field_from_map,
    odd_chern_character,
    winding1d,
    winding3d,
)
from topoindex.z2 import sewing_field


def test_winding1d_unit_loop():
    grid = MomentumGrid((32,))
    fld = field_from_map(grid, lambda k: np.array([[np.exp(1j * k[0])]]))
    assert winding1d(fld) == 1


def test_winding1d_constant_is_zero():
    grid = MomentumGrid((16,))
    fld = field_from_map(grid, lambda k: np.eye(2, dtype=complex))
    assert winding1d(fld) == 0


def test_winding1d_diagonal_mixed_windings():
    grid = MomentumGrid((48,))
    fld = field_from_map(
        grid, lambda k: np.diag([np.exp(1j * k[0]), np.exp(-2j * k[0])]))
    assert winding1d(fld) == -1


def test_winding1d_additive_for_diagonal_products():
    grid = MomentumGrid((48,))
    g = field_from_map(grid, lambda k: np.diag([np.exp(1j * k[0]), 1.0]))
    h = field_from_map(grid, lambda k: np.diag([np.exp(2j * k[0]), np.exp(1j * k[0])]))
    prod = UnitaryField(grid, np.einsum("...ij,...jk->...ik", g.values, h.values))
    assert winding1d(prod) == winding1d(g) + winding1d(h) == 4


def test_winding1d_invariant_under_constant_conjugation():
    grid = MomentumGrid((32,))
    rng = np.random.default_rng(8)
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, _ = np.linalg.qr(m)
    g = field_from_map(grid, lambda k: np.diag([np.exp(1j * k[0]), np.exp(1j * k[0])]))
    conj = UnitaryField(grid, np.einsum("ij,...jk,kl->...il", q, g.values, q.conj().T))
    assert winding1d(conj) == winding1d(g) == 2


def test_winding1d_branch_safety():
    # winding 2 on a 4-point grid steps by pi per link: unsafe and caught
    grid = MomentumGrid((4,))
    with pytest.raises(BranchUnsafe):
        winding1d(field_from_map(grid, lambda k: np.array([[np.exp(2j * k[0])]])))


def test_unitary_field_rejects_non_unitary():
    grid = MomentumGrid((8,))
    with pytest.raises(NotUnitary):
        UnitaryField(grid, np.zeros((8, 2, 2), dtype=complex))


def test_winding3d_identity():
    grid = MomentumGrid((8, 8, 8))
    fld = field_from_map(grid, lambda k: np.eye(2, dtype=complex))
    res = winding3d(fld)
    assert res.rounded == 0 and res.residue < 1e-12


def test_winding3d_degree_one_map():
    res = winding3d(degree_one_field(MomentumGrid((16, 16, 16))))
    assert abs(res.rounded) == 1
    assert res.residue < 0.05


def test_winding3d_residue_shrinks_with_refinement():
    residues = [winding3d(degree_one_field(MomentumGrid((n, n, n))),
                          residue_tol=0.5).residue for n in (8, 16)]
    assert residues[1] < residues[0]


def test_winding3d_inverse_map_flips_sign():
    grid = MomentumGrid((12, 12, 12))
    plus = winding3d(degree_one_field(grid), residue_tol=0.5)
    minus = winding3d(degree_one_field(grid, power=-1), residue_tol=0.5)
    assert plus.rounded == -minus.rounded != 0


def test_winding3d_pair_reorder_flips_sign_not_parity():
    # reversing the Kramers-pair ordering exchanges the sewing matrix with
    # its transpose; the winding flips sign but keeps its parity
    grid = MomentumGrid((12, 12, 12))
    fld = degree_one_field(grid)
    reordered = UnitaryField(grid, np.swapaxes(fld.values, -1, -2))
    a = winding3d(fld, residue_tol=0.5)
    b = winding3d(reordered, residue_tol=0.5)
    assert a.rounded == -b.rounded
    assert a.rounded % 2 == b.rounded % 2 == 1


def test_winding3d_residue_guard():
    grid = MomentumGrid((8, 8, 8))
    with pytest.raises(ResidueTooLarge):
        winding3d(degree_one_field(grid), residue_tol=0.01)


def test_degree_one_map_constant_outside_ball():
    k = np.array([np.pi, np.pi, np.pi])
    assert np.allclose(degree_one_map(k), np.eye(2), atol=1e-12)
    assert np.allclose(degree_one_map(np.array([0.0, 0.0, 0.0])), -np.eye(2),
                       atol=1e-12)


def test_odd_chern_character_degree_one():
    grid = MomentumGrid((32,))
    fld = field_from_map(grid, lambda k: np.array([[np.exp(1j * k[0])]]))
    value = odd_chern_character(fld, 1)
    assert value == pytest.approx(2.0 * np.pi, rel=1e-3)


def test_odd_chern_character_identity_3d():
    grid = MomentumGrid((8, 8, 8))
    fld = field_from_map(grid, lambda k: np.eye(2, dtype=complex))
    assert odd_chern_character(fld, 3) == pytest.approx(0.0, abs=1e-12)


def test_odd_chern_character_consistent_with_winding3d():
    grid = MomentumGrid((16, 16, 16))
    fld = degree_one_field(grid)
    ch3 = odd_chern_character(fld, 3)
    res = winding3d(fld)
    assert ch3 / (4.0 * np.pi ** 2) == pytest.approx(res.value, abs=1e-10)


def test_odd_chern_character_unsupported_degree():
    grid = MomentumGrid((8, 8, 8))
    fld = field_from_map(grid, lambda k: np.eye(2, dtype=complex))
    with pytest.raises(UnsupportedDegree):
        odd_chern_character(fld, 5)


def test_boundary_index_matches_nu_on_builtins():
    grid = MomentumGrid((16, 16))
    cases = [
        ("kane-mele", {"lso": 0.06, "lv": 0.1}, -1),
        ("kane-mele", {"lso": 0.06, "lv": 0.4}, 1),
        ("bhz", {"m": 2.0}, -1),
        ("atomic-limit", {"n": 4, "dim": 2}, 1),
    ]
    for name, params, expected in cases:
        sf = sewing_field(builtin(name, **params), grid)
        assert boundary_index_2d(sf) == expected


def test_boundary_index_flips_across_bhz_mass_sign():
    grid = MomentumGrid((14, 14))
    top = boundary_index_2d(sewing_field(builtin("bhz", m=2.0), grid))
    triv = boundary_index_2d(sewing_field(builtin("bhz", m=-1.0), grid))
    assert top == -1 and triv == 1
