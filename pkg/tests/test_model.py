"""Grids, time reversal, builtin models, ribbons and model serialization."""

import numpy as np
import pytest

from topoindex.errors import (
    HoppingRangeTooLong,
    InvalidParams,
    NonHermitianInput,
    SchemaError,
    UnknownModel,
)
from topoindex.model import (
    MomentumGrid,
    TimeReversal,
    builtin,
    check_trs,
    direct_sum,
    load_model,
    ribbonize,
    standard_theta,
    to_json,
    trim_points,
)

TRS_BUILTINS = [
    ("kane-mele", {"t": 1.0, "lso": 0.06, "lv": 0.1}, 2),
    ("bhz", {"m": 2.0}, 2),
    ("fu-kane-mele-3d", {"m": -2.0}, 3),
    ("kitaev-chain", {"mu": 1.0}, 1),
    ("atomic-limit", {"n": 4, "dim": 2}, 2),
]


def test_grid_negation_closure_exact():
    grid = MomentumGrid((8, 6))
    for idx in grid.indices():
        neg = grid.negate_index(idx)
        total = grid.point(idx) + grid.point(neg)
        # sums are exact multiples of 2*pi
        assert np.allclose(np.round(total / (2 * np.pi)), total / (2 * np.pi),
                           atol=1e-14)


def test_grid_rejects_odd_sizes():
    with pytest.raises(InvalidParams):
        MomentumGrid((7, 8))


def test_trim_points_1d():
    assert trim_points(MomentumGrid((8,))).tolist() == [[0.0], [np.pi]]


def test_trim_points_2d_matches_fixed_point_set():
    pts = trim_points(MomentumGrid((8, 8)))
    expected = [[0.0, 0.0], [0.0, np.pi], [np.pi, 0.0], [np.pi, np.pi]]
    assert pts.tolist() == expected
    assert pts[-1].tolist() == [np.pi, np.pi]  # top codimension last


def test_trim_points_3d_count():
    pts = trim_points(MomentumGrid((6, 6, 6)))
    assert pts.shape == (8, 3)
    assert pts[-1].tolist() == [np.pi, np.pi, np.pi]


def test_trim_indices_are_self_negating():
    grid = MomentumGrid((10, 8))
    for idx in grid.trim_indices():
        assert grid.negate_index(idx) == idx


def test_time_reversal_squares_to_minus_one():
    theta = standard_theta(4)
    u = theta.unitary
    assert np.allclose(u @ np.conj(u), -np.eye(4), atol=1e-14)


def test_time_reversal_rejects_bad_unitary():
    with pytest.raises(InvalidParams):
        TimeReversal(np.eye(4))  # squares to +1, not -1


@pytest.mark.parametrize("name,params,dim", TRS_BUILTINS)
def test_builtin_trs_identity(name, params, dim):
    model = builtin(name, **params)
    grid = MomentumGrid(tuple([8] * dim))
    report = check_trs(model, grid)
    assert report.passed, f"{name}: deviation {report.max_deviation}"


@pytest.mark.parametrize("name,params,dim", TRS_BUILTINS)
def test_kramers_degeneracy_at_trims(name, params, dim):
    model = builtin(name, **params)
    grid = MomentumGrid(tuple([8] * dim))
    for idx in grid.trim_indices():
        ev = np.linalg.eigvalsh(model.h(grid.point(idx)))
        pairs = ev.reshape(-1, 2)
        assert np.all(pairs[:, 1] - pairs[:, 0] < 1e-9)


def test_trs_check_fails_with_zeeman_term():
    km = builtin("kane-mele")
    sz = np.kron(np.diag([1.0, -1.0]), np.eye(2))

    def broken(k, _base=km.evaluate):
        return _base(k) + 0.3 * sz

    perturbed = builtin("kane-mele")
    perturbed.evaluate = broken
    assert not check_trs(perturbed, MomentumGrid((6, 6))).passed


def test_constant_identity_model_passes_trs():
    atom = builtin("atomic-limit", n=4, dim=2)
    assert check_trs(atom, MomentumGrid((6, 6))).passed


def test_unknown_model_and_bad_params():
    with pytest.raises(UnknownModel):
        builtin("no-such-model")
    with pytest.raises(InvalidParams):
        builtin("kane-mele", bogus=1.0)
    with pytest.raises(InvalidParams):
        builtin("atomic-limit", n=6)


def test_hopf_model_occupied_projector_is_monopole_projector():
    hopf = builtin("hopf-two-band")
    rng = np.random.default_rng(2)
    for _ in range(12):
        k = rng.uniform(-np.pi, np.pi, size=2)
        h = hopf.h(k)
        ev, vec = np.linalg.eigh(h)
        proj = np.outer(vec[:, 0], vec[:, 0].conj())
        n = -np.array([h[0, 1].real, -h[0, 1].imag, h[0, 0].real])
        expected = 0.5 * (np.eye(2) + n[0] * np.array([[0, 1], [1, 0]])
                          + n[1] * np.array([[0, -1j], [1j, 0]])
                          + n[2] * np.diag([1.0, -1.0]))
        assert np.allclose(proj, expected, atol=1e-12)


def test_ribbon_is_hermitian_and_has_expected_size():
    km = builtin("kane-mele")
    ribbon = ribbonize(km, open_axis=0, width=12)
    h = ribbon.evaluate([0.7])
    assert h.shape == (48, 48)
    assert np.linalg.norm(h - h.conj().T) < 1e-12


def test_ribbon_periodic_restore_matches_bulk_spectrum():
    km = builtin("kane-mele", t=1.0, lso=0.06, lv=0.1)
    width = 12
    ribbon = ribbonize(km, open_axis=0, width=width)
    k_perp = 0.5
    ring = np.linalg.eigvalsh(ribbon.evaluate_periodic([k_perp]))
    bulk = []
    for m in range(width):
        k_open = -np.pi + 2 * np.pi * m / width
        bulk.extend(np.linalg.eigvalsh(km.h([k_open, k_perp])))
    assert np.allclose(np.sort(ring), np.sort(bulk), atol=1e-9)


def test_atomic_ribbon_is_flat_copies():
    atom = builtin("atomic-limit", n=4, dim=2)
    ribbon = ribbonize(atom, open_axis=0, width=10)
    ev = np.linalg.eigvalsh(ribbon.evaluate([0.3]))
    assert np.allclose(np.unique(np.round(ev, 10)), [-1.0, 1.0])


def test_bhz_ribbon_gapless_in_topological_phase():
    bhz = builtin("bhz", m=2.0)
    ribbon = ribbonize(bhz, open_axis=0, width=20)
    bulk_gap = bhz.min_gap(MomentumGrid((24, 24)))
    edge_gap = min(
        float(np.min(np.abs(np.linalg.eigvalsh(ribbon.evaluate([k])))))
        for k in np.linspace(-np.pi, np.pi, 61))
    assert edge_gap < bulk_gap / 10


def test_ribbonize_rejects_undeclared_long_hopping():
    km = builtin("kane-mele")
    km.hopping_range = 0  # misdeclared on purpose
    with pytest.raises(HoppingRangeTooLong):
        ribbonize(km, open_axis=0, width=10).hoppings(np.array([0.1]))


def test_load_constant_gapped_model():
    doc = {
        "dim": 1, "bands": 2, "occupied": 1,
        "terms": [{"R": [0], "matrix": [[[-1.0, 0.0], [0.0, 0.0]],
                                        [[0.0, 0.0], [1.0, 0.0]]]}],
        "time_reversal": None,
    }
    model = load_model(doc)
    assert np.allclose(model.h([0.3]), np.diag([-1.0, 1.0]))


def test_load_nearest_neighbor_chain_closed_form():
    # sigma_1 hopping at R = 1 gives H(k) = 2 cos(k) sigma_1 exactly
    doc = {
        "dim": 1, "bands": 2, "occupied": 1,
        "terms": [{"R": [1], "matrix": [[[0.0, 0.0], [1.0, 0.0]],
                                        [[1.0, 0.0], [0.0, 0.0]]]}],
        "time_reversal": None,
    }
    model = load_model(doc)
    sigma1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    for k in (0.1, 0.4, 2.2):
        assert np.allclose(model.h([k]), 2.0 * np.cos(k) * sigma1, atol=1e-14)


def test_json_round_trip_reproduces_kane_mele_spectra():
    km = builtin("kane-mele", t=1.0, lso=0.06, lv=0.1)
    loaded = load_model(to_json(km))
    for k in ([0.0, 0.0], [0.3, -1.2], [2.0, 2.9]):
        assert np.allclose(np.linalg.eigvalsh(loaded.h(k)),
                           np.linalg.eigvalsh(km.h(k)), atol=1e-12)
    assert check_trs(loaded, MomentumGrid((6, 6))).passed


def test_load_model_schema_errors():
    with pytest.raises(SchemaError):
        load_model({"dim": 2, "bands": 2, "occupied": 1})
    with pytest.raises(SchemaError):
        load_model({"dim": 2, "bands": 2, "occupied": 1,
                    "terms": [{"R": [1], "matrix": [[[0, 0]]]}]})
    with pytest.raises(NonHermitianInput):
        load_model({
            "dim": 1, "bands": 2, "occupied": 1,
            "terms": [{"R": [0], "matrix": [[[0.0, 0.0], [1.0, 0.0]],
                                            [[0.0, 0.0], [0.0, 0.0]]]}],
        })


def test_direct_sum_keeps_trs():
    km = builtin("kane-mele")
    doubled = direct_sum(km, km)
    assert doubled.bands == 8 and doubled.occupied == 4
    assert check_trs(doubled, MomentumGrid((6, 6))).passed
