"""Kane-Mele invariant from the sewing matrix field.

The invariant is the product over fixed points of pf(w)/sqrt(det w).  The
square-root branch is fixed by re-gauging the occupied frames to be
globally smooth and periodic, anchoring sqrt(det w) = pf(w) at the origin
fixed point, and continuing the phase of det w along axis-aligned grid
paths to every other fixed point.  Every branch step is checked; jumps
beyond pi/2 abort loudly.

An independent Wannier-center-flow oracle (Wilson-loop eigenphase
tracking over half the zone) cross-checks every verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._gauge import (
    circle_transport,
    frame_projectors,
    polar_unitary,
    smooth_frames_2d,
    unitary_eig,
)
from .berry import occupied_frame
from .errors import (
    BranchTrackingFailed,
    InvalidParams,
    NotUnitary,
    PfaffianNearZero,
    WilsonLoopDegenerate,
)
from .linalg import pfaffian
from .model import BlochFamily, MomentumGrid, TimeReversal

PF_MIN = 1e-6


def _negate_field(arr: np.ndarray, ndim: int) -> np.ndarray:
    """Value at -k for a grid field, exact index arithmetic."""
    out = arr
    for axis in range(ndim):
        n = arr.shape[axis]
        out = np.take(out, (-np.arange(n)) % n, axis=axis)
    return out


def _sewing_matrices(frames: np.ndarray, theta_u: np.ndarray, ndim: int) -> np.ndarray:
    """w_mn(k) = <u_m(-k) | Theta u_n(k)> over the occupied columns."""
    tf = np.einsum("ij,...jm->...im", theta_u, np.conj(frames))
    neg = _negate_field(frames, ndim)
    return np.einsum("...nm,...nk->...mk", np.conj(neg), tf)


@dataclass
class SewingField:
    """Sewing matrices on a grid plus the frames that produced them."""

    grid: MomentumGrid
    w: np.ndarray
    frames: np.ndarray
    theta: TimeReversal
    model: BlochFamily | None = None
    unitarity_deviation: float = 0.0
    relation_deviation: float = 0.0
    trim_skew_deviation: float = 0.0

    @property
    def occupied(self) -> int:
        return self.w.shape[-1]


def sewing_field(model: BlochFamily, grid: MomentumGrid,
                 frames: np.ndarray | None = None) -> SewingField:
    """Assemble and validate the sewing matrix field of a gapped TRS model."""
    if model.time_reversal is None:
        raise InvalidParams("sewing field needs a time-reversal invariant model")
    if frames is None:
        frames = occupied_frame(model, grid).frames
    u = model.time_reversal.unitary
    w = _sewing_matrices(frames, u, grid.dim)

    m = w.shape[-1]
    dev = np.linalg.norm(
        np.einsum("...ij,...ik->...jk", np.conj(w), w) - np.eye(m), axis=(-2, -1))
    worst = int(np.argmax(dev))
    unit_dev = float(dev.flat[worst])
    if unit_dev > 1e-8:
        where = np.unravel_index(worst, dev.shape)
        raise NotUnitary(grid.point(where), unit_dev)

    w_neg = _negate_field(w, grid.dim)
    rel_dev = float(np.max(np.linalg.norm(w_neg + np.swapaxes(w, -1, -2), axis=(-2, -1))))
    trim_dev = max(
        float(np.linalg.norm(w[idx] + w[idx].T)) for idx in grid.trim_indices())

    return SewingField(grid=grid, w=w, frames=frames, theta=model.time_reversal,
                       model=model, unitarity_deviation=unit_dev,
                       relation_deviation=rel_dev, trim_skew_deviation=trim_dev)


def smooth_sewing_field(model: BlochFamily, grid: MomentumGrid) -> SewingField:
    """Sewing field in a smooth periodic gauge (for winding quadratures)."""
    from .berry import smooth_occupied_frames

    raw = occupied_frame(model, grid)
    return sewing_field(model, grid, frames=smooth_occupied_frames(raw))


# --- pf / sqrt(det) with tracked branch ---

def _anchor_pf(w0: np.ndarray, label: str) -> complex:
    pf = pfaffian(w0)
    if abs(pf) < PF_MIN:
        raise PfaffianNearZero(abs(pf), where=label)
    return pf


def _tracked_phase(dets: np.ndarray, path: list[tuple[int, ...]], label: str) -> float:
    """Cumulative principal-branch phase of det w along a grid path."""
    total = 0.0
    for a, b in zip(path[:-1], path[1:]):
        jump = float(np.angle(dets[b] / dets[a]))
        if abs(jump) > 0.5 * np.pi:
            raise BranchTrackingFailed(f"{label} near {b}", abs(jump))
        total += jump
    return total


def _axis_path(start: tuple[int, ...], axis: int, steps: int, sizes) -> list[tuple[int, ...]]:
    out = [start]
    for _ in range(steps):
        nxt = list(out[-1])
        nxt[axis] = (nxt[axis] + 1) % sizes[axis]
        out.append(tuple(nxt))
    return out


def _pf_factor(w_trim: np.ndarray, sqrt_val: complex, label: str) -> int:
    r = _anchor_pf(w_trim, label) / sqrt_val
    if abs(abs(r) - 1.0) > 1e-6 or abs(r.imag) > 1e-6:
        raise BranchTrackingFailed(f"{label} (pf ratio {r:.6f})", abs(r.imag))
    return 1 if r.real > 0 else -1


def _nu_sheet(frames2d: np.ndarray, theta_u: np.ndarray) -> int:
    """Kane-Mele invariant of one 2D frame sheet.

    Re-gauges the sheet smoothly, anchors the branch at k = (0, 0) and
    tracks it along the staircase paths (0,0) -> (pi,0) -> (pi,pi) and
    (0,0) -> (0,pi)."""
    frames_s = smooth_frames_2d(frames2d)
    w = _sewing_matrices(frames_s, theta_u, 2)
    n1, n2 = w.shape[:2]
    dets = np.linalg.det(w)

    origin = (n1 // 2, n2 // 2)     # k = (0, 0)
    t_10 = (0, n2 // 2)             # k = (pi, 0)
    t_11 = (0, 0)                   # k = (pi, pi)
    t_01 = (n1 // 2, 0)             # k = (0, pi)

    sqrt0 = _anchor_pf(w[origin], "anchor (0,0)")
    nu = 1  # anchor factor pf/sqrt(det) = +1 by the branch choice

    leg1 = _axis_path(origin, 0, n1 // 2, (n1, n2))
    d1 = _tracked_phase(dets, leg1, "path (0,0)->(pi,0)")
    nu *= _pf_factor(w[t_10], sqrt0 * np.exp(0.5j * d1), "(pi,0)")

    leg2 = _axis_path(t_10, 1, n2 // 2, (n1, n2))
    d2 = _tracked_phase(dets, leg2, "path (pi,0)->(pi,pi)")
    nu *= _pf_factor(w[t_11], sqrt0 * np.exp(0.5j * (d1 + d2)), "(pi,pi)")

    leg3 = _axis_path(origin, 1, n2 // 2, (n1, n2))
    d3 = _tracked_phase(dets, leg3, "path (0,0)->(0,pi)")
    nu *= _pf_factor(w[t_01], sqrt0 * np.exp(0.5j * d3), "(0,pi)")
    return nu


def _nu_circle(frames1d: np.ndarray, theta_u: np.ndarray) -> int:
    """Fixed-point Pfaffian product on a single circle (the 1D case),
    evaluated in the transported periodic gauge."""
    n = frames1d.shape[0]
    proj = frame_projectors(frames1d)
    rows = (np.arange(n) + n // 2) % n
    frames = circle_transport(proj[rows], frames1d[n // 2])
    tf = np.einsum("ij,tjm->tim", theta_u, np.conj(frames))
    neg = frames[(-np.arange(n)) % n]
    w = np.einsum("tnm,tnk->tmk", np.conj(neg), tf)
    dets = np.linalg.det(w)
    sqrt0 = _anchor_pf(w[0], "circle anchor")
    delta = _tracked_phase(dets, [(t,) for t in range(n // 2 + 1)], "half circle")
    return _pf_factor(w[n // 2], sqrt0 * np.exp(0.5j * delta), "circle far point")


def kane_mele_nu(field: SewingField) -> int:
    """Product over all 2^d fixed points of pf(w)/sqrt(det w), exactly
    +1 or -1.  In 3D this is the strong invariant (the product of the
    k3 = 0 and k3 = pi sheet invariants)."""
    u = field.theta.unitary
    d = field.grid.dim
    if d == 1:
        return _nu_circle(field.frames, u)
    if d == 2:
        return _nu_sheet(field.frames, u)
    if d == 3:
        n3 = field.grid.sizes[2]
        nu_0 = _nu_sheet(field.frames[:, :, n3 // 2], u)
        nu_pi = _nu_sheet(field.frames[:, :, 0], u)
        return nu_0 * nu_pi
    raise InvalidParams("kane_mele_nu supports dimensions 1-3")


@dataclass
class Z2Indices3D:
    strong: int
    weak: tuple[int, int, int]


def strong_and_weak_indices_3d(model: BlochFamily, grid: MomentumGrid) -> Z2Indices3D:
    """Strong invariant from all eight fixed points; weak index i from the
    four fixed points on the k_i = pi plane."""
    if grid.dim != 3:
        raise InvalidParams("need a 3D grid")
    frames = occupied_frame(model, grid).frames
    u = model.time_reversal.unitary
    n3 = grid.sizes[2]
    strong = _nu_sheet(frames[:, :, n3 // 2], u) * _nu_sheet(frames[:, :, 0], u)
    weak = (
        _nu_sheet(frames[0, :, :], u),
        _nu_sheet(frames[:, 0, :], u),
        _nu_sheet(frames[:, :, 0], u),
    )
    return Z2Indices3D(strong=strong, weak=weak)


def boundary_circle_product(field: SewingField) -> int:
    """The 2D boundary formula: the product of the one-dimensional indices
    of the two boundary circles k2 = 0 and k2 = pi of the effective zone.

    Both circles are read off one globally smooth gauge, which ties their
    winding ambiguities together; each circle contributes the parity of
    its own anchored half-circle index.
    """
    if field.grid.dim != 2:
        raise InvalidParams("the boundary-circle index is a 2D construction")
    u = field.theta.unitary
    frames_s = smooth_frames_2d(field.frames)
    w = _sewing_matrices(frames_s, u, 2)
    n1, n2 = w.shape[:2]
    dets = np.linalg.det(w)
    product = 1
    for c, label in ((n2 // 2, "circle k2=0"), (0, "circle k2=pi")):
        start = (n1 // 2, c)
        path = _axis_path(start, 0, n1 // 2, (n1, n2))
        delta = _tracked_phase(dets, path, label)
        sqrt0 = _anchor_pf(w[start], label + " anchor")
        product *= _pf_factor(w[(0, c)], sqrt0 * np.exp(0.5j * delta), label)
    return product


# --- Wannier-center-flow oracle ---

@dataclass
class WannierFlow:
    """Wilson-loop eigenphase trajectories over half the zone."""

    momenta: np.ndarray       # pumping momenta k2 in [0, pi]
    centers: np.ndarray       # (slices, occupied) sorted eigenphases
    gap_centers: np.ndarray   # tracked largest-gap midpoints
    crossings: int
    verdict: int              # +1 trivial, -1 topological

    def to_csv(self) -> str:
        lines = ["k2," + ",".join(f"center{i}" for i in range(self.centers.shape[1]))]
        for k, row in zip(self.momenta, self.centers):
            lines.append(f"{k:.12g}," + ",".join(f"{x:.12g}" for x in row))
        return "\n".join(lines) + "\n"


def _wilson_loop_phases(frames_line: np.ndarray) -> np.ndarray:
    n = frames_line.shape[0]
    m = frames_line.shape[-1]
    loop = np.eye(m, dtype=complex)
    for t in range(n):
        ov = np.conj(frames_line[t]).T @ frames_line[(t + 1) % n]
        loop = loop @ polar_unitary(ov)
    angles, _ = unitary_eig(loop)
    return np.sort(angles)


def _largest_gap_center(angles: np.ndarray) -> tuple[float, float]:
    ext = np.concatenate([angles, [angles[0] + 2.0 * np.pi]])
    gaps = np.diff(ext)
    i = int(np.argmax(gaps))
    width = float(gaps[i])
    center = float((ext[i] + 0.5 * width + np.pi) % (2.0 * np.pi) - np.pi)
    return center, width


def wannier_center_flow(model: BlochFamily, grid: MomentumGrid) -> WannierFlow:
    """Wilson-loop eigenphases along axis 0 for pumping momenta k2 from 0
    to pi, with the largest-gap crossing count giving the Z2 verdict."""
    if grid.dim != 2:
        raise InvalidParams("Wannier flow needs a 2D grid")
    frames = occupied_frame(model, grid).frames
    n1, n2 = grid.sizes
    slice_indices = [(n2 // 2 + t) % n2 for t in range(n2 // 2 + 1)]
    momenta = np.array([t * 2.0 * np.pi / n2 for t in range(n2 // 2 + 1)])

    centers = np.array([_wilson_loop_phases(frames[:, c]) for c in slice_indices])
    gap_centers, crossings = [], 0
    prev_gap = None
    for s in range(len(slice_indices)):
        gap, width = _largest_gap_center(centers[s])
        if width < 1e-6:
            raise WilsonLoopDegenerate(
                f"largest eigenphase gap {width:.2e} at slice {s}")
        if prev_gap is not None:
            arc = (gap - prev_gap) % (2.0 * np.pi)
            rel = (centers[s] - prev_gap) % (2.0 * np.pi)
            crossings += int(np.sum((rel > 1e-12) & (rel < arc - 1e-12)))
        gap_centers.append(gap)
        prev_gap = gap
    verdict = 1 if crossings % 2 == 0 else -1
    return WannierFlow(momenta=momenta, centers=centers,
                       gap_centers=np.array(gap_centers),
                       crossings=crossings, verdict=verdict)
