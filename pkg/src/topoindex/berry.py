"""Berry connection and curvature machinery.

Chern numbers come from gauge-invariant lattice link variables (exact
integers on adequate grids); the magneto-electric polarization is the
Chern-Simons integral of the non-abelian Berry connection evaluated in an
explicitly constructed smooth periodic gauge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from ._gauge import smooth_frames_2d, smooth_frames_3d, smoothness_report
from ._stencil import central_diff
from .errors import GapClosed, GridTooCoarse, InvalidParams
from .linalg import eigh
from .model import BlochFamily, MomentumGrid

LINK_DET_MIN = 1e-8
PLAQUETTE_SAFE = 0.95 * np.pi


@dataclass
class OccupiedFrame:
    """Occupied eigenvector columns at every grid point, (*sizes, n, m)."""

    grid: MomentumGrid
    frames: np.ndarray
    model: BlochFamily | None = None

    @property
    def occupied(self) -> int:
        return self.frames.shape[-1]


def occupied_frame(model: BlochFamily, grid: MomentumGrid) -> OccupiedFrame:
    """Occupied frames from eigh with its deterministic phase convention."""
    if grid.dim != model.dim:
        raise InvalidParams("grid dimension does not match the model")
    shape = grid.sizes + (model.bands, model.occupied)
    frames = np.empty(shape, dtype=complex)
    for idx in grid.indices():
        k = grid.point(idx)
        es = eigh(model.h(k))
        m = float(np.min(np.abs(es.values)))
        if m <= model.gap_tol:
            raise GapClosed(k, m)
        frames[idx] = es.vectors[:, : model.occupied]
    return OccupiedFrame(grid=grid, frames=frames, model=model)


def link_dets(frames: np.ndarray, axis: int) -> np.ndarray:
    """det of the overlap U_axis(k) = F(k)^dagger F(k + e_axis)."""
    ahead = np.roll(frames, -1, axis=axis)
    ov = np.einsum("...im,...ik->...mk", np.conj(frames), ahead)
    det = np.linalg.det(ov)
    small = float(np.min(np.abs(det)))
    if small < LINK_DET_MIN:
        raise GridTooCoarse(f"link determinant {small:.2e} below {LINK_DET_MIN:.0e}")
    return det


def _frame_sheet(frame: OccupiedFrame, axes: tuple[int, int], slice_index: int) -> np.ndarray:
    if frame.grid.dim == 2:
        if tuple(sorted(axes)) != (0, 1):
            raise InvalidParams("axes must be (0, 1) on a 2D grid")
        return frame.frames
    if frame.grid.dim == 3:
        other = ({0, 1, 2} - set(axes)).pop()
        sheet = np.take(frame.frames, slice_index, axis=other)
        if axes[0] > axes[1]:
            sheet = np.swapaxes(sheet, 0, 1)
        return sheet
    raise InvalidParams("Chern numbers need a 2D grid or a 2D slice of a 3D grid")


def plaquette_field(frame: OccupiedFrame, axes: tuple[int, int] = (0, 1),
                    slice_index: int = 0) -> np.ndarray:
    """Principal-branch plaquette phases of the occupied link variables.

    Entry (i, j) is the argument of det[U1 U2 U1^{-1} U2^{-1}] around the
    plaquette at (i, j); the total over the sheet is 2*pi times the Chern
    number exactly.
    """
    sheet = _frame_sheet(frame, axes, slice_index)
    z1 = link_dets(sheet, 0)
    z2 = link_dets(sheet, 1)
    prod = z1 * np.roll(z2, -1, axis=0) / (np.roll(z1, -1, axis=1) * z2)
    field = np.angle(prod)
    worst = float(np.max(np.abs(field)))
    if worst > PLAQUETTE_SAFE:
        raise GridTooCoarse(
            f"plaquette phase {worst:.3f} exceeds {PLAQUETTE_SAFE:.3f}")
    return field


def chern_number(frame: OccupiedFrame, axes: tuple[int, int] = (0, 1),
                 slice_index: int = 0) -> int:
    """Lattice first Chern number of the occupied bundle; exact integer."""
    field = plaquette_field(frame, axes, slice_index)
    total = float(np.sum(field)) / (2.0 * np.pi)
    n = int(np.rint(total))
    if abs(total - n) > 1e-6:
        raise GridTooCoarse(f"plaquette sum {total:.6f} is not an integer")
    return n


@dataclass
class BerryCurvatureField:
    """Per-plaquette Berry curvature (trace, principal branch)."""

    k1: np.ndarray
    k2: np.ndarray
    values: np.ndarray  # (N1, N2) phases; sum/(2 pi) = Chern number

    def chern(self) -> int:
        return int(np.rint(np.sum(self.values) / (2.0 * np.pi)))

    def to_csv(self) -> str:
        lines = ["k1,k2,curvature"]
        for i, a in enumerate(self.k1):
            for j, b in enumerate(self.k2):
                lines.append(f"{a:.12g},{b:.12g},{self.values[i, j]:.12g}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "k1": [float(x) for x in self.k1],
            "k2": [float(x) for x in self.k2],
            "curvature": [[float(x) for x in row] for row in self.values],
        }, sort_keys=True)


def berry_curvature_field(frame: OccupiedFrame, axes: tuple[int, int] = (0, 1),
                          slice_index: int = 0) -> BerryCurvatureField:
    field = plaquette_field(frame, axes, slice_index)
    return BerryCurvatureField(k1=frame.grid.axis(axes[0]),
                               k2=frame.grid.axis(axes[1]), values=field)


# --- Chern-Simons polarization ---

def _connection(frames: np.ndarray, steps: tuple[float, ...]) -> list[np.ndarray]:
    """Anti-Hermitian Berry connection a_mu = F^dag d_mu F by central
    differences in a smooth periodic gauge."""
    a = []
    for mu, h in enumerate(steps):
        d = central_diff(frames, mu, h)
        am = np.einsum("...im,...ik->...mk", np.conj(frames), d)
        a.append(0.5 * (am - np.conj(np.swapaxes(am, -1, -2))))
    return a


def chern_simons_integral(frames: np.ndarray, grid: MomentumGrid) -> float:
    """(-1/8 pi^2) Int tr(a da + (2/3) a^3) for a smooth periodic frame
    field; defined up to an integer, and the pure-gauge value is the
    winding number of the gauge."""
    steps = tuple(2.0 * np.pi / n for n in grid.sizes)
    a = _connection(frames, steps)
    total = 0.0 + 0.0j
    for perm in permutations((0, 1, 2)):
        sign = 1.0 if perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1.0
        mu, nu, rho = perm
        da = central_diff(a[rho], nu, steps[nu])
        t1 = np.einsum("...mk,...km->...", a[mu], da)
        t2 = np.einsum("...mk,...kl,...lm->...", a[mu], a[nu], a[rho])
        total += sign * np.sum(t1 + (2.0 / 3.0) * t2)
    cell = np.prod(steps)
    return float((-(1.0 / (8.0 * np.pi ** 2)) * cell * total).real)


def smooth_occupied_frames(frame: OccupiedFrame) -> np.ndarray:
    """The frame field re-gauged to be smooth and periodic."""
    if frame.grid.dim == 2:
        return smooth_frames_2d(frame.frames)
    if frame.grid.dim == 3:
        return smooth_frames_3d(frame.frames)
    raise InvalidParams("smooth gauges are built on 2D and 3D grids")


def polarization_p3(frame: OccupiedFrame) -> float:
    """Magneto-electric polarization P3 mod 1, representative in [0, 1).

    Evaluates the Chern-Simons integral of the Berry connection in the
    constructed smooth gauge; the gauge ambiguity is exactly an integer.
    """
    if frame.grid.dim != 3:
        raise InvalidParams("P3 is defined on 3D grids")
    frames_s = smooth_occupied_frames(frame)
    rough = smoothness_report(frames_s)
    if rough > 1.5:
        raise GridTooCoarse(f"smooth gauge still varies by {rough:.2f} per step")
    return float(chern_simons_integral(frames_s, frame.grid) % 1.0)


def _gauge_array(frame: OccupiedFrame, gauge) -> np.ndarray:
    m = frame.occupied
    if callable(gauge):
        arr = np.empty(frame.grid.sizes + (m, m), dtype=complex)
        for idx in frame.grid.indices():
            arr[idx] = gauge(frame.grid.point(idx))
    else:
        arr = np.asarray(gauge, dtype=complex)
        if arr.shape != frame.grid.sizes + (m, m):
            raise InvalidParams("gauge array shape does not match grid/occupied count")
    return arr


def delta_p3(frame: OccupiedFrame, gauge) -> float:
    """P3(a^g) - P3(a) for a smooth periodic gauge transformation g.

    Returns the raw real difference; for periodic g it is the integer
    winding number of g.
    """
    if frame.grid.dim != 3:
        raise InvalidParams("P3 is defined on 3D grids")
    g = _gauge_array(frame, gauge)
    step = smoothness_report(g)
    if step > 1.9:
        raise GridTooCoarse(f"gauge map varies by {step:.2f} per grid step")
    frames_s = smooth_occupied_frames(frame)
    dressed = np.einsum("...nm,...mk->...nk", frames_s, g)
    base = chern_simons_integral(frames_s, frame.grid)
    return chern_simons_integral(dressed, frame.grid) - base
