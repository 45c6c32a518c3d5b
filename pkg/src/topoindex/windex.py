"""Odd topological indices of unitary fields.

Winding numbers over the circle and 3-torus, the boundary-circle product
index of a 2D sewing field, the odd Chern character quadrature, and the
periodized degree-one SU(2) reference map.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from ._stencil import central_diff
from .errors import BranchUnsafe, InvalidParams, NotUnitary, ResidueTooLarge, UnsupportedDegree
from .model import MomentumGrid

BRANCH_SAFE_DISTANCE = 1.9
STEP_ARG_SAFE = 0.95 * np.pi


@dataclass
class UnitaryField:
    """A unitary matrix at every grid point, (*sizes, n, n)."""

    grid: MomentumGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", v)
        if v.shape[: self.grid.dim] != self.grid.sizes:
            raise InvalidParams("field shape does not match the grid")
        n = v.shape[-1]
        dev = np.linalg.norm(
            np.einsum("...ij,...ik->...jk", np.conj(v), v) - np.eye(n), axis=(-2, -1))
        worst = int(np.argmax(dev))
        if dev.flat[worst] > 1e-8:
            where = np.unravel_index(worst, dev.shape)
            raise NotUnitary(where, float(dev.flat[worst]))

    def check_branch_safety(self):
        """Neighboring overlaps must stay within spectral distance 1.9 of
        the identity on every axis."""
        n = self.values.shape[-1]
        for axis in range(self.grid.dim):
            ahead = np.roll(self.values, -1, axis=axis)
            ov = np.einsum("...ij,...ik->...jk", np.conj(self.values), ahead)
            dist = np.linalg.norm(ov - np.eye(n), ord=2, axis=(-2, -1))
            worst = int(np.argmax(dist))
            if dist.flat[worst] > BRANCH_SAFE_DISTANCE:
                where = np.unravel_index(worst, dist.shape)
                raise BranchUnsafe(where, f"(axis {axis}, distance {dist.flat[worst]:.2f})")


def field_from_map(grid: MomentumGrid, fn) -> UnitaryField:
    probe = np.asarray(fn(grid.point(tuple(0 for _ in grid.sizes))), dtype=complex)
    arr = np.empty(grid.sizes + probe.shape, dtype=complex)
    for idx in grid.indices():
        arr[idx] = fn(grid.point(idx))
    return UnitaryField(grid=grid, values=arr)


def winding1d(field: UnitaryField) -> int:
    """Winding number of det g around a circle; exact by telescoping."""
    if field.grid.dim != 1:
        raise InvalidParams("winding1d needs a 1D field")
    field.check_branch_safety()
    g = field.values
    ov = np.einsum("tij,tik->tjk", np.conj(g), np.roll(g, -1, axis=0))
    args = np.angle(np.linalg.det(ov))
    worst = float(np.max(np.abs(args)))
    if worst > STEP_ARG_SAFE:
        raise BranchUnsafe(int(np.argmax(np.abs(args))), f"(det step {worst:.2f})")
    total = float(np.sum(args)) / (2.0 * np.pi)
    n = int(np.rint(total))
    if abs(total - n) > 1e-6:
        raise BranchUnsafe("global", f"(winding sum {total:.6f} not integral)")
    return n


@dataclass
class WindingResult:
    value: float
    rounded: int
    residue: float


def _antisymmetrized_trace_sum(ls: list[np.ndarray]) -> complex:
    total = 0.0 + 0.0j
    for perm in permutations((0, 1, 2)):
        sign = 1.0 if perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1.0
        a, b, c = (ls[p] for p in perm)
        total += sign * np.sum(np.einsum("...ij,...jk,...ki->...", a, b, c))
    return total


def winding3d(field: UnitaryField, residue_tol: float = 0.1) -> WindingResult:
    """(1/24 pi^2) Int tr(g^{-1} dg)^3 by central-difference quadrature,
    antisymmetrized over the 3! axis orderings."""
    if field.grid.dim != 3:
        raise InvalidParams("winding3d needs a 3D field")
    field.check_branch_safety()
    g = field.values
    steps = tuple(2.0 * np.pi / n for n in field.grid.sizes)
    ls = []
    for mu, h in enumerate(steps):
        d = central_diff(g, mu, h)
        ls.append(np.einsum("...ij,...ik->...jk", np.conj(g), d))
    total = _antisymmetrized_trace_sum(ls)
    cell = float(np.prod(steps))
    value = float((total * cell / (24.0 * np.pi ** 2)).real)
    rounded = int(np.rint(value))
    residue = abs(value - rounded)
    if residue > residue_tol:
        raise ResidueTooLarge(value, residue, residue_tol)
    return WindingResult(value=value, rounded=rounded, residue=residue)


def odd_chern_character(field: UnitaryField, degree: int) -> float:
    """Integral of the degree-(2k+1) odd Chern character component.

    Degree 1 returns Int tr(g^{-1}dg)/i (2 pi for a unit winding); degree
    3 returns the value whose division by 4 pi^2 reproduces winding3d
    (coefficient 1/6 from k = 1).
    """
    if degree == 1:
        if field.grid.dim != 1:
            raise InvalidParams("degree-1 component needs a 1D field")
        field.check_branch_safety()
        g = field.values
        h = 2.0 * np.pi / field.grid.sizes[0]
        d = central_diff(g, 0, h)
        l = np.einsum("tij,tik->tjk", np.conj(g), d)
        return float((h * np.einsum("tii->", l) / 1j).real)
    if degree == 3:
        if field.grid.dim != 3:
            raise InvalidParams("degree-3 component needs a 3D field")
        field.check_branch_safety()
        g = field.values
        steps = tuple(2.0 * np.pi / n for n in field.grid.sizes)
        ls = []
        for mu, h in enumerate(steps):
            d = central_diff(g, mu, h)
            ls.append(np.einsum("...ij,...ik->...jk", np.conj(g), d))
        total = _antisymmetrized_trace_sum(ls)
        return float((np.prod(steps) * total / 6.0).real)
    raise UnsupportedDegree(degree)


def boundary_index_2d(field) -> int:
    """Product of the two boundary-circle indices of a 2D sewing field.

    The circles k2 = 0 and k2 = pi bound the effective Brillouin zone;
    each carries a Z2-valued one-dimensional index whose parities are
    multiplied.  Evaluated in one globally smooth gauge so the two
    circles share their winding ambiguity.
    """
    from . import z2  # local import; z2 builds on this module's grid types

    return z2.boundary_circle_product(field)


# --- reference maps ---

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def degree_one_map(k: np.ndarray) -> np.ndarray:
    """Periodized degree-one SU(2) map, constant (identity) outside the
    ball |k| < pi, wrapping the 3-sphere once through the suspension
    coordinates (cos chi, sin chi * k_hat)."""
    k = np.asarray(k, dtype=float)
    r = float(np.linalg.norm(k))
    chi = np.pi * (1.0 - _smoothstep(r / np.pi))
    if r < 1e-12:
        return -np.eye(2, dtype=complex)
    khat = k / r
    s = np.sin(chi)
    alpha = s * (khat[1] + 1j * khat[0])
    beta = np.cos(chi) + 1j * s * khat[2]
    return np.array([[beta, alpha], [-np.conj(alpha), np.conj(beta)]])


def degree_one_field(grid: MomentumGrid, power: int = 1) -> UnitaryField:
    """The degree-one map (or its pointwise integer power) on a grid."""
    def fn(k):
        g = degree_one_map(k)
        if power == 1:
            return g
        if power == -1:
            return g.conj().T
        out = np.eye(2, dtype=complex)
        for _ in range(abs(power)):
            out = out @ (g if power > 0 else g.conj().T)
        return out

    return field_from_map(grid, fn)
