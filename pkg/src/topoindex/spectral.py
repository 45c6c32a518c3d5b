"""Spectral flow and the mod-2 analytical index.

Spectral flow of Hermitian families is the net signed count of eigenvalue
crossings through a reference level.  The mod-2 analytical index of the
effective (skew-adjoint) Hamiltonian is realized as the parity of Kramers
edge crossings in ribbon spectra, the spectral flow it reduces to: edge
bands of an open-boundary family are isolated by their localization
weight and followed between the projections of the fixed points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    EdgeBandIsolationFailed,
    EndpointGapless,
    InvalidParams,
    RefinementLimit,
)
from .model import BlochFamily, MomentumGrid, RibbonFamily, ribbonize

MAX_REFINE_DEPTH = 20


@dataclass
class SpectralPath:
    """Hermitian samples H(t_i) along a parameter in [0, 1]."""

    ts: np.ndarray
    samples: list
    closed: bool = False

    @classmethod
    def from_function(cls, fn: Callable[[float], np.ndarray], num: int = 17,
                      closed: bool = False, delta: float = 0.5) -> "SpectralPath":
        """Sample a path adaptively until consecutive samples are within
        spectral distance delta * gap of each other."""
        ts = list(np.linspace(0.0, 1.0, num))
        hs = [np.asarray(fn(t), dtype=complex) for t in ts]
        gap = min(float(np.min(np.abs(np.linalg.eigvalsh(hs[0])))),
                  float(np.min(np.abs(np.linalg.eigvalsh(hs[-1])))))
        bound = delta * max(gap, 1e-12)
        depth = 0
        while True:
            too_far = [i for i in range(len(ts) - 1)
                       if np.linalg.norm(hs[i + 1] - hs[i], ord=2) > bound]
            if not too_far:
                break
            depth += 1
            if depth > MAX_REFINE_DEPTH:
                raise RefinementLimit(depth)
            for i in reversed(too_far):
                tm = 0.5 * (ts[i] + ts[i + 1])
                ts.insert(i + 1, tm)
                hs.insert(i + 1, np.asarray(fn(tm), dtype=complex))
        return cls(ts=np.array(ts), samples=hs, closed=closed)


def _n_below(h: np.ndarray, level: float) -> int:
    return int(np.sum(np.linalg.eigvalsh(h) < level))


def spectral_flow(path: SpectralPath, level: float = 0.0) -> int:
    """Net signed count of eigenvalue crossings through the level
    (up-crossings positive), by counting states below the level."""
    checks = range(len(path.samples)) if path.closed else (0, len(path.samples) - 1)
    for i in checks:
        ev = np.linalg.eigvalsh(path.samples[i])
        m = float(np.min(np.abs(ev - level)))
        if m < 1e-9:
            raise EndpointGapless(i, m)
    below = [_n_below(h, level) for h in path.samples]
    flow = 0
    for i in range(len(below) - 1):
        flow += below[i] - below[i + 1]
    if path.closed:
        flow += below[-1] - below[0]
    return flow


# --- effective Hamiltonian ---

@dataclass
class EffectiveHamiltonian:
    """Block off-diagonal pairing of H with its time-reversal image:
    [[0, Theta H Theta*], [H, 0]]."""

    model: BlochFamily

    def evaluate(self, k) -> np.ndarray:
        if self.model.time_reversal is None:
            raise InvalidParams("effective Hamiltonian needs time reversal")
        h = self.model.h(k)
        u = self.model.time_reversal.unitary
        th = u @ np.conj(h) @ u.conj().T
        n = h.shape[0]
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, n:] = th
        out[n:, :n] = h
        return out

    def adjoint_relation_deviation(self, grid: MomentumGrid) -> float:
        """max over the grid of || Htilde(k)^dagger - Htilde(-k) ||."""
        worst = 0.0
        for idx in grid.indices():
            k = grid.point(idx)
            lhs = self.evaluate(k).conj().T
            rhs = self.evaluate(-k)
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
        return worst


# --- edge-crossing parity ---

def _ribbon_bulk_gap(ribbon: RibbonFamily, samples: int = 32) -> float:
    """Bulk gap estimate from the reperiodized ribbon spectrum."""
    gap = np.inf
    for k in np.linspace(0.0, np.pi, samples):
        kv = np.full(ribbon.dim, 0.0)
        kv[0] = k
        ev = np.linalg.eigvalsh(ribbon.evaluate_periodic(kv))
        gap = min(gap, float(np.min(np.abs(ev))))
    return gap


def _edge_states(ribbon: RibbonFamily, k: np.ndarray, window: float,
                 cluster_tol: float):
    """In-window eigenstates with their energies and left-quarter weights.

    States degenerate within cluster_tol are rotated to diagonalize the
    left-quarter weight, which disentangles hybridized or symmetry-paired
    edge states living on opposite edges.
    """
    ev, vec = np.linalg.eigh(ribbon.evaluate(k))
    L, n = ribbon.transverse_sites, ribbon.bands
    quarter = max(1, L // 4)
    keep = np.where(np.abs(ev) < window)[0]
    out = []
    i = 0
    while i < len(keep):
        j = i
        while j + 1 < len(keep) and ev[keep[j + 1]] - ev[keep[j]] < cluster_tol:
            j += 1
        cluster = keep[i:j + 1]
        vs = vec[:, cluster]
        if len(cluster) > 1:
            blocks = vs.reshape(L, n, len(cluster))
            ql = np.einsum("sna,snb->ab", np.conj(blocks[:quarter]), blocks[:quarter])
            _, rot = np.linalg.eigh(ql)
            vs = vs @ rot
        e_mean = float(np.mean(ev[cluster]))
        for a in range(vs.shape[1]):
            psi = vs[:, a].reshape(L, n)
            weight = float(np.sum(np.abs(psi[:quarter]) ** 2))
            out.append((e_mean if len(cluster) > 1 else float(ev[cluster[a]]),
                        vs[:, a], weight))
        i = j + 1
    return out


def _crossing_parity_on_path(ribbon: RibbonFamily, path: list[np.ndarray]) -> int:
    """Parity of left-edge band crossings of an in-gap probe level along a
    path of ribbon momenta.

    Crossings of the Fermi level sit exactly at the fixed points (Kramers
    degenerate), so the count probes the symmetric pair of offset levels
    +/- 0.3 * gap instead: the parity is the same by continuity of the
    edge bands and each Kramers pair is met exactly once.
    """
    gap = _ribbon_bulk_gap(ribbon)
    if gap < 1e-8:
        raise EdgeBandIsolationFailed("bulk spectrum is gapless")
    window = 0.9 * gap
    match_window = 0.6 * gap
    levels = (0.3 * gap, -0.3 * gap)

    states = [_edge_states(ribbon, k, window, 0.02 * gap) for k in path]
    counts = [0, 0]
    for i in range(len(path) - 1):
        cur, nxt = states[i], states[i + 1]
        if not nxt:
            continue
        for e_a, v_a, w_a in cur:
            near_level = any(abs(e_a - lvl) < 0.25 * gap for lvl in levels)
            if near_level and 0.4 < w_a <= 0.6:
                raise EdgeBandIsolationFailed(
                    f"state at E={e_a:.4f} has ambiguous weight {w_a:.2f}")
            if abs(e_a) > match_window or w_a <= 0.6:
                continue
            overlaps = [abs(np.vdot(v_a, v_b)) for _, v_b, _ in nxt]
            j = int(np.argmax(overlaps))
            if overlaps[j] < 0.5:
                raise EdgeBandIsolationFailed(
                    f"edge band lost between path points {i} and {i + 1} "
                    f"(best overlap {overlaps[j]:.2f})")
            e_b = nxt[j][0]
            for li, level in enumerate(levels):
                if (e_a - level) * (e_b - level) < 0.0:
                    counts[li] += 1
    if counts[0] % 2 != counts[1] % 2:
        raise EdgeBandIsolationFailed(
            f"probe levels disagree on the crossing parity {counts}")
    return counts[0] % 2


def ribbon_spectrum_csv(ribbon: RibbonFamily, samples: int = 81) -> str:
    """Ribbon band structure as CSV rows (momentum, eigenvalue,
    edge weight on the outer quarter), ready for plotting."""
    L, n = ribbon.transverse_sites, ribbon.bands
    quarter = max(1, L // 4)
    lines = ["k,energy,edge_weight"]
    for k in np.linspace(-np.pi, np.pi, samples):
        kv = np.full(ribbon.dim, 0.0)
        kv[0] = k
        ev, vec = np.linalg.eigh(ribbon.evaluate(kv))
        for i, e in enumerate(ev):
            psi = vec[:, i].reshape(L, n)
            w = float(np.sum(np.abs(psi[:quarter]) ** 2)
                      + np.sum(np.abs(psi[-quarter:]) ** 2))
            lines.append(f"{k:.12g},{e:.12g},{w:.12g}")
    return "\n".join(lines) + "\n"


def edge_crossing_parity(ribbon: RibbonFamily, samples: int = 161) -> int:
    """Z2 edge index of a ribbon: parity of Kramers edge-band crossings
    between the projected fixed points 0 and pi."""
    if ribbon.dim != 1:
        raise InvalidParams("edge_crossing_parity expects a 1D-momentum ribbon")
    path = [np.array([k]) for k in np.linspace(0.0, np.pi, samples)]
    return _crossing_parity_on_path(ribbon, path)


def mod2_analytical_index(model: BlochFamily, grid: MomentumGrid, trim,
                          open_axis: int = 0, width: int = 24,
                          samples_per_leg: int | None = None) -> int:
    """Parity of Kramers zero crossings of the open-boundary spectrum
    along the staircase path from the surface origin to the projection
    of the given fixed point.

    Kernel dimensions of the skew-adjoint effective Hamiltonian are empty
    away from criticality; their mod-2 count is carried by this spectral
    flow, which is what gets computed.
    """
    trim = np.atleast_1d(np.asarray(trim, dtype=float))
    if trim.shape != (model.dim,):
        raise InvalidParams("trim must be a bulk fixed point (one coordinate per axis)")
    for x in trim:
        if min(abs(x), abs(abs(x) - np.pi)) > 1e-12:
            raise InvalidParams("trim coordinates must be 0 or pi")
    if samples_per_leg is None:
        samples_per_leg = max(161, 8 * max(grid.sizes) + 1)
    target = np.abs(np.delete(trim, open_axis))
    ribbon = ribbonize(model, open_axis=open_axis, width=width)

    path = []
    current = np.zeros(model.dim - 1)
    path.append(current.copy())
    for axis in range(model.dim - 1):
        if target[axis] < 1e-12:
            continue
        for s in np.linspace(0.0, np.pi, samples_per_leg)[1:]:
            step = current.copy()
            step[axis] = s
            path.append(step)
        current[axis] = np.pi
    if len(path) < 2:
        return 0
    return _crossing_parity_on_path(ribbon, path)
