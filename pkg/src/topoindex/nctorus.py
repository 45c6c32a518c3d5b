"""Noncommutative 2-torus with time reversal, and truncated index pairings.

The clock-shift representation realizes the torus algebra at rational
angle p/q; the time reversal automorphism and its fixed point algebra
generators are verified at the level of formal sums and representations.
Index pairings are computed on hard-truncated Fredholm modules: the
Toeplitz compression on the negative Fourier modes of the circle, and
the flat Dirac phase on Z^3 x C^2 for the three-dimensional pairing.

Raw traces are reported next to calibrated values: the calibration
constants (1/2 in 1D, 1/4 in 3D) are fixed once against the
kernel-counting Toeplitz oracle on the generator loop and the classical
winding number, and never readjusted per input.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .errors import InvalidParams, NumericallySingular, ResidueTooLarge

SIGMA = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


@dataclass(frozen=True)
class ClockShiftRep:
    """U = clock, V = cyclic shift on C^q with U V = e^{2 pi i p/q} V U."""

    p: int
    q: int

    def __post_init__(self):
        if self.q < 1 or gcd(self.p % self.q if self.p % self.q else 1, self.q) != 1:
            raise InvalidParams(f"p/q = {self.p}/{self.q} must be a reduced fraction")

    @property
    def omega(self) -> complex:
        return np.exp(2j * np.pi * self.p / self.q)

    @property
    def clock(self) -> np.ndarray:
        return np.diag(self.omega ** np.arange(self.q))

    @property
    def shift(self) -> np.ndarray:
        v = np.zeros((self.q, self.q), dtype=complex)
        for j in range(self.q):
            v[(j + 1) % self.q, j] = 1.0
        return v

    def monomial(self, m: int, n: int) -> np.ndarray:
        return np.linalg.matrix_power(self.clock, m % self.q if m >= 0 else m) @ \
            np.linalg.matrix_power(self.shift, n % self.q if n >= 0 else n)


def clock_shift(p: int, q: int) -> ClockShiftRep:
    if gcd(abs(p), q) != 1:
        raise InvalidParams(f"p and q must be coprime, got {p}/{q}")
    return ClockShiftRep(p=p, q=q)


class NCElement:
    """Finite formal sum of monomials c_{mn} U^m V^n at angle theta.

    Products use the normal ordering V^b U^c = omega^{-bc} U^c V^b derived
    from U V = omega V U; the adjoint and the antilinear time reversal
    action follow the same bookkeeping.
    """

    def __init__(self, theta: Fraction | float, terms: dict | None = None):
        self.theta = Fraction(theta) if not isinstance(theta, Fraction) else theta
        self.terms: dict[tuple[int, int], complex] = {}
        for key, c in (terms or {}).items():
            if abs(c) > 0.0:
                self.terms[(int(key[0]), int(key[1]))] = complex(c)

    @property
    def omega(self) -> complex:
        return np.exp(2j * np.pi * float(self.theta))

    def copy(self) -> "NCElement":
        return NCElement(self.theta, dict(self.terms))

    def __add__(self, other: "NCElement") -> "NCElement":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0.0) + c
        return NCElement(self.theta, out)

    def __sub__(self, other: "NCElement") -> "NCElement":
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> "NCElement":
        return NCElement(self.theta, {k: scalar * c for k, c in self.terms.items()})

    def __mul__(self, other: "NCElement") -> "NCElement":
        if not isinstance(other, NCElement):
            return NotImplemented
        w = self.omega
        out: dict[tuple[int, int], complex] = {}
        for (a, b), ca in self.terms.items():
            for (c, d), cb in other.terms.items():
                key = (a + c, b + d)
                phase = w ** (-(b * c))
                out[key] = out.get(key, 0.0) + ca * cb * phase
        return NCElement(self.theta, out)

    def adjoint(self) -> "NCElement":
        w = self.omega
        out: dict[tuple[int, int], complex] = {}
        for (m, n), c in self.terms.items():
            # (U^m V^n)^* = V^{-n} U^{-m} = omega^{-nm} U^{-m} V^{-n}
            out[(-m, -n)] = np.conj(c) * w ** (-(n * m))
        return NCElement(self.theta, out)

    def represent(self, rep: ClockShiftRep) -> np.ndarray:
        if Fraction(rep.p, rep.q) % 1 != self.theta % 1:
            raise InvalidParams("representation angle does not match the element")
        out = np.zeros((rep.q, rep.q), dtype=complex)
        for (m, n), c in self.terms.items():
            out += c * rep.monomial(m, n)
        return out

    def distance(self, other: "NCElement") -> float:
        keys = set(self.terms) | set(other.terms)
        return float(np.sqrt(sum(
            abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) ** 2 for k in keys)))


def generator_u(theta) -> NCElement:
    return NCElement(theta, {(1, 0): 1.0})


def generator_v(theta) -> NCElement:
    return NCElement(theta, {(0, 1): 1.0})


def theta_action(a: NCElement) -> NCElement:
    """Antilinear multiplicative extension of Theta(U) = V*, Theta(V) = -U*.

    On a monomial: Theta(c U^m V^n) = conj(c) (V*)^m (-U*)^n
                 = conj(c) (-1)^n omega^{-mn} U^{-n} V^{-m}.
    """
    w = a.omega
    out: dict[tuple[int, int], complex] = {}
    for (m, n), c in a.terms.items():
        coeff = np.conj(c) * (-1.0) ** n * w ** (-(m * n))
        key = (-n, -m)
        out[key] = out.get(key, 0.0) + coeff
    return NCElement(a.theta, out)


def fixed_point_generators(theta) -> tuple[NCElement, NCElement]:
    """x = i e^{i pi theta} u v*, y = i e^{-i pi theta} v u*; both are
    Theta-invariant unitaries with x* = -y."""
    theta = Fraction(theta) if not isinstance(theta, Fraction) else theta
    u, v = generator_u(theta), generator_v(theta)
    phase = np.exp(1j * np.pi * float(theta))
    x = (1j * phase) * (u * v.adjoint())
    y = (1j / phase) * (v * u.adjoint())
    return x, y


# --- truncated Fredholm modules and index pairings ---

@dataclass
class TruncatedFredholmModule:
    """Hard-truncated Fredholm module: the sign-of-Dirac phase F on a
    finite block of Fourier modes, with the Fermi projection P = (1-F)/2.

    F*F = 1 and P*P = P hold exactly on the truncated space by
    construction; the zero mode carries sign +1."""

    cutoff: int
    phase: np.ndarray  # dense F

    @property
    def projection(self) -> np.ndarray:
        return 0.5 * (np.eye(self.phase.shape[0]) - self.phase)

    def involution_defect(self) -> float:
        f = self.phase
        return float(np.linalg.norm(f @ f - np.eye(f.shape[0])))

    def projection_defect(self) -> float:
        p = self.projection
        return float(np.linalg.norm(p @ p - p))


def fredholm_module_1d(cutoff: int) -> TruncatedFredholmModule:
    """F = sign(n) on modes |n| <= cutoff, sign(0) = +1."""
    modes = np.arange(-cutoff, cutoff + 1)
    return TruncatedFredholmModule(
        cutoff=cutoff, phase=np.diag(np.where(modes >= 0, 1.0, -1.0)).astype(complex))


def fredholm_module_3d(cutoff: int) -> TruncatedFredholmModule:
    """F = sigma.n/|n| on the mode cube tensor the spinor slot."""
    sites = (2 * cutoff + 1) ** 3
    blocks = _dirac_phase_field(cutoff).reshape(sites, 2, 2)
    phase = np.zeros((2 * sites, 2 * sites), dtype=complex)
    for s in range(sites):
        phase[2 * s:2 * s + 2, 2 * s:2 * s + 2] = blocks[s]
    return TruncatedFredholmModule(cutoff=cutoff, phase=phase)


@dataclass
class PairingResult:
    raw: complex
    calibrated: float
    rounded: int
    residue: float
    cutoff: int

    def to_json(self) -> dict:
        return {
            "raw": [float(self.raw.real), float(self.raw.imag)],
            "calibrated": self.calibrated,
            "rounded": self.rounded,
            "residue": self.residue,
            "cutoff": self.cutoff,
        }


def _coeff_blocks(coeffs: dict) -> tuple[dict, int]:
    """Normalize symbol data to {offset: block matrix}; returns band limit."""
    out = {}
    band = 0
    for key, val in coeffs.items():
        arr = np.atleast_2d(np.asarray(val, dtype=complex))
        k = key if isinstance(key, tuple) else (int(key),)
        out[k] = arr
        band = max(band, max(abs(x) for x in k))
    return out, band


def _toeplitz_matrix(blocks: dict, modes: np.ndarray) -> np.ndarray:
    b = next(iter(blocks.values())).shape[0]
    n = len(modes)
    t = np.zeros((n * b, n * b), dtype=complex)
    for i, mi in enumerate(modes):
        for j, mj in enumerate(modes):
            block = blocks.get((int(mi - mj),))
            if block is not None:
                t[i * b:(i + 1) * b, j * b:(j + 1) * b] = block
    return t


def toeplitz_index(coeffs: dict, cutoff: int) -> int:
    """Fredholm index of the compression P u P on the truncated
    negative-mode subspace, P = (1 - F)/2 with sign(0) = +1.

    dim ker and dim coker are counted by singular values below 1e-8;
    truncation artifacts at the far end of the mode window are separated
    from physical kernel vectors by their localization: genuine kernel
    and cokernel vectors of the half-infinite operator concentrate at the
    physical edge (modes near -1).
    """
    blocks, band = _coeff_blocks(coeffs)
    if any(len(k) != 1 for k in blocks):
        raise InvalidParams("toeplitz_index expects 1D Fourier data")
    if cutoff < 4 * max(1, band):
        raise InvalidParams("cutoff must be at least 4x the Fourier support")
    modes = -np.arange(1, cutoff + 1)  # -1, -2, ..., -N
    t = _toeplitz_matrix(blocks, modes)
    u, s, vh = np.linalg.svd(t)
    for sigma in s:
        if 1e-8 <= sigma <= 1e-4:
            raise NumericallySingular(float(sigma))
    null = s < 1e-8
    b = next(iter(blocks.values())).shape[0]
    top = np.repeat(np.abs(modes) <= cutoff // 2, b)

    kernel = 0
    for i in np.where(null)[0]:
        vec = vh[i].conj()
        if float(np.sum(np.abs(vec[top]) ** 2)) > 0.5:
            kernel += 1
    cokernel = 0
    for i in np.where(null)[0]:
        vec = u[:, i]
        if float(np.sum(np.abs(vec[top]) ** 2)) > 0.5:
            cokernel += 1
    return kernel - cokernel


def nc_index_pairing_1d(coeffs: dict, cutoff: int,
                        residue_tol: float = 0.1) -> PairingResult:
    """Tr(w^{-1} [F, w]) on modes |n| <= cutoff, calibrated by 1/2.

    The unitary loop's inverse is its adjoint symbol; the commutator is
    supported near the mode origin, so the trace is exact once the cutoff
    clears the Fourier support.
    """
    blocks, band = _coeff_blocks(coeffs)
    if cutoff < 4 * max(1, band):
        raise InvalidParams("cutoff must be at least 4x the Fourier support")
    modes = np.arange(-cutoff, cutoff + 1)
    b = next(iter(blocks.values())).shape[0]
    w = _toeplitz_matrix(blocks, modes)
    signs = np.where(modes >= 0, 1.0, -1.0)
    f = np.repeat(signs, b)
    fw = f[:, None] * w - w * f[None, :]
    raw = complex(np.trace(w.conj().T @ fw))
    calibrated = float(raw.real) / 2.0
    rounded = int(np.rint(calibrated))
    residue = abs(calibrated - rounded) + abs(raw.imag) / 2.0
    if residue > residue_tol:
        raise ResidueTooLarge(calibrated, residue, residue_tol)
    return PairingResult(raw=raw, calibrated=calibrated, rounded=rounded,
                         residue=residue, cutoff=cutoff)


# --- 3D pairing on the flat Dirac module ---

def _dirac_phase_field(cutoff: int) -> np.ndarray:
    """F(n) = sigma . n / |n| on the mode cube, with F(0) = +1."""
    ax = np.arange(-cutoff, cutoff + 1)
    n1, n2, n3 = np.meshgrid(ax, ax, ax, indexing="ij")
    norm = np.sqrt(n1 ** 2 + n2 ** 2 + n3 ** 2)
    norm[norm == 0.0] = 1.0
    f = (n1[..., None, None] * SIGMA[1] + n2[..., None, None] * SIGMA[2]
         + n3[..., None, None] * SIGMA[3]) / norm[..., None, None]
    center = (cutoff, cutoff, cutoff)
    f[center] = SIGMA[0]
    return f


def _shift_zero(field: np.ndarray, r: tuple[int, int, int]) -> np.ndarray:
    """Shift a site field by r with zero fill (hard Dirichlet truncation)."""
    out = field
    for axis, d in enumerate(r):
        if d == 0:
            continue
        out = np.roll(out, d, axis=axis)
        sl = [slice(None)] * out.ndim
        sl[axis] = slice(0, d) if d > 0 else slice(d, None)
        out = out.copy()
        out[tuple(sl)] = 0.0
    return out


def _compose_fields(a: dict, b: dict) -> dict:
    """Hopping-field composition: (AB)_r(m) = sum_{r1} A_r1(m) B_{r-r1}(m-r1)
    with hard-truncation masking supplied by the zero-filled shifts."""
    out: dict[tuple, np.ndarray] = {}
    for r1, f1 in a.items():
        for r2, f2 in b.items():
            r = (r1[0] + r2[0], r1[1] + r2[1], r1[2] + r2[2])
            term = np.einsum("...ij,...jk->...ik", f1, _shift_zero(f2, r1))
            if r in out:
                out[r] += term
            else:
                out[r] = term
    return {r: f for r, f in out.items() if float(np.max(np.abs(f))) > 1e-14}


def _trace_of_triple(fields: dict, prune: float = 1e-7) -> complex:
    """Tr(A^3) for a hopping operator, by summing closed offset triangles.

    Each triangle (r1, r2, -r1-r2) contributes over the box where all
    three hops stay inside the truncation; the factors are strided views
    of the stored fields, so no shifted copies are made.  Triangles whose
    norm product is negligible at working precision are pruned.
    """
    norms = {r: float(np.max(np.abs(f))) for r, f in fields.items()}
    scale = max(norms.values()) ** 3
    sizes = next(iter(fields.values())).shape[:3]
    total = 0.0 + 0.0j
    for r1, f1 in fields.items():
        for r2, f2 in fields.items():
            r3 = (-r1[0] - r2[0], -r1[1] - r2[1], -r1[2] - r2[2])
            f3 = fields.get(r3)
            if f3 is None or norms[r1] * norms[r2] * norms[r3] < prune * scale:
                continue
            sl1, sl2, sl3 = [], [], []
            empty = False
            for axis in range(3):
                a, bb = r1[axis], r1[axis] + r2[axis]
                lo = max(0, a, bb)
                hi = sizes[axis] + min(0, a, bb)
                if lo >= hi:
                    empty = True
                    break
                sl1.append(slice(lo, hi))
                sl2.append(slice(lo - a, hi - a))
                sl3.append(slice(lo - bb, hi - bb))
            if empty:
                continue
            total += np.sum(np.einsum(
                "...ij,...jk,...ki->...",
                f1[tuple(sl1)], f2[tuple(sl2)], f3[tuple(sl3)]))
    return complex(total)


def _blocks_3d(coeffs: dict) -> tuple[dict, int]:
    blocks = {}
    band = 0
    for key, val in coeffs.items():
        arr = np.asarray(val, dtype=complex)
        if arr.shape != (2, 2):
            raise InvalidParams("3D pairing expects 2x2 spinor blocks")
        k = tuple(int(x) for x in key)
        if len(k) != 3:
            raise InvalidParams("3D pairing expects 3-component offsets")
        blocks[k] = arr
        band = max(band, max(abs(x) for x in k))
    return blocks, band


def _inverse_symbol_blocks(blocks: dict, band_limit: int,
                           samples: int = 32) -> dict:
    """Fourier coefficients of the pointwise inverse symbol, truncated at
    the given offset band; the symbol must be invertible everywhere."""
    ks = 2.0 * np.pi * np.arange(samples) / samples
    k1, k2, k3 = np.meshgrid(ks, ks, ks, indexing="ij")
    w = np.zeros((samples, samples, samples, 2, 2), dtype=complex)
    for r, bl in blocks.items():
        phase = np.exp(1j * (r[0] * k1 + r[1] * k2 + r[2] * k3))
        w += phase[..., None, None] * bl
    smallest = float(np.min(np.abs(np.linalg.det(w))))
    if smallest < 1e-6:
        raise InvalidParams(f"symbol is numerically singular (|det| = {smallest:.2e})")
    winv = np.linalg.inv(w)
    # c_r = (1/M^3) sum_k winv(k) e^{-i k.r}, which is fftn up to 1/M^3
    co = np.fft.fftn(winv, axes=(0, 1, 2)) / samples ** 3
    out = {}
    for r1 in range(-band_limit, band_limit + 1):
        for r2 in range(-band_limit, band_limit + 1):
            for r3 in range(-band_limit, band_limit + 1):
                bl = co[r1 % samples, r2 % samples, r3 % samples]
                if float(np.max(np.abs(bl))) > 1e-12:
                    out[(r1, r2, r3)] = bl
    return out


def nc_index_pairing_3d(coeffs: dict, cutoff: int,
                        inverse_coeffs: dict | None = None,
                        inverse_band: int = 3,
                        residue_tol: float = 0.25) -> PairingResult:
    """Calibrated Tr[(w^{-1}[F, w])^3] on the truncated cube of Fourier
    modes tensor the Dirac spinor slot tensor the symbol's own C^2 slot.

    The spinor slot (where F = sigma.n/|n| acts) and the symbol slot are
    distinct tensor factors, so every factor of the cubed expression is a
    commutator with 1/|n| decay.  Convergence in the cutoff is still slow
    (the trace is only conditionally confined), which is why the residue
    allowance is generous; the calibrated value approaches the winding
    number of the symbol from below as the cutoff grows.
    """
    blocks, band = _blocks_3d(coeffs)
    if band * 4 > max(4, cutoff):
        raise InvalidParams("symbol support must stay within cutoff/4")
    if inverse_coeffs is None:
        inverse_coeffs = _inverse_symbol_blocks(blocks, inverse_band)
    inv_blocks, _ = _blocks_3d(inverse_coeffs)

    L = 2 * cutoff + 1
    sites = L ** 3
    f_field = _dirac_phase_field(cutoff).reshape(sites, 2, 2)

    # blocks act as (spinor) x (aux): w = I_spinor x w_aux, F = F_spinor x I_aux
    winv_fields = {
        r: np.broadcast_to(np.kron(np.eye(2), bl), (sites, 4, 4)).copy()
        for r, bl in inv_blocks.items()
    }
    comm_fields = {}
    for r, bl in blocks.items():
        fshift = _shift_zero(f_field.reshape(L, L, L, 2, 2), r).reshape(sites, 2, 2)
        diff = f_field - fshift
        comm_fields[r] = np.einsum("xij,kl->xikjl", diff, bl).reshape(sites, 4, 4)

    lift = {r: f.reshape((L, L, L, 4, 4)) for r, f in winv_fields.items()}
    comm = {r: f.reshape((L, L, L, 4, 4)) for r, f in comm_fields.items()}
    a = _compose_fields(lift, comm)
    raw = _trace_of_triple(a)
    calibrated = -float(raw.real) / 8.0
    rounded = int(np.rint(calibrated))
    residue = abs(calibrated - rounded)
    if residue > residue_tol:
        raise ResidueTooLarge(calibrated, residue, residue_tol)
    return PairingResult(raw=raw, calibrated=calibrated, rounded=rounded,
                         residue=residue, cutoff=cutoff)


def lattice_degree_one_coeffs(mass: float = -2.0) -> dict:
    """Fourier data of the invertible degree-one lattice symbol
    (mass + sum cos k_i) + i sum sin k_i sigma_i; band limit 1."""
    out = {(0, 0, 0): mass * SIGMA[0]}
    for axis in range(3):
        e = [0, 0, 0]
        e[axis] = 1
        plus = 0.5 * SIGMA[0] + 0.5 * SIGMA[axis + 1]
        minus = 0.5 * SIGMA[0] - 0.5 * SIGMA[axis + 1]
        out[tuple(e)] = plus
        out[tuple(-x for x in e)] = minus
    return out


def winding_loop_coeffs(winding: int) -> dict:
    """Fourier data of the scalar loop e^{i * winding * theta}."""
    return {(int(winding),): np.array([[1.0 + 0.0j]])}


def coeffs_from_json(doc: list) -> dict:
    """Parse the Fourier-coefficient input format:
    [{"n": [int, ...], "matrix": [[[re, im], ...], ...]}, ...]."""
    out = {}
    for i, term in enumerate(doc):
        if "n" not in term or "matrix" not in term:
            raise InvalidParams(f"coefficient {i} needs fields 'n' and 'matrix'")
        key = tuple(int(x) for x in term["n"])
        try:
            mat = np.array([[complex(re, im) for re, im in row]
                            for row in term["matrix"]])
        except (TypeError, ValueError) as exc:
            raise InvalidParams(f"coefficient {i}: bad matrix ({exc})")
        if key in out:
            raise InvalidParams(f"duplicate Fourier offset {key}")
        out[key] = mat
    if not out:
        raise InvalidParams("no Fourier coefficients given")
    return out
