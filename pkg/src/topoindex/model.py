"""Time-reversal-invariant Bloch Hamiltonian families.

Provides negation-symmetric momentum grids with TRIM enumeration, the
antiunitary time reversal operator, built-in reference models, ribbon
(open-boundary) Hamiltonians obtained by partial Fourier transform, and a
JSON ingestion format for user models.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    GapClosed,
    HoppingRangeTooLong,
    InvalidParams,
    NonHermitianInput,
    SchemaError,
    UnknownModel,
)
from .linalg import hermitian_deviation

SIGMA = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]

GAP_TOL = 1e-6


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform grid k_i = -pi + 2*pi*m_i/N_i on the Brillouin torus.

    Sizes must be even so every grid is closed under k -> -k and contains
    all 2^d points with coordinates in {0, pi} (pi represented by -pi).
    """

    sizes: tuple[int, ...]

    def __post_init__(self):
        if not self.sizes or len(self.sizes) > 3:
            raise InvalidParams("grid dimension must be 1, 2 or 3")
        if any(n < 4 or n % 2 for n in self.sizes):
            raise InvalidParams("grid sizes must be even and at least 4")

    @property
    def dim(self) -> int:
        return len(self.sizes)

    def axis(self, i: int) -> np.ndarray:
        n = self.sizes[i]
        return -np.pi + 2.0 * np.pi * np.arange(n) / n

    def point(self, idx: tuple[int, ...]) -> np.ndarray:
        return np.array([self.axis(i)[m] for i, m in enumerate(idx)])

    def indices(self):
        return itertools.product(*(range(n) for n in self.sizes))

    def negate_index(self, idx: tuple[int, ...]) -> tuple[int, ...]:
        """Exact index of -k (mod 2*pi); integer arithmetic only."""
        return tuple((-m) % n for m, n in zip(idx, self.sizes))

    def trim_indices(self) -> list[tuple[int, ...]]:
        """Indices of the 2^d time-reversal fixed points, lexicographic in
        (0, pi) coordinates; the top-codimension point (pi,..,pi) is last."""
        per_axis = [(n // 2, 0) for n in self.sizes]  # k=0 index, k=pi index
        out = []
        for choice in itertools.product((0, 1), repeat=self.dim):
            out.append(tuple(per_axis[i][c] for i, c in enumerate(choice)))
        return out


def trim_points(grid: MomentumGrid) -> np.ndarray:
    """The 2^d fixed points with coordinates in {0, pi}, (pi,..,pi) last."""
    pts = []
    for choice in itertools.product((0.0, np.pi), repeat=grid.dim):
        pts.append(list(choice))
    return np.array(pts)


@dataclass
class TimeReversal:
    """Antiunitary operator Theta psi = U conj(psi) with Theta^2 = -1."""

    unitary: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        object.__setattr__(self, "unitary", u)
        n = u.shape[0]
        if np.linalg.norm(u.conj().T @ u - np.eye(n)) > 1e-10:
            raise InvalidParams("time reversal unitary part is not unitary")
        if np.linalg.norm(u @ u.conj() + np.eye(n)) > 1e-12:
            raise InvalidParams("time reversal must square to -1")

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.unitary @ np.conj(psi)


def standard_theta(bands: int) -> TimeReversal:
    """Theta = i sigma_2 (x) I on a spin-major basis."""
    if bands % 2:
        raise InvalidParams("standard time reversal needs an even band count")
    isy = np.array([[0, 1], [-1, 0]], dtype=complex)
    return TimeReversal(np.kron(isy, np.eye(bands // 2)))


@dataclass
class BlochFamily:
    """A map k -> H(k) with band bookkeeping and optional time reversal."""

    dim: int
    bands: int
    occupied: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    time_reversal: TimeReversal | None = None
    hopping_range: int | None = 1
    name: str = "custom"
    params: dict = field(default_factory=dict)
    gap_tol: float = GAP_TOL

    def __post_init__(self):
        if self.time_reversal is not None and self.occupied % 2:
            raise InvalidParams("occupied band count must be even (Kramers pairs)")
        if not 0 < self.occupied < self.bands:
            raise InvalidParams("need 0 < occupied < bands")

    def h(self, k) -> np.ndarray:
        return self.evaluate(np.asarray(k, dtype=float))

    def min_gap(self, grid: MomentumGrid) -> float:
        best = np.inf
        for idx in grid.indices():
            ev = np.linalg.eigvalsh(self.h(grid.point(idx)))
            best = min(best, float(np.min(np.abs(ev))))
        return best

    def require_gapped(self, grid: MomentumGrid) -> float:
        for idx in grid.indices():
            k = grid.point(idx)
            ev = np.linalg.eigvalsh(self.h(k))
            m = float(np.min(np.abs(ev)))
            if m <= self.gap_tol:
                raise GapClosed(k, m)
        return self.min_gap(grid)

    def slice_fixed(self, axis: int, value: float) -> "BlochFamily":
        """Lower-dimensional family with one momentum frozen.

        Keeps time reversal only when the frozen value is TRS-invariant
        (0 or pi), where the slice is itself a TRS family.
        """
        if not 0 <= axis < self.dim:
            raise InvalidParams("slice axis out of range")
        invariant = min(abs(value % (2 * np.pi)), abs(value % (2 * np.pi) - np.pi),
                        abs(value % (2 * np.pi) - 2 * np.pi)) < 1e-12

        def ev(k, _axis=axis, _v=value):
            full = np.insert(np.asarray(k, dtype=float), _axis, _v)
            return self.evaluate(full)

        return BlochFamily(
            dim=self.dim - 1,
            bands=self.bands,
            occupied=self.occupied,
            evaluate=ev,
            time_reversal=self.time_reversal if invariant else None,
            hopping_range=self.hopping_range,
            name=f"{self.name}[k{axis + 1}={value:.3f}]",
            params=dict(self.params),
        )


@dataclass
class TrsReport:
    max_deviation: float
    passed: bool


def check_trs(model: BlochFamily, grid: MomentumGrid, tol: float = 1e-10) -> TrsReport:
    """Verify Theta H(k) Theta* = H(-k) over a grid."""
    if model.time_reversal is None:
        raise InvalidParams("model carries no time reversal operator")
    u = model.time_reversal.unitary
    worst = 0.0
    for idx in grid.indices():
        k = grid.point(idx)
        lhs = u @ np.conj(model.h(k)) @ u.conj().T
        rhs = model.h(-k)
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return TrsReport(max_deviation=worst, passed=worst <= tol)


def direct_sum(a: BlochFamily, b: BlochFamily, name: str | None = None) -> BlochFamily:
    """Decoupled stack of two families (block-diagonal Hamiltonians)."""
    if a.dim != b.dim:
        raise InvalidParams("direct sum needs equal lattice dimensions")

    def ev(k):
        ha, hb = a.h(k), b.h(k)
        out = np.zeros((a.bands + b.bands, a.bands + b.bands), dtype=complex)
        out[: a.bands, : a.bands] = ha
        out[a.bands:, a.bands:] = hb
        return out

    tr = None
    if a.time_reversal is not None and b.time_reversal is not None:
        u = np.zeros((a.bands + b.bands, a.bands + b.bands), dtype=complex)
        u[: a.bands, : a.bands] = a.time_reversal.unitary
        u[a.bands:, a.bands:] = b.time_reversal.unitary
        tr = TimeReversal(u)
    rng = None
    if a.hopping_range is not None and b.hopping_range is not None:
        rng = max(a.hopping_range, b.hopping_range)
    return BlochFamily(
        dim=a.dim, bands=a.bands + b.bands, occupied=a.occupied + b.occupied,
        evaluate=ev, time_reversal=tr, hopping_range=rng,
        name=name or f"{a.name}+{b.name}",
    )


# --- builtin models ---

def _smoothstep(x: np.ndarray | float) -> np.ndarray | float:
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def _hopf_two_band(params) -> BlochFamily:
    # Occupied projector is p(n) = (1 + n.sigma)/2 with n a ball-collapse
    # degree-one map T^2 -> S^2, so the monopole projector is realized
    # verbatim on the lower band.
    if params:
        raise InvalidParams(f"hopf-two-band takes no parameters, got {params}")

    def nvec(k):
        r = float(np.hypot(k[0], k[1]))
        theta = np.pi * _smoothstep(r / np.pi)
        if r < 1e-12:
            return np.array([0.0, 0.0, 1.0])
        return np.array([np.sin(theta) * k[0] / r, np.sin(theta) * k[1] / r,
                         np.cos(theta)])

    def ev(k):
        n = nvec(k)
        return -(n[0] * SIGMA[1] + n[1] * SIGMA[2] + n[2] * SIGMA[3])

    return BlochFamily(dim=2, bands=2, occupied=1, evaluate=ev,
                       time_reversal=None, hopping_range=None,
                       name="hopf-two-band")


def _kane_mele(params) -> BlochFamily:
    t = float(params.pop("t", 1.0))
    lso = float(params.pop("lso", 0.06))
    lv = float(params.pop("lv", 0.1))
    if params:
        raise InvalidParams(f"unknown kane-mele parameters {sorted(params)}")
    if t <= 0:
        raise InvalidParams("kane-mele hopping t must be positive")

    def ev(k):
        k1, k2 = float(k[0]), float(k[1])
        f = t * (1.0 + np.exp(-1j * k1) + np.exp(-1j * k2))
        g = 2.0 * lso * (np.sin(k1) - np.sin(k2) - np.sin(k1 - k2))
        out = np.zeros((4, 4), dtype=complex)
        for s, sgn in ((0, +1.0), (1, -1.0)):  # spin-major blocks
            b = 2 * s
            out[b, b] = lv + sgn * g
            out[b + 1, b + 1] = -lv - sgn * g
            out[b, b + 1] = f
            out[b + 1, b] = np.conj(f)
        return out

    return BlochFamily(dim=2, bands=4, occupied=2, evaluate=ev,
                       time_reversal=standard_theta(4), hopping_range=1,
                       name="kane-mele", params={"t": t, "lso": lso, "lv": lv})


def _bhz(params) -> BlochFamily:
    a = float(params.pop("a", 1.0))
    b = float(params.pop("b", 1.0))
    m = float(params.pop("m", 2.0))
    if params:
        raise InvalidParams(f"unknown bhz parameters {sorted(params)}")

    def ev(k):
        k1, k2 = float(k[0]), float(k[1])
        d = (a * np.sin(k1), a * np.sin(k2),
             m - 2.0 * b * (2.0 - np.cos(k1) - np.cos(k2)))
        h = d[0] * SIGMA[1] + d[1] * SIGMA[2] + d[2] * SIGMA[3]
        hc = -d[0] * SIGMA[1] + d[1] * SIGMA[2] + d[2] * SIGMA[3]  # conj(h(-k))
        out = np.zeros((4, 4), dtype=complex)
        out[:2, :2] = h
        out[2:, 2:] = hc
        return out

    return BlochFamily(dim=2, bands=4, occupied=2, evaluate=ev,
                       time_reversal=standard_theta(4), hopping_range=1,
                       name="bhz", params={"a": a, "b": b, "m": m})


def _fkm3d(params) -> BlochFamily:
    t = float(params.pop("t", 1.0))
    m = float(params.pop("m", -2.0))
    if params:
        raise InvalidParams(f"unknown fu-kane-mele-3d parameters {sorted(params)}")
    # Spin-major Dirac matrices: alpha_i = sigma_i (x) tau_1, beta = I (x) tau_3.
    tau1 = SIGMA[1]
    tau3 = SIGMA[3]
    alphas = [np.kron(SIGMA[i], tau1) for i in (1, 2, 3)]
    beta = np.kron(SIGMA[0], tau3)

    def ev(k):
        out = sum(t * np.sin(float(k[i])) * alphas[i] for i in range(3))
        out = out + (m + t * sum(np.cos(float(k[i])) for i in range(3))) * beta
        return out

    return BlochFamily(dim=3, bands=4, occupied=2, evaluate=ev,
                       time_reversal=standard_theta(4), hopping_range=1,
                       name="fu-kane-mele-3d", params={"t": t, "m": m})


def _kitaev_chain(params) -> BlochFamily:
    t = float(params.pop("t", 1.0))
    mu = float(params.pop("mu", 1.0))
    delta = float(params.pop("delta", 1.0))
    if params:
        raise InvalidParams(f"unknown kitaev-chain parameters {sorted(params)}")
    if delta == 0.0:
        raise InvalidParams("kitaev-chain needs a nonzero pairing delta")

    def ev(k):
        k1 = float(k[0])
        h = (-2.0 * t * np.cos(k1) - mu) * SIGMA[3] + 2.0 * delta * np.sin(k1) * SIGMA[2]
        return np.kron(SIGMA[0], h)  # time-reversal-doubled BdG chain

    return BlochFamily(dim=1, bands=4, occupied=2, evaluate=ev,
                       time_reversal=standard_theta(4), hopping_range=1,
                       name="kitaev-chain", params={"t": t, "mu": mu, "delta": delta})


def _atomic_limit(params) -> BlochFamily:
    n = int(params.pop("n", 4))
    dim = int(params.pop("dim", 2))
    if params:
        raise InvalidParams(f"unknown atomic-limit parameters {sorted(params)}")
    if n % 4:
        raise InvalidParams("atomic-limit band count must be a multiple of 4")
    if dim not in (1, 2, 3):
        raise InvalidParams("atomic-limit dim must be 1, 2 or 3")
    orbitals = n // 2
    energies = np.array([-1.0] * (orbitals // 2) + [1.0] * (orbitals - orbitals // 2))
    h0 = np.kron(SIGMA[0], np.diag(energies)).astype(complex)

    def ev(k):
        return h0.copy()

    return BlochFamily(dim=dim, bands=n, occupied=n // 2, evaluate=ev,
                       time_reversal=standard_theta(n), hopping_range=0,
                       name="atomic-limit", params={"n": n, "dim": dim})


_BUILTINS = {
    "hopf-two-band": _hopf_two_band,
    "kane-mele": _kane_mele,
    "bhz": _bhz,
    "fu-kane-mele-3d": _fkm3d,
    "kitaev-chain": _kitaev_chain,
    "atomic-limit": _atomic_limit,
}


def builtin(name: str, **params) -> BlochFamily:
    """Construct a reference model by name with validated parameters."""
    if name not in _BUILTINS:
        raise UnknownModel(name, _BUILTINS)
    return _BUILTINS[name](dict(params))


# --- ribbons ---

@dataclass
class RibbonFamily:
    """Open-boundary family: (L*n) x (L*n) Hermitian blocks over the
    momenta of the remaining periodic directions."""

    transverse_sites: int
    bands: int
    dim: int  # momentum dimension of the ribbon (bulk dim - 1)
    hoppings: Callable[[np.ndarray], list[np.ndarray]]
    hopping_range: int
    name: str = "ribbon"

    def evaluate(self, k) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        blocks = self.hoppings(k)
        L, n, R = self.transverse_sites, self.bands, self.hopping_range
        out = np.zeros((L * n, L * n), dtype=complex)
        for i in range(L):
            for j in range(L):
                d = j - i
                if abs(d) <= R:
                    out[i * n:(i + 1) * n, j * n:(j + 1) * n] = blocks[d + R]
        return out

    def evaluate_periodic(self, k) -> np.ndarray:
        """Same blocks with the hopping across the cut restored (indices
        mod L); its spectrum is the union of bulk spectra at the L
        commensurate momenta of the reperiodized direction."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        blocks = self.hoppings(k)
        L, n, R = self.transverse_sites, self.bands, self.hopping_range
        out = np.zeros((L * n, L * n), dtype=complex)
        for i in range(L):
            for d in range(-R, R + 1):
                j = (i + d) % L
                out[i * n:(i + 1) * n, j * n:(j + 1) * n] += blocks[d + R]
        return out


def ribbonize(model: BlochFamily, open_axis: int = 0, width: int = 24,
              fourier_samples: int | None = None) -> RibbonFamily:
    """Open one axis by partial Fourier transform of H(k).

    Hopping matrices along the open axis are the Fourier coefficients of
    evaluate over that axis, truncated at the declared hopping range;
    anything beyond it above 1e-10 raises HoppingRangeTooLong.
    """
    if width < 8:
        raise InvalidParams("ribbon width must be at least 8")
    if not 0 <= open_axis < model.dim:
        raise InvalidParams("open axis out of range")
    if model.hopping_range is None:
        raise HoppingRangeTooLong(open_axis, float("inf"))
    R = model.hopping_range
    nf = fourier_samples or max(8, 4 * (R + 1))

    def hoppings(k_perp: np.ndarray) -> list[np.ndarray]:
        ks = -np.pi + 2.0 * np.pi * np.arange(nf) / nf
        hs = []
        for kappa in ks:
            full = np.insert(k_perp, open_axis, kappa)
            hs.append(model.h(full))
        hs = np.array(hs)
        blocks = []
        for d in range(-R, R + 1):
            phase = np.exp(-1j * ks * d)
            blocks.append(np.tensordot(phase, hs, axes=(0, 0)) / nf)
        # beyond-range leakage check at the farthest representable offset
        worst = 0.0
        for d in range(R + 1, nf // 2):
            phase = np.exp(-1j * ks * d)
            worst = max(worst, float(np.linalg.norm(np.tensordot(phase, hs, axes=(0, 0)) / nf)))
        if worst > 1e-10:
            raise HoppingRangeTooLong(open_axis, worst)
        return blocks

    return RibbonFamily(transverse_sites=width, bands=model.bands,
                        dim=model.dim - 1, hoppings=hoppings, hopping_range=R,
                        name=f"{model.name}-ribbon")


# --- JSON ingestion ---

def _matrix_from_json(obj, path: str) -> np.ndarray:
    try:
        arr = np.array([[complex(re, im) for re, im in row] for row in obj])
    except (TypeError, ValueError) as exc:
        raise SchemaError(path, f"matrix must be [[[re, im], ...], ...]: {exc}")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise SchemaError(path, "matrix must be square")
    return arr


def _matrix_to_json(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a, dtype=complex)]


def load_model(doc: dict) -> BlochFamily:
    """Build a BlochFamily from the documented JSON schema.

    H(k) = sum_R term(R) e^{i k.R} plus the conjugate transpose of every
    term with R != 0; the R = 0 block must be Hermitian.
    """
    if not isinstance(doc, dict):
        raise SchemaError("$", "document must be an object")
    for key in ("dim", "bands", "occupied", "terms"):
        if key not in doc:
            raise SchemaError(f"$.{key}", "missing required field")
    dim, bands, occupied = doc["dim"], doc["bands"], doc["occupied"]
    if dim not in (1, 2, 3):
        raise SchemaError("$.dim", "dim must be 1, 2 or 3")
    terms: dict[tuple[int, ...], np.ndarray] = {}
    max_r = 0
    for i, term in enumerate(doc["terms"]):
        path = f"$.terms[{i}]"
        if "R" not in term or "matrix" not in term:
            raise SchemaError(path, "term needs R and matrix")
        R = tuple(int(x) for x in term["R"])
        if len(R) != dim:
            raise SchemaError(f"{path}.R", f"R must have {dim} entries")
        mat = _matrix_from_json(term["matrix"], f"{path}.matrix")
        if mat.shape != (bands, bands):
            raise SchemaError(f"{path}.matrix", f"expected {bands}x{bands}")
        if R in terms:
            raise SchemaError(f"{path}.R", f"duplicate hopping vector {R}")
        terms[R] = mat
        max_r = max(max_r, max(abs(x) for x in R) if R else 0)
    zero = tuple([0] * dim)
    if zero in terms and hermitian_deviation(terms[zero]) > 1e-10:
        raise NonHermitianInput()

    tr = None
    if doc.get("time_reversal") is not None:
        u = _matrix_from_json(doc["time_reversal"], "$.time_reversal")
        if u.shape != (bands, bands):
            raise SchemaError("$.time_reversal", f"expected {bands}x{bands}")
        tr = TimeReversal(u)

    def ev(k):
        out = np.zeros((bands, bands), dtype=complex)
        for R, mat in terms.items():
            if all(x == 0 for x in R):
                out += mat
            else:
                ph = np.exp(1j * float(np.dot(k, R)))
                out += ph * mat + np.conj(ph) * mat.conj().T
        return out

    return BlochFamily(dim=dim, bands=bands, occupied=occupied, evaluate=ev,
                       time_reversal=tr, hopping_range=max_r,
                       name=doc.get("name", "custom"))


def to_json(model: BlochFamily, fourier_samples: int | None = None) -> dict:
    """Serialize a finite-range family to the model JSON schema.

    Hoppings are extracted by a discrete Fourier transform per axis tuple;
    each R/-R pair is emitted once (canonical representative: first nonzero
    component positive).
    """
    if model.hopping_range is None:
        raise InvalidParams("model does not declare a finite hopping range")
    R = model.hopping_range
    nf = fourier_samples or max(8, 4 * (R + 1))
    ks = -np.pi + 2.0 * np.pi * np.arange(nf) / nf
    mesh = list(itertools.product(ks, repeat=model.dim))
    hs = np.array([model.h(np.array(k)) for k in mesh])

    terms = []
    for offs in itertools.product(range(-R, R + 1), repeat=model.dim):
        if any(o != 0 for o in offs):
            first = next(o for o in offs if o != 0)
            if first < 0:
                continue  # the conjugate partner is implied
        phases = np.array([np.exp(-1j * np.dot(k, offs)) for k in mesh])
        block = np.tensordot(phases, hs, axes=(0, 0)) / len(mesh)
        if all(o == 0 for o in offs):
            block = 0.5 * (block + block.conj().T)
        if np.linalg.norm(block) < 1e-14:
            continue
        terms.append({"R": list(offs), "matrix": _matrix_to_json(block)})

    return {
        "name": model.name,
        "dim": model.dim,
        "bands": model.bands,
        "occupied": model.occupied,
        "terms": terms,
        "time_reversal": None if model.time_reversal is None
        else _matrix_to_json(model.time_reversal.unitary),
    }
