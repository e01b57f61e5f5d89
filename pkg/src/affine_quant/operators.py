"""
Discretized quantum Hamiltonians for the affine catalog, plus the operator
identities behind them (dilation operator, kinetic identity, boundary terms).

Kinetic energy uses the 3-point stencil with Dirichlet ghosts at the grid
ends, so every Hamiltonian is a real symmetric tridiagonal matrix

    diag[j]    = hbar^2 / (m h^2) + V(x_j) + corr(x_j) / (2 m)
    offdiag[j] = -hbar^2 / (2 m h^2)

where ``corr`` is the extra hbar^2 term of affine quantization (zero for the
canonical scheme).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid

from .domain_grid import DomainKind, DomainSpec, Grid1D, check_grid
from .errors import DomainError


class Quantization(enum.Enum):
    CANONICAL = "canonical"
    AFFINE = "affine"


@dataclass(frozen=True)
class Potential:
    """Classical potential V(x): ``none``, ``harmonic`` (m w^2 x^2 / 2) or ``custom``."""

    kind: str = "none"
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("none", "harmonic", "custom"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "custom" and not callable(self.func):
            raise ValueError("custom potential needs a callable")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def harmonic(cls):
        return cls("harmonic")

    @classmethod
    def custom(cls, func):
        return cls("custom", func)

    def __call__(self, x, model) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "none":
            return np.zeros_like(x)
        if self.kind == "harmonic":
            return 0.5 * model.mass * model.omega**2 * x**2
        return np.asarray(self.func(x), dtype=float) * np.ones_like(x)

    def derivative(self, x: float, model) -> float:
        """dV/dx at a single point."""
        if self.kind == "none":
            return 0.0
        if self.kind == "harmonic":
            return model.mass * model.omega**2 * x
        eps = 1e-6 * max(1.0, abs(x))
        f = self.func
        return float((f(x + eps) - f(x - eps)) / (2 * eps))


CATALOG_TAGS = (1, 2, 3, 4, 5, "HO", "HalfHO", "CanonicalBox")


@dataclass(frozen=True)
class ModelSpec:
    """A classical Hamiltonian p^2/2m + V(q) on ``domain`` and its quantization."""

    domain: DomainSpec
    scheme: Quantization = Quantization.AFFINE
    hbar: float = 1.0
    omega: float = 1.0
    mass: float = 1.0
    potential: Potential = field(default_factory=Potential.none)
    catalog_id: int | str | None = None

    def __post_init__(self):
        for name in ("hbar", "omega", "mass"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if self.scheme is Quantization.AFFINE and self.domain.kind is DomainKind.FULL_LINE:
            raise DomainError("affine scheme needs excluded points; full line is canonical only")
        if self.catalog_id is not None and self.catalog_id not in CATALOG_TAGS:
            raise ValueError(f"unknown catalog id {self.catalog_id!r}")

    def V(self, x) -> np.ndarray:
        return self.potential(x, self)

    def classical_energy(self, p, q):
        """H(p, q) = p^2 / 2m + V(q), with no hbar term."""
        return 0.5 * np.asarray(p) ** 2 / self.mass + self.V(q)

    def with_hbar(self, hbar: float) -> ModelSpec:
        return replace(self, hbar=float(hbar))


def catalog_model(tag, *, hbar=1.0, b=1.0, omega=1.0, mass=1.0, potential=None) -> ModelSpec:
    """Model from the catalog.

    Numbered items 1-5 are the affine Hamiltonians on the half-line, shifted
    half-line, interval, punctured exterior and punctured line. Items other
    than the interval default to a harmonic potential so that their spectra
    are discrete. ``"HO"`` is the canonical full-line oscillator,
    ``"HalfHO"`` is item 1 with the harmonic potential and
    ``"CanonicalBox"`` is the v-wall particle in a box.
    """
    harmonic = Potential.harmonic()
    table = {
        1: (DomainSpec.half_line(0.0), Quantization.AFFINE, harmonic),
        2: (DomainSpec.half_line(b), Quantization.AFFINE, harmonic),
        3: (DomainSpec.interval(b), Quantization.AFFINE, Potential.none()),
        4: (DomainSpec.punctured_exterior(b), Quantization.AFFINE, harmonic),
        5: (DomainSpec.punctured_line(), Quantization.AFFINE, harmonic),
        "HO": (DomainSpec.full_line(), Quantization.CANONICAL, harmonic),
        "HalfHO": (DomainSpec.half_line(0.0), Quantization.AFFINE, harmonic),
        "CanonicalBox": (DomainSpec.interval(b), Quantization.CANONICAL, Potential.none()),
    }
    if tag not in table:
        raise ValueError(f"unknown catalog tag {tag!r}")
    domain, scheme, pot = table[tag]
    if potential is not None:
        if tag in ("HO", "HalfHO", "CanonicalBox", 3):
            raise ValueError(f"catalog model {tag!r} has a fixed potential")
        pot = potential
    return ModelSpec(domain, scheme, hbar, omega, mass, pot, catalog_id=tag)


def affine_correction(domain: DomainSpec, hbar: float, x):
    """Extra hbar^2 term inside the kinetic bracket of the affine Hamiltonian.

    Returned without the global 1/2 (the caller applies 1/2m):

    ======================  ===============================
    half_line(0)            (3/4) hbar^2 / x^2
    half_line(b)            (3/4) hbar^2 / (x + b)^2
    interval(b)             hbar^2 (2x^2 + b^2) / (b^2 - x^2)^2
    punctured_exterior(b)   hbar^2 (2x^2 + b^2) / (b^2 - x^2)^2
    punctured_line          2 hbar^2 / x^2
    full_line               0
    ======================  ===============================
    """
    xa = np.asarray(x, dtype=float)
    if not np.all(domain.contains(xa)):
        raise DomainError(f"point(s) outside the open domain {domain.describe()}")
    k, b = domain.kind, domain.b
    h2 = hbar * hbar
    if k is DomainKind.FULL_LINE:
        out = np.zeros_like(xa)
    elif k is DomainKind.HALF_LINE:
        out = 0.75 * h2 / (xa + b) ** 2
    elif k is DomainKind.PUNCTURED_LINE:
        out = 2.0 * h2 / xa**2
    else:
        out = h2 * (2.0 * xa**2 + b * b) / (b * b - xa**2) ** 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Real symmetric tridiagonal matrix on a grid (single off-diagonal array)."""

    diag: np.ndarray
    offdiag: np.ndarray
    grid: Grid1D
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        d = np.ascontiguousarray(self.diag, dtype=float)
        e = np.ascontiguousarray(self.offdiag, dtype=float)
        if d.ndim != 1 or e.shape != (max(d.size - 1, 0),):
            raise ValueError("offdiag must have exactly len(diag) - 1 entries")
        if d.size != self.grid.n:
            raise ValueError("operator size does not match grid")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return self.diag.size

    def norm(self) -> float:
        """Infinity norm (max absolute row sum); bounds the spectral radius."""
        rows = np.abs(self.diag).copy()
        rows[:-1] += np.abs(self.offdiag)
        rows[1:] += np.abs(self.offdiag)
        return float(rows.max())

    def gershgorin(self) -> tuple[float, float]:
        r = np.zeros_like(self.diag)
        r[:-1] += np.abs(self.offdiag)
        r[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))

    def matvec(self, v):
        v = np.asarray(v)
        out = self.diag * v if v.ndim == 1 else self.diag[:, None] * v
        out[:-1] += (self.offdiag * v[1:].T).T
        out[1:] += (self.offdiag * v[:-1].T).T
        return out

    def to_sparse(self):
        return sp.diags([self.offdiag, self.diag, self.offdiag], [-1, 0, 1], format="csr")

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    @classmethod
    def from_arrays(cls, diag, offdiag, grid=None, hbar=1.0, mass=1.0):
        """Wrap bare arrays; a unit-spacing placeholder grid is made if none given."""
        diag = np.atleast_1d(np.asarray(diag, dtype=float))
        if grid is None:
            grid = _PlaceholderGrid(diag.size)
        return cls(diag, np.asarray(offdiag, dtype=float), grid, hbar, mass)


@dataclass(frozen=True)
class _PlaceholderGrid:
    """Stand-in grid for matrices that do not come from a discretization."""

    n: int
    x_min: float = 0.0

    @property
    def h(self) -> float:
        return 1.0

    @property
    def x_max(self) -> float:
        return float(self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.n + 1, dtype=float)


def total_potential(model: ModelSpec, grid: Grid1D) -> np.ndarray:
    """V(x_j) plus the affine correction / 2m at every node."""
    x = grid.nodes
    v = model.V(x)
    if model.scheme is Quantization.AFFINE:
        v = v + affine_correction(model.domain, model.hbar, x) / (2.0 * model.mass)
    return v


def assemble(model: ModelSpec, grid: Grid1D) -> TridiagonalOperator:
    """Tridiagonal Hamiltonian of ``model`` on ``grid``.

    For punctured domains ``grid`` is one of the two half-axis grids; the
    excluded point decouples the halves, so each is assembled separately.
    """
    check_grid(grid, model.domain)
    h = grid.h
    kin = model.hbar**2 / (2.0 * model.mass * h * h)
    diag = 2.0 * kin + total_potential(model, grid)
    offdiag = np.full(grid.n - 1, -kin)
    return TridiagonalOperator(diag, offdiag, grid, model.hbar, model.mass)


_CENTERED = {
    2: np.array([0.5]),
    4: np.array([2.0 / 3.0, -1.0 / 12.0]),
    6: np.array([3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0]),
}


def derivative_matrix(grid: Grid1D, order: int = 2):
    """Centered first-derivative matrix with zero ghosts (antisymmetric)."""
    if order not in _CENTERED:
        raise ValueError(f"order must be one of {sorted(_CENTERED)}")
    n, h = grid.n, grid.h
    bands, offsets = [], []
    for k, c in enumerate(_CENTERED[order], start=1):
        band = np.full(n - k, c / h)
        bands += [band, -band]
        offsets += [k, -k]
    return sp.diags(bands, offsets, shape=(n, n), format="csr")


def momentum_matrix(grid: Grid1D, hbar: float, order: int = 2):
    """P = -i hbar d/dx."""
    return (-1j * hbar) * derivative_matrix(grid, order)


def dilation_matrix(grid: Grid1D, hbar: float, order: int = 2):
    """D = (P Q + Q P) / 2 with P from centered differences.

    The symmetrized form is exactly Hermitian on the grid and approximates
    -i hbar (x d/dx + 1/2) to O(h^order) on functions vanishing at the ends.
    """
    C = derivative_matrix(grid, order)
    X = sp.diags(grid.nodes)
    return ((-0.5j * hbar) * (C @ X + X @ C)).tocsr()


def _samples(fn, grid: Grid1D) -> np.ndarray:
    if callable(fn):
        return np.asarray(fn(grid.nodes), dtype=complex)
    arr = np.asarray(fn, dtype=complex)
    if arr.shape != (grid.n,):
        raise ValueError("sampled test function does not match the grid")
    return arr


def _check_interior_support(f: np.ndarray, grid: Grid1D, m: int = 5) -> None:
    """f, f' and f'' must vanish at both ends: |f| = O(d^3) over the last m nodes."""
    scale = np.max(np.abs(f))
    if scale == 0:
        raise ValueError("degenerate test function (identically zero)")
    x = grid.nodes
    for idx, wall in ((np.arange(m), grid.x_min), (np.arange(grid.n - m, grid.n), grid.x_max)):
        vals = np.abs(f[idx])
        if vals.max() <= 1e-12 * scale:
            continue
        d = np.abs(x[idx] - wall)
        slope = np.polyfit(np.log(d), np.log(np.maximum(vals, 1e-300)), 1)[0]
        if slope < 2.5:
            raise ValueError(
                f"test function is not interior-supported near x={wall}: "
                f"local power {slope:.2f} < 3 (boundary contamination)"
            )


def kinetic_identity_residual(grid: Grid1D, hbar: float, testfns: Sequence) -> float:
    """max_f |<f| D Q^-2 D - P^2 - (3/4) hbar^2 Q^-2 |f>| / <f|f>.

    ``grid`` must lie in x > 0. Test functions are callables or node samples.
    """
    if grid.x_min < 0:
        raise DomainError("kinetic identity needs a grid on the positive half-line")
    if len(testfns) == 0:
        raise ValueError("no test functions given")
    h, x = grid.h, grid.nodes
    D = dilation_matrix(grid, hbar, order=2)
    worst = 0.0
    for fn in testfns:
        f = _samples(fn, grid)
        _check_interior_support(f, grid)
        norm2 = h * np.vdot(f, f).real
        Df = D @ f
        dqd = h * np.vdot(Df / x, Df / x).real
        lap = np.empty_like(f)
        lap[1:-1] = f[2:] - 2 * f[1:-1] + f[:-2]
        lap[0] = f[1] - 2 * f[0]
        lap[-1] = f[-2] - 2 * f[-1]
        p2 = -(hbar**2) * h * np.vdot(f, lap).real / h**2
        q2 = 0.75 * hbar**2 * h * np.sum(np.abs(f) ** 2 / x**2)
        worst = max(worst, abs(dqd - p2 - q2) / norm2)
    return float(worst)


def kinetic_identity_convergence(x_max: float, hbar: float, testfns, n0: int = 100,
                                 refinements: int = 3):
    """Residuals on (0, x_max) for n0, 2n0+1, ... and the successive ratios."""
    grid = Grid1D(0.0, x_max, n0)
    residuals = []
    for _ in range(refinements + 1):
        residuals.append(kinetic_identity_residual(grid, hbar, testfns))
        grid = grid.refine()
    r = np.array(residuals)
    return r, r[:-1] / r[1:]


def boundary_term(f, g, grid: Grid1D) -> float:
    """Quadrature of d/dx [f g] over (x_min, x_max).

    The product is extrapolated quadratically to both ends, differentiated with
    second-order differences and integrated with the trapezoid rule; the
    result tracks f(b)g(b) - f(a)g(a) to O(h^2). A nonzero value is exactly the
    surface term that spoils symmetry of P when f does not vanish at a wall.
    """
    u = np.asarray(f, dtype=complex) * np.asarray(g, dtype=complex)
    if u.shape != (grid.n,):
        raise ValueError("samples do not match grid")
    x = grid.nodes
    # quadratic through the three nodes nearest each end: weights at distance h, 2h, 3h
    w = np.array([3.0, -3.0, 1.0])
    u_lo = w @ u[:3]
    u_hi = w @ u[::-1][:3]
    xs = np.concatenate(([grid.x_min], x, [grid.x_max]))
    us = np.concatenate(([u_lo], u, [u_hi]))
    du = np.gradient(us, xs, edge_order=2)
    val = trapezoid(du, xs)
    return float(val.real) if abs(val.imag) <= 1e-14 * max(1.0, abs(val)) else val
