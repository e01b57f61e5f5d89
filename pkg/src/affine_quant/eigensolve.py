"""
Eigenpairs of symmetric tridiagonal operators.

Two independent algorithms are provided so each can check the other:
implicit-shift QL (all eigenvalues, optional vectors) and Sturm-sequence
bisection with inverse iteration (lowest ``k`` pairs). On top of them sit
Richardson extrapolation over a 2:1 grid pair, level spacings, and the
power-law exponent of an eigenfunction at a wall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from . import _kernels
from .domain_grid import Grid1D, build_grid, truncation_radius
from .errors import ConvergenceError, DomainError
from .operators import ModelSpec, TridiagonalOperator, assemble

EPS = np.finfo(float).eps
QL_MAX_SWEEPS = 50
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sorted eigenvalues with optional eigenvectors (columns, h * sum psi^2 = 1)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    grid: Grid1D
    method: str
    extrapolated: bool = False

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or ev.size == 0:
            raise ValueError("spectrum needs at least one eigenvalue")
        if np.any(np.diff(ev) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        object.__setattr__(self, "eigenvalues", ev)
        if self.eigenvectors is not None and self.eigenvectors.shape[1] != ev.size:
            raise ValueError("one eigenvector column per eigenvalue")

    def __len__(self):
        return self.eigenvalues.size


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # first entry above 1e-8 of the column max made positive
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-8 * np.max(np.abs(col)))
        if big.size and col[big[0]] < 0:
            vecs[:, j] = -col
    return vecs


def eigen_ql(T: TridiagonalOperator, vectors: bool = False) -> Spectrum:
    """All eigenvalues by implicit-shift QL (at most 50 sweeps per eigenvalue).

    Eigenvector accumulation costs O(n^3); leave ``vectors`` off for large n.
    """
    n = T.n
    d = T.diag.copy()
    e = np.zeros(n)
    e[: n - 1] = T.offdiag
    z = np.eye(n) if vectors else np.zeros((1, 1))
    bad = _kernels.tql_implicit(d, e, z, vectors, QL_MAX_SWEEPS)
    if bad >= 0:
        raise ConvergenceError(f"QL did not converge for eigenvalue index {bad}", index=int(bad))
    order = np.argsort(d, kind="stable")
    vecs = None
    if vectors:
        vecs = _fix_signs(z[:, order] / math.sqrt(T.grid.h))
    return Spectrum(d[order], vecs, T.grid, "QL")


def sturm_count(T: TridiagonalOperator, lam: float) -> int:
    """Number of eigenvalues of T strictly below ``lam``."""
    e2 = T.offdiag**2
    return int(_kernels.sturm_count(T.diag, e2, float(lam), _pivmin(e2)))


def _pivmin(e2: np.ndarray) -> float:
    tiny = np.finfo(float).tiny
    return max(tiny, tiny * (float(e2.max()) if e2.size else 1.0)) / EPS


def eigen_bisection(T: TridiagonalOperator, k: int, vectors: bool = True,
                    atol: float | None = None) -> Spectrum:
    """Lowest ``k`` eigenpairs: Sturm bisection, then inverse iteration.

    ``atol`` defaults to 4 eps ||T||, well inside the 1e-12 ||T|| contract.
    """
    n = T.n
    if int(k) != k or not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    k = int(k)
    norm = T.norm()
    atol = 4 * EPS * norm if atol is None else float(atol)
    lo, hi = T.gershgorin()
    pad = 2 * EPS * max(norm, 1.0)
    e2 = T.offdiag**2
    vals = _kernels.bisect_lowest(T.diag, e2, k, lo - pad, hi + pad, atol, _pivmin(e2), 400)
    vecs = _inverse_iteration(T, vals, norm) if vectors else None
    return Spectrum(vals, vecs, T.grid, "Bisection")


def inverse_iteration(T: TridiagonalOperator, vals) -> np.ndarray:
    """Eigenvectors (columns, h-normalized) for known eigenvalues ``vals``."""
    return _inverse_iteration(T, np.asarray(vals, dtype=float), T.norm())


def _inverse_iteration(T: TridiagonalOperator, vals: np.ndarray, norm: float) -> np.ndarray:
    n = T.n
    rng = np.random.default_rng(20221101)
    ab = np.zeros((3, n))
    ab[0, 1:] = T.offdiag
    ab[2, :-1] = T.offdiag
    out = np.empty((n, vals.size))
    cluster = 1e-3 * max(norm, 1.0)
    for j, lam in enumerate(vals):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        shift = lam
        near = [i for i in range(j) if abs(vals[i] - lam) < cluster]
        for _ in range(3):
            ab[1] = T.diag - shift
            try:
                y = solve_banded((1, 1), ab, v, check_finite=False)
            except (LinAlgError, ValueError):
                shift = lam + 10 * EPS * max(norm, 1.0)
                continue
            for i in near:
                y -= (out[:, i] @ y) * out[:, i]
            nrm = np.linalg.norm(y)
            if not np.isfinite(nrm) or nrm == 0:
                shift = lam + 10 * EPS * max(norm, 1.0)
                continue
            v = y / nrm
        res = np.linalg.norm(T.matvec(v) - lam * v)
        if res > RESIDUAL_TOL * max(norm, 1.0):
            raise ConvergenceError(
                f"inverse iteration residual {res:.3e} too large for eigenvalue index {j}", index=j
            )
        out[:, j] = v
    return _fix_signs(out / math.sqrt(T.grid.h))


def _grids_halved(g1: Grid1D, g2: Grid1D) -> bool:
    tol = 1e-12 * max(1.0, abs(g1.x_min), abs(g1.x_max))
    return (abs(g1.x_min - g2.x_min) <= tol and abs(g1.x_max - g2.x_max) <= tol
            and abs(g1.h / g2.h - 2.0) <= 1e-12)


def richardson(spec_h: Spectrum, spec_h2: Spectrum, k: int) -> list[float]:
    """(4 E(h/2) - E(h)) / 3 for the lowest ``k`` levels."""
    if not _grids_halved(spec_h.grid, spec_h2.grid):
        raise ValueError("spectra are not on a 2:1 refined grid pair")
    if k > min(len(spec_h), len(spec_h2)):
        raise ValueError(f"need {k} levels in both spectra")
    e1 = spec_h.eigenvalues[:k]
    e2 = spec_h2.eigenvalues[:k]
    return list((4.0 * e2 - e1) / 3.0)


def level_spacings(spec: Spectrum, count: int) -> list[float]:
    """E_{n+1} - E_n for n = 0 .. count-1."""
    if count + 1 > len(spec):
        raise ValueError(f"{count} spacings need {count + 1} levels, have {len(spec)}")
    return list(np.diff(spec.eigenvalues[: count + 1]))


def boundary_exponent(spec: Spectrum, level: int, wall: float, fit_window: int = 8) -> float:
    """Slope of log|psi| against log(distance to wall) near ``wall``.

    Uses ``fit_window`` nodes next to the wall, skipping the nearest one, whose
    relative stencil error is largest.
    """
    if spec.eigenvectors is None:
        raise ValueError("spectrum carries no eigenvectors")
    if fit_window < 4:
        raise ValueError("fit_window must be at least 4 nodes")
    g = spec.grid
    tol = 1e-9 * max(1.0, abs(g.x_min), abs(g.x_max))
    idx = np.arange(1, fit_window + 1)
    if abs(wall - g.x_min) <= tol:
        pass
    elif abs(wall - g.x_max) <= tol:
        idx = g.n - 1 - idx
    else:
        raise DomainError(f"wall {wall} is not an end of the grid ({g.x_min}, {g.x_max})")
    if idx.max() >= g.n or idx.min() < 0:
        raise ValueError("fit window longer than the grid")
    psi = np.abs(spec.eigenvectors[idx, level])
    if np.any(psi <= 1e-14):
        raise ValueError("fit window reaches the underflow region (|psi| <= 1e-14)")
    d = np.abs(g.nodes[idx] - wall)
    return float(np.polyfit(np.log(d), np.log(psi), 1)[0])


def model_grid(model: ModelSpec, n: int, levels: int, x_max: float | None = None,
               side: str = "right") -> Grid1D:
    """Grid for the lowest ``levels`` states of ``model``.

    Unbounded directions are cut at :func:`truncation_radius` of the highest
    wanted level, estimated with a coarse pre-solve and enlarged until stable.
    """
    dom = model.domain

    def pick(g):
        if isinstance(g, Grid1D):
            return g
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        return g.right if side == "right" else g.left

    if dom.is_bounded or x_max is not None:
        return pick(build_grid(dom, n, x_max))

    walls = dom.walls
    ceiling = model.hbar * model.omega * (2 * levels + 2)
    floor = (max(walls) if walls else 0.0) + 1.0
    X = max(truncation_radius(model, ceiling), floor)
    for _ in range(8):
        g = pick(build_grid(dom, max(400, min(n, 1200)), X))
        top = eigen_bisection(assemble(model, g), levels, vectors=False).eigenvalues[-1]
        X_new = max(truncation_radius(model, max(top, 1e-300)), floor)
        if X_new <= X:
            break
        X = 1.1 * X_new
    return pick(build_grid(dom, n, X))


def model_spectrum(model: ModelSpec, n: int, levels: int, *, x_max: float | None = None,
                   extrapolate: bool = True, side: str = "right") -> Spectrum:
    """Lowest ``levels`` of ``model`` by bisection, Richardson-extrapolated
    over (n, 2n+1) when ``extrapolate``; eigenvectors come from the finer grid."""
    grid = model_grid(model, n, levels, x_max, side)
    spec = eigen_bisection(assemble(model, grid), levels)
    if not extrapolate:
        return spec
    fine = eigen_bisection(assemble(model, grid.refine()), levels)
    vals = np.array(richardson(spec, fine, levels))
    return replace(fine, eigenvalues=vals, extrapolated=True)
