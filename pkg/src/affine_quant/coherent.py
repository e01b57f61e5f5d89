"""
Canonical and affine coherent states on a grid, their overlaps, and the
Fubini-Study geometry of the label space.

Canonical states are Gaussians displaced in position and boosted in momentum,

    psi_{p,q}(x) = exp(i p x / hbar) psi_0(x - q),
    psi_0(x) = (omega / pi hbar)^(1/4) exp(-omega x^2 / 2 hbar).

Affine states are dilated rather than shifted,

    psi_{p;q}(x) = exp(i p x / hbar) q^(-1/2) phi(x / q),
    phi(y) = N y^(beta - 1/2) exp(-beta y),

where phi is the normalizable solution of [(Q - 1) + i D / (beta hbar)] phi = 0
with D = -i hbar (x d/dx + 1/2). It gives <Q> = 1, <D> = 0 and Var(Q) = 1/(2 beta).

The metric is read off the overlap: 1 - |<psi(z)|psi(z + dz)>|^2 is, to second
order, half of dsigma^2 / hbar, so central differences of it give the metric
and any label-dependent phase drops out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .domain_grid import Grid1D
from .errors import ConvergenceError, DomainError
from .operators import dilation_matrix, momentum_matrix


@dataclass(frozen=True)
class Canonical:
    """Gaussian family with frequency ``omega``; reference label (0, 0)."""

    omega: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    name = "canonical"
    reference = (0.0, 0.0)

    def compose(self, p0, q0, p, q):
        return p0 + p, q0 + q

    def wavefunction(self, x, p, q, hbar):
        a = self.omega / hbar
        logamp = 0.25 * math.log(a / math.pi) - 0.5 * a * (x - q) ** 2
        return np.exp(logamp + 1j * p * x / hbar)


@dataclass(frozen=True)
class Affine:
    """Dilation family with fiducial parameter ``beta``; reference label (0, 1).

    ``beta > 1/2`` keeps the fiducial bounded at the origin. Energy
    expectations of Hamiltonians with a 1/Q^2 term are finite only for beta > 1.
    """

    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0.5:
            raise ValueError(f"fiducial not admissible: need beta > 1/2, got {self.beta}")

    name = "affine"
    reference = (0.0, 1.0)

    def compose(self, p0, q0, p, q):
        # U(p;q) U(p0;q0) = U(p + p0/q; q q0) up to phase
        if q <= 0:
            raise DomainError(f"affine label q must be positive, got {q}")
        return p + p0 / q, q * q0

    def log_norm(self):
        b2 = 2.0 * self.beta
        return 0.5 * (b2 * math.log(b2) - gammaln(b2))

    def wavefunction(self, x, p, q, hbar):
        if q <= 0:
            raise DomainError(f"affine label q must be positive, got {q}")
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        pos = x > 0
        y = x[pos] / q
        beta = self.beta
        logamp = self.log_norm() - 0.5 * math.log(q) + (beta - 0.5) * np.log(y) - beta * y
        out[pos] = np.exp(logamp + 1j * p * x[pos] / hbar)
        return out


@dataclass(frozen=True, eq=False)
class CoherentState:
    scheme: Canonical | Affine
    p: float
    q: float
    samples: np.ndarray
    grid: Grid1D
    hbar: float = 1.0

    def norm(self) -> float:
        return math.sqrt(self.grid.h * np.vdot(self.samples, self.samples).real)


def _make(scheme, p, q, grid, hbar) -> CoherentState:
    if isinstance(scheme, Affine) and grid.x_min < 0:
        raise DomainError("affine states live on x > 0; grid starts below zero")
    psi = scheme.wavefunction(grid.nodes, p, q, hbar)
    nrm = math.sqrt(grid.h * np.vdot(psi, psi).real)
    if nrm == 0 or not math.isfinite(nrm):
        raise DomainError(f"state at ({p}, {q}) has no weight on the grid")
    return CoherentState(scheme, float(p), float(q), psi / nrm, grid, hbar)


def fiducial(scheme, grid: Grid1D, hbar: float = 1.0) -> CoherentState:
    """Fiducial vector: canonical at (0, 0), affine at (0, 1)."""
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    p, q = scheme.reference
    return _make(scheme, p, q, grid, hbar)


def displace(state: CoherentState, p: float, q: float) -> CoherentState:
    """Apply U(p, q) (canonical) or U(p; q) (affine) to ``state``.

    Canonical: exp(i p Q / hbar) exp(-i q P / hbar). Affine:
    exp(i p Q / hbar) exp(-i ln(q) D / hbar). Labels compose exactly; the state
    is re-sampled from the closed form and renormalized on the grid.
    """
    p2, q2 = state.scheme.compose(state.p, state.q, p, q)
    return _make(state.scheme, p2, q2, state.grid, state.hbar)


def coherent_state(scheme, grid: Grid1D, p: float, q: float, hbar: float = 1.0) -> CoherentState:
    return displace(fiducial(scheme, grid, hbar), p, q)


def overlap(a: CoherentState, b: CoherentState) -> complex:
    """h * sum conj(a) b."""
    if a.grid != b.grid:
        raise ValueError("states live on different grids")
    return complex(a.grid.h * np.vdot(a.samples, b.samples))


def expect_position(state: CoherentState) -> float:
    return float(state.grid.h * np.sum(state.grid.nodes * np.abs(state.samples) ** 2))


def expect_momentum(state: CoherentState, order: int = 6) -> float:
    P = momentum_matrix(state.grid, state.hbar, order)
    return float((state.grid.h * np.vdot(state.samples, P @ state.samples)).real)


def expect_dilation(state: CoherentState, order: int = 6) -> float:
    D = dilation_matrix(state.grid, state.hbar, order)
    return float((state.grid.h * np.vdot(state.samples, D @ state.samples)).real)


def position_spread(state: CoherentState) -> float:
    w = state.grid.h * np.abs(state.samples) ** 2
    x = state.grid.nodes
    m = np.sum(w * x)
    return float(math.sqrt(max(np.sum(w * (x - m) ** 2), 0.0)))


def coherent_grid(scheme, hbar: float, qs, ps=(0.0,), resolution: int = 80) -> Grid1D:
    """Grid wide enough for every label in ``qs`` and fine enough for
    ``resolution`` points per position spread and per momentum wavelength."""
    qs = np.atleast_1d(np.asarray(qs, dtype=float))
    pmax = float(np.max(np.abs(ps))) if len(ps) else 0.0
    if isinstance(scheme, Affine):
        if np.any(qs <= 0):
            raise DomainError("affine labels need q > 0")
        lo = 0.0
        hi = float(qs.max()) * (1.0 + 20.0 / math.sqrt(scheme.beta))
        width = float(qs.min()) / math.sqrt(2.0 * scheme.beta)
    else:
        sig = math.sqrt(hbar / (2.0 * scheme.omega))
        lo = float(qs.min()) - 14.0 * sig
        hi = float(qs.max()) + 14.0 * sig
        width = sig
    if pmax > 0:
        width = min(width, 2.0 * math.pi * hbar / pmax)
    h = width / resolution
    return Grid1D(lo, hi, max(int(math.ceil((hi - lo) / h)), 200))


@dataclass(frozen=True)
class MetricTensor2:
    g_pp: float
    g_pq: float
    g_qq: float
    p: float = 0.0
    q: float = 0.0

    @property
    def det(self) -> float:
        return self.g_pp * self.g_qq - self.g_pq**2

    @property
    def is_positive(self) -> bool:
        return self.g_pp > 0 and self.g_qq > 0 and self.det > 0

    def as_tuple(self):
        return (self.g_pp, self.g_pq, self.g_qq)


def _infidelity(a: np.ndarray, b: np.ndarray) -> float:
    ab = np.vdot(a, b)
    return 1.0 - (ab.real**2 + ab.imag**2) / (np.vdot(a, a).real * np.vdot(b, b).real)


def fubini_study_metric(family: Callable, p: float, q: float, step_p: float, step_q: float,
                        hbar: float) -> np.ndarray:
    """(g_pp, g_pq, g_qq) from central differences of 1 - |<psi(p,q)|psi(p+dp,q+dq)>|^2.

    ``family(p, q)`` returns grid samples (any phase, any normalization). Two
    step sizes are combined by Richardson extrapolation, leaving O(step^4).
    """
    base = family(p, q)

    def f(dp, dq):
        return _infidelity(base, family(p + dp, q + dq))

    def once(a, c):
        fpp = (f(a, 0.0) + f(-a, 0.0)) / a**2
        fqq = (f(0.0, c) + f(0.0, -c)) / c**2
        fpq = (f(a, c) - f(a, -c) - f(-a, c) + f(-a, -c)) / (4.0 * a * c)
        # f ~ bracket form, Hessian = 2 * bracket, metric = 2 hbar * bracket
        return hbar * np.array([fpp, fpq, fqq])

    g1 = once(step_p, step_q)
    g2 = once(0.5 * step_p, 0.5 * step_q)
    return (4.0 * g2 - g1) / 3.0


def _natural_steps(state: CoherentState) -> tuple[float, float]:
    sig = position_spread(state)
    return state.hbar / sig, sig


def _family(fid: CoherentState):
    return lambda p, q: displace(fid, p, q).samples


DELTA_LADDER = (1e-2, 1e-3, 1e-4)


def fs_metric(scheme, fid: CoherentState, p: float, q: float,
              delta: float | None = None) -> MetricTensor2:
    """Fubini-Study metric 2 hbar [||d psi||^2 - |<psi|d psi>|^2] at (p, q).

    ``delta`` is the finite-difference step in units of the state's natural
    scales (hbar / sigma_x for p, sigma_x for q). Without it, the ladder
    1e-2, 1e-3, 1e-4 is run and the most self-consistent adjacent pair wins.
    """
    if fid.scheme != scheme:
        raise ValueError("fiducial belongs to a different scheme")
    if isinstance(scheme, Affine) and q <= 0:
        raise DomainError("affine metric needs q > 0")
    sp, sq = _natural_steps(displace(fid, p, q))
    fam = _family(fid)
    if delta is not None:
        if isinstance(scheme, Affine) and q - delta * sq <= 0:
            raise ValueError("delta too large: step crosses q = 0")
        g = fubini_study_metric(fam, p, q, delta * sp, delta * sq, fid.hbar)
        m = MetricTensor2(*g, p=p, q=q)
        if not m.is_positive:
            raise ValueError(f"metric not positive definite at delta={delta}; step too large or too small")
        return m

    ests = [fubini_study_metric(fam, p, q, d * sp, d * sq, fid.hbar) for d in DELTA_LADDER]
    diffs = []
    for a, b in zip(ests, ests[1:]):
        scale = max(abs(a[0]), abs(a[2]))
        diffs.append(np.max(np.abs(a - b)) / scale)
    best = int(np.argmin(diffs))
    if diffs[best] > 1e-5:
        raise ConvergenceError(f"delta ladder inconsistent (best relative gap {diffs[best]:.2e})", index=best)
    m = MetricTensor2(*ests[best + 1], p=p, q=q)
    if not m.is_positive:
        raise ConvergenceError("metric lost positivity on the delta ladder")
    return m


def _brioschi(E, F, G, Eu, Ev, Fu, Fv, Gu, Gv, Evv, Guu, Fuv) -> float:
    """Gaussian curvature of E du^2 + 2F du dv + G dv^2."""
    A = np.array([
        [-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev],
        [Fv - 0.5 * Gu, E, F],
        [0.5 * Gv, F, G],
    ])
    B = np.array([
        [0.0, 0.5 * Ev, 0.5 * Gu],
        [0.5 * Ev, E, F],
        [0.5 * Gu, F, G],
    ])
    return float((np.linalg.det(A) - np.linalg.det(B)) / (E * G - F * F) ** 2)


def scalar_curvature(scheme, fid: CoherentState, p: float, q: float,
                     delta: float = 0.05, metric_delta: float = 1e-3) -> float:
    """Scalar curvature R = 2K of the Fubini-Study metric at (p, q).

    The metric is sampled on a 3x3 stencil of spacing ``delta`` (natural units),
    the Brioschi formula gives K, and the stencils at delta and delta/2 are
    Richardson-combined. Canonical families give 0, affine ones -2/(beta hbar).
    """
    if fid.scheme != scheme:
        raise ValueError("fiducial belongs to a different scheme")
    fam = _family(fid)
    hbar = fid.hbar

    def metric_at(pp, qq):
        sp, sq = _natural_steps(displace(fid, pp, qq))
        return fubini_study_metric(fam, pp, qq, metric_delta * sp, metric_delta * sq, hbar)

    sp0, sq0 = _natural_steps(displace(fid, p, q))

    def once(step):
        u, v = step * sp0, step * sq0
        if isinstance(scheme, Affine) and q - v <= 0:
            raise ValueError("delta too large: stencil crosses q = 0")
        M = {(i, j): metric_at(p + i * u, q + j * v) for i in (-1, 0, 1) for j in (-1, 0, 1)}

        def comp(k):
            c = {key: val[k] for key, val in M.items()}
            du = (c[1, 0] - c[-1, 0]) / (2 * u)
            dv = (c[0, 1] - c[0, -1]) / (2 * v)
            duu = (c[1, 0] - 2 * c[0, 0] + c[-1, 0]) / u**2
            dvv = (c[0, 1] - 2 * c[0, 0] + c[0, -1]) / v**2
            duv = (c[1, 1] - c[1, -1] - c[-1, 1] + c[-1, -1]) / (4 * u * v)
            return c[0, 0], du, dv, duu, dvv, duv

        E, Eu, Ev, _, Evv, _ = comp(0)
        F, Fu, Fv, _, _, Fuv = comp(1)
        G, Gu, Gv, Guu, _, _ = comp(2)
        return 2.0 * _brioschi(E, F, G, Eu, Ev, Fu, Fv, Gu, Gv, Evv, Guu, Fuv)

    r1 = once(delta)
    r2 = once(0.5 * delta)
    if abs(r1 - r2) > 0.05 * max(1.0, abs(r2)):
        raise ConvergenceError(f"curvature stencil not converged: {r1:.6g} vs {r2:.6g}")
    return (4.0 * r2 - r1) / 3.0
