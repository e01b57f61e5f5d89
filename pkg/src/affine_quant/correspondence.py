"""
Upper symbols H(p, q) = <p,q| H |p,q> of tridiagonal Hamiltonians in coherent
states, and their approach to the classical Hamiltonian as hbar -> 0.

For the affine family the state width in Q is q / sqrt(2 beta), so it only
shrinks with hbar if beta grows like 1/hbar. The scaling study therefore keeps
the product beta * hbar fixed; at hbar = 1 it equals the supplied beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherent import Affine, Canonical, CoherentState, coherent_grid, coherent_state
from .domain_grid import DomainKind, Grid1D
from .errors import DomainError
from .operators import ModelSpec, TridiagonalOperator, assemble

#: hbar ladder used when none is given; spans more than one decade.
DEFAULT_HBARS = (1.0, 0.5, 0.25, 0.125, 0.0625)
HERMITIAN_TOL = 1e-10
LEAK_TOL = 1e-6


def expectation(state: CoherentState, T) -> float:
    """h * <psi|T|psi> for a tridiagonal, sparse or dense operator on the state's grid."""
    psi = state.samples
    if isinstance(T, TridiagonalOperator):
        if T.grid != state.grid:
            raise ValueError("operator and state live on different grids")
        Tpsi = T.matvec(psi)
    else:
        if T.shape != (psi.size, psi.size):
            raise ValueError(f"operator shape {T.shape} does not match grid size {psi.size}")
        Tpsi = T @ psi
    val = state.grid.h * np.vdot(psi, Tpsi)
    scale = max(abs(val), state.grid.h * np.linalg.norm(psi) * np.linalg.norm(Tpsi))
    if abs(val.imag) > HERMITIAN_TOL * max(scale, 1e-300):
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}: operator not Hermitian")
    return float(val.real)


def state_grid(model: ModelSpec, scheme, qs, ps=(0.0,), resolution: int = 80) -> Grid1D:
    """Coherent-state grid clipped to the walls of ``model.domain``."""
    dom = model.domain
    if dom.is_punctured:
        raise DomainError("coherent-state expectations on punctured domains are not supported")
    base = coherent_grid(scheme, model.hbar, qs, ps, resolution)
    lo, hi = base.x_min, base.x_max
    if dom.kind is DomainKind.HALF_LINE:
        if isinstance(scheme, Affine) and dom.b != 0:
            raise DomainError("affine states need the half-line q > 0 (b = 0)")
        lo = -dom.b
        hi = max(hi, lo + 1.0)
    elif dom.kind is DomainKind.INTERVAL:
        if isinstance(scheme, Affine):
            raise DomainError("affine states are not supported on the interval")
        lo, hi = -dom.b, dom.b
    elif isinstance(scheme, Affine):
        raise DomainError("affine states need the half-line q > 0")
    n = max(int(math.ceil((hi - lo) / base.h)) - 1, 200)
    return Grid1D(lo, hi, n)


def _check_leak(state: CoherentState, walled_left: bool, walled_right: bool) -> None:
    a = np.abs(state.samples)
    top = a.max()
    for flag, edge in ((walled_left, a[0]), (walled_right, a[-1])):
        if flag and edge > LEAK_TOL * top:
            raise DomainError(
                f"coherent state at ({state.p}, {state.q}) leaks through the wall "
                f"(edge amplitude {edge / top:.2e} of peak)"
            )


def upper_symbol(model: ModelSpec, scheme, p: float, q: float, resolution: int = 80) -> float:
    """<p,q| H |p,q> for the discretized Hamiltonian of ``model``."""
    if isinstance(scheme, Affine) and scheme.beta <= 1.0:
        # |phi'|^2 and 1/x^2 both weigh x^(2 beta - 3) near the origin
        raise DomainError(
            f"energy expectation diverges for beta <= 1 (got {scheme.beta})"
        )
    grid = state_grid(model, scheme, [q], [p], resolution)
    st = coherent_state(scheme, grid, p, q, model.hbar)
    if isinstance(scheme, Canonical):
        walled = model.domain.kind is not DomainKind.FULL_LINE
        _check_leak(st, walled, model.domain.is_bounded)
    return expectation(st, assemble(model, grid))


@dataclass(frozen=True, eq=False)
class CorrespondenceReport:
    model: ModelSpec
    scheme: object
    points: list
    hbars: list
    values: np.ndarray
    classical: np.ndarray
    fitted_order: np.ndarray
    betas: list | None = None

    def __post_init__(self):
        h = np.asarray(self.hbars, dtype=float)
        if np.any(h <= 0) or np.any(np.diff(h) >= 0):
            raise ValueError("hbars must be positive and strictly decreasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite expectation value")

    @property
    def differences(self) -> np.ndarray:
        return np.abs(self.values - self.classical[:, None])

    @property
    def monotone(self) -> np.ndarray:
        """Per point: |H_hbar - H_cl| strictly decreases along the ladder."""
        return np.all(np.diff(self.differences, axis=1) < 0, axis=1)


def scheme_at(scheme, hbar: float):
    """Family used at ``hbar``: canonical unchanged, affine with beta * hbar fixed."""
    if isinstance(scheme, Affine):
        return Affine(scheme.beta / hbar)
    return scheme


def hbar_scaling(model: ModelSpec, scheme, points, hbars=DEFAULT_HBARS,
                 resolution: int = 80) -> CorrespondenceReport:
    """Fit the decay order of H_hbar(p, q) - H_cl(p, q) over a descending hbar ladder.

    The classical reference is p^2/2m + V(q) with no hbar term.
    """
    hbars = [float(h) for h in hbars]
    if len(hbars) < 3:
        raise ValueError("need at least 3 hbar values")
    if any(h <= 0 for h in hbars) or any(b >= a for a, b in zip(hbars, hbars[1:])):
        raise ValueError("hbars must be positive and strictly decreasing")
    if hbars[0] / hbars[-1] < 10.0 * (1 - 1e-12):
        raise ValueError("hbar ladder must span at least one decade")
    points = [(float(p), float(q)) for p, q in points]
    if not points:
        raise ValueError("no phase-space points given")
    if isinstance(scheme, Affine) and any(q <= 0 for _, q in points):
        raise DomainError("affine points need q > 0")

    values = np.empty((len(points), len(hbars)))
    for j, hb in enumerate(hbars):
        m = model.with_hbar(hb)
        sch = scheme_at(scheme, hb)
        for i, (p, q) in enumerate(points):
            values[i, j] = upper_symbol(m, sch, p, q, resolution)
    classical = np.array([float(model.classical_energy(p, np.array([q]))[0]) for p, q in points])
    diffs = np.abs(values - classical[:, None])
    if np.any(diffs <= 0) or not np.all(np.isfinite(diffs)):
        raise ValueError("degenerate fit: zero or non-finite remainder")
    logh = np.log(hbars)
    orders = np.array([np.polyfit(logh, np.log(d), 1)[0] for d in diffs])
    betas = [scheme_at(scheme, hb).beta for hb in hbars] if isinstance(scheme, Affine) else None
    return CorrespondenceReport(model, scheme, points, hbars, values, classical, orders, betas)

