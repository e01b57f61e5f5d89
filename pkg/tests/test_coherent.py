import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from affine_quant.coherent import (Affine, Canonical, coherent_grid, coherent_state, displace,
                                   expect_dilation, expect_momentum, expect_position, fiducial,
                                   fs_metric, fubini_study_metric, overlap, position_spread,
                                   scalar_curvature)
from affine_quant.domain_grid import Grid1D
from affine_quant.errors import DomainError


def gamma_moment(beta, k):
    """<x^k> for |phi|^2 = Gamma(shape 2 beta, rate 2 beta)."""
    a, c = 2 * beta, 2 * beta
    return math.exp(gammaln(a + k) - gammaln(a) - k * math.log(c))


def affine_overlap(beta, hbar, p1, q1, p2, q2):
    """<p1;q1|p2;q2> from the Gamma integral."""
    z = beta * (1 / q1 + 1 / q2) - 1j * (p2 - p1) / hbar
    return (2 * beta) ** (2 * beta) * (q1 * q2) ** (-beta) * z ** (-2 * beta)


def test_affine_fiducial_moments():
    sch = Affine(1.0)
    # the density starts linearly at 0, so the h-sum is off by h^2 / 3; resolve finely
    g = coherent_grid(sch, 1.0, [1.0], resolution=600)
    fid = fiducial(sch, g, 1.0)
    assert abs(fid.norm() - 1) < 1e-12
    assert abs(expect_position(fid) - gamma_moment(1.0, 1)) < 1e-6
    assert gamma_moment(1.0, 1) == pytest.approx(1.0, abs=1e-14)
    assert abs(expect_dilation(fid)) < 1e-8


@pytest.mark.parametrize("beta", [0.75, 1.5, 3.0, 8.0])
def test_affine_fiducial_spread(beta):
    sch = Affine(beta)
    g = coherent_grid(sch, 1.0, [1.0], resolution=200)
    fid = fiducial(sch, g)
    var = gamma_moment(beta, 2) - gamma_moment(beta, 1) ** 2
    assert var == pytest.approx(1 / (2 * beta), rel=1e-12)
    assert position_spread(fid) ** 2 == pytest.approx(var, rel=1e-3)
    assert abs(expect_dilation(fid)) < 1e-8


def test_affine_fiducial_solves_condition():
    # [(Q - 1) + i D / (beta hbar)] phi = 0 with D = -i hbar (x d/dx + 1/2)
    beta, hbar = 2.0, 0.5
    sch = Affine(beta)
    g = coherent_grid(sch, hbar, [1.0], resolution=400)
    fid = fiducial(sch, g, hbar)
    x = g.nodes
    Dphi = -1j * hbar * (x * np.gradient(fid.samples, x) + 0.5 * fid.samples)
    lhs = (x - 1) * fid.samples + 1j * Dphi / (beta * hbar)
    interior = (x > 0.05) & (x < 8)
    assert np.max(np.abs(lhs[interior])) < 1e-3 * np.max(np.abs(fid.samples))


def test_canonical_fiducial_centered():
    sch = Canonical(1.0)
    g = coherent_grid(sch, 1.0, [0.0])
    fid = fiducial(sch, g)
    assert abs(expect_position(fid)) < 1e-8
    assert abs(expect_momentum(fid)) < 1e-8
    assert position_spread(fid) ** 2 == pytest.approx(0.5, rel=1e-6)


def test_fiducial_admissibility():
    with pytest.raises(ValueError, match="fiducial not admissible"):
        Affine(0.5)
    with pytest.raises(ValueError):
        Canonical(0.0)
    with pytest.raises(DomainError):
        fiducial(Affine(1.0), Grid1D(-1.0, 5.0, 100))


def test_identity_displacement():
    sch = Affine(1.5)
    g = coherent_grid(sch, 1.0, [1.0])
    fid = fiducial(sch, g)
    same = displace(fid, 0.0, 1.0)
    assert np.array_equal(same.samples, fid.samples)
    with pytest.raises(DomainError):
        displace(fid, 0.0, 0.0)
    with pytest.raises(DomainError):
        displace(fid, 1.0, -2.0)


def test_affine_labels_compose():
    sch = Affine(2.0)
    g = coherent_grid(sch, 1.0, [0.5, 3.0], [2.0])
    fid = fiducial(sch, g)
    a = displace(displace(fid, 0.4, 1.5), 1.2, 2.0)
    # U(p;q) U(p0;q0) = U(p + p0/q; q q0)
    assert (a.p, a.q) == pytest.approx((1.2 + 0.4 / 2.0, 3.0))


def test_overlap_self_and_bounds():
    sch = Canonical(1.3)
    g = coherent_grid(sch, 1.0, [-2, 2], [2.0])
    s = coherent_state(sch, g, 1.0, 0.5)
    assert overlap(s, s) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        overlap(s, coherent_state(sch, Grid1D(-5, 5, 301), 0, 0))


@pytest.mark.parametrize("q", [0.3, 1.0, 2.5])
def test_canonical_overlap_oracle(q):
    omega, hbar = 1.0, 1.0
    sch = Canonical(omega)
    g = coherent_grid(sch, hbar, [0.0, q])
    a = coherent_state(sch, g, 0.0, 0.0, hbar)
    b = coherent_state(sch, g, 0.0, q, hbar)
    assert abs(overlap(a, b)) == pytest.approx(math.exp(-omega * q * q / (4 * hbar)), rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(p1=st.floats(-2, 2), q1=st.floats(0.5, 2.5), p2=st.floats(-2, 2), q2=st.floats(0.5, 2.5))
def test_affine_overlap_oracle(p1, q1, p2, q2):
    beta, hbar = 2.0, 1.0
    sch = Affine(beta)
    g = coherent_grid(sch, hbar, [q1, q2], [p1, p2], resolution=120)
    a = coherent_state(sch, g, p1, q1, hbar)
    b = coherent_state(sch, g, p2, q2, hbar)
    ov = overlap(a, b)
    ref = affine_overlap(beta, hbar, p1, q1, p2, q2)
    assert abs(abs(ov) - abs(ref)) < 1e-6
    assert 0 < abs(ov) <= 1 + 1e-8


def test_metric_canonical():
    sch = Canonical(2.0)
    g = coherent_grid(sch, 1.0, [-1, 2], [1.5])
    fid = fiducial(sch, g)
    for p, q in [(0.0, 0.0), (1.5, -0.7), (-0.4, 1.9)]:
        m = fs_metric(sch, fid, p, q)
        assert m.g_pp == pytest.approx(0.5, rel=1e-6)
        assert m.g_qq == pytest.approx(2.0, rel=1e-6)
        assert abs(m.g_pq) < 1e-6
        assert m.is_positive


@pytest.mark.parametrize("p,q", [(0.0, 1.0), (0.0, 2.0), (1.3, 0.6)])
def test_metric_affine(p, q):
    beta, hbar = 1.0, 1.0
    sch = Affine(beta)
    g = coherent_grid(sch, hbar, [q / 2, q * 2], [p])
    fid = fiducial(sch, g, hbar)
    m = fs_metric(sch, fid, p, q)
    assert m.g_pp == pytest.approx(q * q / (beta * hbar), rel=1e-4)
    assert m.g_qq == pytest.approx(beta * hbar / (q * q), rel=1e-4)
    assert abs(m.g_pq) < 1e-4 * math.sqrt(m.g_pp * m.g_qq)


def test_metric_fixed_delta_and_errors():
    sch = Affine(2.0)
    g = coherent_grid(sch, 0.5, [0.5, 2.0])
    fid = fiducial(sch, g, 0.5)
    m = fs_metric(sch, fid, 0.0, 1.0, delta=1e-3)
    assert m.g_pp == pytest.approx(1.0, rel=1e-5)
    with pytest.raises(ValueError, match="delta too large"):
        fs_metric(sch, fid, 0.0, 1.0, delta=5.0)
    with pytest.raises(DomainError):
        fs_metric(sch, fid, 0.0, -1.0)
    with pytest.raises(ValueError):
        fs_metric(Affine(3.0), fid, 0.0, 1.0)


def test_metric_phase_robust():
    sch = Affine(1.5)
    hbar = 1.0
    g = coherent_grid(sch, hbar, [0.5, 2.0], [1.0])
    fid = fiducial(sch, g, hbar)
    plain = lambda p, q: displace(fid, p, q).samples
    twisted = lambda p, q: cmath.exp(1j * (3 * p * q + math.sin(q) - p * p)) * plain(p, q)
    for p, q in [(0.0, 1.0), (0.7, 1.4)]:
        a = fubini_study_metric(plain, p, q, 1e-3, 1e-3, hbar)
        b = fubini_study_metric(twisted, p, q, 1e-3, 1e-3, hbar)
        assert np.allclose(a, b, rtol=1e-6, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), p=st.floats(-3, 3), q=st.floats(0.4, 3.0))
def test_affine_covariance(a, b, p, q):
    sch = Affine(2.0)
    g = coherent_grid(sch, 1.0, [q], [p])
    s = coherent_state(sch, g, p, q)
    val = a * expect_dilation(s) + b * expect_position(s)
    assert val == pytest.approx(a * p * q + b * q, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), p=st.floats(-3, 3), q=st.floats(-3, 3))
def test_canonical_covariance(a, b, p, q):
    sch = Canonical(1.0)
    g = coherent_grid(sch, 1.0, [q], [p])
    s = coherent_state(sch, g, p, q)
    val = a * expect_momentum(s) + b * expect_position(s)
    assert val == pytest.approx(a * p + b * q, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(beta=st.floats(0.6, 10), p=st.floats(-5, 5), q=st.floats(0.2, 5), hbar=st.floats(0.2, 2))
def test_states_normalized(beta, p, q, hbar):
    sch = Affine(beta)
    g = coherent_grid(sch, hbar, [q], [p], resolution=40)
    s = coherent_state(sch, g, p, q, hbar)
    assert abs(s.norm() - 1) < 1e-8


def test_curvature_canonical_flat():
    sch = Canonical(1.0)
    g = coherent_grid(sch, 1.0, [-1.0, 1.0], [1.0])
    fid = fiducial(sch, g)
    assert abs(scalar_curvature(sch, fid, 0.3, 0.2)) < 1e-3


@pytest.mark.parametrize("beta,hbar,p,q", [(1.0, 1.0, 0.0, 1.0), (2.0, 1.0, 3.0, 0.5),
                                           (2.0, 1.0, 0.0, 2.0), (1.5, 0.5, -1.0, 1.2)])
def test_curvature_affine(beta, hbar, p, q):
    sch = Affine(beta)
    g = coherent_grid(sch, hbar, [0.8 * q, 1.25 * q], [p])
    fid = fiducial(sch, g, hbar)
    assert scalar_curvature(sch, fid, p, q) == pytest.approx(-2 / (beta * hbar), rel=1e-2)


def test_curvature_stencil_too_wide():
    sch = Affine(1.0)
    g = coherent_grid(sch, 1.0, [1.0])
    fid = fiducial(sch, g)
    with pytest.raises(ValueError):
        scalar_curvature(sch, fid, 0.0, 1.0, delta=2.0)
