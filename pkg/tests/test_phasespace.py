import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from epr_teleport.physconst import HBAR
from epr_teleport.phasespace import (
    BinSpec,
    CatState,
    DensityGrid,
    GaussianState,
    GridResolutionError,
    GridSpec,
    PhaseMoments,
    cat_momentum_density,
    cat_position_density,
    cat_wavefunction,
    convolve_density,
    fringe_contrast,
    fringe_visibility,
    gaussian_density,
    gaussian_fidelity,
    histogram,
    mus_wavepacket,
    overlap_fidelity,
    pure_state_fidelity,
    sample_gaussian,
    tv_distance,
)

SIG = 25e-9  # peak width used for two-peak tests


def _cat_psi_oracle(x, a, s):
    # same state written via cosh so the check does not reuse the sum form
    c = a * abs(x) / (4 * s * s)
    return math.exp(-(x * x + a * a / 4) / (4 * s * s) + c) * (1 + math.exp(-2 * c))


def _oracle_position_density(a, s):
    r = a / 2 + 15 * s
    norm, _ = integrate.quad(lambda x: _cat_psi_oracle(x, a, s) ** 2, -r, r, points=[-a / 2, a / 2])
    return lambda x: _cat_psi_oracle(x, a, s) ** 2 / norm


# -- states and sampling ------------------------------------------------------

def test_mus_wavepacket_example():
    st_ = mus_wavepacket(1.5e-7)
    assert st_.sigma_p == pytest.approx(HBAR / 3e-7, rel=1e-15)
    assert st_.sigma_p == pytest.approx(3.52e-28, rel=2e-3)
    assert st_.mean_x == st_.mean_p == st_.corr == 0
    assert st_.is_mus


@given(st.floats(1e-12, 1e-3))
def test_mus_product(sx):
    s = mus_wavepacket(sx)
    assert s.sigma_x * s.sigma_p == pytest.approx(HBAR / 2, rel=1e-14)


@pytest.mark.parametrize("bad", [0.0, -1e-9])
def test_mus_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        mus_wavepacket(bad)


def test_gaussian_state_invariants():
    with pytest.raises(ValueError):
        GaussianState(0, 0, 1e-9, 1e-27, corr=1.0)
    with pytest.raises(ValueError):
        GaussianState(0, 0, 0.0, 1e-27)
    mixed = GaussianState(0, 0, 1e-7, HBAR / 1e-7)
    assert mixed.is_physical and not mixed.is_pure


def test_sample_variance_band(rng):
    s = mus_wavepacket(1.5e-7)
    pts = sample_gaussian(s, rng, 50_000)
    assert 0.97 <= np.var(pts.x, ddof=1) / s.sigma_x**2 <= 1.03
    assert 0.97 <= np.var(pts.p, ddof=1) / s.sigma_p**2 <= 1.03


def test_sample_deterministic():
    s = mus_wavepacket(1e-7)
    a = sample_gaussian(s, np.random.default_rng(7), 1000)
    b = sample_gaussian(s, np.random.default_rng(7), 1000)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.p, b.p)


def test_sample_correlation(rng):
    s = GaussianState(0.0, 0.0, 1e-7, 1e-27, corr=0.9)
    pts = sample_gaussian(s, rng, 100_000)
    assert np.corrcoef(pts.x, pts.p)[0, 1] == pytest.approx(0.9, abs=0.01)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), mx=st.floats(-1e-6, 1e-6), n=st.integers(1000, 5000))
def test_sample_mean_converges(seed, mx, n):
    s = mus_wavepacket(2e-8, mean_x=mx)
    pts = sample_gaussian(s, np.random.default_rng(seed), n)
    z = abs(pts.x.mean() - mx) / (s.sigma_x / math.sqrt(n))
    if z > 3:
        warnings.warn(f"sample mean {z:.2f} sigma from the state mean")
    assert z < 4


def test_sample_rejects_empty(rng):
    with pytest.raises(ValueError):
        sample_gaussian(mus_wavepacket(1e-7), rng, 0)


# -- two-peak densities -------------------------------------------------------

def test_cat_position_equal_masses():
    cat = CatState(40 * SIG, SIG)
    d = cat_position_density(cat, GridSpec(-30 * SIG, 30 * SIG, 6001))
    left = d.axis <= 0
    m_left = np.trapezoid(d.values[left], d.axis[left])
    assert m_left == pytest.approx(0.5, abs=1e-6)
    assert d.integral() == pytest.approx(1.0, abs=1e-12)


def test_cat_position_zero_separation_is_gaussian():
    d = cat_position_density(CatState(0.0, SIG), GridSpec(-8 * SIG, 8 * SIG, 2001))
    assert np.allclose(d.values, gaussian_density(d.axis, 0.0, SIG), rtol=1e-9, atol=0)


def test_cat_position_against_quadrature():
    a = 6 * SIG
    oracle = _oracle_position_density(a, SIG)
    d = cat_position_density(CatState(a, SIG), GridSpec.symmetric(0.0, a / 2 + 8 * SIG, SIG / 50))
    ref = np.array([oracle(x) for x in d.axis])
    assert np.max(np.abs(d.values - ref)) <= 1e-6 * ref.max()
    ratio = d(a / 2) / d(0.0)
    assert ratio == pytest.approx(oracle(a / 2) / oracle(0.0), rel=1e-6)


def test_cat_position_requires_coverage():
    with pytest.raises(GridResolutionError):
        cat_position_density(CatState(6 * SIG, SIG), GridSpec(-4 * SIG, 4 * SIG, 101))


def _momentum_grid(cat, per_half_period=40, half_width=None):
    half_period = math.pi / cat.fringe_wavenumber
    step = half_period / per_half_period
    return GridSpec.symmetric(0.0, half_width or 7 * cat.momentum_sigma, step)


def test_cat_momentum_fringe_period():
    cat = CatState(12 * SIG, SIG)
    d = cat_momentum_density(cat, _momentum_grid(cat))
    v = d.values
    minima = d.axis[1:-1][(v[1:-1] < v[:-2]) & (v[1:-1] < v[2:]) & (np.abs(d.axis[1:-1]) < 3 * cat.momentum_sigma)]
    spacing = np.diff(minima)
    assert np.allclose(spacing, 2 * math.pi * HBAR / cat.separation, atol=d.step)


def test_cat_momentum_zero_separation():
    cat = CatState(0.0, SIG)
    g = GridSpec.symmetric(0.0, 7 * cat.momentum_sigma, cat.momentum_sigma / 50)
    d = cat_momentum_density(cat, g)
    assert np.allclose(d.values, gaussian_density(d.axis, 0.0, cat.momentum_sigma), rtol=1e-9)


def test_cat_momentum_visibility_ideal():
    cat = CatState(6 * SIG, SIG)
    d = cat_momentum_density(cat, _momentum_grid(cat))
    assert fringe_visibility(d, cat.fringe_wavenumber) == pytest.approx(1.0, abs=1e-6)


def test_cat_momentum_against_fourier_quadrature():
    a = 6 * SIG
    cat = CatState(a, SIG)
    d = cat_momentum_density(cat, _momentum_grid(cat))

    def phi(p):  # psi is even, so its transform is a cosine transform
        val, _ = integrate.quad(lambda x: _cat_psi_oracle(x, a, SIG) * math.cos(p * x / HBAR),
                                0, a / 2 + 12 * SIG, limit=200)
        return 2 * val

    mid = d.axis.size // 2
    idx = [mid + k for k in (0, 7, 23, 41, 66, 90)]
    ref = np.array([phi(d.axis[i]) ** 2 for i in idx])
    ours = d.values[idx]
    assert np.allclose(ours / ours[0], ref / ref[0], rtol=1e-6, atol=1e-9)


# -- smoothing ---------------------------------------------------------------

def _gauss_grid(s0, step_frac=0.02, reach=8):
    g = GridSpec.symmetric(0.0, reach * s0, step_frac * s0)
    axis = g.axis()
    return DensityGrid(axis, gaussian_density(axis, 0.0, s0))


def test_convolve_zero_sigma_identity():
    d = _gauss_grid(1.0)
    out = convolve_density(d, 0.0)
    assert np.array_equal(out.axis, d.axis) and np.array_equal(out.values, d.values)


def test_convolve_gaussian_width():
    s0, s = 1e-8, 2e-8
    d = _gauss_grid(s0)
    out = convolve_density(d, s)
    assert out.std() == pytest.approx(math.hypot(s0, s), rel=1e-4)
    assert out.integral() == pytest.approx(1.0, abs=1e-6)
    ref = gaussian_density(out.axis, 0.0, math.hypot(s0, s))
    assert np.max(np.abs(out.values - ref)) < 1e-4 * ref.max()


def test_convolve_rejects_coarse_grid():
    d = _gauss_grid(1.0, step_frac=0.5)
    with pytest.raises(GridResolutionError):
        convolve_density(d, 1.0)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(0.2, 1.5), b=st.floats(0.2, 1.5))
def test_convolve_composition(a, b):
    d = _gauss_grid(1.0, step_frac=0.05)
    twice = convolve_density(convolve_density(d, a), b)
    once = convolve_density(d, math.hypot(a, b))
    off = int(round((once.axis[0] - twice.axis[0]) / d.step))
    seg = twice.values[off : off + once.axis.size]
    assert np.max(np.abs(seg - once.values)) < 1e-4 * once.values.max()
    assert twice.integral() == pytest.approx(1.0, abs=1e-6)
    assert once.integral() == pytest.approx(1.0, abs=1e-6)


def test_cat_momentum_contrast_attenuation():
    cat = CatState(6 * SIG, SIG)
    dpT = 0.4 * cat.momentum_sigma
    g = _momentum_grid(cat, per_half_period=60)
    step = g.step
    d = cat_momentum_density(cat, GridSpec.symmetric(0.0, 7 * cat.momentum_sigma + 7 * dpT, step))
    out = convolve_density(d, dpT, extend=False)
    k = cat.fringe_wavenumber
    ratio = fringe_contrast(out, k) / fringe_contrast(d, k)
    expected = math.exp(-0.5 * (cat.separation * dpT / HBAR) ** 2)
    assert ratio == pytest.approx(expected, rel=0.02)


# -- fidelity ----------------------------------------------------------------

def _wigner_overlap(state, dxT, dpT, n=801):
    """2 pi hbar * integral of W_in * W_out on a grid in scaled units."""
    u = np.linspace(-10, 10, n)
    X, P = np.meshgrid(u * state.sigma_x, u * state.sigma_p, indexing="ij")
    w_in = (gaussian_density(X, 0, state.sigma_x) * gaussian_density(P, 0, state.sigma_p))
    w_out = (gaussian_density(X, 0, math.hypot(state.sigma_x, dxT))
             * gaussian_density(P, 0, math.hypot(state.sigma_p, dpT)))
    integrand = w_in * w_out
    val = np.trapezoid(np.trapezoid(integrand, P[0], axis=1), X[:, 0])
    return 2 * math.pi * HBAR * val


def _matched(product_over_hbar, sx=4e-8):
    s = mus_wavepacket(sx)
    k = math.sqrt(product_over_hbar * HBAR / (s.sigma_x * s.sigma_p))
    return s, k * s.sigma_x, k * s.sigma_p


def test_fidelity_perfect():
    assert gaussian_fidelity(mus_wavepacket(1e-7), 0, 0) == pytest.approx(1.0, rel=1e-14)


def test_fidelity_classical_bound():
    s, dx, dp = _matched(1.0)
    assert gaussian_fidelity(s, dx, dp) == pytest.approx(0.5, rel=1e-12)


def test_fidelity_008_and_wigner_oracle():
    s, dx, dp = _matched(0.08)
    f = gaussian_fidelity(s, dx, dp)
    assert f == pytest.approx(1 / 1.08, rel=1e-12)
    assert f == pytest.approx(0.926, abs=5e-4)
    assert _wigner_overlap(s, dx, dp) == pytest.approx(f, rel=1e-6)


def test_fidelity_rejects_non_mus():
    with pytest.raises(ValueError):
        gaussian_fidelity(GaussianState(0, 0, 1e-7, HBAR / 1e-7), 0, 0)


@settings(max_examples=50)
@given(dx=st.floats(0, 1e-7), dp=st.floats(0, 1e-26), bump=st.floats(1.01, 3.0))
def test_fidelity_monotone(dx, dp, bump):
    s = mus_wavepacket(3e-8)
    f = gaussian_fidelity(s, dx, dp)
    assert gaussian_fidelity(s, dx * bump + 1e-10, dp) < f
    assert gaussian_fidelity(s, dx, dp * bump + 1e-29) < f


@settings(max_examples=50)
@given(prod=st.floats(0.0, 20.0), sx=st.floats(1e-9, 1e-6))
def test_fidelity_matched_equals_fmax(prod, sx):
    s, dx, dp = _matched(prod, sx)
    assert gaussian_fidelity(s, dx, dp) == pytest.approx(1 / (1 + prod), rel=1e-12)


def test_overlap_fidelity_agrees_with_closed_form():
    s = mus_wavepacket(5e-8)
    dx, dp = 2e-8, 3e-28
    cov = s.covariance() + np.diag([dx**2, dp**2])
    assert overlap_fidelity(s, s.mean(), cov) == pytest.approx(gaussian_fidelity(s, dx, dp), rel=1e-12)


@pytest.mark.parametrize("dx,dp", [(0.0, 0.0), (1.5e-8, 5e-28), (6e-8, 1e-28), (0.0, 8e-28)])
def test_pure_state_fidelity_matches_gaussian(dx, dp):
    # a zero-separation cat is a MUS of width SIG
    cat = CatState(0.0, SIG)
    axis = GridSpec.symmetric(0.0, 10 * SIG, SIG / 10).axis()
    f = pure_state_fidelity(lambda x: cat_wavefunction(cat, x), axis, dx, dp)
    assert f == pytest.approx(gaussian_fidelity(mus_wavepacket(SIG), dx, dp), rel=1e-6)


# -- histograms --------------------------------------------------------------

def test_histogram_single_bin():
    h = histogram(np.full(10, 0.55), BinSpec(0.0, 1.0, 10))
    assert h.counts[5] == 10 and h.total == 10


def test_histogram_out_of_range_tracked():
    h = histogram(np.array([-2.0, 0.5, 3.0]), BinSpec(0.0, 1.0, 4))
    assert h.counts.sum() == 1 and h.underflow == 1 and h.overflow == 1 and h.total == 3


def test_histogram_empty():
    with pytest.raises(ValueError):
        histogram(np.array([]), BinSpec(0.0, 1.0, 4))


def test_tv_self_density_zero(rng):
    h = histogram(rng.normal(size=1000), BinSpec(-3, 3, 30))
    assert tv_distance(h, h.implied_density()) == pytest.approx(0.0, abs=1e-12)


def test_tv_mus_samples(rng):
    s = mus_wavepacket(1.5e-7)
    pts = sample_gaussian(s, rng, 50_000)
    h = histogram(pts.x, BinSpec(-4 * s.sigma_x, 4 * s.sigma_x, 60))
    axis = np.linspace(-5 * s.sigma_x, 5 * s.sigma_x, 4001)
    tv = tv_distance(h, DensityGrid(axis, gaussian_density(axis, 0, s.sigma_x)))
    assert 0 <= tv < 0.02


def test_tv_mismatched_range(rng):
    h = histogram(rng.normal(size=100), BinSpec(-3, 3, 6))
    axis = np.linspace(-1, 1, 11)
    with pytest.raises(ValueError):
        tv_distance(h, DensityGrid(axis, np.ones(11)))


@settings(max_examples=30)
@given(st.lists(st.lists(st.floats(-2, 2), min_size=1, max_size=30), min_size=3, max_size=3))
def test_histogram_merge_associative_commutative(chunks):
    spec = BinSpec(-1, 1, 8)
    h = [histogram(np.array(c), spec) for c in chunks]
    a = (h[0] + h[1]) + h[2]
    b = h[2] + (h[1] + h[0])
    assert np.array_equal(a.counts, b.counts) and a.total == b.total
    full = histogram(np.concatenate([np.array(c) for c in chunks]), spec)
    assert np.array_equal(a.counts, full.counts)
    assert (a.underflow, a.overflow) == (full.underflow, full.overflow)


@settings(max_examples=30)
@given(st.integers(2, 200), st.integers(2, 200), st.integers(0, 1000))
def test_moments_merge_matches_pooled(n1, n2, seed):
    r = np.random.default_rng(seed)
    x, p = r.normal(size=n1 + n2), r.normal(3, 2, size=n1 + n2)
    m = PhaseMoments.from_samples(x[:n1], p[:n1]) + PhaseMoments.from_samples(x[n1:], p[n1:])
    assert np.allclose(m.mean, [x.mean(), p.mean()])
    assert np.allclose(m.covariance, np.cov(np.vstack([x, p])))
