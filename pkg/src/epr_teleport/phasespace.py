"""Single-particle phase space: Gaussian and two-peak states, samplers,
density grids, Gaussian smoothing, histograms and overlap fidelity.

Everything here works on one transverse axis. Positions are in metres,
momenta in kg m/s. Sample containers hold numpy arrays so an ensemble of
trajectories is one :class:`PhasePoint` with array-valued fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .physconst import HBAR

__all__ = [
    "PhasePoint",
    "GaussianState",
    "CatState",
    "GridSpec",
    "DensityGrid",
    "BinSpec",
    "Histogram1D",
    "PhaseMoments",
    "GridResolutionError",
    "mus_wavepacket",
    "sample_gaussian",
    "gaussian_density",
    "cat_position_density",
    "cat_momentum_density",
    "convolve_density",
    "fringe_visibility",
    "fringe_contrast",
    "overlap_fidelity",
    "gaussian_fidelity",
    "histogram",
    "tv_distance",
    "cat_wavefunction",
    "pure_state_fidelity",
]

_PURITY_RTOL = 1e-12
_KERNEL_CUTOFF = 6.0


class GridResolutionError(ValueError):
    """Grid too coarse for the requested kernel or not covering the support."""


@dataclass(frozen=True)
class PhasePoint:
    """Phase-space point (x [m], p [kg m/s]); fields may be arrays."""

    x: float | np.ndarray
    p: float | np.ndarray

    def __len__(self):
        return np.size(self.x)


@dataclass(frozen=True)
class GaussianState:
    mean_x: float
    mean_p: float
    sigma_x: float
    sigma_p: float
    corr: float = 0.0

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_p > 0):
            raise ValueError("GaussianState requires sigma_x > 0 and sigma_p > 0")
        if not abs(self.corr) < 1:
            raise ValueError("GaussianState requires |corr| < 1")
        if not all(map(math.isfinite, (self.mean_x, self.mean_p, self.sigma_x, self.sigma_p))):
            raise ValueError("GaussianState moments must be finite")

    @property
    def uncertainty_product(self) -> float:
        return self.sigma_x * self.sigma_p * math.sqrt(1.0 - self.corr**2)

    @property
    def is_physical(self) -> bool:
        return self.uncertainty_product >= 0.5 * HBAR * (1 - _PURITY_RTOL)

    @property
    def is_pure(self) -> bool:
        return abs(self.uncertainty_product / (0.5 * HBAR) - 1.0) <= _PURITY_RTOL

    @property
    def is_mus(self) -> bool:
        """Pure and uncorrelated, i.e. a minimum-uncertainty wavepacket."""
        return self.is_pure and self.corr == 0.0

    def mean(self) -> np.ndarray:
        return np.array([self.mean_x, self.mean_p])

    def covariance(self) -> np.ndarray:
        c = self.corr * self.sigma_x * self.sigma_p
        return np.array([[self.sigma_x**2, c], [c, self.sigma_p**2]])


@dataclass(frozen=True)
class CatState:
    """Superposition of two Gaussian wavepackets separated by ``separation``.

    Each peak has position spread ``peak_sigma`` (std of |psi|^2). A zero
    separation degenerates to a single Gaussian.
    """

    separation: float
    peak_sigma: float
    mean_x: float = 0.0

    def __post_init__(self):
        if not self.separation >= 0:
            raise ValueError("CatState requires separation >= 0")
        if not self.peak_sigma > 0:
            raise ValueError("CatState requires peak_sigma > 0")

    @property
    def momentum_sigma(self) -> float:
        return HBAR / (2.0 * self.peak_sigma)

    @property
    def fringe_wavenumber(self) -> float:
        """Momentum-space fringe wavenumber a/hbar (rad per kg m/s)."""
        return self.separation / HBAR


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of ``n`` points from ``lo`` to ``hi`` inclusive."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 2 or not self.hi > self.lo:
            raise ValueError("GridSpec requires n >= 2 and hi > lo")

    def axis(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @classmethod
    def symmetric(cls, center: float, half_width: float, step: float) -> GridSpec:
        """Grid centred on ``center`` with ``center`` itself a grid point."""
        k = int(math.ceil(half_width / step))
        return cls(center - k * step, center + k * step, 2 * k + 1)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if axis.ndim != 1 or axis.shape != values.shape or axis.size < 2:
            raise ValueError("DensityGrid axis and values must be 1-D of equal length >= 2")
        steps = np.diff(axis)
        if not np.all(steps > 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValueError("DensityGrid axis must be uniformly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("DensityGrid values must be finite and non-negative")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> float:
        return float(self.axis[1] - self.axis[0])

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.axis))

    def normalized(self) -> DensityGrid:
        return DensityGrid(self.axis, self.values / self.integral())

    def mean(self) -> float:
        return float(np.trapezoid(self.axis * self.values, self.axis) / self.integral())

    def std(self) -> float:
        mu = self.mean()
        var = np.trapezoid((self.axis - mu) ** 2 * self.values, self.axis) / self.integral()
        return float(math.sqrt(var))

    def __call__(self, at):
        return np.interp(at, self.axis, self.values, left=0.0, right=0.0)


@dataclass(frozen=True)
class BinSpec:
    lo: float
    hi: float
    bins: int

    def __post_init__(self):
        if self.bins < 1 or not self.hi > self.lo:
            raise ValueError("BinSpec requires bins >= 1 and hi > lo")

    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bins + 1)


@dataclass(frozen=True, eq=False)
class Histogram1D:
    bin_edges: np.ndarray
    counts: np.ndarray
    total: int
    underflow: int = 0
    overflow: int = 0

    def __post_init__(self):
        if not np.all(np.diff(self.bin_edges) > 0):
            raise ValueError("histogram edges must be strictly increasing")
        if int(self.counts.sum()) + self.underflow + self.overflow != self.total:
            raise ValueError("histogram counts do not add up to total")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def density(self) -> np.ndarray:
        """Counts per unit coordinate, normalised to the full total."""
        return self.counts / (self.total * self.widths)

    def implied_density(self) -> DensityGrid:
        return DensityGrid(self.centers, self.density())

    def merge(self, other: Histogram1D) -> Histogram1D:
        if not np.array_equal(self.bin_edges, other.bin_edges):
            raise ValueError("cannot merge histograms with different bins")
        return Histogram1D(
            self.bin_edges,
            self.counts + other.counts,
            self.total + other.total,
            self.underflow + other.underflow,
            self.overflow + other.overflow,
        )

    __add__ = merge


@dataclass(frozen=True, eq=False)
class PhaseMoments:
    """Streaming first and second moments of (x, p); mergeable."""

    n: int = 0
    mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    comoment: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    @classmethod
    def from_samples(cls, x, p) -> PhaseMoments:
        data = np.vstack([np.asarray(x, float), np.asarray(p, float)])
        mean = data.mean(axis=1)
        d = data - mean[:, None]
        return cls(data.shape[1], mean, d @ d.T)

    def merge(self, other: PhaseMoments) -> PhaseMoments:
        # Chan et al. pairwise update
        if self.n == 0:
            return other
        if other.n == 0:
            return self
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        com = self.comoment + other.comoment + np.outer(delta, delta) * (self.n * other.n / n)
        return PhaseMoments(n, mean, com)

    __add__ = merge

    @property
    def covariance(self) -> np.ndarray:
        return self.comoment / (self.n - 1)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def mus_wavepacket(sigma_x: float, mean_x: float = 0.0, mean_p: float = 0.0) -> GaussianState:
    """Minimum-uncertainty Gaussian: sigma_p = hbar / (2 sigma_x)."""
    if not sigma_x > 0:
        raise ValueError(f"sigma_x must be positive, got {sigma_x!r}")
    return GaussianState(mean_x, mean_p, sigma_x, HBAR / (2.0 * sigma_x), 0.0)


def sample_gaussian(state: GaussianState, rng: np.random.Generator, n: int) -> PhasePoint:
    """Draw ``n`` trajectories from the state's (non-negative) Wigner function."""
    if n < 1:
        raise ValueError("n must be >= 1")
    z = rng.standard_normal((2, n))
    x = state.mean_x + state.sigma_x * z[0]
    p = state.mean_p + state.sigma_p * (
        state.corr * z[0] + math.sqrt(1.0 - state.corr**2) * z[1]
    )
    return PhasePoint(x, p)


def gaussian_density(x, mean: float, sigma: float):
    return np.exp(-0.5 * ((x - mean) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))


def _as_axis(grid) -> np.ndarray:
    if isinstance(grid, GridSpec):
        return grid.axis()
    axis = np.asarray(grid, dtype=float)
    GridSpec(float(axis[0]), float(axis[-1]), axis.size)  # validates shape
    return axis


def _check_covers(axis: np.ndarray, lo: float, hi: float, what: str):
    if axis[0] > lo or axis[-1] < hi:
        raise GridResolutionError(
            f"{what}: grid [{axis[0]:.4g}, {axis[-1]:.4g}] does not cover "
            f"the required support [{lo:.4g}, {hi:.4g}]"
        )


def _normalize(axis: np.ndarray, values: np.ndarray) -> DensityGrid:
    return DensityGrid(axis, values / np.trapezoid(values, axis))


def cat_position_density(state: CatState, grid) -> DensityGrid:
    axis = _as_axis(grid)
    half = state.separation / 2
    reach = half + _KERNEL_CUTOFF * state.peak_sigma
    _check_covers(axis, state.mean_x - reach, state.mean_x + reach, "cat position density")
    u = axis - state.mean_x
    s2 = 4.0 * state.peak_sigma**2
    amp = np.exp(-((u - half) ** 2) / s2) + np.exp(-((u + half) ** 2) / s2)
    return _normalize(axis, amp**2)


def cat_momentum_density(state: CatState, grid) -> DensityGrid:
    axis = _as_axis(grid)
    sp = state.momentum_sigma
    reach = _KERNEL_CUTOFF * sp
    _check_covers(axis, -reach, reach, "cat momentum density")
    env = np.exp(-0.5 * (axis / sp) ** 2)
    return _normalize(axis, env * np.cos(0.5 * state.fringe_wavenumber * axis) ** 2)


def convolve_density(d: DensityGrid, sigma: float, extend: bool = True) -> DensityGrid:
    """Smooth ``d`` with a normalised Gaussian kernel of standard deviation ``sigma``.

    With ``extend`` the axis grows by the kernel reach on both sides so no
    mass leaves the grid; otherwise the original axis is kept and the input
    is treated as zero outside it.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return DensityGrid(d.axis.copy(), d.values.copy())
    dx = d.step
    if not dx < sigma / 3:
        raise GridResolutionError(
            f"grid spacing {dx:.4g} must be below sigma/3 = {sigma / 3:.4g}"
        )
    k = int(math.ceil(_KERNEL_CUTOFF * sigma / dx))
    offsets = np.arange(-k, k + 1) * dx
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()
    out = np.convolve(d.values, kernel, mode="full")
    if extend:
        axis = d.axis[0] + dx * np.arange(-k, d.axis.size + k)
        return DensityGrid(axis, out)
    return DensityGrid(d.axis.copy(), out[k : k + d.axis.size])


def fringe_visibility(d: DensityGrid, wavenumber: float, center: float = 0.0) -> float:
    """Central-fringe visibility (I_max - I_min)/(I_max + I_min).

    I_max is read at ``center`` and I_min half a fringe period away.
    """
    i_max = float(d(center))
    i_min = float(d(center + math.pi / wavenumber))
    return (i_max - i_min) / (i_max + i_min)


def fringe_contrast(d: DensityGrid, wavenumber: float) -> float:
    """Envelope-independent fringe contrast 2|<exp(i k u)>|.

    Gaussian smoothing of width s multiplies this quantity by exactly
    exp(-k^2 s^2 / 2).
    """
    w = np.full(d.axis.size, d.step)
    w[0] = w[-1] = 0.5 * d.step
    mass = np.sum(w * d.values)
    phase = np.exp(1j * wavenumber * (d.axis - d.axis[d.axis.size // 2]))
    return float(2.0 * abs(np.sum(w * d.values * phase)) / mass)


def overlap_fidelity(state: GaussianState, mean_out, cov_out) -> float:
    """Overlap <psi_in| rho_out |psi_in> for a pure Gaussian input.

    Computed as 2 pi hbar times the integral of W_in W_out for Gaussian
    Wigner functions.
    """
    if not state.is_pure:
        raise ValueError("overlap fidelity needs a pure input state")
    s = state.covariance() + np.asarray(cov_out, float)
    delta = np.asarray(mean_out, float) - state.mean()
    # rescale to O(1) before the determinant / solve
    scale = np.array([state.sigma_x, state.sigma_p])
    s_r = s / np.outer(scale, scale)
    d_r = delta / scale
    det = np.linalg.det(s_r) * (state.sigma_x * state.sigma_p) ** 2
    expo = -0.5 * d_r @ np.linalg.solve(s_r, d_r)
    return float(HBAR / math.sqrt(det) * math.exp(expo))


def gaussian_fidelity(state: GaussianState, dxT: float, dpT: float) -> float:
    """Fidelity of a MUS input after additive Gaussian noise (dxT, dpT).

    Reduces to 1/(1 + dxT dpT / hbar) when dxT/dpT = sigma_x/sigma_p.
    """
    if not state.is_mus:
        raise ValueError("gaussian_fidelity requires a pure, uncorrelated (MUS) input")
    if dxT < 0 or dpT < 0:
        raise ValueError("noise widths must be >= 0")
    return HBAR / math.sqrt(
        (2 * state.sigma_x**2 + dxT**2) * (2 * state.sigma_p**2 + dpT**2)
    )


def histogram(values, spec: BinSpec) -> Histogram1D:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("cannot histogram an empty sample")
    edges = spec.edges()
    counts, _ = np.histogram(values, bins=edges)
    under = int(np.count_nonzero(values < spec.lo))
    over = int(np.count_nonzero(values > spec.hi))
    return Histogram1D(edges, counts.astype(np.int64), int(values.size), under, over)


def tv_distance(h: Histogram1D, d: DensityGrid) -> float:
    """Total-variation distance between a histogram and a reference density.

    Reference bin masses use the density at bin centres times bin width; the
    mass outside the binned range is compared as one extra cell.
    """
    c = h.centers
    if c[0] < d.axis[0] or c[-1] > d.axis[-1]:
        raise ValueError("histogram range is not covered by the reference density")
    p_hist = h.counts / h.total
    p_ref = d(c) * h.widths
    out_hist = (h.underflow + h.overflow) / h.total
    out_ref = max(0.0, 1.0 - float(p_ref.sum()))
    tv = 0.5 * (np.abs(p_hist - p_ref).sum() + abs(out_hist - out_ref))
    return float(min(1.0, tv))


def cat_wavefunction(state: CatState, axis) -> np.ndarray:
    """Real position amplitude of the two-peak state on ``axis`` (unnormalised)."""
    u = np.asarray(axis, float) - state.mean_x
    half = state.separation / 2
    s2 = 4.0 * state.peak_sigma**2
    return np.exp(-((u - half) ** 2) / s2) + np.exp(-((u + half) ** 2) / s2)


def pure_state_fidelity(psi, axis, dxT: float, dpT: float, nodes: int = 48) -> float:
    """Fidelity of a real wavefunction after random Gaussian displacements.

    ``psi`` is a callable returning the (unnormalised) amplitude; ``axis`` a
    uniform grid covering its support. The noise channel shifts x by
    N(0, dxT) and p by N(0, dpT), which is the Wigner-function smoothing used
    for teleportation output. Momentum kicks are averaged in closed form,
    position shifts by Gauss-Hermite quadrature.
    """
    axis = np.asarray(axis, float)
    dx = axis[1] - axis[0]
    norm = math.sqrt(np.sum(psi(axis) ** 2) * dx)
    base = psi(axis) / norm
    if dpT > 0:
        diff = axis[:, None] - axis[None, :]
        kernel = np.exp(-0.5 * (dpT * diff / HBAR) ** 2)
    else:
        kernel = None
    if dxT > 0:
        t, w = np.polynomial.hermite_e.hermegauss(nodes)
        shifts, weights = dxT * t, w / math.sqrt(2 * math.pi)
    else:
        shifts, weights = np.zeros(1), np.ones(1)
    total = 0.0
    for xi, wt in zip(shifts, weights):
        g = base * psi(axis - xi) / norm
        val = np.sum(g) ** 2 if kernel is None else g @ kernel @ g
        total += wt * val * dx * dx
    return float(total)
