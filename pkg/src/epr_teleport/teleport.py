"""Teleportation pipeline: error budget, fidelity bounds and ensemble runs.

Gaussian inputs are propagated as classical trajectories sampled from their
Wigner function. Two-peak inputs, whose Wigner function is negative, are
handled by smoothing their densities with the teleportation noise kernel.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, NamedTuple

import numpy as np

from .collision import (
    CollisionParams,
    MeasurementRecord,
    measure,
    momentum_resolution,
    position_resolution,
    validity_threshold,
)
from .physconst import HBAR
from .phasespace import (
    BinSpec,
    CatState,
    DensityGrid,
    GaussianState,
    GridSpec,
    Histogram1D,
    PhaseMoments,
    PhasePoint,
    cat_momentum_density,
    cat_position_density,
    cat_wavefunction,
    convolve_density,
    fringe_contrast,
    fringe_visibility,
    gaussian_density,
    histogram,
    mus_wavepacket,
    overlap_fidelity,
    pure_state_fidelity,
    sample_gaussian,
)
from .source import SourceParams, design_check, epr_pair_state, sample_epr_pair

__all__ = [
    "NoiseBudget",
    "NoiseSettings",
    "ErrorBudget",
    "Nonclassicality",
    "MatchedInput",
    "HistogramSettings",
    "RunConfig",
    "RunReport",
    "CatOutput",
    "SweepRow",
    "SWEEP_PARAMETERS",
    "ConfigurationError",
    "error_budget",
    "nonclassicality",
    "f_max",
    "resolve_noise",
    "resolve_budget",
    "resolve_input",
    "run_event",
    "run_ensemble",
    "run_classical",
    "run_cat_output",
    "sweep",
    "input_densities",
]

Mode = Literal["quantum", "classical"]


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseBudget:
    dx_meas: float
    dp_meas: float
    dx_shift: float = 0.0
    dp_shift: float = 0.0

    def __post_init__(self):
        for name in ("dx_meas", "dp_meas", "dx_shift", "dp_shift"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"noise violates {name} >= 0")


@dataclass(frozen=True)
class NoiseSettings:
    """Noise as configured; ``None`` for a measurement term means derive it
    from the source and collision parameters."""

    dx_meas: float | None = None
    dp_meas: float | None = None
    dx_shift: float = 0.0
    dp_shift: float = 0.0


@dataclass(frozen=True)
class ErrorBudget:
    dxT: float
    dpT: float
    product_over_hbar: float


class Nonclassicality(NamedTuple):
    nonclassical: bool
    product_over_hbar: float


@dataclass(frozen=True)
class MatchedInput:
    """MUS input whose widths are matched to the noise ratio dxT/dpT."""

    mean_x: float = 0.0
    mean_p: float = 0.0


@dataclass(frozen=True)
class HistogramSettings:
    bins: int = 80
    x_range: tuple[float, float] | None = None
    p_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class RunConfig:
    source: SourceParams
    collision: CollisionParams | None = None
    noise: NoiseSettings = field(default_factory=NoiseSettings)
    input: GaussianState | CatState | MatchedInput | None = None
    n_events: int = 50_000
    seed: int = 0
    mode: Mode = "quantum"
    workers: int = 1
    histogram: HistogramSettings = field(default_factory=HistogramSettings)

    def __post_init__(self):
        if self.n_events < 1:
            raise ConfigurationError("config violates events >= 1")
        if self.workers < 1:
            raise ConfigurationError("config violates workers >= 1")
        if self.mode not in ("quantum", "classical"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.collision is not None and self.collision.species != self.source.species:
            raise ConfigurationError("source and collision must use the same species")


@dataclass(frozen=True, eq=False)
class CatOutput:
    input_x: DensityGrid
    output_x: DensityGrid
    input_p: DensityGrid
    output_p: DensityGrid
    visibility_in: float
    visibility_out: float
    contrast_in: float
    contrast_out: float
    contrast_ratio_expected: float
    valley_ratio_in: float
    valley_ratio_out: float


@dataclass(frozen=True, eq=False)
class RunReport:
    mode: str
    budget: ErrorBudget
    f_max: float
    fidelity_estimate: float
    n_events: int
    seed: int
    workers: int
    warnings: list[str]
    input_state: GaussianState | CatState
    hist_x: Histogram1D | None = None
    hist_p: Histogram1D | None = None
    output_moments: PhaseMoments | None = None
    input_moments: PhaseMoments | None = None
    error_moments: PhaseMoments | None = None
    cat: CatOutput | None = None

    def summary(self) -> dict:
        out = {
            "mode": self.mode,
            "n_events": self.n_events,
            "seed": self.seed,
            "workers": self.workers,
            "budget": {
                "dxT_m": self.budget.dxT,
                "dpT_kgmps": self.budget.dpT,
                "product_over_hbar": self.budget.product_over_hbar,
            },
            "nonclassical": nonclassicality(self.budget).nonclassical,
            "f_max": self.f_max,
            "fidelity_estimate": self.fidelity_estimate,
            "warnings": list(self.warnings),
        }
        if isinstance(self.input_state, GaussianState):
            out["input"] = {
                "sigma_x_m": self.input_state.sigma_x,
                "sigma_p_kgmps": self.input_state.sigma_p,
            }
        for key, mom in (
            ("output_moments", self.output_moments),
            ("input_moments", self.input_moments),
            ("error_moments", self.error_moments),
        ):
            if mom is not None:
                cov = mom.covariance
                out[key] = {
                    "mean_x_m": float(mom.mean[0]),
                    "mean_p_kgmps": float(mom.mean[1]),
                    "var_x_m2": float(cov[0, 0]),
                    "var_p_kgmps2": float(cov[1, 1]),
                    "cov_xp": float(cov[0, 1]),
                }
        if self.cat is not None:
            c = self.cat
            out["cat"] = {
                "visibility_in": c.visibility_in,
                "visibility_out": c.visibility_out,
                "contrast_in": c.contrast_in,
                "contrast_out": c.contrast_out,
                "contrast_ratio": c.contrast_out / c.contrast_in if c.contrast_in else 0.0,
                "contrast_ratio_expected": c.contrast_ratio_expected,
                "valley_ratio_in": c.valley_ratio_in,
                "valley_ratio_out": c.valley_ratio_out,
            }
        return out


def error_budget(dd: float, dPx: float, noise: NoiseBudget) -> ErrorBudget:
    """Total position and momentum teleportation errors, summed in quadrature."""
    dxT = math.sqrt(dd**2 + noise.dx_meas**2 + noise.dx_shift**2)
    dpT = math.sqrt(dPx**2 + noise.dp_meas**2 + noise.dp_shift**2)
    return ErrorBudget(dxT, dpT, dxT * dpT / HBAR)


def nonclassicality(budget: ErrorBudget) -> Nonclassicality:
    v = budget.product_over_hbar
    return Nonclassicality(v < 1.0, v)


def f_max(product_over_hbar: float) -> float:
    """Best Gaussian-input fidelity for a given dxT dpT / hbar."""
    if product_over_hbar < 0:
        raise ValueError("product_over_hbar must be >= 0")
    return 1.0 / (1.0 + product_over_hbar)


def _require_collision(config: RunConfig) -> CollisionParams:
    if config.collision is None:
        raise ConfigurationError("this run needs collision parameters (v_y_mps, dd_c_m)")
    return config.collision


def resolve_noise(config: RunConfig, check: bool = True) -> NoiseBudget:
    """Fill derived measurement terms from the collision model."""
    n = config.noise
    src = config.source
    dx, dp = n.dx_meas, n.dp_meas
    if dx is None or dp is None:
        col = _require_collision(config)
        if dx is None:
            dx = position_resolution(src.species, src.D, src.dd_v, col.v_y, check=check)
        if dp is None:
            dp = momentum_resolution(src.D, col.p_instr)
    return NoiseBudget(dx, dp, n.dx_shift, n.dp_shift)


def resolve_budget(config: RunConfig, check: bool = True) -> ErrorBudget:
    epr = epr_pair_state(config.source)
    return error_budget(epr.sigma_xdiff, epr.sigma_psum, resolve_noise(config, check))


def resolve_input(config: RunConfig, budget: ErrorBudget | None = None):
    inp = config.input
    if inp is None:
        raise ConfigurationError("this run needs an input state")
    if isinstance(inp, MatchedInput):
        budget = budget or resolve_budget(config)
        sigma_x = math.sqrt(0.5 * HBAR * budget.dxT / budget.dpT)
        return mus_wavepacket(sigma_x, inp.mean_x, inp.mean_p)
    return inp


def run_event(
    input_sample: PhasePoint,
    epr: tuple[PhasePoint, PhasePoint],
    meas: MeasurementRecord,
    noise: NoiseBudget,
    rng: np.random.Generator,
) -> PhasePoint:
    """Shift readout particle 0 by the measured (x_-, p_+), with shifter noise.

    ``input_sample`` is not used by the shift itself; it is the particle the
    measurement record was taken on.
    """
    p0 = epr[0]
    n = np.size(p0.x)
    z = rng.standard_normal((2, n))
    if np.ndim(p0.x) == 0:
        z = z[:, 0]
    x_out = p0.x - meas.x_minus_meas + noise.dx_shift * z[0]
    p_out = p0.p + meas.p_plus_meas + noise.dp_shift * z[1]
    return PhasePoint(x_out, p_out)


def _chunks(n: int, workers: int) -> list[int]:
    base, extra = divmod(n, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def _worker_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _bin_specs(config: RunConfig, state: GaussianState, budget: ErrorBudget):
    hs = config.histogram
    wx = 5.0 * max(math.hypot(state.sigma_x, budget.dxT), math.sqrt(3) * state.sigma_x)
    wp = 5.0 * max(math.hypot(state.sigma_p, budget.dpT), math.sqrt(3) * state.sigma_p)
    xr = hs.x_range or (state.mean_x - wx, state.mean_x + wx)
    pr = hs.p_range or (state.mean_p - wp, state.mean_p + wp)
    return BinSpec(xr[0], xr[1], hs.bins), BinSpec(pr[0], pr[1], hs.bins)


@dataclass(frozen=True)
class _Task:
    mode: str
    n: int
    seed: int
    index: int
    state: GaussianState
    source: SourceParams | None
    collision: CollisionParams | None
    noise: NoiseBudget | None
    bins_x: BinSpec
    bins_p: BinSpec


def _simulate_chunk(task: _Task):
    rng = _worker_rng(task.seed, task.index)
    x2 = sample_gaussian(task.state, rng, task.n)
    if task.mode == "quantum":
        epr = sample_epr_pair(epr_pair_state(task.source), rng, task.n)
        meas = measure(epr[1], x2, task.collision, task.noise, rng)
        out = run_event(x2, epr, meas, task.noise, rng)
    else:
        s = task.state
        z = rng.standard_normal((4, task.n))
        # noisy simultaneous readout, then a fresh MUS around the readout
        out = PhasePoint(
            x2.x + s.sigma_x * (z[0] + z[2]),
            x2.p + s.sigma_p * (z[1] + z[3]),
        )
    return (
        histogram(out.x, task.bins_x),
        histogram(out.p, task.bins_p),
        PhaseMoments.from_samples(out.x, out.p),
        PhaseMoments.from_samples(x2.x, x2.p),
        PhaseMoments.from_samples(out.x - x2.x, out.p - x2.p),
    )


def _run_trajectories(config: RunConfig, state: GaussianState, budget: ErrorBudget,
                      noise: NoiseBudget | None) -> RunReport:
    bins_x, bins_p = _bin_specs(config, state, budget)
    tasks = [
        _Task(config.mode, n, config.seed, i, state, config.source, config.collision,
              noise, bins_x, bins_p)
        for i, n in enumerate(_chunks(config.n_events, config.workers))
        if n > 0
    ]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=len(tasks)) as pool:
            parts = list(pool.map(_simulate_chunk, tasks))
    else:
        parts = [_simulate_chunk(t) for t in tasks]
    hx, hp, mo, mi, me = parts[0]
    for part in parts[1:]:
        hx, hp = hx + part[0], hp + part[1]
        mo, mi, me = mo + part[2], mi + part[3], me + part[4]
    fid = overlap_fidelity(state, mo.mean, mo.covariance)
    warnings = design_check(config.source, config.collision) if config.collision else []
    return RunReport(
        mode=config.mode,
        budget=budget,
        f_max=f_max(budget.product_over_hbar),
        fidelity_estimate=fid,
        n_events=config.n_events,
        seed=config.seed,
        workers=config.workers,
        warnings=warnings,
        input_state=state,
        hist_x=hx,
        hist_p=hp,
        output_moments=mo,
        input_moments=mi,
        error_moments=me,
    )


def run_ensemble(config: RunConfig) -> RunReport:
    """Run the configured experiment; dispatches on mode and input type."""
    if config.mode == "classical":
        return run_classical(config)
    if isinstance(config.input, CatState):
        return run_cat_output(config)
    budget = resolve_budget(config)
    state = resolve_input(config, budget)
    if not state.is_physical:
        raise ConfigurationError("input state violates the uncertainty relation")
    _require_collision(config)
    return _run_trajectories(config, state, budget, resolve_noise(config))


def run_classical(config: RunConfig) -> RunReport:
    """Measure-and-prepare baseline with MUS-width measurement noise."""
    if isinstance(config.input, CatState):
        raise ConfigurationError(
            "classical trajectory runs need a Gaussian MUS input; two-peak states "
            "have a negative Wigner function and cannot be sampled"
        )
    state = resolve_input(config)
    if not state.is_mus:
        raise ConfigurationError("classical teleportation requires a MUS input")
    dxT = math.sqrt(2.0) * state.sigma_x
    dpT = math.sqrt(2.0) * state.sigma_p
    budget = ErrorBudget(dxT, dpT, dxT * dpT / HBAR)
    return _run_trajectories(replace(config, mode="classical"), state, budget, None)


def _cat_grids(cat: CatState, budget: ErrorBudget):
    fine = 10.0
    sx = min(cat.peak_sigma, budget.dxT) if budget.dxT > 0 else cat.peak_sigma
    step_x = sx / fine
    reach_x = cat.separation / 2 + 6 * cat.peak_sigma + 6 * budget.dxT + 2 * step_x
    gx = GridSpec.symmetric(cat.mean_x, reach_x, step_x)

    sp = cat.momentum_sigma
    sp_min = min(sp, budget.dpT) if budget.dpT > 0 else sp
    step_p = sp_min / fine
    if cat.separation > 0:
        # put the first fringe minimum on a grid point
        half_period = math.pi / cat.fringe_wavenumber
        step_p = half_period / math.ceil(half_period / step_p)
    reach_p = 6 * sp + 6 * budget.dpT + 2 * step_p
    gp = GridSpec.symmetric(0.0, reach_p, step_p)
    return gx, gp


def run_cat_output(config: RunConfig) -> RunReport:
    """Predict teleported two-peak densities by smoothing with (dxT, dpT)."""
    cat = config.input
    if not isinstance(cat, CatState):
        raise ConfigurationError("run_cat_output needs a two-peak (cat) input")
    budget = resolve_budget(config)
    gx, gp = _cat_grids(cat, budget)
    in_x = cat_position_density(cat, gx)
    in_p = cat_momentum_density(cat, gp)
    out_x = convolve_density(in_x, budget.dxT, extend=False)
    out_p = convolve_density(in_p, budget.dpT, extend=False)

    k = cat.fringe_wavenumber
    if k > 0:
        vis_in, vis_out = fringe_visibility(in_p, k), fringe_visibility(out_p, k)
        con_in, con_out = fringe_contrast(in_p, k), fringe_contrast(out_p, k)
    else:
        vis_in = vis_out = con_in = con_out = 0.0
    expected = math.exp(-0.5 * (cat.separation * budget.dpT / HBAR) ** 2)

    def valley(d: DensityGrid) -> float:
        return float(d(cat.mean_x) / d.values.max())

    # fidelity on a grid that resolves the wavefunction (not the noise kernel)
    step = cat.peak_sigma / 8
    fx = GridSpec.symmetric(cat.mean_x, cat.separation / 2 + 7 * cat.peak_sigma, step).axis()
    fid = pure_state_fidelity(lambda x: cat_wavefunction(cat, x), fx, budget.dxT, budget.dpT)

    warnings = design_check(config.source, config.collision) if config.collision else []
    return RunReport(
        mode=config.mode,
        budget=budget,
        f_max=f_max(budget.product_over_hbar),
        fidelity_estimate=fid,
        n_events=config.n_events,
        seed=config.seed,
        workers=config.workers,
        warnings=warnings,
        input_state=cat,
        cat=CatOutput(
            in_x, out_x, in_p, out_p, vis_in, vis_out, con_in, con_out, expected,
            valley(in_x), valley(out_x),
        ),
    )


def input_densities(report: RunReport) -> tuple[np.ndarray, np.ndarray]:
    """Ideal input densities at the report's histogram bin centres."""
    s = report.input_state
    return (
        gaussian_density(report.hist_x.centers, s.mean_x, s.sigma_x),
        gaussian_density(report.hist_p.centers, s.mean_p, s.sigma_p),
    )


class SweepRow(NamedTuple):
    value: float
    valid: bool
    product_over_hbar: float
    f_max: float
    fidelity_estimate: float | None


SWEEP_PARAMETERS = {
    "D": ("source", "D", "m"),
    "dd": ("source", "dd", "m"),
    "dd_v": ("source", "dd_v", "m"),
    "v_y": ("collision", "v_y", "mps"),
}


def _with_parameter(config: RunConfig, name: str, value: float) -> RunConfig:
    try:
        part, attr, _ = SWEEP_PARAMETERS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown sweep parameter {name!r}; choose from {', '.join(SWEEP_PARAMETERS)}"
        ) from None
    if part == "source":
        return replace(config, source=replace(config.source, **{attr: value}))
    return replace(config, collision=replace(_require_collision(config), **{attr: value}))


def sweep(config: RunConfig, name: str, values, monte_carlo: bool = True) -> list[SweepRow]:
    """Vary one parameter and tabulate the budget and fidelities.

    Rows below the collision validity threshold are still evaluated with
    the resolution formula but flagged ``valid=False``.
    """
    rows = []
    for value in values:
        cfg = _with_parameter(config, name, float(value))
        col = _require_collision(cfg)
        src = cfg.source
        valid = col.p_y >= validity_threshold(src.species, src.D)
        budget = resolve_budget(cfg, check=False)
        fid = None
        if monte_carlo:
            noise = resolve_noise(cfg, check=False)
            cfg = replace(cfg, noise=NoiseSettings(*vars(noise).values()))
            fid = run_ensemble(cfg).fidelity_estimate
        rows.append(
            SweepRow(float(value), bool(valid), budget.product_over_hbar,
                     f_max(budget.product_over_hbar), fid)
        )
    return rows
