"""Monte Carlo experiments: reconstruction methods, presets and the trial loop."""
from __future__ import annotations

import dataclasses
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ArrayGeometry, Beamformer, GridSpec, noiseless_map, shadowing_rng
from .exceptions import InvalidArgumentError
from .lowrank import SolverConfig, solve_box_nnm, solve_observed_nnm
from .lpr import LprConfig, lpr_map, lpr_mc
from .metrics import nmse, singular_energy
from .rbf import interpolate_map, map_loocv_residuals
from .robust import HuberConfig, select_delta
from .sampling import DEFAULT_MU, build_mask

log = logging.getLogger(__name__)

METHODS = (
    "rbf",
    "rbf_noconst",
    "rbf_mc_huber",
    "rbf_mc_fixed",
    "mc_nnm",
    "lpr",
    "lpr_mc",
    "rbf_gaussian",
    "rbf_tps",
)
GAUSSIAN_EPSILONS = (0.5, 1.0, 2.0, 4.0)
MASK_SEED_OFFSET = 2**32


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep over sampling ratio, shadowing level and sampling strategy.

    Every (rho, sigma, strategy) point runs ``trials`` Monte Carlo trials; trial
    ``t`` uses shadowing seed ``base_seed + t`` and all methods of a trial see
    the same map and mask.
    """

    name: str = "custom"
    grid: GridSpec = GridSpec(-80.0, 80.0, 0.1, 10.0, 100, 100)
    n_elements: int = 256
    carrier_freq: float = 100e9
    power: float = 1.0
    sigmas: tuple = (3.0,)
    rhos: tuple = (0.1,)
    strategies: tuple = ("mulaw",)
    mu: float = DEFAULT_MU
    methods: tuple = ("rbf_mc_huber",)
    deltas: tuple = ()
    trials: int = 20
    base_seed: int = 0
    epsilon: float = 1.0
    solver: SolverConfig = SolverConfig(keep_trace=False)

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidArgumentError("trials must be >= 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise InvalidArgumentError(f"unknown methods {unknown}")
        if "rbf_mc_fixed" in self.methods and not self.deltas:
            raise InvalidArgumentError("rbf_mc_fixed needs a delta grid")
        if any(s < 0 for s in self.sigmas):
            raise InvalidArgumentError("sigma must be non-negative")
        for s in self.strategies:
            if s not in ("uniform", "mulaw"):
                raise InvalidArgumentError(f"unknown strategy {s!r}")

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_elements, self.carrier_freq)

    def with_(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def sigma(self) -> float:
        """The shadowing level of a single-sigma sweep."""
        if len(self.sigmas) != 1:
            raise InvalidArgumentError(f"{self.name} sweeps {len(self.sigmas)} shadowing levels")
        return self.sigmas[0]

    @property
    def rho(self) -> float:
        """The sampling ratio of a single-ratio sweep."""
        if len(self.rhos) != 1:
            raise InvalidArgumentError(f"{self.name} sweeps {len(self.rhos)} sampling ratios")
        return self.rhos[0]


@dataclass
class MetricsRecord:
    method: str
    rho: float
    sigma: float
    strategy: str
    mu: float | None
    seed: int
    nmse: float
    wall_time: float
    delta: float | None = None
    iterations: int | None = None
    converged: bool | None = None
    error: str | None = None

    def sort_key(self):
        return (self.rho, self.sigma, self.strategy, self.method, -1.0 if self.delta is None else self.delta, self.seed)


# ---------------------------------------------------------------- methods


@dataclass
class Reconstruction:
    estimate: np.ndarray
    delta: float | None = None
    iterations: int | None = None
    converged: bool | None = None
    info: dict = field(default_factory=dict)


def reconstruct_rbf(mask, values, grid, epsilon=1.0, constant=True, kernel="multiquadric"):
    return Reconstruction(interpolate_map(mask, values, grid, epsilon, kernel=kernel, constant=constant))


def huber_delta(mask, values, grid, epsilon=1.0, huber_cfg: HuberConfig | None = None):
    """Tolerance from pooled absolute LOOCV residuals of the RBF prior."""
    res, skipped = map_loocv_residuals(mask, values, grid, epsilon)
    delta, hres = select_delta(res, huber_cfg)
    diag = hres.diagnostics()
    diag["skipped_slices"] = skipped
    diag["delta"] = delta
    return delta, diag


def reconstruct_rbf_mc(mask, values, grid, epsilon=1.0, delta="huber", solver: SolverConfig | None = None, prior=None):
    """RBF prior followed by the box-constrained nuclear-norm refinement."""
    if prior is None:
        prior = interpolate_map(mask, values, grid, epsilon)
    info = {}
    if isinstance(delta, str):
        if delta != "huber":
            raise InvalidArgumentError(f"unknown delta rule {delta!r}")
        delta, info = huber_delta(mask, values, grid, epsilon)
    res = solve_box_nnm(prior, float(delta), solver)
    return Reconstruction(res.solution, float(delta), res.iterations, res.converged, info)


def reconstruct_mc_nnm(mask, values, grid, solver: SolverConfig | None = None):
    res = solve_observed_nnm(mask, values, grid.shape, solver)
    return Reconstruction(res.solution, None, res.iterations, res.converged)


def reconstruct_lpr(mask, values, grid, cfg: LprConfig = LprConfig()):
    prior, bws = lpr_map(mask, values, grid, cfg)
    return Reconstruction(prior, info={"bandwidths": bws})


def reconstruct_lpr_mc(mask, values, grid, cfg: LprConfig = LprConfig(), solver: SolverConfig | None = None):
    res = lpr_mc(mask, values, grid, cfg, "huber", solver)
    return Reconstruction(res.solution, res.delta, res.iterations, res.converged)


def reconstruct_gaussian(mask, values, grid, epsilons=GAUSSIAN_EPSILONS):
    """Gaussian-kernel RBF with the shape picked by pooled LOOCV error."""
    best = None
    for eps in epsilons:
        try:
            res, _ = map_loocv_residuals(mask, values, grid, eps, kernel="gaussian")
        except ArithmeticError:
            continue
        score = float(np.mean(res**2)) if res.size else np.inf
        if best is None or score < best[0]:
            best = (score, eps)
    if best is None:
        raise ArithmeticError("every Gaussian shape parameter gave an ill-conditioned system")
    est = interpolate_map(mask, values, grid, best[1], kernel="gaussian")
    return Reconstruction(est, info={"epsilon": best[1]})


def reconstruct(method, mask, values, grid, *, epsilon=1.0, delta=None, solver=None):
    """Dispatch one named method on a single map and mask."""
    if method == "rbf":
        return reconstruct_rbf(mask, values, grid, epsilon)
    if method == "rbf_noconst":
        return reconstruct_rbf(mask, values, grid, epsilon, constant=False)
    if method == "rbf_mc_huber":
        return reconstruct_rbf_mc(mask, values, grid, epsilon, "huber", solver)
    if method == "rbf_mc_fixed":
        if delta is None:
            raise InvalidArgumentError("rbf_mc_fixed needs delta")
        return reconstruct_rbf_mc(mask, values, grid, epsilon, float(delta), solver)
    if method == "mc_nnm":
        return reconstruct_mc_nnm(mask, values, grid, solver)
    if method == "lpr":
        return reconstruct_lpr(mask, values, grid)
    if method == "lpr_mc":
        return reconstruct_lpr_mc(mask, values, grid, solver=solver)
    if method == "rbf_gaussian":
        return reconstruct_gaussian(mask, values, grid)
    if method == "rbf_tps":
        return reconstruct_rbf(mask, values, grid, epsilon, kernel="thin_plate")
    raise InvalidArgumentError(f"unknown method {method!r}")


# ---------------------------------------------------------------- presets

_FULL = ("rbf_mc_huber", "rbf", "mc_nnm", "lpr", "lpr_mc")


def _linspace(a, b, n):
    return tuple(round(float(v), 10) for v in np.linspace(a, b, n))


def preset(name: str, trials: int | None = None) -> ExperimentConfig:
    """Settings of the named figure on the default 100x100 scene."""
    base = ExperimentConfig()
    table = {
        "fig2b": base.with_(name="fig2b", sigmas=(0.0,), methods=(), trials=1),
        "fig5": base.with_(
            name="fig5",
            rhos=(0.05, 0.10, 0.15, 0.20),
            sigmas=(0.0,),
            strategies=("uniform",),
            methods=("rbf", "rbf_gaussian", "rbf_tps", "lpr"),
        ),
        "fig6": base.with_(
            name="fig6",
            rhos=_linspace(0.10, 0.20, 6),
            sigmas=(0.0,),
            strategies=("uniform",),
            methods=("rbf", "rbf_noconst"),
        ),
        "fig7": base.with_(
            name="fig7",
            rhos=(0.1,),
            sigmas=(1.0, 2.0, 3.0, 4.0),
            strategies=("uniform", "mulaw"),
            mu=15.0,
            methods=("rbf",),
        ),
        "fig8": base.with_(
            name="fig8",
            rhos=(0.2,),
            sigmas=(4.0,),
            methods=("rbf", "rbf_mc_fixed", "rbf_mc_huber"),
            deltas=_linspace(0.0, 8.0, 17),
        ),
        "fig9": base.with_(name="fig9", rhos=_linspace(0.06, 0.16, 6), sigmas=(3.0,), methods=_FULL),
        "fig10": base.with_(name="fig10", rhos=(0.1,), sigmas=_linspace(1.0, 5.0, 5), methods=_FULL),
        "fig11": base.with_(name="fig11", rhos=(0.1,), sigmas=(4.0,), methods=_FULL, trials=1),
    }
    try:
        cfg = table[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown preset {name!r}; choose from {sorted(table)}") from None
    if trials is not None:
        cfg = cfg.with_(trials=trials)
    return cfg


def singular_energy_curve(cfg: ExperimentConfig, ks=None):
    """``(K, share)`` pairs for the noiseless map of ``cfg``'s scene, in linear power."""
    grid = cfg.grid
    z = noiseless_map(grid, cfg.geometry, Beamformer.omnidirectional(cfg.n_elements), cfg.power)
    lin = 10.0 ** (z / 10.0)
    ks = ks or range(1, min(grid.shape) + 1)
    return [(int(k), singular_energy(lin, int(k))) for k in ks]


# ---------------------------------------------------------------- runner


def _trial_jobs(cfg: ExperimentConfig):
    for m in cfg.methods:
        if m == "rbf_mc_fixed":
            for d in cfg.deltas:
                yield m, float(d)
        else:
            yield m, None


def run_trial(cfg: ExperimentConfig, base_map, rho, sigma, strategy, trial) -> list[MetricsRecord]:
    """Every method of ``cfg`` on one shadowing draw and one mask."""
    seed = cfg.base_seed + trial
    grid = cfg.grid
    truth = base_map
    if sigma > 0:
        truth = base_map + sigma * shadowing_rng(seed).standard_normal(grid.shape)
    mask = build_mask(grid, rho, strategy, seed=MASK_SEED_OFFSET + seed, mu=cfg.mu)
    mu = cfg.mu if strategy == "mulaw" else None

    prior = None
    records = []
    for method, delta in _trial_jobs(cfg):
        t0 = time.perf_counter()
        try:
            if method == "rbf_mc_fixed":
                if prior is None:
                    prior = interpolate_map(mask, truth, grid, cfg.epsilon)
                rec = reconstruct_rbf_mc(mask, truth, grid, cfg.epsilon, delta, cfg.solver, prior=prior)
            else:
                rec = reconstruct(method, mask, truth, grid, epsilon=cfg.epsilon, solver=cfg.solver)
            err = nmse(truth, rec.estimate)
            records.append(
                MetricsRecord(method, rho, sigma, strategy, mu, seed, err, time.perf_counter() - t0,
                              rec.delta if delta is None else delta, rec.iterations, rec.converged)
            )
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("trial %d method %s failed: %s", trial, method, exc)
            records.append(
                MetricsRecord(method, rho, sigma, strategy, mu, seed, float("nan"), time.perf_counter() - t0,
                              delta, None, None, f"{type(exc).__name__}: {exc}")
            )
    return records


def _run_point(args):
    cfg, base, rho, sigma, strategy, t = args
    return run_trial(cfg, base, rho, sigma, strategy, t)


def run_experiment(cfg: ExperimentConfig, progress=None, workers: int = 1) -> list[MetricsRecord]:
    """Run all sweep points and trials; records come back sorted by (point, method, seed).

    Failed method runs are kept as records with ``nmse = nan`` and an error
    message.  Raises ``RuntimeError`` only if every run failed.  With
    ``workers > 1`` trials run in a process pool; every trial owns its seeds,
    so the records are identical to a serial run.
    """
    if workers < 1:
        raise InvalidArgumentError("workers must be >= 1")
    grid = cfg.grid
    base = noiseless_map(grid, cfg.geometry, Beamformer.omnidirectional(cfg.n_elements), cfg.power)
    jobs = [
        (cfg, base, rho, sigma, strategy, t)
        for rho in cfg.rhos
        for sigma in cfg.sigmas
        for strategy in cfg.strategies
        for t in range(cfg.trials)
    ]
    records = []
    if workers == 1:
        results = map(_run_point, jobs)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_run_point, jobs)
    try:
        for job, recs in zip(jobs, results):
            records.extend(recs)
            if progress is not None:
                progress(*job[2:])
    finally:
        if workers > 1:
            pool.shutdown()
    if records and all(r.error is not None for r in records):
        raise RuntimeError(f"all runs of experiment {cfg.name!r} failed")
    records.sort(key=MetricsRecord.sort_key)
    return records


def summarize(records, by=("method", "rho", "sigma", "strategy", "delta")):
    """Mean NMSE per group, skipping failed runs.  Returns a dict keyed by tuples."""
    groups: dict = {}
    for r in records:
        if r.error is not None or np.isnan(r.nmse):
            continue
        key = tuple(getattr(r, k) for k in by)
        groups.setdefault(key, []).append(r.nmse)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items(), key=lambda kv: str(kv[0]))}
