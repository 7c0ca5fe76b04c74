"""Contact-parameter identification from measured impulses.

The objective for a trial batch is the summed l2 norm between measured and
predicted impulses over (mu, epsilon).  The landscape is piecewise smooth
(contact-mode switches), so fitting uses a coarse grid followed by a
Nelder-Mead polish from the best cell.  Bootstrap statistics come from
repeated fits on subsets drawn without replacement.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .dynamics import ImpactTrial, contact_velocity, measured_impulse
from .errors import ImpactLabError
from .models import MU_MAX, ImpactContext, ModelId, ModelParams, _predict_capped, make_context

DEFAULT_BOUNDS = ((0.0, MU_MAX), (0.0, 1.0))
FLAT_MU_TOL = 1e-10


@dataclass(frozen=True)
class FitConfig:
    """Bootstrap-fit settings: k trials per fit, m fit iterations."""

    k: int
    m: int
    bounds: tuple[tuple[float, float], tuple[float, float]] = DEFAULT_BOUNDS
    grid_shape: tuple[int, int] = (64, 64)
    polish: bool = True
    polish_xatol: float = 1e-9
    polish_maxiter: int = 600
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.m < 1:
            raise ValueError("m must be at least 1")


@dataclass(frozen=True)
class BatchFit:
    """Result of one batch fit."""

    params: ModelParams
    objective: float
    mu_flat: bool  # objective insensitive to mu at the optimum


@dataclass
class FitResult:
    """Bootstrap aggregate: mean and standard deviation of the fitted pair."""

    model: ModelId
    mean: ModelParams
    std: tuple[float, float]
    iterations: list[BatchFit]
    k: int

    def to_json_dict(self) -> dict:
        return {
            "model": self.model.value,
            "mu": self.mean.mu,
            "mu_std": self.std[0],
            "epsilon": self.mean.epsilon,
            "epsilon_std": self.std[1],
            "k": self.k,
            "m": len(self.iterations),
            "iterations": [
                {"mu": b.params.mu, "epsilon": b.params.epsilon, "objective": b.objective}
                for b in self.iterations
            ],
        }


def _validate_trials(trials: list[ImpactTrial]):
    bad = [
        t.trial_id
        for t in trials
        if not contact_velocity(t.contact, t.state_pre.v)[1] < 0
    ]
    if bad:
        raise ImpactLabError(f"trials not impact-valid (non-approaching): {bad}")


def _grid_axes(bounds, grid_shape):
    (mu_lo, mu_hi), (eps_lo, eps_hi) = bounds
    return (
        np.linspace(mu_lo, mu_hi, grid_shape[0]),
        np.linspace(eps_lo, eps_hi, grid_shape[1]),
    )


class PredictionGrid:
    """Cached per-trial impulse-error norms on a (mu, epsilon) grid.

    Builds every (trial, cell) prediction once so that repeated subset fits
    (bootstrap, convergence curves, per-trial fits) reuse them.
    """

    def __init__(self, model: ModelId, trials: list[ImpactTrial], bounds, grid_shape, threads=1):
        self.model = model
        self.trials = trials
        self.mu_axis, self.eps_axis = _grid_axes(bounds, grid_shape)
        self.contexts = [make_context(t.body, t.contact, t.state_pre.v) for t in trials]
        self.measured = np.array([measured_impulse(t) for t in trials])

        def norms_for(i: int) -> np.ndarray:
            ctx = self.contexts[i]
            p_t, p_n = self.measured[i]
            out = np.empty((len(self.mu_axis), len(self.eps_axis)))
            for a, mu in enumerate(self.mu_axis):
                for b, eps in enumerate(self.eps_axis):
                    qt, qn = _predict_capped(model, ctx, mu, eps)
                    out[a, b] = math.hypot(qt - p_t, qn - p_n)
            return out

        idx = range(len(trials))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(norms_for, idx))
        else:
            rows = [norms_for(i) for i in idx]
        self.norms = np.stack(rows) if rows else np.zeros((0, *grid_shape))

    def objective_surface(self, indices: np.ndarray) -> np.ndarray:
        return self.norms[indices].sum(axis=0)

    def best_cell(self, indices: np.ndarray) -> tuple[float, float, float, bool]:
        """(mu, eps, objective, mu_flat) at the grid minimum; ties favor small mu."""
        surface = self.objective_surface(indices)
        flat_idx = int(np.argmin(surface))  # C order: smallest mu, then smallest eps
        a, b = np.unravel_index(flat_idx, surface.shape)
        mu_col = surface[:, b]
        mu_flat = float(mu_col.max() - mu_col.min()) < FLAT_MU_TOL
        return float(self.mu_axis[a]), float(self.eps_axis[b]), float(surface[a, b]), mu_flat


def batch_objective(
    model: ModelId,
    contexts: list[ImpactContext],
    measured: np.ndarray,
    mu: float,
    eps: float,
) -> float:
    total = 0.0
    for ctx, (p_t, p_n) in zip(contexts, measured):
        q_t, q_n = _predict_capped(model, ctx, mu, eps)
        total += math.hypot(q_t - p_t, q_n - p_n)
    return total


def _polish(model, contexts, measured, x0, bounds, xatol, maxiter):
    (mu_lo, mu_hi), (eps_lo, eps_hi) = bounds

    def fun(x):
        mu = min(max(x[0], mu_lo), mu_hi)
        eps = min(max(x[1], eps_lo), eps_hi)
        return batch_objective(model, contexts, measured, mu, eps)

    res = minimize(
        fun,
        np.asarray(x0),
        method="Nelder-Mead",
        bounds=[(mu_lo, mu_hi), (eps_lo, eps_hi)],
        options={"xatol": xatol, "fatol": 1e-13, "maxiter": maxiter},
    )
    mu = min(max(res.x[0], mu_lo), mu_hi)
    eps = min(max(res.x[1], eps_lo), eps_hi)
    return mu, eps, float(res.fun)


def fit_batch(
    model: ModelId,
    trials: list[ImpactTrial],
    bounds=DEFAULT_BOUNDS,
    grid_shape=(64, 64),
    polish: bool = True,
    polish_xatol: float = 1e-9,
    polish_maxiter: int = 600,
    _grid: PredictionGrid | None = None,
    _indices: np.ndarray | None = None,
) -> BatchFit:
    """Fit (mu, epsilon) minimizing the summed impulse-error norm on one batch."""
    if not trials:
        raise ValueError("fit_batch needs at least one trial")
    _validate_trials(trials)
    if _grid is None:
        _grid = PredictionGrid(model, trials, bounds, grid_shape)
        _indices = np.arange(len(trials))
    mu0, eps0, obj0, mu_flat = _grid.best_cell(_indices)
    if not polish:
        return BatchFit(ModelParams(mu0, eps0), obj0, mu_flat)
    contexts = [_grid.contexts[i] for i in _indices]
    measured = _grid.measured[_indices]
    mu, eps, obj = _polish(
        model, contexts, measured, (mu0, eps0), bounds, polish_xatol, polish_maxiter
    )
    if obj > obj0:  # the grid vertex dominates: keep it
        mu, eps, obj = mu0, eps0, obj0
    return BatchFit(ModelParams(mu, eps), obj, mu_flat)


def fit_bootstrap(model: ModelId, dataset: list[ImpactTrial], config: FitConfig) -> FitResult:
    """m independent batch fits on without-replacement k-subsets; mean/std aggregate."""
    if config.k > len(dataset):
        raise ValueError(f"k={config.k} exceeds dataset size {len(dataset)}")
    _validate_trials(dataset)
    grid = PredictionGrid(model, dataset, config.bounds, config.grid_shape, config.threads)
    rng = np.random.default_rng(config.seed)
    index_sets = [rng.choice(len(dataset), size=config.k, replace=False) for _ in range(config.m)]

    def one(idx):
        return fit_batch(
            model,
            [dataset[i] for i in idx],
            bounds=config.bounds,
            polish=config.polish,
            polish_xatol=config.polish_xatol,
            polish_maxiter=config.polish_maxiter,
            _grid=grid,
            _indices=idx,
        )

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            fits = list(pool.map(one, index_sets))
    else:
        fits = [one(idx) for idx in index_sets]
    mus = np.array([b.params.mu for b in fits])
    epss = np.array([b.params.epsilon for b in fits])
    mean = ModelParams(float(np.mean(mus)), float(np.mean(epss)))
    std = (float(np.std(mus)), float(np.std(epss)))
    return FitResult(model, mean, std, fits, config.k)


def convergence_curve(
    model: ModelId,
    dataset: list[ImpactTrial],
    k_values: list[int],
    m: int,
    config: FitConfig | None = None,
) -> list[FitResult]:
    """Bootstrap fits across batch sizes, sharing one prediction grid."""
    base = config or FitConfig(k=max(k_values), m=m)
    if max(k_values) > len(dataset):
        raise ValueError("largest k exceeds dataset size")
    results = []
    grid = PredictionGrid(model, dataset, base.bounds, base.grid_shape, base.threads)
    rng = np.random.default_rng(base.seed)
    for k in k_values:
        index_sets = [rng.choice(len(dataset), size=k, replace=False) for _ in range(m)]
        fits = [
            fit_batch(
                model,
                [dataset[i] for i in idx],
                bounds=base.bounds,
                polish=base.polish,
                polish_xatol=base.polish_xatol,
                polish_maxiter=base.polish_maxiter,
                _grid=grid,
                _indices=idx,
            )
            for idx in index_sets
        ]
        mus = np.array([b.params.mu for b in fits])
        epss = np.array([b.params.epsilon for b in fits])
        results.append(
            FitResult(
                model,
                ModelParams(float(np.mean(mus)), float(np.mean(epss))),
                (float(np.std(mus)), float(np.std(epss))),
                fits,
                k,
            )
        )
    return results


@dataclass(frozen=True)
class TrialFit:
    trial_id: int
    params: ModelParams
    residual: float
    mu_flat: bool


def fit_per_trial(
    model: ModelId,
    dataset: list[ImpactTrial],
    bounds=DEFAULT_BOUNDS,
    grid_shape=(64, 64),
    polish: bool = True,
    threads: int = 1,
) -> list[TrialFit]:
    """Optimal (mu, epsilon) and attained impulse error for every single trial."""
    if not dataset:
        raise ValueError("fit_per_trial needs a nonempty dataset")
    _validate_trials(dataset)
    grid = PredictionGrid(model, dataset, bounds, grid_shape, threads)

    def one(i):
        fit = fit_batch(
            model,
            [dataset[i]],
            bounds=bounds,
            polish=polish,
            _grid=grid,
            _indices=np.array([i]),
        )
        return TrialFit(dataset[i].trial_id, fit.params, fit.objective, fit.mu_flat)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(len(dataset))))
    return [one(i) for i in range(len(dataset))]


def objective_surface(
    model: ModelId,
    trials: list[ImpactTrial],
    bounds=DEFAULT_BOUNDS,
    grid_shape=(64, 64),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mu_axis, eps_axis, objective matrix) over the parameter box."""
    _validate_trials(trials)
    grid = PredictionGrid(model, trials, bounds, grid_shape)
    return grid.mu_axis, grid.eps_axis, grid.objective_surface(np.arange(len(trials)))


def surface_to_csv(path: str | Path, mu_axis, eps_axis, surface) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mu", "epsilon", "objective"])
        for a, mu in enumerate(mu_axis):
            for b, eps in enumerate(eps_axis):
                writer.writerow([repr(float(mu)), repr(float(eps)), repr(float(surface[a, b]))])


def save_fit_results(path: str | Path, results: list[FitResult]) -> None:
    payload = {"schema": "impactlab-fit-v1", "fits": [r.to_json_dict() for r in results]}
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True))


def load_fit_results(path: str | Path) -> dict[ModelId, ModelParams]:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != "impactlab-fit-v1":
        raise ImpactLabError(f"unrecognized fit file schema in {path}")
    return {
        ModelId(row["model"]): ModelParams(row["mu"], row["epsilon"]) for row in doc["fits"]
    }
