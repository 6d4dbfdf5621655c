"""Maximum simulated likelihood estimation, robust covariance, and WTP.

The optimizer runs BFGS on the negative simulated log-likelihood.  Scale
parameters and threshold spacings are optimized through a log transform
so they stay strictly positive without box constraints.  Draws are
generated once per run (common random numbers), keeping the objective
smooth in the parameters.

Standard errors use the sandwich H^-1 B H^-1 where H is a central
finite-difference Hessian of the total log-likelihood (differentiating
the analytic gradient) and B sums per-respondent score outer products.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .dataio import write_json
from .draws import DrawMatrix, generate_draws
from .model import (
    COST_SCALE,
    DrawConfig,
    PARAM_NAMES,
    POSITIVE_PARAM_NAMES,
    ParameterSet,
    TIME_SCALE,
    ValidationError,
)
from .likelihood import (
    PARAM_INDEX,
    PreparedData,
    pack_parameters,
    prepare_data,
    respondent_log_probabilities,
    unpack_parameters,
)

_POSITIVE_MASK = np.array([name in POSITIVE_PARAM_NAMES for name in PARAM_NAMES])
# exp() argument clamp: keeps trial points finite if a line search overshoots
_THETA_CLIP = 50.0


class SingularHessianError(RuntimeError):
    """Raised when the Hessian has (near-)zero eigenvalues.

    ``directions`` lists, per offending eigenvalue, the parameter names
    carrying the largest weight in its eigenvector.
    """

    def __init__(self, directions: list[tuple[float, tuple[str, ...]]]):
        self.directions = directions
        lines = ", ".join(
            f"eigenvalue {val:.3e} along ({', '.join(names)})" for val, names in directions)
        super().__init__(f"Hessian is singular or near-singular: {lines}")

    @property
    def parameter_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for _, names in self.directions:
            for name in names:
                seen.setdefault(name)
        return tuple(seen)


def to_optimizer_space(natural: np.ndarray) -> np.ndarray:
    """Natural parameter vector -> unconstrained optimizer vector."""
    theta = natural.astype(np.float64).copy()
    if np.any(natural[_POSITIVE_MASK] <= 0):
        bad = [PARAM_NAMES[i] for i in np.nonzero(_POSITIVE_MASK & (natural <= 0))[0]]
        raise ValidationError(f"positive-constrained parameters must be > 0: {bad}")
    theta[_POSITIVE_MASK] = np.log(natural[_POSITIVE_MASK])
    return theta


def from_optimizer_space(theta: np.ndarray) -> np.ndarray:
    natural = theta.astype(np.float64).copy()
    clipped = np.clip(theta[_POSITIVE_MASK], -_THETA_CLIP, _THETA_CLIP)
    natural[_POSITIVE_MASK] = np.exp(clipped)
    return natural


def default_initial_parameters() -> ParameterSet:
    """Cold-start point: zero coefficients, unit-ish positive scales."""
    values = dict.fromkeys(PARAM_NAMES, 0.0)
    for name in POSITIVE_PARAM_NAMES:
        values[name] = 1.0
    values["sigma_alpha"] = 0.5
    values["sigma_structural"] = 0.5
    return ParameterSet(values)


@dataclass(frozen=True)
class EstimationConfig:
    """Optimization settings; ``draws`` fixes the simulation draws."""

    draws: DrawConfig
    tol: float = 1e-4
    max_iter: int = 500
    n_threads: int = 1
    include_measurement: bool = True
    compute_covariance: bool = True
    chunk_size: int = 64
    trace: bool = False


@dataclass(frozen=True)
class EstimationResult:
    """Point estimates with robust inference and fit statistics."""

    estimates: ParameterSet
    robust_se: dict[str, float]
    robust_t: dict[str, float]
    ll_final: float
    ll_null_choice: float
    ll_null_joint: float
    converged: bool
    iterations: int
    n_respondents: int
    n_tasks: int
    draw_config: DrawConfig
    non_identified: tuple[str, ...] = ()
    ll_trace: tuple[float, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "estimates": self.estimates.as_dict(),
            "robust_se": dict(self.robust_se),
            "robust_t": dict(self.robust_t),
            "non_identified": list(self.non_identified),
            "fit": {
                "ll_final": self.ll_final,
                "ll_null_choice": self.ll_null_choice,
                "ll_null_joint": self.ll_null_joint,
                "converged": self.converged,
                "iterations": self.iterations,
                "n_respondents": self.n_respondents,
                "n_tasks": self.n_tasks,
            },
            "draws": {
                "n_draws": self.draw_config.n_draws,
                "scheme": self.draw_config.scheme,
                "seed": self.draw_config.seed,
            },
        }


def write_estimates(result: EstimationResult, path: str | Path) -> None:
    write_json(result.to_json_dict(), path)


def read_estimates(path: str | Path) -> EstimationResult:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    fit = doc["fit"]
    dc = doc["draws"]
    return EstimationResult(
        estimates=ParameterSet.from_dict(doc["estimates"]),
        robust_se={k: float(v) for k, v in doc["robust_se"].items()},
        robust_t={k: float(v) for k, v in doc["robust_t"].items()},
        non_identified=tuple(doc.get("non_identified", [])),
        ll_final=float(fit["ll_final"]),
        ll_null_choice=float(fit["ll_null_choice"]),
        ll_null_joint=float(fit["ll_null_joint"]),
        converged=bool(fit["converged"]),
        iterations=int(fit["iterations"]),
        n_respondents=int(fit["n_respondents"]),
        n_tasks=int(fit["n_tasks"]),
        draw_config=DrawConfig(int(dc["n_draws"]), str(dc["scheme"]), int(dc["seed"])),
    )


# --- numeric helpers ----------------------------------------------------------

def finite_difference_gradient(fun, x: np.ndarray, rel_step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient with per-coordinate step h = s*(1+|x_k|)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for k in range(len(x)):
        h = rel_step * (1.0 + abs(x[k]))
        xp = x.copy(); xp[k] += h
        xm = x.copy(); xm[k] -= h
        grad[k] = (fun(xp) - fun(xm)) / (2.0 * h)
    return grad


def finite_difference_hessian(grad_fun, x: np.ndarray,
                              rel_step: float = 1e-5) -> np.ndarray:
    """Symmetrized central-difference Jacobian of a gradient function."""
    x = np.asarray(x, dtype=np.float64)
    p = len(x)
    hess = np.zeros((p, p))
    for k in range(p):
        h = rel_step * (1.0 + abs(x[k]))
        xp = x.copy(); xp[k] += h
        xm = x.copy(); xm[k] -= h
        hess[:, k] = (grad_fun(xp) - grad_fun(xm)) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def sandwich_covariance(hessian: np.ndarray, scores: np.ndarray,
                        singular_rtol: float = 1e-8) -> np.ndarray:
    """H^-1 (sum_q s_q s_q^T) H^-1 via eigendecomposition of H."""
    eigvals, eigvecs = np.linalg.eigh(hessian)
    scale = np.max(np.abs(eigvals)) if len(eigvals) else 0.0
    bad = np.abs(eigvals) <= singular_rtol * max(scale, 1e-300)
    if scale == 0.0 or np.any(bad):
        directions = []
        for idx in np.nonzero(bad if scale else np.ones(len(eigvals), bool))[0]:
            vec = np.abs(eigvecs[:, idx])
            loaded = [PARAM_NAMES[i] for i in np.argsort(-vec)[:4] if vec[i] >= 0.15]
            directions.append((float(eigvals[idx]), tuple(loaded or
                                                          [PARAM_NAMES[int(np.argmax(vec))]])))
        raise SingularHessianError(directions)
    hinv = (eigvecs / eigvals) @ eigvecs.T
    bmat = scores.T @ scores
    return hinv @ bmat @ hinv


# --- covariance / inference ----------------------------------------------------

@dataclass(frozen=True)
class CovarianceResult:
    """Robust covariance with per-parameter standard errors and t-ratios."""

    covariance: np.ndarray
    robust_se: dict[str, float]
    robust_t: dict[str, float]


def _resolve_draws(draws: DrawMatrix | DrawConfig, n_respondents: int) -> DrawMatrix:
    if isinstance(draws, DrawConfig):
        return generate_draws(draws, n_respondents)
    return draws


def _covariance_at(pv: np.ndarray, data: PreparedData, draws: DrawMatrix,
                   include_measurement: bool, n_threads: int) -> CovarianceResult:
    _, scores = respondent_log_probabilities(
        pv, data, draws.values, include_measurement, with_scores=True,
        n_threads=n_threads)

    def grad(v: np.ndarray) -> np.ndarray:
        _, sc = respondent_log_probabilities(
            v, data, draws.values, include_measurement, with_scores=True,
            n_threads=n_threads)
        return sc.sum(axis=0)

    hessian = finite_difference_hessian(grad, pv)
    cov = sandwich_covariance(hessian, scores)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    robust_se = {name: float(se[i]) for name, i in PARAM_INDEX.items()}
    robust_t = {name: (float(pv[i] / se[i]) if se[i] > 0 else math.nan)
                for name, i in PARAM_INDEX.items()}
    return CovarianceResult(cov, robust_se, robust_t)


def robust_covariance(dataset, estimates: ParameterSet,
                      draws: DrawMatrix | DrawConfig,
                      include_measurement: bool = True,
                      n_threads: int = 1) -> CovarianceResult:
    """Sandwich covariance of the estimates on the given dataset."""
    data = prepare_data(dataset)
    dm = _resolve_draws(draws, data.n_respondents)
    return _covariance_at(pack_parameters(estimates), data, dm,
                          include_measurement, n_threads)


# --- estimation ----------------------------------------------------------------

def maximize_likelihood(dataset, init: ParameterSet | None = None,
                        config: EstimationConfig | None = None) -> EstimationResult:
    """Fit the hybrid model by maximum simulated likelihood.

    Convergence means the gradient max-norm (in optimizer space) fell
    below ``config.tol``; otherwise the best iterate is returned with
    ``converged=False``.
    """
    if config is None:
        config = EstimationConfig(draws=DrawConfig(500, "halton", 0))
    if init is None:
        init = default_initial_parameters()
    data = prepare_data(dataset)
    if data.n_respondents == 0:
        raise ValidationError("cannot estimate on an empty dataset")
    dm = _resolve_draws(config.draws, data.n_respondents)
    theta0 = to_optimizer_space(pack_parameters(init))

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        natural = from_optimizer_space(theta)
        logprob, scores = respondent_log_probabilities(
            natural, data, dm.values, config.include_measurement,
            with_scores=True, chunk_size=config.chunk_size,
            n_threads=config.n_threads)
        grad_natural = scores.sum(axis=0)
        grad_theta = grad_natural.copy()
        grad_theta[_POSITIVE_MASK] *= natural[_POSITIVE_MASK]
        return -float(np.sum(logprob)), -grad_theta

    f0, _ = objective(theta0)
    if not math.isfinite(f0):
        raise ValidationError(
            f"log-likelihood is not finite at the initial point (got {-f0}); "
            "check the starting values and the dataset")

    trace: list[float] = []
    callback = None
    if config.trace:
        def callback(theta):
            trace.append(-objective(theta)[0])

    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Desired error not necessarily")
        res = minimize(objective, theta0, jac=True, method="BFGS",
                       callback=callback,
                       options={"gtol": config.tol, "maxiter": config.max_iter})

    natural = from_optimizer_space(res.x)
    estimates = unpack_parameters(natural)
    ll_final = -float(res.fun)
    converged = bool(np.max(np.abs(res.jac)) < config.tol)

    n, t = data.n_respondents, data.n_tasks
    null_vec = pack_parameters(ParameterSet.null_point())
    null_lp, _ = respondent_log_probabilities(
        null_vec, data, dm.values, config.include_measurement,
        chunk_size=config.chunk_size, n_threads=config.n_threads)
    ll_null_choice = n * t * math.log(1.0 / 3.0)
    ll_null_joint = float(np.sum(null_lp))

    robust_se: dict[str, float] = {}
    robust_t: dict[str, float] = {}
    non_identified: tuple[str, ...] = ()
    if config.compute_covariance:
        try:
            covres = _covariance_at(natural, data, dm,
                                    config.include_measurement, config.n_threads)
            robust_se, robust_t = covres.robust_se, covres.robust_t
        except SingularHessianError as exc:
            non_identified = exc.parameter_names
            warnings.warn(f"covariance unavailable: {exc}", RuntimeWarning,
                          stacklevel=2)

    return EstimationResult(
        estimates=estimates, robust_se=robust_se, robust_t=robust_t,
        ll_final=ll_final, ll_null_choice=ll_null_choice,
        ll_null_joint=ll_null_joint, converged=converged,
        iterations=int(res.nit), n_respondents=n, n_tasks=t,
        draw_config=dm.config, non_identified=non_identified,
        ll_trace=tuple(trace))


def compute_wtp(estimates: ParameterSet, channel: str) -> float:
    """Willingness to pay, UAH per hour, for a delivery channel (CS or CC).

    The time coefficient multiplies hours/10 and the cost coefficient
    UAH/100, so the marginal rate of substitution carries a factor
    100/10 = 10.
    """
    if channel not in ("CS", "CC"):
        raise ValidationError(f"unknown channel {channel!r}; expected CS or CC")
    beta_time = estimates[f"beta_time_{channel.lower()}"]
    beta_cost = estimates[f"beta_cost_{channel.lower()}"]
    if beta_cost == 0:
        raise ZeroDivisionError(
            f"cost coefficient for {channel} is zero; WTP is undefined")
    return (beta_time / beta_cost) * (COST_SCALE / TIME_SCALE)
