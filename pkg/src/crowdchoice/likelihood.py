"""Simulated likelihood of the hybrid panel choice model.

The model combines three blocks sharing one latent variable per
respondent: a structural equation (latent variable on covariates plus
normal noise), ordered-probit measurement equations for six Likert
indicators, and a three-alternative logit kernel with an agent effect on
the crowd-shipping utility inducing panel correlation.

Per respondent the simulated probability averages, over R draws of the
structural noise and the agent effect, the product of the nine task
choice probabilities and the six indicator probabilities.  Everything is
accumulated in log space with log-sum-exp over draws, so probabilities
never collapse to exact zero.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import log_ndtr, ndtr

from .draws import DrawMatrix, generate_draws
from .model import (
    ALTERNATIVES,
    Dataset,
    DrawConfig,
    MEASUREMENT_STATEMENTS,
    PARAM_NAMES,
    ParameterSet,
    RespondentRecord,
    STRUCTURAL_PARAM_NAMES,
    ValidationError,
    scale_covariates,
    structural_covariates,
)

PARAM_INDEX = {name: i for i, name in enumerate(PARAM_NAMES)}
N_PARAMS = len(PARAM_NAMES)

_STRUCT_COVARIATE_NAMES = STRUCTURAL_PARAM_NAMES[1:-1]
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# d(tau)/d(delta) by observed score 1..5 (index 0 unused) for the lower and
# upper cut of the score's bin; infinite cuts contribute zero.
_DTAU_LO_D1 = np.array([0.0, 0.0, -1.0, -1.0, 1.0, 1.0])
_DTAU_HI_D1 = np.array([0.0, -1.0, -1.0, 1.0, 1.0, 0.0])
_DTAU_LO_D2 = np.array([0.0, 0.0, -1.0, 0.0, 0.0, 1.0])
_DTAU_HI_D2 = np.array([0.0, -1.0, 0.0, 0.0, 1.0, 0.0])


def pack_parameters(params: ParameterSet) -> np.ndarray:
    """Flatten a parameter set into the canonical PARAM_NAMES order."""
    return np.array([params[name] for name in PARAM_NAMES], dtype=np.float64)


def unpack_parameters(vector: np.ndarray) -> ParameterSet:
    if len(vector) != N_PARAMS:
        raise ValidationError(f"expected {N_PARAMS} parameters, got {len(vector)}")
    return ParameterSet({name: float(v) for name, v in zip(PARAM_NAMES, vector)})


@dataclass(frozen=True)
class ThresholdVector:
    """Symmetric ordered-probit cutpoints derived from two spacings."""

    tau1: float
    tau2: float
    tau3: float
    tau4: float

    def __post_init__(self):
        if not (self.tau1 < self.tau2 < self.tau3 < self.tau4):
            raise ValidationError("thresholds must be strictly increasing")

    @classmethod
    def from_deltas(cls, delta_1: float, delta_2: float) -> "ThresholdVector":
        if delta_1 <= 0 or delta_2 <= 0:
            raise ValidationError("threshold spacings must be strictly positive")
        return cls(-delta_1 - delta_2, -delta_1, delta_1, delta_1 + delta_2)

    def as_array(self) -> np.ndarray:
        """Cut bounds including the infinite ends: [-inf, t1..t4, +inf]."""
        return np.array([-np.inf, self.tau1, self.tau2, self.tau3, self.tau4, np.inf])


# --- scalar operations -------------------------------------------------------

def structural_value(record: RespondentRecord, params: ParameterSet,
                     eps_draw: float) -> float:
    """Latent-variable value for one respondent at one structural draw."""
    value = params["beta0_structural"]
    for name, x in structural_covariates(record).items():
        value += params[name] * x
    return value + params["sigma_structural"] * eps_draw


def ordered_indicator_prob(lv: float, beta0: float, beta: float, sigma: float,
                           thresholds: ThresholdVector) -> np.ndarray:
    """Probabilities of the five Likert scores for one statement."""
    if sigma <= 0:
        raise ValidationError("measurement scale must be strictly positive")
    m = beta0 + beta * lv
    z = (thresholds.as_array() - m) / sigma
    cdf = ndtr(z)
    return np.diff(cdf)


def task_utilities(task, record, lv: float, alpha: float,
                   params: ParameterSet) -> tuple[float, float, float]:
    """Systematic utilities (U_CS, U_CC, U_STORE) for one task.

    ``task`` and ``record`` may be any objects exposing the relevant
    attribute fields; production code passes ChoiceTask/RespondentRecord.
    """
    f = scale_covariates(record, task)
    u_cs = (params["ASC_CS"] + params["beta_cost_cs"] * f.cost_cs
            + params["beta_time_cs"] * f.time_cs
            + params["beta_co2"] * f.co2_income
            + params["beta_flex"] * f.flex_income
            + params["beta_lv"] * lv + params["sigma_alpha"] * alpha)
    u_cc = params["beta_cost_cc"] * f.cost_cc + params["beta_time_cc"] * f.time_cc
    u_store = params["ASC_STORE"] + params["beta_children"] * f.n_children
    return u_cs, u_cc, u_store


def logit_choice_prob(utilities: Sequence[float], chosen: str) -> float:
    """Multinomial logit probability of the chosen alternative."""
    utilities = np.asarray(utilities, dtype=np.float64)
    if utilities.shape != (3,) or not np.all(np.isfinite(utilities)):
        raise ValidationError("expected 3 finite utilities")
    shifted = utilities - utilities.max()
    expu = np.exp(shifted)
    return float(expu[ALTERNATIVES.index(chosen)] / expu.sum())


# --- prepared arrays ---------------------------------------------------------

@dataclass(frozen=True)
class PreparedData:
    """Dataset rearranged into dense arrays sorted by respondent id."""

    ids: tuple[str, ...]
    cost_cs: np.ndarray      # (N, T) scaled
    time_cs: np.ndarray      # (N, T) scaled
    co2_inc: np.ndarray      # (N, T) co2 dummy x scaled income
    flex_inc: np.ndarray     # (N, T)
    cost_cc: np.ndarray      # (N, T) scaled
    time_cc: np.ndarray      # (N, T) scaled
    chosen: np.ndarray       # (N, T) int: 0=CS, 1=CC, 2=STORE
    children: np.ndarray     # (N,)
    zmat: np.ndarray         # (N, 7) structural covariates
    likert_obs: np.ndarray   # (N, W) observed scores 1..5

    @property
    def n_respondents(self) -> int:
        return len(self.ids)

    @property
    def n_tasks(self) -> int:
        return self.chosen.shape[1]


def _prepare(records: Sequence[RespondentRecord],
             tasks_by_record: Sequence[Sequence]) -> PreparedData:
    n = len(records)
    t = len(tasks_by_record[0]) if n else 0
    shape = (n, t)
    cost_cs = np.zeros(shape); time_cs = np.zeros(shape)
    co2_inc = np.zeros(shape); flex_inc = np.zeros(shape)
    cost_cc = np.zeros(shape); time_cc = np.zeros(shape)
    chosen = np.zeros(shape, dtype=np.int64)
    children = np.zeros(n)
    zmat = np.zeros((n, len(_STRUCT_COVARIATE_NAMES)))
    likert_obs = np.zeros((n, len(MEASUREMENT_STATEMENTS)), dtype=np.int64)
    for q, (rec, tasks) in enumerate(zip(records, tasks_by_record)):
        for j, task in enumerate(tasks):
            f = scale_covariates(rec, task)
            cost_cs[q, j] = f.cost_cs
            time_cs[q, j] = f.time_cs
            co2_inc[q, j] = f.co2_income
            flex_inc[q, j] = f.flex_income
            cost_cc[q, j] = f.cost_cc
            time_cc[q, j] = f.time_cc
        chosen[q] = [ALTERNATIVES.index(c) for c in rec.choices]
        children[q] = rec.n_children
        covs = structural_covariates(rec)
        zmat[q] = [covs[name] for name in _STRUCT_COVARIATE_NAMES]
        likert_obs[q] = [rec.likert[w] for w in MEASUREMENT_STATEMENTS]
    return PreparedData(tuple(r.id for r in records), cost_cs, time_cs, co2_inc,
                        flex_inc, cost_cc, time_cc, chosen, children, zmat,
                        likert_obs)


def prepare_data(dataset: Dataset) -> PreparedData:
    """Arrays for the full dataset, in sorted respondent-id order."""
    records = sorted(dataset.respondents, key=lambda r: r.id)
    blocks = {b: dataset.block_tasks(b) for b in {r.block_id for r in records}}
    for block_id, tasks in blocks.items():
        if records and len(tasks) != len(records[0].choices):
            raise ValidationError(
                f"block {block_id} has {len(tasks)} tasks, "
                f"choice sequences have {len(records[0].choices)}")
    return _prepare(records, [blocks[r.block_id] for r in records])


# --- vectorized log-likelihood core ------------------------------------------

def _log_normal_cdf_diff(z_lo: np.ndarray, z_hi: np.ndarray) -> np.ndarray:
    """log(Phi(z_hi) - Phi(z_lo)) computed in the accurate tail."""
    flip = z_lo > 0
    lo = np.where(flip, -z_hi, z_lo)
    hi = np.where(flip, -z_lo, z_hi)
    log_hi = log_ndtr(hi)
    log_lo = log_ndtr(lo)
    with np.errstate(divide="ignore"):
        return log_hi + np.log1p(-np.exp(log_lo - log_hi))


def _chunk_loglik(pv: np.ndarray, data: PreparedData, draws: np.ndarray,
                  include_measurement: bool, with_scores: bool,
                  sl: slice) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Log simulated probability (and scores) for a respondent slice."""
    p = {name: pv[i] for name, i in PARAM_INDEX.items()}
    eps = draws[sl, :, 0]
    alpha = draws[sl, :, 1]
    zmat = data.zmat[sl]
    children = data.children[sl]
    chosen = data.chosen[sl]

    struct_betas = np.array([p[name] for name in _STRUCT_COVARIATE_NAMES])
    lv_det = p["beta0_structural"] + zmat @ struct_betas          # (C,)
    lv = lv_det[:, None] + p["sigma_structural"] * eps            # (C, R)

    v_cs_base = (p["ASC_CS"] + p["beta_cost_cs"] * data.cost_cs[sl]
                 + p["beta_time_cs"] * data.time_cs[sl]
                 + p["beta_co2"] * data.co2_inc[sl]
                 + p["beta_flex"] * data.flex_inc[sl])            # (C, T)
    v_cc = (p["beta_cost_cc"] * data.cost_cc[sl]
            + p["beta_time_cc"] * data.time_cc[sl])               # (C, T)
    v_store = p["ASC_STORE"] + p["beta_children"] * children      # (C,)

    shift = p["beta_lv"] * lv + p["sigma_alpha"] * alpha          # (C, R)
    v_cs = v_cs_base[:, :, None] + shift[:, None, :]              # (C, T, R)
    v_cc3 = v_cc[:, :, None]
    v_st3 = v_store[:, None, None]

    vmax = np.maximum(v_cs, np.maximum(v_cc3, v_st3))
    e_cs = np.exp(v_cs - vmax)
    e_cc = np.exp(v_cc3 - vmax)
    e_st = np.exp(v_st3 - vmax)
    denom = e_cs + e_cc + e_st

    is_cs = (chosen == 0)[:, :, None]
    is_cc = (chosen == 1)[:, :, None]
    v_chosen = np.where(is_cs, v_cs, np.where(is_cc, v_cc3, v_st3))
    loglik = (v_chosen - vmax - np.log(denom)).sum(axis=1)        # (C, R)

    meas = []
    if include_measurement:
        taus = ThresholdVector.from_deltas(p["delta_1"], p["delta_2"]).as_array()
        for k, w in enumerate(MEASUREMENT_STATEMENTS):
            sigma = p[f"sigma_{w}"]
            if sigma <= 0:
                raise ValidationError(f"sigma_{w} must be strictly positive")
            scores_w = data.likert_obs[sl, k]                     # (C,)
            m = p[f"beta0_{w}"] + p[f"beta_{w}"] * lv             # (C, R)
            z_lo = (taus[scores_w - 1][:, None] - m) / sigma
            z_hi = (taus[scores_w][:, None] - m) / sigma
            logp_w = _log_normal_cdf_diff(z_lo, z_hi)
            loglik = loglik + logp_w
            if with_scores:
                meas.append((w, scores_w, m, z_lo, z_hi, logp_w, sigma))

    lmax = loglik.max(axis=1, keepdims=True)
    sumexp = np.exp(loglik - lmax).sum(axis=1)
    n_draws = loglik.shape[1]
    logprob = lmax[:, 0] + np.log(sumexp) - math.log(n_draws)     # (C,)

    if not with_scores:
        return logprob, None

    weights = np.exp(loglik - lmax - np.log(sumexp)[:, None])     # (C, R)

    def wsum(x):
        return np.einsum("cr,cr->c", weights, x)

    p_cs = e_cs / denom
    p_cc = e_cc / denom
    p_st = e_st / denom
    resid_cs = is_cs - p_cs
    resid_cc = is_cc - p_cc
    resid_st = (chosen == 2)[:, :, None] - p_st
    a_cs = resid_cs.sum(axis=1)                                   # (C, R)
    a_st = resid_st.sum(axis=1)

    scores = np.zeros((logprob.shape[0], N_PARAMS))
    scores[:, PARAM_INDEX["ASC_CS"]] = wsum(a_cs)
    scores[:, PARAM_INDEX["ASC_STORE"]] = wsum(a_st)
    scores[:, PARAM_INDEX["beta_children"]] = wsum(a_st) * children
    scores[:, PARAM_INDEX["beta_co2"]] = wsum(
        np.einsum("ctr,ct->cr", resid_cs, data.co2_inc[sl]))
    scores[:, PARAM_INDEX["beta_cost_cc"]] = wsum(
        np.einsum("ctr,ct->cr", resid_cc, data.cost_cc[sl]))
    scores[:, PARAM_INDEX["beta_cost_cs"]] = wsum(
        np.einsum("ctr,ct->cr", resid_cs, data.cost_cs[sl]))
    scores[:, PARAM_INDEX["beta_flex"]] = wsum(
        np.einsum("ctr,ct->cr", resid_cs, data.flex_inc[sl]))
    scores[:, PARAM_INDEX["beta_time_cc"]] = wsum(
        np.einsum("ctr,ct->cr", resid_cc, data.time_cc[sl]))
    scores[:, PARAM_INDEX["beta_time_cs"]] = wsum(
        np.einsum("ctr,ct->cr", resid_cs, data.time_cs[sl]))
    scores[:, PARAM_INDEX["beta_lv"]] = wsum(a_cs * lv)
    scores[:, PARAM_INDEX["sigma_alpha"]] = wsum(a_cs * alpha)

    dlv = p["beta_lv"] * a_cs                                     # (C, R)
    for w, scores_w, m, z_lo, z_hi, logp_w, sigma in meas:
        # phi(z)/(sigma * P) ratios; infinite cuts contribute zero mass
        def ratio(z):
            logphi = -0.5 * z * z - _LOG_SQRT_2PI
            out = np.exp(logphi - logp_w) / sigma
            return np.where(np.isinf(z), 0.0, out)

        r_lo = ratio(z_lo)
        r_hi = ratio(z_hi)
        g_m = r_lo - r_hi
        zr_lo = np.where(np.isinf(z_lo), 0.0, z_lo) * r_lo
        zr_hi = np.where(np.isinf(z_hi), 0.0, z_hi) * r_hi
        scores[:, PARAM_INDEX[f"beta0_{w}"]] = wsum(g_m)
        scores[:, PARAM_INDEX[f"beta_{w}"]] = wsum(g_m * lv)
        scores[:, PARAM_INDEX[f"sigma_{w}"]] = wsum(zr_lo - zr_hi)
        scores[:, PARAM_INDEX["delta_1"]] += wsum(
            r_hi * _DTAU_HI_D1[scores_w][:, None] - r_lo * _DTAU_LO_D1[scores_w][:, None])
        scores[:, PARAM_INDEX["delta_2"]] += wsum(
            r_hi * _DTAU_HI_D2[scores_w][:, None] - r_lo * _DTAU_LO_D2[scores_w][:, None])
        dlv = dlv + g_m * p[f"beta_{w}"]

    wdlv = wsum(dlv)
    scores[:, PARAM_INDEX["beta0_structural"]] = wdlv
    for k, name in enumerate(_STRUCT_COVARIATE_NAMES):
        scores[:, PARAM_INDEX[name]] = wdlv * zmat[:, k]
    scores[:, PARAM_INDEX["sigma_structural"]] = wsum(dlv * eps)
    return logprob, scores


def respondent_log_probabilities(
        pv: np.ndarray, data: PreparedData, draws: np.ndarray,
        include_measurement: bool = True, with_scores: bool = False,
        chunk_size: int = 64, n_threads: int = 1,
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Per-respondent log simulated probabilities and optional score matrix.

    Work is split into fixed respondent chunks; chunk results land in
    preallocated arrays, so values are identical for any thread count.
    """
    n = data.n_respondents
    if draws.shape[0] != n:
        raise ValidationError(
            f"draw matrix covers {draws.shape[0]} respondents, dataset has {n}")
    logprob = np.zeros(n)
    scores = np.zeros((n, N_PARAMS)) if with_scores else None
    slices = [slice(i, min(i + chunk_size, n)) for i in range(0, n, chunk_size)]

    def run(sl):
        lp, sc = _chunk_loglik(pv, data, draws, include_measurement, with_scores, sl)
        logprob[sl] = lp
        if with_scores:
            scores[sl] = sc

    if n_threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(run, slices))
    else:
        for sl in slices:
            run(sl)
    return logprob, scores


# --- public entry points ------------------------------------------------------

def simulated_respondent_prob(record: RespondentRecord, tasks: Sequence,
                              params: ParameterSet, draws: np.ndarray,
                              include_measurement: bool = True) -> float:
    """Simulated probability for one respondent over an R x 2 draw block."""
    draws = np.asarray(draws, dtype=np.float64)
    if draws.ndim != 2 or draws.shape[1] != 2 or draws.shape[0] < 1:
        raise ValidationError(f"expected (R, 2) draws, got {draws.shape}")
    data = _prepare([record], [list(tasks)])
    logprob, _ = respondent_log_probabilities(
        pack_parameters(params), data, draws[None, :, :], include_measurement)
    return float(np.exp(logprob[0]))


def total_log_likelihood(dataset: Dataset, params: ParameterSet,
                         draws: DrawMatrix | DrawConfig,
                         include_measurement: bool = True,
                         n_threads: int = 1) -> float:
    """Sum of per-respondent log simulated probabilities.

    The sum runs over respondents in sorted-id order with numpy's pairwise
    summation, so the result does not depend on file order or thread count.
    """
    data = prepare_data(dataset)
    if isinstance(draws, DrawConfig):
        draws = generate_draws(draws, data.n_respondents)
    logprob, _ = respondent_log_probabilities(
        pack_parameters(params), data, draws.values, include_measurement,
        n_threads=n_threads)
    return float(np.sum(logprob))
