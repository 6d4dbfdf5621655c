"""Descriptive statistics: attribute importance, remuneration by age,
courier modal split, and detour-time distributions.

All aggregations sort their inputs before reducing, so results are
bit-identical regardless of record order.  Quartiles use linear
interpolation on the sorted values.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .model import (
    AGE_BAND_LABELS,
    CS_MODES,
    Dataset,
    IMPORTANCE_ATTRIBUTES,
    ValidationError,
    age_band_index,
)


def _sorted_array(values: Iterable[float]) -> np.ndarray:
    return np.sort(np.asarray(list(values), dtype=np.float64))


def _mean(values: Iterable[float]) -> Optional[float]:
    arr = _sorted_array(values)
    return float(arr.sum() / len(arr)) if len(arr) else None


def attribute_importance_summary(dataset: Dataset) -> list[dict]:
    """Mean 4-point importance score per attribute, sorted descending.

    Respondents lacking a score for an attribute are excluded from that
    attribute's mean; ``count`` reports how many were included.
    """
    out = []
    for attr in IMPORTANCE_ATTRIBUTES:
        scores = []
        for rec in dataset.respondents:
            score = rec.supply.importance.get(attr)
            if score is None:
                continue
            if score not in (1, 2, 3, 4):
                raise ValidationError(
                    f"respondent {rec.id}: importance.{attr} score {score} "
                    "out of range 1..4")
            scores.append(float(score))
        out.append({"attribute": attr, "mean": _mean(scores),
                    "count": len(scores)})
    return sorted(out, key=lambda r: (-(r["mean"] if r["mean"] is not None else -np.inf),
                                      r["attribute"]))


def remuneration_by_age(dataset: Dataset) -> dict[str, dict]:
    """Supply- and demand-side remuneration means per age band.

    ``gap`` is the demand mean minus the supply mean within the band
    (None when either side has no observations).
    """
    supply: dict[int, list[float]] = {i: [] for i in range(len(AGE_BAND_LABELS))}
    demand: dict[int, list[float]] = {i: [] for i in range(len(AGE_BAND_LABELS))}
    for rec in dataset.respondents:
        band = age_band_index(rec.age_years)
        for side, value in (("supply", rec.supply.remuneration_uah),
                            ("demand", rec.supply.remuneration_demand_uah)):
            if value is None:
                continue
            if not 50 <= value <= 120:
                raise ValidationError(
                    f"respondent {rec.id}: {side} remuneration {value} "
                    "out of range 50..120")
        supply[band].append(float(rec.supply.remuneration_uah))
        if rec.supply.remuneration_demand_uah is not None:
            demand[band].append(float(rec.supply.remuneration_demand_uah))

    result = {}
    for i, label in enumerate(AGE_BAND_LABELS):
        s_mean = _mean(supply[i])
        d_mean = _mean(demand[i])
        result[label] = {
            "supply_mean": s_mean, "supply_count": len(supply[i]),
            "demand_mean": d_mean, "demand_count": len(demand[i]),
            "gap": (d_mean - s_mean) if s_mean is not None and d_mean is not None
                   else None,
        }
    return result


def cs_modal_split(dataset: Dataset) -> dict[str, dict[str, float]]:
    """Courier-mode shares conditioned on household car availability."""
    groups: dict[str, dict[str, int]] = {"car": {}, "no_car": {}}
    for rec in dataset.respondents:
        group = "car" if rec.car_in_household else "no_car"
        mode = rec.supply.cs_mode
        groups[group][mode] = groups[group].get(mode, 0) + 1
    shares = {}
    for group, counts in groups.items():
        total = sum(counts.values())
        shares[group] = {mode: counts[mode] / total
                         for mode in CS_MODES if mode in counts} if total else {}
    return shares


def detour_time_stats(dataset: Dataset) -> dict[str, dict[str, float]]:
    """Box-plot statistics of the acceptable detour (minutes) per mode."""
    by_mode: dict[str, list[float]] = {}
    for rec in dataset.respondents:
        value = rec.supply.detour_min
        if not 15 <= value <= 60:
            raise ValidationError(
                f"respondent {rec.id}: detour {value} out of range 15..60")
        by_mode.setdefault(rec.supply.cs_mode, []).append(float(value))
    stats = {}
    for mode in CS_MODES:
        if mode not in by_mode:
            continue
        arr = _sorted_array(by_mode[mode])
        q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0], method="linear")
        stats[mode] = {
            "count": len(arr),
            "mean": float(arr.sum() / len(arr)),
            "min": float(arr[0]), "q1": float(q1), "median": float(med),
            "q3": float(q3), "max": float(arr[-1]),
        }
    return stats


def detour_km(mean_minutes: float, speed_kmh: float = 20.0) -> float:
    """Detour distance implied by a mean detour time at a given speed."""
    if speed_kmh <= 0:
        raise ValidationError(f"speed must be positive, got {speed_kmh}")
    return speed_kmh * mean_minutes / 60.0


def summarize(dataset: Dataset, speed_kmh: float = 20.0) -> dict:
    """JSON-ready bundle of all descriptive statistics."""
    detour = detour_time_stats(dataset)
    return {
        "n_respondents": len(dataset.respondents),
        "attribute_importance": attribute_importance_summary(dataset),
        "remuneration_by_age": remuneration_by_age(dataset),
        "modal_split": cs_modal_split(dataset),
        "detour_minutes": detour,
        "detour_km": {mode: detour_km(entry["mean"], speed_kmh)
                      for mode, entry in detour.items()},
        "detour_speed_kmh": speed_kmh,
    }
