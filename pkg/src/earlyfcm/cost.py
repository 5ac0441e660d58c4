"""Cloud cost arithmetic: measured hours in, audit-stable dollar figures out.

All currency math runs in Decimal (constructed from the decimal string of
each input, never from the raw binary float) so reported figures do not
wobble with summation order. Rounding to cents happens once, at display.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_HALF_UP, Decimal
from pathlib import Path

from .errors import InputError

CENT = Decimal("0.01")


def _as_decimal(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    return Decimal(str(value))


@dataclass(frozen=True)
class PriceSheet:
    """On-demand unit price for one machine type."""

    unit_price: Decimal
    currency: str = "USD"

    def __post_init__(self) -> None:
        object.__setattr__(self, "unit_price", _as_decimal(self.unit_price))
        if self.unit_price < 0:
            raise InputError(f"unit price must be >= 0, got {self.unit_price}")


@dataclass(frozen=True)
class CostReport:
    """Dollar view of one evaluation: training + stopped clustering time."""

    currency: str
    t_train_hours: float
    t_actual_hours: float
    t_total_hours: float
    cost_effective: float
    dollars_actual: Decimal
    dollars_saved: Decimal


def compute_cost(price: PriceSheet, hours) -> Decimal:
    """Exact product unit_price * hours, unrounded."""
    h = _as_decimal(hours)
    if h < 0:
        raise InputError(f"hours must be >= 0, got {hours}")
    return price.unit_price * h


def total_time(t_train_hours: float, t_actual_hours: float) -> float:
    """Total billed time: training plus actually-run clustering."""
    return t_train_hours + t_actual_hours


def cost_effectiveness(t_actual_hours: float, t_total_hours: float) -> float:
    """Fraction of the total time actually spent; smaller is better."""
    if t_total_hours <= 0:
        raise InputError(f"total time must be > 0, got {t_total_hours}")
    if not 0 <= t_actual_hours <= t_total_hours:
        raise InputError(
            f"actual time {t_actual_hours} must lie in [0, {t_total_hours}]"
        )
    return t_actual_hours / t_total_hours


def extrapolate_savings(
    area_km2, image_area_m2, mean_saved_hours_per_image, price: PriceSheet
) -> tuple[int, float, Decimal]:
    """Scale per-image savings to a land area.

    Returns (image_count, saved_hours, saved_dollars) where image_count is
    ceil(area / image footprint): partial coverage still needs a full image.
    """
    area = _as_decimal(area_km2)
    footprint = _as_decimal(image_area_m2)
    per_image = float(mean_saved_hours_per_image)
    if area <= 0 or footprint <= 0 or per_image <= 0:
        raise InputError("area, image footprint and per-image savings must all be > 0")
    count_exact = area * Decimal(10) ** 6 / footprint
    image_count = int(count_exact.to_integral_value(rounding=ROUND_CEILING))
    saved_hours = image_count * per_image
    return image_count, saved_hours, compute_cost(price, saved_hours)


def build_cost_report(
    price: PriceSheet, t_train_hours: float, t_actual_hours: float, t_saved_hours: float
) -> CostReport:
    """Assemble the dollar view from already-measured hour totals."""
    for name, val in (
        ("training", t_train_hours),
        ("actual", t_actual_hours),
        ("saved", t_saved_hours),
    ):
        if val < 0 or not math.isfinite(val):
            raise InputError(f"{name} hours must be finite and >= 0, got {val}")
    t_total = total_time(t_train_hours, t_actual_hours)
    return CostReport(
        currency=price.currency,
        t_train_hours=t_train_hours,
        t_actual_hours=t_actual_hours,
        t_total_hours=t_total,
        cost_effective=cost_effectiveness(t_actual_hours, t_total) if t_total > 0 else 0.0,
        dollars_actual=compute_cost(price, t_total),
        dollars_saved=compute_cost(price, t_saved_hours),
    )


def round_cents(amount: Decimal) -> Decimal:
    """Half-up rounding to cents, applied only when a figure is displayed."""
    return amount.quantize(CENT, rounding=ROUND_HALF_UP)


def cost_report_document(report: CostReport) -> dict:
    return {
        "currency": report.currency,
        "t_train_hours": report.t_train_hours,
        "t_actual_hours": report.t_actual_hours,
        "t_total_hours": report.t_total_hours,
        "cost_effective": report.cost_effective,
        "dollars_actual": str(round_cents(report.dollars_actual)),
        "dollars_saved": str(round_cents(report.dollars_saved)),
    }


def write_cost_report(report: CostReport, path) -> None:
    Path(path).write_text(
        json.dumps(cost_report_document(report), indent=2, sort_keys=True) + "\n"
    )


def format_cost_report(report: CostReport) -> str:
    lines = [
        f"training time:      {report.t_train_hours:.6f} h",
        f"clustering time:    {report.t_actual_hours:.6f} h",
        f"total time:         {report.t_total_hours:.6f} h",
        f"cost effectiveness: {report.cost_effective:.4f}",
        f"cost:               {round_cents(report.dollars_actual):,} {report.currency}",
        f"saved:              {round_cents(report.dollars_saved):,} {report.currency}",
    ]
    return "\n".join(lines)
