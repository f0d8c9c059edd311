"""Serializable bound reports and comparison against published rows."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .reference import REFERENCE_ENERGIES, TableRow
from .scanner import BoundingRectangle, OrderResult


@dataclass
class BoundsReport:
    alpha: float
    p_max: int
    pipeline: str
    rectangles: list[BoundingRectangle]
    verdict_counts: dict[str, int] = field(default_factory=dict)
    orders: list[int] = field(default_factory=list)
    ladder: dict[int, list[BoundingRectangle]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_json(self, include_meta: bool = True) -> dict:
        out = {
            "alpha": self.alpha,
            "p_max": self.p_max,
            "pipeline": self.pipeline,
            "rectangles": [r.to_json() for r in self.rectangles],
            "verdict_counts": dict(sorted(self.verdict_counts.items())),
            "orders": list(self.orders),
            "ladder": {str(p): [r.to_json() for r in rs] for p, rs in sorted(self.ladder.items())},
        }
        if include_meta:
            out["meta"] = self.meta
        return out

    def dumps(self, include_meta: bool = True) -> str:
        return json.dumps(self.to_json(include_meta), indent=2, sort_keys=True)

    @staticmethod
    def from_json(d: dict) -> "BoundsReport":
        return BoundsReport(
            alpha=d["alpha"], p_max=d["p_max"], pipeline=d["pipeline"],
            rectangles=[BoundingRectangle.from_json(r) for r in d["rectangles"]],
            verdict_counts=dict(d.get("verdict_counts", {})),
            orders=list(d.get("orders", [])),
            ladder={int(p): [BoundingRectangle.from_json(r) for r in rs]
                    for p, rs in d.get("ladder", {}).items()},
            meta=dict(d.get("meta", {})),
        )

    @staticmethod
    def from_ladder(alpha: float, results: dict[int, OrderResult], pipeline: str = "main",
                    meta: dict | None = None) -> "BoundsReport":
        orders = sorted(results)
        top = results[orders[-1]] if orders else None
        counts: dict[str, int] = {}
        if top is not None:
            for m in top.masks:
                for k, v in m.counts().items():
                    counts[k] = counts.get(k, 0) + v
        return BoundsReport(alpha, orders[-1] if orders else 0, pipeline,
                            list(top.rectangles) if top else [], counts, orders,
                            {p: list(r.rectangles) for p, r in results.items()}, meta or {})


def format_row(rect: BoundingRectangle) -> str:
    if rect.straddles_zero:
        ei = f"{rect.ei_lo:+.6f} < E_I < {rect.ei_hi:+.6f}"
    else:
        ei = f"{rect.ei_lo:.6f} < E_I < {rect.ei_hi:.6f}"
    flag = "" if rect.refined else "  (unrefined)"
    return (f"alpha={rect.alpha:<7g} P={rect.p_max:<3d} region {rect.region_id}: "
            f"{rect.er_lo:.6f} < E_R < {rect.er_hi:.6f}   {ei}{flag}")


@dataclass
class CellComparison:
    row: TableRow
    ours: BoundingRectangle | None
    er_ok: bool
    ei_ok: bool
    reference_inside: bool | None

    @property
    def passed(self) -> bool:
        return self.ours is not None and self.er_ok and self.ei_ok and self.reference_inside is not False

    def to_json(self) -> dict:
        return {"alpha": self.row.alpha, "p_max": self.row.p_max,
                "published": [self.row.er_lo, self.row.er_hi, self.row.ei_lo, self.row.ei_hi],
                "ours": None if self.ours is None else
                [self.ours.er_lo, self.ours.er_hi, self.ours.ei_lo, self.ours.ei_hi],
                "er_ok": self.er_ok, "ei_ok": self.ei_ok,
                "reference_inside": self.reference_inside, "passed": self.passed}


def upper_rectangles(rects: list[BoundingRectangle]) -> list[BoundingRectangle]:
    return [r for r in rects if r.ei_hi > 0]


def match_rectangle(row: TableRow, rects: list[BoundingRectangle]) -> BoundingRectangle | None:
    cands = upper_rectangles(rects)
    if not cands:
        return None
    centre = 0.5 * (row.er_lo + row.er_hi)
    return min(cands, key=lambda r: abs(0.5 * (r.er_lo + r.er_hi) - centre))


def compare_row(row: TableRow, rects: list[BoundingRectangle], factor: float = 2.0) -> CellComparison:
    """Endpoints must lie within `factor` times the published interval widths."""
    ours = match_rectangle(row, rects)
    if ours is None:
        return CellComparison(row, None, False, False, None)
    er_tol, ei_tol = factor * row.er_width, factor * row.ei_width
    er_ok = abs(ours.er_lo - row.er_lo) <= er_tol and abs(ours.er_hi - row.er_hi) <= er_tol
    ei_ok = abs(ours.ei_lo - row.ei_lo) <= ei_tol and abs(ours.ei_hi - row.ei_hi) <= ei_tol
    inside = None
    refs = [e for e in REFERENCE_ENERGIES.get(float(row.alpha), [])
            if row.er_lo <= e.real <= row.er_hi]
    if refs:
        inside = all(any(r.contains(e.real, e.imag) for r in upper_rectangles(rects)) for e in refs)
    return CellComparison(row, ours, er_ok, ei_ok, inside)
