"""Scans of the (E_R, E_I) plane, feasible-region labeling and rectangle refinement."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import InvalidEnergy, NoUsableRoot, SingularNormalization
from .model import EnergyPoint, ModelParams
from .positivity import FeasibilityConfig, Verdict, emm_feasible
from .recursion import DEFAULT_PREC, build_moment_map


@dataclass(frozen=True)
class PointChecker:
    """Picklable per-point feasibility test for one (alpha, epsilon, p_max, pipeline)."""

    params: ModelParams
    p_max: int
    cfg: FeasibilityConfig = field(default_factory=FeasibilityConfig)
    pipeline: str = "main"
    prec: int = DEFAULT_PREC
    strict: bool = False

    def __call__(self, point: tuple[float, float]) -> Verdict:
        e_r, e_i = point
        try:
            energy = EnergyPoint(e_r, e_i)
        except InvalidEnergy:
            return Verdict.INFEASIBLE
        try:
            if self.pipeline == "appendix":
                from .appendix import appendix_map_for_energy
                mp = appendix_map_for_energy(self.params, energy, self.p_max, prec=self.prec)
            else:
                mp = build_moment_map(self.params, energy, self.p_max, prec=self.prec,
                                      strict=self.strict)
        except (SingularNormalization, NoUsableRoot):
            return Verdict.MAP_SINGULAR
        return emm_feasible(mp, self.cfg).status


def _is_kept(v: Verdict) -> bool:
    # singular nodes cannot be excluded, so they count with the feasible side
    return v in (Verdict.FEASIBLE, Verdict.UNDECIDED, Verdict.MAP_SINGULAR)


def evaluate_points(checker, points, workers: int = 1, stop_on_kept: bool = False) -> list[Verdict]:
    """Verdicts for a list of points, in order.

    With stop_on_kept, evaluation stops at the first kept verdict and the
    remaining entries are None (sequential mode only).
    """
    points = list(points)
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(checker, points))
    out: list = [None] * len(points)
    for k, pt in enumerate(points):
        out[k] = checker(pt)
        if stop_on_kept and _is_kept(out[k]):
            break
    return out


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


@dataclass(frozen=True)
class ScanWindow:
    er_range: tuple[float, float]
    ei_range: tuple[float, float]
    n_er: int = 16
    n_ei: int = 16
    ei_offset: bool = True

    def __post_init__(self):
        lo, hi = self.er_range
        if not (0 < lo < hi):
            raise ValueError(f"invalid E_R range {self.er_range}")
        if not self.ei_range[0] < self.ei_range[1]:
            raise ValueError(f"invalid E_I range {self.ei_range}")
        if self.n_er < 4 or self.n_ei < 4:
            raise ValueError("grid counts must be at least 4")

    @property
    def straddles_zero(self) -> bool:
        return self.ei_range[0] < 0 < self.ei_range[1]

    def er_nodes(self) -> np.ndarray:
        lo, hi = self.er_range
        h = (hi - lo) / self.n_er
        return lo + h * (np.arange(self.n_er) + 0.5)

    def ei_nodes(self) -> np.ndarray:
        lo, hi = self.ei_range
        if self.straddles_zero and self.ei_offset:
            # symmetric grid with E_I = 0 on a cell boundary
            half = max(-lo, hi)
            n_half = math.ceil(self.n_ei / 2)
            h = half / n_half
            up = h * (np.arange(n_half) + 0.5)
            return np.concatenate([-up[::-1], up])
        h = (hi - lo) / self.n_ei
        nodes = lo + h * (np.arange(self.n_ei) + 0.5)
        if np.any(nodes == 0.0):
            nodes = nodes + 0.5 * h
        return nodes

    def refined(self, factor: int = 2) -> "ScanWindow":
        return replace(self, n_er=self.n_er * factor, n_ei=self.n_ei * factor)


@dataclass
class RegionMask:
    er: np.ndarray
    ei: np.ndarray
    verdicts: np.ndarray  # object array of Verdict, shape (len(er), len(ei))
    alpha: float
    p_max: int

    @property
    def cell(self) -> tuple[float, float]:
        h_er = self.er[1] - self.er[0] if len(self.er) > 1 else 0.0
        h_ei = self.ei[1] - self.ei[0] if len(self.ei) > 1 else 0.0
        return float(h_er), float(h_ei)

    def kept(self) -> np.ndarray:
        return np.vectorize(_is_kept, otypes=[bool])(self.verdicts)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.verdicts.ravel():
            out[v.value] = out.get(v.value, 0) + 1
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["e_r", "e_i", "verdict"])
            for i, er in enumerate(self.er):
                for j, ei in enumerate(self.ei):
                    w.writerow([repr(float(er)), repr(float(ei)), self.verdicts[i, j].value])


def scan_region(params: ModelParams, p_max: int, window: ScanWindow,
                checker: PointChecker | None = None, workers: int = 1) -> RegionMask:
    """Verdict on every grid node; nodes with E_I < 0 reuse the verdict at -E_I."""
    checker = checker or PointChecker(params, p_max)
    er, ei = window.er_nodes(), window.ei_nodes()
    mags = sorted(set(abs(float(x)) for x in ei))
    points = [(float(r), m) for r in er for m in mags]
    verdicts = evaluate_points(checker, points, workers)
    lookup = dict(zip(points, verdicts))
    grid = np.empty((len(er), len(ei)), dtype=object)
    for i, r in enumerate(er):
        for j, x in enumerate(ei):
            grid[i, j] = lookup[(float(r), abs(float(x)))]
    return RegionMask(er, ei, grid, params.alpha, p_max)


@dataclass
class Region:
    label: int
    cells: list[tuple[int, int]]
    er_nodes: tuple[float, float]
    ei_nodes: tuple[float, float]


def connected_components(mask: RegionMask) -> list[Region]:
    """4-neighbour components of the kept (feasible or undecided) cells."""
    labels, count = ndimage.label(mask.kept())
    regions = []
    for lab in range(1, count + 1):
        idx = np.argwhere(labels == lab)
        ers = mask.er[idx[:, 0]]
        eis = mask.ei[idx[:, 1]]
        regions.append(Region(lab, [tuple(map(int, c)) for c in idx],
                              (float(ers.min()), float(ers.max())),
                              (float(eis.min()), float(eis.max()))))
    return regions


@dataclass
class BoundingRectangle:
    er_lo: float
    er_hi: float
    ei_lo: float
    ei_hi: float
    p_max: int
    alpha: float
    region_id: int = 0
    refined: bool = False
    pipeline: str = "main"

    def contains(self, e_r: float, e_i: float) -> bool:
        return self.er_lo <= e_r <= self.er_hi and self.ei_lo <= e_i <= self.ei_hi

    @property
    def straddles_zero(self) -> bool:
        return self.ei_lo < 0 < self.ei_hi

    def overlaps(self, other: "BoundingRectangle") -> bool:
        return not (self.er_hi < other.er_lo or other.er_hi < self.er_lo
                    or self.ei_hi < other.ei_lo or other.ei_hi < self.ei_lo)

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(d: dict) -> "BoundingRectangle":
        return BoundingRectangle(**d)


def mirror(rect: BoundingRectangle) -> BoundingRectangle:
    return replace(rect, ei_lo=-rect.ei_hi, ei_hi=-rect.ei_lo)


def _line_points(fixed: float, lo: float, hi: float, m: int, axis: str, hint: float | None):
    vals = list(np.linspace(lo, hi, m))
    if hint is not None and lo <= hint <= hi:
        vals.insert(0, hint)
    if axis == "er":
        return [(fixed, float(v)) for v in vals]
    return [(float(v), fixed) for v in vals]


def refine_rectangle(params: ModelParams, p_max: int, rect: BoundingRectangle, tol_e,
                     cell: tuple[float, float], checker: PointChecker | None = None,
                     probes: int = 9, max_push: int = 6,
                     seeds: list[tuple[float, float]] | None = None,
                     verify_seeds: bool = True) -> BoundingRectangle | None:
    """Shrink each edge onto the region by bisection between a kept and an empty probe line.

    `rect` spans the component's feasible nodes; `seeds` are known kept points
    used as probe hints. An edge is accepted once a probe line of `probes`
    points spanning the rectangle at that coordinate is entirely infeasible.
    For rectangles straddling E_I = 0 only the upper E_I edge is refined and
    the lower one is its mirror. An edge that cannot be certified keeps its
    outer value and the rectangle is marked unrefined. Returns None when no
    seed is feasible (a spurious component).
    """
    checker = checker or PointChecker(params, p_max)
    tol_er, tol_ei = (tol_e, tol_e) if np.isscalar(tol_e) else tol_e
    h_er, h_ei = cell
    seeds = list(seeds or [((rect.er_lo + rect.er_hi) / 2, (rect.ei_lo + rect.ei_hi) / 2)])
    if verify_seeds:
        seeds = [s for s, v in zip(seeds, evaluate_points(checker, seeds)) if _is_kept(v)]
        if not seeds:
            return None
    symmetric = rect.ei_lo < 0 < rect.ei_hi
    b = {"er_lo": rect.er_lo, "er_hi": rect.er_hi, "ei_lo": rect.ei_lo, "ei_hi": rect.ei_hi}
    certified = True

    def line_empty(axis, coord):
        if axis == "er":
            # E_I = 0 itself is a singular point of the map; stop just short of it
            lo, hi = (1e-3 * b["ei_hi"], b["ei_hi"]) if symmetric else (b["ei_lo"], b["ei_hi"])
            hint = min(seeds, key=lambda s: abs(s[0] - coord))[1]
        else:
            lo, hi = b["er_lo"], b["er_hi"]
            hint = min(seeds, key=lambda s: abs(s[1] - coord))[0]
        pts = _line_points(coord, lo, hi, probes, axis, hint)
        res = evaluate_points(checker, pts, stop_on_kept=True)
        for pt, v in zip(pts, res):
            if v is not None and _is_kept(v):
                seeds.append((pt[0], abs(pt[1]) if symmetric else pt[1]))
                return False
        return True

    def bisect(key, axis, sign, step, tol):
        nonlocal certified
        inner = b[key]
        outer = inner + sign * step
        if key == "er_lo":
            outer = max(outer, 0.5 * inner)
        if key == "ei_lo" and not symmetric and outer <= 0:
            outer = 0.5 * inner
        pushes = 0
        while not line_empty(axis, outer):
            inner = outer
            pushes += 1
            if pushes > max_push:
                certified = False
                b[key] = outer
                return
            outer = inner + sign * step * 2 ** pushes
            if key == "er_lo":
                outer = max(outer, 0.5 * inner)
            if key == "ei_lo" and not symmetric and outer <= 0:
                outer = 0.5 * inner
        while abs(outer - inner) > tol:
            mid = 0.5 * (inner + outer)
            if line_empty(axis, mid):
                outer = mid
            else:
                inner = mid
        b[key] = outer

    bisect("ei_hi", "ei", +1, h_ei, tol_ei)
    if symmetric:
        b["ei_lo"] = -b["ei_hi"]
    else:
        bisect("ei_lo", "ei", -1, h_ei, tol_ei)
    bisect("er_hi", "er", +1, h_er, tol_er)
    bisect("er_lo", "er", -1, h_er, tol_er)
    return replace(rect, refined=certified, **b)


@dataclass
class LadderConfig:
    n_er: int = 16
    n_ei: int = 16
    pad: float = 0.3
    tol_frac: float = 1 / 16
    probes: int = 9
    max_refine: int = 2
    workers: int = 1
    pipeline: str = "main"
    feasibility: FeasibilityConfig = field(default_factory=FeasibilityConfig)
    prec: int = DEFAULT_PREC
    strict: bool = False


@dataclass
class OrderResult:
    p_max: int
    rectangles: list[BoundingRectangle]
    masks: list[RegionMask]


def bound_order(params: ModelParams, p_max: int, window: ScanWindow,
                cfg: LadderConfig | None = None) -> OrderResult:
    """Rectangles of every feasible region inside the window at one order.

    Complex-pair regions are reported in the upper half-plane followed by
    their mirror image; regions crossing E_I = 0 are reported once.
    """
    cfg = cfg or LadderConfig()
    checker = PointChecker(params, p_max, cfg.feasibility, cfg.pipeline, cfg.prec, cfg.strict)
    masks = []
    regions: list[Region] = []
    win = window
    for attempt in range(cfg.max_refine + 1):
        mask = scan_region(params, p_max, win, checker, cfg.workers)
        masks.append(mask)
        regions = connected_components(mask)
        if regions or attempt == cfg.max_refine:
            break
        win = win.refined()
    h_er, h_ei = mask.cell
    rects: list[BoundingRectangle] = []
    for reg in regions:
        if reg.ei_nodes[1] < 0:
            continue  # mirror image of an upper-half region
        ei_lo, ei_hi = reg.ei_nodes
        seeds = [(float(mask.er[i]), float(mask.ei[j])) for i, j in reg.cells if mask.ei[j] >= 0]
        if ei_lo < 0:
            ei_lo, ei_hi = -max(-ei_lo, ei_hi), max(-ei_lo, ei_hi)
        rect = BoundingRectangle(reg.er_nodes[0], reg.er_nodes[1], ei_lo, ei_hi, p_max,
                                 params.alpha, pipeline=cfg.pipeline)
        tol = (h_er * cfg.tol_frac, h_ei * cfg.tol_frac)
        rect = refine_rectangle(params, p_max, rect, tol, (h_er, h_ei), checker, cfg.probes,
                                seeds=seeds, verify_seeds=False)
        if rect is not None:
            rects.append(rect)
    rects = _merge_overlapping(rects)
    out = []
    for r in sorted(rects, key=lambda r: (r.er_lo, r.ei_lo)):
        r = replace(r, region_id=len(out))
        out.append(r)
        if not r.straddles_zero:
            out.append(replace(mirror(r), region_id=len(out)))
    return OrderResult(p_max, out, masks)


def _merge_overlapping(rects: list[BoundingRectangle]) -> list[BoundingRectangle]:
    rects = list(rects)
    merged = True
    while merged:
        merged = False
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                if rects[i].overlaps(rects[j]):
                    a, c = rects[i], rects.pop(j)
                    rects[i] = replace(a, er_lo=min(a.er_lo, c.er_lo), er_hi=max(a.er_hi, c.er_hi),
                                       ei_lo=min(a.ei_lo, c.ei_lo), ei_hi=max(a.ei_hi, c.ei_hi),
                                       refined=a.refined and c.refined)
                    merged = True
                    break
            if merged:
                break
    return rects


def padded_window(rect: BoundingRectangle, pad: float, n_er: int, n_ei: int) -> ScanWindow:
    w_er = rect.er_hi - rect.er_lo
    w_ei = rect.ei_hi - rect.ei_lo
    er = (max(rect.er_lo - pad * w_er, 0.5 * rect.er_lo), rect.er_hi + pad * w_er)
    lo, hi = rect.ei_lo - pad * w_ei, rect.ei_hi + pad * w_ei
    if rect.ei_lo >= 0 and lo <= 0:
        lo = -hi  # touches the real axis: scan both halves symmetrically
    return ScanWindow(er, (lo, hi), n_er, n_ei)


def bound_ladder(params: ModelParams, orders, window: ScanWindow,
                 cfg: LadderConfig | None = None, progress=None) -> dict[int, OrderResult]:
    """Rectangles at increasing orders, each order scanning only near the previous rectangles.

    Feasible regions can only shrink as the order grows, so the padded
    rectangles of one order are windows for the next.
    """
    cfg = cfg or LadderConfig()
    results: dict[int, OrderResult] = {}
    windows = [window]
    for p_max in orders:
        rects: list[BoundingRectangle] = []
        masks: list[RegionMask] = []
        for win in windows:
            res = bound_order(params, p_max, win, cfg)
            masks.extend(res.masks)
            rects.extend(r for r in res.rectangles if r.ei_hi > 0)
        upper = _merge_overlapping([r for r in rects if r.ei_lo >= 0 or r.straddles_zero])
        final = []
        for r in sorted(upper, key=lambda r: (r.er_lo, r.ei_lo)):
            final.append(replace(r, region_id=len(final)))
            if not r.straddles_zero:
                final.append(replace(mirror(r), region_id=len(final)))
        results[p_max] = OrderResult(p_max, final, masks)
        if progress:
            progress(p_max, final)
        windows = [padded_window(r, cfg.pad, cfg.n_er, cfg.n_ei)
                   for r in final if r.ei_lo >= 0 or r.straddles_zero]
        if not windows:
            break
    return results


def order_ladder(p_max: int, start: int = 20, step: int = 4) -> list[int]:
    if p_max <= start:
        return [p_max]
    orders = list(range(start, p_max + 1, step))
    if orders[-1] != p_max:
        orders.append(p_max)
    return orders


__all__ = [
    "PointChecker", "ScanWindow", "RegionMask", "Region", "BoundingRectangle", "LadderConfig",
    "OrderResult", "scan_region", "connected_components", "refine_rectangle", "mirror",
    "bound_order", "bound_ladder", "order_ladder", "padded_window", "evaluate_points",
    "default_workers",
]
