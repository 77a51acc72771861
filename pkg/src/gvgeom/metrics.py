"""Depth evaluation metrics over a fixed metric range.

Aggregation is per-pixel over the flattened valid set (ground truth
positive and inside the range, prediction positive); per-image averaging
is offered by the CLI for cross-paper comparison. A.Rel is a fraction
here and a percentage in CLI tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maps import DepthMap

DEFAULT_RANGE = (0.0, 80.0)


@dataclass(frozen=True)
class MetricReport:
    abs_rel: float
    rms: float
    rms_log: float
    delta1: float
    delta2: float
    delta3: float
    n_valid: int

    def as_dict(self) -> dict:
        return {
            "abs_rel": self.abs_rel,
            "rms": self.rms,
            "rms_log": self.rms_log,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "delta3": self.delta3,
            "n_valid": self.n_valid,
        }


@dataclass(frozen=True)
class BinMetrics:
    lo: float
    hi: float
    report: "MetricReport | None"
    absrel_ratio: float | None = None  # A.Rel(second cue) / A.Rel(first cue)
    sigma_ratio: float | None = None   # mean second-cue / first-cue uncertainty


def _valid_set(pred: DepthMap, gt: DepthMap, d_range):
    lo, hi = d_range
    return (pred.mask & gt.mask & (gt.values > 0) & (gt.values >= lo)
            & (gt.values <= hi) & (pred.values > 0))


def _report_from_flat(p: np.ndarray, g: np.ndarray) -> MetricReport:
    ratio = np.maximum(p / g, g / p)
    diff = p - g
    log_diff = np.log(p) - np.log(g)
    return MetricReport(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        rms=float(np.sqrt(np.mean(diff ** 2))),
        rms_log=float(np.sqrt(np.mean(log_diff ** 2))),
        delta1=float(np.mean(ratio < 1.25)),
        delta2=float(np.mean(ratio < 1.25 ** 2)),
        delta3=float(np.mean(ratio < 1.25 ** 3)),
        n_valid=int(p.size),
    )


def compute_metrics(pred: DepthMap, gt: DepthMap, d_range=DEFAULT_RANGE) -> MetricReport:
    """Standard metric suite on the valid set; errors on an empty set."""
    if pred.shape != gt.shape:
        raise ValueError("pred and gt shapes differ")
    valid = _valid_set(pred, gt, d_range)
    if not np.any(valid):
        raise ValueError("compute_metrics: no valid pixels in range")
    return _report_from_flat(pred.values[valid], gt.values[valid])


def per_bin_metrics(pred: DepthMap, gt: DepthMap, bin_edges,
                    pred_pair=None, sigma_pair=None):
    """Metrics per ground-truth depth bin.

    bin_edges must be monotone increasing; pixels are assigned by gt depth
    with half-open bins (the last bin includes its upper edge). Empty bins
    yield report=None. When pred_pair=(first, second) is given, each bin
    also carries the A.Rel ratio second/first, and sigma_pair=(first,
    second) adds the mean uncertainty ratio.
    """
    edges = np.asarray(bin_edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin_edges must be strictly increasing with >= 2 entries")
    valid = _valid_set(pred, gt, (edges[0], edges[-1]))
    g = gt.values
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        in_bin = valid & (g >= lo) & ((g < hi) if hi != edges[-1] else (g <= hi))
        if not np.any(in_bin):
            out.append(BinMetrics(float(lo), float(hi), None))
            continue
        report = _report_from_flat(pred.values[in_bin], g[in_bin])
        absrel_ratio = sigma_ratio = None
        if pred_pair is not None:
            first, second = pred_pair
            r_first = _report_from_flat(first.values[in_bin], g[in_bin])
            r_second = _report_from_flat(second.values[in_bin], g[in_bin])
            absrel_ratio = (r_second.abs_rel / r_first.abs_rel
                            if r_first.abs_rel > 0 else None)
        if sigma_pair is not None:
            s_first, s_second = sigma_pair
            denom = float(np.mean(s_first.values[in_bin]))
            sigma_ratio = (float(np.mean(s_second.values[in_bin])) / denom
                           if denom > 0 else None)
        out.append(BinMetrics(float(lo), float(hi), report, absrel_ratio, sigma_ratio))
    return out


def ground_modulation(pred_ground: DepthMap, gt_road: DepthMap, road_mask) -> float:
    """A.Rel between analytic ground depth and ground truth on road pixels.

    Quantifies how far the actual ground deviates from the ideal plane.
    """
    road = np.asarray(road_mask, dtype=bool)
    valid = road & pred_ground.mask & gt_road.mask & (gt_road.values > 0) \
        & (pred_ground.values > 0)
    if not np.any(valid):
        raise ValueError("ground_modulation: no valid road pixels")
    g = gt_road.values[valid]
    p = pred_ground.values[valid]
    return float(np.mean(np.abs(p - g) / g))
