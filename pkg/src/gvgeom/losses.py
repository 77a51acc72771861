"""Training losses with analytic gradients, plus a finite-difference checker.

Every loss averages over its valid-pixel mask and returns gradients that
are zero on masked-out pixels. Reductions use numpy's pairwise summation,
which is deterministic for a fixed operand order.

Losses:
* scale-invariant log loss  alpha * sqrt(V[E] + lam * E[E]^2), E = log D - log D*
  (population variance, so the loss is differentiable everywhere);
* uncertainty-weighted L1   mean( |e_f|/S_f + |e_y|/S_y + log S_f + log S_y );
* geometric consistency     mean |warp(D1) - sg(D2)| across two augmentations,
  where sg is a stop-gradient (the D2 branch receives no gradient);
* total = si_log + lambda_unc * unc + lambda_con * con.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentSpec, bilinear_footprint
from .maps import DepthMap, UncertaintyMap, joint_mask


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 10.0
    lam: float = 0.15
    lambda_unc: float = 0.5
    lambda_con: float = 0.1

    def __post_init__(self):
        if min(self.alpha, self.lam, self.lambda_unc, self.lambda_con) <= 0:
            raise ValueError("loss constants must be positive")


@dataclass
class LossResult:
    """Scalar loss value plus one gradient map per differentiable input."""

    value: float
    gradients: dict = field(default_factory=dict)


def si_log_loss(pred: DepthMap, target: DepthMap, cfg: LossConfig = LossConfig()) -> LossResult:
    """Scale-invariant log loss with analytic gradient w.r.t. the prediction."""
    mask = joint_mask(pred, target)
    n = int(np.count_nonzero(mask))
    if n == 0:
        raise ValueError("si_log_loss: empty valid mask")
    p = pred.values[mask]
    t = target.values[mask]
    if np.any(p <= 0) or np.any(t <= 0):
        raise ValueError("si_log_loss: depths must be positive on the valid mask")
    err = np.log(p) - np.log(t)
    mean = err.mean()
    inside = err.var() + cfg.lam * mean * mean
    grad = np.zeros_like(pred.values)
    if inside <= 0.0:
        return LossResult(0.0, {"pred": grad})
    value = cfg.alpha * np.sqrt(inside)
    # d/dE_i of (q - (1-lam) m^2) is 2(E_i - (1-lam) m)/n; chain through log.
    grad[mask] = cfg.alpha * (err - (1.0 - cfg.lam) * mean) / (n * np.sqrt(inside) * p)
    return LossResult(float(value), {"pred": grad})


def uncertainty_loss(d_f: DepthMap, d_y: DepthMap, s_f: UncertaintyMap,
                     s_y: UncertaintyMap, d_star: DepthMap, mask=None) -> LossResult:
    """Uncertainty-weighted L1 of both cues against ground truth.

    Gradients are returned for all four predicted maps; the L1 subgradient
    at an exactly-zero residual is taken as 0.
    """
    valid = joint_mask(d_f, d_y, s_f, s_y, d_star)
    if mask is not None:
        valid = valid & np.asarray(mask, dtype=bool)
    n = int(np.count_nonzero(valid))
    if n == 0:
        raise ValueError("uncertainty_loss: empty valid mask")
    sf = s_f.values[valid]
    sy = s_y.values[valid]
    if np.any(sf <= 0) or np.any(sy <= 0):
        raise ValueError("uncertainty_loss: uncertainty scales must be positive")
    ef = d_f.values[valid] - d_star.values[valid]
    ey = d_y.values[valid] - d_star.values[valid]
    value = (np.abs(ef) / sf + np.abs(ey) / sy + np.log(sf) + np.log(sy)).sum() / n

    grads = {}
    for name, e, s in (("d_f", ef, sf), ("d_y", ey, sy)):
        g = np.zeros_like(d_f.values)
        g[valid] = np.sign(e) / (s * n)
        grads[name] = g
    for name, e, s in (("sigma_f", ef, sf), ("sigma_y", ey, sy)):
        g = np.zeros_like(d_f.values)
        g[valid] = (1.0 / s - np.abs(e) / (s * s)) / n
        grads[name] = g
    return LossResult(float(value), grads)


def consistency_loss(d1: DepthMap, d2: DepthMap, t1: AugmentSpec, t2: AugmentSpec) -> LossResult:
    """L1 between D1 warped into D2's frame and D2, with D2 stop-gradient.

    D1 is resampled bilinearly along the composed coordinate map (t2 after
    t1 inverse); only output pixels whose pre-image footprint lies fully
    inside valid D1 pixels (and which are valid in D2) contribute.
    """
    h_out, w_out = t2.out_size
    if d2.shape != (h_out, w_out):
        raise ValueError("d2 shape does not match its augmentation output size")
    uu, vv = np.meshgrid(np.arange(w_out, dtype=np.float64),
                         np.arange(h_out, dtype=np.float64))
    su, sv = t2.inverse(uu, vv)
    qu, qv = t1.apply(su, sv)
    rows, cols, weights, in_bounds = bilinear_footprint(qu, qv, d1.shape)
    touching = weights > 0.0
    safe_rows = rows.clip(0, d1.shape[0] - 1)
    safe_cols = cols.clip(0, d1.shape[1] - 1)
    usable = ~touching | (in_bounds & d1.mask[safe_rows, safe_cols])
    valid = usable.all(axis=0) & d2.mask
    n = int(np.count_nonzero(valid))
    if n == 0:
        raise ValueError("consistency_loss: augmentations do not overlap on valid pixels")

    corner_vals = np.where(touching, d1.values[safe_rows, safe_cols], 0.0)
    warped = (weights * corner_vals).sum(axis=0)
    resid = np.where(valid, warped - d2.values, 0.0)
    value = np.abs(resid[valid]).sum() / n

    grad1 = np.zeros_like(d1.values)
    sign = np.sign(resid)
    contrib = weights * sign / n
    scatter = valid & touching
    np.add.at(grad1, (safe_rows[scatter], safe_cols[scatter]), contrib[scatter])
    return LossResult(float(value), {"d1": grad1, "d2": np.zeros_like(d2.values)})


def total_loss(si: LossResult, unc: LossResult, con: LossResult,
               cfg: LossConfig = LossConfig()) -> LossResult:
    """Weighted combination; gradients combine with the same weights."""
    value = si.value + cfg.lambda_unc * unc.value + cfg.lambda_con * con.value
    grads = {}
    for weight, result in ((1.0, si), (cfg.lambda_unc, unc), (cfg.lambda_con, con)):
        for name, g in result.gradients.items():
            grads[name] = grads.get(name, 0.0) + weight * g
    return LossResult(float(value), grads)


def finite_difference_check(loss_fn, inputs: dict, eps: float = 1e-5,
                            n_samples: int = 64, seed: int = 0,
                            exclude: dict | None = None) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_fn maps a {name: array} dict to a LossResult whose gradient keys
    are a subset of the input names. At least 64 coordinates (or all
    available) are sampled uniformly across the differentiable inputs;
    coordinates flagged in `exclude` (per-input boolean arrays, e.g. pixels
    next to L1 kinks) are skipped.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-7, 1e-3]")
    base = loss_fn(inputs)
    pool = []
    for name, grad in base.gradients.items():
        if name not in inputs:
            continue  # gradient of a captured constant; nothing to perturb
        skip = None if exclude is None else exclude.get(name)
        for idx in np.ndindex(grad.shape):
            if skip is not None and skip[idx]:
                continue
            pool.append((name, idx))
    if not pool:
        raise ValueError("no coordinates available for finite differences")
    rng = np.random.default_rng(seed)
    n = min(len(pool), max(64, n_samples))
    chosen = rng.choice(len(pool), size=n, replace=False)

    worst = 0.0
    for k in chosen:
        name, idx = pool[k]
        perturbed = dict(inputs)
        plus = inputs[name].copy()
        plus[idx] += eps
        perturbed[name] = plus
        f_plus = loss_fn(perturbed).value
        minus = inputs[name].copy()
        minus[idx] -= eps
        perturbed[name] = minus
        f_minus = loss_fn(perturbed).value
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise ValueError(f"loss is non-finite near {name}{idx}")
        g_fd = (f_plus - f_minus) / (2.0 * eps)
        g_an = base.gradients[name][idx]
        worst = max(worst, abs(g_an - g_fd) / max(1e-8, abs(g_fd)))
    return worst
