"""Training losses and evaluation metrics for the advised controller.

Conventions: speed in km/h, steering-wheel angle in degrees, sequences
sampled at 10 Hz.  The composite control loss combines a proportional
term on both targets, an integral-style term on the approximated vehicle
course, and a squared derivative term on one-step error differences.
The attention-alignment loss is a KL divergence between attention maps
produced with and without advice; the with-advice map acts as a fixed
teacher (no gradient flows into it).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


@dataclass(frozen=True)
class LossWeights:
    """Weights for the composite loss: attention, course, derivative."""

    lambda_attn: float = 0.0
    lambda_integral: float = 0.0
    lambda_deriv: float = 0.0

    def __post_init__(self):
        if min(self.lambda_attn, self.lambda_integral, self.lambda_deriv) < 0:
            raise ValueError(f"loss weights must be >= 0, got {self}")


def course(v, s):
    """Approximate course change over unit time: theta = s * v.

    Holds under the one-front-wheel vehicle simplification; v in km/h,
    s in steering-wheel degrees.  Accepts scalars or arrays.
    """
    return np.asarray(s) * np.asarray(v)


def _as_scalar_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x if x.data.ndim == 0 else ad.reshape(x, ())
    return Tensor(np.asarray(float(x)))


def control_loss(pred: Sequence[tuple], gt, weights: LossWeights) -> Tensor:
    """Composite control loss over a clip.

    pred: length-T sequence of (v_hat, s_hat); entries may be autodiff
    tensors (training) or plain floats (testing).
    gt: (T, 2) array of expert (speed, steering).
    Returns a scalar tensor: the per-timestep mean of
    |e_v| + |e_s| + lambda_integral*|theta - theta_hat|
    + lambda_deriv*(d e_v^2 + d e_s^2), with the backward difference at
    t=0 defined as 0.
    """
    gt = np.asarray(gt, dtype=np.float64)
    t_len = len(pred)
    if gt.shape != (t_len, 2):
        raise ValueError(
            f"control_loss: gt shape {gt.shape} does not match {t_len} predictions")
    if t_len < 1:
        raise ValueError("control_loss: empty sequence")

    v_hat = ad.stack_rows([_as_scalar_tensor(p[0]) for p in pred])  # (T,)
    s_hat = ad.stack_rows([_as_scalar_tensor(p[1]) for p in pred])
    e_v = ad.sub(Tensor(gt[:, 0]), v_hat)
    e_s = ad.sub(Tensor(gt[:, 1]), s_hat)
    total = ad.add(ad.sum_all(ad.absolute(e_v)), ad.sum_all(ad.absolute(e_s)))

    if weights.lambda_integral > 0:
        theta_gt = Tensor(gt[:, 0] * gt[:, 1])
        theta_hat = ad.mul_elementwise(v_hat, s_hat)
        l_i = ad.sum_all(ad.absolute(ad.sub(theta_gt, theta_hat)))
        total = ad.add(total, ad.scale(l_i, weights.lambda_integral))

    if weights.lambda_deriv > 0 and t_len > 1:
        diff = np.zeros((t_len - 1, t_len))
        idx = np.arange(t_len - 1)
        diff[idx, idx] = -1.0
        diff[idx, idx + 1] = 1.0
        d = Tensor(diff)
        de_v = ad.matmul(d, ad.reshape(e_v, (t_len, 1)))
        de_s = ad.matmul(d, ad.reshape(e_s, (t_len, 1)))
        l_d = ad.add(ad.sum_all(ad.square(de_v)), ad.sum_all(ad.square(de_s)))
        total = ad.add(total, ad.scale(l_d, weights.lambda_deriv))

    return ad.scale(total, 1.0 / t_len)


def _alpha_values(a) -> np.ndarray:
    arr = a.data if isinstance(a, Tensor) else np.asarray(a, dtype=np.float64)
    return arr.reshape(-1)


def internalization_loss(alphas_with: Sequence, alphas_without: Sequence,
                         lambda_attn: float) -> Tensor:
    """Attention-alignment loss: lambda * sum_t KL(alpha_with || alpha_without).

    The with-advice maps are the teacher and are treated as constants;
    gradients flow only into the without-advice maps.  Both inputs must
    be normalized distributions.
    """
    if len(alphas_with) != len(alphas_without):
        raise ValueError("internalization_loss: sequence lengths differ")
    if lambda_attn < 0:
        raise ValueError("internalization_loss: lambda must be >= 0")
    terms = []
    for a_w, a_wo in zip(alphas_with, alphas_without):
        p = _alpha_values(a_w)
        q_vals = _alpha_values(a_wo)
        if p.shape != q_vals.shape:
            raise ValueError(
                f"internalization_loss: map lengths differ, {p.shape} vs {q_vals.shape}")
        for name, arr in (("with", p), ("without", q_vals)):
            if abs(arr.sum() - 1.0) > 1e-6 or arr.min() < 0:
                raise ValueError(
                    f"internalization_loss: {name}-advice map is not normalized")
        entropy = float(np.sum(np.where(p > 0, p * np.log(np.maximum(p, 1e-300)), 0.0)))
        q = a_wo if isinstance(a_wo, Tensor) else Tensor(q_vals)
        if q.data.ndim != 1:
            q = ad.reshape(q, (q.data.size,))
        cross = ad.sum_all(ad.mul_elementwise(Tensor(p), ad.log(q)))
        terms.append(ad.add(Tensor(np.asarray(entropy)), ad.neg(cross)))
    total = terms[0]
    for t in terms[1:]:
        total = ad.add(total, t)
    return ad.scale(total, lambda_attn)


def kl_divergence(p, q) -> float:
    """Plain KL divergence between two normalized maps (numpy, no gradients)."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / q), 0.0)
    return float(terms.sum())


def abs_error_stats(pred, gt) -> tuple[float, float, float]:
    """(median, Q1, Q3) of absolute errors pooled over all timesteps."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1)
    if pred.size == 0 or pred.shape != gt.shape:
        raise ValueError(
            f"abs_error_stats: need equal nonempty series, got {pred.shape} vs {gt.shape}")
    err = np.abs(pred - gt)
    q1, med, q3 = np.quantile(err, [0.25, 0.5, 0.75], method="linear")
    return float(med), float(q1), float(q3)


def pearson(a, b) -> float:
    """Pearson correlation; 0 when either series has zero variance."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size < 2 or a.shape != b.shape:
        raise ValueError("pearson: need equal series of length >= 2")
    da, db = a - a.mean(), b - b.mean()
    denom = np.sqrt((da * da).sum() * (db * db).sum())
    if denom == 0.0:
        return 0.0
    return float((da * db).sum() / denom)


def mean_correlation(clips: Sequence[tuple]) -> float:
    """Mean per-clip Pearson correlation between predicted and expert series."""
    if not clips:
        raise ValueError("mean_correlation: no clips")
    return float(np.mean([pearson(p, g) for p, g in clips]))


def mean_correlation_distance(clips: Sequence[tuple]) -> float:
    """Mean per-clip (1 - Pearson); the alternative reading of 'Corr'."""
    if not clips:
        raise ValueError("mean_correlation_distance: no clips")
    return float(np.mean([1.0 - pearson(p, g) for p, g in clips]))
