"""Closed-form certificates comparing a perceptron on a dataset and on a reduction of it."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from .dataset import LabeledDataset
from .errors import ContractError
from .metric import dual_norm
from .perceptron import accuracy, classify, mse_loss, pre_activation
from .reduce import lambda_balance_audit, nearest_representative_pairing

__all__ = [
    "SIGMOID_SLOPE_CAP",
    "SIGMOID_SQUARED_SLOPE_CAP",
    "power_slope_cap",
    "sigma_power_derivative",
    "rho",
    "output_perturbation_bound",
    "margin",
    "margins",
    "LossGapReport",
    "loss_gap_bound",
    "epsilon_for_delta",
    "AgreementReport",
    "classification_agreement_check",
    "BoundReport",
    "bound_report",
]

SIGMOID_SLOPE_CAP = 0.25
SIGMOID_SQUARED_SLOPE_CAP = 8.0 / 27.0


def power_slope_cap(m: int) -> float:
    """Global maximum of the derivative of sigmoid**m: (m / (m + 1)) ** (m + 1)."""
    return (m / (m + 1)) ** (m + 1)


def sigma_power_derivative(m: int, z):
    """``m sigma(z)^m (1 - sigma(z))``, the derivative of ``sigma**m``."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    z = np.asarray(z, dtype=float)
    # 1 - sigma(z) == sigma(-z), which keeps precision for large z
    out = m * expit(z) ** m * expit(-z)
    return out if out.ndim else float(out)


def rho(m: int, a, b):
    """Maximum of ``sigma_power_derivative(m, .)`` over the interval between ``a`` and ``b``.

    The derivative increases up to ``log m`` and decreases after it, so the
    maximum is at the left end, the right end or ``log m``. Vectorised over
    ``a`` and ``b``.
    """
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    peak = math.log(m)
    out = np.where(
        lo > peak,
        sigma_power_derivative(m, lo),
        np.where(hi < peak, sigma_power_derivative(m, hi), power_slope_cap(m)),
    )
    return out if np.ndim(out) else float(out)


def output_perturbation_bound(m: int, w, epsilon: float, a, b, include_bias: bool = False) -> tuple[float, float]:
    """Bounds on ``|y(x~)^m - y(x)^m|`` when ``|x - x~| <= epsilon``.

    ``a`` and ``b`` are the pre-activations at the two points. Returns the
    interval-aware bound and the global one using the slope cap.
    """
    norm = dual_norm(w, include_bias)
    return float(rho(m, a, b)) * norm * epsilon, power_slope_cap(m) * norm * epsilon


def margin(w, x, include_bias: bool = False) -> float:
    """Distance-like ratio ``|w . (1, x)| / ||w||`` used as the agreement radius."""
    norm = dual_norm(w, include_bias)
    if norm == 0.0:
        raise ContractError("margin undefined for zero weights")
    return float(abs(pre_activation(w, np.asarray(x, dtype=float)))) / norm


def margins(w, points, include_bias: bool = False) -> np.ndarray:
    norm = dual_norm(w, include_bias)
    if norm == 0.0:
        raise ContractError("margin undefined for zero weights")
    return np.abs(pre_activation(w, np.asarray(points, dtype=float))) / norm


def _pairing(original: LabeledDataset, reduced: LabeledDataset, pairing) -> np.ndarray:
    if pairing is None:
        return nearest_representative_pairing(original, reduced)
    pairing = np.asarray(pairing, dtype=np.int64)
    if pairing.shape != (len(original),):
        raise ContractError("pairing must assign one representative to every original point")
    if np.any(pairing < 0) or np.any(pairing >= len(reduced)):
        raise ContractError("pairing refers to a missing representative")
    if np.any(reduced.labels[pairing] != original.labels):
        raise ContractError("pairing matches points of different classes")
    return pairing


@dataclass(frozen=True)
class LossGapReport:
    bound: float
    bound_capped: float
    gap: float
    weighted_gap: float
    rho1: np.ndarray
    rho2: np.ndarray
    balanced: bool

    @property
    def holds(self) -> bool:
        return self.weighted_gap <= self.bound


def loss_gap_bound(
    w,
    original: LabeledDataset,
    reduced: LabeledDataset,
    pairing=None,
    epsilon: Optional[float] = None,
) -> LossGapReport:
    """Evaluate the loss-difference bound next to the actual loss difference.

    ``bound`` averages ``(2 c rho1 + rho2) |w . (x - x~)|`` over the original
    points with per-pair slopes; ``bound_capped`` uses 1/4 and 8/27 instead.
    ``pairing`` defaults to the nearest same-class representative, so for a
    reduction that is not balanced some representatives count several times.
    ``gap`` is the plain loss difference; ``weighted_gap`` evaluates the
    reduced loss with each representative repeated once per original point it
    stands for. The two coincide on balanced reductions, and the bound always
    covers ``weighted_gap``.
    ``balanced`` reports whether the pairing hits every representative equally
    often (and, if ``epsilon`` is given, whether the coverage audit agrees).
    """
    pairing = _pairing(original, reduced, pairing)
    w = np.asarray(w, dtype=float)
    X, Xt = original.points, reduced.points[pairing]
    c = original.labels.astype(float)
    a, b = pre_activation(w, X), pre_activation(w, Xt)
    r1, r2 = rho(1, a, b), rho(2, a, b)
    shift = np.abs((X - Xt) @ w[1:])
    bound = float(np.mean((2 * c * r1 + r2) * shift))
    capped = float(np.mean((2 * c * SIGMOID_SLOPE_CAP + SIGMOID_SQUARED_SLOPE_CAP) * shift))
    gap = abs(mse_loss(w, original) - mse_loss(w, reduced))
    weighted = abs(float(np.mean((c - expit(a)) ** 2) - np.mean((c - expit(b)) ** 2)))
    uses = np.bincount(pairing, minlength=len(reduced))
    balanced = bool(np.all(uses == uses[0]))
    if balanced and epsilon is not None:
        balanced = lambda_balance_audit(original, reduced, epsilon).lam == uses[0]
    return LossGapReport(bound, capped, gap, weighted, np.atleast_1d(r1), np.atleast_1d(r2), balanced)


def epsilon_for_delta(delta: float, w, include_bias: bool = False) -> float:
    """Largest representation error that keeps the loss difference below ``delta``: 54 delta / (43 ||w||)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    norm = dual_norm(w, include_bias)
    if norm == 0.0:
        raise ContractError("epsilon_for_delta undefined for zero weights")
    return 54.0 * delta / (43.0 * norm)


@dataclass(frozen=True)
class AgreementReport:
    pairs: int
    pairs_within_margin: int
    violations: int
    min_margin: float
    accuracy_original: float
    accuracy_reduced: float
    accuracy_equal: Optional[bool]


def classification_agreement_check(
    w,
    original: LabeledDataset,
    reduced: LabeledDataset,
    pairing=None,
    epsilon: Optional[float] = None,
    include_bias: bool = False,
) -> AgreementReport:
    """Check that a point and its representative get the same class whenever
    the representation error is within the point's margin.

    ``violations`` counts pairs with ``|x - x~| <= epsilon <= margin(x)`` but
    different predictions (``epsilon`` defaults to the pair's own distance).
    ``accuracy_equal`` is only set when the pairing is balanced and
    ``epsilon`` does not exceed the smallest margin; then both accuracies
    must coincide.
    """
    pairing = _pairing(original, reduced, pairing)
    X, Xt = original.points, reduced.points[pairing]
    dist = np.linalg.norm(X - Xt, axis=1)
    radius = dist if epsilon is None else np.full(len(X), float(epsilon))
    mg = margins(w, X, include_bias)
    applies = (dist <= radius) & (radius <= mg)
    disagree = classify(w, X) != classify(w, Xt)
    acc_o, acc_r = accuracy(w, original), accuracy(w, reduced)
    uses = np.bincount(pairing, minlength=len(reduced))
    equal = None
    if np.all(uses == uses[0]) and np.all(dist <= radius) and np.all(radius <= mg):
        equal = acc_o == acc_r
    return AgreementReport(
        pairs=len(X),
        pairs_within_margin=int(applies.sum()),
        violations=int((applies & disagree).sum()),
        min_margin=float(mg.min()),
        accuracy_original=acc_o,
        accuracy_reduced=acc_r,
        accuracy_equal=equal,
    )


@dataclass(frozen=True)
class BoundReport:
    rho1: float
    rho2: float
    gap_bound: float
    gap_bound_capped: float
    empirical_loss_gap: float
    weighted_loss_gap: float
    margin_min: float
    epsilon_for_delta: Optional[float]
    certified_epsilon: float
    balanced: bool
    margins: list

    def to_dict(self) -> dict:
        return {
            "rho1": self.rho1,
            "rho2": self.rho2,
            "loss_gap_bound": self.gap_bound,
            "loss_gap_bound_capped": self.gap_bound_capped,
            "empirical_loss_gap": self.empirical_loss_gap,
            "weighted_loss_gap": self.weighted_loss_gap,
            "margin_min": self.margin_min,
            "epsilon_for_delta": self.epsilon_for_delta,
            "certified_epsilon": self.certified_epsilon,
            "balanced": self.balanced,
            "margins": list(self.margins),
        }


def bound_report(
    w,
    original: LabeledDataset,
    reduced: LabeledDataset,
    delta: Optional[float] = None,
    include_bias: bool = False,
) -> BoundReport:
    """All certificates for one weight vector and one reduction.

    ``include_bias`` puts ``w[0]`` into the norm used by the margins and by
    ``epsilon_for_delta``; the loss-gap bound does not depend on it.
    """
    from .metric import optimal_epsilon_subset

    certified = optimal_epsilon_subset(original, reduced)
    gap = loss_gap_bound(w, original, reduced, epsilon=certified)
    mg = margins(w, original.points, include_bias)
    return BoundReport(
        rho1=float(gap.rho1.max()),
        rho2=float(gap.rho2.max()),
        gap_bound=gap.bound,
        gap_bound_capped=gap.bound_capped,
        empirical_loss_gap=gap.gap,
        weighted_loss_gap=gap.weighted_gap,
        margin_min=float(mg.min()),
        epsilon_for_delta=None if delta is None else epsilon_for_delta(delta, w, include_bias),
        certified_epsilon=certified,
        balanced=gap.balanced,
        margins=mg.tolist(),
    )
