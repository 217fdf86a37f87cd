"""Finite-shot model of the probe Z readout.

The target value ``A`` is tied to the probe by ``A = k <Z>``, each shot
yields +1 with probability ``p+ = (1 + A/k)/2``, and the estimator is
``k * mean(Z)`` with variance ``(k**2 - A**2)/n``. ``k = 1`` is the
basis-shift configuration; the projector (MUB) configurations read the
matrix element at ``k = d`` (states, POVMs) or ``k = d**2`` (processes).

All randomness comes from :func:`make_rng`, a Philox-4x64 counter-based
generator keyed by a tuple of integers through ``numpy.random.SeedSequence``,
so streams are reproducible per ``(seed, element)`` regardless of
evaluation order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hadamard import HadamardTestSpec, expectation

__all__ = [
    "ShotPlan",
    "ShotEstimate",
    "make_rng",
    "p_plus",
    "sample_estimator",
    "sample_z",
    "variance_predicted",
    "sample_hadamard",
    "variance_sweep",
]

_SLACK = 1e-12


def make_rng(*key) -> np.random.Generator:
    """Philox generator keyed by non-negative integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(x) for x in key])))


@dataclass(frozen=True)
class ShotPlan:
    n: int
    seed: int = 0
    k: float = 1.0

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("shot count must be at least 1")
        if not self.k > 0:
            raise ValueError("scale factor k must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "k", float(self.k))


@dataclass(frozen=True)
class ShotEstimate:
    estimate: float
    sample_variance: float  # estimated variance of `estimate`
    n: int

    @property
    def stderr(self) -> float:
        return float(np.sqrt(self.sample_variance))


def _check_range(a, k):
    if abs(a) > k * (1.0 + _SLACK):
        raise ValueError(f"|A|={abs(a):.6g} exceeds k={k:.6g}; the +-1 readout cannot produce it")


def p_plus(a, k=1.0) -> float:
    _check_range(a, k)
    return float(min(1.0, max(0.0, 0.5 * (1.0 + a / k))))


def variance_predicted(a, k, n) -> float:
    _check_range(a, k)
    if n < 1:
        raise ValueError("shot count must be at least 1")
    return max(k * k - a * a, 0.0) / n


def sample_z(z_mean, n, rng) -> tuple[float, float]:
    """Draw ``n`` +-1 outcomes with mean ``z_mean``.

    Returns the sample mean of Z and the estimated variance of that mean.
    The number of +1 outcomes is binomial, which is distributed exactly like
    summing ``n`` Bernoulli draws.
    """
    pp = min(1.0, max(0.0, 0.5 * (1.0 + z_mean)))
    plus = rng.binomial(n, pp)
    zbar = (2.0 * plus - n) / n
    if n > 1:
        var_z = n / (n - 1) * (1.0 - zbar * zbar)
    else:
        var_z = 0.0
    return zbar, max(var_z, 0.0) / n


def sample_estimator(a, plan: ShotPlan, rng=None) -> ShotEstimate:
    _check_range(a, plan.k)
    rng = make_rng(plan.seed) if rng is None else rng
    zbar, var_mean = sample_z(a / plan.k, plan.n, rng)
    return ShotEstimate(plan.k * zbar, plan.k**2 * var_mean, plan.n)


def sample_hadamard(spec: HadamardTestSpec, plan: ShotPlan, rng=None) -> ShotEstimate:
    """Sample the probe readout of ``spec``.

    The estimate targets ``k * expectation(spec)``; pass ``k=1`` for shift
    configurations and ``k=d`` for projector configurations, so both
    estimate the same matrix element.
    """
    z = expectation(spec)
    if abs(z) > 1.0 + _SLACK:
        raise ValueError(f"probe expectation {z:.6g} outside [-1, 1]; mis-scaled configuration")
    return sample_estimator(plan.k * z, plan, rng)


def variance_sweep(a_values, k_values, n, n_seeds, seed=0):
    """Empirical vs predicted estimator variance on an (A, k) grid.

    Yields one dict per admissible grid point (``|A| <= k``). ``empirical``
    is the per-run sample variance of the estimator averaged over seeds;
    ``spread`` is the variance of the estimates across seeds.
    """
    for ai, a in enumerate(a_values):
        for ki, k in enumerate(k_values):
            if abs(a) > k * (1.0 + _SLACK):
                continue
            estimates = np.empty(n_seeds)
            variances = np.empty(n_seeds)
            for s in range(n_seeds):
                est = sample_estimator(a, ShotPlan(n, 0, k), make_rng(seed, ai, ki, s))
                estimates[s] = est.estimate
                variances[s] = est.sample_variance
            yield {
                "A": float(a),
                "k": float(k),
                "n": int(n),
                "predicted": variance_predicted(a, k, n),
                "empirical": float(variances.mean()),
                "spread": float(estimates.var(ddof=1)) if n_seeds > 1 else 0.0,
                "mean": float(estimates.mean()),
                "n_seeds": int(n_seeds),
            }
