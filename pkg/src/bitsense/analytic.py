"""Probability machinery for the agreement-count detector.

Covers the conditional agreement probability of consecutive one-bit
samples under H1 (in two independent evaluation paths: an arcsine closed
form and numerical quadrature of the Gaussian orthant integral), the
Q-function, theory moments of the statistic under both hypotheses, the
Gaussian-approximation ROC, and an exact binomial H0 tail that serves as
oracle for the approximations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .curves import RocCurve, RocSource
from .model import (
    DetectorDirection,
    Hypothesis,
    ModelParams,
    NonPositiveDefiniteError,
)

# Orthant quadrature: integration domain is truncated at 10 standard
# deviations (discarded tail mass < 8e-24) and the integrator's error
# estimate must come in below this bound.
_QUAD_TRUNCATION = 10.0
_QUAD_MAX_ERR = 1e-9

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class TheoryMode(enum.Enum):
    """Which H1 moment formulas the Gaussian approximation uses.

    PAPER_LITERAL keeps the printed formulas mean = 2p(n-1)N and
    variance = 2p(1-2p)(n-1)N even though that variance is negative
    whenever p > 1/2.  CONSISTENT uses the independent-Bernoulli
    approximation mean = p(n-1)N, variance = p(1-p)(n-1)N, which is the
    operational default; the residual covariance between adjacent
    agreement indicators (they share a bit) is deliberately ignored and
    quantified empirically instead.
    """

    PAPER_LITERAL = "paper"
    CONSISTENT = "consistent"


class AgreementMethod(enum.Enum):
    CLOSED_FORM = "closed-form"
    QUADRATURE = "quadrature"


class NegativeVarianceError(ValueError):
    """The paper-literal H1 variance is negative; refused, never patched."""


@dataclass(frozen=True)
class AgreementProb:
    """P(consecutive bits agree | H1), with its normalized correlation.

    ``rho`` is r / (sigma_s2 + sigma2), the correlation of the two noisy
    analog samples whose signs are compared.
    """

    p: float
    rho: float
    method: AgreementMethod

    @property
    def p_prime(self) -> float:
        """P(second bit is 1 | first bit is 0, H1) = 1 - p."""
        return 1.0 - self.p


@dataclass(frozen=True)
class TheoryMoments:
    mean: float
    variance: float
    hypothesis: Hypothesis
    mode: TheoryMode


def _cov2_correlation(c11: float, c12: float, c22: float) -> float:
    """Correlation of a 2x2 covariance; raises unless positive definite."""
    if not (c11 > 0 and c22 > 0 and c11 * c22 - c12 * c12 > 0):
        raise NonPositiveDefiniteError(
            f"2x2 covariance [[{c11}, {c12}], [{c12}, {c22}]] is not positive definite"
        )
    return c12 / math.sqrt(c11 * c22)


def orthant_prob_closed(c11: float, c12: float, c22: float) -> float:
    """P(z1 >= 0, z2 >= 0) for a zero-mean bivariate Gaussian, closed form.

    Equal to 1/4 + arcsin(rho) / (2 pi).  Must stay cross-validated
    against :func:`orthant_prob_quadrature`, the independent evaluation
    of the same integral.
    """
    rho = _cov2_correlation(c11, c12, c22)
    return 0.25 + math.asin(rho) / (2.0 * math.pi)


def orthant_prob_quadrature(c11: float, c12: float, c22: float) -> float:
    """P(z1 >= 0, z2 >= 0) by numerical integration, to within 1e-8.

    The orthant probability is scale-invariant, so standardize and
    condition on z1 = t: z2 | z1=t is normal with mean rho*t and variance
    1 - rho^2, reducing the double integral to

        int_0^inf phi(t) * Phi(rho t / sqrt(1 - rho^2)) dt.

    Adaptive quadrature on [0, 10] refines until the error estimate is
    below 1e-9; the truncated tail is < 8e-24.  This path never touches
    the arcsine identity, so it is a genuine oracle for the closed form.
    """
    rho = _cov2_correlation(c11, c12, c22)
    slope = rho / math.sqrt((1.0 - rho) * (1.0 + rho))

    def integrand(t):
        return _INV_SQRT_2PI * math.exp(-0.5 * t * t) * special.ndtr(slope * t)

    value, abserr = integrate.quad(
        integrand, 0.0, _QUAD_TRUNCATION, epsabs=1e-12, epsrel=1e-12, limit=200
    )
    if abserr > _QUAD_MAX_ERR:
        raise ArithmeticError(
            f"orthant quadrature did not converge: error estimate {abserr:.3g}"
        )
    return value


def agreement_prob(
    params: ModelParams,
    method: AgreementMethod = AgreementMethod.CLOSED_FORM,
) -> AgreementProb:
    """Conditional agreement probability p of consecutive bits under H1.

    The two noisy samples being compared are jointly Gaussian with
    common variance sigma_s2 + sigma2 and covariance r; p is twice their
    positive-orthant probability, i.e. 1/2 + arcsin(rho)/pi in closed
    form.  ``method`` selects the evaluation path.
    """
    c = params.sigma_s2 + params.sigma2
    if method is AgreementMethod.CLOSED_FORM:
        orthant = orthant_prob_closed(c, params.r, c)
    else:
        orthant = orthant_prob_quadrature(c, params.r, c)
    return AgreementProb(p=2.0 * orthant, rho=params.r / c, method=method)


def q_function(x: float) -> float:
    """Standard normal upper-tail probability Q(x) = P(Z >= x).

    Evaluated as erfc(x / sqrt(2)) / 2; relative error is at the few-ulp
    level across |x| <= 8.
    """
    return 0.5 * math.erfc(x / _SQRT2)


def moments(
    params: ModelParams,
    hypothesis: Hypothesis,
    mode: TheoryMode = TheoryMode.CONSISTENT,
) -> TheoryMoments:
    """Mean and variance of the agreement count under a hypothesis.

    H0: mean (n-1)N/2 and variance (n-1)N/4 in both modes; under H0 the
    agreement indicators are iid fair coins, so these match the exact
    binomial.  H1 differs by mode (see :class:`TheoryMode`); the
    paper-literal variance goes negative for p > 1/2 and is returned
    as-is so the inconsistency stays visible.
    """
    if not isinstance(mode, TheoryMode):
        raise ValueError(f"unknown theory mode: {mode!r}")
    m = params.pairs_total
    if hypothesis is Hypothesis.H0:
        return TheoryMoments(0.5 * m, 0.25 * m, hypothesis, mode)
    p = agreement_prob(params).p
    if mode is TheoryMode.PAPER_LITERAL:
        return TheoryMoments(2.0 * p * m, 2.0 * p * (1.0 - 2.0 * p) * m, hypothesis, mode)
    return TheoryMoments(p * m, p * (1.0 - p) * m, hypothesis, mode)


def gaussian_tail(eta: float, mean: float, var: float, direction: DetectorDirection) -> float:
    """P(decide H1) for a Gaussian statistic, honoring the test direction.

    A zero variance (paper-literal mode at r = 0) degenerates to a point
    mass at the mean and the tail becomes a step function.
    """
    if var == 0.0:
        fires = mean >= eta if direction is DetectorDirection.GREATER_IS_H1 else mean <= eta
        return 1.0 if fires else 0.0
    sd = math.sqrt(var)
    if direction is DetectorDirection.GREATER_IS_H1:
        return q_function((eta - mean) / sd)
    return q_function((mean - eta) / sd)


def theory_roc(
    params: ModelParams,
    mode: TheoryMode,
    thresholds,
) -> RocCurve:
    """Gaussian-approximation ROC: Pfa and Pd at every threshold.

    Pfa = Q((eta - mean_H0)/sd_H0) and Pd = Q((eta - mean_H1)/sd_H1) for
    an upward test; for r < 0 the tails flip to lower-tail
    probabilities.  r = 0 has no defined direction; the upward
    convention is used, under which both modes reduce to the chance
    diagonal in all informative senses.  Raises
    :class:`NegativeVarianceError` in paper-literal mode when p > 1/2.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    m0 = moments(params, Hypothesis.H0, mode)
    m1 = moments(params, Hypothesis.H1, mode)
    if m1.variance < 0:
        p = agreement_prob(params).p
        raise NegativeVarianceError(
            f"H1 variance {m1.variance:.6g} < 0 in paper-literal mode "
            f"(p = {p:.6g} > 1/2); use TheoryMode.CONSISTENT"
        )
    direction = (
        DetectorDirection.LESS_IS_H1 if params.r < 0 else DetectorDirection.GREATER_IS_H1
    )
    pfa = np.array([gaussian_tail(e, m0.mean, m0.variance, direction) for e in thresholds])
    pd = np.array([gaussian_tail(e, m1.mean, m1.variance, direction) for e in thresholds])
    source = (
        RocSource.THEORY_PAPER_LITERAL
        if mode is TheoryMode.PAPER_LITERAL
        else RocSource.THEORY_CONSISTENT
    )
    return RocCurve(eta=thresholds, pfa=pfa, pd=pd, source=source, trials_used=0)


def exact_h0_tail(params: ModelParams, eta: int) -> float:
    """Exact P(Y >= eta | H0) as a Binomial((n-1)N, 1/2) upper tail.

    Under H0 all bits are iid fair coins, so the (n-1)N consecutive-pair
    agreement indicators are iid Bernoulli(1/2) and the count is exactly
    binomial.  Computed in integer arithmetic and rounded once at the
    end, so the value is correct to the last float digit.
    """
    m = params.pairs_total
    eta = int(eta)
    if eta <= 0:
        return 1.0
    if eta > m:
        return 0.0
    numerator = sum(math.comb(m, k) for k in range(eta, m + 1))
    return float(Fraction(numerator, 2**m))
