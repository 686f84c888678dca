"""Hypothesis tests and correlation, self-contained.

p-values come from the Student-t distribution evaluated through the
regularized incomplete beta function, computed with the continued-fraction
(modified Lentz) scheme, so no external statistics package is needed at
runtime.  The test suite cross-checks every result against an independent
reference implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import LengthMismatch, TooFewSamples, ZeroVariance

_CF_MAX_ITER = 300
_CF_EPS = 1e-15
_CF_TINY = 1e-300

TWO_SAMPLE_EQUAL_VAR = "two_sample_equal_var"
ONE_SAMPLE = "one_sample"

_ALTERNATIVES = ("two-sided", "greater", "less")


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    test_kind: str

    def as_dict(self) -> dict:
        return {
            "t_statistic": self.t_statistic,
            "degrees_of_freedom": self.degrees_of_freedom,
            "p_value": self.p_value,
            "test_kind": self.test_kind,
        }


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz scheme."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, dof: int) -> float:
    """Two-sided tail probability of Student's t with ``dof`` degrees."""
    if dof < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if t == 0.0:
        return 1.0
    x = dof / (dof + t * t)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x)


def _directional_p(t: float, dof: int, alternative: str) -> float:
    if alternative not in _ALTERNATIVES:
        raise ValueError(f"alternative must be one of {_ALTERNATIVES}")
    two_sided = student_t_two_sided_p(t, dof)
    if alternative == "two-sided":
        return two_sided
    upper_tail = two_sided / 2.0 if t > 0 else 1.0 - two_sided / 2.0
    return upper_tail if alternative == "greater" else 1.0 - upper_tail


def _mean_and_ss(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    ss = math.fsum((v - mean) ** 2 for v in values)
    return mean, ss


def t_test_two_sample(
    a: Sequence[float],
    b: Sequence[float],
    alternative: str = "two-sided",
) -> TTestResult:
    """Independent two-sample t-test with pooled (equal) variance.

    Two constant, equal samples have no detectable difference and return
    t = 0, p = 1; constant samples with different means make the statistic
    undefined and raise :class:`ZeroVariance`.
    """
    if len(a) < 2 or len(b) < 2:
        raise TooFewSamples("each sample needs at least two observations")
    mean_a, ss_a = _mean_and_ss(a)
    mean_b, ss_b = _mean_and_ss(b)
    dof = len(a) + len(b) - 2
    pooled_var = (ss_a + ss_b) / dof
    diff = mean_a - mean_b
    if pooled_var == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, dof, 1.0, TWO_SAMPLE_EQUAL_VAR)
        raise ZeroVariance("both samples constant with different means")
    se = math.sqrt(pooled_var * (1.0 / len(a) + 1.0 / len(b)))
    t = diff / se
    return TTestResult(t, dof, _directional_p(t, dof, alternative), TWO_SAMPLE_EQUAL_VAR)


def t_test_one_sample(
    a: Sequence[float],
    mu0: float,
    alternative: str = "two-sided",
) -> TTestResult:
    """One-sample t-test of the mean against ``mu0``."""
    if len(a) < 2:
        raise TooFewSamples("one-sample test needs at least two observations")
    mean, ss = _mean_and_ss(a)
    dof = len(a) - 1
    diff = mean - mu0
    if ss == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, dof, 1.0, ONE_SAMPLE)
        raise ZeroVariance("sample is constant and differs from mu0")
    se = math.sqrt(ss / dof) / math.sqrt(len(a))
    t = diff / se
    return TTestResult(t, dof, _directional_p(t, dof, alternative), ONE_SAMPLE)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient, clamped to [-1, 1]."""
    if len(x) != len(y):
        raise LengthMismatch(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise TooFewSamples("correlation needs at least two pairs")
    mean_x, ss_x = _mean_and_ss(x)
    mean_y, ss_y = _mean_and_ss(y)
    if ss_x == 0.0 or ss_y == 0.0:
        raise ZeroVariance("correlation undefined for a constant vector")
    cov = math.fsum((xv - mean_x) * (yv - mean_y) for xv, yv in zip(x, y))
    r = cov / math.sqrt(ss_x * ss_y)
    return min(1.0, max(-1.0, r))
