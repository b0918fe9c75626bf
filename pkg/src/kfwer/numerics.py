"""Scalar numerical kernels.

Normal CDF and quantile, integration against the standard normal weight,
monotone root finding and binomial tail sums. Everything downstream
(null models, critical values, probability oracles) is built on these
five operations.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp, ndtr, ndtri, roots_hermitenorm

from .errors import BracketingError, ConfigurationError, ConvergenceError, DomainError

__all__ = [
    "AccuracySpec",
    "DEFAULT_ACCURACY",
    "normal_cdf",
    "normal_quantile",
    "integrate_gaussian",
    "find_root",
    "binomial_tail",
]


@dataclass(frozen=True)
class AccuracySpec:
    """Accuracy contract for iterative kernels.

    abs_tol bounds both the residual and the bracket width in find_root
    and the inter-refinement difference in integrate_gaussian. rel_tol
    is applied relative to the magnitude of the quantity being refined.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_refinements: int = 8

    def __post_init__(self):
        if not (self.abs_tol > 0 and math.isfinite(self.abs_tol)):
            raise ConfigurationError("abs_tol must be a positive finite real")
        if not (self.rel_tol > 0 and math.isfinite(self.rel_tol)):
            raise ConfigurationError("rel_tol must be a positive finite real")
        if self.max_refinements < 4:
            raise ConfigurationError("max_refinements must be at least 4")


DEFAULT_ACCURACY = AccuracySpec()


def normal_cdf(x: float) -> float:
    """Standard normal CDF Phi(x)."""
    if not math.isfinite(x):
        raise DomainError(f"normal_cdf requires a finite argument, got {x!r}")
    return float(ndtr(x))


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF, defined on the open interval (0, 1)."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"normal_quantile requires 0 < p < 1, got {p!r}")
    return float(ndtri(p))


@lru_cache(maxsize=32)
def _gauss_rule(count: int):
    # roots_hermitenorm integrates against exp(-y^2/2); fold the 1/sqrt(2*pi)
    # normalization into the weights so the rule integrates against phi(y).
    nodes, weights = roots_hermitenorm(count)
    return nodes, weights / math.sqrt(2.0 * math.pi)


def _gauss_apply(f, count: int) -> float:
    nodes, weights = _gauss_rule(count)
    values = np.asarray(f(nodes), dtype=float)
    if values.ndim == 0:
        values = np.full(nodes.shape, float(values))
    return float(weights @ values)


def integrate_gaussian(f, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Integral of f(y) phi(y) dy over the real line.

    f must accept a numpy array of evaluation points. The node count
    starts at 64 and doubles until two successive estimates agree within
    acc; refinement exhaustion raises ConvergenceError carrying the last
    two estimates.
    """
    count = 64
    previous = _gauss_apply(f, count)
    for _ in range(acc.max_refinements):
        count *= 2
        current = _gauss_apply(f, count)
        if abs(current - previous) <= max(acc.abs_tol, acc.rel_tol * abs(current)):
            return current
        previous = current
    raise ConvergenceError(
        f"gaussian quadrature did not settle within {acc.max_refinements} doublings",
        last_estimates=(previous, current),
    )


def find_root(g, lo: float, hi: float, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Root of a monotone function on a bracketing interval.

    Bisection with a secant step on alternating iterations. Returns x
    once the bracket width is at most acc.abs_tol and the residual is at
    most max(acc.abs_tol, acc.rel_tol * initial residual scale); the
    relative term keeps the stopping rule invariant under rescaling g.
    """
    if not (lo < hi):
        raise ConfigurationError(f"invalid bracket [{lo!r}, {hi!r}]")
    a, b = float(lo), float(hi)
    fa, fb = float(g(a)), float(g(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise BracketingError(
            f"no sign change on [{lo!r}, {hi!r}]: g(lo)={fa!r}, g(hi)={fb!r}"
        )
    res_tol = max(acc.abs_tol, acc.rel_tol * max(abs(fa), abs(fb)))
    max_iter = 256
    for iteration in range(max_iter):
        if b - a <= acc.abs_tol and min(abs(fa), abs(fb)) <= res_tol:
            return a if abs(fa) <= abs(fb) else b
        use_secant = iteration % 2 == 1 and fb != fa
        if use_secant:
            x = a - fa * (b - a) / (fb - fa)
            if not (a < x < b):
                x = 0.5 * (a + b)
        else:
            x = 0.5 * (a + b)
        if x <= a or x >= b:
            # bracket has collapsed to adjacent floats
            return a if abs(fa) <= abs(fb) else b
        fx = float(g(x))
        if fx == 0.0:
            return x
        if (fx > 0.0) == (fb > 0.0):
            b, fb = x, fx
        else:
            a, fa = x, fx
    raise ConvergenceError(
        f"root finding did not converge in {max_iter} iterations on [{lo!r}, {hi!r}]",
        last_estimates=(a, b),
    )


def binomial_tail(m: int, j0: int, u: float) -> float:
    """Upper binomial tail sum_{j=j0}^{m} C(m,j) u^j (1-u)^(m-j).

    Evaluated in log space so large m (the order-statistic constants use
    m up to a few thousand) neither overflows nor underflows.
    """
    if m < 1 or int(m) != m:
        raise ConfigurationError(f"m must be a positive integer, got {m!r}")
    if not (0 <= j0 <= m) or int(j0) != j0:
        raise ConfigurationError(f"j0 must be an integer in [0, {m}], got {j0!r}")
    if not (0.0 <= u <= 1.0):
        raise DomainError(f"u must lie in [0, 1], got {u!r}")
    if j0 == 0:
        return 1.0
    if u == 0.0:
        return 0.0
    if u == 1.0:
        return 1.0
    j = np.arange(j0, m + 1, dtype=float)
    log_terms = (
        gammaln(m + 1.0)
        - gammaln(j + 1.0)
        - gammaln(m - j + 1.0)
        + j * math.log(u)
        + (m - j) * math.log1p(-u)
    )
    return min(1.0, float(np.exp(logsumexp(log_terms))))
