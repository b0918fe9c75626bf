"""Critical value sets for k-FWER procedures.

Each constructor returns a CriticalValueSet holding the defining
constants alpha_k <= ... <= alpha_n together with the padded length-n
vector c_i = alpha_max(i, k) that the stepwise procedures consume. The
first k - 1 padded entries equal alpha_k: rejections there cannot raise
the count of k or more errors, so the largest monotone choice is used.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import ConfigurationError
from .models import NullModel, gk_quantile, independent
from .numerics import binomial_tail, find_root

__all__ = [
    "PROCEDURES",
    "CriticalValueSet",
    "gen_simes_critvals",
    "gen_simes_critvals_closed_form",
    "gen_hochberg_critvals",
    "lr_critvals",
    "romano_critvals",
    "classic_critvals",
    "critical_value_set",
]

PROCEDURES = (
    "gen_simes",
    "gen_hochberg_stepup",
    "gen_holm_stepdown",
    "lr_stepdown",
    "lr_stepup",
    "romano_stepdown",
    "classic_simes",
    "classic_holm",
    "classic_hochberg",
)

CLASSIC_PROCEDURES = ("classic_simes", "classic_holm", "classic_hochberg")


@dataclass(frozen=True)
class CriticalValueSet:
    procedure: str
    n: int
    k: int
    alpha: float
    model: NullModel | None
    values: tuple  # alpha_k .. alpha_n
    padded: tuple  # length n, padded[i-1] = alpha_max(i, k)

    def value_at(self, i: int) -> float:
        """The constant alpha_i, defined for i = k .. n."""
        if not (self.k <= i <= self.n):
            raise ConfigurationError(f"alpha_i defined for {self.k} <= i <= {self.n}")
        return self.values[i - self.k]

    def model_description(self) -> str:
        return self.model.describe() if self.model is not None else "independent"


def _validate(n, k, alpha):
    if int(n) != n or n < 1:
        raise ConfigurationError(f"n must be a positive integer, got {n!r}")
    if int(k) != k or k < 1:
        raise ConfigurationError(f"k must be a positive integer, got {k!r}")
    if k > n:
        raise ConfigurationError(f"n must be at least k, got n={n}, k={k}")
    if not (0.0 < alpha < 1.0):
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha!r}")
    return int(n), int(k), float(alpha)


def _package(procedure, n, k, alpha, model, values) -> CriticalValueSet:
    # quantile inversion can wobble adjacent values by the root tolerance
    # when targets are nearly equal; restore monotonicity in place
    vals = np.maximum.accumulate(np.asarray(values, dtype=float))
    if not (vals[0] > 0.0 and vals[-1] < 1.0):
        raise ConfigurationError(
            f"critical values escaped (0, 1): alpha_k={vals[0]!r}, alpha_n={vals[-1]!r}"
        )
    padded = tuple(float(vals[max(i, k) - k]) for i in range(1, n + 1))
    return CriticalValueSet(
        procedure=procedure,
        n=n,
        k=k,
        alpha=alpha,
        model=model,
        values=tuple(float(v) for v in vals),
        padded=padded,
    )


def _closed_form_simes(n, k, alpha, i):
    # alpha_i = (alpha * prod_{j=1}^{k} (i-k+j)/(n-k+j)) ** (1/k), in log
    # space so the product stays accurate out to n in the thousands
    log_val = math.log(alpha)
    for j in range(1, k + 1):
        log_val += math.log(i - k + j) - math.log(n - k + j)
    return math.exp(log_val / k)


def _closed_form_hochberg(n, k, alpha, i):
    # alpha_i = (alpha * prod_{j=1}^{k} j/(n-i+j)) ** (1/k)
    log_val = math.log(alpha)
    for j in range(1, k + 1):
        log_val += math.log(j) - math.log(n - i + j)
    return math.exp(log_val / k)


@lru_cache(maxsize=512)
def _stepwise_values(family: str, n: int, k: int, alpha: float, model: NullModel | None,
                     force_inversion: bool) -> tuple:
    use_closed_form = (
        model is None or model.kind == "independent"
    ) and not force_inversion
    values = []
    for i in range(k, n + 1):
        if family == "simes":
            if use_closed_form:
                values.append(_closed_form_simes(n, k, alpha, i))
                continue
            target = alpha * comb(i, k) / comb(n, k)
        else:
            if use_closed_form:
                values.append(_closed_form_hochberg(n, k, alpha, i))
                continue
            target = alpha / comb(n + k - i, k)
        values.append(gk_quantile(model, k, target))
    return tuple(values)


def gen_simes_critvals(n, k, alpha, model: NullModel, *, force_inversion=False) -> CriticalValueSet:
    """Constants solving G_k(alpha_i) = alpha * C(i,k)/C(n,k), i = k .. n.

    Under the independent model the closed form is evaluated directly;
    force_inversion routes through quantile inversion anyway, which the
    verification suites use to cross-check the two paths.
    """
    n, k, alpha = _validate(n, k, alpha)
    if model.kind == "factor_normal" and len(model.loadings) != n:
        raise ConfigurationError(
            f"factor model has {len(model.loadings)} loadings but n={n}"
        )
    values = _stepwise_values("simes", n, k, alpha, model, bool(force_inversion))
    return _package("gen_simes", n, k, alpha, model, values)


def gen_simes_critvals_closed_form(n, k, alpha) -> CriticalValueSet:
    """Independence closed form of the generalized Simes constants."""
    n, k, alpha = _validate(n, k, alpha)
    values = _stepwise_values("simes", n, k, alpha, None, False)
    return _package("gen_simes", n, k, alpha, None, values)


def gen_hochberg_critvals(n, k, alpha, model: NullModel, *, procedure="gen_hochberg_stepup",
                          force_inversion=False) -> CriticalValueSet:
    """Constants solving G_k(alpha_i) = alpha / C(n+k-i, k), i = k .. n.

    One set serves both the generalized Holm stepdown and the
    generalized Hochberg stepup; the procedure label records which rule
    the set is built for.
    """
    n, k, alpha = _validate(n, k, alpha)
    if procedure not in ("gen_hochberg_stepup", "gen_holm_stepdown"):
        raise ConfigurationError(f"unsupported procedure label {procedure!r}")
    if model.kind == "factor_normal" and len(model.loadings) != n:
        raise ConfigurationError(
            f"factor model has {len(model.loadings)} loadings but n={n}"
        )
    values = _stepwise_values("hochberg", n, k, alpha, model, bool(force_inversion))
    return _package(procedure, n, k, alpha, model, values)


@lru_cache(maxsize=512)
def _lr_values(n, k, alpha):
    return tuple(k * alpha / (n - i + k) for i in range(k, n + 1))


def lr_critvals(n, k, alpha, *, procedure="lr_stepdown") -> CriticalValueSet:
    """Closed-form constants alpha_i = k * alpha / (n - i + k)."""
    n, k, alpha = _validate(n, k, alpha)
    if procedure not in ("lr_stepdown", "lr_stepup"):
        raise ConfigurationError(f"unsupported procedure label {procedure!r}")
    return _package(procedure, n, k, alpha, None, _lr_values(n, k, alpha))


@lru_cache(maxsize=128)
def _romano_values(n, k, alpha):
    values = []
    for i in range(k, n + 1):
        m = n - i + k
        root = find_root(lambda u: binomial_tail(m, k, u) - alpha, 0.0, 1.0)
        values.append(root)
    return tuple(values)


def romano_critvals(n, k, alpha) -> CriticalValueSet:
    """Order-statistic constants alpha_i with H_{k, n-i+k}(alpha_i) = alpha.

    H_{k,m} is the CDF of the k-th order statistic of m independent
    uniforms, an upper binomial tail. Valid for independent p-values.
    """
    n, k, alpha = _validate(n, k, alpha)
    return _package("romano_stepdown", n, k, alpha, None, _romano_values(n, k, alpha))


def classic_critvals(procedure, n, alpha) -> CriticalValueSet:
    """The k = 1 classics: Simes i*alpha/n, Holm and Hochberg alpha/(n-i+1)."""
    if procedure not in CLASSIC_PROCEDURES:
        raise ConfigurationError(f"unknown classic procedure {procedure!r}")
    n, _, alpha = _validate(n, 1, alpha)
    if procedure == "classic_simes":
        values = tuple(i * alpha / n for i in range(1, n + 1))
    else:
        values = tuple(alpha / (n - i + 1) for i in range(1, n + 1))
    return _package(procedure, n, 1, alpha, None, values)


def critical_value_set(procedure, n, k, alpha, model: NullModel | None = None) -> CriticalValueSet:
    """Build the critical value set for any named procedure.

    Classic procedures are their own k = 1 sets and ignore k; the
    closed-form families (Lehmann-Romano, Romano) ignore the model.
    """
    if procedure == "gen_simes":
        return gen_simes_critvals(n, k, alpha, model if model is not None else independent())
    if procedure in ("gen_hochberg_stepup", "gen_holm_stepdown"):
        return gen_hochberg_critvals(
            n, k, alpha, model if model is not None else independent(), procedure=procedure
        )
    if procedure in ("lr_stepdown", "lr_stepup"):
        return lr_critvals(n, k, alpha, procedure=procedure)
    if procedure == "romano_stepdown":
        return romano_critvals(n, k, alpha)
    if procedure in CLASSIC_PROCEDURES:
        return classic_critvals(procedure, n, alpha)
    raise ConfigurationError(f"unknown procedure {procedure!r}")
