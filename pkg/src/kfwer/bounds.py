"""Probability identity and closed-form bounds for k or more rejections.

The subset-decomposition identity rewrites the stepup union probability
Pr{union over i = k..n of (X_{i:n} <= c_i)} term by term over all size-k
index sets. Both sides are estimated by Monte Carlo here, and the two
displayed upper bounds are evaluated in closed form, so this module acts
as an independent oracle for the critical-value and procedure modules.

Each estimator accepts a sampler that is either a NullModel (drawn via
the chunked model streams, deterministic given the seed) or a callable
(reps, seed) -> (reps, n) array of null p-values.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.integrate import quad

from .errors import ConfigurationError, ScaleError
from .models import NullModel, draw_null_pvalues

__all__ = [
    "CriticalVector",
    "ProbEstimate",
    "union_prob_mc",
    "lemma21_rhs_mc",
    "union_prob_exact_smalln",
    "bound_eq22",
    "bonferroni_eq23",
]

_METHODS = ("monte_carlo", "exact_quadrature", "closed_form")


@dataclass(frozen=True)
class CriticalVector:
    """Constants c_k <= ... <= c_n indexed by rank, one per rank k..n."""

    c: tuple
    k: int
    n: int

    def __post_init__(self):
        k, n = int(self.k), int(self.n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "n", n)
        if k < 1 or n < k:
            raise ConfigurationError(f"need 1 <= k <= n, got k={k}, n={n}")
        c = tuple(float(v) for v in self.c)
        object.__setattr__(self, "c", c)
        if len(c) != n - k + 1:
            raise ConfigurationError(
                f"expected {n - k + 1} constants for ranks {k}..{n}, got {len(c)}"
            )
        if not all(math.isfinite(v) for v in c):
            raise ConfigurationError("constants must be finite")
        if any(hi < lo for lo, hi in zip(c, c[1:])):
            raise ConfigurationError("constants must be nondecreasing")

    def value_for_rank(self, i: int) -> float:
        if not (self.k <= i <= self.n):
            raise ConfigurationError(f"rank {i} outside [{self.k}, {self.n}]")
        return self.c[i - self.k]


@dataclass(frozen=True)
class ProbEstimate:
    value: float
    std_error: float
    reps: int
    method: str

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if not (0.0 <= self.value <= 1.0) or self.std_error < 0.0:
            raise ConfigurationError("estimate outside [0, 1] or negative std error")
        if (self.std_error == 0.0) != (self.method != "monte_carlo"):
            raise ConfigurationError(
                "std_error must be zero exactly for non-Monte-Carlo methods"
            )


def _draw(sampler, n, reps, seed):
    if isinstance(sampler, NullModel):
        return draw_null_pvalues(sampler, n, reps, seed)
    out = np.asarray(sampler(reps, seed), dtype=np.float64)
    if out.shape != (reps, n):
        raise ConfigurationError(
            f"sampler returned shape {out.shape}, expected {(reps, n)}"
        )
    return out


def _mc_se(phat: float, reps: int) -> float:
    # floored so a degenerate draw (all hits or none) still reads as Monte Carlo
    return max(math.sqrt(phat * (1.0 - phat) / reps), 1.0 / reps)


def union_prob_mc(sampler, cv: CriticalVector, reps: int, seed: int) -> ProbEstimate:
    """Estimate Pr{X_{i:n} <= c_i for some i in k..n} from null draws."""
    reps = int(reps)
    if reps < 10_000:
        raise ConfigurationError("union_prob_mc requires at least 10^4 replications")
    pv = _draw(sampler, cv.n, reps, seed)
    ordered = np.sort(pv, axis=1)
    hits = (ordered[:, cv.k - 1 :] <= np.asarray(cv.c)).any(axis=1)
    phat = float(hits.mean())
    return ProbEstimate(phat, _mc_se(phat, reps), reps, "monte_carlo")


def lemma21_rhs_mc(sampler, cv: CriticalVector, reps: int, seed: int) -> ProbEstimate:
    """Estimate the subset-decomposition right-hand side term by term.

    Every conditional-probability factor is folded into a joint event
    (tower property), so each term is a plain mean over the shared
    sample. The reported standard error adds the per-term errors rather
    than combining them in quadrature; terms share one stream, and the
    worst case (perfect correlation) is assumed.
    """
    n, k = cv.n, cv.k
    if n > 8:
        raise ScaleError("subset enumeration is limited to n <= 8")
    reps = int(reps)
    if reps < 100_000:
        raise ConfigurationError("lemma21_rhs_mc requires at least 10^5 replications")
    pv = _draw(sampler, n, reps, seed)
    c = np.asarray(cv.c)  # c[idx] holds the rank-(k+idx) constant
    inv_a = {i: 1.0 / math.comb(i, k) for i in range(k, n + 1)}
    sqrt_reps = math.sqrt(reps)

    lead = np.zeros(reps)
    value = 0.0
    se = 0.0
    for subset in combinations(range(n), k):
        comp = tuple(sorted(set(range(n)) - set(subset)))
        max_j = pv[:, subset].max(axis=1)
        lead += max_j <= c[-1]
        if not comp:
            continue
        # column j-1 checks the j-th smallest complement value against c_{k+j}
        tail = np.sort(pv[:, comp], axis=1) > c[1:]
        alive = np.logical_and.accumulate(tail[:, ::-1], axis=1)[:, ::-1]
        below = max_j[:, None] <= c[None, :]
        for i in range(k, n):
            ell = i - k + 1
            d = alive[:, ell - 1] * (
                inv_a[i] * below[:, i - k] - inv_a[i + 1] * below[:, i - k + 1]
            )
            value += float(d.mean())
            se += float(d.std(ddof=1)) / sqrt_reps
    lead *= inv_a[n]
    value += float(lead.mean())
    se += float(lead.std(ddof=1)) / sqrt_reps
    value = min(max(value, 0.0), 1.0)
    return ProbEstimate(value, max(se, 1.0 / reps), reps, "monte_carlo")


def union_prob_exact_smalln(cv: CriticalVector) -> ProbEstimate:
    """Exact union probability for i.i.d. uniform p-values, n <= 4.

    Integrates the ordered-uniform density n! over the complement region
    {u_{i:n} > c_i for all i} by nested adaptive quadrature.
    """
    n, k = cv.n, cv.k
    if n > 4:
        raise ScaleError("exact ordered-uniform quadrature is limited to n <= 4")
    b = [0.0] * (k - 1) + [min(max(v, 0.0), 1.0) for v in cv.c]

    def volume(j, t):
        # ordered volume of 0 < u_1 < ... < u_j < t with u_i > b_i throughout
        lo = b[j - 1]
        if t <= lo:
            return 0.0
        if j == 1:
            return t - lo
        kinks = [x for x in b if lo < x < t]
        val, _ = quad(
            lambda u: volume(j - 1, u),
            lo,
            t,
            epsabs=1e-12,
            epsrel=1e-12,
            limit=200,
            points=kinks or None,
        )
        return val

    complement = math.factorial(n) * volume(n, 1.0)
    value = min(max(1.0 - complement, 0.0), 1.0)
    return ProbEstimate(value, 0.0, 0, "exact_quadrature")


def bound_eq22(fk, cv: CriticalVector) -> float:
    """Telescoping upper bound C(n,k)[F_k(c_k) + sum a_i^{-1} increments]."""
    vals = [float(fk(v)) for v in cv.c]
    for lo, hi in zip(vals, vals[1:]):
        if hi < lo - 1e-12:
            raise ConfigurationError("F_k must be nondecreasing across the constants")
    k, n = cv.k, cv.n
    total = vals[0]
    for i in range(k + 1, n + 1):
        total += (vals[i - k] - vals[i - k - 1]) / math.comb(i, k)
    return math.comb(n, k) * total


def bonferroni_eq23(gk_at_ck: float, n: int, k: int) -> float:
    """Generalized Bonferroni bound min(1, C(n,k) G_k(c_k))."""
    n, k = int(n), int(k)
    if k < 1 or n < k:
        raise ConfigurationError(f"need 1 <= k <= n, got k={k}, n={n}")
    g = float(gk_at_ck)
    if not (0.0 <= g <= 1.0):
        raise ConfigurationError(f"G_k value outside [0, 1]: {g!r}")
    return min(1.0, math.comb(n, k) * g)
