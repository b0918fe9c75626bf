"""Null dependence models and their joint-maximum CDFs.

A NullModel describes the joint null distribution of the p-values. The
quantity everything else consumes is G_k(u), the common CDF of the
maximum of any k of the p-values, together with its quantile inversion.
Supported kinds:

independent
    G_k(u) = u^k.
equicorrelated_normal
    one-factor normal with common correlation rho; G_k by integrating
    the conditional CDF against the factor.
factor_normal
    loadings lambda_i give correlations lambda_i*lambda_j; size-k subsets
    no longer share one G_k, so the subset average G~_k is used.
equicorrelated_t
    the equicorrelated normal divided by a shared chi-square scale;
    G_k is estimated from a large seeded sample (no cheap integral).
empirical
    seeded sample of max-of-k values built by gk_empirical_build.
"""

import math
import threading
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import comb

import numpy as np
from scipy.special import ndtr, ndtri, stdtr

from .errors import ConfigurationError, DomainError
from .numerics import DEFAULT_ACCURACY, find_root, integrate_gaussian

__all__ = [
    "RHO_MAX",
    "NullModel",
    "SubsetIndex",
    "independent",
    "equicorrelated_normal",
    "factor_normal",
    "equicorrelated_t",
    "gk_empirical_build",
    "gk_evaluate",
    "gk_quantile",
    "gk_factor_subset",
    "gk_factor_averaged",
    "draw_null_pvalues",
    "stream_word",
    "substream",
    "CHUNK_SIZE",
]

# The equicorrelated integrand divides by sqrt(1 - rho); values beyond
# 0.99 are outside the supported range rather than silently inaccurate.
RHO_MAX = 0.99

KINDS = (
    "independent",
    "equicorrelated_normal",
    "factor_normal",
    "equicorrelated_t",
    "empirical",
)


@dataclass(frozen=True)
class NullModel:
    kind: str
    rho: float = 0.0
    loadings: tuple = ()
    dof: int = 0
    built_k: int = 0
    store_token: tuple = ()
    sample_store: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if self.kind in ("equicorrelated_normal", "equicorrelated_t"):
            if not (0.0 <= self.rho <= RHO_MAX):
                raise ConfigurationError(
                    f"rho must lie in [0, {RHO_MAX}], got {self.rho!r}"
                )
        if self.kind == "factor_normal":
            if not self.loadings:
                raise ConfigurationError("factor model requires at least one loading")
            if not all(0.0 < lam < 1.0 for lam in self.loadings):
                raise ConfigurationError("factor loadings must lie strictly in (0, 1)")
        if self.kind == "equicorrelated_t" and self.dof < 1:
            raise ConfigurationError(f"dof must be a positive integer, got {self.dof!r}")

    def describe(self) -> str:
        if self.kind == "equicorrelated_normal":
            return f"equicorr:{self.rho:g}"
        if self.kind == "factor_normal":
            return f"factor:n={len(self.loadings)}"
        if self.kind == "equicorrelated_t":
            size, seed = self.store_token
            return f"t:{self.rho:g}:{self.dof}:{size}:{seed}"
        if self.kind == "empirical":
            return f"empirical:k={self.built_k}"
        return self.kind


@dataclass(frozen=True)
class SubsetIndex:
    """A size-k subset of {1, ..., n} as a strictly increasing index tuple."""

    members: tuple

    def __post_init__(self):
        members = tuple(int(i) for i in self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ConfigurationError("subset must not be empty")
        if any(i < 1 for i in members):
            raise ConfigurationError("subset members are 1-based positive indices")
        if any(a >= b for a, b in zip(members, members[1:])):
            raise ConfigurationError("subset members must be strictly increasing")


def independent() -> NullModel:
    return NullModel(kind="independent")


def equicorrelated_normal(rho: float) -> NullModel:
    return NullModel(kind="equicorrelated_normal", rho=float(rho))


def factor_normal(loadings) -> NullModel:
    return NullModel(kind="factor_normal", loadings=tuple(float(x) for x in loadings))


def equicorrelated_t(rho: float, dof: int, sample_size: int, seed: int) -> NullModel:
    """Equicorrelated t model whose G_k is estimated from a seeded sample.

    The max-of-k sample for a given k is drawn on first use and cached
    for the life of the process; sample_size of 10**7 keeps the CDF
    error near 1e-4.
    """
    if sample_size < 1000:
        raise ConfigurationError("sample_size below 1000 is too small to be useful")
    return NullModel(
        kind="equicorrelated_t",
        rho=float(rho),
        dof=int(dof),
        store_token=(int(sample_size), int(seed)),
    )


# ---------------------------------------------------------------------------
# seeded sampling

CHUNK_SIZE = 1 << 15

# Distinct salts keep substreams from different subsystems disjoint even
# when a user reuses one seed across them.
MODEL_SALT = 0x6D6F646C


def stream_word(seed: int, salt: int) -> int:
    ss = np.random.SeedSequence((int(seed), int(salt)))
    return int(ss.generate_state(1, np.uint64)[0])


def substream(word: int, index: int) -> np.random.Generator:
    """Counter-based substream: one Philox stream per (word, index) pair."""
    return np.random.Generator(np.random.Philox(key=[word, index]))


def _draw_block(model: NullModel, n_cols: int, count: int, g: np.random.Generator):
    if model.kind == "independent":
        return g.random((count, n_cols))
    if model.kind in ("equicorrelated_normal", "factor_normal", "equicorrelated_t"):
        normals = g.standard_normal((count, n_cols + 1))
        common = normals[:, :1]
        noise = normals[:, 1:]
        if model.kind == "factor_normal":
            lam = np.asarray(model.loadings[:n_cols])
        else:
            lam = math.sqrt(model.rho)
        x = lam * common + np.sqrt(1.0 - np.square(lam)) * noise
        if model.kind == "equicorrelated_t":
            scale = np.sqrt(g.chisquare(model.dof, count) / model.dof)
            x /= scale[:, None]
            return stdtr(model.dof, -x)
        return ndtr(-x)
    raise ConfigurationError(f"cannot sample from model kind {model.kind!r}")


def draw_null_pvalues(model: NullModel, n_cols: int, count: int, seed: int):
    """count x n_cols null p-values, chunked over counter-based substreams.

    Chunking is fixed at CHUNK_SIZE rows, so the result depends only on
    (model, n_cols, count, seed).
    """
    if n_cols < 1:
        raise ConfigurationError("n_cols must be positive")
    if model.kind == "factor_normal" and n_cols > len(model.loadings):
        raise ConfigurationError(
            f"factor model has {len(model.loadings)} loadings, requested {n_cols}"
        )
    word = stream_word(seed, MODEL_SALT)
    out = np.empty((count, n_cols))
    for index, start in enumerate(range(0, count, CHUNK_SIZE)):
        stop = min(start + CHUNK_SIZE, count)
        out[start:stop] = _draw_block(model, n_cols, stop - start, substream(word, index))
    return out


def gk_empirical_build(sampler_spec, k: int, sample_size: int, seed: int) -> NullModel:
    """Build an empirical G_k model from a seeded null sample.

    sampler_spec is either a NullModel to draw from or a callable
    (count, seed) -> array of shape (count, k) of null p-values. The
    sorted max-of-k sample is stored; gk_evaluate becomes the empirical
    CDF and gk_quantile the empirical quantile. At least 10**6 draws are
    recommended.
    """
    if int(k) != k or k < 1:
        raise ConfigurationError(f"k must be a positive integer, got {k!r}")
    if sample_size < 1000:
        raise ConfigurationError("sample_size below 1000 is too small to be useful")
    if callable(sampler_spec):
        draws = np.asarray(sampler_spec(sample_size, seed), dtype=float)
        token_head = f"callable:{getattr(sampler_spec, '__name__', 'sampler')}"
    elif isinstance(sampler_spec, NullModel):
        draws = draw_null_pvalues(sampler_spec, k, sample_size, seed)
        token_head = sampler_spec.describe()
    else:
        raise ConfigurationError(
            "sampler_spec must be a NullModel or a (count, seed) callable"
        )
    if draws.shape != (sample_size, k):
        raise ConfigurationError(
            f"sampler produced shape {draws.shape}, expected {(sample_size, k)}"
        )
    maxes = np.sort(draws.max(axis=1)) if k > 1 else np.sort(draws[:, 0])
    return NullModel(
        kind="empirical",
        built_k=int(k),
        store_token=(token_head, int(k), int(sample_size), int(seed)),
        sample_store=maxes,
    )


_t_stores: dict = {}
_t_lock = threading.Lock()


def _t_store(model: NullModel, k: int) -> np.ndarray:
    size, seed = model.store_token
    key = (model.rho, model.dof, size, seed, k)
    arr = _t_stores.get(key)
    if arr is None:
        with _t_lock:
            arr = _t_stores.get(key)
            if arr is None:
                draws = draw_null_pvalues(model, k, size, seed)
                arr = np.sort(draws.max(axis=1)) if k > 1 else np.sort(draws[:, 0])
                _t_stores[key] = arr
    return arr


# ---------------------------------------------------------------------------
# G_k evaluation and inversion


def _validate_k(k):
    if int(k) != k or k < 1:
        raise ConfigurationError(f"k must be a positive integer, got {k!r}")
    return int(k)


def _equicorr_gk(rho: float, k: int, u: float) -> float:
    # 1 - Phi((t - sqrt(rho) y) / s) == Phi((sqrt(rho) y - t) / s)
    t = ndtri(1.0 - u)
    root_rho = math.sqrt(rho)
    s = math.sqrt(1.0 - rho)

    def integrand(y):
        return ndtr((root_rho * y - t) / s) ** k

    return integrate_gaussian(integrand)


def _ecdf(sorted_values: np.ndarray, u: float) -> float:
    return bisect_right(sorted_values, u) / len(sorted_values)


def _ecdf_quantile(sorted_values: np.ndarray, target: float) -> float:
    # generalized inverse: smallest stored value with CDF >= target
    idx = max(0, math.ceil(target * len(sorted_values)) - 1)
    return float(sorted_values[idx])


def gk_evaluate(model: NullModel, k: int, u: float) -> float:
    """G_k(u): null CDF of the maximum of any k p-values at u.

    Outside (0, 1) the exact endpoint values 0 and 1 are returned, which
    lets root finders probe the full [0, 1] bracket.
    """
    k = _validate_k(k)
    if not math.isfinite(u):
        raise DomainError(f"u must be finite, got {u!r}")
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    if model.kind == "independent":
        return u**k
    if model.kind == "equicorrelated_normal":
        if model.rho == 0.0:
            return u**k
        return _equicorr_gk(model.rho, k, u)
    if model.kind == "factor_normal":
        return gk_factor_averaged(model, k, u)
    if model.kind == "equicorrelated_t":
        return _ecdf(_t_store(model, k), u)
    if model.kind == "empirical":
        if k != model.built_k:
            raise ConfigurationError(
                f"empirical model was built for k={model.built_k}, asked for k={k}"
            )
        return _ecdf(model.sample_store, u)
    raise ConfigurationError(f"unknown model kind {model.kind!r}")


def gk_quantile(model: NullModel, k: int, target: float) -> float:
    """Solve G_k(q) = target for q in (0, 1).

    Analytic kinds invert by monotone root finding to a residual of at
    most 1e-9; sample-backed kinds return the empirical quantile.
    """
    k = _validate_k(k)
    if not (0.0 < target < 1.0):
        raise DomainError(f"target must lie in (0, 1), got {target!r}")
    if model.kind == "equicorrelated_t":
        return _ecdf_quantile(_t_store(model, k), target)
    if model.kind == "empirical":
        if k != model.built_k:
            raise ConfigurationError(
                f"empirical model was built for k={model.built_k}, asked for k={k}"
            )
        return _ecdf_quantile(model.sample_store, target)
    return find_root(
        lambda q: gk_evaluate(model, k, q) - target, 0.0, 1.0, DEFAULT_ACCURACY
    )


def _subset_cdf(lams: tuple, u: float) -> float:
    t = ndtri(1.0 - u)
    lam = np.asarray(lams)
    scale = np.sqrt(1.0 - np.square(lam))

    def integrand(y):
        return np.prod(ndtr((lam[None, :] * y[:, None] - t) / scale[None, :]), axis=1)

    return integrate_gaussian(integrand)


def gk_factor_subset(model: NullModel, subset, u: float) -> float:
    """Pr{max of the p-values indexed by subset <= u} under the factor model."""
    if model.kind != "factor_normal":
        raise ConfigurationError("gk_factor_subset requires a factor model")
    members = subset.members if isinstance(subset, SubsetIndex) else SubsetIndex(tuple(subset)).members
    n = len(model.loadings)
    if members[-1] > n:
        raise ConfigurationError(f"subset index {members[-1]} exceeds n={n}")
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return _subset_cdf(tuple(model.loadings[i - 1] for i in members), u)


@lru_cache(maxsize=None)
def _composition_classes(loadings: tuple, k: int):
    """Group size-k subsets by the multiset of loading values they draw.

    Returns (weight, value multiset) pairs; weights sum to C(n, k), so
    averaging costs one integral per class instead of one per subset.
    """
    values = sorted(set(loadings))
    counts = [sum(1 for lam in loadings if lam == v) for v in values]
    classes = []
    for picks in product(*(range(min(c, k) + 1) for c in counts)):
        if sum(picks) != k:
            continue
        weight = math.prod(comb(c, j) for c, j in zip(counts, picks))
        lams = tuple(v for v, j in zip(values, picks) for _ in range(j))
        classes.append((weight, lams))
    total = sum(w for w, _ in classes)
    if total != comb(len(loadings), k):
        raise ConfigurationError("composition class weights failed the counting check")
    return tuple(classes)


def gk_factor_averaged(model: NullModel, k: int, u: float) -> float:
    """Average of Pr{max over J <= u} across all size-k subsets J.

    Subsets with the same multiset of loadings share one integral, so
    the cost is the number of composition classes of the distinct
    loading values, not C(n, k).
    """
    if model.kind != "factor_normal":
        raise ConfigurationError("gk_factor_averaged requires a factor model")
    k = _validate_k(k)
    n = len(model.loadings)
    if k > n:
        raise ConfigurationError(f"k={k} exceeds the number of loadings n={n}")
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    classes = _composition_classes(model.loadings, k)
    acc = 0.0
    for weight, lams in classes:
        acc += weight * _subset_cdf(lams, u)
    return acc / comb(n, k)
