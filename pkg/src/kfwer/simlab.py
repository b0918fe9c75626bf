"""Seeded Monte Carlo laboratory for error rates and power curves.

Samples are drawn one replication at a time from counter-based
substreams keyed by (seed, replication index), so estimates are
bit-identical for a fixed seed no matter how work is partitioned.
Within a replication every configured procedure sees the same sample
(common random numbers).

Draw order per replication, fixed by contract: n+1 standard normals
(common factor first, then the n noise terms), followed by one
chi-square draw for t models. Means are added after the t scaling.

Metrics, all proportions over replications:
  power_at_least_k        k or more rejections in total
  power_at_least_k_false  k or more false nulls rejected
  ave_power               mean fraction of false nulls rejected (NaN if none)
  kfwer                   k or more true nulls rejected
  partial_rejections      between 1 and k-1 true nulls rejected
  global_reject_rate      at least one rejection
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, stdtr

from .critvals import critical_value_set
from .errors import ConfigurationError
from .models import NullModel, stream_word, substream
from . import models as _models

__all__ = [
    "METRICS",
    "SIMLAB_SALT",
    "SampleBatch",
    "ExperimentConfig",
    "MetricCell",
    "MetricsReport",
    "StudyOutcome",
    "sample_equicorr_normal",
    "sample_factor_normal",
    "sample_equicorr_t",
    "run_experiment",
    "run_study",
    "canned_study_names",
    "canned_study_configs",
    "thread_cap",
]

SIMLAB_SALT = 0x73696D4C

METRICS = (
    "power_at_least_k",
    "power_at_least_k_false",
    "ave_power",
    "kfwer",
    "partial_rejections",
    "global_reject_rate",
)

# decision rule per procedure; single-step reuses the Hochberg-family k-th
# constant, which solves C(n,k) G_k(c) = alpha
_RULE = {
    "gen_simes": "stepup",
    "gen_hochberg_stepup": "stepup",
    "gen_holm_stepdown": "stepdown",
    "lr_stepdown": "stepdown",
    "lr_stepup": "stepup",
    "romano_stepdown": "stepdown",
    "classic_simes": "stepup",
    "classic_holm": "stepdown",
    "classic_hochberg": "stepup",
    "gen_single_step": "single",
}

SIM_PROCEDURES = tuple(_RULE)


def rule_for(procedure: str) -> str:
    """Decision-rule kind (stepup, stepdown, single) for a procedure id."""
    try:
        return _RULE[procedure]
    except KeyError:
        raise ConfigurationError(f"unknown procedure {procedure!r}")


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """One seeded batch: test statistics and their right-tailed p-values."""

    pvalues: np.ndarray = field(repr=False)
    statistics: np.ndarray = field(repr=False)
    seed: int = 0


def _mu_array(mu, n):
    arr = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    if arr.size == 1:
        arr = np.full(n, float(arr[0]))
    if arr.shape != (n,):
        raise ConfigurationError(f"mu must be scalar or length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError("mu must be finite")
    return arr


def _draw_batch(kind, lam, mu, dof, n, word, start, stop):
    """Rows start..stop-1 of the replication stream; returns (X, P)."""
    count = stop - start
    x = np.empty((count, n))
    noise_scale = np.sqrt(1.0 - np.square(lam))
    if kind == "t":
        denom = np.empty(count)
        for idx in range(count):
            g = substream(word, start + idx)
            vals = g.standard_normal(n + 1)
            x[idx] = lam * vals[0] + noise_scale * vals[1:]
            denom[idx] = g.chisquare(dof)
        x /= np.sqrt(denom / dof)[:, None]
        x += mu
        return x, stdtr(dof, -x)
    for idx in range(count):
        g = substream(word, start + idx)
        vals = g.standard_normal(n + 1)
        x[idx] = lam * vals[0] + noise_scale * vals[1:]
    x += mu
    return x, ndtr(-x)


def sample_equicorr_normal(n, rho, mu, count, seed) -> SampleBatch:
    """X_i = sqrt(rho) Y + sqrt(1-rho) Z_i + mu_i, P_i = 1 - Phi(X_i)."""
    n = int(n)
    if n < 1:
        raise ConfigurationError("n must be positive")
    rho = float(rho)
    if not (0.0 <= rho < 1.0):
        raise ConfigurationError(f"rho must lie in [0, 1), got {rho!r}")
    count = int(count)
    if count < 1:
        raise ConfigurationError("count must be positive")
    mu_arr = _mu_array(mu, n)
    word = stream_word(seed, SIMLAB_SALT)
    x, p = _draw_batch("normal", math.sqrt(rho), mu_arr, 0, n, word, 0, count)
    return SampleBatch(pvalues=p, statistics=x, seed=int(seed))


def sample_factor_normal(loadings, mu, count, seed) -> SampleBatch:
    """Single-factor normals X_i = lambda_i Y + sqrt(1-lambda_i^2) Z_i + mu_i."""
    lam = np.asarray([float(v) for v in loadings])
    if lam.ndim != 1 or lam.size < 1:
        raise ConfigurationError("loadings must be a nonempty sequence")
    if not np.all((lam > 0.0) & (lam < 1.0)):
        raise ConfigurationError("every loading must lie strictly inside (0, 1)")
    n = lam.size
    count = int(count)
    if count < 1:
        raise ConfigurationError("count must be positive")
    mu_arr = _mu_array(mu, n)
    word = stream_word(seed, SIMLAB_SALT)
    x, p = _draw_batch("normal", lam, mu_arr, 0, n, word, 0, count)
    return SampleBatch(pvalues=p, statistics=x, seed=int(seed))


def sample_equicorr_t(n, rho, dof, mu, count, seed) -> SampleBatch:
    """Equicorrelated t: the normal construction divided by a shared
    sqrt(chi2_dof/dof), means added after scaling; p-values from the
    t upper tail so null marginals stay uniform."""
    n = int(n)
    if n < 1:
        raise ConfigurationError("n must be positive")
    rho = float(rho)
    if not (0.0 <= rho < 1.0):
        raise ConfigurationError(f"rho must lie in [0, 1), got {rho!r}")
    dof = int(dof)
    if dof < 1:
        raise ConfigurationError("dof must be a positive integer")
    count = int(count)
    if count < 1:
        raise ConfigurationError("count must be positive")
    mu_arr = _mu_array(mu, n)
    word = stream_word(seed, SIMLAB_SALT)
    x, p = _draw_batch("t", math.sqrt(rho), mu_arr, dof, n, word, 0, count)
    return SampleBatch(pvalues=p, statistics=x, seed=int(seed))


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation cell: model, effect layout, procedures, metrics.

    The effect is given either as an explicit length-n mu vector or as
    (n1, effect) placing the effect on the first n1 coordinates. The
    model field is the data-generating side; generalized procedures also
    use it for their critical values.
    """

    n: int
    k: int
    alpha: float
    model: NullModel
    procedures: tuple
    reps: int
    seed: int
    name: str = "custom"
    n1: int | None = None
    effect: float = 2.0
    mu: tuple | None = None
    metrics: tuple = METRICS

    def __post_init__(self):
        n, k = int(self.n), int(self.k)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        if n < 1 or not (1 <= k <= n):
            raise ConfigurationError(f"need 1 <= k <= n, got k={k}, n={n}")
        alpha = float(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if not (0.0 < alpha < 1.0):
            raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha!r}")
        if not isinstance(self.model, NullModel):
            raise ConfigurationError("model must be a NullModel")
        if self.model.kind == "empirical":
            raise ConfigurationError("empirical models cannot generate samples")
        if self.model.kind == "factor_normal" and len(self.model.loadings) != n:
            raise ConfigurationError(
                f"factor model has {len(self.model.loadings)} loadings, config has n={n}"
            )
        procedures = tuple(self.procedures)
        object.__setattr__(self, "procedures", procedures)
        if not procedures:
            raise ConfigurationError("at least one procedure is required")
        for proc in procedures:
            if proc not in _RULE:
                raise ConfigurationError(f"unknown procedure {proc!r}")
        if len(set(procedures)) != len(procedures):
            raise ConfigurationError("duplicate procedure in config")
        reps = int(self.reps)
        object.__setattr__(self, "reps", reps)
        if reps < 1000:
            raise ConfigurationError(f"reps must be at least 1000, got {reps}")
        object.__setattr__(self, "seed", int(self.seed))
        metrics = tuple(self.metrics)
        object.__setattr__(self, "metrics", metrics)
        if not metrics:
            raise ConfigurationError("at least one metric is required")
        for m in metrics:
            if m not in METRICS:
                raise ConfigurationError(f"unknown metric {m!r}")
        if self.mu is not None and self.n1 is not None:
            raise ConfigurationError("give either an explicit mu vector or n1, not both")
        if self.mu is not None:
            mu = tuple(float(v) for v in self.mu)
            object.__setattr__(self, "mu", mu)
            if len(mu) != n:
                raise ConfigurationError(f"mu must have length n={n}, got {len(mu)}")
            if not all(math.isfinite(v) for v in mu):
                raise ConfigurationError("mu must be finite")
        else:
            n1 = 0 if self.n1 is None else int(self.n1)
            object.__setattr__(self, "n1", n1)
            if not (0 <= n1 <= n):
                raise ConfigurationError(f"need 0 <= n1 <= n, got n1={n1}")
            effect = float(self.effect)
            object.__setattr__(self, "effect", effect)
            if not math.isfinite(effect):
                raise ConfigurationError("effect must be finite")

    def mean_vector(self) -> np.ndarray:
        if self.mu is not None:
            return np.asarray(self.mu, dtype=np.float64)
        out = np.zeros(self.n)
        out[: self.n1] = self.effect
        return out


@dataclass(frozen=True)
class MetricCell:
    procedure: str
    metric: str
    estimate: float
    std_error: float
    reps: int


@dataclass(frozen=True)
class MetricsReport:
    config: ExperimentConfig
    cells: tuple  # MetricCell, ordered (procedure, metric) per config

    def cell(self, procedure: str, metric: str) -> MetricCell:
        for c in self.cells:
            if c.procedure == procedure and c.metric == metric:
                return c
        raise ConfigurationError(f"no cell for ({procedure!r}, {metric!r})")

    def value(self, procedure: str, metric: str) -> float:
        return self.cell(procedure, metric).estimate


@dataclass(frozen=True)
class StudyOutcome:
    config: ExperimentConfig
    report: MetricsReport | None
    error: str | None


def _constants_for(procedure: str, cfg: ExperimentConfig):
    if procedure == "gen_single_step":
        return critical_value_set("gen_hochberg_stepup", cfg.n, cfg.k, cfg.alpha, cfg.model)
    return critical_value_set(procedure, cfg.n, cfg.k, cfg.alpha, cfg.model)


def _model_draw_args(cfg: ExperimentConfig):
    m = cfg.model
    if m.kind == "independent":
        return "normal", 0.0, 0
    if m.kind == "equicorrelated_normal":
        return "normal", math.sqrt(m.rho), 0
    if m.kind == "factor_normal":
        return "normal", np.asarray(m.loadings), 0
    if m.kind == "equicorrelated_t":
        return "t", math.sqrt(m.rho), m.dof
    raise ConfigurationError(f"cannot sample from model kind {m.kind!r}")


def run_experiment(cfg: ExperimentConfig) -> MetricsReport:
    """Run one config: per-replication draws, every procedure applied to
    the same sample, metric proportions with binomial standard errors."""
    n, k, reps = cfg.n, cfg.k, cfg.reps
    pad = {}
    rule = {}
    for proc in cfg.procedures:
        cset = _constants_for(proc, cfg)
        rule[proc] = _RULE[proc]
        if rule[proc] == "single":
            pad[proc] = np.full(n, cset.value_at(cfg.k))
        else:
            pad[proc] = np.asarray(cset.padded)

    kind, lam, dof = _model_draw_args(cfg)
    mean = cfg.mean_vector()
    true_mask = mean == 0.0
    n1 = int(np.count_nonzero(~true_mask))
    word = stream_word(cfg.seed, SIMLAB_SALT)

    counts = {proc: dict.fromkeys(METRICS, 0) for proc in cfg.procedures}
    pw_sum = dict.fromkeys(cfg.procedures, 0.0)
    pw_sumsq = dict.fromkeys(cfg.procedures, 0.0)

    chunk = max(1024, min(_models.CHUNK_SIZE, 4_000_000 // n))
    for start in range(0, reps, chunk):
        stop = min(reps, start + chunk)
        _, p = _draw_batch(kind, lam, mean, dof, n, word, start, stop)
        order = np.argsort(p, axis=1, kind="stable")
        sp = np.take_along_axis(p, order, axis=1)
        cum_true = np.cumsum(true_mask[order], axis=1)
        rows = np.arange(sp.shape[0])
        for proc in cfg.procedures:
            ok = sp <= pad[proc]
            r = rule[proc]
            if r == "stepup":
                rev = ok[:, ::-1]
                nrej = np.where(rev.any(axis=1), n - rev.argmax(axis=1), 0)
            elif r == "stepdown":
                failed = sp >= pad[proc]
                nrej = np.where(failed.any(axis=1), failed.argmax(axis=1), n)
            else:
                nrej = ok.sum(axis=1)
            t_rej = np.where(nrej > 0, cum_true[rows, np.maximum(nrej - 1, 0)], 0)
            f_rej = nrej - t_rej
            c = counts[proc]
            c["power_at_least_k"] += int((nrej >= k).sum())
            c["power_at_least_k_false"] += int((f_rej >= k).sum())
            c["kfwer"] += int((t_rej >= k).sum())
            c["partial_rejections"] += int(((t_rej >= 1) & (t_rej < k)).sum())
            c["global_reject_rate"] += int((nrej >= 1).sum())
            if n1 > 0:
                prop = f_rej / n1
                pw_sum[proc] += float(prop.sum())
                pw_sumsq[proc] += float(prop @ prop)

    cells = []
    for proc in cfg.procedures:
        for metric in cfg.metrics:
            if metric == "ave_power":
                if n1 == 0:
                    est, se = float("nan"), float("nan")
                else:
                    est = pw_sum[proc] / reps
                    var = max(pw_sumsq[proc] - reps * est * est, 0.0) / (reps - 1)
                    se = math.sqrt(var / reps)
            else:
                est = counts[proc][metric] / reps
                se = math.sqrt(est * (1.0 - est) / reps)
            cells.append(MetricCell(proc, metric, est, se, reps))
    return MetricsReport(config=cfg, cells=tuple(cells))


def thread_cap() -> int:
    raw = os.environ.get("KFWER_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigurationError(f"KFWER_THREADS must be an integer, got {raw!r}")
    if cap < 1:
        raise ConfigurationError(f"KFWER_THREADS must be at least 1, got {cap}")
    return cap


def _run_isolated(cfg: ExperimentConfig) -> StudyOutcome:
    try:
        return StudyOutcome(cfg, run_experiment(cfg), None)
    except Exception as exc:  # per-config isolation by contract
        return StudyOutcome(cfg, None, f"{type(exc).__name__}: {exc}")


def run_study(configs) -> tuple:
    """Run a grid of configs, one StudyOutcome each, in input order.

    Configs run in parallel up to thread_cap(); results do not depend on
    the worker count since each config derives its own streams.
    """
    configs = tuple(configs)
    if not configs:
        raise ConfigurationError("no experiment configs given")
    workers = min(thread_cap(), len(configs))
    if workers == 1:
        return tuple(_run_isolated(c) for c in configs)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return tuple(pool.map(_run_isolated, configs))


# ---------------------------------------------------------------------------
# canned studies


def _rho_token(rho: float) -> str:
    return format(rho, "g")


def _study_fig1():
    out = []
    idx = 0
    for k in (2, 3):
        for rho in (0.0, 0.25, 0.5, 0.75):
            for n1 in range(0, 11):
                out.append(
                    ExperimentConfig(
                        n=10,
                        k=k,
                        alpha=0.05,
                        model=_models.equicorrelated_normal(rho),
                        procedures=("gen_simes", "classic_simes"),
                        reps=50_000,
                        seed=101_000 + idx,
                        name=f"fig1-rho{_rho_token(rho)}-k{k}-n1_{n1}",
                        n1=n1,
                        metrics=("power_at_least_k", "kfwer"),
                    )
                )
                idx += 1
    return out


def _study_fig2():
    out = []
    idx = 0
    for k in (2, 3):
        for rho in (0.0, 0.1, 0.25, 0.5, 0.75):
            for n1 in (10, 25, 50, 75, 90):
                out.append(
                    ExperimentConfig(
                        n=100,
                        k=k,
                        alpha=0.05,
                        model=_models.equicorrelated_normal(rho),
                        procedures=("gen_hochberg_stepup", "lr_stepup", "classic_hochberg"),
                        reps=20_000,
                        seed=102_000 + idx,
                        name=f"fig2-rho{_rho_token(rho)}-k{k}-n1_{n1}",
                        n1=n1,
                        metrics=("ave_power", "kfwer", "power_at_least_k"),
                    )
                )
                idx += 1
    return out


def _fig3_loadings():
    return tuple([math.sqrt(0.25)] * 10 + [math.sqrt(0.75)] * 10)


def _study_fig3():
    # two-block factor model; effects sit on the high-loading (last) block
    out = []
    for idx, n1 in enumerate((0, 2, 5, 10, 15, 20)):
        mu = [0.0] * (20 - n1) + [2.0] * n1
        out.append(
            ExperimentConfig(
                n=20,
                k=2,
                alpha=0.05,
                model=_models.factor_normal(_fig3_loadings()),
                procedures=("gen_simes", "classic_simes"),
                reps=20_000,
                seed=103_000 + idx,
                name=f"fig3-k2-n1_{n1}",
                mu=tuple(mu),
                metrics=("power_at_least_k", "power_at_least_k_false", "kfwer"),
            )
        )
    return out


def _study_fig4():
    out = []
    idx = 0
    for dof in (2, 5, 10, 30):
        model = _models.equicorrelated_t(0.25, dof, 2_000_000, 424_242)
        for n1 in (0, 2, 5, 8, 10):
            out.append(
                ExperimentConfig(
                    n=10,
                    k=2,
                    alpha=0.05,
                    model=model,
                    procedures=("gen_simes", "classic_simes"),
                    reps=20_000,
                    seed=104_000 + idx,
                    name=f"fig4-rho0.25-k2-dof{dof}-n1_{n1}",
                    n1=n1,
                    metrics=("power_at_least_k", "kfwer"),
                )
            )
            idx += 1
    return out


def _study_fig5():
    out = []
    idx = 0
    for k in (10, 25):
        for n1 in (100, 250, 500, 750, 900):
            out.append(
                ExperimentConfig(
                    n=1000,
                    k=k,
                    alpha=0.05,
                    model=_models.independent(),
                    procedures=("gen_hochberg_stepup", "lr_stepup", "classic_hochberg"),
                    reps=20_000,
                    seed=105_000 + idx,
                    name=f"fig5-rho0-k{k}-n1_{n1}",
                    n1=n1,
                    metrics=("ave_power", "kfwer"),
                )
            )
            idx += 1
    return out


def _study_table2():
    out = []
    idx = 0
    for n in (10, 20):
        for k in (2, 3):
            for rho in (0.0, 0.25, 0.5, 0.75):
                out.append(
                    ExperimentConfig(
                        n=n,
                        k=k,
                        alpha=0.05,
                        model=_models.equicorrelated_normal(rho),
                        procedures=("gen_simes",),
                        reps=50_000,
                        seed=106_000 + idx,
                        name=f"table2-rho{_rho_token(rho)}-k{k}-n{n}",
                        n1=0,
                        metrics=("partial_rejections", "kfwer"),
                    )
                )
                idx += 1
    return out


_STUDIES = {
    "fig1": _study_fig1,
    "fig2": _study_fig2,
    "fig3": _study_fig3,
    "fig4": _study_fig4,
    "fig5": _study_fig5,
    "table2": _study_table2,
}


def canned_study_names() -> tuple:
    return tuple(sorted(_STUDIES))


def canned_study_configs(spec: str) -> tuple:
    """Configs for a canned study name, optionally filtered.

    The grammar is base[-rhoRHO][-kK][-dofDOF], e.g. "fig1-rho0.25-k2".
    Filters select on the model correlation, the config k, and the model
    degrees of freedom.
    """
    parts = spec.split("-")
    base = parts[0]
    if base not in _STUDIES:
        raise ConfigurationError(
            f"unknown study {base!r}; available: {', '.join(canned_study_names())}"
        )
    want_rho = want_k = want_dof = None
    for token in parts[1:]:
        try:
            if token.startswith("rho"):
                want_rho = float(token[3:])
            elif token.startswith("dof"):
                want_dof = int(token[3:])
            elif token.startswith("k"):
                want_k = int(token[1:])
            else:
                raise ValueError
        except ValueError:
            raise ConfigurationError(f"bad study filter {token!r} in {spec!r}")
    configs = _STUDIES[base]()
    if want_rho is not None:
        configs = [c for c in configs if c.model.rho == want_rho]
    if want_k is not None:
        configs = [c for c in configs if c.k == want_k]
    if want_dof is not None:
        configs = [c for c in configs if c.model.dof == want_dof]
    if not configs:
        raise ConfigurationError(f"no configs in {base!r} match {spec!r}")
    return tuple(configs)
