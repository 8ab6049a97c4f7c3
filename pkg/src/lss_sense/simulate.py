"""Seeded Monte Carlo engine: observation sampling, statistic streams, ROC
estimation, null-distribution summaries, and the inverse-SCM bias check.

Reproducibility contract: every trial draws from counter-based substreams
keyed by (master seed, purpose, trial index), so results are bitwise
identical for a fixed seed no matter how trials are ordered or spread
across worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .detectors import (
    ObservationMatrix,
    baseline_fn,
    baseline_glr,
    baseline_rao,
    compute_scm_summary,
    decision_statistic,
)
from .rmt import DetectorKind, NullDistribution, q_inverse

__all__ = [
    "SimulationError",
    "RandomStream",
    "ChannelModel",
    "NoiseModel",
    "ExperimentConfig",
    "MonteCarloResult",
    "RocPoint",
    "RocCurve",
    "HistogramSummary",
    "default_pfa_grid",
    "sample_h0",
    "sample_h1",
    "run_monte_carlo",
    "estimate_roc",
    "null_histogram_check",
    "pd_vs_snr_sweep",
    "inverse_scm_bias_check",
    "wilson_interval",
    "ks_statistic",
    "ks_critical_value",
]


class SimulationError(RuntimeError):
    """Raised when a Monte Carlo run cannot be completed as configured."""


_HD_KINDS = (DetectorKind.HDL, DetectorKind.HDS, DetectorKind.HDQ)

# Purpose tags for the per-trial substreams.
_PURPOSE_NOISE = 0
_PURPOSE_NOISE_DIAG = 1
_PURPOSE_CHANNEL = 2
_PURPOSE_SIGNAL = 3

_INV_SQRT2 = math.sqrt(0.5)

# Refuse configurations whose statistic buffers alone would exceed this.
_MAX_RESULT_BYTES = 2**32


@dataclass(frozen=True)
class RandomStream:
    """Locator for one trial's random substreams.

    Philox keyed by (seed, purpose << 56 | trial) gives every (trial,
    purpose) pair an independent generator that can be reconstructed from
    scratch by any worker, which is what makes parallel runs bitwise equal
    to serial ones.
    """

    seed: int
    trial: int

    def __post_init__(self) -> None:
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not isinstance(self.trial, (int, np.integer)) or not 0 <= int(self.trial) < 2**56:
            raise ValueError(f"trial index must lie in [0, 2^56), got {self.trial!r}")

    def generator(self, purpose: int) -> np.random.Generator:
        if not 0 <= purpose < 256:
            raise ValueError(f"purpose tag must lie in [0, 256), got {purpose!r}")
        key = np.array(
            [np.uint64(self.seed), np.uint64((purpose << 56) | int(self.trial))],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ChannelModel:
    """Channel covariance: identity, or exponential correlation rho^|i-j|.

    Both have unit diagonal, so tr(Sigma_H) = M holds exactly without a
    normalization step.
    """

    kind: str = "uncorrelated"
    rho: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("uncorrelated", "exp"):
            raise ValueError(f"channel kind must be 'uncorrelated' or 'exp', got {self.kind!r}")
        rho = float(self.rho)
        if self.kind == "exp" and not (0.0 <= rho < 1.0 and math.isfinite(rho)):
            raise ValueError(f"correlation rho must lie in [0, 1), got {self.rho!r}")
        if self.kind == "uncorrelated" and rho != 0.0:
            raise ValueError("uncorrelated channel takes no rho")

    @classmethod
    def uncorrelated(cls) -> "ChannelModel":
        return cls()

    @classmethod
    def exponential(cls, rho: float) -> "ChannelModel":
        return cls(kind="exp", rho=float(rho))

    def covariance(self, m: int) -> np.ndarray:
        idx = np.arange(m)
        if self.kind == "uncorrelated":
            return np.eye(m)
        return self.rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


@lru_cache(maxsize=32)
def _channel_root(kind: str, rho: float, m: int) -> np.ndarray | None:
    """Cholesky factor of the channel covariance; None for the identity."""
    if kind == "uncorrelated":
        return None
    cov = ChannelModel(kind=kind, rho=rho).covariance(m)
    return np.linalg.cholesky(cov)


@dataclass(frozen=True)
class NoiseModel:
    """Diagonal noise covariance: common variance, or i.i.d. uniform entries.

    The uncalibrated variant redraws its diagonal on every trial from
    uniform [lo, hi].
    """

    kind: str = "calibrated"
    variance: float = 1.0
    lo: float = 0.5
    hi: float = 1.5

    def __post_init__(self) -> None:
        if self.kind not in ("calibrated", "uncalibrated"):
            raise ValueError(f"noise kind must be 'calibrated' or 'uncalibrated', got {self.kind!r}")
        if self.kind == "calibrated":
            v = float(self.variance)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"noise variance must be positive, got {self.variance!r}")
        else:
            lo, hi = float(self.lo), float(self.hi)
            if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 < lo <= hi):
                raise ValueError(f"uncalibrated bounds need 0 < lo <= hi, got ({self.lo!r}, {self.hi!r})")

    @classmethod
    def calibrated(cls, variance: float = 1.0) -> "NoiseModel":
        return cls(kind="calibrated", variance=float(variance))

    @classmethod
    def uncalibrated(cls, lo: float = 0.5, hi: float = 1.5) -> "NoiseModel":
        return cls(kind="uncalibrated", lo=float(lo), hi=float(hi))

    @property
    def is_calibrated(self) -> bool:
        return self.kind == "calibrated"


def default_pfa_grid(n: int = 20, lo: float = 1e-3, hi: float = 0.5) -> tuple[float, ...]:
    """Log-spaced false-alarm targets, 20 points on [1e-3, 0.5] by default."""
    if n < 1 or not (0.0 < lo < hi < 1.0):
        raise ValueError("grid needs n >= 1 and 0 < lo < hi < 1")
    if n == 1:
        return (lo,)
    return tuple(float(x) for x in np.logspace(math.log10(lo), math.log10(hi), n))


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one Monte Carlo experiment."""

    m: int
    l: int
    snr_db: float = -math.inf
    channel: ChannelModel = field(default_factory=ChannelModel.uncorrelated)
    noise: NoiseModel = field(default_factory=NoiseModel.calibrated)
    trials: int = 10_000
    seed: int = 0
    detectors: tuple[DetectorKind, ...] = _HD_KINDS
    pfa_grid: tuple[float, ...] = field(default_factory=default_pfa_grid)

    def __post_init__(self) -> None:
        for name, v in (("m", self.m), ("l", self.l)):
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        if not isinstance(self.trials, (int, np.integer)) or self.trials < 1:
            raise ValueError(f"trials must be an integer >= 1, got {self.trials!r}")
        if math.isnan(float(self.snr_db)):
            raise ValueError("snr_db must not be NaN")
        RandomStream(self.seed, 0)  # validates the seed range
        if not self.detectors:
            raise ValueError("at least one detector is required")
        if len(set(self.detectors)) != len(self.detectors):
            raise ValueError("detector list contains duplicates")
        for kind in self.detectors:
            if not isinstance(kind, DetectorKind):
                raise ValueError(f"unknown detector {kind!r}")
        grid = tuple(float(p) for p in self.pfa_grid)
        if not grid:
            raise ValueError("pfa_grid must be nonempty")
        if any(not 0.0 < p < 1.0 for p in grid):
            raise ValueError("pfa_grid entries must lie in (0, 1)")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("pfa_grid must be strictly increasing")
        object.__setattr__(self, "pfa_grid", grid)
        object.__setattr__(self, "detectors", tuple(self.detectors))

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (float(self.snr_db) / 10.0)


def _complex_gaussian(rng: np.random.Generator, m: int, l: int) -> np.ndarray:
    """M x L circular complex Gaussian with unit-variance entries.

    Drawn sample-major (L outermost) so that runs differing only in L share
    their first min(L, L') columns; sweeps over the sample count then see
    coupled rather than independent noise.
    """
    z = rng.standard_normal((l, m, 2))
    return ((z[..., 0] + 1j * z[..., 1]) * _INV_SQRT2).T


def _noise_block(m: int, l: int, noise: NoiseModel, stream: RandomStream) -> tuple[np.ndarray, float]:
    """Noise matrix plus the realized tr(Sigma_N) for SNR calibration."""
    y = _complex_gaussian(stream.generator(_PURPOSE_NOISE), m, l)
    if noise.is_calibrated:
        if noise.variance != 1.0:
            y *= math.sqrt(noise.variance)
        return y, m * noise.variance
    diag = stream.generator(_PURPOSE_NOISE_DIAG).uniform(noise.lo, noise.hi, m)
    y *= np.sqrt(diag)[:, None]
    return y, float(diag.sum())


def sample_h0(m: int, l: int, noise: NoiseModel, stream: RandomStream) -> ObservationMatrix:
    """Noise-only observation: columns i.i.d. CN(0, Sigma_N), Sigma_N diagonal."""
    y, _ = _noise_block(m, l, noise, stream)
    return ObservationMatrix(y)


def sample_h1(
    m: int,
    l: int,
    snr_db: float,
    channel: ChannelModel,
    noise: NoiseModel,
    stream: RandomStream,
) -> ObservationMatrix:
    """Signal-plus-noise observation y_l = h s_l + n_l.

    One channel vector h ~ CN(0, Sigma_H) is drawn per trial and held fixed
    over all L samples; s_l are i.i.d. CN(0, E_s).  E_s solves the average
    SNR identity gamma = E_s tr(Sigma_H) / tr(Sigma_N) against the realized
    noise trace, so the configured SNR is exact trial by trial.
    """
    y, trace_sn = _noise_block(m, l, noise, stream)
    gamma = 10.0 ** (float(snr_db) / 10.0)
    if gamma == 0.0:
        return ObservationMatrix(y)
    es = gamma * trace_sn / m  # tr(Sigma_H) = m by construction
    g = stream.generator(_PURPOSE_CHANNEL).standard_normal((m, 2))
    h = (g[:, 0] + 1j * g[:, 1]) * _INV_SQRT2
    root = _channel_root(channel.kind, channel.rho, m)
    if root is not None:
        h = root @ h
    zs = stream.generator(_PURPOSE_SIGNAL).standard_normal((l, 2))
    s = (zs[:, 0] + 1j * zs[:, 1]) * (_INV_SQRT2 * math.sqrt(es))
    y += h[:, None] * s[None, :]
    return ObservationMatrix(y)


def _needs_spectrum(detectors: tuple[DetectorKind, ...]) -> bool:
    return any(not k.has_gaussian_null for k in detectors)


def _trial_statistics(cfg: ExperimentConfig, hypothesis: str, trial: int) -> list[float]:
    stream = RandomStream(cfg.seed, trial)
    if hypothesis == "h0":
        obs = sample_h0(cfg.m, cfg.l, cfg.noise, stream)
    else:
        obs = sample_h1(cfg.m, cfg.l, cfg.snr_db, cfg.channel, cfg.noise, stream)
    summary = compute_scm_summary(obs)
    lam = None
    if _needs_spectrum(cfg.detectors):
        y = obs.y
        gram = (y.conj().T @ y if cfg.l <= cfg.m else y @ y.conj().T) / cfg.l
        nz = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
        lam = np.concatenate([np.zeros(cfg.m - nz.size), nz]) if nz.size < cfg.m else nz
    out = []
    for kind in cfg.detectors:
        if kind.has_gaussian_null:
            out.append(decision_statistic(kind, summary))
        elif kind is DetectorKind.GLR:
            out.append(baseline_glr(lam))
        elif kind is DetectorKind.FN:
            out.append(baseline_fn(lam))
        else:
            out.append(baseline_rao(lam, cfg.m))
    return out


def _chunk_worker(args: tuple[ExperimentConfig, str, int, int]) -> np.ndarray:
    cfg, hypothesis, start, stop = args
    block = np.empty((stop - start, len(cfg.detectors)))
    for i, trial in enumerate(range(start, stop)):
        block[i, :] = _trial_statistics(cfg, hypothesis, trial)
    return block


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        raw = os.environ.get("LSS_SENSE_WORKERS", "1")
        try:
            workers = int(raw)
        except ValueError:
            raise SimulationError(f"LSS_SENSE_WORKERS must be an integer, got {raw!r}") from None
    if workers < 1:
        raise SimulationError(f"worker count must be >= 1, got {workers}")
    return min(workers, 64)


@dataclass(frozen=True)
class MonteCarloResult:
    """Per-detector statistic streams, one float per trial per hypothesis."""

    h0: dict[DetectorKind, np.ndarray] | None
    h1: dict[DetectorKind, np.ndarray] | None
    config: ExperimentConfig


def run_monte_carlo(
    cfg: ExperimentConfig,
    hypotheses: tuple[str, ...] = ("h0", "h1"),
    workers: int | None = None,
) -> MonteCarloResult:
    """Run cfg.trials independent trials and collect detector statistics.

    Results are bitwise independent of the worker count: trial t depends
    only on (cfg.seed, t).  Workers default to the LSS_SENSE_WORKERS
    environment variable (1 if unset).
    """
    for h in hypotheses:
        if h not in ("h0", "h1"):
            raise ValueError(f"hypotheses must be 'h0'/'h1', got {h!r}")
    if not hypotheses:
        raise ValueError("at least one hypothesis is required")
    est = 8 * cfg.trials * len(cfg.detectors) * len(hypotheses)
    if est > _MAX_RESULT_BYTES:
        raise SimulationError(
            f"configured run needs ~{est / 2**30:.1f} GiB of statistic storage; "
            "reduce trials or detectors"
        )
    workers = _resolve_workers(workers)
    streams: dict[str, dict[DetectorKind, np.ndarray]] = {}
    for hypothesis in hypotheses:
        if workers == 1 or cfg.trials < 4 * workers:
            block = _chunk_worker((cfg, hypothesis, 0, cfg.trials))
        else:
            bounds = np.linspace(0, cfg.trials, workers + 1, dtype=int)
            tasks = [(cfg, hypothesis, int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
            try:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    parts = list(pool.map(_chunk_worker, tasks))
            except MemoryError as exc:
                raise SimulationError("worker pool ran out of memory") from exc
            block = np.concatenate(parts, axis=0)
        streams[hypothesis] = {
            kind: np.ascontiguousarray(block[:, j]) for j, kind in enumerate(cfg.detectors)
        }
    return MonteCarloResult(h0=streams.get("h0"), h1=streams.get("h1"), config=cfg)


_WILSON_Z = 1.959963984540054  # two-sided 95%


def wilson_interval(successes: int, n: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson score interval (center, halfwidth) for a binomial proportion.

    Stays inside [0, 1] and keeps sane coverage even when successes is 0 or
    n, which plain Wald intervals do not.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= successes <= n:
        raise ValueError(f"successes must lie in [0, n], got {successes}/{n}")
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    halfwidth = (z / denom) * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n))
    return center, halfwidth


@dataclass(frozen=True)
class RocPoint:
    pfa_target: float
    threshold: float
    pd_hat: float
    pfa_hat: float
    ci_halfwidth: float


@dataclass(frozen=True)
class RocCurve:
    """Operating points of one detector over a false-alarm grid."""

    detector: DetectorKind
    points: tuple[RocPoint, ...]
    trials: int
    seed: int
    config_digest: str = ""

    def __post_init__(self) -> None:
        for p in self.points:
            for rate in (p.pd_hat, p.pfa_hat):
                if not 0.0 <= rate <= 1.0:
                    raise ValueError(f"rates must lie in [0, 1], got {rate!r}")
        ordered = sorted(self.points, key=lambda p: p.threshold)
        if any(a.pd_hat < b.pd_hat for a, b in zip(ordered, ordered[1:])):
            raise ValueError("pd_hat must be nonincreasing in threshold")


def estimate_roc(
    h0_stats,
    h1_stats,
    pfa_grid,
    null: NullDistribution | None = None,
    *,
    detector: DetectorKind | None = None,
    trials: int | None = None,
    seed: int = 0,
    config_digest: str = "",
) -> RocCurve:
    """Operating points for each target pfa in the grid.

    Thresholds come from the Gaussian null when one is supplied, otherwise
    from empirical H0 quantiles; pd_hat / pfa_hat are strict-exceedance
    fractions and ci_halfwidth is the 95% Wilson halfwidth of pd_hat.
    """
    h0 = np.asarray(h0_stats, dtype=float)
    h1 = np.asarray(h1_stats, dtype=float)
    if h0.size == 0 or h1.size == 0:
        raise ValueError("statistic streams must be nonempty")
    if not (np.all(np.isfinite(h0)) and np.all(np.isfinite(h1))):
        raise ValueError("statistic streams must be finite")
    points = []
    for pfa in pfa_grid:
        pfa = float(pfa)
        if not 0.0 < pfa < 1.0:
            raise ValueError(f"pfa targets must lie in (0, 1), got {pfa!r}")
        if null is not None:
            tau = null.mean + null.std * q_inverse(pfa)
        else:
            tau = float(np.quantile(h0, 1.0 - pfa))
        k_d = int(np.count_nonzero(h1 > tau))
        _, hw = wilson_interval(k_d, h1.size)
        points.append(
            RocPoint(
                pfa_target=pfa,
                threshold=float(tau),
                pd_hat=k_d / h1.size,
                pfa_hat=float(np.count_nonzero(h0 > tau)) / h0.size,
                ci_halfwidth=hw,
            )
        )
    return RocCurve(
        detector=detector if detector is not None else DetectorKind.HDL,
        points=tuple(points),
        trials=trials if trials is not None else int(h1.size),
        seed=seed,
        config_digest=config_digest,
    )


def ks_statistic(values, mean: float, variance: float) -> float:
    """One-sample Kolmogorov-Smirnov distance to N(mean, variance)."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 1:
        raise ValueError("need at least one value")
    if variance <= 0.0:
        raise ValueError("variance must be positive")
    z = (x - mean) / math.sqrt(variance)
    cdf = 0.5 * np.array([math.erfc(-v * _INV_SQRT2) for v in z])
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def ks_critical_value(alpha: float, n: int) -> float:
    """Asymptotic one-sample KS critical value sqrt(-ln(alpha/2)/2) / sqrt(n)."""
    if not 0.0 < alpha < 1.0 or n < 1:
        raise ValueError("need 0 < alpha < 1 and n >= 1")
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


@dataclass(frozen=True)
class HistogramSummary:
    """Empirical moments of a statistic stream vs a reference Gaussian."""

    sample_mean: float
    sample_variance: float
    sample_skewness: float
    ks_statistic: float
    n: int

    def __post_init__(self) -> None:
        if self.sample_variance < 0.0:
            raise ValueError("sample variance cannot be negative")
        if not 0.0 <= self.ks_statistic <= 1.0:
            raise ValueError("KS statistic must lie in [0, 1]")


def null_histogram_check(stats, null: NullDistribution) -> HistogramSummary:
    """Moments and KS distance of a statistic stream against its Gaussian null."""
    x = np.asarray(stats, dtype=float)
    if x.size < 100:
        raise ValueError(f"need at least 100 samples for a meaningful check, got {x.size}")
    mean = float(x.mean())
    centered = x - mean
    var = float(np.dot(centered, centered)) / (x.size - 1)
    m2 = float(np.mean(centered**2))
    m3 = float(np.mean(centered**3))
    skew = m3 / m2**1.5 if m2 > 0 else 0.0
    return HistogramSummary(
        sample_mean=mean,
        sample_variance=var,
        sample_skewness=skew,
        ks_statistic=ks_statistic(x, null.mean, null.variance),
        n=int(x.size),
    )


def pd_vs_snr_sweep(cfg: ExperimentConfig, snr_list, workers: int | None = None) -> list[dict]:
    """Detection probability per (snr, detector) at the first grid pfa.

    Each SNR point reruns the Monte Carlo with the same seed, so noise draws
    are shared across the sweep and curves are monotone up to signal effects
    rather than resampling noise.
    """
    snrs = [float(s) for s in snr_list]
    if not snrs:
        raise ValueError("snr_list must be nonempty")
    pfa = cfg.pfa_grid[0]
    rows = []
    for snr in snrs:
        run = run_monte_carlo(replace(cfg, snr_db=snr), workers=workers)
        for kind in cfg.detectors:
            null = None
            if kind.has_gaussian_null and cfg.noise.is_calibrated and cfg.noise.variance == 1.0:
                from .rmt import null_distribution

                null = null_distribution(kind, cfg.m, cfg.l)
            curve = estimate_roc(
                run.h0[kind], run.h1[kind], (pfa,), null, detector=kind, seed=cfg.seed
            )
            pt = curve.points[0]
            rows.append(
                {
                    "detector": kind,
                    "snr_db": snr,
                    "pd_hat": pt.pd_hat,
                    "ci_halfwidth": pt.ci_halfwidth,
                }
            )
    return rows


def inverse_scm_bias_check(m: int, l: int, trials: int, seed: int = 0) -> float:
    """Monte Carlo scale of E[R^{-1}] under unit noise, fitted to alpha I.

    The average inverse SCM is alpha Sigma^{-1} with alpha = L/(L - M - 2);
    the fit minimizes ||avg - alpha I||_F, i.e. alpha = Re tr(avg) / M.
    Requires L > M + 2, below which the expectation diverges.
    """
    if not (isinstance(m, (int, np.integer)) and isinstance(l, (int, np.integer))):
        raise ValueError("m and l must be integers")
    if l <= m + 2:
        raise ValueError(f"need l > m + 2 for a finite mean inverse, got m={m}, l={l}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    noise = NoiseModel.calibrated(1.0)
    acc = np.zeros((m, m), dtype=np.complex128)
    for t in range(trials):
        y = sample_h0(m, l, noise, RandomStream(seed, t)).y
        r = y @ y.conj().T / l
        acc += np.linalg.inv(r)
    avg = acc / trials
    return float(np.trace(avg).real) / m
