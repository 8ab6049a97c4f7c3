"""Detector statistics computed from the sample covariance matrix.

The trace detectors never need an eigendecomposition: both tr(R) and
tr(R^2) for R = Y Y^H / L are available from the cheaper Gram product of
the observation matrix (L x L or M x M, whichever is smaller).  Baseline
detectors that genuinely require the eigenvalue list are provided for
comparison and accept a precomputed spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rmt import DetectorKind

__all__ = [
    "ObservationMatrix",
    "ScmSummary",
    "Decision",
    "compute_scm_summary",
    "t_hdl",
    "t_hds",
    "t_hdq",
    "decision_statistic",
    "baseline_glr",
    "baseline_fn",
    "baseline_rao",
    "decide",
]

# Relative slack for the Cauchy-Schwarz sanity bounds on accumulated traces.
_CS_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """Complex M x L snapshot matrix: M antennas (rows), L samples (columns)."""

    y: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=np.complex128)
        if y.ndim != 2 or y.shape[0] < 1 or y.shape[1] < 1:
            raise ValueError(f"observation matrix must be 2-D and nonempty, got shape {np.shape(self.y)}")
        if not np.all(np.isfinite(y.real)) or not np.all(np.isfinite(y.imag)):
            raise ValueError("observation matrix must have finite entries")
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.y.shape[0]

    @property
    def l(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class ScmSummary:
    """Traces of the sample covariance matrix R = Y Y^H / L.

    trace_r = tr(R) and trace_r2 = tr(R^2).  Both are nonnegative, and the
    Cauchy-Schwarz sandwich tr(R)^2 / M <= tr(R^2) <= tr(R)^2 must hold; a
    violation beyond rounding slack means the traces were not produced by a
    common positive semidefinite matrix.
    """

    m: int
    l: int
    trace_r: float
    trace_r2: float

    def __post_init__(self) -> None:
        if not isinstance(self.m, (int, np.integer)) or not isinstance(self.l, (int, np.integer)):
            raise ValueError("dimensions m and l must be integers")
        if self.m < 1 or self.l < 1:
            raise ValueError(f"dimensions must be >= 1, got m={self.m}, l={self.l}")
        tr, tr2 = float(self.trace_r), float(self.trace_r2)
        if not (math.isfinite(tr) and math.isfinite(tr2)):
            raise ValueError("traces must be finite")
        if tr < 0.0 or tr2 < 0.0:
            raise ValueError("traces of a PSD matrix must be nonnegative")
        slack = _CS_SLACK * max(1.0, tr * tr)
        if tr2 > tr * tr + slack:
            raise ValueError(f"tr(R^2)={tr2!r} exceeds tr(R)^2={tr * tr!r}")
        if tr2 < tr * tr / self.m - slack:
            raise ValueError(f"tr(R^2)={tr2!r} below tr(R)^2/M={tr * tr / self.m!r}")
        object.__setattr__(self, "trace_r", tr)
        object.__setattr__(self, "trace_r2", tr2)


def compute_scm_summary(y) -> ScmSummary:
    """Summarise an observation matrix into (tr(R), tr(R^2)) without forming R.

    Uses the smaller Gram product G: for L <= M, G = Y^H Y, otherwise
    G = Y Y^H.  Either way tr(R) = tr(G)/L and tr(R^2) = ||G||_F^2 / L^2,
    so the cost is O(min(M, L)^2 max(M, L)) rather than O(M^3).
    """
    if isinstance(y, ObservationMatrix):
        y = y.y
    else:
        y = ObservationMatrix(y).y
    m, ell = y.shape
    if ell <= m:
        g = y.conj().T @ y
    else:
        g = y @ y.conj().T
    trace_r = float(np.trace(g).real) / ell
    trace_r2 = float(np.vdot(g, g).real) / (ell * ell)
    return ScmSummary(m=m, l=ell, trace_r=trace_r, trace_r2=trace_r2)


def t_hdl(summary: ScmSummary) -> float:
    """Per-antenna linear statistic tr(R) / M; tends to 1 under unit noise."""
    return summary.trace_r / summary.m


def t_hds(summary: ScmSummary) -> float:
    """Per-antenna squared statistic tr(R^2)/M + tr(R)^2/(L M).

    The second term removes the O(1) finite-sample inflation of tr(R^2)/M,
    making the limit 1 + c under unit noise.  This is the normalised form
    matched by the contour oracle with the square kernel.
    """
    return summary.trace_r2 / summary.m + summary.trace_r**2 / (summary.l * summary.m)


def t_hdq(summary: ScmSummary) -> float:
    """Per-antenna quadratic statistic, algebraically t_hds - 2 t_hdl + 1 - 1.

    Computed literally as t_hds(s) - 2 t_hdl(s) so the identity between the
    three normalised statistics is exact in floating point; the limit under
    unit noise is c - 1.
    """
    return t_hds(summary) - 2.0 * t_hdl(summary)


def decision_statistic(kind: DetectorKind, summary: ScmSummary) -> float:
    """Plain trace statistic whose noise-only law ``null_distribution`` gives.

    HDL: tr(R); HDS: tr(R^2); HDQ: tr((R - I)^2) = tr(R^2) - 2 tr(R) + M.
    Baseline kinds need the eigenvalue list and are rejected here; use the
    ``baseline_*`` functions instead.
    """
    if not isinstance(kind, DetectorKind):
        raise TypeError(f"kind must be a DetectorKind, got {kind!r}")
    if kind is DetectorKind.HDL:
        return summary.trace_r
    if kind is DetectorKind.HDS:
        return summary.trace_r2
    if kind is DetectorKind.HDQ:
        return summary.trace_r2 - 2.0 * summary.trace_r + summary.m
    raise ValueError(f"{kind.name} is eigenvalue-based; see baseline_glr/baseline_fn/baseline_rao")


def _check_spectrum(eigenvalues) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size < 1:
        raise ValueError("eigenvalue list must be a nonempty 1-D array")
    if not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalues must be finite")
    if np.any(lam < 0.0):
        raise ValueError("eigenvalues of a PSD matrix must be nonnegative")
    return lam


def baseline_glr(eigenvalues) -> float:
    """Largest eigenvalue divided by the trace.  All-zero spectra are rejected."""
    lam = _check_spectrum(eigenvalues)
    total = float(lam.sum())
    if total <= 0.0:
        raise ValueError("trace is zero; the ratio statistic is undefined")
    return float(lam.max()) / total


def baseline_fn(eigenvalues) -> float:
    """Mean squared eigenvalue, sum(lambda_i^2) / M with M = len(eigenvalues)."""
    lam = _check_spectrum(eigenvalues)
    return float(np.square(lam).sum()) / lam.size


def baseline_rao(eigenvalues, m: int | None = None) -> float:
    """Squared deviation of the spectrum from one: sum((lambda_i - 1)^2).

    The list may omit trailing zero eigenvalues of a rank-deficient matrix;
    passing the full dimension ``m`` accounts for each omitted zero, which
    contributes (0 - 1)^2 = 1.  By default m = len(eigenvalues).
    """
    lam = _check_spectrum(eigenvalues)
    if m is None:
        m = lam.size
    if not isinstance(m, (int, np.integer)) or m < lam.size:
        raise ValueError(f"m must be an integer >= len(eigenvalues), got {m!r}")
    return float(np.square(lam - 1.0).sum()) + float(m - lam.size)


@dataclass(frozen=True)
class Decision:
    """Outcome of comparing a statistic against a threshold."""

    statistic: float
    threshold: float
    signal_present: bool


def decide(statistic, threshold) -> Decision:
    """Declare a signal when the statistic strictly exceeds the threshold.

    Ties go to the noise hypothesis, so a threshold at +inf never fires.
    """
    statistic = float(statistic)
    threshold = float(threshold)
    if math.isnan(statistic) or math.isnan(threshold):
        raise ValueError("statistic and threshold must not be NaN")
    return Decision(statistic, threshold, statistic > threshold)
