"""Limiting spectral law and Gaussian null models for noise-only sample
covariance matrices.

Everything in this module is a closed form in the aspect ratio c = M / L,
where M is the array (row) dimension of the observation matrix and L the
number of snapshot columns.  Under unit-variance white noise the spectrum
of R = Y Y^H / L follows the Marchenko-Pastur law with continuous support
[(1 - sqrt(c))^2, (1 + sqrt(c))^2], and the three trace statistics used by
the detectors are asymptotically Gaussian; their means and variances are
given here together with the tail function needed to place a threshold at
a prescribed false-alarm probability.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DetectorKind",
    "MpLaw",
    "NullDistribution",
    "mp_support",
    "mp_mass_at_zero",
    "mp_pdf",
    "mp_moment",
    "stieltjes_inverse",
    "null_distribution",
    "q_function",
    "q_inverse",
    "np_threshold",
    "sensitivity_partials",
    "threshold_slope_rates",
]


class DetectorKind(enum.Enum):
    """Detector families understood by the toolkit.

    The first three work from traces of the sample covariance matrix and
    have closed-form Gaussian noise-only laws.  The remaining three are
    eigenvalue-based baselines and must be thresholded empirically.
    """

    HDL = "hdl"  # linear statistic tr(R)
    HDS = "hds"  # squared statistic tr(R^2)
    HDQ = "hdq"  # quadratic deviation tr((R - I)^2)
    GLR = "glr"  # largest eigenvalue over trace
    FN = "fn"  # mean squared eigenvalue
    RAO = "rao"  # squared deviation of the spectrum from one

    # Long-form aliases for the baselines.
    BaselineGLR = "glr"
    BaselineFN = "fn"
    BaselineRao = "rao"

    @property
    def has_gaussian_null(self) -> bool:
        return self in (DetectorKind.HDL, DetectorKind.HDS, DetectorKind.HDQ)


def _check_ratio(c) -> float:
    c = float(c)
    if not math.isfinite(c) or c <= 0.0:
        raise ValueError(f"aspect ratio c must be finite and positive, got {c!r}")
    return c


def _check_dims(m, ell) -> tuple[float, float]:
    m = float(m)
    ell = float(ell)
    if not (math.isfinite(m) and math.isfinite(ell)) or m < 1.0 or ell < 1.0:
        raise ValueError(f"dimensions must satisfy M >= 1 and L >= 1, got M={m!r}, L={ell!r}")
    return m, ell


def mp_support(c) -> tuple[float, float]:
    """Endpoints [a, b] of the continuous part of the Marchenko-Pastur law."""
    c = _check_ratio(c)
    s = math.sqrt(c)
    return (1.0 - s) ** 2, (1.0 + s) ** 2


def mp_mass_at_zero(c) -> float:
    """Weight of the point mass at the origin, max(0, 1 - 1/c)."""
    c = _check_ratio(c)
    return max(0.0, 1.0 - 1.0 / c)


def mp_pdf(x, c):
    """Continuous Marchenko-Pastur density at x; the atom at zero is excluded.

    On the support the density is sqrt((x - a)(b - x)) / (2 pi c x) and it
    vanishes elsewhere.  Accepts scalars or arrays.
    """
    c = _check_ratio(c)
    a, b = mp_support(c)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("evaluation points must be finite")
    with np.errstate(invalid="ignore", divide="ignore"):
        core = np.sqrt(np.clip(x - a, 0.0, None) * np.clip(b - x, 0.0, None)) / (
            2.0 * np.pi * c * x
        )
    out = np.where((x > a) & (x < b), core, 0.0)
    return float(out) if out.ndim == 0 else out


def mp_moment(k, c) -> float:
    """k-th moment of the Marchenko-Pastur law (the atom contributes zero).

    Exact combinatorial form sum_{r=0}^{k-1} c^r C(k,r) C(k-1,r) / (r+1),
    evaluated with integer binomials.  k is capped at 30; beyond that the
    coefficients leave the range where the float sum stays trustworthy.
    """
    c = _check_ratio(c)
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise ValueError(f"moment order must be an integer, got {k!r}")
    k = int(k)
    if k < 1 or k > 30:
        raise ValueError(f"moment order must be in 1..30, got {k}")
    return float(
        sum(c**r * math.comb(k, r) * math.comb(k - 1, r) / (r + 1) for r in range(k))
    )


def stieltjes_inverse(m, c) -> complex:
    """Inverse of the companion Stieltjes transform, z = -1/m + c/(1 + m).

    The poles m = 0 and m = -1 are rejected.  c = 0 is allowed; the map then
    degenerates to z = -1/m.
    """
    c = float(c)
    if not math.isfinite(c) or c < 0.0:
        raise ValueError(f"aspect ratio c must be finite and nonnegative, got {c!r}")
    m = complex(m)
    if m == 0 or m == -1:
        raise ValueError("m = 0 and m = -1 are poles of the inverse transform")
    return -1.0 / m + c / (1.0 + m)


@dataclass(frozen=True)
class MpLaw:
    """Marchenko-Pastur law with aspect ratio c, bundling the closed forms."""

    c: float

    def __post_init__(self) -> None:
        _check_ratio(self.c)

    @property
    def support(self) -> tuple[float, float]:
        return mp_support(self.c)

    @property
    def mass_at_zero(self) -> float:
        return mp_mass_at_zero(self.c)

    def pdf(self, x):
        return mp_pdf(x, self.c)

    def moment(self, k) -> float:
        return mp_moment(k, self.c)


@dataclass(frozen=True)
class NullDistribution:
    """Gaussian noise-only model N(mean, variance) for a decision statistic."""

    detector: DetectorKind
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise ValueError("mean and variance must be finite")
        if self.variance <= 0.0:
            raise ValueError(f"variance must be positive, got {self.variance!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def null_distribution(kind: DetectorKind, m, ell) -> NullDistribution:
    """Noise-only Gaussian law of the detector's decision statistic.

    With c = M / L and unit noise variance:

        HDL: tr(R)           ~ N(M,         c)
        HDS: tr(R^2)         ~ N(M (1 + c), 4 c^3 + 10 c^2 + 4 c)
        HDQ: tr((R - I)^2)   ~ N(M c,       2 c^2 (1 + 2 c))

    Observations with a calibrated noise level sigma^2 != 1 should be scaled
    by 1/sigma before the statistic is formed.  Baseline detectors have no
    closed-form null and are rejected.  M and L may be real-valued; this
    keeps the means and variances differentiable for sensitivity checks.
    """
    if not isinstance(kind, DetectorKind):
        raise TypeError(f"kind must be a DetectorKind, got {kind!r}")
    if not kind.has_gaussian_null:
        raise ValueError(f"{kind.name} has no closed-form noise-only law")
    m, ell = _check_dims(m, ell)
    c = m / ell
    if kind is DetectorKind.HDL:
        return NullDistribution(kind, m, c)
    if kind is DetectorKind.HDS:
        return NullDistribution(kind, m * (1.0 + c), 4.0 * c**3 + 10.0 * c**2 + 4.0 * c)
    return NullDistribution(kind, m * c, 2.0 * c**2 * (1.0 + 2.0 * c))


_SQRT2 = math.sqrt(2.0)
_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


def q_function(x) -> float:
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    return 0.5 * math.erfc(float(x) / _SQRT2)


def _phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_TWO_PI


# Rational approximation for the standard normal quantile (Acklam's
# coefficients), polished below by Newton steps on erfc.
_ACK_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_ACK_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_ACK_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_ACK_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)


def _norm_ppf_approx(p: float) -> float:
    a, b, cc, d = _ACK_A, _ACK_B, _ACK_C, _ACK_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        return (
            (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5])
            * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
        )
    q = math.sqrt(-2.0 * math.log1p(-p))
    return -(((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) / (
        (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
    )


def q_inverse(p) -> float:
    """Inverse Gaussian tail function: the x with Q(x) = p, for p in (0, 1).

    Rational first guess plus Newton refinement on Q itself; relative error
    is below 1e-10 across the open interval.  For p > 1/2 the exact
    complement 1 - p (no rounding below one half) reduces the problem to the
    lower tail, where Q(x) - p is free of cancellation.
    """
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ValueError(f"tail probability must lie in (0, 1), got {p!r}")
    if p > 0.5:
        return -q_inverse(1.0 - p)
    x = -_norm_ppf_approx(p)
    for _ in range(2):
        err = q_function(x) - p
        dens = _phi(x)
        if dens == 0.0:
            break
        x += err / dens
    return x


def np_threshold(kind: DetectorKind, m, ell, pfa) -> float:
    """Threshold achieving false-alarm probability pfa under the Gaussian null.

    tau = mean + std * Q^{-1}(pfa); the detector fires when its statistic
    strictly exceeds tau.
    """
    null = null_distribution(kind, m, ell)
    return null.mean + null.std * q_inverse(pfa)


def sensitivity_partials(kind: DetectorKind, m, ell) -> tuple[float, float, float]:
    """Partials (d sigma / d c, d mu / d L, d mu / d M) of the null moments.

    Evaluated at c = M / L with M and L treated as continuous reals.  The
    standard deviation depends on (M, L) only through c, and the mean
    partials at fixed (M, L) also collapse to functions of c alone:

        HDL: sigma = sqrt(c)                  mu = M
        HDS: sigma = sqrt(4c^3 + 10c^2 + 4c)  mu = M + M^2/L
        HDQ: sigma = sqrt(2c^2 (1 + 2c))      mu = M^2/L

    For HDQ the variance 2c^2(1 + 2c) gives
    d sigma / d c = (2 + 6c) / sqrt(2 + 4c); every row here differentiates
    the same variance that ``null_distribution`` reports, so central finite
    differences of the closed forms reproduce these values.
    """
    if not isinstance(kind, DetectorKind):
        raise TypeError(f"kind must be a DetectorKind, got {kind!r}")
    if not kind.has_gaussian_null:
        raise ValueError(f"{kind.name} has no closed-form noise-only law")
    m, ell = _check_dims(m, ell)
    c = m / ell
    if kind is DetectorKind.HDL:
        return 0.5 / math.sqrt(c), 0.0, 1.0
    if kind is DetectorKind.HDS:
        dsig = (6.0 * c**2 + 10.0 * c + 2.0) / math.sqrt(4.0 * c**3 + 10.0 * c**2 + 4.0 * c)
        return dsig, -(c**2), 1.0 + 2.0 * c
    dsig = (2.0 + 6.0 * c) / math.sqrt(2.0 + 4.0 * c)
    return dsig, -(c**2), 2.0 * c


def threshold_slope_rates(kind: DetectorKind, m, ell, pfa) -> tuple[float, float]:
    """Rates (d tau / d L, d tau / d M) of the threshold at fixed pfa.

    Chain rule through c = M / L: dc/dL = -c/L and dc/dM = 1/L, so

        d tau / d L = -(c / L) dsigma/dc Q^{-1}(pfa) + dmu/dL
        d tau / d M =  (1 / L) dsigma/dc Q^{-1}(pfa) + dmu/dM

    For pfa <= 1/2 the L rate is nonpositive and the M rate nonnegative:
    more snapshots lower the threshold, more antennas raise it.
    """
    m, ell = _check_dims(m, ell)
    c = m / ell
    dsig_dc, dmu_dl, dmu_dm = sensitivity_partials(kind, m, ell)
    zq = q_inverse(pfa)
    d_dl = -(c / ell) * dsig_dc * zq + dmu_dl
    d_dm = (1.0 / ell) * dsig_dc * zq + dmu_dm
    return d_dl, d_dm
