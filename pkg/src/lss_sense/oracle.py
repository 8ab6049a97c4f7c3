"""Independent numerical cross-checks for the closed forms.

Three oracles, each deliberately avoiding the code paths they are meant to
check: a cyclic Jacobi eigensolver that does not call LAPACK, a rectangular
contour integral that recovers linear spectral statistics from the resolvent
of the sample spectrum, and direct quadrature against the Marchenko-Pastur
density.  They are slow and simple on purpose; the fast closed forms in
``rmt`` and ``detectors`` are validated against them.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "ConvergenceError",
    "ContourError",
    "Contour",
    "ContourResult",
    "hermitian_eigenvalues",
    "enclosing_contour",
    "lss_contour",
    "mean_correction_numeric",
    "mp_moment_numeric",
    "KERNELS",
]


class ConvergenceError(RuntimeError):
    """Raised when an iterative oracle fails to reach its tolerance."""


class ContourError(ValueError):
    """Raised when a contour would be invalid for the requested spectrum."""


# Eigenvalues in (-1e-9, 0) are rounding debris from PSD inputs; snap to zero.
_PSD_CLAMP = -1e-9
_MAX_JACOBI_DIM = 512


def _offdiag_norm(a: np.ndarray) -> float:
    d = a.copy()
    np.fill_diagonal(d, 0.0)
    return float(np.linalg.norm(d))


def hermitian_eigenvalues(a, *, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix via cyclic Jacobi rotations, ascending.

    Independent of LAPACK by construction.  Convergence means the off-diagonal
    Frobenius norm has fallen below tol * ||A||_F; running out of sweeps raises
    ConvergenceError.  Inputs that deviate from Hermitian symmetry by more than
    1e-10 (absolute, relative to the largest entry) are rejected.  Eigenvalues
    in (-1e-9, 0) are clamped to zero so PSD spectra stay nonnegative.
    """
    a = np.array(a, dtype=np.complex128, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if n > _MAX_JACOBI_DIM:
        raise ValueError(f"dimension {n} exceeds the oracle cap of {_MAX_JACOBI_DIM}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix entries must be finite")
    scale_entry = float(np.max(np.abs(a))) if n else 0.0
    herm_defect = float(np.max(np.abs(a - a.conj().T))) if n else 0.0
    if herm_defect > 1e-10 * max(1.0, scale_entry):
        raise ValueError(f"matrix is not Hermitian: max |A - A^H| = {herm_defect:.3e}")
    # Symmetrise away sub-tolerance asymmetry so rotations see exact Hermitian data.
    a = 0.5 * (a + a.conj().T)

    norm_all = float(np.linalg.norm(a))
    if norm_all == 0.0 or n == 1:
        vals = a.diagonal().real.copy()
    else:
        target = tol * norm_all
        skip = 0.01 * target / n
        converged = False
        for _ in range(max_sweeps):
            # Summing |a_ij|^2 directly avoids the cancellation that
            # ||A||_F^2 - sum(diag^2) suffers near convergence.
            off = _offdiag_norm(a)
            if off <= target:
                converged = True
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    beta = a[p, q]
                    absb = abs(beta)
                    if absb <= skip:
                        continue
                    w = beta / absb
                    theta = 0.5 * math.atan2(2.0 * absb, a[p, p].real - a[q, q].real)
                    cs, sn = math.cos(theta), math.sin(theta)
                    # Unitary V = [[w c, -w s], [s, c]] zeroes the (p, q) entry.
                    col_p = a[:, p].copy()
                    col_q = a[:, q].copy()
                    a[:, p] = w * cs * col_p + sn * col_q
                    a[:, q] = -w * sn * col_p + cs * col_q
                    row_p = a[p, :].copy()
                    row_q = a[q, :].copy()
                    a[p, :] = np.conj(w) * cs * row_p + sn * row_q
                    a[q, :] = -np.conj(w) * sn * row_p + cs * row_q
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    a[p, p] = a[p, p].real
                    a[q, q] = a[q, q].real
        else:
            converged = False
        if not converged:
            off = _offdiag_norm(a)
            if off > target:
                raise ConvergenceError(
                    f"Jacobi sweeps exhausted: off-diagonal norm {off:.3e} > tolerance {target:.3e}"
                )
        vals = a.diagonal().real.copy()
    vals[(vals > _PSD_CLAMP) & (vals < 0.0)] = 0.0
    return np.sort(vals)


@dataclass(frozen=True)
class Contour:
    """Axis-aligned rectangle in the complex plane, symmetric about the real axis."""

    center: float
    half_width: float
    half_height: float
    nodes: int

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, (self.center, self.half_width, self.half_height))):
            raise ValueError("contour geometry must be finite")
        if self.half_width <= 0.0 or self.half_height <= 0.0:
            raise ValueError("contour half-extents must be positive")
        if not isinstance(self.nodes, (int, np.integer)) or self.nodes < 256:
            raise ValueError(f"node count must be an integer >= 256, got {self.nodes!r}")

    @property
    def real_min(self) -> float:
        return self.center - self.half_width

    @property
    def real_max(self) -> float:
        return self.center + self.half_width


def enclosing_contour(eigenvalues, *, margin: float = 0.1, nodes: int = 1024) -> Contour:
    """Rectangle enclosing a positive spectrum with a relative margin.

    The left edge is clipped at lambda_min / 2, so the origin (a pole of the
    integrand) always stays outside; the half-height is max(0.5 * span, 0.1).
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size < 1 or not np.all(np.isfinite(lam)):
        raise ContourError("spectrum must be a nonempty finite 1-D array")
    if margin <= 0.0:
        raise ContourError(f"margin must be positive, got {margin!r}")
    lo = float(lam.min())
    hi = float(lam.max())
    if lo <= 0.0:
        raise ContourError("spectrum must be strictly positive to keep the origin outside")
    span = hi - lo
    pad = margin * (span if span > 0.0 else max(hi, 1.0))
    left = max(lo - pad, 0.5 * lo)
    right = hi + pad
    return Contour(
        center=0.5 * (left + right),
        half_width=0.5 * (right - left),
        half_height=max(0.5 * span, 0.1),
        nodes=int(nodes),
    )


@dataclass(frozen=True)
class ContourResult:
    """Value of a contour-recovered spectral statistic plus diagnostics."""

    value: float
    imag_residual: float
    nodes: int


KERNELS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "linear": lambda z: z,
    "square": lambda z: z * z,
    "quadratic": lambda z: (z - 1.0) * (z - 1.0),
}


@functools.lru_cache(maxsize=64)
def _gl_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _panel_nodes(start: complex, stop: complex, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gl_rule(n)
    mid = 0.5 * (start + stop)
    half = 0.5 * (stop - start)
    return mid + half * x, w * half


def _side_panels(start: complex, stop: complex, budget: int, pole_dist: float) -> list[tuple[complex, complex, int]]:
    """Split one contour side into Gauss-Legendre panels.

    The integrand's poles sit on the real axis, so a vertical side whose
    nearest pole is much closer than the side is long needs panels graded
    geometrically toward the real-axis crossing; otherwise a single panel of
    the full budget already converges exponentially.
    """
    length = abs(stop - start)
    if pole_dist >= 0.5 * length or start.real != stop.real:
        return [(start, stop, max(budget, 8))]
    # Vertical side: grade |Im w| breakpoints delta, 2 delta, 4 delta, ...
    hh = 0.5 * length
    cuts = [0.0, pole_dist]
    while cuts[-1] < hh:
        cuts.append(min(2.0 * cuts[-1], hh))
    ys: list[float] = [-y for y in reversed(cuts[1:])] + cuts
    x = start.real
    sgn = 1.0 if stop.imag > start.imag else -1.0
    if sgn < 0:
        ys = ys[::-1]
    per_panel = max(budget // (len(ys) - 1), 12)
    return [(complex(x, ys[i]), complex(x, ys[i + 1]), per_panel) for i in range(len(ys) - 1)]


def lss_contour(
    g,
    eigenvalues,
    m: int,
    l: int,
    *,
    contour: Contour | None = None,
    margin: float = 0.1,
    nodes: int = 1024,
) -> ContourResult:
    """Recover a normalised linear spectral statistic by contour integration.

    For a spectrum lambda_1..lambda_L of the L x L companion sample matrix and
    kernel g, evaluates

        (L / M) * (1 / 2 pi j) * oint g(z(w)) psi(w) / w  dw

    counterclockwise over a rectangle enclosing the spectrum but not the
    origin, where z(w) = w (1 - (1/L) sum lambda_i / (lambda_i - w)) and
    psi(w) = 1 - (1/L) sum lambda_i^2 / (lambda_i - w)^2 is the Jacobian of
    the spectral variable change.  Gauss-Legendre panels are used per side;
    the analytic value is real, so the imaginary residual is returned as a
    diagnostic and must stay below 1e-8.

    ``g`` is one of "linear", "square", "quadratic" or an analytic callable.
    Exact zero eigenvalues are shifted to 1e-12 before validation, which the
    minimum-distance rule then rejects with a clear message instead of a
    silent division blowup.
    """
    if isinstance(g, str):
        try:
            kernel = KERNELS[g]
        except KeyError:
            raise ValueError(f"unknown kernel {g!r}; expected one of {sorted(KERNELS)}") from None
    elif callable(g):
        kernel = g
    else:
        raise TypeError(f"kernel must be a name or callable, got {g!r}")
    if not isinstance(m, (int, np.integer)) or not isinstance(l, (int, np.integer)) or m < 1 or l < 1:
        raise ValueError(f"dimensions must be integers >= 1, got m={m!r}, l={l!r}")

    lam = np.asarray(eigenvalues, dtype=float).copy()
    if lam.ndim != 1 or lam.size < 1 or not np.all(np.isfinite(lam)):
        raise ContourError("spectrum must be a nonempty finite 1-D array")
    if np.any(lam < 0.0):
        raise ContourError("spectrum must be nonnegative")
    had_zeros = bool(np.any(lam == 0.0))
    lam[lam == 0.0] = 1e-12

    try:
        if contour is None:
            contour = enclosing_contour(lam, margin=margin, nodes=nodes)
        left, right = contour.real_min, contour.real_max
        if left <= 0.0:
            raise ContourError(f"contour must exclude the origin; left edge at {left!r}")
        if np.any(lam <= left) or np.any(lam >= right):
            raise ContourError("contour must strictly enclose every eigenvalue")
        span = float(lam.max() - lam.min())
        dist = np.minimum(np.minimum(lam - left, right - lam), contour.half_height)
        min_dist = float(dist.min())
        if min_dist < 1e-6 * span:
            raise ContourError(
                f"contour passes within {min_dist:.3e} of an eigenvalue (limit {1e-6 * span:.3e})"
            )
    except ContourError as exc:
        if had_zeros:
            raise ContourError(
                f"{exc} (input contained exact zeros, shifted to 1e-12; pass only the "
                "nonzero spectrum and account for rank through m and l)"
            ) from None
        raise

    hh = contour.half_height
    corners = (
        complex(right, -hh),
        complex(right, hh),
        complex(left, hh),
        complex(left, -hh),
        complex(right, -hh),
    )
    lengths = np.array([abs(corners[i + 1] - corners[i]) for i in range(4)])
    total_nodes = int(contour.nodes)
    alloc = np.maximum(8, np.floor(total_nodes * lengths / lengths.sum()).astype(int))
    edge_dist = (
        float(np.min(np.abs(lam - right))),
        math.inf,
        float(np.min(np.abs(lam - left))),
        math.inf,
    )

    lam_row = lam[None, :]
    integral = 0.0 + 0.0j
    for i in range(4):
        for start, stop, order in _side_panels(corners[i], corners[i + 1], int(alloc[i]), edge_dist[i]):
            znodes, zweights = _panel_nodes(start, stop, order)
            wcol = znodes[:, None]
            resolvent = lam_row / (lam_row - wcol)
            zmap = znodes * (1.0 - resolvent.sum(axis=1) / l)
            psi = 1.0 - (lam_row**2 / (lam_row - wcol) ** 2).sum(axis=1) / l
            integrand = kernel(zmap) * psi / znodes
            integral += np.sum(integrand * zweights)

    value = (l / m) * integral / (2.0j * math.pi)
    imag_residual = abs(value.imag)
    if imag_residual > 1e-8:
        raise ContourError(
            f"imaginary residual {imag_residual:.3e} exceeds 1e-8; contour too close to a pole?"
        )
    return ContourResult(value=float(value.real), imag_residual=imag_residual, nodes=total_nodes)


def _kernel_callable(g) -> Callable:
    if isinstance(g, str):
        try:
            return KERNELS[g]
        except KeyError:
            raise ValueError(f"unknown kernel {g!r}; expected one of {sorted(KERNELS)}") from None
    if callable(g):
        return g
    raise TypeError(f"kernel must be a name or callable, got {g!r}")


def mean_correction_numeric(g, c, *, epsabs: float = 1e-12, epsrel: float = 1e-12) -> float:
    """Integral of g against the full Marchenko-Pastur law, by quadrature.

    Substituting x = 1 + c - 2 sqrt(c) cos(zeta) turns the edge singularities
    into the smooth integrand (2/pi) g(x) sin^2(zeta) / x on [0, pi], which
    adaptive quadrature handles to near machine precision even at c = 1 where
    the left edge touches the origin.  For c > 1 the bulk carries mass 1/c
    only; the point mass at zero contributes g(0) (1 - 1/c) on top.
    """
    kernel = _kernel_callable(g)
    c = float(c)
    if not math.isfinite(c) or c <= 0.0:
        raise ValueError(f"aspect ratio c must be finite and positive, got {c!r}")
    root = math.sqrt(c)

    def integrand(zeta: float) -> float:
        x = 1.0 + c - 2.0 * root * math.cos(zeta)
        s = math.sin(zeta)
        if x <= 0.0:
            return 0.0
        return (2.0 / math.pi) * float(kernel(x)) * s * s / x

    value, _ = integrate.quad(integrand, 0.0, math.pi, epsabs=epsabs, epsrel=epsrel, limit=200)
    if c > 1.0:
        value += float(kernel(0.0)) * (1.0 - 1.0 / c)
    return value


def mp_moment_numeric(k, c) -> float:
    """k-th Marchenko-Pastur moment by quadrature, for k in 1..8."""
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise ValueError(f"moment order must be an integer, got {k!r}")
    k = int(k)
    if k < 1 or k > 8:
        raise ValueError(f"moment order must be in 1..8, got {k}")
    return mean_correction_numeric(lambda x: x**k, c)
