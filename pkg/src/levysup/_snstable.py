"""Unit-time marginal density of strictly stable laws with one-sided jumps.

Normalization: the spectrally negative stable process of index alpha in (1, 2]
has Laplace exponent E exp(lam X_t) = exp(t lam**alpha) for lam >= 0.  Its
unit-time density p1 is evaluated two independent ways:

* a convergent power series around the origin (entire function of z), kept on
  the range where float64 cancellation stays below a monitored budget;
* numeric inversion of exp(-psi) on a deformed Bromwich-type contour.  For
  z >= 0 the contour runs through the exact saddle point on the negative
  imaginary axis, which keeps the quadrature conditioned even where p1(z) is
  superexponentially small; for z < 0 a fixed rotated ray suffices because the
  left tail only decays algebraically.

The two paths overlap on an interior window and are cross-checked in the test
suite.  Spectrally positive densities follow by reflection, p1_pos(z) =
p1(-z).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

SERIES_BUDGET_LOG = 23.0  # max tolerated log(max term / |sum|), ~1e-6 noise
SADDLE_EXPONENT_CUTOFF = -600.0  # beyond this the right tail underflows to 0

_SERIES_CACHE = {}
_MEMO_CACHE = {}


def _series_coefficients(alpha, cap):
    """Coefficients c_n, n = 1..cap, of p1(z) = sum c_n z**(n-1)."""
    key = (float(alpha), int(cap))
    hit = _SERIES_CACHE.get(key)
    if hit is not None:
        return hit
    n = np.arange(1, cap + 1, dtype=float)
    sines = np.sin(np.pi * n * (alpha - 1.0) / alpha)
    logmag = gammaln(1.0 + n / alpha) - gammaln(n + 1.0)
    coeff = np.where(
        sines == 0.0,
        0.0,
        np.exp(logmag + np.log(np.abs(np.where(sines == 0.0, 1.0, sines)))),
    )
    coeff *= np.sign(sines) / np.pi
    logabs = np.where(coeff == 0.0, -np.inf, logmag + np.log(np.abs(np.where(sines == 0.0, 1.0, sines))) - math.log(math.pi))
    _SERIES_CACHE[key] = (coeff, logabs)
    return coeff, logabs


def p1_series(alpha, z, cap=200):
    """Power-series evaluation of p1 (vectorized Horner, cap terms)."""
    coeff, _ = _series_coefficients(alpha, cap)
    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, coeff[-1])
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(cap - 2, -1, -1):
            out = out * z + coeff[k]
    return out


def series_log_max_term(alpha, z, cap=200):
    """log of the largest |term| in the series at each z; cancellation probe."""
    _, logabs = _series_coefficients(alpha, cap)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    with np.errstate(divide="ignore"):
        logz = np.where(z == 0.0, -np.inf, np.log(np.abs(z)))
    n = np.arange(1, cap + 1, dtype=float)
    logterm = logabs[:, None] + (n - 1.0)[:, None] * logz[None, :]
    return logterm.max(axis=0)


def _series_log_cap_term(alpha, z, cap=200):
    """log |term| at the truncation index; large values mean unconverged."""
    _, logabs = _series_coefficients(alpha, cap)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    with np.errstate(divide="ignore"):
        logz = np.where(z == 0.0, -np.inf, np.log(np.abs(z)))
    tail = logabs[-6:]
    n = np.arange(cap - 5, cap + 1, dtype=float)
    logterm = tail[:, None] + (n - 1.0)[:, None] * logz[None, :]
    return logterm.max(axis=0)


def tail_constant(alpha):
    """Coefficient of the |z|**(-1-alpha) left-tail asymptote of p1."""
    return alpha * (alpha - 1.0) / math.gamma(2.0 - alpha)


def _saddle_exponent(alpha, z):
    # value of u**alpha - z*u at the saddle u = (z/alpha)**(1/(alpha-1))
    if z <= 0.0:
        return 0.0
    v = (z / alpha) ** (1.0 / (alpha - 1.0))
    return v**alpha - z * v


def _contour_right(alpha, z, step=0.02):
    """p1(z) for z >= 0 via the saddle-line contour.

    The vertical segment from 0 to the saddle -i*v is purely real in the
    exponent and multiplies -i, so only the horizontal half-line through the
    saddle contributes to the real part.
    """
    if z <= 0.0:
        v = 0.0
        saddle = 0.0
    else:
        v = (z / alpha) ** (1.0 / (alpha - 1.0))
        saddle = v**alpha - z * v
    if saddle < SADDLE_EXPONENT_CUTOFF:
        return 0.0
    cpa = -math.cos(math.pi * alpha / 2.0)  # > 0 for alpha in (1, 2)
    span = ((55.0 - saddle) / cpa) ** (1.0 / alpha) + v + 5.0
    h = min(step, 0.6 / max(z, 1.0))
    x = np.arange(0.0, span, h)
    lam = x - 1j * v
    expo = -1j * z * lam + lam**alpha * np.exp(1j * math.pi * alpha / 2.0)
    w = np.exp(expo)
    total = w.sum() - 0.5 * w[0]
    return float(total.real) * h / math.pi


def _contour_left(alpha, z, step=0.02):
    """p1(z) for z < 0 via a rotated ray exp(i*phi), log-spaced radially."""
    phi = min(math.pi / 3.0, 0.8 * math.pi * (1.5 / alpha - 0.5))
    direction = complex(math.cos(phi), math.sin(phi))
    c2 = -math.cos(alpha * (phi + math.pi / 2.0))
    if c2 <= 0.0:
        raise ValueError("contour angle invalid for this index")
    azr = abs(z) * math.sin(phi)
    rmax = max((60.0 / c2) ** (1.0 / alpha), 60.0 / azr, 2.0)
    w = np.arange(-40.0, math.log(rmax) + step, step)
    lam = np.exp(w) * direction
    expo = -1j * z * lam + lam**alpha * np.exp(1j * math.pi * alpha / 2.0)
    vals = np.exp(expo) * lam  # extra lam from d lambda = lam dw
    return float(vals.sum().real) * step / math.pi


def p1_contour(alpha, z):
    """Contour-integral evaluation of p1, vectorized over z."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty(z.shape)
    for i, zi in enumerate(z.ravel()):
        if zi >= 0.0:
            out.ravel()[i] = _contour_right(alpha, zi)
        else:
            out.ravel()[i] = _contour_left(alpha, zi)
    return out


def p1(alpha, z):
    """Unit-time density of the spectrally negative stable law.

    Hybrid evaluator: the power series is used where its cancellation
    monitor stays within budget, the contour integral elsewhere.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("index must lie in (1, 2)")
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    zf = np.atleast_1d(z).astype(float)
    out = p1_series(alpha, zf)
    logmax = series_log_max_term(alpha, zf)
    logcap = _series_log_cap_term(alpha, zf)
    with np.errstate(divide="ignore"):
        logout = np.where(out > 0.0, np.log(np.where(out > 0.0, out, 1.0)), -np.inf)
    bad = (
        (logmax - logout > SERIES_BUDGET_LOG)
        | (logcap - logout > -20.0)  # terms not yet negligible at the cap
        | ~np.isfinite(out)
        | (out <= 0.0)
        | (out > 10.0)
    )
    # a-priori envelopes: Chernoff saddle bound on the light side, the
    # regularly-varying tail on the heavy side; series noise that slips the
    # cancellation gap still violates these by orders of magnitude
    right = zf > 1.0
    if right.any():
        vs = (zf[right] / alpha) ** (1.0 / (alpha - 1.0))
        es = vs**alpha - zf[right] * vs
        bad[right] |= out[right] > 100.0 * np.exp(es)
    left = zf < -1.5
    if left.any():
        bad[left] |= out[left] > 20.0 * tail_constant(alpha) * np.abs(zf[left]) ** (
            -1.0 - alpha
        )
    # tiny |z| is always fine for the series even though logout may be -inf
    bad &= np.abs(zf) > 0.5
    if bad.any():
        out[bad] = p1_contour(alpha, zf[bad])
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


class _P1Table:
    """Log-log interpolation table for one index, split by sign of z."""

    def __init__(self, alpha):
        from scipy.interpolate import PchipInterpolator

        self.alpha = alpha
        # right side: z in (0, z_hi]; beyond z_hi the density underflows.
        # The known saddle exponent is divided out before interpolation so the
        # spline only carries the slowly varying prefactor.
        z_hi = alpha * ((-SADDLE_EXPONENT_CUTOFF) / (alpha - 1.0)) ** (
            (alpha - 1.0) / alpha
        )
        zr = np.exp(np.linspace(math.log(1e-6), math.log(z_hi), 1600))
        pr = p1(alpha, zr)
        keep = pr > 0.0
        zr, pr = zr[keep], pr[keep]
        self._right = PchipInterpolator(
            np.log(zr), np.log(pr) - self._saddle(zr), extrapolate=False
        )
        self._right_lo, self._right_hi = zr[0], zr[-1]
        # left side: |z| in (0, 1e4]; the algebraic slope is divided out, and
        # beyond the grid the matched tail asymptote takes over
        zl = np.exp(np.linspace(math.log(1e-6), math.log(1e4), 1600))
        pl = p1(alpha, -zl)
        self._left = PchipInterpolator(
            np.log(zl), np.log(pl) + (1.0 + alpha) * np.log(zl), extrapolate=False
        )
        self._left_lo, self._left_hi = zl[0], zl[-1]
        self._left_tail = pl[-1] * zl[-1] ** (1.0 + alpha)
        self.p_at_zero = float(p1_series(alpha, 0.0))
        self._slope0 = (
            float(p1_series(alpha, self._right_lo)) - self.p_at_zero
        ) / self._right_lo

    def _saddle(self, z):
        z = np.asarray(z, dtype=float)
        v = (z / self.alpha) ** (1.0 / (self.alpha - 1.0))
        return v**self.alpha - z * v

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        zf = np.atleast_1d(z).astype(float)
        out = np.zeros(zf.shape)
        near = np.abs(zf) <= self._right_lo
        out[near] = self.p_at_zero + self._slope0 * zf[near]
        pos = (zf > self._right_lo) & (zf <= self._right_hi)
        out[pos] = np.exp(self._right(np.log(zf[pos])) + self._saddle(zf[pos]))
        # z beyond right_hi stays 0 (underflow clamp)
        neg = (zf < -self._left_lo) & (zf >= -self._left_hi)
        out[neg] = np.exp(
            self._left(np.log(-zf[neg])) - (1.0 + self.alpha) * np.log(-zf[neg])
        )
        far = zf < -self._left_hi
        out[far] = self._left_tail * (-zf[far]) ** (-1.0 - self.alpha)
        return float(out[0]) if scalar else out


def p1_table(alpha):
    """Cached fast evaluator for p1 at one index (used on dense grids)."""
    key = float(alpha)
    tab = _MEMO_CACHE.get(key)
    if tab is None:
        tab = _P1Table(key)
        _MEMO_CACHE[key] = tab
    return tab
