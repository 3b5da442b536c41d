"""Entrance-law densities of the excursions away from the running extremes.

For a Levy process X write q_t for the entrance density of an excursion of
the supremum-reflected process (the drawdown, sup X - X) and q*_t for the
infimum-reflected one (X - inf X); by time reversal q*_t also governs the
pre-maximum piece of a path.  Both are sigma-finite: their total masses
n(t < zeta) and n*(t < zeta) are the excursion-lifetime tails, normalized
throughout by kappa(1, 0) = kappa*(1, 0) = 1 for the ladder exponents.

Closed forms are used where they exist (Brownian with drift, the symmetric
Cauchy via a one-dimensional quadrature, the alpha = 2 stable); the
spectrally one-sided stable entrance laws combine the unit-time process
density with a Mittag-Leffler integral representation.  Scaling in t reduces
every stable-type evaluation to unit time:

    q_t(y)  = t**(-rho - 1/alpha) q_1(y t**(-1/alpha)),
    q*_t(x) = t**(rho - 1 - 1/alpha) q*_1(x t**(-1/alpha)).
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln, rgamma

from . import _snstable
from .model import (
    BROWNIAN,
    CAUCHY,
    STABLE,
    ProcessModel,
    UnsupportedModelError,
    dual_model,
)

CATALAN = 0.9159655941772190


class Side(enum.Enum):
    """Which reflected process the entrance law describes."""

    SUPREMUM = "Supremum"
    INFIMUM = "Infimum"


@dataclasses.dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and truncation limits shared by the quadrature-backed laws.

    absolute_tolerance / relative_tolerance: accuracy targets for adaptive
    refinements.  tail_margin: exponent budget e**(-tail_margin) at which
    integrand tails are truncated.  series_cap: maximum number of power-series
    terms before an evaluation is flagged as non-convergent.
    """

    absolute_tolerance: float = 1e-10
    relative_tolerance: float = 1e-8
    max_depth: int = 12
    tail_margin: float = 45.0
    series_cap: int = 200

    def __post_init__(self):
        if self.absolute_tolerance <= 0.0 or self.relative_tolerance <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1 or self.series_cap < 8:
            raise ValueError("max_depth >= 1 and series_cap >= 8 required")
        if self.tail_margin < 10.0:
            raise ValueError("tail_margin below 10 loses the integrand tails")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclasses.dataclass(frozen=True)
class EntranceLaw:
    """An entrance law: a model, a side, and evaluation settings."""

    model: ProcessModel
    side: Side
    quadrature: QuadratureConfig = DEFAULT_QUADRATURE

    def __post_init__(self):
        if not isinstance(self.model, ProcessModel):
            raise TypeError("model must be a ProcessModel")
        if not isinstance(self.side, Side):
            raise TypeError("side must be a Side")


# ---------------------------------------------------------------------------
# symmetric Cauchy machinery
#
# q_1 = q*_1 has the closed quadrature form
#   q_1(x) = sin(pi/8 + (3/2) arctan x) / ((1+x**2)**(3/4) sqrt(2 pi))
#            - (1/(2 pi**(3/2))) I(x),
#   I(x) = int_0^inf y g(y) / ((1+y**2) (x y + 1)**(3/2)) dy,
# where g(y) = (1+y**2)**(-1/4) exp(J(y)/pi) is the reciprocal of the
# bivariate ladder exponent at (y, 1) and J(y) = int_0^y ln u/(1+u**2) du
# satisfies J(y) = J(1/y) and J(1) = -Catalan.

_J_PHI_LO = -45.0
_J_PHI_STEP = 0.005
_T2_THETA = 42.0
_T2_STEP = 0.025

_cauchy_cache = {}


def _cauchy_j_spline():
    spline = _cauchy_cache.get("J")
    if spline is None:
        phi = np.arange(_J_PHI_LO, 0.0 + 0.5 * _J_PHI_STEP, _J_PHI_STEP)
        e1 = np.exp(phi)
        e2 = e1 * e1
        f = phi * e1 / (1.0 + e2)
        fp = e1 * ((1.0 + phi) * (1.0 + e2) - 2.0 * phi * e2) / (1.0 + e2) ** 2
        J = cumulative_trapezoid(f, dx=_J_PHI_STEP, initial=0.0)
        J -= (_J_PHI_STEP**2 / 12.0) * (fp - fp[0])  # endpoint correction
        J += e1[0] * (phi[0] - 1.0)  # contribution of (0, e**phi_lo]
        spline = PchipInterpolator(phi, J, extrapolate=False)
        _cauchy_cache["J"] = spline
    return spline


def _cauchy_j(y):
    """J(y) for y > 0 arrays, via J(y) = J(1/y) and a left-tail series."""
    spline = _cauchy_j_spline()
    yy = np.minimum(y, 1.0 / y)
    out = np.empty(yy.shape)
    tiny = yy < math.exp(_J_PHI_LO)
    if tiny.any():
        v = yy[tiny]
        with np.errstate(divide="ignore"):
            out[tiny] = np.where(v == 0.0, 0.0, v * (np.log(np.maximum(v, 1e-320)) - 1.0))
    rest = ~tiny
    out[rest] = spline(np.log(yy[rest]))
    return out


def cauchy_inner_factor(y):
    """Reciprocal ladder-exponent factor g(y) for the symmetric Cauchy law.

    g(y) = (1+y**2)**(-1/4) exp(J(y)/pi); g(0) = 1, g(1) =
    2**(-1/4) exp(-Catalan/pi).  Accepts scalars or arrays, y >= 0.
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    yf = np.atleast_1d(y).astype(float)
    if (yf < 0.0).any():
        raise ValueError("argument must be nonnegative")
    out = np.ones(yf.shape)
    pos = yf > 0.0
    out[pos] = (1.0 + yf[pos] ** 2) ** -0.25 * np.exp(_cauchy_j(yf[pos]) / math.pi)
    return float(out[0]) if scalar else out


def _cauchy_t2_nodes():
    nodes = _cauchy_cache.get("T2")
    if nodes is None:
        theta = np.arange(-_T2_THETA, _T2_THETA + 0.5 * _T2_STEP, _T2_STEP)
        y = np.exp(theta)
        a = y * y * cauchy_inner_factor(y) / (1.0 + y * y) * _T2_STEP
        a[0] *= 0.5
        a[-1] *= 0.5
        nodes = (y, a)
        _cauchy_cache["T2"] = nodes
    return nodes


def _cauchy_q1_direct(x):
    """Unit-time Cauchy entrance density, vectorized, x >= 0."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y, a = _cauchy_t2_nodes()
    lead = np.sin(math.pi / 8.0 + 1.5 * np.arctan(x)) / (
        (1.0 + x * x) ** 0.75 * math.sqrt(2.0 * math.pi)
    )
    out = np.empty(x.shape)
    coef = 1.0 / (2.0 * math.pi**1.5)
    for lo in range(0, x.size, 2048):
        xs = x[lo : lo + 2048]
        mat = (xs[:, None] * y[None, :] + 1.0) ** -1.5
        out[lo : lo + 2048] = mat @ a
    return np.maximum(lead - coef * out, 0.0)


class _CauchyTable:
    """Log-log interpolant of q_1 with matched boundary asymptotes."""

    def __init__(self):
        x = np.exp(np.linspace(math.log(1e-7), math.log(1e7), 2801))
        q = _cauchy_q1_direct(x)
        self._spline = PchipInterpolator(np.log(x), np.log(q), extrapolate=False)
        self._lo, self._hi = x[0], x[-1]
        self._left = q[0] / math.sqrt(x[0])  # q ~ A sqrt(x) near 0
        self._right = q[-1] * x[-1] ** 2  # q ~ B / x**2 at infinity

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape)
        mid = (x >= self._lo) & (x <= self._hi)
        out[mid] = np.exp(self._spline(np.log(x[mid])))
        small = (x > 0.0) & (x < self._lo)
        out[small] = self._left * np.sqrt(x[small])
        big = x > self._hi
        out[big] = self._right / (x[big] * x[big])
        return out


def _cauchy_q1(x):
    table = _cauchy_cache.get("table")
    if table is None:
        table = _CauchyTable()
        _cauchy_cache["table"] = table
    return table(x)


# ---------------------------------------------------------------------------
# spectrally one-sided stable machinery
#
# For the spectrally negative stable process of index alpha (rho = 1/alpha)
# the infimum-side entrance law is q*_t(x) = x p_t(x) / t, while the
# supremum side (the drawdown) has the Mittag-Leffler representation
#   q_1(y) = (sin(pi rho)/pi) y**(alpha-1)
#            int_0^inf e**(-r) r**rho E_{alpha,alpha}(-r y**alpha) dr,
# obtained by inverting 1/kappa*(theta, beta) with
# kappa*(theta, beta) = (theta - beta**alpha)/(theta**(1/alpha) - beta).

_ML_SERIES_LIMIT = 34.0
_ml_cache = {}
_sn_cache = {}


def _ml_coefficients(alpha, cap=220):
    key = (float(alpha), cap)
    hit = _ml_cache.get(key)
    if hit is None:
        k = np.arange(cap, dtype=float)
        with np.errstate(over="ignore"):
            hit = np.exp(-gammaln(alpha * k + alpha))
        _ml_cache[key] = hit
    return hit


def _ml_series(alpha, z):
    coef = _ml_coefficients(alpha)
    w = -z
    acc = np.full(w.shape, coef[-1])
    with np.errstate(over="ignore", invalid="ignore"):
        for c in coef[-2::-1]:
            acc = acc * w + c
    return acc


def _ml_series_log_max(alpha, z):
    # log of the largest series term, the float64 cancellation ceiling
    k = np.arange(1, 80, dtype=float)
    logc = -gammaln(alpha * k + alpha)
    with np.errstate(divide="ignore"):
        logz = np.where(z > 0.0, np.log(np.maximum(z, 1e-320)), -np.inf)
    return (logc[:, None] + k[:, None] * logz[None, :]).max(axis=0)


def _ml_asymptotic(alpha, z):
    # exact exponential branch pair plus the optimally truncated algebraic tail
    root = z ** (1.0 / alpha)
    osc = (
        (2.0 / alpha)
        * z ** ((1.0 - alpha) / alpha)
        * np.exp(root * math.cos(math.pi / alpha))
        * np.cos(math.pi * (1.0 - alpha) / alpha + root * math.sin(math.pi / alpha))
    )
    alg = np.zeros(z.shape)
    prev = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in range(2, 26):
        rg = float(rgamma(alpha - alpha * k))  # 0 at the poles
        if rg == 0.0:
            continue
        term = (-1.0) ** (k + 1) * z ** (-float(k)) * rg
        mag = np.abs(term)
        active &= mag <= prev  # divergent tail: stop at the smallest term
        alg[active] += term[active]
        prev = np.where(active, mag, prev)
    return osc, alg


def mittag_leffler_aa(alpha, z):
    """E_{alpha,alpha}(-z) for z >= 0, 1 < alpha <= 2.

    The power series is used wherever its float64 cancellation noise stays
    below a relative budget against an asymptotic size estimate; elsewhere
    the exact pair of exponential branches plus the optimally truncated
    algebraic reflection tail takes over.  At alpha = 2 both regimes reduce
    to sin(sqrt(z))/sqrt(z) identically.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    zf = np.atleast_1d(z).astype(float)
    if (zf < 0.0).any():
        raise ValueError("argument must be nonnegative")
    out = np.empty(zf.shape)
    low = zf <= 25.0  # series noise is negligible here for every index
    if low.any():
        out[low] = _ml_series(alpha, zf[low])
    high = ~low
    if high.any():
        zz = zf[high]
        osc, alg = _ml_asymptotic(alpha, zz)
        est = np.abs(osc) + np.abs(alg) + 1e-300
        # ~ eps * max term, the float64 series noise floor
        noise = np.exp(np.minimum(_ml_series_log_max(alpha, zz) - 36.0, 700.0))
        pick = noise < 1e-7 * est
        vals = osc + alg
        if pick.any():
            vals[pick] = _ml_series(alpha, zz[pick])
        out[high] = vals
    return float(out[0]) if scalar else out


def _sn_q1_direct(alpha, y, step=0.01):
    """Supremum-side unit entrance density of the spectrally negative stable."""
    rho = 1.0 / alpha
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w = np.arange(-40.0, math.log(60.0), step)
    r = np.exp(w)
    base = np.exp(-r) * r ** (rho + 1.0) * step  # extra r from dr = r dw
    out = np.empty(y.shape)
    front = math.sin(math.pi * rho) / math.pi
    for lo in range(0, y.size, 256):
        ys = y[lo : lo + 256]
        arg = r[None, :] * ys[:, None] ** alpha
        ml = mittag_leffler_aa(alpha, arg.ravel()).reshape(arg.shape)
        out[lo : lo + 256] = front * ys ** (alpha - 1.0) * (ml @ base)
    return np.maximum(out, 0.0)


class _SnQ1Table:
    """Per-index log-log interpolant of the drawdown-side stable q_1."""

    def __init__(self, alpha):
        self.alpha = alpha
        y = np.exp(np.linspace(math.log(1e-6), math.log(1e6), 2000))
        q = _sn_q1_direct(alpha, y)
        self._spline = PchipInterpolator(np.log(y), np.log(q), extrapolate=False)
        self._lo, self._hi = y[0], y[-1]
        self._left = q[0] / y[0] ** (alpha - 1.0)  # q ~ A y**(alpha-1) near 0
        self._right = q[-1] * y[-1] ** 2  # q ~ B / y**2 at infinity

    def __call__(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros(y.shape)
        mid = (y >= self._lo) & (y <= self._hi)
        out[mid] = np.exp(self._spline(np.log(y[mid])))
        small = (y > 0.0) & (y < self._lo)
        out[small] = self._left * y[small] ** (self.alpha - 1.0)
        big = y > self._hi
        out[big] = self._right / (y[big] * y[big])
        return out


def _sn_q1(alpha, y):
    table = _sn_cache.get(float(alpha))
    if table is None:
        table = _SnQ1Table(float(alpha))
        _sn_cache[float(alpha)] = table
    return table(y)


# ---------------------------------------------------------------------------
# Brownian closed forms


def _bm_entrance_params(drift, side):
    # side INFIMUM: coefficient sqrt(c**2+2) - c with mean drift +c
    # side SUPREMUM: coefficient sqrt(c**2+2) + c with mean drift -c
    root = math.sqrt(drift * drift + 2.0)
    if side is Side.INFIMUM:
        return root - drift, drift
    return root + drift, -drift


def _bm_entrance_density(drift, side, t, x):
    coef, mu = _bm_entrance_params(drift, side)
    return (
        coef
        * x
        * (2.0 * math.pi * t**3) ** -0.5
        * np.exp(-((x - mu * t) ** 2) / (2.0 * t))
    )


def _bm_lifetime_tail(drift, side, t):
    from scipy.stats import norm

    coef, mu = _bm_entrance_params(drift, side)
    return coef * (
        math.exp(-mu * mu * t / 2.0) / math.sqrt(2.0 * math.pi * t)
        + mu * norm.cdf(mu * math.sqrt(t))
    )


# ---------------------------------------------------------------------------
# public dispatch


def _stable_unit_entrance(model, side, z):
    """q_1 (side SUPREMUM) or q*_1 (side INFIMUM) at unit time, stable only."""
    alpha = model.alpha
    if model.family == CAUCHY:
        return _cauchy_q1(z)
    if alpha == 2.0:
        return z * (4.0 * math.pi) ** -0.5 * np.exp(-z * z / 4.0)
    if model.spectral == "negative":
        if side is Side.INFIMUM:
            return z * _snstable.p1_table(alpha)(z)
        return _sn_q1(alpha, z)
    if model.spectral == "positive":
        return _stable_unit_entrance(
            dual_model(model),
            Side.INFIMUM if side is Side.SUPREMUM else Side.SUPREMUM,
            z,
        )
    raise UnsupportedModelError(
        "entrance density requires a symmetric, spectrally one-sided, or alpha=2 stable law"
    )


def entrance_density(law, t, x):
    """Entrance density q_t (side SUPREMUM) or q*_t (side INFIMUM) at x >= 0.

    Parameters
    ----------
    law : EntranceLaw
    t : positive time
    x : nonnegative scalar or array of positions

    Returns the density values, zero at x = 0 (all supported laws enter
    continuously from the boundary point).
    """
    if not isinstance(law, EntranceLaw):
        raise TypeError("law must be an EntranceLaw")
    t = float(t)
    if not t > 0.0:
        raise ValueError("time must be positive")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xf = np.atleast_1d(x).astype(float)
    if (xf < 0.0).any():
        raise ValueError("position must be nonnegative")
    model = law.model
    if model.family == BROWNIAN:
        out = _bm_entrance_density(model.drift, law.side, t, xf)
    elif model.family in (CAUCHY, STABLE):
        alpha = model.alpha if model.family == STABLE else 1.0
        rho = model.rho if model.family == STABLE else 0.5
        scale = t ** (-1.0 / alpha)
        if law.side is Side.SUPREMUM:
            power = t ** (-rho - 1.0 / alpha)
        else:
            power = t ** (rho - 1.0 - 1.0 / alpha)
        out = power * _stable_unit_entrance(model, law.side, scale * xf)
    else:
        raise UnsupportedModelError(
            "no entrance density evaluator for family %r" % model.family
        )
    out = np.where(xf == 0.0, 0.0, out)
    return float(out[0]) if scalar else out


def lifetime_tail(law, t):
    """Excursion lifetime tail n(t < zeta) (SUPREMUM) or n*(t < zeta) (INFIMUM).

    Closed forms: Brownian with drift, and t**(-rho)/Gamma(1-rho) resp.
    t**(rho-1)/Gamma(rho) for the stable family.
    """
    if not isinstance(law, EntranceLaw):
        raise TypeError("law must be an EntranceLaw")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    tf = np.atleast_1d(t).astype(float)
    if (tf <= 0.0).any():
        raise ValueError("time must be positive")
    model = law.model
    if model.family == BROWNIAN:
        out = np.array([_bm_lifetime_tail(model.drift, law.side, v) for v in tf])
    elif model.family in (CAUCHY, STABLE):
        rho = model.rho if model.family == STABLE else 0.5
        if law.side is Side.SUPREMUM:
            out = tf ** (-rho) / math.gamma(1.0 - rho)
        else:
            out = tf ** (rho - 1.0) / math.gamma(rho)
    else:
        raise UnsupportedModelError(
            "no lifetime tail evaluator for family %r" % model.family
        )
    return float(out[0]) if scalar else out


def stable_unit_density(model, x):
    """Unit-time marginal density p_1 of a supported stable-type model.

    Symmetric Cauchy and alpha = 2 in closed form; spectrally one-sided
    indices via the hybrid series/contour evaluator.
    """
    if not isinstance(model, ProcessModel):
        raise TypeError("model must be a ProcessModel")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xf = np.atleast_1d(x).astype(float)
    if model.family == CAUCHY:
        out = 1.0 / (math.pi * (1.0 + xf * xf))
    elif model.family == STABLE and model.alpha == 2.0:
        out = np.exp(-xf * xf / 4.0) / (2.0 * math.sqrt(math.pi))
    elif model.family == STABLE and model.spectral == "negative":
        out = np.asarray(_snstable.p1(model.alpha, xf))
    elif model.family == STABLE and model.spectral == "positive":
        out = np.asarray(_snstable.p1(model.alpha, -xf))
    else:
        raise UnsupportedModelError(
            "no unit density for this model; supported are the symmetric Cauchy, "
            "alpha = 2, and spectrally one-sided stable laws"
        )
    return float(out[0]) if scalar else out
