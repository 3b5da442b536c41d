"""Joint law of (g_t, sup, drawdown) built from the two entrance laws.

For a Levy process X with supremum X-bar and last time g_t at which the
supremum over [0, t] is attained, the joint law factorizes over the split
at g_t:

    P(g_t in ds, X-bar_t in dx, (X-bar - X)_t in dy)
        = q*_s(x) q_{t-s}(y) ds dx dy   on (0,t) x (0,inf)^2,

with q* the entrance law of the excursion measure above the infimum
(carrying the supremum coordinate) and q the one below the supremum
(carrying the drawdown).  Depending on which half-lines 0 is regular for,
the law can in addition charge the two degenerate faces {g=0, sup=0} and
{g=t, drawdown=0}; those atoms are returned by `joint_atoms`.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammainc, gammaln
from scipy.stats import poisson

from .entrance import (
    DEFAULT_QUADRATURE,
    EntranceLaw,
    QuadratureConfig,
    Side,
    entrance_density,
    lifetime_tail,
    stable_unit_density,
)
from .model import (
    BROWNIAN,
    CAUCHY,
    CPP,
    STABLE,
    ProcessModel,
    Regularity,
    UnsupportedModelError,
)

_CONTINUOUS = (BROWNIAN, CAUCHY, STABLE)


def _require_model(model):
    if not isinstance(model, ProcessModel):
        raise TypeError("model must be a ProcessModel")


def _require_time(t):
    t = float(t)
    if t <= 0.0:
        raise ValueError("time must be positive")
    return t


# ---------------------------------------------------------------------------
# absolutely continuous part


def joint_density(model, t, s, x, y):
    """Density q*_s(x) q_{t-s}(y) of (g_t, sup, drawdown) at (s, x, y).

    Arguments broadcast against each other; points outside
    (0,t) x (0,inf)^2 get density 0.
    """
    _require_model(model)
    t = _require_time(t)
    if model.family not in _CONTINUOUS:
        raise UnsupportedModelError(
            "joint density needs entrance-law evaluators; see joint_atoms "
            "for the degenerate components of compound Poisson models"
        )
    s, x, y = np.broadcast_arrays(
        np.asarray(s, dtype=float), np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    )
    scalar = s.ndim == 0
    s = np.atleast_1d(s).astype(float)
    x = np.atleast_1d(x).astype(float)
    y = np.atleast_1d(y).astype(float)
    out = np.zeros(s.shape)
    ok = (s > 0.0) & (s < t) & (x > 0.0) & (y > 0.0)
    if ok.any():
        inf_law = EntranceLaw(model, Side.INFIMUM)
        sup_law = EntranceLaw(model, Side.SUPREMUM)
        si, xi, yi = s[ok], x[ok], y[ok]
        vals = np.empty(si.shape)
        for j in range(si.size):
            vals[j] = entrance_density(inf_law, si[j], xi[j]) * entrance_density(
                sup_law, t - si[j], yi[j]
            )
        out[ok] = vals
    return float(out[0]) if scalar else out


def gt_density(model, t, s):
    """Density of g_t: n*(s < zeta) n(t-s < zeta) on (0, t).

    For strictly stable models this is the generalized arcsine law
    s**(rho-1) (t-s)**(-rho) / (Gamma(rho) Gamma(1-rho)).
    """
    _require_model(model)
    t = _require_time(t)
    s = np.asarray(s, dtype=float)
    scalar = s.ndim == 0
    sf = np.atleast_1d(s).astype(float)
    out = np.zeros(sf.shape)
    ok = (sf > 0.0) & (sf < t)
    if ok.any():
        inf_law = EntranceLaw(model, Side.INFIMUM)
        sup_law = EntranceLaw(model, Side.SUPREMUM)
        nstar = np.array([lifetime_tail(inf_law, float(v)) for v in sf[ok]])
        n = np.array([lifetime_tail(sup_law, float(t - v)) for v in sf[ok]])
        out[ok] = nstar * n
    return float(out[0]) if scalar else out


def stable_triple_factors(model, t, s, x, y):
    """Factorized joint density for strictly stable models.

    Returns (g_factor, sup_factor, drawdown_factor) whose product equals
    joint_density: the generalized arcsine density of g_t and the
    conditional densities of sup and drawdown given g_t = s, i.e. the
    entrance laws rescaled to probability densities,

        sup | g=s    ~  Gamma(rho)   s**(-1/alpha) q1*(x s**(-1/alpha))
        draw | g=s   ~  Gamma(1-rho) u**(-1/alpha) q1(y u**(-1/alpha)),

    with u = t-s.  Inputs s, x, y broadcast.
    """
    _require_model(model)
    t = _require_time(t)
    if model.family not in (CAUCHY, STABLE):
        raise UnsupportedModelError("triple factorization requires a stable model")
    rho = model.rho
    s, x, y = np.broadcast_arrays(
        np.asarray(s, dtype=float), np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    )
    scalar = s.ndim == 0
    s = np.atleast_1d(s).astype(float)
    x = np.atleast_1d(x).astype(float)
    y = np.atleast_1d(y).astype(float)
    if ((s <= 0.0) | (s >= t)).any():
        raise ValueError("s must lie strictly inside (0, t)")
    u = t - s
    g = (
        s ** (rho - 1.0)
        * u ** (-rho)
        / (math.gamma(rho) * math.gamma(1.0 - rho))
    )
    inf_law = EntranceLaw(model, Side.INFIMUM)
    sup_law = EntranceLaw(model, Side.SUPREMUM)
    fsup = np.empty(s.shape)
    fdraw = np.empty(s.shape)
    for j in range(s.size):
        # entrance density / its mass: conditional density given g_t = s
        fsup[j] = (
            entrance_density(inf_law, float(s[j]), float(x[j]))
            * math.gamma(rho)
            * s[j] ** (1.0 - rho)
        )
        fdraw[j] = (
            entrance_density(sup_law, float(u[j]), float(y[j]))
            * math.gamma(1.0 - rho)
            * u[j] ** rho
        )
    if scalar:
        return float(g[0]), float(fsup[0]), float(fdraw[0])
    return g, fsup, fdraw


# ---------------------------------------------------------------------------
# atoms of the degenerate faces (compound Poisson with drift)


@dataclasses.dataclass(frozen=True)
class JointAtom:
    """An atom of the joint law on a degenerate face.

    time: location of g_t (0.0 or t).  degenerate: which coordinate is
    pinned to 0, "supremum" (path never rises above 0) or "drawdown"
    (supremum still being attained at t).  mass: probability carried.
    """

    time: float
    degenerate: str
    mass: float


def cpp_no_passage_probability(rate, jump_scale, drift_magnitude, t):
    """P(no passage above 0 up to t) for positive Exp(scale) jumps, drift -|c|.

    Ballot-type identity: the probability equals E[(1 - S_t/(|c| t))^+]
    with S_t the accumulated jumps; conditioning on the Poisson count gives
    a gamma-tail series.
    """
    rate = float(rate)
    scale = float(jump_scale)
    c = float(drift_magnitude)
    t = float(t)
    if min(rate, scale, c, t) <= 0.0:
        raise ValueError("rate, jump_scale, drift_magnitude and t must be positive")
    z = c * t / scale
    mean = rate * t
    kmax = int(mean + 40.0 * math.sqrt(mean) + 40.0)
    k = np.arange(0, kmax + 1, dtype=float)
    vals = np.empty(k.shape)
    vals[0] = 1.0
    kk = k[1:]
    vals[1:] = gammainc(kk, z) - (kk * scale / (c * t)) * gammainc(kk + 1.0, z)
    weights = poisson.pmf(np.arange(0, kmax + 1), mean)
    return float(np.clip(vals, 0.0, 1.0) @ weights)


def joint_atoms(model, t):
    """Atoms of the joint law of (g_t, sup, drawdown) on its degenerate faces.

    Type 1 models (both half-lines regular) have none.  Type 3 (upward
    jumps, downward drift) charges {g=0, sup=0}: the path stays below 0 up
    to t.  Type 2 (downward jumps, upward drift) charges {g=t, drawdown=0}:
    the supremum is still being attained at t, which by time reversal has
    the no-passage probability of the dual process.
    """
    _require_model(model)
    t = _require_time(t)
    if model.regularity == Regularity.TYPE1:
        return []
    if model.family != CPP:
        raise UnsupportedModelError("non-CPP models are expected to be type 1")
    if model.regularity == Regularity.TYPE3:
        mass = cpp_no_passage_probability(
            model.rate, model.jump_scale, abs(model.drift), t
        )
        return [JointAtom(time=0.0, degenerate="supremum", mass=mass)]
    mass = cpp_no_passage_probability(model.rate, model.jump_scale, model.drift, t)
    return [JointAtom(time=t, degenerate="drawdown", mass=mass)]


# ---------------------------------------------------------------------------
# marginals and transforms


def _kernel_half_nodes(model, side, t, order=200):
    """Nodes/weights for int_{t/2}^t n(t-s<zeta) (...) ds with the
    singular kernel absorbed: substitute w = (t-s)**(1-rho_side)."""
    rho = model.rho if side is Side.SUPREMUM else 1.0 - model.rho
    if model.family == BROWNIAN:
        rho = 0.5
    p = 1.0 / (1.0 - rho)
    wmax = (t / 2.0) ** (1.0 - rho)
    w, ww = _sin_sq(wmax, order)
    s = t - w**p
    law = EntranceLaw(model, side)
    if model.family in (CAUCHY, STABLE):
        kern = np.full(w.shape, 1.0 / (math.gamma(1.0 - rho) * (1.0 - rho)))
    else:
        # kernel not an exact power: n(u) * |ds/dw|, finite at w -> 0
        u = w**p
        tails = np.array([lifetime_tail(law, float(v)) for v in u])
        with np.errstate(invalid="ignore"):
            kern = tails * p * w ** (p - 1.0)
        kern[w == 0.0] = 0.0
    return s, kern * ww, law


def _sin_sq(limit, order):
    xg, wg = leggauss(order)
    theta = 0.5 * (xg + 1.0)
    vals = limit * np.sin(theta * math.pi / 2.0) ** 2
    jac = limit * (math.pi / 2.0) * np.sin(theta * math.pi)
    return vals, jac * 0.5 * wg


def _log_gl(lo, hi, panels=16, order=32):
    edges = np.log(np.geomspace(lo, hi, panels + 1))
    xg, wg = leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        ln = mid + half * xg
        nodes.append(np.exp(ln))
        weights.append(np.exp(ln) * half * wg)
    return np.concatenate(nodes), np.concatenate(weights)


def sup_marginal_density(model, t, x):
    """Density of the running supremum X-bar_t at x > 0.

    Integrates n(t-s < zeta) q*_s(x) over s in (0,t): a logarithmic grid on
    the lower half resolves the entrance-law bump at any scale, and on the
    upper half the substitution w = (t-s)**(1-rho) absorbs the kernel
    singularity at s = t.
    """
    _require_model(model)
    t = _require_time(t)
    if model.family not in _CONTINUOUS:
        raise UnsupportedModelError("supremum marginal needs entrance-law evaluators")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xf = np.atleast_1d(x).astype(float)
    if (xf <= 0.0).any():
        raise ValueError("levels must be positive")
    inf_law = EntranceLaw(model, Side.INFIMUM)
    sup_law = EntranceLaw(model, Side.SUPREMUM)
    s_lo, w_lo = _log_gl(1e-12 * t, t / 2.0)
    tails_lo = np.array([lifetime_tail(sup_law, float(t - v)) for v in s_lo])
    s_hi, w_hi, _ = _kernel_half_nodes(model, Side.SUPREMUM, t)
    out = np.empty(xf.shape)
    for i, xi in enumerate(xf):
        q_lo = np.array([entrance_density(inf_law, float(v), float(xi)) for v in s_lo])
        q_hi = np.array([entrance_density(inf_law, float(v), float(xi)) for v in s_hi])
        out[i] = float(q_lo @ (tails_lo * w_lo)) + float(q_hi @ w_hi)
    return float(out[0]) if scalar else out


def sup_and_terminal_density(model, t, xbar, x):
    """Joint density of (X-bar_t, X_t) at (xbar, x), xbar >= max(x, 0).

    Obtained from (g, sup, drawdown) by the volume-preserving map
    y = xbar - x: the density is int_0^t q*_s(xbar) q_{t-s}(xbar - x) ds.
    """
    _require_model(model)
    t = _require_time(t)
    xbar = float(xbar)
    x = float(x)
    if xbar <= 0.0 or xbar <= x:
        return 0.0
    if model.family not in _CONTINUOUS:
        raise UnsupportedModelError("needs entrance-law evaluators")
    inf_law = EntranceLaw(model, Side.INFIMUM)
    sup_law = EntranceLaw(model, Side.SUPREMUM)
    y = xbar - x
    # boundary layers live at s ~ xbar**2 and t-s ~ y**2 (arbitrarily small
    # near the support edges), so each half gets a logarithmic grid
    lo = 1e-14 * t
    s_a, w_a = _log_gl(lo, t / 2.0)
    u_b, w_b = _log_gl(lo, t / 2.0)
    total = 0.0
    for sj, wj in zip(s_a, w_a):
        total += wj * entrance_density(inf_law, float(sj), xbar) * entrance_density(
            sup_law, float(t - sj), y
        )
    for uj, wj in zip(u_b, w_b):
        total += wj * entrance_density(inf_law, float(t - uj), xbar) * entrance_density(
            sup_law, float(uj), y
        )
    return total


def sup_all_time_density(model, x, method="integral"):
    """Density of the all-time supremum for a negative-mean Brownian model.

    method "integral" evaluates a int_0^inf q*_s(x) ds with a the killing
    rate of the excursion measure; "closed" returns 2|c| e**(-2|c|x).
    """
    _require_model(model)
    if model.family != BROWNIAN or model.drift >= 0.0:
        raise UnsupportedModelError(
            "all-time supremum law implemented for Brownian motion with "
            "negative drift"
        )
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xf = np.atleast_1d(x).astype(float)
    c = abs(model.drift)
    if method == "closed":
        out = 2.0 * c * np.exp(-2.0 * c * xf)
        return float(out[0]) if scalar else out
    if method != "integral":
        raise ValueError("method must be 'integral' or 'closed'")
    inf_law = EntranceLaw(model, Side.INFIMUM)
    hi = 90.0 / (c * c) + 20.0 * float(xf.max()) / c + 10.0
    s, sw = _log_gl(1e-12, hi, panels=18)
    out = np.empty(xf.shape)
    for i, xi in enumerate(xf):
        dens = np.array([entrance_density(inf_law, float(v), float(xi)) for v in s])
        out[i] = model.killing_rate * float(dens @ sw)
    return float(out[0]) if scalar else out


def sup_marginal_cdf(model, t, points=1400):
    """Distribution function of X-bar_t on an adaptive grid.

    Returns (grid, cdf values) with the near-zero mass x**(alpha rho)
    matched by a power stub and the far tail by an endpoint-matched
    power/exponential correction, then normalized.  Interpolate with
    np.interp (left=0, right=1).
    """
    _require_model(model)
    t = _require_time(t)
    if model.family == BROWNIAN:
        hi = (abs(model.drift) + model.drift) * t / 2.0 + 9.0 * math.sqrt(t) + 1.0
        heavy_tail = False
    elif model.family == CAUCHY:
        hi = 2e3 * t
        heavy_tail = True
    elif model.family == STABLE:
        scale = t ** (1.0 / model.alpha)
        if model.spectral == "negative" or model.alpha == 2.0:
            hi = 30.0 * scale  # no upward jumps: light right tail
            heavy_tail = False
        else:
            hi = 2e3 * scale
            heavy_tail = True
    else:
        raise UnsupportedModelError("supremum CDF needs entrance-law evaluators")
    lo = 1e-8 * math.sqrt(hi)
    grid = np.geomspace(lo, hi, points)
    dens = sup_marginal_density(model, t, grid)
    inc = np.zeros(points)
    inc[1:] = 0.5 * (dens[1:] + dens[:-1]) * np.diff(grid)
    # stub: density ~ C x**(alpha rho - 1) near 0 integrates to its local value
    arho = 1.0 if model.family == BROWNIAN else model.alpha * model.rho
    cdf = np.cumsum(inc) + dens[0] * grid[0] / arho
    tail = dens[-1] * grid[-1] if heavy_tail else 0.0
    cdf /= cdf[-1] + tail
    return grid, np.clip(cdf, 0.0, 1.0)


# ---------------------------------------------------------------------------
# spectrally negative joint (g, sup) density, two independent routes


def sn_gt_sup_density(model, t, s, x, method="factor", config=DEFAULT_QUADRATURE):
    """Joint density of (g_t, X-bar_t) for a spectrally negative stable model.

    method "factor" multiplies the entrance law q*_s(x) = x p_s(x)/s by the
    lifetime tail n(t-s < zeta).  method "series" sums the power series in
    x s**(-1/alpha) directly; the two routes share no code beyond the
    process density and so cross-validate each other.  The series escalates
    to arbitrary-precision summation when float64 cancellation or the
    config series cap is hit.
    """
    _require_model(model)
    t = _require_time(t)
    if not isinstance(config, QuadratureConfig):
        raise TypeError("config must be a QuadratureConfig")
    if model.family != STABLE or model.spectral != "negative":
        raise UnsupportedModelError("needs a spectrally negative stable model")
    s = float(s)
    x = float(x)
    if not 0.0 < s < t:
        raise ValueError("s must lie in (0, t)")
    if x <= 0.0:
        return 0.0
    alpha = model.alpha
    rho = model.rho
    if method == "factor":
        ps = s ** (-1.0 / alpha) * stable_unit_density(model, x * s ** (-1.0 / alpha))
        return (
            x
            * ps
            / s
            * (t - s) ** (-rho)
            / math.gamma(1.0 - rho)
        )
    if method != "series":
        raise ValueError("method must be 'factor' or 'series'")
    front = 1.0 / (
        math.pi * math.gamma((alpha - 1.0) / alpha) * (t - s) ** (1.0 / alpha)
    )
    return front * _sn_series_sum(alpha, x * s ** (-1.0 / alpha), s, config)


def _sn_series_sum(alpha, z, s, config):
    """sum_n Gamma(1+n/alpha)/n! sin(pi n (alpha-1)/alpha) z**n / s.

    Float64 with a cancellation/truncation monitor, escalating to mpmath
    when the monitor trips.
    """
    cap = config.series_cap
    n = np.arange(1, cap + 1, dtype=float)
    logc = gammaln(1.0 + n / alpha) - gammaln(n + 1.0)
    sines = np.sin(math.pi * n * (alpha - 1.0) / alpha)
    with np.errstate(over="ignore", invalid="ignore"):
        logterm = logc + n * math.log(z)
        terms = np.exp(logterm) * sines
        total = float(terms.sum()) / s
        logmax = float(logterm.max())
    tail_small = np.all(
        np.abs(terms[-8:]) <= 1e-14 * max(abs(total * s), np.abs(terms).max() * 1e-30)
    )
    trusted = (
        np.isfinite(total)
        and total > 0.0
        and logmax - math.log(abs(total * s)) < 20.0
        and tail_small
    )
    if trusted:
        return total
    return _sn_series_mpmath(alpha, z, s)


def _sn_series_mpmath(alpha, z, s):
    """Arbitrary-precision summation, sized from the envelope profile.

    The working precision must cover the full cancellation gap between the
    largest term and the sum; the sum itself is at worst of the order of
    the saddle-point decay exp(-(alpha-1) (z/alpha)**(alpha/(alpha-1))), so
    that classical exponent bounds the gap a priori.
    """
    import mpmath as mp

    n = np.arange(1, 50_001, dtype=float)
    logenv = gammaln(1.0 + n / alpha) - gammaln(n + 1.0) + n * math.log(z)
    peak = int(logenv.argmax())
    logmax = float(logenv[peak])
    saddle = 0.0
    if z > 1.0:
        v = (z / alpha) ** (1.0 / (alpha - 1.0))
        saddle = (alpha - 1.0) * v * z / alpha
    dps = int((logmax + saddle) / math.log(10.0)) + 45
    below = np.nonzero(logenv[peak:] < logmax - dps * math.log(10.0) - 10.0)[0]
    if dps > 320 or below.size == 0:
        raise RuntimeError(
            "series route needs more than 320 digits here; use method='factor'"
        )
    ncut = peak + 1 + int(below[0]) + 1
    with mp.workdps(dps):
        a = mp.mpf(alpha)
        zz = mp.mpf(z)
        ratio = (a - 1) / a
        total = mp.mpf(0)
        for k in range(1, ncut + 1):
            total += (
                mp.gamma(1 + mp.mpf(k) / a)
                / mp.factorial(k)
                * mp.sinpi(k * ratio)
                * zz**k
            )
        return float(total / mp.mpf(s))


# ---------------------------------------------------------------------------
# total-mass quadratures (consistency checks, not efficient evaluators)


def _unit_entrance_mass(model, side, y_hi=None):
    """int q1 dz for the unit-time entrance law, with a matched power tail.

    The integral is truncated at y_hi and extended by B_eff / y_hi with
    B_eff = q1(y_hi) y_hi**2, the coefficient a pure z**-2 tail would need
    to pass through the endpoint; for superexponential sides B_eff itself
    vanishes, so the correction is self-calibrating.
    """
    law = EntranceLaw(model, side)
    if y_hi is None:
        y_hi = 4e4
    z, w = _log_gl(1e-9, y_hi, panels=20)
    dens = np.array([entrance_density(law, 1.0, float(v)) for v in z])
    mass = float(dens @ w)
    edge = entrance_density(law, 1.0, float(y_hi))
    return mass + edge * y_hi

def joint_mass_quadrature(model, t):
    """Total mass of the joint law by quadrature; should equal 1.

    Strictly stable models: the s-integral is a pure Beta factor by
    scaling, so the mass reduces to the two unit-time entrance masses, each
    integrated numerically.  Brownian models: full two-dimensional Fubini
    with per-s adapted spatial grids.
    """
    _require_model(model)
    t = _require_time(t)
    if model.family in (CAUCHY, STABLE):
        rho = model.rho
        mstar = _unit_entrance_mass(model, Side.INFIMUM)
        m = _unit_entrance_mass(model, Side.SUPREMUM)
        return mstar * m * math.gamma(rho) * math.gamma(1.0 - rho)
    if model.family != BROWNIAN:
        raise UnsupportedModelError("mass quadrature covers Brownian and stable models")
    c = model.drift
    inf_law = EntranceLaw(model, Side.INFIMUM)
    sup_law = EntranceLaw(model, Side.SUPREMUM)
    s, sw = _sin_sq(t, 220)
    xi, wgl = leggauss(220)

    def spatial_mass(law, u, mu):
        # q_u lives near max(mu u, 0) with width sqrt(u); factor x keeps a
        # polynomial tail, so pad generously
        hi = max(mu * u, 0.0) + 10.0 * math.sqrt(u) + 2.0 * abs(mu) * u
        nodes = 0.5 * hi * (xi + 1.0)
        vals = np.array([entrance_density(law, float(u), float(v)) for v in nodes])
        return 0.5 * hi * float(vals @ wgl)

    total = 0.0
    for sj, wj in zip(s, sw):
        mstar = spatial_mass(inf_law, float(sj), c)
        m = spatial_mass(sup_law, float(t - sj), -c)
        total += wj * mstar * m
    return total
