"""Catalog of parametric Levy processes.

Each process is described by a ProcessModel: family, raw parameters,
regularity type of 0 for the two half-lines, the ladder-time drifts
d, d*, the killing rate a of the ascending ladder time, and the
positivity parameter rho where it makes sense.

Conventions fixed here and used everywhere else:
  * characteristic exponent psi with E e^{i lam X_t} = e^{-t psi(lam)},
  * the symmetric alpha-stable process has psi(lam) = |lam|^alpha,
  * local times are normalized so that kappa(1,0) = kappa*(1,0) = 1.

Families are canonicalized at classification: a spectrally negative
stable input becomes Stable(alpha, rho=1/alpha) with spectral="negative",
and Stable(1, 1/2) becomes SymmetricCauchy.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
from scipy import special


BROWNIAN = "BrownianWithDrift"
CAUCHY = "SymmetricCauchy"
STABLE = "Stable"
SN_STABLE = "SpectrallyNegativeStable"
CPP = "CompoundPoissonWithDrift"

_FAMILIES = (BROWNIAN, CAUCHY, STABLE, SN_STABLE, CPP)


class Regularity(enum.Enum):
    """Regularity trichotomy of 0 for the half-lines.

    TYPE1: 0 regular for both (0,inf) and (-inf,0); d = d* = 0.
    TYPE2: 0 regular for (0,inf) only; d > 0 (ladder time has drift).
    TYPE3: 0 regular for (-inf,0) only; d* > 0, and d* = 1/gamma.
    """

    TYPE1 = "Type1"
    TYPE2 = "Type2"
    TYPE3 = "Type3"


class UnsupportedModelError(ValueError):
    """Operation not implemented for this (family, parameter) combination."""


@dataclasses.dataclass(frozen=True)
class GammaEstimate:
    """Monte Carlo estimate of gamma = 1/(1 - E e^{-tau_0^+}).

    Stored on CPP models together with the sampling configuration so the
    construction is reproducible bit for bit.
    """

    value: float
    std_error: float
    sample_size: int
    seed: int
    horizon: float


@dataclasses.dataclass(frozen=True)
class ProcessModel:
    family: str
    regularity: Regularity
    ladder_drift: float          # d, drift of the ascending ladder time tau
    ladder_drift_star: float     # d*, drift of the descending ladder time tau*
    killing_rate: float          # a, killing rate of tau; > 0 iff X -> -inf
    drift: float = 0.0           # c for Brownian, linear drift for CPP
    alpha: float | None = None   # stability index
    rho: float | None = None     # P(X_1 >= 0) where defined
    spectral: str = "none"       # "none" | "negative" | "positive"
    rate: float | None = None    # CPP jump rate
    jump_scale: float | None = None  # CPP exponential jump mean
    jump_sign: int | None = None     # +1 positive jumps, -1 negative jumps
    gamma: GammaEstimate | None = None  # Type3 only


def brownian_with_drift(c: float = 0.0) -> ProcessModel:
    return classify_model(BROWNIAN, drift=c)


def symmetric_cauchy() -> ProcessModel:
    return classify_model(CAUCHY)


def stable(alpha: float, rho: float) -> ProcessModel:
    return classify_model(STABLE, alpha=alpha, rho=rho)


def spectrally_negative_stable(alpha: float) -> ProcessModel:
    return classify_model(SN_STABLE, alpha=alpha)


def compound_poisson_with_drift(rate: float, jump_scale: float, jump_sign: int,
                                drift: float, **kwargs) -> ProcessModel:
    return classify_model(CPP, rate=rate, jump_scale=jump_scale,
                          jump_sign=jump_sign, drift=drift, **kwargs)


def _bm_killing_rate(c: float) -> float:
    # a = kappa(0,0) for kappa(al,be) = (be + sqrt(c^2+2al) - c)/(sqrt(c^2+2) - c)
    if c >= 0.0:
        return 0.0
    return -2.0 * c / (math.sqrt(c * c + 2.0) - c)


def _snap(value: float, target: float, tol: float = 1e-12) -> float:
    return target if abs(value - target) <= tol else value


def classify_model(family: str, *, drift: float = 0.0,
                   alpha: float | None = None, rho: float | None = None,
                   rate: float | None = None, jump_scale: float | None = None,
                   jump_sign: int | None = None,
                   gamma_paths: int = 400_000, gamma_seed: int = 20210,
                   gamma_horizon: float = 40.0) -> ProcessModel:
    """Build a fully populated ProcessModel from family + raw parameters.

    Regularity and ladder drifts are declared per family from known
    criteria (never inferred from simulated paths); the only sampled
    quantity is gamma for compound Poisson models, estimated once at
    construction with the stored seed and sample size.
    """
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}")

    if family == BROWNIAN:
        c = float(drift)
        return ProcessModel(BROWNIAN, Regularity.TYPE1, 0.0, 0.0,
                            _bm_killing_rate(c), drift=c, alpha=2.0,
                            rho=float(special.ndtr(c)))

    if family == CAUCHY:
        return ProcessModel(CAUCHY, Regularity.TYPE1, 0.0, 0.0, 0.0,
                            alpha=1.0, rho=0.5)

    if family == SN_STABLE:
        if alpha is None or not 1.0 < alpha < 2.0:
            raise ValueError("SpectrallyNegativeStable requires alpha in (1,2)")
        return classify_model(STABLE, alpha=float(alpha), rho=1.0 / float(alpha))

    if family == STABLE:
        if alpha is None or rho is None:
            raise ValueError("Stable requires alpha and rho")
        alpha = float(alpha)
        rho = float(rho)
        if not 0.0 < alpha <= 2.0:
            raise ValueError("alpha must lie in (0,2]")
        if not 0.0 < rho < 1.0:
            raise ValueError("rho must lie in (0,1)")
        if alpha == 2.0 and abs(rho - 0.5) > 1e-12:
            raise ValueError("alpha=2 forces rho=1/2")
        if abs(alpha - 1.0) < 1e-12 and abs(rho - 0.5) > 1e-12:
            raise ValueError("alpha=1 is supported only with rho=1/2 "
                             "(strict stability)")
        spectral = "none"
        if 1.0 < alpha < 2.0:
            lo, hi = 1.0 - 1.0 / alpha, 1.0 / alpha
            if rho < lo - 1e-12 or rho > hi + 1e-12:
                raise ValueError(f"rho must lie in [{lo}, {hi}] for alpha={alpha}")
            rho = _snap(_snap(rho, hi), lo)
            if rho == hi:
                spectral = "negative"
            elif rho == lo:
                spectral = "positive"
        rho = _snap(rho, 0.5)
        if alpha == 1.0 and rho == 0.5:
            return classify_model(CAUCHY)
        return ProcessModel(STABLE, Regularity.TYPE1, 0.0, 0.0, 0.0,
                            alpha=alpha, rho=rho, spectral=spectral)

    # compound Poisson with drift
    if rate is None or jump_scale is None or jump_sign is None:
        raise ValueError("CPP requires rate, jump_scale and jump_sign")
    rate = float(rate)
    jump_scale = float(jump_scale)
    drift = float(drift)
    jump_sign = int(jump_sign)
    if rate <= 0.0 or jump_scale <= 0.0:
        raise ValueError("rate and jump_scale must be positive")
    if jump_sign not in (-1, 1):
        raise ValueError("jump_sign must be +1 or -1")
    if jump_sign * drift >= 0.0:
        raise ValueError("drift and jumps must have opposite signs "
                         "(same-sign configurations are monotone-like and "
                         "outside the catalog)")

    mean = drift + rate * jump_sign * jump_scale
    if jump_sign > 0:
        # positive jumps, negative drift: 0 regular for (-inf,0) only -> Type3
        gamma_est = _cpp_gamma_mc(rate, jump_scale, drift, gamma_paths,
                                  gamma_seed, gamma_horizon)
        a = _cpp_killing_rate(rate, jump_scale, drift) if mean < 0.0 else 0.0
        return ProcessModel(CPP, Regularity.TYPE3, 0.0, 1.0 / gamma_est.value,
                            a, drift=drift, rate=rate, jump_scale=jump_scale,
                            jump_sign=jump_sign, gamma=gamma_est)
    # negative jumps, positive drift: 0 regular for (0,inf) only -> Type2.
    # d = d* of the mirrored (Type3) process = 1/gamma(-X).
    gamma_est = _cpp_gamma_mc(rate, jump_scale, -drift, gamma_paths,
                              gamma_seed, gamma_horizon)
    a = _cpp_killing_rate_mirror(rate, jump_scale, drift) if mean < 0.0 else 0.0
    return ProcessModel(CPP, Regularity.TYPE2, 1.0 / gamma_est.value, 0.0,
                        a, drift=drift, rate=rate, jump_scale=jump_scale,
                        jump_sign=jump_sign, gamma=None)


def _cpp_gamma_mc(rate: float, jump_scale: float, drift: float,
                  n_paths: int, seed: int, horizon: float) -> GammaEstimate:
    """gamma = (1 - E e^{-tau_0^+})^{-1} for positive jumps, negative drift.

    The path can enter (0,inf) only at a jump epoch, so first passage is
    simulated event by event; paths still below 0 at the horizon contribute
    e^{-tau} <= e^{-horizon}, a bias far below the Monte Carlo error.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    x = np.zeros(n_paths)
    t = np.zeros(n_paths)
    weight = np.zeros(n_paths)
    active = np.arange(n_paths)
    while active.size:
        wait = rng.exponential(1.0 / rate, active.size)
        jump = rng.exponential(jump_scale, active.size)
        t[active] += wait
        x[active] += drift * wait + jump
        crossed = x[active] > 0.0
        idx = active[crossed]
        weight[idx] = np.exp(-t[idx])
        active = active[~crossed]
        active = active[t[active] <= horizon]
    mean = float(weight.mean())
    se = float(weight.std(ddof=1) / math.sqrt(n_paths))
    value = 1.0 / (1.0 - mean)
    # delta method: d(gamma)/d(mean) = gamma^2
    return GammaEstimate(value, value * value * se, n_paths, seed, horizon)


def _cpp_prob_nonneg(rate: float, jump_scale: float, drift: float,
                     t: np.ndarray) -> np.ndarray:
    """P(X_t >= 0) for positive Exp(jump_scale) jumps and drift < 0.

    Poisson-gamma series with a localized k-window around rate*t.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    z = -drift * t / jump_scale  # gamma threshold in shape units
    lam = rate * t
    for i, (li, zi) in enumerate(zip(lam, z)):
        k_lo = max(1, int(li - 10.0 * math.sqrt(li) - 30.0))
        k_hi = int(li + 10.0 * math.sqrt(li) + 60.0)
        k = np.arange(k_lo, k_hi + 1, dtype=float)
        log_pois = k * math.log(li) - li - special.gammaln(k + 1.0)
        out[i] = float(np.exp(log_pois) @ special.gammaincc(k, zi))
    return out


def _cpp_killing_rate(rate: float, jump_scale: float, drift: float) -> float:
    """a = exp(-int_0^inf (1-e^{-t}) t^{-1} P(X_t >= 0) dt) for EX_1 < 0.

    This is the normalized ladder exponent at (0,0); the integral converges
    because P(X_t >= 0) decays at the large-deviation rate I > 0.
    """
    s = jump_scale
    # Legendre transform: I = -min_theta [drift*theta + rate*(1/(1-theta*s)-1)]
    theta_star = (1.0 - math.sqrt(rate * s / -drift)) / s
    rate_i = -(drift * theta_star + rate * (1.0 / (1.0 - theta_star * s) - 1.0))
    t_hi = min(60.0 / rate_i, 1e6)
    theta = np.arange(-40.0, math.log(t_hi), 0.05)
    t = np.exp(theta)
    integrand = -np.expm1(-t) * _cpp_prob_nonneg(rate, jump_scale, drift, t)
    total = float(np.trapezoid(integrand, theta))
    # Bahadur-Rao tail beyond t_hi: P ~ e^{-I t}/(theta* sigma sqrt(2 pi t))
    sigma2 = 2.0 * rate * s * s / (1.0 - theta_star * s) ** 3
    z = rate_i * t_hi
    tail_t = math.sqrt(rate_i) * (2.0 * math.exp(-z) / math.sqrt(z)
                                  - 2.0 * math.sqrt(math.pi) * special.erfc(math.sqrt(z)))
    total += tail_t / (theta_star * math.sqrt(2.0 * math.pi * sigma2))
    return math.exp(-total)


def _cpp_killing_rate_mirror(rate: float, jump_scale: float,
                             drift: float) -> float:
    """Killing rate a for negative jumps, positive drift, EX_1 < 0.

    Here P(X_t >= 0) = P(Gamma(N_t) <= drift*t / scale), same windowed
    series with the lower regularized gamma and a k=0 term equal to 1.
    """
    def prob(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        z = drift * t / jump_scale
        lam = rate * t
        for i, (li, zi) in enumerate(zip(lam, z)):
            k_lo = max(0, int(li - 10.0 * math.sqrt(li) - 30.0))
            k_hi = int(li + 10.0 * math.sqrt(li) + 60.0)
            k = np.arange(k_lo, k_hi + 1, dtype=float)
            log_pois = k * math.log(li) - li - special.gammaln(k + 1.0)
            probs = np.where(k == 0, 1.0, special.gammainc(np.maximum(k, 1.0), zi))
            out[i] = float(np.exp(log_pois) @ probs)
        return out

    s = jump_scale
    mean = drift - rate * s
    # cumulant k(th) = drift*th + rate*(1/(1+th*s) - 1) for the mirrored jumps
    theta_star = (math.sqrt(rate * s / drift) - 1.0) / s
    rate_i = -(drift * theta_star + rate * (1.0 / (1.0 + theta_star * s) - 1.0))
    if mean >= 0.0 or rate_i <= 0.0:
        return 0.0
    t_hi = min(60.0 / rate_i, 1e6)
    theta = np.arange(-40.0, math.log(t_hi), 0.05)
    t = np.exp(theta)
    integrand = -np.expm1(-t) * prob(t)
    total = float(np.trapezoid(integrand, theta))
    sigma2 = 2.0 * rate * s * s / (1.0 + theta_star * s) ** 3
    z = rate_i * t_hi
    tail_t = math.sqrt(rate_i) * (2.0 * math.exp(-z) / math.sqrt(z)
                                  - 2.0 * math.sqrt(math.pi) * special.erfc(math.sqrt(z)))
    total += tail_t / (theta_star * math.sqrt(2.0 * math.pi * sigma2))
    return math.exp(-total)


def char_exponent(model: ProcessModel, lam: float) -> complex:
    """psi(lam) with E e^{i lam X_t} = e^{-t psi(lam)}."""
    lam = float(lam)
    if model.family == BROWNIAN:
        return complex(0.5 * lam * lam, -model.drift * lam)
    if model.family == CAUCHY:
        return complex(abs(lam), 0.0)
    if model.family == STABLE:
        if lam == 0.0:
            return 0.0 + 0.0j
        phase = -math.pi * model.alpha * (model.rho - 0.5) * math.copysign(1.0, lam)
        return abs(lam) ** model.alpha * complex(math.cos(phase), math.sin(phase))
    if model.family == CPP:
        denom = complex(1.0, -lam * model.jump_sign * model.jump_scale)
        return complex(0.0, -lam * model.drift) + model.rate * (1.0 - 1.0 / denom)
    raise UnsupportedModelError(model.family)


def positivity_param(model: ProcessModel) -> float:
    """rho = P(X_1 >= 0) for Brownian and stable-type models."""
    if model.family in (BROWNIAN, CAUCHY, STABLE):
        return model.rho
    raise UnsupportedModelError(
        f"positivity parameter undefined for {model.family}")


def dual_model(model: ProcessModel) -> ProcessModel:
    """Model of -X. Types 2 and 3 swap, d and d* swap, rho -> 1-rho."""
    if model.family == BROWNIAN:
        return classify_model(BROWNIAN, drift=-model.drift)
    if model.family == CAUCHY:
        return model
    if model.family == STABLE:
        return classify_model(STABLE, alpha=model.alpha, rho=1.0 - model.rho)
    if model.family == CPP:
        g = model.gamma
        kwargs = {}
        if g is not None:
            kwargs = dict(gamma_paths=g.sample_size, gamma_seed=g.seed,
                          gamma_horizon=g.horizon)
        return classify_model(CPP, rate=model.rate, jump_scale=model.jump_scale,
                              jump_sign=-model.jump_sign, drift=-model.drift,
                              **kwargs)
    raise UnsupportedModelError(model.family)


def model_to_dict(model: ProcessModel) -> dict:
    """Flat key-value representation used by the CLI and artifact metadata."""
    out = {"family": model.family, "regularity": model.regularity.value}
    if model.family == BROWNIAN:
        out["drift"] = model.drift
    elif model.family == STABLE:
        out["alpha"] = model.alpha
        out["rho"] = model.rho
    elif model.family == CPP:
        out.update(rate=model.rate, jump_scale=model.jump_scale,
                   jump_sign=model.jump_sign, drift=model.drift)
    return out


def model_from_dict(data: dict) -> ProcessModel:
    family = data["family"]
    kwargs = {k: v for k, v in data.items()
              if k in ("drift", "alpha", "rho", "rate", "jump_scale",
                       "jump_sign")}
    if "jump_sign" in kwargs:
        kwargs["jump_sign"] = int(kwargs["jump_sign"])
    return classify_model(family, **kwargs)
