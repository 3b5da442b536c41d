"""Monte Carlo oracle: path simulation and nonparametric test statistics.

Everything here is deliberately independent of the analytic modules: paths
are simulated from the increment laws alone, so agreement between the two
routes validates both.  Streams are counter-based (Philox) with a fixed
layout, making every sample reproducible from (seed, path index, step
block) regardless of chunk scheduling:

    key     = [seed, stream]   stream 0: paths, 1: passage times, 2: permutations
    counter = [0, 0, step_block, path_chunk]
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from numpy.random import Generator, Philox

from .model import (
    BROWNIAN,
    CAUCHY,
    CPP,
    STABLE,
    ProcessModel,
    UnsupportedModelError,
)

PATH_CHUNK = 2048
STEP_BLOCK = 4096

_STREAM_PATHS = 0
_STREAM_PASSAGE = 1
_STREAM_PERMUTE = 2


def _generator(seed, stream, block, chunk):
    return Generator(
        Philox(key=[int(seed), int(stream)], counter=[0, 0, int(block), int(chunk)])
    )


@dataclasses.dataclass(frozen=True)
class TripleSample:
    """Simulated (g_t, sup, terminal value) triples; drawdown = sup - terminal."""

    g: np.ndarray
    sup: np.ndarray
    terminal: np.ndarray

    @property
    def drawdown(self):
        return self.sup - self.terminal

    def __len__(self):
        return self.g.size


@dataclasses.dataclass(frozen=True)
class SimulationPlan:
    """A reproducible simulation request."""

    model: ProcessModel
    horizon: float
    paths: int
    steps: int
    seed: int
    bridge: bool = False

    def run(self):
        return simulate_triples(
            self.model,
            self.horizon,
            self.paths,
            self.steps,
            self.seed,
            bridge=self.bridge,
        )


def simulate_triples(model, t, n_paths, n_steps, seed, bridge=False):
    """Simulate n_paths triples (g_t, sup, X_t) on n_steps grid cells.

    Brownian models support bridge=True, which samples the exact law of the
    supremum by drawing each cell's conditional bridge maximum; g is then
    the left endpoint of the winning cell.  Stable models use exact
    increment draws, so only the grid coarseness biases sup and g
    (refine/extrapolate over n_steps).  Compound Poisson paths are
    event-driven and exact; n_steps is ignored for them.
    """
    if not isinstance(model, ProcessModel):
        raise TypeError("model must be a ProcessModel")
    t = float(t)
    if t <= 0.0:
        raise ValueError("horizon must be positive")
    n_paths = int(n_paths)
    n_steps = int(n_steps)
    if n_paths < 1 or n_steps < 1:
        raise ValueError("need at least one path and one step")
    if model.family == BROWNIAN:
        return _simulate_brownian(model, t, n_paths, n_steps, seed, bridge)
    if bridge:
        raise UnsupportedModelError("bridge sampling is implemented for Brownian models")
    if model.family in (CAUCHY, STABLE):
        return _simulate_stable(model, t, n_paths, n_steps, seed)
    if model.family == CPP:
        return _simulate_cpp(model, t, n_paths, seed, _STREAM_PATHS)
    raise UnsupportedModelError("no sampler for this model family")


def _simulate_brownian(model, t, n_paths, n_steps, seed, bridge):
    c = model.drift
    dt = t / n_steps
    sq = math.sqrt(dt)
    g = np.zeros(n_paths)
    sup = np.zeros(n_paths)
    term = np.zeros(n_paths)
    n_blocks = (n_steps + STEP_BLOCK - 1) // STEP_BLOCK
    for ci in range((n_paths + PATH_CHUNK - 1) // PATH_CHUNK):
        lo = ci * PATH_CHUNK
        m = min(PATH_CHUNK, n_paths - lo)
        carry = np.zeros(m)
        best = np.zeros(m)  # X_0 = 0 is always a candidate
        best_t = np.zeros(m)
        for bi in range(n_blocks):
            k = min(STEP_BLOCK, n_steps - bi * STEP_BLOCK)
            gen = _generator(seed, _STREAM_PATHS, bi, ci)
            inc = gen.standard_normal((m, k))
            inc *= sq
            inc += c * dt
            levels = np.cumsum(inc, axis=1)
            levels += carry[:, None]
            if bridge:
                u = gen.random((m, k))
                # conditional maximum of the cell's bridge above its left
                # endpoint: 0.5 (w + sqrt(w^2 - 2 dt ln U)) for increment w
                cand = inc + np.sqrt(inc * inc - 2.0 * dt * np.log(u))
                cand *= 0.5
                cand += levels - inc  # add back the left endpoint
                times_off = 0.0  # left endpoint of the cell
            else:
                cand = levels
                times_off = dt  # the grid point itself sits at (j+1) dt
            idx = np.argmax(cand, axis=1)
            rows = np.arange(m)
            vals = cand[rows, idx]
            upd = vals > best
            best[upd] = vals[upd]
            best_t[upd] = (bi * STEP_BLOCK + idx[upd]) * dt + times_off
            carry = levels[:, -1].copy()
        g[lo : lo + m] = best_t
        sup[lo : lo + m] = best
        term[lo : lo + m] = carry
    return TripleSample(g=g, sup=sup, terminal=term)


def _stable_increment_params(model):
    """Map (alpha, rho) to the skew/scale of the standard simulator.

    The target exponent is |lam|**alpha exp(-i pi alpha (rho - 1/2) sgn lam);
    a stable draw with skew beta0 has exponent
    |lam|**alpha (1 - i beta0 tan(pi alpha/2) sgn lam), so matching phases
    gives beta0 = tan(phi)/tan(pi alpha/2), phi = pi alpha (rho - 1/2), and
    a scale factor cos(phi)**(1/alpha).
    """
    alpha = model.alpha
    phi = math.pi * alpha * (model.rho - 0.5)
    beta0 = math.tan(phi) / math.tan(math.pi * alpha / 2.0)
    return phi, beta0


def _simulate_stable(model, t, n_paths, n_steps, seed):
    alpha = model.alpha
    dt = t / n_steps
    step_scale = dt ** (1.0 / alpha)
    if model.family == CAUCHY:
        mode = "cauchy"
    elif alpha == 2.0:
        mode = "gauss"
    else:
        mode = "cms"
        phi, beta0 = _stable_increment_params(model)
        b0 = math.atan(beta0 * math.tan(math.pi * alpha / 2.0)) / alpha
        s0 = (1.0 + beta0**2 * math.tan(math.pi * alpha / 2.0) ** 2) ** (
            1.0 / (2.0 * alpha)
        )
        full_scale = step_scale * math.cos(phi) ** (1.0 / alpha) * s0
    g = np.zeros(n_paths)
    sup = np.zeros(n_paths)
    term = np.zeros(n_paths)
    n_blocks = (n_steps + STEP_BLOCK - 1) // STEP_BLOCK
    for ci in range((n_paths + PATH_CHUNK - 1) // PATH_CHUNK):
        lo = ci * PATH_CHUNK
        m = min(PATH_CHUNK, n_paths - lo)
        carry = np.zeros(m)
        best = np.zeros(m)
        best_t = np.zeros(m)
        for bi in range(n_blocks):
            k = min(STEP_BLOCK, n_steps - bi * STEP_BLOCK)
            gen = _generator(seed, _STREAM_PATHS, bi, ci)
            if mode == "gauss":
                inc = gen.standard_normal((m, k))
                inc *= step_scale * math.sqrt(2.0)
            elif mode == "cauchy":
                inc = gen.random((m, k))
                inc -= 0.5
                inc = np.tan(math.pi * inc)
                inc *= dt
            else:
                u = gen.random((m, k))
                u -= 0.5
                u *= math.pi  # uniform on (-pi/2, pi/2)
                w = gen.standard_exponential((m, k))
                au = alpha * (u + b0)
                inc = (
                    np.sin(au)
                    / np.cos(u) ** (1.0 / alpha)
                    * (np.cos(u - au) / w) ** ((1.0 - alpha) / alpha)
                )
                inc *= full_scale
            levels = np.cumsum(inc, axis=1)
            levels += carry[:, None]
            idx = np.argmax(levels, axis=1)
            rows = np.arange(m)
            vals = levels[rows, idx]
            upd = vals > best
            best[upd] = vals[upd]
            best_t[upd] = (bi * STEP_BLOCK + idx[upd] + 1) * dt
            carry = levels[:, -1].copy()
        g[lo : lo + m] = best_t
        sup[lo : lo + m] = best
        term[lo : lo + m] = carry
    return TripleSample(g=g, sup=sup, terminal=term)


def _segment_first_argmax(values, starts, counts, seg_max):
    """Index of the first per-segment maximum in a ragged flat array."""
    total = values.size
    pos = np.arange(total)
    cand = np.where(values == np.repeat(seg_max, counts), pos, total)
    first = np.minimum.reduceat(cand, np.minimum(starts, total - 1))
    return first


def _simulate_cpp(model, t, n_paths, seed, stream):
    rate = model.rate
    scale = model.jump_scale
    drift = model.drift
    up = model.jump_sign > 0
    g = np.zeros(n_paths)
    sup = np.zeros(n_paths)
    term = np.zeros(n_paths)
    for ci in range((n_paths + PATH_CHUNK - 1) // PATH_CHUNK):
        lo = ci * PATH_CHUNK
        m = min(PATH_CHUNK, n_paths - lo)
        gen = _generator(seed, stream, 0, ci)
        counts = gen.poisson(rate * t, m)
        total = int(counts.sum())
        arrivals = gen.random(total)
        jumps = gen.standard_exponential(total)
        jumps *= scale if up else -scale
        path_id = np.repeat(np.arange(m), counts)
        order = np.argsort(path_id * 2.0 + arrivals, kind="stable")
        times = t * arrivals[order]
        jumps = jumps[order]
        starts = np.zeros(m, dtype=np.int64)
        np.cumsum(counts[:-1], out=starts[1:])
        cum = np.cumsum(jumps)
        base = np.where(starts > 0, cum[np.maximum(starts - 1, 0)], 0.0)
        cum_in_path = cum - np.repeat(base, counts)
        term[lo : lo + m] = drift * t
        nonempty = counts > 0
        ends = starts + counts
        if total > 0:
            path_sum = np.where(
                nonempty, cum_in_path[np.maximum(ends - 1, 0)], 0.0
            )
            term[lo : lo + m] += path_sum
        if up:
            # downward drift, upward jumps: records occur right after jumps
            vals = drift * times + cum_in_path
            if total > 0:
                seg_max = np.maximum.reduceat(vals, np.minimum(starts, total - 1))
            else:
                seg_max = np.zeros(m)
            seg_max = np.where(nonempty, seg_max, -np.inf)
            has = nonempty & (seg_max > 0.0)
            if has.any():
                first = _segment_first_argmax(vals, starts, counts, np.where(nonempty, seg_max, np.nan))
                sup_c = np.where(has, seg_max, 0.0)
                g_c = np.zeros(m)
                g_c[has] = times[first[has]]
                sup[lo : lo + m] = sup_c
                g[lo : lo + m] = g_c
        else:
            # upward drift, downward jumps: records occur just before jumps
            # or at the horizon
            vals = drift * times + cum_in_path - jumps
            x_t = term[lo : lo + m]
            if total > 0:
                seg_max = np.maximum.reduceat(vals, np.minimum(starts, total - 1))
            else:
                seg_max = np.zeros(m)
            seg_max = np.where(nonempty, seg_max, -np.inf)
            end_wins = x_t >= seg_max
            sup[lo : lo + m] = np.where(end_wins, x_t, seg_max)
            g_c = np.full(m, t)
            inner = ~end_wins
            if inner.any():
                first = _segment_first_argmax(vals, starts, counts, np.where(nonempty, seg_max, np.nan))
                g_c[inner] = times[first[inner]]
            g[lo : lo + m] = g_c
    return TripleSample(g=g, sup=sup, terminal=term)


def no_passage_estimate(model, t, n_paths, seed):
    """Independent-stream estimate of P(path never exceeds 0 up to t).

    Uses the passage-time stream, so it is independent of triples drawn
    with the same seed on the path stream.  Returns (estimate, standard
    error).
    """
    if model.family != CPP:
        raise UnsupportedModelError("passage estimator implemented for CPP models")
    sample = _simulate_cpp(model, t, n_paths, seed, _STREAM_PASSAGE)
    hits = sample.sup <= 0.0
    p = float(hits.mean())
    return p, math.sqrt(p * (1.0 - p) / n_paths)


def atom_mass_estimate(sample):
    """Frequency of the zero-supremum atom in a TripleSample, with its SE."""
    n = len(sample)
    p = float((sample.sup <= 0.0).mean())
    return p, math.sqrt(p * (1.0 - p) / n)


# ---------------------------------------------------------------------------
# nonparametric statistics


def empirical_distribution(sample):
    """Sorted sample and the empirical CDF evaluated at each point."""
    xs = np.sort(np.asarray(sample, dtype=float))
    return xs, np.arange(1, xs.size + 1) / xs.size


def ks_statistic(sample, cdf):
    """Kolmogorov-Smirnov distance between a sample and a CDF callable."""
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    f = np.asarray(cdf(xs), dtype=float)
    d_plus = float((np.arange(1, n + 1) / n - f).max())
    d_minus = float((f - np.arange(0, n) / n).max())
    return max(d_plus, d_minus)


def aitken_extrapolate(coarse, mid, fine):
    """Aitken delta-squared limit of a geometrically converging triple."""
    d1 = mid - fine
    d0 = coarse - mid
    denom = d0 - d1
    if denom == 0.0:
        return fine
    return fine - d1 * d1 / denom


def cdf_from_density(xs, pdf_vals):
    """Grid CDF by trapezoid accumulation, normalized over the grid range.

    Returns a callable that interpolates the CDF; samples outside the grid
    clamp to 0 or 1.
    """
    xs = np.asarray(xs, dtype=float)
    pdf_vals = np.asarray(pdf_vals, dtype=float)
    inc = np.zeros(xs.size)
    inc[1:] = 0.5 * (pdf_vals[1:] + pdf_vals[:-1]) * np.diff(xs)
    cdf = np.cumsum(inc)
    cdf /= cdf[-1]

    def evaluate(q):
        return np.interp(np.asarray(q, dtype=float), xs, cdf, left=0.0, right=1.0)

    return evaluate


# ---------------------------------------------------------------------------
# distance covariance (fast univariate V-statistic) and permutation test


def _row_distance_sums(x):
    """a_i = sum_j |x_i - x_j| for scalar data, O(n log n)."""
    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    prefix = np.cumsum(xs)
    k = np.arange(n)
    rows_sorted = (2.0 * (k + 1) - n) * xs + (prefix[-1] - 2.0 * prefix)
    rows = np.empty(n)
    rows[order] = rows_sorted
    return rows


def _pairwise_abs_product_sum(x, y):
    """sum_{ij} |x_i - x_j| |y_i - y_j| in O(n log^2 n).

    Sort by x; then the sum is 2 sum_{i<j} (x_j - x_i)|y_j - y_i|, and the
    cross terms of a bottom-up merge over y give each (i, j) pair exactly
    once.  Blocks are power-of-2 padded; pads carry zero weight.
    """
    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    size = 1 << int(math.ceil(math.log2(max(n, 2))))
    pad = size - n
    # pads sort after every real point and contribute nothing to the sums
    yk = np.concatenate([np.argsort(np.argsort(ys, kind="stable"), kind="stable").astype(np.int64), n + np.arange(pad)])
    ones = np.concatenate([np.ones(n), np.zeros(pad)])
    yv = np.concatenate([ys, np.zeros(pad)])
    xv = np.concatenate([xs, np.zeros(pad)])
    xyv = xv * yv
    total = 0.0
    m = 1
    while m < size:
        pairs = size // (2 * m)
        block_of = np.repeat(np.arange(2 * pairs), m)
        # sort each block of the current size by y-rank
        perm = np.argsort(block_of * np.int64(2 * size) + yk, kind="stable")
        yk = yk[perm]
        ones = ones[perm]
        yv = yv[perm]
        xv = xv[perm]
        xyv = xyv[perm]
        arr = np.stack([ones, yv, xv, xyv])
        left = arr.reshape(4, pairs, 2, m)[:, :, 0, :]
        right_idx = np.arange(size).reshape(pairs, 2, m)[:, 1, :]
        r_yk = yk[right_idx.ravel()].reshape(pairs, m)
        r_real = ones[right_idx.ravel()].reshape(pairs, m) > 0.0
        l_yk = yk.reshape(pairs, 2, m)[:, 0, :]
        # batched searchsorted via per-pair offsets
        offs = (np.arange(pairs, dtype=np.int64) * np.int64(4 * size))[:, None]
        pos = np.searchsorted((l_yk + offs).ravel(), (r_yk + offs).ravel())
        pos = pos.reshape(pairs, m) - np.arange(pairs, dtype=np.int64)[:, None] * m
        cums = np.concatenate(
            [np.zeros((4, pairs, 1)), np.cumsum(left, axis=2)], axis=2
        )
        take = np.take_along_axis(cums, pos[None, :, :], axis=2)
        tot = cums[:, :, -1]
        cnt_le, sy_le, sx_le, sxy_le = take[0], take[1], take[2], take[3]
        cnt_t, sy_t, sx_t, sxy_t = (
            tot[0][:, None],
            tot[1][:, None],
            tot[2][:, None],
            tot[3][:, None],
        )
        r_y = yv[right_idx.ravel()].reshape(pairs, m)
        r_x = xv[right_idx.ravel()].reshape(pairs, m)
        abs_y = (cnt_le * r_y - sy_le) + ((sy_t - sy_le) - (cnt_t - cnt_le) * r_y)
        x_abs_y = (r_y * sx_le - sxy_le) + ((sxy_t - sxy_le) - r_y * (sx_t - sx_le))
        contrib = np.where(r_real, r_x * abs_y - x_abs_y, 0.0)
        total += float(contrib.sum())
        m *= 2
    return 2.0 * total


def distance_covariance_sq(x, y):
    """Squared distance covariance (V-statistic) of two scalar samples."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if y.size != n or n < 2:
        raise ValueError("need two equal-length samples")
    t1 = _pairwise_abs_product_sum(x, y) / n**2
    ax = _row_distance_sums(x)
    by = _row_distance_sums(y)
    t2 = float(ax @ by) / n**3
    t3 = float(ax.sum()) * float(by.sum()) / n**4
    return t1 + t3 - 2.0 * t2


def independence_test(columns, n_permutations=299, seed=0):
    """Permutation test of pairwise independence via distance covariance.

    columns: sequence of equal-length 1-D arrays.  Each unordered pair gets
    a permutation p-value p = (1 + #{perm >= observed}) / (B + 1); the
    returned summary includes the Bonferroni-adjusted minimum.
    """
    cols = [np.asarray(c, dtype=float) for c in columns]
    n = cols[0].size
    if any(c.size != n for c in cols):
        raise ValueError("columns must share a length")
    gen = _generator(seed, _STREAM_PERMUTE, 0, 0)
    pairs = []
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            obs = distance_covariance_sq(cols[i], cols[j])
            exceed = 0
            for _ in range(n_permutations):
                perm = gen.permutation(n)
                if distance_covariance_sq(cols[i], cols[j][perm]) >= obs:
                    exceed += 1
            pairs.append(
                {
                    "pair": (i, j),
                    "dcov_sq": obs,
                    "p_value": (1.0 + exceed) / (n_permutations + 1.0),
                }
            )
    min_p = min(p["p_value"] for p in pairs)
    return {
        "pairs": pairs,
        "min_p_value": min_p,
        "bonferroni_p_value": min(1.0, len(pairs) * min_p),
    }
