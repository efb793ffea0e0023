"""Random walks read off lattice configurations, and their exact statistics.

Covers the walk of accumulated edge differences, the buffer-interval
chunking that makes coarse increments independent, the 3-color comparison
walks built from color triples, exact covariance enumeration, and
fluctuation-theory numerics for survival probabilities of mean-zero walks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import (ColorConfig, Cycle, OneForm, Segment, blink_color,
                      one_form, simulate)
from .rng import substream

__all__ = [
    "WalkPath",
    "IntervalPartition",
    "ComparisonWalks",
    "SAConstant",
    "associated_walk",
    "chunk_partition",
    "g_general",
    "g_triple",
    "flip_free_env",
    "comparison_walk",
    "covariance_exact",
    "covariance_exact_triples",
    "gamma_squared",
    "sa_constant",
    "survival_series",
    "q_tilde_bounds",
    "survival_mc",
    "survival_exhaustive",
]

FLIP_TRIPLES = ((1, 2, 0), (0, 2, 1))


@dataclass(frozen=True)
class WalkPath:
    start: int
    increments: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.increments, dtype=np.int64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "increments", arr)

    @property
    def values(self) -> np.ndarray:
        """S_0 .. S_n."""
        out = np.empty(self.increments.size + 1, dtype=np.int64)
        out[0] = self.start
        np.cumsum(self.increments, out=out[1:])
        out[1:] += self.start
        return out


def associated_walk(form: OneForm, origin: int, direction: str = "right",
                    steps: int | None = None) -> WalkPath:
    """S_0 = 0, S_n = sum of the form over the first n edges from `origin`."""
    if direction not in ("right", "left"):
        raise ValueError("direction must be 'right' or 'left'")
    vals = form.values.astype(np.int64)
    if isinstance(form.geometry, Cycle):
        L = form.geometry.length
        if steps is None:
            steps = L
        if steps > L:
            raise ValueError("window exhausted")
        idx = np.arange(steps)
        if direction == "right":
            inc = vals[(origin + idx) % L]
        else:
            inc = -vals[(origin - 1 - idx) % L]
        return WalkPath(0, inc)
    lo, hi = form.geometry.lo, form.geometry.hi
    avail = (hi - origin) if direction == "right" else (origin - lo)
    if steps is None:
        steps = avail
    if steps > avail or origin < lo or origin > hi:
        raise ValueError("window exhausted")
    i0 = origin - lo
    if direction == "right":
        inc = vals[i0:i0 + steps]
    else:
        inc = -vals[i0 - steps:i0][::-1]
    return WalkPath(0, inc)


# --------------------------------------------------------------------------
# Buffer-interval chunking
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IntervalPartition:
    """Buffer-delimited intervals whose chunk sums are i.i.d. across samples.

    A qualifying site b marks a run of exactly 2c initial zeros on
    [b-c+1, b+c] with nonzero flanks. Interval i runs from one past the
    previous qualifying site to the next, so consecutive intervals tile the
    window and each carries c buffer zeros at both ends. zeta[i] sums the
    burned-in form over the edges of interval i.
    """

    c: int
    burn_in: int
    b_sites: tuple
    intervals: tuple
    zeta: tuple
    junctions: tuple

    @property
    def a_sites(self) -> tuple:
        return tuple(lo for lo, _ in self.intervals)


def _qualifying_sites(colors: np.ndarray, lo: int, c: int) -> list[int]:
    zero = colors == 0
    n = colors.size
    out = []
    window = 2 * c
    run = np.convolve(zero.astype(np.int32), np.ones(window, dtype=np.int32), "valid")
    for start in np.flatnonzero(run == window):
        if start - 1 < 0 or start + window >= n:
            continue
        if zero[start - 1] or zero[start + window]:
            continue
        out.append(lo + int(start) + c - 1)  # b: run occupies [b-c+1, b+c]
    return out


def chunk_partition(config: ColorConfig, c: int = 6) -> IntervalPartition:
    """Partition a time-0 window into buffer-delimited chunks.

    Simulates 5*kappa steps (the even-kappa burn-in bound; the buffers are
    sized so no information crosses a junction in that time) and records the
    chunk sums of the resulting form. Intervals clipped by the shrunken
    window are discarded.
    """
    if config.time_stamp != 0:
        raise ValueError("chunking is defined on the initial coloring")
    if c < 1:
        raise ValueError("c must be >= 1")
    if not isinstance(config.geometry, Segment):
        raise ValueError("chunking expects a finite window (segment geometry)")
    lo = config.geometry.lo
    bs = _qualifying_sites(np.asarray(config.colors), lo, c)
    if len(bs) < 2:
        raise ValueError("no qualifying block in window")
    burn = 5 * config.kappa
    final = simulate(config, "fca", burn).final
    form = one_form(final)
    flo, fhi = final.geometry.lo, final.geometry.hi
    intervals, zeta, junctions, kept_b = [], [], [], []
    for b_prev, b in zip(bs[:-1], bs[1:]):
        a = b_prev + 1
        if a < flo or b + 1 > fhi:
            continue  # clipped by the shrunken window
        vals = form.values[a - flo:b + 1 - flo].astype(np.int64)
        intervals.append((a, b))
        zeta.append(int(vals.sum()))
        junctions.append(int(form.values[b - flo]))
        kept_b.append(b)
    if not intervals:
        raise ValueError("no qualifying block in window")
    return IntervalPartition(c, burn, tuple(kept_b), tuple(intervals),
                             tuple(zeta), tuple(junctions))


# --------------------------------------------------------------------------
# Functionals of the initial environment
# --------------------------------------------------------------------------

def _fca_fixed_path_step(c: np.ndarray, kappa: int) -> np.ndarray:
    """FCA update on a fixed finite path; endpoints see one neighbor."""
    b = blink_color(kappa)
    blink = c == b
    nb = np.empty_like(blink)
    nb[1:-1] = blink[2:] | blink[:-2]
    nb[0] = blink[1]
    nb[-1] = blink[-2]
    excited = (c > b) & nb
    inc = c + np.uint8(1)
    inc = np.where(inc == kappa, np.uint8(0), inc)
    return np.where(excited, c, inc).astype(np.uint8)


def _map_diff(a: int, b_: int, kappa: int) -> int:
    """Mod-kappa difference b_-a mapped into [-m, m] with the even tie rule."""
    m = kappa // 2
    d = (b_ - a) % kappa
    if kappa == 2 * m and d == m:
        return m if a <= blink_color(kappa) else -m
    return d - kappa if d > m else d


def g_general(kappa: int, t0: int, d: int, colors) -> int:
    """Run the rule t0 steps on a (2d+2)-site path; read the middle edge.

    The window must be wide enough that the middle edge is insulated from
    the path endpoints for t0 steps: d*(b(kappa)+2) >= t0.
    """
    if t0 < 0:
        raise ValueError("t0 must be >= 0")
    if d < 1 or d * (blink_color(kappa) + 2) < t0:
        raise ValueError(f"d too small: need d*(b+2) >= t0, got d={d}, t0={t0}")
    c = np.asarray(colors, dtype=np.uint8)
    if c.shape != (2 * d + 2,):
        raise ValueError(f"expected {2 * d + 2} colors (sites -d..d+1)")
    if c.size and int(c.max()) >= kappa:
        raise ValueError("colors must lie in [0, kappa-1]")
    for _ in range(t0):
        c = _fca_fixed_path_step(c, kappa)
    return _map_diff(int(c[d]), int(c[d + 1]), kappa)


def g_triple(i: int, j: int, k: int) -> int:
    """3-color triple functional: the edge value behind the center site,
    with the two sign-flipping triples re-read as their post-flip values."""
    t = (i % 3, j % 3, k % 3)
    if t == (1, 2, 0):
        return -2
    if t == (0, 2, 1):
        return 2
    return _map_diff(t[1], t[2], 3)


def flip_free_env(config: ColorConfig) -> ColorConfig:
    """Rewrite every 3-color flipping triple's center to 1.

    The modified coloring generates the same trajectory from time 1 on, and
    no edge ever flips along its orbit.
    """
    if config.kappa != 3:
        raise ValueError("flip-free environment is specific to kappa=3")
    c = np.asarray(config.colors)
    if isinstance(config.geometry, Cycle):
        left, right = np.roll(c, 1), np.roll(c, -1)
        tgt = slice(None)
        mid = c
    else:
        left, right, mid = c[:-2], c[2:], c[1:-1]
        tgt = slice(1, -1)
    flip = (mid == 2) & (((left == 1) & (right == 0)) | ((left == 0) & (right == 1)))
    out = c.copy()
    out[tgt] = np.where(flip, np.uint8(1), mid)
    return ColorConfig(3, out, config.geometry, config.time_stamp)


@dataclass(frozen=True)
class ComparisonWalks:
    """Value paths S_cal (triple walk), S_cal_prime (lifted at -1 before a
    sign-flipping triple), and S_prime (walk of the flip-free form)."""

    s_cal: np.ndarray
    s_cal_prime: np.ndarray
    s_prime: np.ndarray


def comparison_walk(config: ColorConfig, n: int, s0_prime: int = 0) -> ComparisonWalks:
    """The three coupled 3-color walks over positions 0..n."""
    if config.kappa != 3:
        raise ValueError("comparison walk is specific to kappa=3")
    if not isinstance(config.geometry, Segment):
        raise ValueError("a finite window (segment) is expected")
    lo, hi = config.geometry.lo, config.geometry.hi
    if lo > -1 or hi < n + 1:
        raise ValueError("window too small: need sites [-1, n+1]")
    c = np.asarray(config.colors, dtype=np.int16)

    def triple(i):
        return (int(c[i - 1 - lo]), int(c[i - lo]), int(c[i + 1 - lo]))

    is120 = np.array([triple(i) == (1, 2, 0) for i in range(0, n + 1)])
    is021 = np.array([triple(i) == (0, 2, 1) for i in range(0, n + 1)])

    s_cal = np.empty(n + 1, dtype=np.int64)
    s_cal[0] = s0_prime + int(is120[0]) - 2 * int(is021[0])
    for i in range(n):
        s_cal[i + 1] = s_cal[i] + g_triple(*triple(i))
    s_cal_prime = s_cal + ((s_cal == -1) & is021)

    prime = flip_free_env(config)
    pv = np.asarray(prime.colors, dtype=np.int16)
    s_prime = np.empty(n + 1, dtype=np.int64)
    s_prime[0] = s0_prime
    for i in range(n):
        d = _map_diff(int(pv[i - lo]), int(pv[i + 1 - lo]), 3)
        s_prime[i + 1] = s_prime[i] + d
    return ComparisonWalks(s_cal, s_cal_prime, s_prime)


# --------------------------------------------------------------------------
# Exact covariances of the increment functional
# --------------------------------------------------------------------------

def _exact_covariance(gs: dict, wsize: int, k: int, kappa: int = 3) -> Fraction:
    """Cov[g(window at 0), g(window at k)] under uniform product colors."""
    if k < 0:
        raise ValueError("lag must be >= 0")
    if k >= wsize:
        return Fraction(0)  # disjoint windows are independent
    n = k + wsize
    total = kappa ** n
    s00 = s0 = sk = 0
    for w in itertools.product(range(kappa), repeat=n):
        g0 = gs[w[:wsize]]
        gk = gs[w[k:k + wsize]]
        s00 += g0 * gk
        s0 += g0
        sk += gk
    return Fraction(total * s00 - s0 * sk, total * total)


def covariance_exact(kappa: int = 3, t0: int = 1, d: int = 1, k: int = 0) -> Fraction:
    """Exact lag-k covariance of the (2d+2)-window edge functional."""
    if k > 12:
        raise ValueError("lag too large for exhaustive enumeration (k > 12)")
    wsize = 2 * d + 2
    if k >= wsize:
        return Fraction(0)
    gs = {w: g_general(kappa, t0, d, w)
          for w in itertools.product(range(kappa), repeat=wsize)}
    return _exact_covariance(gs, wsize, k, kappa)


def covariance_exact_triples(k: int = 0) -> Fraction:
    """Exact lag-k covariance of the 3-color triple functional."""
    if k > 12:
        raise ValueError("lag too large for exhaustive enumeration (k > 12)")
    if k >= 3:
        return Fraction(0)
    gs = {w: g_triple(*w) for w in itertools.product(range(3), repeat=3)}
    return _exact_covariance(gs, 3, k, 3)


def gamma_squared(kappa: int = 3, variant: str = "window") -> Fraction:
    """Limit variance rate: Var + 2 * sum of lagged covariances (finite sum)."""
    if kappa != 3:
        raise ValueError("exact limit variance implemented for kappa=3 only")
    if variant == "window":
        cov = [covariance_exact(3, 1, 1, k) for k in range(4)]
    elif variant == "triple":
        cov = [covariance_exact_triples(k) for k in range(3)]
    else:
        raise ValueError("variant must be 'window' or 'triple'")
    return cov[0] + 2 * sum(cov[1:], Fraction(0))


# --------------------------------------------------------------------------
# Sparre Andersen numerics for i.i.d. integer walks
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SAConstant:
    c: float
    e_minus_c: float
    n_terms: int
    tail_correction: float
    tail_bound: float
    k_hat: float


def _dist(values, probs) -> tuple[np.ndarray, int]:
    v = np.asarray(values, dtype=np.int64)
    p = np.asarray(probs, dtype=np.float64)
    if v.ndim != 1 or v.size != p.size or v.size < 2:
        raise ValueError("need a finite support of >= 2 integer points")
    if np.unique(v).size != v.size:
        raise ValueError("support values must be distinct")
    if abs(p.sum() - 1.0) > 1e-12 or (p < 0).any():
        raise ValueError("probabilities must be nonnegative and sum to 1")
    vmin, vmax = int(v.min()), int(v.max())
    arr = np.zeros(vmax - vmin + 1)
    arr[v - vmin] = p
    return arr, vmin


def sa_constant(values, probs, n_terms: int = 4096) -> SAConstant:
    """The fluctuation-theory constant c = sum (1/n)(P(S_n > 0) - 1/2).

    Exact convolution up to n_terms, a fitted n^(-3/2) tail correction, and
    the conservative local-CLT tail bound 2*K_hat/sqrt(n_terms) with K_hat
    estimated from the computed prefix. Requires exactly mean-zero
    increments.
    """
    arr, vmin = _dist(values, probs)
    mean = float(np.dot(np.arange(vmin, vmin + arr.size), arr))
    if abs(mean) > 1e-12:
        raise ValueError(f"increments must have mean zero, got {mean}")
    dist = np.array([1.0]); off = 0
    terms = np.empty(n_terms)
    khat = 0.0
    for n in range(1, n_terms + 1):
        dist = np.convolve(dist, arr)
        off += vmin
        p_pos = float(dist[max(0, 1 - off):].sum())
        dev = p_pos - 0.5
        terms[n - 1] = dev / n
        if n >= 16:
            khat = max(khat, abs(dev) * np.sqrt(n))
    c_trunc = float(terms.sum())
    # period-robust tail fit: pair consecutive terms, fit beta * m^(-3/2)
    pairs = terms[::2][: n_terms // 2] + terms[1::2][: n_terms // 2]
    m = np.arange(1, pairs.size + 1, dtype=np.float64)
    last = slice(3 * pairs.size // 4, None)
    beta = float(np.mean(pairs[last] * m[last] ** 1.5))
    m_top = float(pairs.size)
    tail = beta * 2.0 / np.sqrt(m_top + 0.5)
    c = c_trunc + tail
    bound = 2.0 * khat / np.sqrt(n_terms)
    return SAConstant(c, float(np.exp(-c)), n_terms, tail, bound, khat)


def survival_series(values, probs, x: int = 0, T: int = 1000) -> np.ndarray:
    """Q(x, t) = P(S_1 >= 0, ..., S_t >= 0 | S_0 = x) for t = 0..T."""
    arr, vmin = _dist(values, probs)
    if x < 0:
        raise ValueError("x must be >= 0")
    var = float(np.dot(np.arange(vmin, vmin + arr.size) ** 2, arr))
    cap = x + int(12.0 * np.sqrt(max(var, 1.0) * max(T, 1))) + arr.size + 4
    v = np.zeros(cap)
    v[x] = 1.0
    out = np.empty(T + 1)
    out[0] = 1.0
    for t in range(1, T + 1):
        w = np.convolve(v, arr)
        lo = -vmin  # index of height 0 in w
        v = w[lo:lo + cap]
        out[t] = v.sum()
    return out


def q_tilde_bounds(q_series: np.ndarray, u: float) -> tuple[float, float]:
    """Enclosure of the survival generating function at u from a truncation."""
    if not 0 <= u < 1:
        raise ValueError("u must be in [0, 1)")
    T = q_series.size - 1
    t = np.arange(T + 1)
    low = float(np.dot(u ** t, q_series))
    rem = float(q_series[-1] * u ** (T + 1) / (1 - u))
    return low, low + rem


# --------------------------------------------------------------------------
# Monte Carlo and exhaustive survival for the 3-color flip-free walk
# --------------------------------------------------------------------------

def _sprime_increments(cols: np.ndarray) -> np.ndarray:
    """Edge values of the flip-free rewrite of color rows.

    cols holds raw colors at consecutive sites; returns the mapped
    differences between consecutive rewritten sites (one fewer column,
    excluding both outermost sites whose triples are unknown).
    """
    mid = cols[..., 1:-1]
    left = cols[..., :-2]
    right = cols[..., 2:]
    flip = (mid == 2) & (((left == 1) & (right == 0)) | ((left == 0) & (right == 1)))
    xp = np.where(flip, np.uint8(1), mid).astype(np.int16)
    d = (xp[..., 1:] - xp[..., :-1]) % 3
    return np.where(d == 2, -1, d).astype(np.int8)


def survival_exhaustive(tau: int) -> Fraction:
    """Exact 2*P(the flip-free walk from -1 stays >= 0 for 2*tau+1 steps).

    Enumerates every coloring of the (2*tau+4)-site determining window.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    n = 2 * tau + 4
    total = 3 ** n
    digits = (np.arange(total)[:, None] // (3 ** np.arange(n))[None, :]) % 3
    cols = digits.astype(np.uint8)
    inc = _sprime_increments(cols)  # edges (i, i+1), i = 0..2*tau
    s = np.cumsum(inc.astype(np.int32), axis=1) - 1
    hits = int((s.min(axis=1) >= 0).sum())
    return Fraction(2 * hits, total)


def survival_mc(tau: int, trials: int, seed: int, batch: int = 1 << 14) -> tuple[float, float]:
    """Monte Carlo estimate of 2*P(survival), with binomial standard error.

    Walks are generated lazily in column blocks with early termination of
    dead trials; trial substreams are derived from the seed so results do
    not depend on batching of work across workers.
    """
    if trials <= 0:
        raise ValueError("trials must be >= 1")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    horizon = 2 * tau + 1
    block = 256
    hits = 0
    n_batches = (trials + batch - 1) // batch
    for bi in range(n_batches):
        m = min(batch, trials - bi * batch)
        rng = substream(seed, bi)
        cols = rng.integers(0, 3, size=(m, 3), dtype=np.uint8)
        s = np.full(m, -1, dtype=np.int32)
        alive = np.arange(m)
        done = 0
        while done < horizon and alive.size:
            width = min(block, horizon - done)
            fresh = rng.integers(0, 3, size=(alive.size, width), dtype=np.uint8)
            window = np.concatenate([cols, fresh], axis=1)
            inc = _sprime_increments(window)  # `width` edge values
            path = np.cumsum(inc.astype(np.int32), axis=1) + s[alive][:, None]
            ok = path.min(axis=1) >= 0
            s[alive] = path[:, -1]
            cols = window[ok, -3:]
            alive = alive[ok]
            done += width
        hits += alive.size
    p = 2.0 * hits / trials
    half = hits / trials
    se = 2.0 * float(np.sqrt(max(half * (1 - half), 1e-300) / trials))
    return p, se
