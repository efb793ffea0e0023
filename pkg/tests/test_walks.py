from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from fcalab.constants import COVARIANCES_WINDOW, GAMMA_SQUARED
from fcalab.lattice import (ColorConfig, Segment, one_form,
                            ranking_from_form, simulate)
from fcalab.rng import substream
from fcalab.walks import (associated_walk, chunk_partition, comparison_walk,
                          covariance_exact, covariance_exact_triples,
                          flip_free_env, g_general, g_triple, gamma_squared,
                          q_tilde_bounds, sa_constant, survival_exhaustive,
                          survival_mc, survival_series)

from conftest import random_cycle, random_segment


# ---------------------------------------------------------------- walks

def test_associated_walk_flat_and_ramp():
    flat = one_form(ColorConfig(3, [0] * 8, Segment(0, 7)))
    w = associated_walk(flat, 0)
    assert (w.values == 0).all()
    ramp = one_form(ColorConfig(3, [0, 1, 2, 0, 1], Segment(0, 4)))
    w = associated_walk(ramp, 0)
    assert list(w.increments) == [1, 1, 1, 1]


def test_associated_walk_matches_ranks():
    cfg = random_segment(5, -6, 7, 3)
    form = one_form(cfg)
    w = associated_walk(form, 0, "right")
    rk = ranking_from_form(form, 0, 0)
    for n in range(8):
        assert rk.rank_at(n) - rk.rank_at(0) == -w.values[n]


def test_associated_walk_window_exhausted():
    form = one_form(random_segment(3, 0, 5, 1))
    with pytest.raises(ValueError):
        associated_walk(form, 0, "right", steps=9)
    left = associated_walk(form, 5, "left")
    assert left.increments.size == 5


# ---------------------------------------------------------------- chunking

def uniform_window(seed: int, n: int) -> ColorConfig:
    rng = substream(seed, 0)
    colors = rng.integers(0, 3, size=n, dtype=np.uint8)
    return ColorConfig(3, colors, Segment(0, n - 1), 0)


def planted_window(seed: int, n: int = 3600, spacing: int = 300) -> ColorConfig:
    """Random colors with exact 12-zero runs planted on a grid.

    Exact-length buffer runs have density ~8e-7 under the uniform measure,
    so structural tests plant them; the statistical tests below sample the
    honest unconditioned ensemble on much longer windows.
    """
    rng = substream(seed, 1)
    colors = rng.integers(0, 3, size=n, dtype=np.uint8)
    for start in range(spacing // 2, n - 14, spacing):
        colors[start:start + 12] = 0
        colors[start - 1] = 1 + rng.integers(0, 2)
        colors[start + 12] = 1 + rng.integers(0, 2)
    return ColorConfig(3, colors, Segment(0, n - 1), 0)


def test_qualifying_block_example():
    # zeros exactly on [0, 11], nonzero flanks: b = 5 qualifies
    from fcalab.walks import _qualifying_sites
    colors = np.ones(20, np.uint8)
    colors[1:13] = 0
    assert _qualifying_sites(colors, -1, 6) == [5]


def test_chunk_junction_edges_are_zero():
    part = chunk_partition(planted_window(2), c=6)
    assert len(part.intervals) >= 8
    assert all(j == 0 for j in part.junctions)
    # intervals tile: A_{i+1} = B_i + 1
    for (a1, b1), (a2, b2) in zip(part.intervals, part.intervals[1:]):
        assert a2 == b1 + 1


def _uniform_ensemble_zetas(n_windows: int = 10, n: int = 2 * 10 ** 7):
    zetas, pairs = [], []
    for seed in range(n_windows):
        try:
            part = chunk_partition(uniform_window(seed, n), c=6)
        except ValueError:
            continue
        zetas.extend(part.zeta)
        pairs.extend(zip(part.zeta[:-1], part.zeta[1:]))
    return np.array(zetas, dtype=float), pairs


def test_chunk_sums_statistics_uniform_ensemble():
    z, pairs = _uniform_ensemble_zetas()
    n = z.size
    assert n > 60
    se = z.std() / math.sqrt(n)
    assert abs(z.mean()) <= 3 * se
    if len(pairs) > 30:
        a = np.array([p[0] for p in pairs], float)
        b = np.array([p[1] for p in pairs], float)
        lag = np.corrcoef(a, b)[0, 1]
        assert abs(lag) <= 3 / math.sqrt(len(pairs) - 1)
        # exchangeable pairs: E f(z1) g(z2) = E f(z2) g(z1), f, g = id, |.|
        diffs = a * np.abs(b) - b * np.abs(a)
        assert abs(diffs.mean()) <= 3 * diffs.std() / math.sqrt(diffs.size) + 1e-12


def test_chunk_locality_under_outside_perturbation():
    cfg = planted_window(7)
    part = chunk_partition(cfg, c=6)
    assert len(part.intervals) >= 3
    a, b = part.intervals[1]
    rng = substream(123, 0)
    colors = np.asarray(cfg.colors).copy()
    # perturb deep inside the neighboring intervals, away from the buffers
    for (a2, b2) in (part.intervals[0], part.intervals[2]):
        lo, hi = a2 + 20, b2 - 20
        idx = rng.integers(lo, hi, size=5)
        colors[idx] = (colors[idx] + 1) % 3
    part2 = chunk_partition(ColorConfig(3, colors, cfg.geometry, 0), c=6)
    assert (a, b) in part2.intervals
    assert part2.zeta[part2.intervals.index((a, b))] == \
        part.zeta[part.intervals.index((a, b))]


def test_chunk_requires_qualifying_block():
    cfg = ColorConfig(3, np.ones(40, np.uint8), Segment(0, 39), 0)
    with pytest.raises(ValueError):
        chunk_partition(cfg, c=6)


# ---------------------------------------------------------------- functionals

def test_g_general_constant_tuple_is_zero():
    for kappa in (3, 5, 6):
        for c in range(kappa):
            assert g_general(kappa, 1, 1, [c, c, c, c]) == 0


def test_g_general_rejects_small_d():
    with pytest.raises(ValueError):
        g_general(3, 7, 2, [0] * 6)


@pytest.mark.parametrize("kappa,t0,d", [(3, 1, 1), (5, 2, 1), (7, 3, 1), (4, 20, 7)])
def test_g_general_matches_full_line(kappa, t0, d):
    # the windowed functional reads off the true lattice edge value
    L = 64
    for seed in range(6):
        cfg = random_cycle(kappa, L, seed)
        final = simulate(cfg, "fca", t0).final
        form = one_form(final)
        colors = np.asarray(cfg.colors)
        for x in range(0, L, 5):
            window = [colors[(x + i) % L] for i in range(-d, d + 2)]
            assert g_general(kappa, t0, d, window) == int(form.values[x])


def test_g_triple_values():
    assert g_triple(1, 2, 0) == -2
    assert g_triple(0, 2, 1) == 2
    for i in range(3):
        assert g_triple(i, 1, 0) == -1
        assert g_triple(i, 0, 1) == 1
        assert g_triple(i, 2, 2) == 0
    assert g_triple(2, 2, 0) == 1


# ---------------------------------------------------------------- flip-free env

def test_flip_free_env_rewrites_centers():
    cfg = ColorConfig(3, [1, 2, 0, 2, 1], Segment(0, 4), 0)
    out = flip_free_env(cfg)
    # both centered triples (1,2,0) and (0,2,1) are rewritten to 1
    assert list(out.colors) == [1, 1, 0, 1, 1]
    clean = ColorConfig(3, [0, 1, 2, 2, 1], Segment(0, 4), 0)
    assert (flip_free_env(clean).colors == clean.colors).all()


def test_flip_free_env_same_next_step():
    for seed in range(20):
        cfg = random_cycle(3, 30, seed)
        prime = flip_free_env(cfg)
        a = simulate(cfg, "fca", 1).final
        b = simulate(prime, "fca", 1).final
        assert (a.colors == b.colors).all()


def test_flip_free_orbit_never_flips():
    for seed in range(10):
        prime = flip_free_env(random_cycle(3, 24, seed))
        res = simulate(prime, "fca", 40, collect_reports=True)
        assert res.last_flip_time is None


# ---------------------------------------------------------------- comparison walk

def test_comparison_no_flip_triples_walks_agree():
    cfg = ColorConfig(3, [0, 1, 2, 2, 1, 0, 0], Segment(-1, 5), 0)
    assert (flip_free_env(cfg).colors == cfg.colors).all()
    w = comparison_walk(cfg, 4)
    assert (w.s_cal == w.s_prime).all()


def test_comparison_window_too_small():
    cfg = random_segment(3, -1, 3, 5)
    with pytest.raises(ValueError):
        comparison_walk(cfg, 4)


def test_comparison_identity_exhaustive():
    n = 4
    for code in range(3 ** (n + 3)):
        digits = [(code // 3 ** i) % 3 for i in range(n + 3)]
        cfg = ColorConfig(3, digits, Segment(-1, n + 1), 0)
        w = comparison_walk(cfg, n)
        for m in range(n + 1):
            t = tuple(digits[m:m + 3])
            corr = (t == (1, 2, 0)) - 2 * (t == (0, 2, 1))
            assert w.s_cal[m] == w.s_prime[m] + corr
            assert (w.s_cal[m] - w.s_cal[0]) % 3 == (digits[m + 1] - digits[1]) % 3
            lift = w.s_cal[m] == -1 and t == (0, 2, 1)
            assert w.s_cal_prime[m] == w.s_cal[m] + lift


# ---------------------------------------------------------------- covariances

def test_covariances_match_reference_values():
    for k, expected in enumerate(COVARIANCES_WINDOW):
        assert covariance_exact(3, 1, 1, k) == expected


def test_covariances_vanish_beyond_window():
    assert covariance_exact(3, 1, 1, 4) == 0
    assert covariance_exact(3, 1, 1, 12) == 0
    with pytest.raises(ValueError):
        covariance_exact(3, 1, 1, 13)


def test_gamma_squared_both_variants():
    assert gamma_squared(3, "window") == GAMMA_SQUARED
    assert gamma_squared(3, "triple") == GAMMA_SQUARED
    assert covariance_exact_triples(0) == Fraction(8, 9)
    assert covariance_exact_triples(1) == Fraction(-2, 9)
    assert covariance_exact_triples(2) == Fraction(-2, 27)


def test_gamma_squared_monte_carlo():
    # block-sum variance of the full-line increments approaches 8/27
    rng = substream(55, 0)
    block, blocks = 256, 4000
    colors = rng.integers(0, 3, size=block * blocks + 3, dtype=np.uint8)
    cfg = ColorConfig(3, colors, Segment(0, colors.size - 1), 0)
    form = one_form(simulate(cfg, "fca", 1).final)
    sums = form.values.astype(np.int64)[:block * blocks].reshape(blocks, block).sum(axis=1)
    est = sums.var() / block
    se = math.sqrt(2.0 / blocks) * est
    assert abs(est - float(GAMMA_SQUARED)) <= 3 * se + 0.01


# ---------------------------------------------------------------- Sparre Andersen

def test_sa_constant_pm1():
    sa = sa_constant([-1, 1], [0.5, 0.5])
    assert abs(sa.e_minus_c - math.sqrt(2)) < 1e-3
    assert sa.tail_bound > 0 and sa.k_hat > 0


def test_sa_terms_vanish_when_p_half():
    # odd partial sums of the +-1 walk are never 0, so P(S_n > 0) = 1/2
    # exactly and those terms contribute nothing to the series
    dist = np.array([0.5, 0.0, 0.5])
    probs = np.array([1.0])
    for n in range(1, 9):
        probs = np.convolve(probs, dist)
        if n % 2 == 1:
            off = (len(probs) - 1) // 2
            p_pos = probs[off + 1:].sum()
            assert abs(p_pos - 0.5) < 1e-15


def test_sa_rejects_nonzero_mean():
    with pytest.raises(ValueError):
        sa_constant([-1, 2], [0.5, 0.5])


def test_survival_series_pm1_asymptotics():
    q = survival_series([-1, 1], [0.5, 0.5], 0, 10000)
    ratio = q[-1] * math.sqrt(math.pi * 10000) / math.sqrt(2)
    assert 0.99 <= ratio <= 1.01
    assert (np.diff(q) <= 1e-15).all()          # nonincreasing in t
    q0 = survival_series([-1, 1], [0.5, 0.5], 0, 200)
    q1 = survival_series([-1, 1], [0.5, 0.5], 1, 200)
    q2 = survival_series([-1, 1], [0.5, 0.5], 2, 200)
    assert (q0 <= q1 + 1e-15).all() and (q1 <= q2 + 1e-15).all()


def _chunk_distribution():
    # empirical chunk-sum law (planted buffers); the domination inequality
    # holds for any i.i.d. integer walk, mean zero or not
    zetas = []
    for seed in range(30):
        part = chunk_partition(planted_window(seed), c=6)
        zetas.extend(part.zeta)
    values, counts = np.unique(np.array(zetas), return_counts=True)
    return values, counts / counts.sum()


def test_generating_function_domination():
    # Q~_x(u) <= (x+1) Q~_0(u) with truncation bounds folded in
    for values, probs, T in (([-1, 1], [0.5, 0.5], 3000),
                             (*_chunk_distribution(), 1500)):
        series = {x: survival_series(values, probs, x, T) for x in (0, 1, 2, 3)}
        for u in (0.9, 0.99):
            lo0, _ = q_tilde_bounds(series[0], u)
            for x in (1, 2, 3):
                _, hi = q_tilde_bounds(series[x], u)
                assert hi <= (x + 1) * lo0 + 1e-9


# ---------------------------------------------------------------- survival MC

def test_survival_exhaustive_small():
    # frozen from the automaton enumeration oracle: the walk-definition
    # route reproduces the same exact rationals, a third independent path
    assert survival_exhaustive(1) == Fraction(220, 729)
    assert survival_exhaustive(2) == Fraction(460, 2187)
    assert survival_exhaustive(3) == Fraction(1100, 6561)
    assert survival_exhaustive(4) == Fraction(76388, 531441)


def test_survival_mc_tau0_and_tau3_match_exhaustive():
    exact0 = float(survival_exhaustive(0))
    est0, se0 = survival_mc(0, 40000, seed=6)
    assert abs(est0 - exact0) <= 3 * se0
    exact3 = float(survival_exhaustive(3))
    est3, se3 = survival_mc(3, 60000, seed=8)
    assert abs(est3 - exact3) <= 3 * se3


def test_survival_mc_rejects_zero_trials():
    with pytest.raises(ValueError):
        survival_mc(3, 0, seed=1)


def test_survival_mc_large_tau_matches_dp():
    # the estimator is unbiased for the exact walk-survival probability,
    # which the table DP computes (oracle-verified); tau = 3000 probes the
    # early-termination path at scale
    from fcalab.solver import build_qtable, disagreement_exact
    tables = build_qtable(6000, mode="float", keep_rows=False)
    exact = float(disagreement_exact(3000, tables))
    est, se = survival_mc(3000, 10 ** 6, seed=14)
    assert abs(est - exact) <= 3 * se
    assert math.sqrt(3 * 3000) * est == pytest.approx(
        math.sqrt(3 * 3000) * exact, rel=0.06)
