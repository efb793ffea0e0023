from __future__ import annotations

import numpy as np
import pytest

from fcalab.lattice import ColorConfig, Cycle, Segment, one_form, simulate, step_fca
from fcalab.particles import (FlipError, check_consistency, init_particles,
                              step_particles, survival_criterion_k3, trace)
from fcalab.walks import flip_free_env

from conftest import random_cycle


def burned(kappa: int, length: int, seed: int) -> ColorConfig:
    t0 = kappa // 2 if kappa % 2 else 5 * kappa
    return simulate(random_cycle(kappa, length, seed), "fca", t0).final


def co_simulate(cfg: ColorConfig, steps: int, track=False):
    """Run queues beside the trajectory, asserting form equality throughout."""
    field = init_particles(one_form(cfg), track_history=track)
    for _ in range(steps):
        field = step_particles(field, cfg)
        cfg = step_fca(cfg, want_report=False)[0]
        assert check_consistency(field, one_form(cfg))
    return field, cfg


# ---------------------------------------------------------------- init

def test_init_empty_for_flat_form():
    cfg = ColorConfig(4, [2, 2, 2, 2, 2], Cycle(5))
    field = init_particles(one_form(cfg))
    assert field.labels == ()
    assert (field.signed_counts() == 0).all()


def test_init_stacks_and_labels():
    # one edge with value +2, one with -1
    cfg = ColorConfig(6, [0, 2, 2, 1, 2, 0], Cycle(6), 0)
    form = one_form(cfg)
    field = init_particles(form)
    assert check_consistency(field, form)
    stacked = [e for e in range(6) if abs(int(form.values[e])) == 2]
    for e in stacked:
        q = field.queue(e)
        assert len(q) == 2
        p0, p1 = field.particle(q[0]), field.particle(q[1])
        assert (p0.height, p1.height) == (1, 2)
        assert p0.direction == p1.direction
    # deterministic enumeration: left-to-right, bottom-to-top
    labels = [lab for e in range(6) for lab in field.queue(e)]
    assert labels == sorted(labels)


# ---------------------------------------------------------------- scenarios

def blinker_stack_config(star: int) -> ColorConfig:
    # sites 0..3 = (2, 4, 4, star), padded left so nothing interferes
    return ColorConfig(6, [2, 4, 4, star, 5, 5, 5, 4, 3, 2, 1, 2], Cycle(12), 0)


def test_scenario_release_onto_vacant_edge():
    cfg = blinker_stack_config(star=4)
    form = one_form(cfg)
    assert int(form.values[0]) == 2 and int(form.values[1]) == 0
    field = init_particles(form)
    bottom, top = field.queue(0)
    new = step_particles(field, cfg)
    assert new.particle(bottom).edge == 1 and new.particle(bottom).height == 1
    assert new.particle(top).edge == 0 and new.particle(top).height == 1


def test_scenario_two_edge_gap_annihilation():
    cfg = blinker_stack_config(star=2)
    form = one_form(cfg)
    assert int(form.values[2]) < 0
    field = init_particles(form)
    r_bottom = field.queue(0)[0]
    l_bottom = field.queue(2)[0]
    new = step_particles(field, cfg)
    assert new.particle(r_bottom).in_graveyard
    assert new.particle(l_bottom).in_graveyard


def test_scenario_queue_join():
    # released bottom joins the top of the same-direction queue ahead
    cfg = ColorConfig(6, [2, 4, 5, 5, 5, 4, 3, 2, 1, 2, 3, 4], Cycle(12), 0)
    form = one_form(cfg)
    assert int(form.values[0]) == 2 and int(form.values[1]) == 1
    field = init_particles(form)
    mover = field.queue(0)[0]
    sitter = field.queue(1)[0]
    new = step_particles(field, cfg)
    assert new.particle(mover).edge == 1 and new.particle(mover).height == 2
    assert new.particle(sitter).edge == 1 and new.particle(sitter).height == 1


# ---------------------------------------------------------------- consistency

def test_consistency_k5_long_run():
    for seed in range(5):
        cfg = burned(5, 18, seed)
        co_simulate(cfg, 200)


def test_consistency_k6_long_run():
    for seed in range(5):
        cfg = burned(6, 18, seed)
        co_simulate(cfg, 300)


def test_consistency_immediately_after_init():
    for kappa in (3, 4, 7, 8):
        cfg = burned(kappa, 16, 13)
        field = init_particles(one_form(cfg))
        assert check_consistency(field, one_form(cfg))


def test_count_parity_invariant_and_absorbing_grave():
    cfg = burned(6, 20, 3)
    field = init_particles(one_form(cfg))
    net = int(field.signed_counts().sum())
    dead = set()
    for _ in range(120):
        field = step_particles(field, cfg)
        cfg = step_fca(cfg, want_report=False)[0]
        assert int(field.signed_counts().sum()) == net
        now_dead = {lab for lab in field.labels
                    if field.particle(lab).in_graveyard}
        assert dead <= now_dead
        dead = now_dead


def test_queue_direction_purity():
    for seed in range(8):
        cfg = burned(4, 16, seed)
        field = init_particles(one_form(cfg))
        for _ in range(80):
            field = step_particles(field, cfg)
            cfg = step_fca(cfg, want_report=False)[0]
            for e in range(16):
                q = field.queue(e)
                dirs = {field.particle(lab).direction for lab in q}
                assert len(dirs) <= 1
                heights = [field.particle(lab).height for lab in q]
                assert heights == list(range(1, len(q) + 1))


def test_step_refuses_flips():
    # flipping triple 120 at time 0 for kappa=3
    cfg = ColorConfig(3, [1, 2, 0, 1, 1, 1], Cycle(6), 0)
    field = init_particles(one_form(cfg))
    with pytest.raises(FlipError):
        step_particles(field, cfg)


def test_step_validates_time_alignment():
    cfg = burned(5, 12, 0)
    field = init_particles(one_form(cfg))
    wrong = ColorConfig(5, cfg.colors, cfg.geometry, cfg.time_stamp + 1)
    with pytest.raises(ValueError):
        step_particles(field, wrong)


# ---------------------------------------------------------------- traces

def test_trace_k3_moves_every_3_steps():
    moved_checked = 0
    for seed in range(12):
        cfg = burned(3, 15, seed)
        field, _ = co_simulate(cfg, 90, track=True)
        for lab in field.labels:
            hist = trace(field, lab)
            moves = [t for (t, e, h), (t2, e2, h2) in zip(hist, hist[1:])
                     if e2 is not None and e2 != e]
            gaps = np.diff(moves)
            if gaps.size:
                moved_checked += 1
                assert (gaps == 3).all()
    assert moved_checked > 3


def test_trace_gap_bounds_general_kappa():
    b_plus_2, cap = 2 + 2, 3 * 7  # kappa = 6: b+2 = 4, floor(k/2)(k+1) = 21
    for seed in range(6):
        cfg = burned(6, 14, seed)
        field, _ = co_simulate(cfg, 150, track=True)
        for lab in field.labels:
            hist = trace(field, lab)
            moves = [t for (t, e, h), (t2, e2, h2) in zip(hist, hist[1:])
                     if e2 is not None and e2 != e]
            for g in np.diff(moves):
                assert b_plus_2 <= g <= cap


def test_trace_dead_particle_never_moves_after_grave():
    deaths = 0
    for seed in range(8):
        cfg = burned(6, 14, seed)
        field, _ = co_simulate(cfg, 150, track=True)
        for lab in field.labels:
            hist = trace(field, lab)
            seen_grave = False
            for (t, e, h) in hist:
                if seen_grave:
                    raise AssertionError("state recorded after graveyard")
                if e is None:
                    seen_grave = True
            deaths += seen_grave
    assert deaths > 0


def test_trace_dump_rows():
    from fcalab.particles import TRACE_HEADER, trace_dump_rows
    cfg = burned(5, 12, 4)
    field, _ = co_simulate(cfg, 30, track=True)
    rows = trace_dump_rows(field)
    assert TRACE_HEADER == "label,time,edge,height,direction"
    assert rows, "expected at least one recorded state"
    for lab, t, e, h, d in rows:
        assert d in ("left", "right", "grave")
        assert (e == "" and h == "" and d == "grave") or (0 <= e < 12 and h >= 1)


def test_trace_unknown_label():
    cfg = burned(5, 12, 1)
    field = init_particles(one_form(cfg), track_history=True)
    with pytest.raises(KeyError):
        trace(field, 10 ** 6)
    plain = init_particles(one_form(cfg))
    with pytest.raises(ValueError):
        trace(plain, 0)


# ---------------------------------------------------------------- survival criterion

def test_survival_criterion_trivial_cases():
    cfg = ColorConfig(3, np.zeros(9, np.uint8), Segment(-4, 4), 0)
    form = one_form(cfg)
    assert survival_criterion_k3(form, 0) is True
    # all-zero partial sums survive
    assert survival_criterion_k3(form, 3) is True
    with pytest.raises(ValueError):
        survival_criterion_k3(form, 5)  # window too small


def _criterion_vs_simulation(tau: int):
    """Exhaustively check the partial-sum test against labeled dynamics."""
    pad = 3 * tau + 2
    n = 2 * tau + 2
    mismatches = 0
    cases = 0
    for code in range(3 ** n):
        w = [(code // 3 ** i) % 3 for i in range(n)]
        # flip-free environment on a padded cycle; padding replicates the
        # window edges so no new flipping triple appears at the seams
        colors = [w[0]] * pad + w + [w[-1]] * pad
        L = len(colors)
        cfg = flip_free_env(ColorConfig(3, colors, Cycle(L), 0))
        form = one_form(cfg)
        start_edge = pad + tau - 1   # edge (-tau, -tau+1) if site -tau+...
        # relabel: window site w[i] sits at index pad+i = site -tau+i... use
        # site s -> index pad + (s + tau); edge (s, s+1) -> index of s
        def edge_index(s):
            return pad + s + tau
        if int(form.values[edge_index(-tau)]) != 1:
            continue  # no right particle on the starting edge
        cases += 1
        seg_vals = form.values[edge_index(-tau):edge_index(tau) + 1]
        seg = type(form)(3, seg_vals, Segment(-tau, tau + 1), 0)
        predicted = survival_criterion_k3(seg, tau)
        field = init_particles(form, track_history=False)
        lab = field.queue(edge_index(-tau))[0]
        run = cfg
        for _ in range(3 * tau):
            field = step_particles(field, run)
            run = step_fca(run, want_report=False)[0]
        p = field.particle(lab)
        actual = (not p.in_graveyard) and p.edge == edge_index(0)
        mismatches += predicted != actual
    assert cases > 0
    assert mismatches == 0


def test_survival_criterion_exhaustive_tau2():
    _criterion_vs_simulation(2)


def test_survival_criterion_exhaustive_tau3():
    _criterion_vs_simulation(3)


def test_partial_sum_lower_bound_general_kappa():
    # one-sided necessary condition: a right particle that crosses to a
    # given edge kept every partial sum above -floor(kappa/2)+1 behind it
    kappa = 5
    floor_bound = -(kappa // 2) + 1
    span = (kappa // 2) * (kappa + 1)
    checked = 0
    for seed in range(30):
        cfg = burned(kappa, 20, seed)
        form0 = one_form(cfg)
        field = init_particles(form0, track_history=True)
        steps = 60
        run = cfg
        for _ in range(steps):
            field = step_particles(field, run)
            run = step_fca(run, want_report=False)[0]
        for lab in field.labels:
            p = field.particle(lab)
            if p.in_graveyard or p.direction != "right":
                continue
            hist = trace(field, lab)
            e0 = hist[0][1]
            crossed = (p.edge - e0) % 20
            k_max = min(steps // span, crossed and 2 * crossed or 0)
            if k_max < 1:
                continue
            checked += 1
            vals = [int(form0.values[(e0 + 1 + i) % 20]) for i in range(k_max)]
            sums = np.cumsum(vals)
            assert (sums >= floor_bound).all()
    assert checked > 0
