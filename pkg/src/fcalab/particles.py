"""Labeled edge-particle expansion of a firefly trajectory on a cycle.

Each edge carries a single-direction FIFO queue of unit particles whose
signed count reproduces the associated 1-form. Bottom particles are
released when their driving endpoint blinks, annihilate against opposing
bottoms they would meet, and otherwise join the top of the target queue.
The expansion is only valid once no edge flips; stepping across a flip
raises instead of silently relabeling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import ColorConfig, Cycle, OneForm, Segment, blink_color, step_fca

__all__ = [
    "Particle",
    "ParticleField",
    "FlipError",
    "init_particles",
    "advance_queues",
    "step_particles",
    "check_consistency",
    "trace",
    "trace_dump_rows",
    "TRACE_HEADER",
    "survival_criterion_k3",
]

RIGHT, LEFT = 1, -1
_DIR_NAME = {RIGHT: "right", LEFT: "left"}


class FlipError(ValueError):
    """An edge flip occurred while the expansion assumed the no-flip regime."""


@dataclass(frozen=True)
class Particle:
    label: int
    direction: str            # "right" | "left"
    edge: int | None          # None once annihilated
    height: int | None

    @property
    def in_graveyard(self) -> bool:
        return self.edge is None


class ParticleField:
    """Particle state at one time; `step_particles` maps old field to new."""

    def __init__(self, kappa: int, geometry: Cycle, time_stamp: int, anchor_time: int,
                 queues: list[list[int]], dirs: dict[int, int],
                 history: dict[int, list[tuple]] | None):
        self.kappa = kappa
        self.geometry = geometry
        self.time_stamp = time_stamp
        self.anchor_time = anchor_time
        self._queues = queues
        self._dirs = dirs
        self._history = history
        self._state: dict[int, tuple[int, int] | None] = {lab: None for lab in dirs}
        for e, q in enumerate(queues):
            for h, lab in enumerate(q, start=1):
                self._state[lab] = (e, h)
        m = kappa // 2
        for e, q in enumerate(queues):
            if len(q) > m:
                raise ValueError(f"queue on edge {e} exceeds height bound {m}")
            if len({self._dirs[lab] for lab in q}) > 1:
                raise ValueError(f"edge {e} mixes particle directions")

    # -- views ------------------------------------------------------------

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted(self._dirs))

    def particle(self, label: int) -> Particle:
        if label not in self._dirs:
            raise KeyError(f"unknown particle label {label}")
        st = self._state[label]
        if st is None:
            return Particle(label, _DIR_NAME[self._dirs[label]], None, None)
        return Particle(label, _DIR_NAME[self._dirs[label]], st[0], st[1])

    def queue(self, edge: int) -> tuple[int, ...]:
        return tuple(self._queues[edge % self.geometry.length])

    def signed_counts(self) -> np.ndarray:
        """Per-edge (#right - #left)."""
        out = np.zeros(self.geometry.length, dtype=np.int64)
        for e, q in enumerate(self._queues):
            if q:
                out[e] = self._dirs[q[0]] * len(q)
        return out

    @property
    def alive(self) -> tuple[int, ...]:
        return tuple(lab for lab, st in self._state.items() if st is not None)


def init_particles(form: OneForm, track_history: bool = False) -> ParticleField:
    """Stack |dX| particles per edge, labels enumerated left-to-right, bottom-up."""
    if not isinstance(form.geometry, Cycle):
        raise ValueError("particle expansion is implemented on cycles")
    L = form.geometry.length
    queues: list[list[int]] = [[] for _ in range(L)]
    dirs: dict[int, int] = {}
    label = 0
    for e in range(L):
        v = int(form.values[e])
        d = RIGHT if v > 0 else LEFT
        for _ in range(abs(v)):
            queues[e].append(label)
            dirs[label] = d
            label += 1
    history = None
    if track_history:
        history = {lab: [] for lab in dirs}
        for e, q in enumerate(queues):
            for h, lab in enumerate(q, start=1):
                history[lab].append((form.time_stamp, e, h))
    return ParticleField(form.kappa, form.geometry, form.time_stamp,
                         form.time_stamp, queues, dirs, history)


def _bottom_fate(e: int, d: int, blink, occ, L: int) -> str:
    """Fate of the bottom particle of the queue on edge e: die/stay/move.

    occ[e] is +1/-1/0 for a right/left/empty queue. A bottom dies against an
    opposing bottom on the adjacent edge when either is released, or against
    one two edges away when both are released into the vacant edge between.
    """
    if d == RIGHT:
        adj, far, mid = (e + 1) % L, (e + 2) % L, (e + 1) % L
        rel = blink[e]
        adj_rel, far_rel = blink[(e + 2) % L], blink[(e + 3) % L]
    else:
        adj, far, mid = (e - 1) % L, (e - 2) % L, (e - 1) % L
        rel = blink[(e + 1) % L]
        adj_rel, far_rel = blink[(e - 1) % L], blink[(e - 2) % L]
    if occ[adj] == -d and (adj_rel or rel):
        return "die"
    if occ[far] == -d and rel and far_rel and occ[mid] == 0:
        return "die"
    if not rel:
        return "stay"
    return "move"


def advance_queues(queues: list[list[int]], dirs: dict[int, int], blink) -> list[list[int]]:
    """One raw queue update on a length-L cycle; blink is a per-site bool row.

    Low-level core shared by `step_particles` and the batch co-simulation
    oracles; performs no flip detection of its own.
    """
    L = len(queues)
    occ = [dirs[q[0]] if q else 0 for q in queues]
    new: list[list[int]] = [list(q) for q in queues]
    moved: list[tuple[int, int]] = []
    for e in range(L):
        q = queues[e]
        if not q:
            continue
        d = occ[e]
        fate = _bottom_fate(e, d, blink, occ, L)
        if fate == "stay":
            continue
        bottom = new[e].pop(0)
        if fate == "move":
            moved.append(((e + d) % L, bottom))
    seen = set()
    for target, lab in moved:
        if target in seen:
            raise AssertionError("two arrivals on one edge in one step")
        seen.add(target)
        if new[target] and dirs[new[target][0]] != dirs[lab]:
            raise FlipError(f"arrival into opposing queue on edge {target}")
        new[target].append(lab)
    return new


def step_particles(field: ParticleField, config: ColorConfig) -> ParticleField:
    """One particle update driven by the colors at the same time."""
    if config.time_stamp != field.time_stamp:
        raise ValueError("config and field time stamps differ")
    if config.geometry != field.geometry or config.kappa != field.kappa:
        raise ValueError("config and field describe different lattices")
    _, rep = step_fca(config, want_report=True)
    if rep.flipped_edges:
        raise FlipError(f"edge flip at t={config.time_stamp} on edges "
                        f"{sorted(rep.flipped_edges)}")

    b = blink_color(field.kappa)
    blink = np.asarray(config.colors == b)
    queues = advance_queues(field._queues, field._dirs, blink)

    history = None
    if field._history is not None:
        history = {lab: list(h) for lab, h in field._history.items()}
        t1 = field.time_stamp + 1
        for e, q in enumerate(queues):
            for h, lab in enumerate(q, start=1):
                history[lab].append((t1, e, h))
        grave = set(field._dirs) - {lab for q in queues for lab in q}
        for lab in grave:
            prev = history[lab]
            if not prev or prev[-1][1] is not None:
                history[lab].append((t1, None, None))

    return ParticleField(field.kappa, field.geometry, field.time_stamp + 1,
                         field.anchor_time, queues, field._dirs, history)


def check_consistency(field: ParticleField, form: OneForm) -> bool:
    """True iff per-edge signed counts match the form and no queue mixes."""
    if not isinstance(form.geometry, Cycle) or form.geometry != field.geometry:
        return False
    try:
        counts = field.signed_counts()
    except ValueError:
        return False
    return bool(np.array_equal(counts, form.values.astype(np.int64)))


def trace(field: ParticleField, label: int) -> tuple[tuple, ...]:
    """Recorded (time, edge, height) states of one particle; edge None = grave."""
    if field._history is None:
        raise ValueError("field was built without track_history=True")
    if label not in field._dirs:
        raise KeyError(f"unknown particle label {label}")
    return tuple(field._history[label])


TRACE_HEADER = "label,time,edge,height,direction"


def trace_dump_rows(field: ParticleField) -> list[tuple]:
    """Recorded history as CSV rows: label,time,edge,height,direction|grave."""
    rows = []
    for lab in field.labels:
        d = _DIR_NAME[field._dirs[lab]]
        for (t, e, h) in trace(field, lab):
            if e is None:
                rows.append((lab, t, "", "", "grave"))
            else:
                rows.append((lab, t, e, h, d))
    return rows


def survival_criterion_k3(form: OneForm, tau: int) -> bool:
    """Partial-sum survival test for a right particle crossing tau edges.

    For kappa=3 and a flip-free form at time a, a right particle on the edge
    (-tau, -tau+1) sits on (0, 1) at time a+3*tau exactly when every partial
    sum of the form over edges (-tau+1, ..) through (-tau+k, ..) is
    nonnegative, k = 1..2*tau.
    """
    if form.kappa != 3:
        raise ValueError("criterion is specific to kappa=3")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0:
        return True
    if not isinstance(form.geometry, Segment):
        raise ValueError("windowed form expected (segment geometry)")
    lo, hi = form.geometry.lo, form.geometry.hi
    if lo > -tau + 1 or hi - 1 < tau:
        raise ValueError("window too small: need edges -tau+1 .. tau")
    i0 = (-tau + 1) - lo
    sums = np.cumsum(form.values[i0:i0 + 2 * tau].astype(np.int64))
    return bool((sums >= 0).all())
