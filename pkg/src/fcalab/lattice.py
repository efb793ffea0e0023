"""One-dimensional kappa-color lattice configurations and update rules.

The three update rules (firefly, Greenberg-Hastings, cyclic) act on
finite windows of Z: either a cycle of length L, which is exact for every
single-edge marginal as long as light cones cannot wrap, or an explicit
segment [lo, hi], which steps to the shrunken segment [lo+1, hi-1] so
that every stored value equals the infinite-lattice value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Cycle",
    "Segment",
    "ColorConfig",
    "OneForm",
    "StepReport",
    "Ranking",
    "SimulationResult",
    "blink_color",
    "step_fca",
    "step_ghm",
    "step_cca",
    "one_form",
    "path_integral",
    "simulate",
    "light_cone_window",
    "ranking_from_form",
    "tournament_step",
    "max_rank",
    "format_colors",
]

RULES = ("fca", "ghm", "cca")


def blink_color(kappa: int) -> int:
    """The distinguished inhibiting color floor((kappa-1)/2)."""
    if not isinstance(kappa, (int, np.integer)) or kappa < 3:
        raise ValueError(f"kappa must be an integer >= 3, got {kappa!r}")
    return (kappa - 1) // 2


# --------------------------------------------------------------------------
# Geometry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Cycle:
    length: int

    def __post_init__(self):
        if self.length < 3:
            raise ValueError("cycle length must be >= 3")

    @property
    def n_sites(self) -> int:
        return self.length

    @property
    def sites(self) -> range:
        return range(self.length)

    def index(self, site: int) -> int:
        return site % self.length


@dataclass(frozen=True)
class Segment:
    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError("segment needs hi >= lo")

    @property
    def n_sites(self) -> int:
        return self.hi - self.lo + 1

    @property
    def sites(self) -> range:
        return range(self.lo, self.hi + 1)

    def index(self, site: int) -> int:
        if not self.lo <= site <= self.hi:
            raise ValueError(f"site {site} outside segment [{self.lo}, {self.hi}]")
        return site - self.lo


Geometry = Cycle | Segment


# --------------------------------------------------------------------------
# Core value types
# --------------------------------------------------------------------------

def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ColorConfig:
    """A window of mod-kappa colors at a fixed time."""

    kappa: int
    colors: np.ndarray
    geometry: Geometry
    time_stamp: int = 0

    def __post_init__(self):
        blink_color(self.kappa)  # validates kappa
        arr = _frozen_array(self.colors, np.uint8)
        object.__setattr__(self, "colors", arr)
        if arr.ndim != 1 or arr.size != self.geometry.n_sites:
            raise ValueError("colors must be one value per geometry site")
        if arr.size and int(arr.max()) >= self.kappa:
            raise ValueError("colors must lie in [0, kappa-1]")
        if self.time_stamp < 0:
            raise ValueError("time_stamp must be >= 0")

    def color_at(self, site: int) -> int:
        return int(self.colors[self.geometry.index(site)])

    @property
    def blink(self) -> int:
        return blink_color(self.kappa)


@dataclass(frozen=True)
class OneForm:
    """Signed per-edge color differences in [-floor(kappa/2), floor(kappa/2)].

    values[i] is the difference across the oriented edge (x, x+1) where x is
    the i-th edge label; the reverse orientation is the negation.
    """

    kappa: int
    values: np.ndarray
    geometry: Geometry
    time_stamp: int = 0

    def __post_init__(self):
        arr = _frozen_array(self.values, np.int8)
        object.__setattr__(self, "values", arr)
        m = self.kappa // 2
        n_edges = self.geometry.n_sites if isinstance(self.geometry, Cycle) \
            else self.geometry.n_sites - 1
        if arr.size != n_edges:
            raise ValueError("one value per oriented edge expected")
        if arr.size and int(np.abs(arr).max()) > m:
            raise ValueError("edge values must lie in [-floor(kappa/2), floor(kappa/2)]")

    @property
    def edges(self) -> range:
        if isinstance(self.geometry, Cycle):
            return range(self.geometry.length)
        return range(self.geometry.lo, self.geometry.hi)

    def edge_index(self, x: int) -> int:
        if isinstance(self.geometry, Cycle):
            return x % self.geometry.length
        if not self.geometry.lo <= x <= self.geometry.hi - 1:
            raise ValueError(f"edge ({x},{x+1}) outside {self.geometry}")
        return x - self.geometry.lo

    def value(self, u: int, v: int) -> int:
        """dX(u, v) for adjacent sites u, v; antisymmetric in its arguments."""
        if v == u + 1:
            return int(self.values[self.edge_index(u)])
        if u == v + 1:
            return -int(self.values[self.edge_index(v)])
        if isinstance(self.geometry, Cycle):
            L = self.geometry.length
            if (v - u) % L == 1:
                return int(self.values[self.edge_index(u)])
            if (u - v) % L == 1:
                return -int(self.values[self.edge_index(v)])
        raise ValueError(f"sites {u}, {v} are not adjacent")


@dataclass(frozen=True)
class StepReport:
    """What happened across one update: who blinked, who froze, what flipped."""

    excited: frozenset
    blinking: frozenset
    flipped_edges: frozenset


@dataclass(frozen=True)
class Ranking:
    """Integer site ranks whose edge differences are the negated one-form.

    ranks[i] is the rank of the i-th geometry site; the designated origin
    carries the origin's running excitation count.
    """

    ranks: np.ndarray
    origin: int
    geometry: Geometry
    time_stamp: int = 0

    def __post_init__(self):
        arr = _frozen_array(self.ranks, np.int64)
        object.__setattr__(self, "ranks", arr)
        if arr.size != self.geometry.n_sites:
            raise ValueError("one rank per geometry site expected")
        self.geometry.index(self.origin)  # origin must be inside

    @property
    def ne_origin(self) -> int:
        return int(self.ranks[self.geometry.index(self.origin)])

    def rank_at(self, site: int) -> int:
        return int(self.ranks[self.geometry.index(site)])


@dataclass(frozen=True)
class SimulationResult:
    final: ColorConfig
    reports: tuple[StepReport, ...] | None
    last_flip_time: int | None


# --------------------------------------------------------------------------
# The associated one-form
# --------------------------------------------------------------------------

def _one_form_values(left: np.ndarray, right: np.ndarray, kappa: int) -> np.ndarray:
    """Map mod-kappa differences right-left into [-m, m] with the even tie rule."""
    m = kappa // 2
    diff = (right.astype(np.int16) - left.astype(np.int16)) % kappa
    out = np.where(diff > m, diff - kappa, diff)
    if kappa == 2 * m:
        # |difference| == m is ambiguous: positive when the left endpoint is
        # in [0, b(kappa)], negative when the right endpoint is.
        tie = diff == m
        out = np.where(tie & (left > blink_color(kappa)), -m, out)
    return out.astype(np.int8)


def one_form(config: ColorConfig) -> OneForm:
    """The associated 1-form of a configuration."""
    c = config.colors
    if isinstance(config.geometry, Cycle):
        left, right = c, np.roll(c, -1)
    else:
        left, right = c[:-1], c[1:]
    return OneForm(config.kappa, _one_form_values(left, right, config.kappa),
                   config.geometry, config.time_stamp)


def path_integral(form: OneForm, x: int, y: int, direction: str | None = None) -> int:
    """Sum of the form over the directed walk from site x to site y.

    On a segment the walk is unique. On a cycle pass direction "right" or
    "left" (the sum generally depends on it because the integer total around
    the cycle need not vanish).
    """
    vals = form.values.astype(np.int64)
    if isinstance(form.geometry, Segment):
        form.geometry.index(x)
        form.geometry.index(y)
        off = form.geometry.lo
        if y >= x:
            return int(vals[x - off:y - off].sum())
        return -int(vals[y - off:x - off].sum())
    L = form.geometry.length
    x %= L
    y %= L
    if x == y:
        return 0
    if direction not in ("right", "left"):
        raise ValueError("cycle path integral needs direction 'right' or 'left'")
    if direction == "right":
        if y > x:
            return int(vals[x:y].sum())
        return int(vals[x:].sum() + vals[:y].sum())
    if y < x:
        return -int(vals[y:x].sum())
    return -int(vals[:x].sum() + vals[y:].sum())


# --------------------------------------------------------------------------
# Update rules
# --------------------------------------------------------------------------

def _neighbors(c: np.ndarray, geometry: Geometry) -> tuple[np.ndarray, np.ndarray]:
    """(left, right) neighbor colors; on a segment only interior entries."""
    if isinstance(geometry, Cycle):
        return np.roll(c, 1), np.roll(c, -1)
    return c[:-2], c[2:]


def _step_colors(config: ColorConfig, rule: str) -> tuple[np.ndarray, np.ndarray]:
    """New colors and excitation mask; on a segment both cover the interior."""
    kappa, c = config.kappa, config.colors
    b = blink_color(kappa)
    lnb, rnb = _neighbors(c, config.geometry)
    mid = c if isinstance(config.geometry, Cycle) else c[1:-1]
    inc = mid + np.uint8(1)
    inc = np.where(inc == kappa, np.uint8(0), inc)
    if rule == "fca":
        excited = (mid > b) & ((lnb == b) | (rnb == b))
        new = np.where(excited, mid, inc)
    elif rule == "ghm":
        fired = (mid == 0) & ((lnb == 1) | (rnb == 1))
        new = np.where(mid == 0, np.where(fired, np.uint8(1), np.uint8(0)), inc)
        excited = fired
    elif rule == "cca":
        eaten = (lnb == inc) | (rnb == inc)
        new = np.where(eaten, inc, mid)
        excited = eaten
    else:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
    return new.astype(np.uint8), excited


def _flipped_edges(before: OneForm, after: OneForm) -> frozenset:
    """Edges whose form value changed sign across the step (both nonzero)."""
    if isinstance(before.geometry, Cycle):
        b = before.values.astype(np.int16)
        a = after.values.astype(np.int16)
        edge0 = 0
    else:
        # after covers [lo+1, hi-1]; compare on its edges only
        b = before.values[1:-1].astype(np.int16)
        a = after.values.astype(np.int16)
        edge0 = after.geometry.lo
    mask = b * a < 0
    return frozenset(int(i) + edge0 for i in np.flatnonzero(mask))


def _step(config: ColorConfig, rule: str, want_report: bool) -> tuple[ColorConfig, StepReport | None]:
    geo = config.geometry
    if isinstance(geo, Segment) and geo.n_sites < 3:
        raise ValueError("segment too short to step (needs >= 3 sites)")
    new, excited = _step_colors(config, rule)
    new_geo = geo if isinstance(geo, Cycle) else Segment(geo.lo + 1, geo.hi - 1)
    out = ColorConfig(config.kappa, new, new_geo, config.time_stamp + 1)
    if not want_report:
        return out, None
    b = blink_color(config.kappa)
    site0 = 0 if isinstance(geo, Cycle) else geo.lo
    blinking = frozenset(site0 + int(i) for i in np.flatnonzero(config.colors == b))
    exc0 = site0 if isinstance(geo, Cycle) else geo.lo + 1
    excited_set = frozenset(exc0 + int(i) for i in np.flatnonzero(excited))
    flipped = _flipped_edges(one_form(config), one_form(out))
    return out, StepReport(excited_set, blinking, flipped)


def step_fca(config: ColorConfig, want_report: bool = True):
    """One firefly update: post-blinking sites beside a blinker keep their color."""
    return _step(config, "fca", want_report)


def step_ghm(config: ColorConfig, want_report: bool = True):
    """One Greenberg-Hastings update."""
    return _step(config, "ghm", want_report)


def step_cca(config: ColorConfig, want_report: bool = True):
    """One cyclic-automaton update."""
    return _step(config, "cca", want_report)


_STEPPERS = {"fca": step_fca, "ghm": step_ghm, "cca": step_cca}


def simulate(config: ColorConfig, rule: str = "fca", steps: int = 0,
             collect_reports: bool = False,
             report_cb: Callable[[int, StepReport], None] | None = None) -> SimulationResult:
    """Run `steps` updates. Deterministic: same input, same output.

    Reports are produced only when collected or streamed to a callback,
    so long runs stay O(window) in memory. The time of the last observed
    edge flip is tracked either way (None when reports were never built).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
    stepper = _STEPPERS[rule]
    want = collect_reports or report_cb is not None
    reports: list[StepReport] = []
    last_flip = None
    cur = config
    for _ in range(steps):
        t = cur.time_stamp
        cur, rep = stepper(cur, want_report=want)
        if rep is not None:
            if rep.flipped_edges:
                last_flip = t
            if report_cb is not None:
                report_cb(t, rep)
            if collect_reports:
                reports.append(rep)
    return SimulationResult(cur, tuple(reports) if collect_reports else None,
                            last_flip if want else None)


def light_cone_window(targets: tuple[int, int], t: int) -> tuple[int, int]:
    """Initial segment [a-t, b+t] that determines sites [a, b] after t steps."""
    a, b = targets
    if t < 0:
        raise ValueError("t must be >= 0")
    if b < a:
        raise ValueError("target interval needs b >= a")
    return (a - t, b + t)


# --------------------------------------------------------------------------
# Rankings (tournament view)
# --------------------------------------------------------------------------

def ranking_from_form(form: OneForm, origin: int, ne_origin: int) -> Ranking:
    """Ranks with rk(x+1) - rk(x) = -dX(x, x+1) and rk(origin) = ne_origin.

    On a cycle this is consistent only when the signed values sum to zero;
    ranks live most naturally on segments.
    """
    geo = form.geometry
    if isinstance(geo, Cycle):
        vals = form.values.astype(np.int64)
        if int(vals.sum()) != 0:
            raise ValueError("cycle holonomy nonzero: ranks are not well defined")
        ranks = np.zeros(geo.length, dtype=np.int64)
        ranks[1:] = -np.cumsum(vals[:-1])
        idx0 = geo.index(origin)
        ranks += ne_origin - ranks[idx0]
        return Ranking(ranks, origin, geo, form.time_stamp)
    idx0 = geo.index(origin)
    ranks = np.empty(geo.n_sites, dtype=np.int64)
    ranks[idx0] = ne_origin
    vals = form.values.astype(np.int64)
    if idx0 < geo.n_sites - 1:
        ranks[idx0 + 1:] = ne_origin - np.cumsum(vals[idx0:])
    if idx0 > 0:
        ranks[:idx0] = ne_origin + np.cumsum(vals[:idx0][::-1])[::-1]
    return Ranking(ranks, origin, geo, form.time_stamp)


def tournament_step(ranking: Ranking, config: ColorConfig) -> Ranking:
    """Advance ranks one step: a site gains 1 iff a blinking neighbor outranks it.

    Valid only past the burn-in; a detected edge flip raises.
    """
    if ranking.time_stamp != config.time_stamp:
        raise ValueError("ranking and config time stamps differ")
    if ranking.geometry != config.geometry:
        raise ValueError("ranking and config geometries differ")
    _, rep = step_fca(config, want_report=True)
    if rep.flipped_edges:
        raise ValueError(f"edge flip at t={config.time_stamp}: burn-in not elapsed "
                         f"(edges {sorted(rep.flipped_edges)})")
    b = blink_color(config.kappa)
    c, r = config.colors, ranking.ranks
    if isinstance(config.geometry, Cycle):
        lblink, rblink = np.roll(c, 1) == b, np.roll(c, -1) == b
        lrank, rrank = np.roll(r, 1), np.roll(r, -1)
        pulled = (lblink & (lrank > r)) | (rblink & (rrank > r))
        return Ranking(r + pulled, ranking.origin, config.geometry,
                       config.time_stamp + 1)
    lblink, rblink = c[:-2] == b, c[2:] == b
    mid = r[1:-1]
    pulled = (lblink & (r[:-2] > mid)) | (rblink & (r[2:] > mid))
    geo = Segment(config.geometry.lo + 1, config.geometry.hi - 1)
    geo.index(ranking.origin)  # origin must survive the shrink
    return Ranking(mid + pulled, ranking.origin, geo, config.time_stamp + 1)


def max_rank(ranking: Ranking, r: int) -> int:
    """Maximum rank over sites within distance r of the origin."""
    if r < 0:
        raise ValueError("radius must be >= 0")
    geo = ranking.geometry
    if isinstance(geo, Cycle):
        if 2 * r + 1 > geo.length:
            raise ValueError("radius exceeds cycle")
        idx = [(geo.index(ranking.origin) + d) % geo.length for d in range(-r, r + 1)]
        return int(ranking.ranks[idx].max())
    if ranking.origin - r < geo.lo or ranking.origin + r > geo.hi:
        raise ValueError("radius exceeds segment")
    i0 = geo.index(ranking.origin)
    return int(ranking.ranks[i0 - r:i0 + r + 1].max())


# --------------------------------------------------------------------------
# Trajectory dumps
# --------------------------------------------------------------------------

def format_colors(config: ColorConfig) -> str:
    """One trajectory line: digit string for kappa <= 10, else comma separated."""
    if config.kappa <= 10:
        return "".join(str(int(c)) for c in config.colors)
    return ",".join(str(int(c)) for c in config.colors)
