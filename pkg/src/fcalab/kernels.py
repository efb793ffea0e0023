"""Vectorized batch kernels for cycle lattices.

Arrays are (..., L) uint8 blocks of colors, updated along the last axis with
wraparound. These are the single-pass, branch-light kernels behind the
experiment harness; `lattice` holds the reference single-configuration
implementations and the two must agree (tested).
"""

from __future__ import annotations

import numpy as np

from .lattice import blink_color

__all__ = [
    "fca_step_batch",
    "ghm_step_batch",
    "cca_step_batch",
    "open_path_step_batch",
    "step_batch",
    "one_form_batch",
    "flip_mask",
    "edge_disagreements",
    "excited_column_fca",
    "rank_window_max",
]


def _neighbor_or(blink: np.ndarray, out: np.ndarray) -> np.ndarray:
    """out[i] = blink[i-1] | blink[i+1] with wraparound, no temporaries."""
    out[..., 1:-1] = blink[..., 2:]
    np.logical_or(out[..., 1:-1], blink[..., :-2], out=out[..., 1:-1])
    np.logical_or(blink[..., 1], blink[..., -1], out=out[..., 0])
    np.logical_or(blink[..., 0], blink[..., -2], out=out[..., -1])
    return out


def fca_step_batch(X: np.ndarray, kappa: int, return_excited: bool = False):
    b = blink_color(kappa)
    blink = X == b
    nb = _neighbor_or(blink, np.empty_like(blink))
    excited = X > b
    np.logical_and(excited, nb, out=excited)
    inc = X + np.uint8(1)
    np.subtract(inc, np.uint8(kappa), out=inc, where=inc == kappa)
    out = np.where(excited, X, inc)
    return (out, excited) if return_excited else out


def ghm_step_batch(X: np.ndarray, kappa: int, return_excited: bool = False):
    one = X == 1
    nb = _neighbor_or(one, np.empty_like(one))
    rest = X == 0
    excited = rest & nb
    inc = X + np.uint8(1)
    np.subtract(inc, np.uint8(kappa), out=inc, where=inc == kappa)
    out = np.where(rest, np.where(excited, np.uint8(1), np.uint8(0)), inc)
    return (out, excited) if return_excited else out


def cca_step_batch(X: np.ndarray, kappa: int, return_excited: bool = False):
    inc = X + np.uint8(1)
    np.subtract(inc, np.uint8(kappa), out=inc, where=inc == kappa)
    excited = np.empty(X.shape, bool)
    excited[..., 1:-1] = (X[..., :-2] == inc[..., 1:-1]) | (X[..., 2:] == inc[..., 1:-1])
    excited[..., 0] = (X[..., -1] == inc[..., 0]) | (X[..., 1] == inc[..., 0])
    excited[..., -1] = (X[..., -2] == inc[..., -1]) | (X[..., 0] == inc[..., -1])
    out = np.where(excited, inc, X)
    return (out, excited) if return_excited else out


def open_path_step_batch(X: np.ndarray, kappa: int) -> np.ndarray:
    """Firefly step on open windows: endpoints see a single neighbor.

    Endpoint values are not lattice-exact; callers slice off the corrupted
    margin (one site per side per step).
    """
    b = blink_color(kappa)
    blink = X == b
    nb = np.empty_like(blink)
    nb[..., 1:-1] = blink[..., 2:] | blink[..., :-2]
    nb[..., 0] = blink[..., 1]
    nb[..., -1] = blink[..., -2]
    excited = (X > b) & nb
    inc = X + np.uint8(1)
    np.subtract(inc, np.uint8(kappa), out=inc, where=inc == kappa)
    return np.where(excited, X, inc)


_STEPPERS = {"fca": fca_step_batch, "ghm": ghm_step_batch, "cca": cca_step_batch}


def step_batch(X: np.ndarray, kappa: int, rule: str, return_excited: bool = False):
    return _STEPPERS[rule](X, kappa, return_excited)


def one_form_batch(X: np.ndarray, kappa: int, wrap: bool = True) -> np.ndarray:
    """Signed edge differences along the last axis, int8.

    With wrap, edge i joins sites (i, i+1 mod L); without, edges are the
    L-1 interior pairs of an open window.
    """
    m = kappa // 2
    left = X.astype(np.int16)
    right = np.roll(left, -1, axis=-1) if wrap else left[..., 1:]
    if not wrap:
        left = left[..., :-1]
    diff = (right - left) % kappa
    out = np.where(diff > m, diff - kappa, diff)
    if kappa == 2 * m:
        out = np.where((diff == m) & (left > blink_color(kappa)), -m, out)
    return out.astype(np.int8)


def flip_mask(before: np.ndarray, after: np.ndarray) -> np.ndarray:
    """True where the form changed sign across a step (both values nonzero)."""
    return before.astype(np.int16) * after.astype(np.int16) < 0


def edge_disagreements(X: np.ndarray) -> np.ndarray:
    """Count of disagreeing adjacent pairs per row, all cycle edges."""
    d = (X != np.roll(X, -1, axis=-1)).sum(axis=-1)
    return d


def excited_column_fca(X: np.ndarray, kappa: int, col: int) -> np.ndarray:
    """Excitation indicator of one interior column for the coming update."""
    b = blink_color(kappa)
    L = X.shape[-1]
    return (X[..., col] > b) & ((X[..., (col - 1) % L] == b) | (X[..., (col + 1) % L] == b))


def rank_window_max(dX: np.ndarray, center: int, radius: int,
                    ne_center: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Max rank within `radius` (and radius-1) of the center site, per row.

    dX holds open-window edge values, edge i joining sites (i, i+1); ranks
    decrease rightward by dX. Returns (M(radius), M(radius-1)).
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    right = np.cumsum(-dX[..., center:center + radius].astype(np.int64), axis=-1)
    left = np.cumsum(dX[..., center - radius:center][..., ::-1].astype(np.int64), axis=-1)
    zero = np.zeros(dX.shape[:-1] + (1,), dtype=np.int64)
    both = np.concatenate([zero, right, left], axis=-1)
    m_full = both.max(axis=-1)
    inner = np.concatenate([zero, right[..., :-1], left[..., :-1]], axis=-1)
    m_inner = inner.max(axis=-1)
    return ne_center + m_full, ne_center + m_inner
