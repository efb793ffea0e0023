"""Exact and floating dynamic programming for the five survival families,
and the generating-function matrix system behind their asymptotics.

The five families "b0", "b1", "02", "12", "22" are survival probabilities
Q(x, t) of the 3-color comparison walk started at height x, indexed by the
last two conditioning colors (the first index collapses when the second
color is not 2). Values live on a triangle: Q(x, t) = 1 for x >= 2t since
no step drops by more than 2.

Two boundary conventions are implemented. "strict" counts a walk that dips
to -1 on its final step but is lifted by a sign-flipping triple as a
survivor, matching the lifted-walk definition exactly (the resurrection
memory term is live from t = 1, reading an all-ones t = -1 row).
"truncated" drops that final-step credit (memory term only for t >= 2).
The exhaustive automaton oracle selects "strict" with zero index offsets;
see tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "FAMILIES",
    "QTables",
    "MatrixSystem",
    "build_qtable",
    "disagreement_exact",
    "DISAGREEMENT_CALIBRATION",
    "asymptotic_constant",
    "proportionality_report",
    "PROPORTIONALITY_TARGETS",
    "matrix_A",
    "find_q_minus",
    "genfun_row",
    "nine_family_qtable",
]

FAMILIES = ("b0", "b1", "02", "12", "22")
_B1 = FAMILIES.index("b1")

# Validated against the exhaustive automaton oracle at tau = 1..4: the
# strict boundary convention reproduces the disagreement probability with
# no shift of the four survival arguments.
DISAGREEMENT_CALIBRATION = {"variant": "strict", "offsets": (0, 0, 0, 0)}

_EXACT_CAP_DEFAULT = 400
_FLOAT_FULL_CAP = 2000
_WIDTH_K = 24.0  # float rows padded with 1 beyond ~24*sqrt(t); error < 1e-25


def _width(t: int) -> int:
    return min(2 * t, int(_WIDTH_K * math.sqrt(t)) + 8)


def _read(row: np.ndarray, width: int, shift: int) -> np.ndarray:
    """row[x + shift] for x = 0..width-1, padding 1.0 outside the row."""
    out = np.ones(width)
    x_lo = max(0, -shift)
    x_hi = min(width - 1, row.size - 1 - shift)
    if x_hi >= x_lo:
        out[x_lo:x_hi + 1] = row[x_lo + shift:x_hi + 1 + shift]
    return out


@dataclass
class QTables:
    """Five-family survival tables up to horizon T."""

    T: int
    mode: str                 # "exact" | "float"
    variant: str              # "strict" | "truncated"
    cols: np.ndarray          # (5, 3, T+1) float view of Q(fam, x<=2, t)
    rows: list | None         # full triangles (exact: scaled ints), if kept
    exact_cols: list | None   # (5, 3) lists of Fractions over t, exact mode

    def value(self, family: str, x: int, t: int) -> float:
        """Floating value of Q^family(x, t)."""
        f = FAMILIES.index(family)
        if not 0 <= t <= self.T or x < 0:
            raise ValueError("requested cell outside table")
        if x >= 2 * t:
            return 1.0
        if x <= 2:
            return float(self.cols[f, x, t])
        if self.rows is None:
            raise ValueError("full rows were not kept for this table")
        row = self.rows[f][t]
        if x >= len(row):
            return 1.0
        if self.mode == "exact":
            return float(Fraction(row[x], 3 ** (t + 1)))
        return float(row[x])

    def fraction(self, family: str, x: int, t: int) -> Fraction:
        """Exact value; only for exact-mode tables."""
        if self.mode != "exact":
            raise ValueError("exact values require mode='exact'")
        f = FAMILIES.index(family)
        if not 0 <= t <= self.T or x < 0:
            raise ValueError("requested cell outside table")
        if x >= 2 * t:
            return Fraction(1)
        row = self.rows[f][t]
        num = row[x] if x < len(row) else 3 ** (t + 1)
        return Fraction(num, 3 ** (t + 1))


def _float_step(prev: list[np.ndarray], prev2_b1: np.ndarray, t: int,
                variant: str) -> list[np.ndarray]:
    W = _width(t)
    pb0, pb1, p02, p12, p22 = prev
    nb0 = (_read(pb0, W, 0) + _read(pb1, W, 1) + _read(p02, W, -1)) / 3.0
    nb1 = (_read(pb0, W, -1) + _read(pb1, W, 0) + _read(p12, W, 1)) / 3.0
    n02 = (_read(pb0, W, 1) + _read(pb1, W, 2) + _read(p22, W, 0)) / 3.0
    n12 = (_read(pb0, W, -2) + _read(pb1, W, -1) + _read(p22, W, 0)) / 3.0
    n22 = (_read(pb0, W, 1) + _read(pb1, W, -1) + _read(p22, W, 0)) / 3.0

    def at(row, x):
        return row[x] if x < row.size else 1.0

    mem = 0.0 if (variant == "truncated" and t < 2) else at(prev2_b1, 1) / 3.0
    nb0[0] = (at(pb0, 0) + at(pb1, 1) + mem) / 3.0
    nb1[0] = (at(pb1, 0) + at(p12, 1)) / 3.0
    n12[0] = at(p22, 0) / 3.0
    if W > 1:
        n12[1] = (at(pb1, 0) + at(p22, 1)) / 3.0
    n22[0] = (at(pb0, 1) + at(p22, 0)) / 3.0
    return [nb0, nb1, n02, n12, n22]


def _exact_step(prev: list[list[int]], prev2_b1: list[int] | None, t: int,
                variant: str, pow3) -> list[list[int]]:
    # numerators at scale 3^(t+1); previous rows at 3^t, 3^(t-1)
    one_prev = pow3(t)
    one_prev2 = pow3(t - 1)

    def at(row, x):
        return row[x] if 0 <= x < len(row) else one_prev

    def at2(x):
        if prev2_b1 is None:  # t-2 row of all ones at scale 3^(t-1)
            return one_prev2
        return prev2_b1[x] if x < len(prev2_b1) else one_prev2

    W = 2 * t
    pb0, pb1, p02, p12, p22 = prev
    nb0 = [at(pb0, x) + at(pb1, x + 1) + at(p02, x - 1) for x in range(W)]
    nb1 = [at(pb0, x - 1) + at(pb1, x) + at(p12, x + 1) for x in range(W)]
    n02 = [at(pb0, x + 1) + at(pb1, x + 2) + at(p22, x) for x in range(W)]
    n12 = [at(pb0, x - 2) + at(pb1, x - 1) + at(p22, x) for x in range(W)]
    n22 = [at(pb0, x + 1) + at(pb1, x - 1) + at(p22, x) for x in range(W)]
    mem = 0 if (variant == "truncated" and t < 2) else at2(1)
    nb0[0] = at(pb0, 0) + at(pb1, 1) + mem
    nb1[0] = at(pb1, 0) + at(p12, 1)
    n12[0] = at(p22, 0)
    if W > 1:
        n12[1] = at(pb1, 0) + at(p22, 1)
    n22[0] = at(pb0, 1) + at(p22, 0)
    return [nb0, nb1, n02, n12, n22]


def build_qtable(T: int, mode: str = "float", variant: str = "strict",
                 keep_rows: bool | None = None,
                 exact_cap: int = _EXACT_CAP_DEFAULT) -> QTables:
    """Fill the five survival tables up to horizon T.

    Float mode keeps full rows only up to a memory cap (columns x <= 2 are
    always recorded for every t, which is all the asymptotics need). Exact
    mode stores integer numerators at scale 3^(t+1) and is capped at
    `exact_cap` for memory.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    if mode not in ("exact", "float"):
        raise ValueError("mode must be 'exact' or 'float'")
    if variant not in ("strict", "truncated"):
        raise ValueError("variant must be 'strict' or 'truncated'")
    if mode == "exact" and T > exact_cap:
        raise ValueError(f"exact mode capped at T = {exact_cap} (memory); "
                         "use mode='float' for long horizons")
    if keep_rows is None:
        keep_rows = mode == "exact" or T <= _FLOAT_FULL_CAP
    if mode == "float" and keep_rows and T > _FLOAT_FULL_CAP:
        raise ValueError(f"float rows kept only up to T = {_FLOAT_FULL_CAP}")

    cols = np.ones((5, 3, T + 1))
    rows_store: list[list] | None = [[] for _ in FAMILIES] if keep_rows else None
    exact_cols = [[[Fraction(1)] for _ in range(3)] for _ in FAMILIES] \
        if mode == "exact" else None

    if mode == "float":
        prev = [np.ones(1) for _ in FAMILIES]  # t = 0 row: all ones
        prev2_b1 = np.ones(1)                  # all-ones t = -1 row
        if keep_rows:
            for f in range(5):
                rows_store[f].append(prev[f])
        for t in range(1, T + 1):
            new = _float_step(prev, prev2_b1, t, variant)
            for f in range(5):
                row = new[f]
                for x in range(3):
                    cols[f, x, t] = row[x] if x < row.size else 1.0
                if keep_rows:
                    rows_store[f].append(row)
            prev2_b1 = prev[_B1]
            prev = new
    else:
        pows = [1, 3]

        def pow3(n):
            while len(pows) <= n:
                pows.append(pows[-1] * 3)
            return pows[n]

        prev = [[3] for _ in FAMILIES]  # t = 0: value 1 at scale 3
        prev2_b1: list[int] | None = None
        for f in range(5):
            rows_store[f].append(prev[f])
        for t in range(1, T + 1):
            new = _exact_step(prev, prev2_b1, t, variant, pow3)
            scale = pow3(t + 1)
            for f in range(5):
                row = new[f]
                for x in range(3):
                    num = row[x] if x < len(row) else scale
                    exact_cols[f][x].append(Fraction(num, scale))
                    cols[f, x, t] = float(exact_cols[f][x][-1])
                rows_store[f].append(row)
            prev2_b1 = prev[_B1]
            prev = new

    return QTables(T, mode, variant, cols, rows_store, exact_cols)


# --------------------------------------------------------------------------
# Disagreement probability through the survival tables
# --------------------------------------------------------------------------

def disagreement_exact(tau: int, tables: QTables | None = None):
    """P(two adjacent sites disagree at time 3*tau), kappa = 3.

    Decomposes the event over the first two survival steps of the
    height -1 walk: weights 1/9, 2/27 at horizon 2*tau and 1/27, 1/27 at
    horizon 2*tau - 1. Exact (Fraction) when given exact tables, float
    otherwise. Uses the oracle-calibrated strict convention.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    h = 2 * tau + 1
    if tables is None:
        tables = build_qtable(h - 1, mode="exact", variant="strict")
    if tables.T < h - 1:
        raise ValueError(f"tables horizon {tables.T} < {h - 1}")
    if tables.variant != DISAGREEMENT_CALIBRATION["variant"]:
        raise ValueError("tables use a non-calibrated boundary convention")
    if tables.mode == "exact":
        q = tables.fraction
        w19, w227, w127 = Fraction(1, 9), Fraction(2, 27), Fraction(1, 27)
    else:
        q = tables.value
        w19, w227, w127 = 1 / 9, 2 / 27, 1 / 27
    return 2 * (w19 * q("b1", 0, h - 1) + w227 * q("b0", 0, h - 1)
                + w127 * q("22", 0, h - 2) + w127 * q("b1", 0, h - 2))


def asymptotic_constant(family: str, tables: QTables,
                        n_checkpoints: int = 12) -> tuple[np.ndarray, np.ndarray, tuple]:
    """sqrt(t) * Q(0, t) at geometric checkpoints plus an a + b/sqrt(t) fit.

    Returns (ts, sqrt_t_q, (a, b)); `a` is the extrapolated limit.
    """
    from .harness import fit_inverse_sqrt
    T = tables.T
    if T < 100:
        raise ValueError("horizon too short for asymptotics")
    f = FAMILIES.index(family)
    ts = np.unique(np.geomspace(max(10, T // 256), T, n_checkpoints).astype(np.int64))
    vals = np.sqrt(ts.astype(float)) * tables.cols[f, 0, ts]
    a, b = fit_inverse_sqrt(ts.astype(float), vals)
    return ts, vals, (a, b)


# Asymptotic pairwise proportionalities of the generating functions,
# evaluated as large-t value ratios: (label, (fam,x) numerator,
# (fam,x) denominator, limit).
PROPORTIONALITY_TARGETS = (
    ("Q12(0,t)/Q02(0,t)", ("12", 0), ("02", 0), Fraction(4, 21)),
    ("Q12(0,t)/Q22(0,t)", ("12", 0), ("22", 0), Fraction(1, 3)),
    ("Q12(0,t)/Qb1(2,t)", ("12", 0), ("b1", 2), Fraction(4, 27)),
    ("Q12(0,t)/Qb0(0,t)", ("12", 0), ("b0", 0), Fraction(1, 2)),
    ("Q12(0,t)/Qb1(0,t)", ("12", 0), ("b1", 0), Fraction(1, 1)),
    ("Q12(0,t)/Qb1(1,t)", ("12", 0), ("b1", 1), Fraction(2, 3)),
    ("Q12(0,t)/Q22(1,t)", ("12", 0), ("22", 1), Fraction(3, 8)),
    ("Q22(1,t)/Qb1(0,t)", ("22", 1), ("b1", 0), Fraction(8, 3)),
    ("Qb0(0,t)/Qb1(0,t)", ("b0", 0), ("b1", 0), Fraction(2, 1)),
    ("Q22(0,t)/Qb0(0,t)", ("22", 0), ("b0", 0), Fraction(3, 2)),
)


def proportionality_report(tables: QTables, t: int | None = None) -> list[tuple]:
    """Measured large-t ratios against their limits: (label, limit, measured)."""
    if t is None:
        t = tables.T
    out = []
    for label, (fn, xn), (fd, xd), limit in PROPORTIONALITY_TARGETS:
        num = tables.cols[FAMILIES.index(fn), xn, t]
        den = tables.cols[FAMILIES.index(fd), xd, t]
        out.append((label, limit, float(num / den)))
    return out


# --------------------------------------------------------------------------
# Generating-function matrix system
# --------------------------------------------------------------------------

def _det(m: list[list]) -> object:
    n = len(m)
    if n == 1:
        return m[0][0]
    total = 0
    for j in range(n):
        if m[0][j] == 0:
            continue
        sub = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _det(sub)
        total = total + term if j % 2 == 0 else total - term
    return total


@dataclass(frozen=True)
class MatrixSystem:
    """The 5x5 coefficient matrix A(q, u) of the generating-function system."""

    q: object
    u: object
    entries: tuple

    def det(self):
        return _det([list(r) for r in self.entries])

    def det_cleared(self):
        """q^3 * det A: polynomial in q, safe for root bracketing at small q."""
        return self.det() * self.q ** 3

    def minor(self, i: int):
        """Determinant of A with row i (1-based) and column 1 removed."""
        if not 1 <= i <= 5:
            raise ValueError("minor index must be 1..5")
        rows = [list(r[1:]) for k, r in enumerate(self.entries) if k != i - 1]
        return _det(rows)

    def minors(self) -> tuple:
        return tuple(self.minor(i) for i in range(1, 6))


def matrix_A(q, u) -> MatrixSystem:
    """Entries of the linear system tying the five generating functions."""
    if q == 0:
        raise ValueError("q must be nonzero")
    entries = (
        (3 - u, -u / q, -q * u, 0 * u, 0 * u),
        (-q * u, 3 - u, 0 * u, -u / q, 0 * u),
        (-u / q, -u / q ** 2, 3 + 0 * u, 0 * u, -u),
        (-q * q * u, -q * u, 0 * u, 3 + 0 * u, -u),
        (-u / q, -q * u, 0 * u, 0 * u, 3 - u),
    )
    return MatrixSystem(q, u, entries)


def find_q_minus(u: float, iters: int = 200) -> float:
    """The sub-unit root q of det A(q, u) = 0 that tends to 1 as u -> 1.

    Brackets the sign change of q^3 det A nearest to q = 1 (scanning
    leftward from 1), then bisects.
    """
    if not 0 < u < 1:
        raise ValueError("u must be in (0, 1)")

    def f(q):
        return float(matrix_A(q, u).det_cleared())

    hi = 1.0 - 1e-15
    fhi = f(hi)
    lo = None
    for gap in np.geomspace(max(1e-12, 0.5 * (1.0 - u)), 0.95, 400):
        q = 1.0 - gap
        if f(q) * fhi < 0:
            lo = q
            break
        hi, fhi = q, f(q)
    if lo is None:
        raise ValueError(f"no bracket for q_minus at u = {u}")
    a, b = lo, hi
    fa = f(a)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fa * fm <= 0:
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def genfun_row(u: float) -> dict:
    """One genfun record: root, normalized gap ratio, and det residual."""
    qm = find_q_minus(u)
    slope = 3.0 * math.sqrt(3.0) / 2.0
    ratio = (1.0 - qm) / math.sqrt(1.0 - u) / slope
    residual = abs(float(matrix_A(qm, u).det()))
    return {"u": u, "q_minus": qm, "ratio_to_3sqrt3_over_2": ratio,
            "detA_residual": residual}


# --------------------------------------------------------------------------
# Nine-family reference recursion (first-step analysis from the raw triple
# functional; used to re-verify the five-family reduction)
# --------------------------------------------------------------------------

def nine_family_qtable(T: int, variant: str = "strict") -> dict:
    """Q[(i, j)][t][x] over all nine conditioning pairs, exact Fractions."""
    from .walks import g_triple
    if T > 40:
        raise ValueError("reference recursion intended for small T")
    states = [(i, j) for i in range(3) for j in range(3)]
    tables = {s: [{x: Fraction(1) for x in range(2 * T + 5)}] for s in states}

    def q(s, x, t):
        if x >= 2 * t:
            return Fraction(1)
        if x < 0:
            raise ValueError("negative height read")
        if t < 0:
            return Fraction(1)
        return tables[s][t][x]

    for t in range(1, T + 1):
        for s in states:
            tables[s].append({})
        for (i, j) in states:
            for x in range(2 * T + 5):
                total = Fraction(0)
                for k in range(3):
                    g = g_triple(i, j, k)
                    y = x + g
                    if y >= 0:
                        total += q((j, k), y, t - 1)
                    elif y == -1 and x == 0 and j == 0 and k == 2:
                        # lifted at -1 by a sign-flipping triple, then +2
                        if variant == "strict" or t >= 2:
                            total += Fraction(1, 3) * q((2, 1), 1, t - 2)
                tables[(i, j)][t][x] = total / 3
    return tables
