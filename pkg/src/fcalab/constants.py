"""Closed-form reference constants, each written out once.

`dump` emits the machine-readable constants file consumed by downstream
tooling (for example the figure renderer), so numbers are never duplicated
by hand outside this module.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

__all__ = ["REFERENCE", "COVARIANCES_WINDOW", "GAMMA_SQUARED", "dump", "load"]

# Exact lagged covariances of the 4-site window edge functional (kappa=3)
# and their limit variance rate.
COVARIANCES_WINDOW = (Fraction(40, 81), Fraction(-17, 243),
                      Fraction(-19, 729), Fraction(-2, 729))
GAMMA_SQUARED = Fraction(8, 27)

REFERENCE = {
    # sqrt(t) * P(adjacent disagreement at t), 3-color firefly rule
    "cluster_constant_k3": 176.0 / (467.0 * math.sqrt(2.0 * math.pi)),
    # sqrt(t) * Q_b0(0, t) limit
    "survival_constant_b0": 432.0 / (467.0 * math.sqrt(3.0 * math.pi)),
    # sqrt(t) * P(adjacent disagreement at t), 3-color cyclic rule
    "cluster_constant_cca3": math.sqrt(2.0 / (3.0 * math.pi)),
    # limit of (1 - q_minus(u)) / sqrt(1 - u)
    "q_minus_slope": 3.0 * math.sqrt(3.0) / 2.0,
    # limit variance rate of the 3-color increment functional
    "gamma_squared_k3": float(GAMMA_SQUARED),
    # excitation-count scaling variance: gamma^2 times particle speed 1/3
    "ne_variance_rate_k3": float(GAMMA_SQUARED) / 3.0,
    # survival constant of the +-1 walk: e^{-c} = sqrt(2)
    "pm1_e_minus_c": math.sqrt(2.0),
}


def dump(path) -> None:
    out = dict(REFERENCE)
    out["covariances_window_k3"] = [str(c) for c in COVARIANCES_WINDOW]
    out["gamma_squared_k3_exact"] = str(GAMMA_SQUARED)
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
