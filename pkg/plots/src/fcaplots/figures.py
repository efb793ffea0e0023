"""Render figures from fcalab CSV outputs. No computation of its own.

Input schemas are the exact CSV contracts of the simulation package:

  cluster: kappa,t,L,runs,edges_sampled,p_hat,stderr,sqrt_t_p_hat
  ne:      r,empirical_cdf,theory_cdf,abs_diff
  qtable:  family,x,t,value
  genfun:  u,q_minus,ratio_to_3sqrt3_over_2,detA_residual

Unknown columns are refused. Reference constants come from the
constants.json file the simulation package drops next to its outputs,
never from literals here.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureSpec", "SchemaError", "render", "render_all", "KINDS"]

_SCHEMAS = {
    "scaled-cluster-curve": "kappa,t,L,runs,edges_sampled,p_hat,stderr,sqrt_t_p_hat",
    "ne-cdf-overlay": "r,empirical_cdf,theory_cdf,abs_diff",
    "qtable-ratios": "family,x,t,value",
    "qminus-ratio": "u,q_minus,ratio_to_3sqrt3_over_2,detA_residual",
}
KINDS = tuple(_SCHEMAS)


class SchemaError(ValueError):
    """The input file does not match the declared CSV contract."""


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple
    kind: str
    out: str
    constants_path: str | None = None

    def __post_init__(self):
        if self.kind not in _SCHEMAS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input CSV required")


def _read_rows(path: str, kind: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(header) != _SCHEMAS[kind]:
            raise SchemaError(f"{path}: header {header} does not match the "
                              f"{kind} schema {_SCHEMAS[kind]!r}")
        rows = []
        for raw in reader:
            if len(raw) != len(header):
                raise SchemaError(f"{path}: ragged row {raw}")
            rows.append(dict(zip(header, raw)))
        return rows


def _constants(spec: FigureSpec) -> dict:
    path = spec.constants_path
    if path is None:
        path = os.path.join(os.path.dirname(os.path.abspath(spec.inputs[0])),
                            "constants.json")
    if not os.path.exists(path):
        raise SchemaError(f"reference constants file not found: {path}")
    with open(path) as fh:
        return json.load(fh)


def _save(fig, out: str) -> list[str]:
    base, ext = os.path.splitext(out)
    if ext.lower() in (".png", ".svg"):
        out_paths = [base + ".png", base + ".svg"]
    else:
        out_paths = [out + ".png", out + ".svg"]
    os.makedirs(os.path.dirname(os.path.abspath(out_paths[0])), exist_ok=True)
    for p in out_paths:
        fig.savefig(p, dpi=150)
    plt.close(fig)
    return out_paths


def _floats(rows, key):
    return np.array([float(r[key]) for r in rows])


def render(spec: FigureSpec) -> dict:
    """Render one figure (PNG and SVG); returns a small result manifest."""
    const = _constants(spec)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    info: dict = {"kind": spec.kind}

    if spec.kind == "scaled-cluster-curve":
        for path in spec.inputs:
            rows = _read_rows(path, spec.kind)
            if rows:
                t = _floats(rows, "t")
                y = _floats(rows, "sqrt_t_p_hat")
                se = _floats(rows, "stderr") * np.sqrt(t)
                kappa = rows[0]["kappa"]
                ax.errorbar(t, y, yerr=3 * se, marker="o", capsize=3,
                            label=f"kappa={kappa}")
        ref = const["cluster_constant_k3"]
        ax.axhline(ref, ls="--", color="gray",
                   label=f"reference {ref:.5f}")
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("sqrt(t) * p_hat(t)")
        ax.legend()
        ax.set_title("Scaled adjacent-disagreement rate")

    elif spec.kind == "ne-cdf-overlay":
        gap = 0.0
        for path in spec.inputs:
            rows = _read_rows(path, spec.kind)
            if rows:
                r = _floats(rows, "r")
                emp = _floats(rows, "empirical_cdf")
                theo = _floats(rows, "theory_cdf")
                gap = max(gap, float(np.abs(emp - theo).max()))
                ax.step(r, emp, where="post", label="empirical")
                order = np.argsort(r)
                ax.plot(r[order], theo[order], "--", label="1 - 4 P(Z>=r) P(Z<=r)")
        info["max_gap"] = gap
        ax.set_xlabel("r")
        ax.set_ylabel("CDF")
        ax.legend()
        ax.set_title(f"Scaled excitation-count law (max gap {gap:.4f})")

    elif spec.kind == "qtable-ratios":
        ref = const["survival_constant_b0"]
        for path in spec.inputs:
            rows = _read_rows(path, spec.kind)
            series: dict = {}
            for row in rows:
                if int(row["x"]) == 0:
                    series.setdefault(row["family"], []).append(
                        (int(row["t"]), float(row["value"])))
            for fam, pts in sorted(series.items()):
                pts.sort()
                t = np.array([p[0] for p in pts], dtype=float)
                v = np.array([p[1] for p in pts])
                good = t > 0
                ax.plot(t[good], np.sqrt(t[good]) * v[good],
                        label=f"sqrt(t) Q_{fam}(0,t)")
        ax.axhline(ref, ls="--", color="gray", label=f"reference {ref:.5f}")
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("sqrt(t) * Q(0, t)")
        ax.legend(fontsize=8)
        ax.set_title("Scaled survival probabilities")

    elif spec.kind == "qminus-ratio":
        ref = const["q_minus_slope"]
        for path in spec.inputs:
            rows = _read_rows(path, spec.kind)
            if rows:
                u = _floats(rows, "u")
                qm = _floats(rows, "q_minus")
                ax.plot(1.0 - u, (1.0 - qm) / np.sqrt(1.0 - u), "o-",
                        label="(1 - q_minus)/sqrt(1 - u)")
        ax.axhline(ref, ls="--", color="gray", label=f"reference {ref:.5f}")
        ax.set_xscale("log")
        ax.invert_xaxis()
        ax.set_xlabel("1 - u")
        ax.set_ylabel("(1 - q_minus(u)) / sqrt(1 - u)")
        ax.legend()
        ax.set_title("Root gap of the generating-function determinant")

    info["files"] = _save(fig, spec.out)
    return info


def _sniff_kind(path: str) -> str | None:
    try:
        with open(path, newline="") as fh:
            header = fh.readline().strip()
    except OSError:
        return None
    for kind, schema in _SCHEMAS.items():
        if header == schema:
            return kind
    return None


def render_all(directory: str, out_dir: str | None = None) -> list[dict]:
    """One figure per recognized CSV in `directory`; unrecognized files are
    skipped with a warning. Returns the manifest."""
    out_dir = out_dir or directory
    manifest = []
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".csv"):
            continue
        path = os.path.join(directory, name)
        kind = _sniff_kind(path)
        if kind is None:
            print(f"warning: {name}: unrecognized schema, skipped")
            continue
        base = os.path.join(out_dir, os.path.splitext(name)[0])
        info = render(FigureSpec((path,), kind, base))
        info["input"] = name
        manifest.append(info)
        print(f"{name} -> {kind}: {', '.join(info['files'])}")
    if not manifest:
        print("no recognized CSV files")
    return manifest
