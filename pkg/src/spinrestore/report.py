"""Deterministic serialization of results plus SVG chart rendering."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .metrics import MetricPoint, NSweepRow
from .solver import SolutionSet

SWEEP_TAU_HEADER = ["tau", "s1", "s2", "s3", "s4", "s5", "lambda_best", "converged_count"]
SWEEP_N_HEADER = ["N", "lambda_opt", "tau_0", "s1_at_tau0", "s2_at_tau0", "eps_tilde"]


class ReportError(RuntimeError):
    pass


def fmt(x) -> str:
    """Serialize a float with 17 significant digits (round-trip exact)."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def write_sweep_tau_csv(points, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_TAU_HEADER)
        for p in points:
            w.writerow(
                [
                    fmt(p.tau),
                    fmt(p.s1),
                    fmt(p.s2),
                    fmt(p.s3),
                    fmt(p.s4),
                    fmt(p.s5),
                    fmt(p.lambda_best),
                    str(p.converged_count),
                ]
            )


def write_sweep_n_csv(rows, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_N_HEADER)
        for r in rows:
            w.writerow(
                [
                    str(r.n_total),
                    fmt(r.lambda_opt),
                    fmt(r.tau_0),
                    fmt(r.s1_at_tau0),
                    fmt(r.s2_at_tau0),
                    fmt(r.eps_tilde),
                ]
            )


def _complex_pairs(z: np.ndarray):
    return [[float(v.real), float(v.imag)] for v in z]


def solution_set_payload(config_text: str, sols: SolutionSet) -> dict:
    return {
        "config": config_text,
        "tau_reg": sols.tau_reg,
        "n_starts": sols.n_starts,
        "solutions": [
            {
                "start_index": s.start_index,
                "angles": [[float(a) for a in row] for row in s.angles],
                "residual_norm": s.residual_norm,
                "exact_residual_norm": s.exact_residual_norm,
                "lambda_model": _complex_pairs(s.lam_model),
                "lambda_exact": _complex_pairs(s.lam_exact),
                "converged": s.converged,
            }
            for s in sols.solutions
        ],
    }


def write_json(payload: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_amplitude_extrema_csv(sols: SolutionSet, path: Path) -> None:
    """Per-solution amplitude extrema (free sites bounded, closure not)."""
    from .chain import amplitudes_from_angles

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "start_index",
                "converged",
                "residual_norm",
                "min_abs_amplitude",
                "max_abs_amplitude",
                "closure_max_abs",
            ]
        )
        for s in sols.solutions:
            amps = amplitudes_from_angles(s.angles)
            free = np.abs(amps[:, :-1])
            w.writerow(
                [
                    str(s.start_index),
                    str(int(s.converged)),
                    fmt(s.residual_norm),
                    fmt(free.min()),
                    fmt(free.max()),
                    fmt(np.abs(amps[:, -1]).max()),
                ]
            )


def render_csv(csv_path: Path, svg_path: Path, logy: bool = False) -> None:
    """Render any emitted CSV into an SVG line chart, deterministically.

    The first column is the x axis; every other numeric column becomes a
    line.  Raises on empty input; nothing is written in that case.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "spinrestore"

    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r]
    if len(rows) < 2:
        raise ReportError(f"no data rows in {csv_path}")
    header, data = rows[0], rows[1:]

    def col(i):
        return np.array([float(r[i]) if r[i] != "" else np.nan for r in data])

    x = col(0)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    plotted = 0
    for i in range(1, len(header)):
        try:
            y = col(i)
        except ValueError:
            continue
        if np.all(np.isnan(y)):
            continue
        ax.plot(x, y, label=header[i], linewidth=1.0)
        plotted += 1
    if plotted == 0:
        plt.close(fig)
        raise ReportError(f"no numeric series in {csv_path}")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(header[0])
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
