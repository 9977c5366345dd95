"""Delimited outputs and figure rendering for the CLI report path.

Every command writes plot-ready CSV plus a rendered PNG next to it.
Numbers are formatted with ``%.12g`` (locale-independent) and figures use
the Agg backend at a fixed size/dpi, so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .config import ScenarioConfig
from .simulate import ScenarioTrace

_DPI = 120


def fmt(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".12g")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


# --- depth profile ------------------------------------------------------


def write_depth_profile(outdir: Path, rows) -> list[Path]:
    """rows: (x, f_x, lower, upper, band_half_width); lower may be None."""
    csv_path = outdir / "depth_profile.csv"
    write_csv(csv_path, ["x_m", "f_x_m", "x_l_m", "x_u_m", "band_half_width_m"], rows)

    xs = [r[0] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    fx = [r[1] for r in rows]
    half = [r[4] for r in rows]
    ax1.plot(xs, fx, color="tab:blue", label="depth error f(x)")
    ax1.fill_between(
        xs,
        [f - h for f, h in zip(fx, half)],
        [f + h for f, h in zip(fx, half)],
        color="tab:blue",
        alpha=0.25,
        label="uncertainty band",
    )
    ax1.set_xlabel("computed depth x [m]")
    ax1.set_ylabel("error [m]")
    ax1.legend()
    ax1.grid(alpha=0.3)
    lo = [r[0] - r[2] if r[2] is not None else float("nan") for r in rows]
    hi = [r[3] - r[0] for r in rows]
    ax2.plot(xs, hi, color="tab:red", label="x_u - x")
    ax2.plot(xs, lo, color="tab:green", label="x - x_l")
    ax2.set_xlabel("computed depth x [m]")
    ax2.set_ylabel("bound offset [m]")
    ax2.legend()
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig_path = outdir / "depth_profile.png"
    _save(fig, fig_path)
    return [csv_path, fig_path]


# --- sampling plan ------------------------------------------------------


def write_sampling_plan(outdir: Path, epsilons, xs, columns) -> list[Path]:
    """columns: per-epsilon list of |dx| values aligned with xs (None where
    infeasible)."""
    csv_path = outdir / "sampling_plan.csv"
    header = ["x1_m"] + [f"abs_dx_eps_{fmt(e)}_m" for e in epsilons]
    rows = [[x] + [col[i] for col in columns] for i, x in enumerate(xs)]
    write_csv(csv_path, header, rows)

    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for eps, col in zip(epsilons, columns):
        ax.plot(xs, [v if v is not None else float("nan") for v in col], label=f"eps = {fmt(eps)}")
    ax.set_xlabel("anchor depth x1 [m]")
    ax.set_ylabel("|dx| [m]")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig_path = outdir / "sampling_plan.png"
    _save(fig, fig_path)
    return [csv_path, fig_path]


# --- closing speed ------------------------------------------------------


def write_closing_speed(outdir: Path, samples) -> list[Path]:
    """samples: ClosingSpeedEstimate sequence from a replayed stream."""
    csv_path = outdir / "closing_speed.csv"
    rows = [
        (s.t2, s.first.computed, s.second.computed, s.dt, s.v_nom, s.v_upper, s.v_lower, s.gamma_upper)
        for s in samples
    ]
    write_csv(
        csv_path,
        ["t_s", "x1_m", "x2_m", "dt_s", "v_nom_mps", "v_upper_mps", "v_lower_mps", "gamma_u"],
        rows,
    )

    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    if samples:
        ts = [s.t2 for s in samples]
        ax.step(ts, [s.v_nom for s in samples], where="post", color="tab:blue", label="v_nom")
        ax.step(ts, [s.v_upper for s in samples], where="post", color="tab:red", label="v_upper")
        ax.step(ts, [s.v_lower for s in samples], where="post", color="tab:green", label="v_lower")
        ax.plot(ts, [s.v_nom for s in samples], "o", color="tab:blue", markersize=4)
        ax.legend()
    ax.set_xlabel("time [s]")
    ax.set_ylabel("closing speed [m/s]")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig_path = outdir / "closing_speed.png"
    _save(fig, fig_path)
    return [csv_path, fig_path]


def write_path_polyline(path_obj, file_path: Path, points: int = 200) -> Path:
    """Export a lane-exit path as plot-ready CSV (``tau,x_m,y_m``)."""
    rows = []
    for k in range(points + 1):
        tau = k / points
        x, y = path_obj.evaluate(tau)
        rows.append((tau, x, y))
    write_csv(file_path, ["tau", "x_m", "y_m"], rows)
    return file_path


# --- scenario trace -----------------------------------------------------


def write_trace(outdir: Path, trace: ScenarioTrace) -> list[Path]:
    """Write the five trace CSVs plus the structured-text summary."""
    paths = []
    specs = [
        ("ego.csv", ["t_s", "x_m", "y_m", "heading_rad", "speed_mps", "mode"], trace.ego),
        ("neighbors.csv", ["t_s", "vehicle_id", "x_m", "y_m"], trace.neighbors),
        (
            "measurements.csv",
            ["t_s", "vehicle_id", "x_m_m", "y_m_m", "computed_m", "lower_m", "upper_m"],
            trace.measurements,
        ),
        (
            "decisions.csv",
            ["t_s", "intersection", "vehicle_id", "d_v1", "d_v2", "verdict", "x_n_m", "v_upper_mps"],
            trace.decisions,
        ),
        ("distances.csv", ["t_s", "vehicle_id", "distance_m"], trace.distances),
    ]
    for name, header, rows in specs:
        path = outdir / name
        write_csv(path, header, rows)
        paths.append(path)

    summary = outdir / "summary.txt"
    lines = [
        f"status: {'completed' if trace.completed else 'timeout'}",
        f"seed: {trace.seed}",
        f"end_time_s: {fmt(trace.end_time)}",
        f"min_separation_m: {fmt(trace.min_separation)}",
        f"total_wait_s: {fmt(trace.total_wait)}",
        f"wait_count: {len(trace.commits)}",
    ]
    for i, commit in enumerate(trace.commits, start=1):
        lines.append(f"wait.{i}.intersection: {commit.intersection}")
        lines.append(f"wait.{i}.t_arrive_s: {fmt(commit.t_arrive)}")
        lines.append(f"wait.{i}.t_proceed_s: {fmt(commit.t_commit)}")
        lines.append(f"wait.{i}.duration_s: {fmt(commit.wait_duration)}")
    if trace.timeout_intersection is not None:
        lines.append(f"timeout_intersection: {trace.timeout_intersection}")
    lines.append(f"measurement_count: {len(trace.measurements)}")
    lines.append(f"speed_estimate_count: {len(trace.speed_estimates)}")
    lines.append(f"decision_count: {len(trace.decisions)}")
    summary.write_text("\n".join(lines) + "\n")
    paths.append(summary)
    return paths


def render_trace_figures(outdir: Path, trace: ScenarioTrace, config: ScenarioConfig) -> list[Path]:
    from .bezier import LaneExitPath, LaneGeometry

    fig, ax = plt.subplots(figsize=(6.5, 6.5))
    ax.plot(
        [r.x for r in trace.ego],
        [r.y for r in trace.ego],
        color="tab:blue",
        linewidth=2,
        label="ego",
    )
    by_vehicle: dict[int, list] = {}
    for row in trace.neighbors:
        by_vehicle.setdefault(row.vehicle_id, []).append(row)
    for vid, rows in sorted(by_vehicle.items()):
        ax.plot([r.x for r in rows], [r.y for r in rows], "--", label=f"neighbor {vid}")
    for i, ic in enumerate(config.intersections, start=1):
        path = LaneExitPath.from_geometry(
            LaneGeometry(p_i=ic.p_i, p_f=ic.p_f, theta_i=ic.theta_i, theta_f=ic.theta_f)
        )
        hull = list(path.hull) + [path.hull[0]]
        ax.plot([p[0] for p in hull], [p[1] for p in hull], color="gray", alpha=0.6)
        ax.plot(*ic.p_i, "k^", markersize=6)
        ax.plot(*ic.p_f, "kv", markersize=6)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    traj_path = outdir / "trajectory.png"
    _save(fig, traj_path)

    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    by_vehicle_d: dict[int, list] = {}
    for row in trace.distances:
        by_vehicle_d.setdefault(row.vehicle_id, []).append(row)
    for vid, rows in sorted(by_vehicle_d.items()):
        ax.plot([r.t for r in rows], [r.distance for r in rows], label=f"neighbor {vid}")
    ax.axhline(config.d_s, color="red", linestyle=":", label="d_s")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("separation [m]")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    sep_path = outdir / "separation.png"
    _save(fig, sep_path)
    return [traj_path, sep_path]
