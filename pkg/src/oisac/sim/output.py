"""CSV, metrics text, and SVG plots for simulation runs."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .engine import Metrics, SimRecord

COLUMNS = (
    "t",
    "leader_x", "leader_y", "leader_theta",
    "follower_x", "follower_y", "follower_theta",
    "x_lf", "y_lf", "gamma",
    "x_est", "y_est", "gamma_est",
    "v_hat", "omega_hat",
    "v_l", "omega_l",
    "v_cmd", "omega_cmd",
    "v_f", "omega_f",
    "status", "gated",
    "eps_x", "eps_y", "eps_gamma", "V",
)


def _f(x: float) -> str:
    return format(float(x), ".10g")


def record_row(r: SimRecord) -> list[str]:
    est = ("", "", "") if r.s_est is None else tuple(_f(v) for v in (r.s_est.x_lf, r.s_est.y_lf, r.s_est.gamma))
    return [
        _f(r.t),
        _f(r.leader.x), _f(r.leader.y), _f(r.leader.theta),
        _f(r.follower.x), _f(r.follower.y), _f(r.follower.theta),
        _f(r.s.x_lf), _f(r.s.y_lf), _f(r.s.gamma),
        *est,
        _f(r.u_hat.v), _f(r.u_hat.omega),
        _f(r.u_l.v), _f(r.u_l.omega),
        _f(r.u_cmd.v), _f(r.u_cmd.omega),
        _f(r.u_f.v), _f(r.u_f.omega),
        r.status, str(int(r.gated)),
        *(_f(e) for e in r.eps), _f(r.V),
    ]


def records_csv(records: list[SimRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow(record_row(r))
    return buf.getvalue()


def metrics_text(m: Metrics) -> str:
    def fmt(v):
        if v is None:
            return "none"
        if isinstance(v, bool):
            return str(v).lower()
        if isinstance(v, float):
            return _f(v)
        if isinstance(v, tuple):
            return " ".join(fmt(x) for x in v)
        return str(v)

    lines = [
        f"steady_band_x_y_gamma: {fmt(m.steady_band)}",
        f"rmse_x_y_gamma: {fmt(m.rmse)}",
        f"settling_time_x_y_gamma: {fmt(m.settling_time)}",
        f"braking_distance: {fmt(m.braking_distance)}",
        f"follower_stopped: {fmt(m.follower_stopped)}",
        f"packets_sent: {m.packets_sent}",
        f"packets_dropped: {m.packets_dropped}",
        f"packets_gated: {m.packets_gated}",
        f"decode_failures: {m.decode_failures}",
        f"frames: {m.frames}",
        f"visibility_lost: {fmt(m.visibility_lost)}",
        f"end_time: {fmt(m.end_time)}",
    ]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def plot_svgs(records: list[SimRecord], out: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "oisac"
    paths = []
    t = [r.t for r in records]

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([r.leader.x for r in records], [r.leader.y for r in records], label="leader")
    ax.plot([r.follower.x for r in records], [r.follower.y for r in records], "--", label="follower")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend()
    p = out / "trajectory.svg"
    fig.savefig(p, format="svg", metadata={"Date": None})
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    for i, name in enumerate(("eps_x [m]", "eps_y [m]", "eps_gamma [rad]")):
        ax.plot(t, [r.eps[i] for r in records], label=name)
    ax.set_xlabel("t [s]")
    ax.legend()
    p = out / "errors.svg"
    fig.savefig(p, format="svg", metadata={"Date": None})
    plt.close(fig)
    paths.append(p)
    return paths


def emit(records: list[SimRecord], metrics: Metrics, out_dir, plots: bool = True) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = [out / "records.csv", out / "metrics.txt"]
    _write(written[0], records_csv(records))
    _write(written[1], metrics_text(metrics))
    if plots and records:
        written += plot_svgs(records, out)
    return written
