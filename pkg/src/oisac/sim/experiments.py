"""Batch experiments built on the presets."""

from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..control import (
    DesiredPose,
    GainConfig,
    GateState,
    control,
    convergence_rate,
    error_bounds,
    gain_floor,
    lyapunov,
    lyapunov_rate,
)
from ..geometry import ZERO_TWIST, Bounds, RelativeState, Twist
from ..scc.quantize import velocity_quantizers
from .config import EKF, OISAC, preset_braking
from .engine import run

BRAKE_LEVELS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)


def _braking_run(args) -> float:
    level, estimator, seed, overrides = args
    _, m = run(preset_braking(level, estimator=estimator, seed=seed, **overrides))
    return m.braking_distance


def braking_experiment(levels=BRAKE_LEVELS, reps: int = 10, estimators=(OISAC, EKF), workers: int = 1, **overrides):
    """Mean braking distance per (level, estimator); rep r runs with seed r.

    Returns rows (v_level, estimator, mean, std, distances) ordered by level then estimator.
    """
    jobs = [(lv, est, r, overrides) for lv in levels for est in estimators for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            dists = list(pool.map(_braking_run, jobs))
    else:
        dists = [_braking_run(j) for j in jobs]
    rows = []
    k = 0
    for lv in levels:
        for est in estimators:
            d = [float(x) for x in dists[k : k + reps]]
            k += reps
            # exact rational arithmetic, so identical reps give a std of exactly 0
            rows.append((lv, est, statistics.fmean(d), statistics.pstdev(d), tuple(d)))
    return rows


def braking_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("v_level", "estimator", "mean_braking_distance", "std_braking_distance", "reps"))
    for lv, est, mean, std, d in rows:
        w.writerow((format(lv, "g"), est, format(mean, ".10g"), format(std, ".10g"), len(d)))
    return buf.getvalue()


def lyapunov_check(samples: int = 1000, seed: int = 0, margin: float = 1.05, bounds: Bounds | None = None, n_bits: int = 8):
    """Sample states, set gains to ``margin`` x gain_floor, and test dV/dt <= -phi V.

    Returns (n_pass, failures) where each failure is a dict holding the full sample.
    """
    bounds = bounds or Bounds(0.6, 0.2, 0.5, 0.2)
    consts = error_bounds(bounds, GateState(ZERO_TWIST, bounds), *velocity_quantizers(bounds.v_max, bounds.omega_max, n_bits))
    rng = np.random.default_rng(seed)
    n_pass = 0
    failures = []
    for _ in range(samples):
        s = RelativeState(rng.uniform(0.4, 1.25), rng.uniform(-0.3, 0.3), rng.uniform(-np.pi / 3, np.pi / 3))
        eps = rng.uniform(0.05, 0.5, 3) * rng.choice([-1.0, 1.0], 3)
        s_bar = DesiredPose(s.x_lf - eps[0], s.y_lf - eps[1], s.gamma - eps[2])
        u_hat = Twist(rng.uniform(-consts.v_hat_plus, consts.v_hat_plus), rng.uniform(-consts.omega_hat_plus, consts.omega_hat_plus))
        u_true = Twist(
            u_hat.v + rng.uniform(-consts.delta_v_plus, consts.delta_v_plus),
            u_hat.omega + rng.uniform(-consts.delta_omega_plus, consts.delta_omega_plus),
        )
        k3 = margin * gain_floor(s, eps, consts, 0.0)[2]
        k1, k2, _ = gain_floor(s, eps, consts, k3)
        gains = GainConfig(margin * k1, margin * k2, k3)
        u_f = control(s, s_bar, u_hat, gains)
        vdot = lyapunov_rate(s, eps, u_true, u_hat, u_f)
        bound = -convergence_rate(s, gains) * lyapunov(eps)
        if vdot <= bound + 1e-9:
            n_pass += 1
        else:
            failures.append(
                {
                    "s": s.as_array().tolist(),
                    "eps": eps.tolist(),
                    "u_hat": [u_hat.v, u_hat.omega],
                    "u_true": [u_true.v, u_true.omega],
                    "gains": [gains.k1, gains.k2, gains.k3],
                    "vdot": vdot,
                    "bound": bound,
                }
            )
    return n_pass, failures
