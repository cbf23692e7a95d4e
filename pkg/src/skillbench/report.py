"""Offline report rendering: longitudinal figures plus delimited tables.

Writes, for one user, a summary.csv of every stored outcome row and one PNG
trend figure per measure that has at least one defined value across trials.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .model import MEASURE_NAMES
from .store import SessionStore

MEASURE_LABELS = {
    "t_d": "response delay [s]",
    "r_p": "successful response [%]",
    "t_s": "settling time [s]",
    "a_r": "initial accuracy",
    "a_s": "settled accuracy",
    "s": "stability (dimensionless jerk)",
    "v_avg": "average speed [m/s]",
    "t_ob": "time out of bounds [%]",
}


def render_user_report(store: SessionStore, user: str, out_dir: str) -> list[str]:
    """Write summary.csv and per-measure trend figures; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    csv_path = out / "summary.csv"
    csv_path.write_text(store.export_csv_summary(user), encoding="utf-8")
    written.append(str(csv_path))

    for measure in MEASURE_NAMES:
        series = store.longitudinal_series(user, measure)
        if not series:
            continue
        xs = list(range(1, len(series) + 1))
        ys = [v for _, v in series]
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        ax.plot(xs, ys, "o-", color="#1f77b4")
        ax.set_xlabel("trial")
        ax.set_ylabel(MEASURE_LABELS.get(measure, measure))
        ax.set_title(f"{user}: {measure} over trials")
        ax.set_xticks(xs)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out / f"measure_{measure}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(str(path))
    return written
