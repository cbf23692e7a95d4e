"""Trial persistence: embedded relational store plus the SQL text artifact.

One sqlite file holds users, trials, prompts, raw samples, covariates and
outcome rows.  Writes are transactional (a partial trial is never visible);
the export is a deterministic DDL + INSERT script that re-imports into any
standard SQL engine.
"""
from __future__ import annotations

import json
import sqlite3
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .model import (
    CommandVector,
    CovariateRecord,
    MEASURE_NAMES,
    OutcomeReport,
    Pose,
    PromptSpec,
    Task,
    TrajectorySample,
    TrialConfig,
    config_from_dict,
    config_to_dict,
)

DDL = """\
CREATE TABLE users (
    id INTEGER PRIMARY KEY,
    label TEXT NOT NULL UNIQUE,
    created_at TEXT NOT NULL
);
CREATE TABLE trials (
    id INTEGER PRIMARY KEY,
    user_id INTEGER NOT NULL REFERENCES users(id),
    config_json TEXT NOT NULL,
    task TEXT NOT NULL,
    started_at TEXT NOT NULL,
    seed INTEGER NOT NULL,
    status TEXT NOT NULL DEFAULT 'complete'
);
CREATE TABLE prompts (
    trial_id INTEGER NOT NULL REFERENCES trials(id),
    m INTEGER NOT NULL,
    theta_hat REAL NOT NULL,
    mag_hat REAL,
    t_m REAL NOT NULL,
    PRIMARY KEY (trial_id, m)
);
CREATE TABLE samples (
    trial_id INTEGER NOT NULL REFERENCES trials(id),
    t REAL NOT NULL,
    ux REAL NOT NULL,
    uy REAL NOT NULL,
    pose_x REAL,
    pose_y REAL,
    heading REAL,
    segment_id INTEGER,
    in_bounds INTEGER
);
CREATE TABLE covariates (
    trial_id INTEGER NOT NULL REFERENCES trials(id),
    instrument_id TEXT NOT NULL,
    responses_json TEXT NOT NULL,
    raw_total REAL,
    administered_at TEXT NOT NULL
);
CREATE TABLE outcomes (
    trial_id INTEGER NOT NULL REFERENCES trials(id),
    measure_name TEXT NOT NULL,
    value REAL,
    defined_flag INTEGER NOT NULL,
    PRIMARY KEY (trial_id, measure_name)
);
"""


class StoreError(RuntimeError):
    """Rejected write or unsatisfiable read against the trial store."""


@dataclass
class TrialBundle:
    """Everything persisted for one trial; samples may be either task's kind."""

    user: str
    config: TrialConfig
    started_at: str
    report: Optional[OutcomeReport] = None
    prompts: Sequence[PromptSpec] = ()
    command_samples: Sequence[CommandVector] = ()
    trajectory_samples: Sequence[TrajectorySample] = ()
    covariates: Sequence[CovariateRecord] = ()
    trial_id: Optional[int] = None

    @property
    def task(self) -> Task:
        return self.config.task

    def sample_count(self) -> int:
        return len(self.command_samples) + len(self.trajectory_samples)


class SessionStore:
    """Single-writer transactional store over one sqlite file."""

    def __init__(self, path: Union[str, Path]) -> None:
        self.path = str(path)
        self._conn = sqlite3.connect(self.path)
        self._conn.execute("PRAGMA foreign_keys = ON")
        self._ensure_schema()

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "SessionStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _ensure_schema(self) -> None:
        have = {
            row[0]
            for row in self._conn.execute(
                "SELECT name FROM sqlite_master WHERE type = 'table'"
            )
        }
        if "trials" not in have:
            self._conn.executescript(DDL)
            self._conn.commit()

    # -- writes --------------------------------------------------------------

    def ensure_user(self, label: str, created_at: str = "1970-01-01T00:00:00") -> int:
        row = self._conn.execute("SELECT id FROM users WHERE label = ?", (label,)).fetchone()
        if row:
            return row[0]
        cur = self._conn.execute(
            "INSERT INTO users (label, created_at) VALUES (?, ?)", (label, created_at)
        )
        self._conn.commit()
        return cur.lastrowid

    def persist_trial(self, bundle: TrialBundle) -> int:
        """Atomically write a complete trial; returns the trial id.

        Partial bundles (no samples, or no outcome report) are rejected with
        nothing written.  A caller-supplied trial id that already exists is
        rejected and the store is left unchanged.
        """
        if bundle.report is None:
            raise StoreError("incomplete bundle: missing outcome report")
        if bundle.sample_count() == 0:
            raise StoreError("incomplete bundle: no samples")
        if bundle.task is Task.COMMAND_FOLLOWING and not bundle.prompts:
            raise StoreError("incomplete bundle: command trial without prompts")
        user_id = self.ensure_user(bundle.user)
        cur = self._conn.cursor()
        try:
            cur.execute("BEGIN")
            if bundle.trial_id is not None:
                exists = cur.execute(
                    "SELECT 1 FROM trials WHERE id = ?", (bundle.trial_id,)
                ).fetchone()
                if exists:
                    raise StoreError(f"trial id {bundle.trial_id} already exists")
            cur.execute(
                "INSERT INTO trials (id, user_id, config_json, task, started_at, seed, status)"
                " VALUES (?, ?, ?, ?, ?, ?, 'complete')",
                (
                    bundle.trial_id,
                    user_id,
                    json.dumps(config_to_dict(bundle.config), sort_keys=True),
                    bundle.task.value,
                    bundle.started_at,
                    bundle.config.rng_seed,
                ),
            )
            trial_id = bundle.trial_id if bundle.trial_id is not None else cur.lastrowid
            cur.executemany(
                "INSERT INTO prompts (trial_id, m, theta_hat, mag_hat, t_m) VALUES (?, ?, ?, ?, ?)",
                [(trial_id, p.m, p.theta_hat, p.mag_hat, p.duration) for p in bundle.prompts],
            )
            cur.executemany(
                "INSERT INTO samples (trial_id, t, ux, uy) VALUES (?, ?, ?, ?)",
                [(trial_id, s.t, s.ux, s.uy) for s in bundle.command_samples],
            )
            cur.executemany(
                "INSERT INTO samples (trial_id, t, ux, uy, pose_x, pose_y, heading, segment_id, in_bounds)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                [
                    (
                        trial_id,
                        s.t,
                        s.command.ux,
                        s.command.uy,
                        s.pose.x,
                        s.pose.y,
                        s.pose.heading,
                        s.segment_id,
                        1 if s.in_bounds else 0,
                    )
                    for s in bundle.trajectory_samples
                ],
            )
            cur.executemany(
                "INSERT INTO covariates (trial_id, instrument_id, responses_json, raw_total, administered_at)"
                " VALUES (?, ?, ?, ?, ?)",
                [
                    (trial_id, c.instrument_id, json.dumps(list(c.responses)), c.raw_total, c.administered_at)
                    for c in bundle.covariates
                ],
            )
            cur.executemany(
                "INSERT INTO outcomes (trial_id, measure_name, value, defined_flag) VALUES (?, ?, ?, ?)",
                [
                    (trial_id, name, value, 1 if value is not None else 0)
                    for name, value in bundle.report.measures().items()
                ],
            )
            self._conn.commit()
            return trial_id
        except BaseException:
            self._conn.rollback()
            raise

    def record_aborted(self, user: str, config: TrialConfig, started_at: str) -> int:
        """Record an aborted trial as a bare row: no samples, no outcomes."""
        user_id = self.ensure_user(user)
        cur = self._conn.execute(
            "INSERT INTO trials (user_id, config_json, task, started_at, seed, status)"
            " VALUES (?, ?, ?, ?, ?, 'aborted')",
            (
                user_id,
                json.dumps(config_to_dict(config), sort_keys=True),
                config.task.value,
                started_at,
                config.rng_seed,
            ),
        )
        self._conn.commit()
        return cur.lastrowid

    def add_covariates(self, trial_id: int, covariates: Sequence[CovariateRecord]) -> None:
        self._trial_row(trial_id)
        self._conn.executemany(
            "INSERT INTO covariates (trial_id, instrument_id, responses_json, raw_total, administered_at)"
            " VALUES (?, ?, ?, ?, ?)",
            [
                (trial_id, c.instrument_id, json.dumps(list(c.responses)), c.raw_total, c.administered_at)
                for c in covariates
            ],
        )
        self._conn.commit()

    # -- reads ---------------------------------------------------------------

    def _trial_row(self, trial_id: int):
        row = self._conn.execute(
            "SELECT t.id, u.label, t.config_json, t.task, t.started_at, t.seed, t.status"
            " FROM trials t JOIN users u ON u.id = t.user_id WHERE t.id = ?",
            (trial_id,),
        ).fetchone()
        if row is None:
            raise StoreError(f"unknown trial id {trial_id}")
        return row

    def trial_ids(self, user: Optional[str] = None) -> list[int]:
        if user is None:
            rows = self._conn.execute("SELECT id FROM trials ORDER BY id").fetchall()
        else:
            rows = self._conn.execute(
                "SELECT t.id FROM trials t JOIN users u ON u.id = t.user_id"
                " WHERE u.label = ? ORDER BY t.id",
                (user,),
            ).fetchall()
            if not rows and not self._user_exists(user):
                raise StoreError(f"unknown user {user!r}")
        return [r[0] for r in rows]

    def _user_exists(self, label: str) -> bool:
        return self._conn.execute("SELECT 1 FROM users WHERE label = ?", (label,)).fetchone() is not None

    def load_trial(self, trial_id: int) -> TrialBundle:
        tid, user, config_json, task, started_at, seed, status = self._trial_row(trial_id)
        if status != "complete":
            raise StoreError(f"trial {trial_id} is {status}, not complete")
        config = config_from_dict(json.loads(config_json))
        prompts = [
            PromptSpec(m=m, theta_hat=theta, mag_hat=mag, duration=t_m)
            for m, theta, mag, t_m in self._conn.execute(
                "SELECT m, theta_hat, mag_hat, t_m FROM prompts WHERE trial_id = ? ORDER BY m",
                (trial_id,),
            )
        ]
        command_samples: list[CommandVector] = []
        trajectory_samples: list[TrajectorySample] = []
        sample_rows = self._conn.execute(
            "SELECT t, ux, uy, pose_x, pose_y, heading, segment_id, in_bounds"
            " FROM samples WHERE trial_id = ? ORDER BY t, rowid",
            (trial_id,),
        ).fetchall()
        v_max = (config.sim.v_max if config.sim else 1.0)
        for t, ux, uy, px, py, heading, segment_id, in_bounds in sample_rows:
            if px is None:
                command_samples.append(CommandVector(t, ux, uy))
            else:
                trajectory_samples.append(
                    TrajectorySample(
                        t=t,
                        pose=Pose(px, py, heading),
                        command=CommandVector(t, ux, uy),
                        v=abs(uy) * v_max,
                        segment_id=segment_id,
                        in_bounds=bool(in_bounds),
                    )
                )
        covariates = [
            CovariateRecord(inst, tuple(json.loads(resp)), administered, total)
            for inst, resp, total, administered in self._conn.execute(
                "SELECT instrument_id, responses_json, raw_total, administered_at"
                " FROM covariates WHERE trial_id = ? ORDER BY rowid",
                (trial_id,),
            )
        ]
        return TrialBundle(
            user=user,
            config=config,
            started_at=started_at,
            report=None,
            prompts=prompts,
            command_samples=command_samples,
            trajectory_samples=trajectory_samples,
            covariates=covariates,
            trial_id=tid,
        )

    def stored_outcomes(self, trial_id: int) -> dict[str, Optional[float]]:
        self._trial_row(trial_id)
        return {
            name: value
            for name, value, _flag in self._conn.execute(
                "SELECT measure_name, value, defined_flag FROM outcomes"
                " WHERE trial_id = ? ORDER BY measure_name",
                (trial_id,),
            )
        }

    def longitudinal_series(self, user: str, measure: str) -> list[tuple[str, float]]:
        """Time-ordered (started_at, value) points of one measure for a user."""
        if measure not in MEASURE_NAMES:
            raise StoreError(f"unknown measure {measure!r}")
        if not self._user_exists(user):
            raise StoreError(f"unknown user {user!r}")
        rows = self._conn.execute(
            "SELECT t.started_at, o.value FROM outcomes o"
            " JOIN trials t ON t.id = o.trial_id"
            " JOIN users u ON u.id = t.user_id"
            " WHERE u.label = ? AND o.measure_name = ? AND o.defined_flag = 1"
            " ORDER BY t.started_at, t.id",
            (user, measure),
        ).fetchall()
        return [(ts, v) for ts, v in rows]

    # -- exports ---------------------------------------------------------------

    def export_sql(self, user: Optional[str] = None) -> str:
        """Deterministic DDL + INSERT script (byte-identical per store state)."""
        trial_ids = self.trial_ids(user)
        out = [DDL]
        user_rows = self._conn.execute(
            "SELECT id, label, created_at FROM users ORDER BY id"
        ).fetchall()
        if user is not None:
            user_rows = [r for r in user_rows if r[1] == user]
        for uid, label, created in user_rows:
            out.append(
                f"INSERT INTO users (id, label, created_at) VALUES "
                f"({uid}, {_sql_str(label)}, {_sql_str(created)});"
            )
        for tid in trial_ids:
            row = self._conn.execute(
                "SELECT id, user_id, config_json, task, started_at, seed, status FROM trials WHERE id = ?",
                (tid,),
            ).fetchone()
            out.append(
                "INSERT INTO trials (id, user_id, config_json, task, started_at, seed, status) VALUES "
                f"({row[0]}, {row[1]}, {_sql_str(row[2])}, {_sql_str(row[3])}, "
                f"{_sql_str(row[4])}, {row[5]}, {_sql_str(row[6])});"
            )
        for tid in trial_ids:
            for m, theta, mag, t_m in self._conn.execute(
                "SELECT m, theta_hat, mag_hat, t_m FROM prompts WHERE trial_id = ? ORDER BY m", (tid,)
            ):
                out.append(
                    "INSERT INTO prompts (trial_id, m, theta_hat, mag_hat, t_m) VALUES "
                    f"({tid}, {m}, {_sql_num(theta)}, {_sql_num(mag)}, {_sql_num(t_m)});"
                )
        for tid in trial_ids:
            for t, ux, uy, px, py, heading, seg, inb in self._conn.execute(
                "SELECT t, ux, uy, pose_x, pose_y, heading, segment_id, in_bounds"
                " FROM samples WHERE trial_id = ? ORDER BY t, rowid",
                (tid,),
            ):
                out.append(
                    "INSERT INTO samples (trial_id, t, ux, uy, pose_x, pose_y, heading, segment_id, in_bounds) VALUES "
                    f"({tid}, {_sql_num(t)}, {_sql_num(ux)}, {_sql_num(uy)}, {_sql_num(px)}, "
                    f"{_sql_num(py)}, {_sql_num(heading)}, {_sql_num(seg)}, {_sql_num(inb)});"
                )
        for tid in trial_ids:
            for inst, resp, total, administered in self._conn.execute(
                "SELECT instrument_id, responses_json, raw_total, administered_at"
                " FROM covariates WHERE trial_id = ? ORDER BY rowid",
                (tid,),
            ):
                out.append(
                    "INSERT INTO covariates (trial_id, instrument_id, responses_json, raw_total, administered_at) VALUES "
                    f"({tid}, {_sql_str(inst)}, {_sql_str(resp)}, {_sql_num(total)}, {_sql_str(administered)});"
                )
        for tid in trial_ids:
            for name, value, flag in self._conn.execute(
                "SELECT measure_name, value, defined_flag FROM outcomes"
                " WHERE trial_id = ? ORDER BY measure_name",
                (tid,),
            ):
                out.append(
                    "INSERT INTO outcomes (trial_id, measure_name, value, defined_flag) VALUES "
                    f"({tid}, {_sql_str(name)}, {_sql_num(value)}, {flag});"
                )
        return "\n".join(out) + "\n"

    def export_jsonl(self, trial_id: int) -> str:
        """One trial as JSON lines: a header line, prompt lines, sample lines."""
        bundle = self.load_trial(trial_id)
        lines = [
            json.dumps(
                {
                    "kind": "trial",
                    "trial_id": bundle.trial_id,
                    "user": bundle.user,
                    "task": bundle.task.value,
                    "started_at": bundle.started_at,
                    "config": config_to_dict(bundle.config),
                },
                sort_keys=True,
            )
        ]
        for p in bundle.prompts:
            lines.append(
                json.dumps(
                    {"kind": "prompt", "m": p.m, "theta_hat": p.theta_hat,
                     "mag_hat": p.mag_hat, "duration": p.duration},
                    sort_keys=True,
                )
            )
        for s in bundle.command_samples:
            lines.append(json.dumps({"kind": "sample", "t": s.t, "ux": s.ux, "uy": s.uy}, sort_keys=True))
        for s in bundle.trajectory_samples:
            lines.append(
                json.dumps(
                    {
                        "kind": "sample",
                        "t": s.t,
                        "ux": s.command.ux,
                        "uy": s.command.uy,
                        "pose_x": s.pose.x,
                        "pose_y": s.pose.y,
                        "heading": s.pose.heading,
                        "segment_id": s.segment_id,
                        "in_bounds": s.in_bounds,
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + "\n"

    def export_csv_summary(self, user: Optional[str] = None) -> str:
        """Delimited per-trial outcome rows: one line per (trial, measure)."""
        lines = ["user,trial_id,started_at,task,measure,value,defined"]
        for tid in self.trial_ids(user):
            _tid, label, _cfg, task, started_at, _seed, status = self._trial_row(tid)
            if status != "complete":
                continue
            for name, value in self.stored_outcomes(tid).items():
                val = "" if value is None else repr(value)
                defined = 0 if value is None else 1
                lines.append(f"{label},{tid},{started_at},{task},{name},{val},{defined}")
        return "\n".join(lines) + "\n"


def _sql_str(s: str) -> str:
    return "'" + str(s).replace("'", "''") + "'"


def _sql_num(v) -> str:
    if v is None:
        return "NULL"
    if isinstance(v, float):
        return repr(v)
    return str(v)
