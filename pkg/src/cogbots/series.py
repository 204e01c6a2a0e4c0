"""Plot-ready CSV series derived from a trace.

Files and columns (fixed order):

* ``p_sl.csv``     -- ``event,p_sl``: one row per search-light decision
* ``p_rsp.csv``    -- ``event,p_rsp``: one row per respond-call decision
* ``gains.csv``    -- ``visit,k_p,k_d,k_pg,k_dg``: robot 1 gains and the
  three-robot mean after ``visit`` cell entries
* ``response.csv`` -- ``visit,time,theta,theta_ref``: heading step response
  with the gains held after each configured visit count
"""

from __future__ import annotations

from pathlib import Path

from .adaptation import group_gains
from .config import ScenarioConfig
from .dynamics import AttitudeState, ControllerGains, simulate_response
from .harness import TraceLog, csv_text

SERIES = ("probabilities", "gains", "response")
GAIN_COLUMNS = ("visit", "k_p", "k_d", "k_pg", "k_dg")
RESPONSE_COLUMNS = ("visit", "time", "theta", "theta_ref")


def probability_rows(log: TraceLog, kind: str) -> list[tuple[int, float]]:
    return [(i, d.probability) for i, d in enumerate(d for d in log.decisions if d.kind == kind)]


def gains_by_visit(log: TraceLog, config: ScenarioConfig) -> dict[int, dict[int, tuple[float, float]]]:
    """Per robot, the (k_p, k_d) held right after each visit count."""
    out: dict[int, dict[int, tuple[float, float]]] = {}
    initial = (config.gains.k_po, config.gains.k_do)
    for row in log.rows:
        per_robot = out.setdefault(row.robot, {0: initial})
        per_robot.setdefault(row.visits, (row.k_p, row.k_d))
    return out


def gain_rows(log: TraceLog, config: ScenarioConfig) -> list[tuple]:
    table = gains_by_visit(log, config)
    if not table:
        return []
    robots = sorted(table)
    common = sorted(set.intersection(*(set(table[r]) for r in robots)))
    rows = []
    for n in common:
        kp1, kd1 = table[robots[0]][n]
        if len(robots) == 3:
            k_pg, k_dg = group_gains([table[r][n][0] for r in robots], [table[r][n][1] for r in robots])
        else:
            k_pg, k_dg = kp1, kd1
        rows.append((n, kp1, kd1, k_pg, k_dg))
    return rows


def response_rows(log: TraceLog, config: ScenarioConfig) -> list[tuple]:
    by_visit = {row[0]: row for row in gain_rows(log, config)}
    rp = config.response
    rows = []
    for n in rp.visits:
        if n not in by_visit:
            continue
        _, _, _, k_pg, k_dg = by_visit[n]
        resp = simulate_response(AttitudeState(rp.theta0, 0.0), ControllerGains(k_pg, k_dg),
                                 config.plant, rp.theta_ref, config.dt, rp.horizon)
        rows.extend((n, float(t), float(th), rp.theta_ref) for t, th in zip(resp.times, resp.theta))
    return rows


def emit_series(log: TraceLog, which: str, out_dir: str | Path, config: ScenarioConfig) -> list[Path]:
    """Write the CSV files for one figure series and return their paths."""
    out = Path(out_dir)
    if which == "probabilities":
        files = {
            "p_sl.csv": (("event", "p_sl"), probability_rows(log, "search_light")),
            "p_rsp.csv": (("event", "p_rsp"), probability_rows(log, "respond_call")),
        }
    elif which == "gains":
        files = {"gains.csv": (GAIN_COLUMNS, gain_rows(log, config))}
    elif which == "response":
        files = {"response.csv": (RESPONSE_COLUMNS, response_rows(log, config) if log.rows else [])}
    else:
        raise ValueError(f"unknown series {which!r}; choose from {', '.join(SERIES)}")
    written = []
    for name, (header, rows) in files.items():
        path = out / name
        try:
            path.write_text(csv_text(header, rows), encoding="utf-8", newline="")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
        written.append(path)
    return written
