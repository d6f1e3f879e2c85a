"""CSV/JSON emission for traces, reports and sweeps. All writes are atomic (temp file + rename).

Stable schemas:

* trace CSV: ``k,l,U,U_PS,U_PS1,U_PS2,U_PF,U_MS,U_MF`` ordered by k then l.
* sweep CSV: :data:`SWEEP_COLUMNS`, one row per (value, scheme, engine).
* CDF CSVs: ``m,F`` and ``d,G``.
* UE log CSV: ``replication,id,arrival,distance,attempts,delay,state``.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import tempfile
from enum import Enum
from pathlib import Path

import numpy as np

from .analytic import SlotTrace

TRACE_CSV_COLUMNS = ("k", "l", "U", "U_PS", "U_PS1", "U_PS2", "U_PF", "U_MS", "U_MF")
SWEEP_COLUMNS = ("axis", "value", "scheme", "engine", "U", "R_RA", "P_C", "P_S", "F1", "L_bar", "D_RA",
                 "D_RA_measured", "T_F", "p_PF", "p_MF", "pc_clamped_slots", "breakdown_cells")
UE_LOG_COLUMNS = ("replication", "id", "arrival", "distance", "attempts", "delay", "state")


def atomic_write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x.is_integer() and abs(x) < 1e15:
            return str(int(x))
        return repr(x)
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def trace_to_csv(trace: SlotTrace) -> str:
    ps = trace.U_PS
    rows = []
    for k in range(trace.K):
        for l in range(trace.L):
            rows.append((k + 1, l + 1, trace.U[k, l], ps[k, l], trace.U_PS1[k, l], trace.U_PS2[k, l],
                         trace.U_PF[k, l], trace.U_MS[k, l], trace.U_MF[k, l]))
    return _csv_text(TRACE_CSV_COLUMNS, rows)


def trace_from_csv(text: str, T_RAP: float) -> SlotTrace:
    rows = list(csv.DictReader(io.StringIO(text)))
    K = max(int(r["k"]) for r in rows)
    L = max(int(r["l"]) for r in rows)
    cols = {c: np.zeros((K, L)) for c in TRACE_CSV_COLUMNS[2:]}
    for r in rows:
        k, l = int(r["k"]) - 1, int(r["l"]) - 1
        for c in cols:
            cols[c][k, l] = float(r[c])
    return SlotTrace(T_RAP=T_RAP, U=cols["U"], U_PS1=cols["U_PS1"], U_PS2=cols["U_PS2"], U_PF=cols["U_PF"],
                     U_MS=cols["U_MS"], U_MF=cols["U_MF"])


def trace_to_dict(trace: SlotTrace) -> dict:
    return {
        "T_RAP": trace.T_RAP, "K": trace.K, "L": trace.L, "t": trace.t,
        "columns": {c: trace.column(c) for c in TRACE_CSV_COLUMNS[2:]},
        "idle": trace.idle, "breakdown_cells": trace.breakdown_cells, "lost_mass": trace.lost_mass,
        "meta": trace.meta,
    }


def trace_from_dict(d: dict) -> SlotTrace:
    c = d["columns"]
    return SlotTrace(T_RAP=d["T_RAP"], U=c["U"], U_PS1=c["U_PS1"], U_PS2=c["U_PS2"], U_PF=c["U_PF"],
                     U_MS=c["U_MS"], U_MF=c["U_MF"], idle=d.get("idle"),
                     breakdown_cells=d.get("breakdown_cells", 0), lost_mass=d.get("lost_mass", 0.0),
                     meta=d.get("meta", {}))


def write_trace(trace: SlotTrace, path, fmt: str = "csv") -> Path:
    if fmt == "csv":
        return atomic_write_text(path, trace_to_csv(trace))
    return atomic_write_text(path, dumps(trace_to_dict(trace)))


def report_row(report, axis: str = "", value=None) -> dict:
    d = report.delays
    return {
        "axis": axis, "value": value, "scheme": report.scheme, "engine": report.engine, "U": report.U,
        "R_RA": report.R_RA, "P_C": report.P_C, "P_S": report.P_S, "F1": report.F[0] if report.F else None,
        "L_bar": report.L_bar, "D_RA": report.D_RA, "D_RA_measured": report.D_RA_measured,
        "T_F": d.T_F if d else None, "p_PF": d.p_PF if d else None, "p_MF": d.p_MF if d else None,
        "pc_clamped_slots": report.diagnostics.get("pc_clamped_slots"),
        "breakdown_cells": report.diagnostics.get("breakdown_cells"),
    }


def rows_to_csv(rows, columns=SWEEP_COLUMNS) -> str:
    return _csv_text(columns, [[r.get(c) for c in columns] for r in rows])


def cdf_tables(report) -> tuple[str, str]:
    f = _csv_text(("m", "F"), [(m + 1, v) for m, v in enumerate(report.F or [])])
    g = _csv_text(("d", "G"), list(zip(report.G_grid or [], report.G or [])))
    return f, g


def ue_log_csv(tables) -> str:
    """``tables`` is a list of per-replication column dicts from :func:`nora.simulate.ue_table`."""
    rows = []
    for r, t in enumerate(tables):
        if t is None:
            continue
        for i in range(len(t["id"])):
            delay = t["delay"][i]
            rows.append((r, t["id"][i], t["arrival"][i], t["distance"][i], t["attempts"][i],
                         None if not np.isfinite(delay) else delay, t["state"][i]))
    return _csv_text(UE_LOG_COLUMNS, rows)
