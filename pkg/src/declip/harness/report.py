"""CSV / JSON reports and figures."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

COLUMNS = ("signal", "input_sdr", "method", "output_sdr", "delta_sdr", "delta_sdr_c",
           "consistent_R", "consistent_HL", "iters", "seconds")
FLOATS = ("input_sdr", "output_sdr", "delta_sdr", "delta_sdr_c", "seconds")
BOOLS = ("consistent_R", "consistent_HL")

#: JSON schema of one report record; the file holds a list of these
RECORD_SCHEMA = {
    "type": "object",
    "required": list(COLUMNS),
    "properties": {
        "signal": {"type": "string"},
        "input_sdr": {"type": "number"},
        "method": {"type": "string"},
        "output_sdr": {"type": ["number", "null"]},
        "delta_sdr": {"type": ["number", "null"]},
        "delta_sdr_c": {"type": ["number", "null"]},
        "consistent_R": {"type": ["boolean", "null"]},
        "consistent_HL": {"type": ["boolean", "null"]},
        "iters": {"type": "integer"},
        "seconds": {"type": ["number", "null"]},
        "certified": {"type": ["boolean", "null"]},
        "error": {"type": "string"},
    },
}


def sort_key(row):
    return (row["signal"], float(row["input_sdr"]), row["method"])


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{v:.4f}"


def row_to_csv(row):
    out = {}
    for c in COLUMNS:
        v = row[c]
        if c in FLOATS:
            out[c] = _fmt(v)
        elif c in BOOLS:
            out[c] = "" if v is None else str(bool(v)).lower()
        else:
            out[c] = str(v)
    return out


def row_from_csv(rec):
    row = dict(rec)
    for c in FLOATS:
        row[c] = float(rec[c])
    for c in BOOLS:
        row[c] = None if rec[c] == "" else rec[c] == "true"
    row["iters"] = int(rec["iters"])
    return row


def _json_value(c, v):
    if c in FLOATS:
        return None if v is None or math.isnan(v) else round(float(v), 4)
    return v


def write_csv(rows, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in sorted(rows, key=sort_key):
            w.writerow(row_to_csv(row))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return [row_from_csv(r) for r in csv.DictReader(fh)]


def write_json(rows, path):
    path = Path(path)
    recs = []
    for row in sorted(rows, key=sort_key):
        rec = {c: _json_value(c, row[c]) for c in COLUMNS}
        if "certified" in row:
            rec["certified"] = row["certified"]
        if row.get("error"):
            rec["error"] = row["error"]
        recs.append(rec)
    path.write_text(json.dumps(recs, indent=1) + "\n")
    return path


def emit_report(rows, path, fmt="csv"):
    if fmt == "csv":
        return write_csv(rows, path)
    if fmt == "json":
        return write_json(rows, path)
    raise ValueError(f"unknown report format {fmt!r}")


def validate_record(rec):
    """Check one JSON record against :data:`RECORD_SCHEMA`; raises ValueError."""
    kinds = {"string": str, "number": (int, float), "integer": int, "boolean": bool,
             "null": type(None)}
    for key in RECORD_SCHEMA["required"]:
        if key not in rec:
            raise ValueError(f"missing field {key!r}")
    for key, val in rec.items():
        spec = RECORD_SCHEMA["properties"].get(key)
        if spec is None:
            raise ValueError(f"unknown field {key!r}")
        types = spec["type"] if isinstance(spec["type"], list) else [spec["type"]]
        ok = any(isinstance(val, kinds[t]) and not (t in ("number", "integer") and isinstance(val, bool))
                 for t in types)
        if not ok:
            raise ValueError(f"field {key!r} has type {type(val).__name__}, expected {types}")


CLIP_COLUMNS = ("signal", "input_sdr", "achieved_sdr", "theta_c", "percent_clipped")


def write_clipping(stats, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CLIP_COLUMNS)
        for s in sorted(stats, key=lambda r: (r["signal"], r["input_sdr"])):
            w.writerow([s["signal"]] + [_fmt(s[c]) for c in CLIP_COLUMNS[1:]])
    return path


def plot_clipping(stats, path):
    """Percentage of clipped samples against input SDR, one line per signal."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in sorted({s["signal"] for s in stats}):
        pts = sorted((s["input_sdr"], s["percent_clipped"]) for s in stats if s["signal"] == name)
        ax.plot(*zip(*pts), marker="o", label=name)
    ax.set_xlabel("input SDR (dB)")
    ax.set_ylabel("clipped samples (%)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_delta_sdrc(rows, path):
    """Average ΔSDRc over signals against input SDR, one line per method."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for method in sorted({r["method"] for r in rows}):
        levels = sorted({r["input_sdr"] for r in rows if r["method"] == method})
        avg = []
        for lv in levels:
            vals = [r["delta_sdr_c"] for r in rows if r["method"] == method and r["input_sdr"] == lv]
            vals = [v for v in vals if v is not None and not math.isnan(v)]
            avg.append(np.mean(vals) if vals else np.nan)
        ax.plot(levels, avg, marker="o", label=method)
    ax.set_xlabel("input SDR (dB)")
    ax.set_ylabel("average ΔSDRc (dB)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
