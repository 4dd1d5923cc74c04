"""Experiment orchestration: signals x input-SDR levels x methods."""
from __future__ import annotations

import ast
import configparser
import re
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..signal import (
    Restoration, clip_to_target_sdr, delta_sdr, delta_sdr_clipped, in_gamma_clipped,
    in_gamma_reliable, sdr,
)
from . import report
from .audio import load_audio, save_audio
from .registry import certify, get_method
from .suite import GENERATORS, LENGTH, SAMPLE_RATE, make_suite

DEFAULT_LEVELS = (1.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0)


@dataclass
class ExperimentConfig:
    levels: tuple = DEFAULT_LEVELS
    methods: tuple = ()
    seed: int = 0
    output: Path = Path("results")
    replace_reliable: bool = False
    signals: tuple = ("suite",)
    length: int = LENGTH
    workers: int = 1
    timing: bool = True  # false writes "nan" seconds so reruns are byte-identical
    write_audio: bool = True
    figures: bool = True
    overrides: dict = field(default_factory=dict)  # method name -> {config field: value}

    def __post_init__(self):
        self.levels = tuple(float(v) for v in self.levels)
        if not self.levels or any(v <= 0 for v in self.levels) or list(self.levels) != sorted(set(self.levels)):
            raise ValueError("levels must be positive, distinct and sorted")
        self.methods = tuple(self.methods)
        for name in self.methods:
            get_method(name).configure(self.overrides.get(name))
        for name in self.overrides:
            if name not in self.methods:
                raise ValueError(f"overrides given for method {name!r} that is not run")
        self.output = Path(self.output)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def _value(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _list(text):
    return [s.strip() for s in text.replace("\n", ",").split(",") if s.strip()]


def load_config(path):
    """Parse an INI experiment file (see README for the keys)."""
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    if not cp.read(path):
        raise FileNotFoundError(path)
    if "experiment" not in cp:
        raise ValueError(f"{path}: missing [experiment] section")
    ex = cp["experiment"]
    known = {"levels", "methods", "seed", "output", "replace_reliable", "signals", "length",
             "workers", "timing", "write_audio", "figures"}
    bad = set(ex) - known
    if bad:
        raise ValueError(f"{path}: unknown key(s) {', '.join(sorted(bad))}")
    kw = {}
    if "levels" in ex:
        kw["levels"] = [float(v) for v in _list(ex["levels"])]
    if "methods" in ex:
        kw["methods"] = _list(ex["methods"])
    if "signals" in ex:
        kw["signals"] = tuple(
            s if s == "suite" or s.startswith("suite:") else str((path.parent / s).resolve())
            for s in _list(ex["signals"]))
    for key in ("seed", "length", "workers"):
        if key in ex:
            kw[key] = ex.getint(key)
    for key in ("replace_reliable", "timing", "write_audio", "figures"):
        if key in ex:
            kw[key] = ex.getboolean(key)
    if "output" in ex:
        kw["output"] = path.parent / ex["output"]
    overrides = {}
    for sec in cp.sections():
        if sec.startswith("method:"):
            overrides[sec[len("method:"):].strip()] = {k: _value(v) for k, v in cp[sec].items()}
    return ExperimentConfig(overrides=overrides, **kw)


def resolve_signals(cfg):
    """``[(name, samples, sample_rate)]`` in configuration order."""
    out = []
    suite = None
    for entry in cfg.signals:
        if entry == "suite" or entry.startswith("suite:"):
            if suite is None:
                suite = make_suite(cfg.seed, cfg.length)
            names = list(GENERATORS) if entry == "suite" else [entry.split(":", 1)[1]]
            for n in names:
                if n not in suite:
                    raise ValueError(f"unknown suite signal {n!r}")
                out.append((n, suite[n], SAMPLE_RATE))
        else:
            s = load_audio(entry)
            out.append((Path(entry).stem, s.samples, s.sample_rate))
    names = [n for n, _, _ in out]
    if len(set(names)) != len(names):
        raise ValueError("signal names must be unique")
    return out


def slug(text):
    return re.sub(r"[^A-Za-z0-9]+", "-", text).strip("-").lower()


def evaluate(x, y, mask, xhat):
    """Metrics and consistency flags of one output."""
    return {
        "output_sdr": sdr(x, xhat),
        "delta_sdr": delta_sdr(x, y, xhat),
        "delta_sdr_c": delta_sdr_clipped(x, y, xhat, mask),
        "consistent_R": bool(in_gamma_reliable(xhat, mask, y)),
        "consistent_HL": bool(in_gamma_clipped(xhat, mask)),
    }


def run_cell(x, level, method_name, overrides=None, replace_reliable=False):
    """Clip ``x`` to ``level`` dB, run one method and score it.

    Returns ``(row, restoration)``; exceptions are caught and recorded in
    ``row["error"]``.
    """
    y, mask, _ = clip_to_target_sdr(x, level)
    row = {"input_sdr": float(level), "method": method_name, "output_sdr": np.nan,
           "delta_sdr": np.nan, "delta_sdr_c": np.nan, "consistent_R": None,
           "consistent_HL": None, "iters": 0, "seconds": np.nan, "certified": None}
    try:
        m = get_method(method_name)
        cfg = m.configure(overrides)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            t0 = time.perf_counter()
            res = m.run(y, mask, cfg)
            row["seconds"] = time.perf_counter() - t0
        xhat = np.array(res.samples, dtype=np.float64)
        if replace_reliable:
            xhat[mask.reliable] = y[mask.reliable]
        if not np.isfinite(xhat).all():
            raise FloatingPointError("non-finite output samples")
        row.update(evaluate(x, y, mask, xhat))
        row["iters"] = int(res.iterations)
        row["certified"] = certify(m, res.notes, row["consistent_R"], row["consistent_HL"])
        return row, Restoration(xhat, res.iterations, res.notes)
    except Exception as exc:  # isolate the cell, keep the run going
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["traceback"] = traceback.format_exc()
        return row, None


def _cell_job(args):
    name, x, level, method, overrides, replace_reliable = args
    row, res = run_cell(x, level, method, overrides, replace_reliable)
    row["signal"] = name
    return row, None if res is None else res.samples


def run_experiment(cfg, log=print):
    """Run every cell, write reports / audio / figures into ``cfg.output``.

    Returns ``(rows, clipping_stats)``.  Cells run in a process pool when
    ``cfg.workers > 1``; results are merged in (signal, level, method) order
    so the output does not depend on scheduling.
    """
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    signals = resolve_signals(cfg)
    stats = []
    jobs = []
    for name, x, rate in signals:
        for level in cfg.levels:
            y, mask, theta = clip_to_target_sdr(x, level)
            stats.append({"signal": name, "input_sdr": level, "achieved_sdr": sdr(x, y),
                          "theta_c": theta, "percent_clipped": mask.percent_clipped()})
            if cfg.write_audio:
                (out / "audio").mkdir(exist_ok=True)
                save_audio(out / "audio" / f"{slug(name)}_{level:g}dB_clipped.wav", y, rate)
            for method in cfg.methods:
                jobs.append((name, x, level, method, cfg.overrides.get(method), cfg.replace_reliable))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_cell_job(job))
            row = results[-1][0]
            log(f"{row['signal']:>14s} {row['input_sdr']:5.1f} dB {row['method']:>9s}  "
                + (f"ΔSDRc {row['delta_sdr_c']:8.3f} dB  {row['seconds']:7.2f} s"
                   if "error" not in row else f"FAILED {row['error']}"))
    rates = {name: rate for name, _, rate in signals}
    rows = []
    for row, samples in results:
        if not cfg.timing:
            row["seconds"] = np.nan
        rows.append(row)
        if samples is not None and cfg.write_audio:
            fname = f"{slug(row['signal'])}_{row['input_sdr']:g}dB_{slug(row['method'])}.wav"
            save_audio(out / "audio" / fname, samples, rates[row["signal"]])
    rows.sort(key=report.sort_key)
    report.write_clipping(stats, out / "clipping.csv")
    if rows:
        report.write_csv(rows, out / "results.csv")
        report.write_json(rows, out / "results.json")
    failures = [r for r in rows if r.get("error")]
    if failures:
        with (out / "failures.txt").open("w") as fh:
            for r in failures:
                fh.write(f"{r['signal']} {r['input_sdr']:g} dB {r['method']}\n{r['traceback']}\n")
    if cfg.figures:
        report.plot_clipping(stats, out / "clipping.png")
        if rows:
            report.plot_delta_sdrc(rows, out / "delta_sdrc.png")
    return rows, stats
