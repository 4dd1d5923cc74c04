"""Command line interface: ``declip run | single | metrics | list-methods``."""
from __future__ import annotations

import argparse
import sys
import time
import warnings

import numpy as np

from ..signal import ClippingError, clip, clip_to_target_sdr, delta_sdr_clipped, sdr, sdr_clipped
from .audio import AudioFormatError, load_audio, save_audio
from .registry import REGISTRY, get_method
from .runner import evaluate, load_config, run_experiment


def cmd_run(args):
    cfg = load_config(args.config)
    if args.workers:
        cfg.workers = args.workers
    log = (lambda *a, **k: None) if args.quiet else print
    rows, stats = run_experiment(cfg, log=log)
    failed = [r for r in rows if r.get("error")]
    print(f"{len(rows)} cells, {len(failed)} failed; reports in {cfg.output}")
    return 2 if failed else 0


def cmd_single(args):
    sig = load_audio(args.input)
    x = sig.samples
    if args.theta is not None:
        y, mask = clip(x, args.theta)
        known_clean = False
    else:
        y, mask, theta = clip_to_target_sdr(x, args.clip_sdr)
        known_clean = True
        print(f"theta_c = {theta:.6g} ({mask.percent_clipped():.2f}% clipped)")
    m = get_method(args.method)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t0 = time.perf_counter()
        res = m.run(y, mask)
        dt = time.perf_counter() - t0
    xhat = np.array(res.samples, dtype=np.float64)
    if args.replace_reliable:
        xhat[mask.reliable] = y[mask.reliable]
    save_audio(args.output, xhat, sig.sample_rate)
    print(f"{m.name}: {res.iterations} iterations, {dt:.2f} s -> {args.output}")
    if known_clean and mask.n_clipped:
        ev = evaluate(x, y, mask, xhat)
        print(f"SDR {ev['output_sdr']:.4f} dB  ΔSDR {ev['delta_sdr']:.4f} dB  "
              f"ΔSDRc {ev['delta_sdr_c']:.4f} dB  consistent_R {ev['consistent_R']}  "
              f"consistent_HL {ev['consistent_HL']}")
    return 0


def cmd_metrics(args):
    ref = load_audio(args.reference).samples
    est = load_audio(args.estimate).samples
    if ref.size != est.size:
        raise ClippingError(f"length mismatch: {ref.size} vs {est.size} samples")
    y, mask = clip(ref, args.theta)
    print(f"SDR    {sdr(ref, est):.4f} dB")
    if mask.n_clipped:
        print(f"SDRc   {sdr_clipped(ref, est, mask):.4f} dB")
        print(f"ΔSDRc  {delta_sdr_clipped(ref, y, est, mask):.4f} dB")
    else:
        print("no sample of the reference reaches theta; SDRc undefined")
    return 0


def cmd_list(args):
    print(f"{'name':10s} {'clipped':12s} {'reliable':12s} description")
    for m in REGISTRY.values():
        print(f"{m.name:10s} {m.clipped_class:12s} {m.reliable_class:12s} {m.full_name}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="declip", description="Audio declipping toolbox and benchmark.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="batch experiment from an INI config file")
    r.add_argument("--config", required=True)
    r.add_argument("--workers", type=int, default=None, help="override the config's worker count")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("single", help="declip one WAV file")
    s.add_argument("--method", required=True, choices=list(REGISTRY))
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--theta", type=float, help="clipping threshold of the input")
    g.add_argument("--clip-sdr", type=float, help="clip the (clean) input to this SDR first")
    s.add_argument("--replace-reliable", action="store_true")
    s.set_defaults(func=cmd_single)

    m = sub.add_parser("metrics", help="SDR / SDRc / ΔSDRc of an estimate")
    m.add_argument("--reference", required=True)
    m.add_argument("--estimate", required=True)
    m.add_argument("--theta", required=True, type=float)
    m.set_defaults(func=cmd_metrics)

    lm = sub.add_parser("list-methods", help="print the method registry")
    lm.set_defaults(func=cmd_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AudioFormatError, ClippingError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"declip: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
