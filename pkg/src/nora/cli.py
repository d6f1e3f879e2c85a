"""Command line entry point: ``nora run``, ``nora sweep`` and ``nora preamble-throughput``.

Exit codes: 0 ok, 2 invalid configuration or arguments, 3 model-breakdown flags raised.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .config import FIELDS, ConfigError, parse_config
from .runner import preamble_throughput, run, sweep

log = logging.getLogger("nora")

EXIT_OK, EXIT_CONFIG, EXIT_BREAKDOWN = 0, 2, 3


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", "-c", type=Path, help="sectioned key = value config file")
    g = p.add_argument_group("config overrides (same keys as the config file)")
    for name in FIELDS:
        g.add_argument("--" + name.replace("_", "-"), dest="cfg_" + name, metavar="VALUE", default=None)
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    p.add_argument("--format", choices=("json", "csv"), default="csv",
                   help="trace / table format; reports are always written as JSON too")


def _overrides(ns) -> dict:
    return {k[4:]: v for k, v in vars(ns).items() if k.startswith("cfg_") and v is not None}


def _emit_run(res, out: Path, fmt: str, prefix: str = ""):
    report_doc = {"config": res.config.to_dict(), "reports": res.reports, "comparison": res.comparison,
                  "flags": res.flags}
    io.atomic_write_text(out / f"{prefix}report.json", io.dumps(report_doc))
    rows = [io.report_row(r) for r in res.reports.values()]
    io.atomic_write_text(out / f"{prefix}report.csv", io.rows_to_csv(rows))
    for engine, trace in res.traces.items():
        io.write_trace(trace, out / f"{prefix}trace_{engine}.{fmt}", fmt)
        f_csv, g_csv = io.cdf_tables(res.reports[engine])
        io.atomic_write_text(out / f"{prefix}cdf_attempts_{engine}.csv", f_csv)
        io.atomic_write_text(out / f"{prefix}cdf_delay_{engine}.csv", g_csv)
    if res.ue_tables:
        io.atomic_write_text(out / f"{prefix}ue_log.csv", io.ue_log_csv(res.ue_tables))


def _print_summary(res):
    for engine, r in res.reports.items():
        k = r.kpis()
        print(f"{engine:>10} {r.scheme}: " + "  ".join(
            f"{n}={'n/a' if v is None else f'{v:.4g}'}" for n, v in k.items()))
    if res.comparison:
        parts = []
        for n, d in res.comparison.items():
            rel = d["rel_diff"]
            parts.append(f"{n}=" + ("n/a" if rel is None else f"{rel:+.2%}"))
        print("relative difference (montecarlo vs analytic): " + "  ".join(parts))
    for f in res.flags:
        print(f"FLAG: {f}", file=sys.stderr)


def cmd_run(ns) -> int:
    cfg = parse_config(ns.config, _overrides(ns))
    res = run(cfg)
    _emit_run(res, ns.out, ns.format)
    _print_summary(res)
    return EXIT_OK if res.ok else EXIT_BREAKDOWN


def cmd_sweep(ns) -> int:
    cfg = parse_config(ns.config, _overrides(ns))
    values = [float(v) if "." in v or "e" in v.lower() else int(v) for v in ns.values.split(",") if v.strip()]
    schemes = [s.strip() for s in ns.schemes.split(",")] if ns.schemes else None
    results = sweep(cfg, ns.axis, values, schemes)
    rows, flags = [], []
    for v, s, res in results:
        for r in res.reports.values():
            rows.append(io.report_row(r, axis=ns.axis.replace("-", "_"), value=v))
        flags += res.flags
        if ns.format == "json":
            io.atomic_write_text(ns.out / "points" / f"{ns.axis}={v}_{s}.json",
                                 io.dumps({"config": res.config.to_dict(), "reports": res.reports,
                                           "comparison": res.comparison, "flags": res.flags}))
    io.atomic_write_text(ns.out / "sweep.csv", io.rows_to_csv(rows))
    for row in rows:
        print(f"{row['axis']}={row['value']} {row['scheme']:>4} {row['engine']:>10}: "
              f"R_RA={row['R_RA']:.1f} P_S={row['P_S']:.4f} P_C={row['P_C']:.4f}")
    for f in sorted(set(flags)):
        print(f"FLAG: {f}", file=sys.stderr)
    return EXIT_BREAKDOWN if flags else EXIT_OK


def cmd_throughput(ns) -> int:
    m, ora, nora = preamble_throughput(ns.preambles, ns.p_s2, ns.m_max)
    rows = [{"m": int(a), "ora": float(b), "nora": float(c)} for a, b, c in zip(m, ora, nora)]
    if ns.format == "json":
        io.atomic_write_text(ns.out / "preamble_throughput.json", io.dumps(rows))
    else:
        io.atomic_write_text(ns.out / "preamble_throughput.csv", io.rows_to_csv(rows, ("m", "ora", "nora")))
    i = int(ora.argmax())
    print(f"ORA peak {ora[i]:.3f} at m={m[i]}; NORA at the same m {nora[i]:.3f}; "
          f"NORA peak {nora.max():.3f} at m={m[int(nora.argmax())]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nora", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single scenario run")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one numeric config key")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, help="numeric config key, e.g. ues")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--schemes", default="nora,ora", help="comma-separated schemes (default: nora,ora)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("preamble-throughput", help="expected detected preambles versus contenders")
    p.add_argument("--preambles", type=int, default=54)
    p.add_argument("--p-s2", type=float, default=0.6)
    p.add_argument("--m-max", type=int, default=200)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_throughput)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
