"""Command line entry point: ``muskat-lab {run,verify,extend,report}``.

Exit status: 0 on success, 1 on a validation error (including usage
errors), 2 on a numerical failure, 3 when a check fails.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__, fourier
from .complexify import (TOL_COMMUTE, a_residual, extend_field, refined_rt_check, strip_estimate)
from .config import ScenarioConfig, parse_config
from .curve import PeriodicInterface, ProfileSet, detect_turnovers
from .errors import CheckFailure, InsufficientModesError, NumericalError, ValidationError
from .evolution import SERIES_COLUMNS, initial_curve, run_scenario
from .verify import (CheckReport, reports_to_json, run_garding_suite, run_identity_suite,
                     run_kernel_limit_suite, run_limit_suite)

log = logging.getLogger("muskat_lab")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3
A_RESIDUAL_TOL = 1e-6
GARDING_SEEDS = 50


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as validation errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _thread_cap() -> int:
    raw = os.environ.get("MUSKAT_LAB_THREADS", "")
    if not raw:
        return max(1, min(4, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"MUSKAT_LAB_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValidationError("MUSKAT_LAB_THREADS must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value scenario document")
    common.add_argument("--preset", help="stable, backward, turnover, flat or custom")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, help="seed for randomized checks")
    common.add_argument("--eps", type=float, help="regularization scale")
    common.add_argument("--n", type=int, help="grid size (power of two in [64, 4096])")
    parser = _Parser(prog="muskat-lab", description="Muskat contour dynamics laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="evolve a preset and write the diagnostics series")
    sub.add_parser("verify", parents=[common], help="run the standalone verification suites")
    ext = sub.add_parser("extend", parents=[common], help="complex extension and residual reports")
    ext.add_argument("--curve", metavar="PATH", help="saved curve (CSV or JSON); default: the preset")
    sub.add_parser("report", parents=[common], help="summarize an output directory")
    return parser


def load_config(args) -> ScenarioConfig:
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ValidationError(f"config: {exc}") from None
    overrides = {"preset": args.preset, "out_dir": args.out, "seed": args.seed, "eps": args.eps, "n": args.n}
    if getattr(args, "curve", None):
        overrides.update(preset="custom", curve_path=args.curve)
    return parse_config(text, **overrides)


def _input_hash(cfg: ScenarioConfig) -> str:
    """SHA-256 of the config (minus the output location) and of the curve file, if any."""
    body = "\n".join(line for line in cfg.to_text().splitlines() if not line.startswith("out_dir ="))
    h = hashlib.sha256(body.encode())
    if cfg.curve_path:
        try:
            h.update(Path(cfg.curve_path).read_bytes())
        except OSError as exc:
            raise ValidationError(f"curve_path: {exc}") from None
    return h.hexdigest()


def write_manifest(cfg: ScenarioConfig, command: str) -> Path:
    """Config echo and content hash, written before any computation."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"command": command, "version": __version__, "config": cfg.to_dict(),
                "config_text": cfg.to_text(), "input_hash": _input_hash(cfg)}
    path = out / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def _write_spectrum(path: Path, t: float, coeffs: np.ndarray) -> None:
    k = fourier.wavenumbers(coeffs.shape[-1])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "component", "k", "re", "im", "abs"])
        for name, row in zip(("f1_periodic", "f2"), coeffs):
            for kk, cc in zip(k, row):
                w.writerow([repr(float(t)), name, int(kk), repr(cc.real), repr(cc.imag), repr(abs(cc))])


def cmd_run(cfg: ScenarioConfig) -> int:
    write_manifest(cfg, "run")
    out = Path(cfg.out_dir)
    result = run_scenario(cfg)
    with open(out / "series.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SERIES_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for row in result.rows:
            w.writerow({k: repr(float(row.get(k, float("nan")))) for k in SERIES_COLUMNS})
    spec_dir = out / "spectra"
    spec_dir.mkdir(exist_ok=True)
    for i, (t, coeffs) in enumerate(result.spectra):
        _write_spectrum(spec_dir / f"spectrum_{i:04d}.csv", t, coeffs)
    if result.final is not None:
        result.final.curve.to_csv(out / "final_curve.csv")
    summary = {"rows": len(result.rows), "t_final": result.rows[-1]["t"],
               "tail_monotone": result.tail_monotone, "error": result.error}
    (out / "summary_run.json").write_text(json.dumps(summary, indent=2))
    print(f"run: {len(result.rows)} rows to {out / 'series.csv'}; tail_monotone={result.tail_monotone}")
    if result.error:
        print(f"run stopped: {result.error}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def verification_reports(cfg: ScenarioConfig, threads: int) -> List[CheckReport]:
    jobs = [
        lambda: run_garding_suite(range(cfg.seed, cfg.seed + GARDING_SEEDS), cfg.n, cfg.eps_sweep),
        lambda: run_identity_suite(cfg.n, seed=cfg.seed),
        lambda: run_limit_suite(),
        lambda: run_kernel_limit_suite(),
    ]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda job: job(), jobs))
    return sorted((r for part in parts for r in part), key=lambda r: r.name)


def _print_reports(reports: Sequence[CheckReport]) -> None:
    for r in reports:
        flag = "PASS" if r.passed else "FAIL"
        print(f"{flag} {r.name}: measured={r.measured:.6g} bound={r.bound:.6g}"
              + ("" if r.passed else f" [{r.lemma}, margin {r.margin:.3g}]"))


def cmd_verify(cfg: ScenarioConfig) -> int:
    write_manifest(cfg, "verify")
    reports = verification_reports(cfg, _thread_cap())
    (Path(cfg.out_dir) / "verify.json").write_text(reports_to_json(reports))
    _print_reports(reports)
    failed = [r for r in reports if not r.passed]
    print(f"verify: {len(reports) - len(failed)}/{len(reports)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


def extension_reports(curve: PeriodicInterface, cfg: ScenarioConfig) -> List[Dict]:
    """Residual records for the complex extension of ``curve`` (JSON-ready)."""
    profiles = ProfileSet(cfg.delta, cfg.delta_c)
    records = []
    for comp, label in ((0, "f1"), (1, "f2")):
        try:
            width = strip_estimate(curve.coeffs[comp]).width
        except InsufficientModesError:
            width = None  # band-limited data: no finite strip
        fld = extend_field(curve, profiles, cfg.extend_t, curve.n, cfg.gamma_nodes, component=comp,
                           m=cfg.m)
        res = float(np.max(np.abs(a_residual(fld))))
        records.append({"operation": "a_residual", "component": label,
                        "grid": [curve.n, cfg.gamma_nodes], "strip_width": width, "t": cfg.extend_t,
                        "tolerance": A_RESIDUAL_TOL, "measured": res, "pass": res <= A_RESIDUAL_TOL})
    ts = detect_turnovers(curve)
    if ts.count == 2:
        from .modified import TurnoverContext

        order = np.argsort(ts.curvature)
        z2, z1 = ts.roots[order[0]], ts.roots[order[1]]
        ctx = TurnoverContext(curve, float(z1), float(z2), profiles=profiles, m=cfg.m)
        rep = refined_rt_check(ctx)
        records.append({"operation": "refined_rt_check", "grid": [curve.n, 1], "tolerance": 0.0,
                        "measured": rep.value, "pass": rep.value > 0.0, "turnovers": ts.roots.tolist()})
    records.append({"operation": "commute_tolerance", "tolerance": TOL_COMMUTE})
    return records


def cmd_extend(cfg: ScenarioConfig) -> int:
    write_manifest(cfg, "extend")
    curve = initial_curve(cfg)
    records = extension_reports(curve, cfg)
    (Path(cfg.out_dir) / "extend.json").write_text(json.dumps(records, indent=2, default=float))
    checked = [r for r in records if "pass" in r]
    for r in checked:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['operation']} {r.get('component', '')}: "
              f"measured={r['measured']:.6g} tolerance={r['tolerance']:.3g}")
    return EXIT_OK if all(r["pass"] for r in checked) else EXIT_CHECK


def summarize(out_dir: Path) -> Dict:
    """Collect manifests, series extremes and check counts found in ``out_dir``."""
    if not out_dir.is_dir():
        raise ValidationError(f"out_dir: {out_dir} is not a directory")
    summary: Dict = {"out_dir": str(out_dir), "manifests": {}}
    for path in sorted(out_dir.glob("manifest_*.json")):
        m = json.loads(path.read_text())
        summary["manifests"][m["command"]] = m["input_hash"]
    series = out_dir / "series.csv"
    if series.exists():
        with open(series) as fh:
            rows = list(csv.DictReader(fh))
        if rows:
            col = {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
            summary["series"] = {"rows": len(rows), "t_final": float(col["t"][-1]),
                                 "sigma_min": float(np.nanmin(col["sigma_min"])),
                                 "sigma_max": float(np.nanmax(col["sigma_max"])),
                                 "max_turnovers": int(np.nanmax(col["turnovers"]))}
    for name in ("verify", "extend"):
        path = out_dir / f"{name}.json"
        if path.exists():
            recs = [r for r in json.loads(path.read_text()) if "pass" in r]
            summary[name] = {"checks": len(recs), "failed": [r.get("name", r.get("operation")) for r in recs
                                                             if not r["pass"]]}
    return summary


def cmd_report(cfg: ScenarioConfig) -> int:
    summary = summarize(Path(cfg.out_dir))
    print(json.dumps(summary, indent=2))
    failed = any(summary.get(k, {}).get("failed") for k in ("verify", "extend"))
    return EXIT_CHECK if failed else EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "extend": cmd_extend, "report": cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
