"""Evolve the built-in presets and write one series CSV per preset.

Usage::

    python scripts/run_presets.py [OUT_DIR] [--n N] [--t-end T]

Each preset goes through the ``run`` subcommand, so every output directory
also holds its manifest, spectra and final curve.
"""
import argparse
import sys
from pathlib import Path

from muskat_lab.cli import main as cli_main

PRESETS = ("stable", "backward", "turnover")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out", nargs="?", default="out/presets")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--t-end", type=float, default=0.05)
    args = p.parse_args(argv)
    status = 0
    for name in PRESETS:
        out = Path(args.out) / name
        out.mkdir(parents=True, exist_ok=True)
        cfg = out / "scenario.cfg"
        cfg.write_text(f"preset = {name}\nn = {args.n}\nt_end = {args.t_end!r}\n")
        code = cli_main(["run", "--config", str(cfg), "--out", str(out)])
        print(f"{name}: exit {code}")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
