"""Run the method comparison on bundled instances and print one table.

Usage: python3 scripts/run_compare.py [--out results] [--solver highs] [nano case_a ...]

Each instance gets its own ``<out>/<instance>/`` directory with the
reports written by ``moegf INSTANCE --method compare``.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from moegf.cli import main as cli_main
from moegf.instance import bundled_instances


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("instances", nargs="*")
    ap.add_argument("--out", default="results")
    ap.add_argument("--solver", default="highs", choices=("simplex", "highs"))
    args = ap.parse_args(argv)
    names = args.instances or bundled_instances()
    rows, worst = [], 0
    for name in names:
        out = Path(args.out) / name
        code = cli_main([name, "--method", "compare", "--solver", args.solver, "--out", str(out)])
        worst = max(worst, code)
        if (out / "compare.json").exists():
            rows += [dict(r, instance=name) for r in json.loads((out / "compare.json").read_text())["rows"]]
    print()
    print(f"{'instance':<8} {'method':<12} {'cost':>14} {'Ogap %':>8} {'C_max':>9} {'C_mean':>9} {'iters':>5} {'time s':>7}")
    for r in rows:
        og = "-" if r["ogap"] is None else f"{r['ogap']:.4f}"
        print(f"{r['instance']:<8} {r['method']:<12} {r['cost']:>14.3f} {og:>8} {r['c_max']:>9.1e} "
              f"{r['c_mean']:>9.1e} {r['iterations']:>5} {r['wall_time']:>7.2f}")
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
