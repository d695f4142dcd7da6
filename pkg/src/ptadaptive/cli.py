"""Command-line front end: ``run``, ``compare`` and ``verify``.

Output files go to the scenario's ``output.dir`` unless the environment
variable ``PTADAPTIVE_OUTPUT_DIR`` is set, which overrides it.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import verify as V
from .scenario import ScenarioError, build_scenario, bundled_names, load_spec
from .sim import SimulationError, Trajectory, integrate, metrics

OUTPUT_ENV = "PTADAPTIVE_OUTPUT_DIR"
TABLE2 = ("wingrock_pt", "wingrock_superexp", "wingrock_exp", "wingrock_asym")


def csv_header(n: int, q: int) -> list[str]:
    return (["t", "tau"] + [f"x{i + 1}" for i in range(n)] + ["u", "u_bar"]
            + [f"theta_hat_{i + 1}" for i in range(q)] + ["delta_hat", "rho_hat", "K", "s_or_zn"])


def trajectory_table(tr: Trajectory) -> np.ndarray:
    return np.column_stack([tr.t, tr.tau, tr.x, tr.u, tr.u_bar, tr.theta_hat, tr.delta_hat,
                            tr.rho_hat, tr.K, tr.surface])


def write_csv(path: Path, tr: Trajectory) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, trajectory_table(tr), delimiter=",", fmt="%.17g",
               header=",".join(csv_header(tr.n, tr.q)), comments="")


_RUN_PLOT = '''"""Plot {csv} (states, input, estimates). Requires matplotlib."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
with open(path) as fh:
    rows = list(csv.DictReader(fh))
col = lambda k: [float(r[k]) for r in rows]
t = col("t")
fig, ax = plt.subplots(4, 1, sharex=True, figsize=(7, 9))
for i in range(1, {n} + 1):
    ax[0].plot(t, col(f"x{{i}}"), label=f"x{{i}}")
ax[0].set_ylabel("state")
ax[0].legend()
ax[1].plot(t, col("u"))
ax[1].set_ylabel("u")
for i in range(1, {q} + 1):
    ax[2].plot(t, col(f"theta_hat_{{i}}"), label=f"theta_hat_{{i}}")
ax[2].plot(t, col("delta_hat"), label="delta_hat")
ax[2].legend()
ax[3].plot(t, col("rho_hat"))
ax[3].set_ylabel("rho_hat")
ax[3].set_xlabel("t [s]")
fig.suptitle({title!r})
fig.tight_layout()
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''

_COMPARE_PLOT = '''"""Overlay x1 and u from {csv}. Requires matplotlib."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
runs = defaultdict(list)
with open(path) as fh:
    for r in csv.DictReader(fh):
        runs[r["scenario"]].append(r)
fig, ax = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
for name, rows in runs.items():
    t = [float(r["t"]) for r in rows]
    ax[0].plot(t, [float(r["x1"]) for r in rows], label=name)
    ax[1].plot(t, [float(r["u"]) for r in rows], label=name)
ax[0].set_ylabel("x1")
ax[1].set_ylabel("u")
ax[1].set_xlabel("t [s]")
ax[0].legend()
fig.tight_layout()
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def _out_dir(spec_dir: str) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or spec_dir)


def _fail(msg: str, code: int = 2) -> int:
    print(msg, file=sys.stderr)
    return code


def _prepare(path: str):
    spec = load_spec(path)
    sc = build_scenario(spec)
    return spec, sc


def cmd_run(path: str) -> int:
    try:
        spec, sc = _prepare(path)
        tr = integrate(sc)
    except (ScenarioError, SimulationError) as e:
        return _fail(str(e))
    out = _out_dir(spec.output.dir)
    csv_path = out / (spec.output.csv or f"{spec.name}.csv")
    plot_path = out / (spec.output.plot_script or f"{spec.name}_plot.py")
    write_csv(csv_path, tr)
    plot_path.write_text(_RUN_PLOT.format(csv=csv_path.name, n=tr.n, q=tr.q, title=spec.name))
    m = metrics(tr, spec.output.band)
    print(f"scenario {spec.name}: {len(tr)} samples, t_end={tr.t[-1]:.6g}")
    for i in range(tr.n):
        print(f"  x{i + 1}: band {m.band:g} entry {m.settle_label(i)}; terminal {m.terminal_x[i]:.3e}")
    print(f"  peak |u| = {m.peak_u:.6g}; terminal |x| = {m.terminal_norm:.3e}")
    print(f"  terminal theta_hat = {np.array2string(m.terminal_theta_hat, precision=6)}, "
          f"delta_hat = {m.terminal_delta_hat:.6g}, rho_hat = {m.terminal_rho_hat:.6g}")
    print(f"wrote {csv_path} and {plot_path}")
    return 0


def compare(paths: Sequence[str], band: float = 0.01):
    """Run several scenarios on the same plant and initial state."""
    if len(paths) < 2:
        raise ScenarioError("compare needs at least two scenarios")
    prepared = [_prepare(p) for p in paths]
    ref = prepared[0][1]
    for spec, sc in prepared[1:]:
        if sc.model.name != ref.model.name or not np.array_equal(sc.x0, ref.x0):
            raise ScenarioError(f"{spec.name}: model or initial state differs from {prepared[0][0].name}; refusing to compare")
    results = [(spec, integrate(sc)) for spec, sc in prepared]
    table = [(spec.name, metrics(tr, band)) for spec, tr in results]
    return results, table


def cmd_compare(paths: Sequence[str], preset: str | None, out_name: str | None) -> int:
    if preset:
        if preset != "table2":
            return _fail(f"unknown preset {preset!r}; available: table2")
        paths = list(TABLE2)
    try:
        results, table = compare(paths)
    except (ScenarioError, SimulationError) as e:
        return _fail(str(e))
    name = out_name or (preset or "compare")
    out = _out_dir(results[0][0].output.dir)
    out.mkdir(parents=True, exist_ok=True)
    n = results[0][1].n
    csv_path = out / f"{name}.csv"
    with open(csv_path, "w") as fh:
        fh.write(",".join(["scenario", "t", "tau"] + [f"x{i + 1}" for i in range(n)] + ["u"]) + "\n")
        for spec, tr in results:
            data = np.column_stack([tr.t, tr.tau, tr.x, tr.u])
            for row in data:
                fh.write(spec.name + "," + ",".join("%.17g" % v for v in row) + "\n")
    plot_path = out / f"{name}_plot.py"
    plot_path.write_text(_COMPARE_PLOT.format(csv=csv_path.name))
    settle_path = out / f"{name}_settling.csv"
    lines = ["scenario," + ",".join(f"settle_x{i + 1}" for i in range(n)) + ",peak_abs_u,terminal_norm"]
    print(f"{'scenario':<24}" + "".join(f"{'x' + str(i + 1) + ' settle':>16}" for i in range(n)) + f"{'peak |u|':>14}")
    for nm, m in table:
        print(f"{nm:<24}" + "".join(f"{m.settle_label(i):>16}" for i in range(n)) + f"{m.peak_u:>14.6g}")
        lines.append(nm + "," + ",".join("" if v is None else "%.17g" % v for v in m.settle)
                     + f",{m.peak_u:.17g},{m.terminal_norm:.17g}")
    settle_path.write_text("\n".join(lines) + "\n")
    print(f"band {table[0][1].band:g}; wrote {csv_path}, {settle_path} and {plot_path}")
    return 0


def cmd_verify(only: Sequence[str] | None, seed: int) -> int:
    names = []
    for item in only or []:
        names.extend(s for s in item.split(",") if s)
    try:
        results = V.run_checks(names or None, seed=seed)
    except KeyError as e:
        return _fail(str(e.args[0]))
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptadaptive", description="Prescribed-time adaptive control toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate one scenario file (or bundled scenario name)")
    r.add_argument("scenario")
    c = sub.add_parser("compare", help="simulate several scenarios and tabulate settling times")
    c.add_argument("scenarios", nargs="*")
    c.add_argument("--preset", choices=["table2"])
    c.add_argument("--name", help="base name of the combined output files")
    v = sub.add_parser("verify", help="run the numeric verification suite")
    v.add_argument("--only", action="append", help=f"check name(s), comma separated; one of {V.check_names()}")
    v.add_argument("--seed", type=int, default=0)
    sub.add_parser("list", help="list bundled scenarios")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario)
    if args.command == "compare":
        if not args.preset and len(args.scenarios) < 2:
            return _fail("compare needs two or more scenarios or --preset table2")
        return cmd_compare(args.scenarios, args.preset, args.name)
    if args.command == "verify":
        return cmd_verify(args.only, args.seed)
    if args.command == "list":
        for name in bundled_names():
            print(name)
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
