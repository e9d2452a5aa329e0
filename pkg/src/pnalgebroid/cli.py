"""Command-line interface: ``pnalgebroid validate | hierarchy | flow``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import json
import math
import os
import sys

import click
import numpy as np

from . import config, flows, toda
from .hierarchy import Hierarchy, parse_range
from .jets import DegenerateEndomorphismError
from .validation import SingularDomainError, validate_config, validate_example

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _fail_usage(msg):
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_USAGE)


def _resolve(target):
    """``("example", Example)`` or ``("config", (A, pn, extras))``."""
    if target.endswith(".json") or os.path.isfile(target):
        try:
            return "config", config.load(target)
        except config.ConfigError as exc:
            _fail_usage(f"config: {exc}")
    try:
        return "example", toda.example(target)
    except KeyError as exc:
        _fail_usage(exc.args[0])


def _pn_for(target):
    """The PN structure whose hierarchy lives on the requested base."""
    kind, obj = _resolve(target)
    if kind == "config":
        A, pn, _ = obj
        if pn is None:
            _fail_usage("config needs both 'pi' and 'N' for this command")
        return pn
    if obj.kind in ("physical", "algebroid"):
        return obj.obj
    if obj.kind == "flaschka":
        return toda.toda_algebroid(obj.n)
    _fail_usage(f"{target} carries no Nijenhuis operator; use toda-flaschka-{obj.n} or toda-algebroid-{obj.n}")


def _point(text, size, what):
    try:
        vals = tuple(float(v) for v in text.replace(" ", "").split(","))
    except ValueError:
        _fail_usage(f"{what} must be a comma-separated list of numbers")
    if len(vals) != size:
        _fail_usage(f"{what} needs {size} values, got {len(vals)}")
    return vals


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Poisson-Nijenhuis calculus on Lie algebroids, with Toda lattice examples."""


@main.command()
@click.argument("target")
@click.option("--points", default=20, show_default=True, type=click.IntRange(1), help="Sample points.")
@click.option("--seed", default=42, show_default=True, type=int)
@click.option("--tolerance", default=1e-8, show_default=True, type=float)
@click.option("--json", "as_json", is_flag=True, help="Print the JSON report instead of text.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, writable=True), help="Also write the JSON report here.")
def validate(target, points, seed, tolerance, as_json, report_path):
    """Run the identity suite on a built-in example or a JSON config."""
    kind, obj = _resolve(target)
    try:
        if kind == "example":
            rep = validate_example(obj, points, seed, tolerance)
        else:
            rep = validate_config(*obj, points=points, seed=seed, tolerance=tolerance)
    except (SingularDomainError, DegenerateEndomorphismError) as exc:
        _fail_usage(f"singular sample domain: {exc}")
    except ArithmeticError as exc:
        _fail_usage(f"evaluation failed on the sample domain: {exc}")
    click.echo(rep.to_json(indent=2) if as_json else rep.to_text())
    if report_path:
        with open(report_path, "w") as fh:
            fh.write(rep.to_json(indent=2))
    sys.exit(EXIT_OK if rep.passed else EXIT_FAIL)


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, list):
        return "[" + ", ".join(f"{x + 0.0: .6g}" for x in v) + "]"
    return f"{v + 0.0: .12g}"


@main.command()
@click.argument("target")
@click.option("--range", "index_range", default="-2..5", show_default=True, help="Inclusive index range lo..hi.")
@click.option("--at", "at", default=None, help="Base point, comma-separated.")
@click.option("--json", "as_json", is_flag=True)
def hierarchy(target, index_range, at, as_json):
    """Print h_i, X^(m) and rho(X^(m)) at a point."""
    if at is None:
        _fail_usage("point required (--at)")
    try:
        lo, hi = parse_range(index_range)
    except ValueError as exc:
        _fail_usage(str(exc))
    pn = _pn_for(target)
    x = _point(at, pn.algebroid.n, "--at")
    H = Hierarchy(pn, (lo, hi))
    table = H.table(x, (lo, hi))
    if as_json:
        click.echo(json.dumps({"example": target, "point": list(x), "range": [lo, hi],
                               "frame": list(pn.algebroid.frame), "coords": list(pn.algebroid.coords),
                               **{k: {str(i): v for i, v in t.items()} for k, t in table.items()}}, indent=2))
    else:
        click.echo(f"hierarchy of {pn.name} at {x}")
        for i, v in table["h"].items():
            click.echo(f"  h{i} = {_fmt(v)}")
        for m in table["X"]:
            click.echo(f"  X^({m}) = {_fmt(table['X'][m])}")
            click.echo(f"  rho X^({m}) = {_fmt(table['rhoX'][m])}")
    errors = any(isinstance(v, str) for t in table.values() for v in t.values())
    sys.exit(EXIT_USAGE if errors else EXIT_OK)


@main.command()
@click.argument("target")
@click.option("--hamiltonian", default="h2", show_default=True, help="Hamiltonian h_i of the hierarchy.")
@click.option("--bracket", default=0, show_default=True, type=int, help="k in the covered tensor of N^k pi.")
@click.option("--x0", default=None, help="Initial base point, comma-separated.")
@click.option("--t", "t_end", default=10.0, show_default=True, type=float)
@click.option("--dt", default=1e-3, show_default=True, type=float)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), help="CSV trajectory file.")
@click.option("--stride", default=1, show_default=True, type=click.IntRange(1))
@click.option("--monitor", default="h1,h2,h3", show_default=True, help="Hamiltonians whose drift is reported.")
@click.option("--json", "as_json", is_flag=True)
def flow(target, hamiltonian, bracket, x0, t_end, dt, out, stride, monitor, as_json):
    """Integrate -pi_(k,M)# d h_i with RK4 and report first-integral drift."""
    if not dt > 0 or not math.isfinite(dt):
        _fail_usage("--dt must be positive")
    if not t_end >= 0:
        _fail_usage("--t must be non-negative")

    def index(name):
        if not name.startswith("h"):
            _fail_usage(f"Hamiltonian names look like h2 or h-1, got {name!r}")
        try:
            return int(name[1:])
        except ValueError:
            _fail_usage(f"Hamiltonian names look like h2 or h-1, got {name!r}")

    j = index(hamiltonian)
    watch = [index(w) for w in monitor.split(",") if w]
    pn = _pn_for(target)
    A = pn.algebroid
    if x0 is None:
        x = tuple(0.5 * (lo + hi) for lo, hi in (A.domain[c] for c in A.coords))
    else:
        x = _point(x0, A.n, "--x0")
    H = Hierarchy(pn)
    try:
        traj = flows.integrate(H.flow_field(bracket, j), x, t_end, dt, A.coords)
        status, failure = EXIT_OK, None
    except flows.FlowSingularityError as exc:
        traj, status, failure = exc.trajectory, EXIT_FAIL, str(exc)
    except np.linalg.LinAlgError as exc:
        _fail_usage(f"degenerate N at the initial point: {exc}")
    if out:
        try:
            flows.write_csv(traj, out, stride)
        except OSError as exc:
            _fail_usage(f"cannot write {out}: {exc.strerror or exc}")
    try:
        drift = flows.conservation_report(traj, [H.h_value(i) for i in watch])
    except (np.linalg.LinAlgError, ValueError, ArithmeticError) as exc:
        drift = {f"h{i}": f"error: {exc}" for i in watch}
    summary = {"example": target, "hamiltonian": f"h{j}", "bracket": bracket, "x0": list(x), "t": float(traj.times[-1]),
               "dt": dt, "steps": len(traj) - 1, "end": [float(v) for v in traj.end], "drift": drift, "failure": failure}
    if as_json:
        click.echo(json.dumps(summary, indent=2))
    else:
        click.echo(f"flow of -pi_({bracket},M)# d h{j} on {pn.name} from {x}")
        click.echo(f"  steps: {len(traj) - 1}, reached t = {traj.times[-1]:.6g}")
        click.echo("  end: " + ", ".join(f"{c}={v:.10g}" for c, v in zip(A.coords, traj.end)))
        for name, d in drift.items():
            click.echo(f"  drift {name}: {d if isinstance(d, str) else f'{d:.3e}'}")
        if failure:
            click.echo(f"  failed: {failure}")
    sys.exit(status)


if __name__ == "__main__":
    main()
