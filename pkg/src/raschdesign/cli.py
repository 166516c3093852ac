"""Command-line front end.

Every analysis is exposed as a subcommand with file-based inputs and
outputs.  Commands that write files also emit a run manifest
(``<output>.manifest.json``) recording command, inputs, flags, seed, and
tool version, so identical manifests reproduce identical outputs.

Exit codes: 0 success, 1 computational failure (singularity,
non-convergence), 2 usage error.  All numeric output is printed with 12
significant digits.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .exceptions import InputFormatError, RaschDesignError
from .model import InteractionModel, ParameterVector, setting_string
from .geometry import center_path, lmi_slice, polytope_vertices
from .optimizer import OptimizerConfig, optimize_design
from .regions import (
    corner_design,
    corner_inequalities,
    evaluate_inequality,
    is_corner_optimal_by_theorem,
    kw_certificate,
    redundancy_probe,
    region_slice,
    saturated_kw_values,
)
from .serialize import load_design, load_parameters, save_design
from .symmetry import (
    GroupElement,
    act_on_design,
    act_on_parameters,
    representation_matrix,
    verify_transformation,
)


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _write_manifest(command: str, inputs, flags: dict, seed, outputs) -> None:
    if not outputs:
        return
    manifest = {
        "command": command,
        "inputs": [str(p) for p in inputs],
        "flags": {key: flags[key] for key in sorted(flags)},
        "seed": seed,
        "version": __version__,
        "outputs": [str(p) for p in outputs],
    }
    path = Path(str(outputs[0]) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n")


def _parse_symmetric(text: str) -> dict[str, float]:
    values = {}
    for part in text.split(","):
        if "=" not in part:
            raise click.UsageError(f"cannot parse symmetric point part {part!r}")
        key, _, raw = part.partition("=")
        key = key.strip()
        if key not in ("s", "t"):
            raise click.UsageError(f"symmetric point keys are s and t, got {key!r}")
        try:
            values[key] = float(raw)
        except ValueError:
            raise click.UsageError(f"bad number {raw!r} in symmetric point") from None
    if "s" not in values:
        raise click.UsageError("symmetric point needs at least s=<value>")
    return values


def _resolve_theta(k, d, params, beta, symmetric) -> ParameterVector:
    """Build the parameter vector from --params / --beta / --symmetric flags."""
    given = sum(x is not None for x in (params, beta, symmetric))
    if given > 1:
        raise click.UsageError("give at most one of --params, --beta, --symmetric")
    if params is not None:
        theta = load_parameters(params)
        if k is not None and theta.model.k != k:
            raise click.UsageError(f"--k {k} conflicts with file k={theta.model.k}")
        if d is not None and theta.model.d != d:
            raise click.UsageError(f"--d {d} conflicts with file d={theta.model.d}")
        return theta
    if k is None or d is None:
        raise click.UsageError("--k and --d are required without --params")
    m = InteractionModel(k, d)
    if beta is not None:
        try:
            mapping = json.loads(beta)
        except json.JSONDecodeError as exc:
            raise click.UsageError(f"--beta is not valid JSON: {exc}") from exc
        if not isinstance(mapping, dict):
            raise click.UsageError("--beta must be a JSON object")
        return ParameterVector.from_dict(m, mapping)
    if symmetric is not None:
        point = _parse_symmetric(symmetric)
        return ParameterVector.symmetric(m, point["s"], point.get("t"))
    return ParameterVector.zeros(m)


def _parse_grid(text: str) -> list[float]:
    """Comma list ("1,0.8,0.5") or range ("0.40:0.43:0.001")."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise click.UsageError(f"grid {text!r} must be start:stop:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise click.UsageError(f"bad number in grid {text!r}") from None
        if step <= 0:
            raise click.UsageError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise click.UsageError(f"grid {text!r} is empty")
        return [start + i * step for i in range(count)]
    try:
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise click.UsageError(f"bad number in grid {text!r}") from None
    if not values:
        raise click.UsageError(f"grid {text!r} is empty")
    return values


def _parse_element(text: str, k: int) -> GroupElement:
    perm = tuple(range(1, k + 1))
    flips: tuple[int, ...] = ()
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        key, _, raw = part.partition("=")
        try:
            values = tuple(int(v) for v in raw.split(",") if v.strip())
        except ValueError:
            raise click.UsageError(f"bad integer in element part {part!r}") from None
        if key == "perm":
            perm = values
        elif key == "flips":
            flips = values
        else:
            raise click.UsageError(f"element parts are perm=... or flips=..., got {key!r}")
    try:
        return GroupElement(perm, flips)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__)
def main() -> None:
    """D-optimal design toolkit for the Rasch Poisson counts model."""


def _run(func):
    """Translate domain errors: usage problems exit 2, numeric failures exit 1."""
    try:
        func()
    except click.ClickException:
        raise
    except InputFormatError as exc:
        raise click.UsageError(str(exc)) from exc
    except (RaschDesignError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@click.option("--k", type=int, default=None, help="Number of rules.")
@click.option("--d", type=int, default=None, help="Interaction order.")
@click.option("--params", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--beta", type=str, default=None, help="Inline JSON beta map.")
@click.option("--symmetric", type=str, default=None, help="Symmetric point s=..,t=..")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the listing as JSON instead of text only.")
def inequalities(k, d, params, beta, symmetric, out):
    """List the corner-optimality inequalities with their values."""

    def work():
        theta = _resolve_theta(k, d, params, beta, symmetric)
        m = theta.model
        records = []
        for q in corner_inequalities(m):
            lhs = evaluate_inequality(q, theta)
            records.append({"C": list(q.label), "lhs": lhs, "satisfied": lhs <= 1.0 + 1e-9})
            mark = "ok " if lhs <= 1.0 + 1e-9 else "VIOLATED"
            click.echo(f"C={{{','.join(map(str, q.label))}}}  lhs={_fmt(lhs)}  {mark}")
        verdict = is_corner_optimal_by_theorem(theta, m)
        state = "optimal" if verdict.optimal else "not-optimal"
        if verdict.boundary:
            state += " (boundary)"
        click.echo(
            f"verdict: {state}"
            f"  max-lhs={_fmt(verdict.max_directional_value)}"
        )
        if out:
            payload = {
                "k": m.k,
                "d": m.d,
                "inequalities": records,
                "optimal": verdict.optimal,
                "max_lhs": verdict.max_directional_value,
            }
            Path(out).write_text(json.dumps(payload, indent=2) + "\n")
            _write_manifest(
                "inequalities",
                [p for p in (params,) if p],
                {"k": k, "d": d, "beta": beta, "symmetric": symmetric},
                None,
                [out],
            )

    _run(work)


@main.command()
@click.option("--k", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--params", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--beta", type=str, default=None)
@click.option("--symmetric", type=str, default=None)
@click.option("--max-iterations", type=int, default=200_000, show_default=True)
@click.option("--kw-tolerance", type=float, default=1e-7, show_default=True)
@click.option("--prune-threshold", type=float, default=1e-8, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Design JSON output path.")
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Run-report JSON output path.")
def optimize(k, d, params, beta, symmetric, max_iterations, kw_tolerance,
             prune_threshold, out, report):
    """Compute a D-optimal approximate design for the given parameters."""

    def work():
        theta = _resolve_theta(k, d, params, beta, symmetric)
        cfg = OptimizerConfig(
            max_iterations=max_iterations,
            kw_tolerance=kw_tolerance,
            prune_threshold=prune_threshold,
        )
        result = optimize_design(theta, theta.model, cfg)
        save_design(result.design, out)
        payload = {
            "iterations": result.iterations,
            "final_kw_max": result.final_kw_max,
            "log_det": result.log_det,
            "structure": result.structure.value,
            "converged": result.converged,
            "support_size": result.support_size,
        }
        outputs = [out]
        if report:
            Path(report).write_text(json.dumps(payload, indent=2) + "\n")
            outputs.append(report)
        click.echo(
            f"structure={result.structure.value}  iterations={result.iterations}"
            f"  kw-max={_fmt(result.final_kw_max)}  log-det={_fmt(result.log_det)}"
        )
        if not result.converged:
            raise click.ClickException("optimizer did not converge within the budget")
        _write_manifest(
            "optimize",
            [p for p in (params,) if p],
            {
                "k": k, "d": d, "beta": beta, "symmetric": symmetric,
                "max_iterations": max_iterations, "kw_tolerance": kw_tolerance,
                "prune_threshold": prune_threshold,
            },
            None,
            outputs,
        )

    _run(work)


@main.command()
@click.option("--k", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--params", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--beta", type=str, default=None)
@click.option("--symmetric", type=str, default=None)
@click.option("--design", "design_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Design to certify (default: corner design).")
def certify(k, d, params, beta, symmetric, design_path):
    """Equivalence-theorem certificate for a design at given parameters."""

    def work():
        theta = _resolve_theta(k, d, params, beta, symmetric)
        m = theta.model
        w = load_design(design_path, m.k) if design_path else corner_design(m)
        verdict = kw_certificate(w, theta, m)
        click.echo(
            f"verdict: {'optimal' if verdict.optimal else 'not-optimal'}"
            f"  max-sensitivity={_fmt(verdict.max_directional_value)}"
            f"  bound={_fmt(verdict.bound)}"
            f"  worst-setting={''.join(map(str, verdict.worst_setting))}"
        )

    _run(work)


@main.command("center-path")
@click.option("--k", type=int, required=True)
@click.option("--d", type=int, required=True)
@click.option("--lambdas", type=str, required=True,
              help="Intensity grid for all singletons: comma list or start:stop:step.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--matrices-out", type=click.Path(dir_okay=False), default=None,
              help="Also dump slice and center matrices as JSON row-major lists.")
def cmd_center_path(k, d, lambdas, out, matrices_out):
    """Analytic-center coordinates along a symmetric intensity path."""

    def rows_of(mat):
        return [[float(v) for v in row] for row in mat]

    def work():
        grid = _parse_grid(lambdas)
        if any(v <= 0 for v in grid):
            raise click.UsageError("lambda values must be positive")
        m = InteractionModel(k, d)
        pairs = [
            (lam, ParameterVector.symmetric(m, lam)) for lam in grid
        ]
        path = center_path(pairs, m)
        dim = polytope_vertices(pairs[0][1], m).dim
        header = ["param"] + [f"coord_{i + 1}" for i in range(dim)] + [
            "log_det", "status", "inside",
        ]
        lines = [",".join(header)]
        for row in path.rows:
            res = row.result
            inside = "" if res.inside_polytope is None else str(res.inside_polytope).lower()
            lines.append(",".join(
                [_fmt(row.param)]
                + [_fmt(v) for v in res.coordinates]
                + [_fmt(res.log_det), res.status.value, inside]
            ))
        Path(out).write_text("\n".join(lines) + "\n")
        outputs = [out]
        if matrices_out:
            dump = []
            for (lam, theta), row in zip(pairs, path.rows):
                sl = lmi_slice(polytope_vertices(theta, m))
                dump.append({
                    "param": lam,
                    "labels": list(sl.labels),
                    "base": rows_of(sl.base),
                    "directions": [rows_of(dmat) for dmat in sl.directions],
                    "center": rows_of(row.result.matrix),
                })
            Path(matrices_out).write_text(json.dumps(dump, indent=2) + "\n")
            outputs.append(matrices_out)
        if path.first_exit is not None:
            click.echo(f"center exits the polytope at param={_fmt(path.first_exit)}")
        _write_manifest(
            "center-path", [], {"k": k, "d": d, "lambdas": lambdas}, None, outputs
        )

    _run(work)


@main.command("region-slice")
@click.option("--k", type=int, required=True)
@click.option("--d", type=int, required=True)
@click.option("--s-grid", type=str, required=True, help="Comma list or start:stop:step.")
@click.option("--t-grid", type=str, required=True, help="Comma list or start:stop:step.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def cmd_region_slice(k, d, s_grid, t_grid, out):
    """CSV of symmetric-slice inequality values over an (s, t) grid."""

    def work():
        if d != 2:
            raise click.UsageError("region-slice requires an order-2 model (--d 2)")
        m = InteractionModel(k, d)
        rows = region_slice(m, _parse_grid(s_grid), _parse_grid(t_grid))
        header = ["s", "t"] + [f"lhs_{c}" for c in range(3, k + 1)] + [
            "binding_c", "verdict",
        ]
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(
                [_fmt(row.s), _fmt(row.t)]
                + [_fmt(v) for v in row.lhs]
                + [str(row.binding_c), row.verdict]
            ))
        Path(out).write_text("\n".join(lines) + "\n")
        _write_manifest(
            "region-slice", [],
            {"k": k, "d": d, "s_grid": s_grid, "t_grid": t_grid}, None, [out],
        )

    _run(work)


@main.command()
@click.option("--k", type=int, required=True)
@click.option("--d", type=int, required=True)
@click.option("--s-range", type=str, required=True, help="lo:hi for s samples.")
@click.option("--t-range", type=str, required=True, help="lo:hi for t samples.")
@click.option("--samples", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def probe(k, d, s_range, t_range, samples, seed, out):
    """Redundancy probe: seeded sampling for uniquely violated inequalities."""

    def parse_range(text, name):
        parts = text.split(":")
        if len(parts) != 2:
            raise click.UsageError(f"--{name} must be lo:hi")
        try:
            lo, hi = float(parts[0]), float(parts[1])
        except ValueError:
            raise click.UsageError(f"bad number in --{name} {text!r}") from None
        if not 0 < lo < hi:
            raise click.UsageError(f"--{name} needs 0 < lo < hi")
        return lo, hi

    def work():
        if d != 2:
            raise click.UsageError("probe requires an order-2 model (--d 2)")
        m = InteractionModel(k, d)
        report = redundancy_probe(
            m, parse_range(s_range, "s-range"), parse_range(t_range, "t-range"),
            samples, seed,
        )
        Path(out).write_text(json.dumps(report.as_dict(), indent=2) + "\n")
        for c, entry in report.entries.items():
            state = (
                "no witness" if entry.redundant_in_region
                else f"witness at ({_fmt(entry.witness[0])}, {_fmt(entry.witness[1])})"
            )
            click.echo(f"c={c}: {state}  ({entry.n_witness} of {entry.n_violated} violations unique)")
        _write_manifest(
            "probe", [],
            {"k": k, "d": d, "s_range": s_range, "t_range": t_range, "samples": samples},
            seed, [out],
        )

    _run(work)


@main.command()
@click.option("--k", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--params", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--beta-low", type=float, default=-3.0, show_default=True)
@click.option("--beta-high", type=float, default=1.0, show_default=True)
@click.option("--echo", is_flag=True, help="Single-point mode: print both sensitivity systems.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def compare(k, d, params, samples, seed, beta_low, beta_high, echo, out):
    """Agreement report: inequality system vs. equivalence-theorem oracle.

    With --echo and --params, prints the per-C inequality values next to
    the per-setting saturated sensitivities for one parameter point.
    """

    def work():
        if echo:
            theta = _resolve_theta(k, d, params, None, None)
            m = theta.model
            w = corner_design(m)
            click.echo("inequality system:")
            for q in corner_inequalities(m):
                click.echo(
                    f"  C={{{','.join(map(str, q.label))}}}"
                    f"  lhs={_fmt(evaluate_inequality(q, theta))}"
                )
            click.echo("saturated sensitivities (value 1 on the support):")
            for x, value in saturated_kw_values(w, theta, m).items():
                click.echo(f"  x={setting_string(x, m.k)}  value={_fmt(value)}")
            return
        if params is not None:
            raise click.UsageError("--params is for --echo mode; grid mode uses --k/--d")
        if k is None or d is None:
            raise click.UsageError("--k and --d are required")
        m = InteractionModel(k, d)
        if beta_low >= beta_high:
            raise click.UsageError("--beta-low must be below --beta-high")
        rng = np.random.default_rng(seed)
        w = corner_design(m)
        disagreements = []
        for _ in range(samples):
            values = np.zeros(m.p)
            values[1:] = rng.uniform(beta_low, beta_high, size=m.p - 1)
            theta = ParameterVector(m, values)
            by_theorem = is_corner_optimal_by_theorem(theta, m)
            by_kw = kw_certificate(w, theta, m)
            if by_theorem.optimal != by_kw.optimal:
                disagreements.append({
                    "beta": theta.as_dict(),
                    "theorem_optimal": by_theorem.optimal,
                    "kw_optimal": by_kw.optimal,
                    "max_lhs": by_theorem.max_directional_value,
                    "kw_max": by_kw.max_directional_value,
                })
        payload = {
            "k": k, "d": d, "samples": samples, "seed": seed,
            "agreements": samples - len(disagreements),
            "disagreements": disagreements,
        }
        click.echo(
            f"agreement: {payload['agreements']}/{samples}"
            f" ({len(disagreements)} disagreements)"
        )
        if out:
            Path(out).write_text(json.dumps(payload, indent=2) + "\n")
            _write_manifest(
                "compare", [],
                {"k": k, "d": d, "samples": samples,
                 "beta_low": beta_low, "beta_high": beta_high},
                seed, [out],
            )

    _run(work)


@main.command()
@click.option("--k", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--params", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--beta", type=str, default=None)
@click.option("--symmetric", type=str, default=None)
@click.option("--element", type=str, required=True,
              help='Group element, e.g. "perm=2,1,3;flips=1,3".')
@click.option("--design", "design_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Design to check the transformation law against.")
@click.option("--orbit", is_flag=True, help="List the parameter orbit under the element.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def symmetry(k, d, params, beta, symmetric, element, design_path, orbit, out):
    """Apply a symmetry to parameters; optionally verify the matrix law."""

    def work():
        theta = _resolve_theta(k, d, params, beta, symmetric)
        m = theta.model
        g = _parse_element(element, m.k)
        rep = representation_matrix(g, m)
        moved = act_on_parameters(g, theta, m)
        click.echo(f"|det Q| = {abs(rep.det)}")
        click.echo("transformed beta: " + json.dumps(moved.as_dict()))
        orbit_list = [theta.as_dict()]
        if orbit:
            seen = {tuple(np.round(theta.values, 12))}
            current = theta
            while True:
                current = act_on_parameters(g, current, m)
                key = tuple(np.round(current.values, 12))
                if key in seen:
                    break
                seen.add(key)
                orbit_list.append(current.as_dict())
            click.echo(f"orbit size {len(orbit_list)}")
        if design_path:
            w = load_design(design_path, m.k)
            report = verify_transformation(g, w, theta, m)
            click.echo(
                f"transformation residual={_fmt(report.max_residual)}"
                f"  det-difference={_fmt(report.det_difference)}"
            )
            moved_design = act_on_design(g, w)
            click.echo(
                "transformed design support: "
                + ",".join(setting_string(x, m.k) for x in moved_design.support)
            )
        if out:
            payload = orbit_list if orbit else [moved.as_dict()]
            Path(out).write_text(json.dumps(payload, indent=2) + "\n")
            _write_manifest(
                "symmetry", [p for p in (params,) if p],
                {"k": k, "d": d, "element": element, "orbit": orbit},
                None, [out],
            )

    _run(work)


if __name__ == "__main__":
    sys.exit(main())
