"""Batch front end.

Subcommands (all driven by a scene file, see config module):

* ``amplitude``      far-field amplitude over an outgoing-direction grid
* ``cross-section``  dsigma/dOmega table plus sigma_total and the
                     optical-theorem residual
* ``field``          total field on a line or plane of points
* ``compare-rb``     exact vs recursive-Born far-zone series vs Neumann vs
                     first Born over an alpha or k sweep, with discrepancy
                     columns and the fitted log-log slope
* ``renorm-flow``    cutoff sweep of the single-scatterer amplitude against
                     its renormalized limit
* ``validate``       report every violated scene invariant, run nothing

Tables are CSV by default (17 significant digits, LF line endings, '#'
comment lines for the inputs echo and summary) or JSON with ``--format
json``. Exit codes: 0 success, 1 usage, 2 validation/input error,
3 numerical error (singular system or divergent series).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .closed_form import amplitude_closed_form
from .config import (
    SceneConfig,
    SceneValidationError,
    load_scene,
    materialize_sweep,
    scene_to_dict,
    validate_file,
)
from .errors import SpectralSingularityError
from .model import Direction, IncidentWave, PTDoubleDeltaParams, orthonormal_frame, pt_to_config
from .observables import AngularGrid
from .renorm import cutoff_matched_amplitude
from .series import (
    FarZoneSeriesParams,
    discrepancy_slope,
    far_zone_born_amplitude,
    first_born,
    neumann_amplitude,
)
from .solver import (
    Scheme,
    amplitude_exact,
    amplitudes_for_directions,
    solve_for_wave,
    total_field_from_solution,
)

SUBCOMMANDS = (
    "amplitude",
    "cross-section",
    "field",
    "compare-rb",
    "renorm-flow",
    "validate",
)

_COMPARE_SCHEME_TAG = "exact+rb_far_zone+neumann+first_born"


class _NumericalFailure(Exception):
    """Divergence or other numerical failure: CLI exit code 3."""


@dataclass
class OutputTable:
    """One subcommand's result: inputs echo, column schema, rows, summary."""

    subcommand: str
    inputs: dict
    columns: list[str]
    units: list[str]
    rows: list[list]
    summary: dict


def _fmt_cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def render_csv(table: OutputTable) -> str:
    lines = [f"# deltascat {table.subcommand}"]
    lines.append("# inputs: " + json.dumps(table.inputs, sort_keys=True, separators=(",", ":")))
    lines.append(",".join(f"{c}[{u}]" for c, u in zip(table.columns, table.units)))
    for row in table.rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    for key in sorted(table.summary):
        lines.append(f"# {key} = {_fmt_cell(table.summary[key])}")
    return "\n".join(lines) + "\n"


def render_json(table: OutputTable) -> str:
    payload = {
        "subcommand": table.subcommand,
        "inputs": table.inputs,
        "columns": table.columns,
        "units": table.units,
        "rows": table.rows,
        "summary": table.summary,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _write_output(text: str, output_path: str | None) -> None:
    if output_path is None:
        sys.stdout.write(text)
    else:
        with open(output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _map_ordered(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _angles_for(directions: np.ndarray, axis: Direction) -> tuple[np.ndarray, np.ndarray]:
    e1, e2, a = orthonormal_frame(axis)
    cos_t = np.clip(directions @ a, -1.0, 1.0)
    phi = np.arctan2(directions @ e2, directions @ e1) % (2.0 * math.pi)
    return np.arccos(cos_t), phi


def _scan_directions(scene: SceneConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scan = scene.scan
    if "directions" in scan:
        grid = AngularGrid.build(
            scene.wave.direction,
            scan["directions"]["n_polar"],
            scan["directions"]["n_azimuthal"],
        )
        return grid.directions, grid.polar, grid.azimuth
    if "directions_list" in scan:
        dirs = np.array(
            [Direction.normalized(v).unit for v in scan["directions_list"]]
        )
        theta, phi = _angles_for(dirs, scene.wave.direction)
        return dirs, theta, phi
    raise SceneValidationError(
        ["amplitude requires scan.directions or scan.directions_list"]
    )


def _pt_required(scene: SceneConfig, what: str) -> PTDoubleDeltaParams:
    if scene.pt is None:
        raise SceneValidationError([f"{what} requires the pt_double_delta block"])
    return scene.pt


def _amplitude_values(scene: SceneConfig, directions: np.ndarray, threads: int) -> np.ndarray:
    """Amplitudes over outgoing directions under the scene's scheme."""
    wave = scene.wave
    scheme = scene.scheme
    if scheme is Scheme.EXACT:
        result = solve_for_wave(scene.config(), wave)
        if result is None:
            return np.zeros(len(directions), dtype=complex)
        return amplitudes_for_directions(result, directions)
    if scheme is Scheme.FIRST_BORN:
        cfg = scene.config()
        return np.array(
            [first_born(cfg, wave, Direction(*d)).value for d in directions]
        )
    if scheme is Scheme.CLOSED_FORM:
        pt = _pt_required(scene, "scheme closed_form")
        return np.array(
            _map_ordered(
                lambda d: amplitude_closed_form(pt, wave.direction, Direction(*d)).value,
                list(directions),
                threads,
            )
        )
    if scheme is Scheme.NEUMANN:
        cfg = scene.config()

        def one(d):
            series = neumann_amplitude(
                cfg, wave, Direction(*d), scene.max_terms, scene.series_tol
            )
            if series.converged_value is None:
                raise _NumericalFailure(
                    f"Neumann series diverged (spectral radius "
                    f"{series.spectral_radius_estimate:.6g})"
                )
            return series.converged_value

        return np.array(_map_ordered(one, list(directions), threads))
    # Scheme.RB_FAR_ZONE
    pt = _pt_required(scene, "scheme rb_far_zone")
    params = FarZoneSeriesParams(
        alpha=pt.alpha, sigma=pt.sigma, gamma=pt.gamma, r0=pt.r0, k=wave.k
    )

    def one_rb(d):
        series = far_zone_born_amplitude(
            params, wave.direction, Direction(*d), scene.max_terms, scene.series_tol
        )
        if series.converged_value is None:
            raise _NumericalFailure(
                f"far-zone Born series diverged (spectral radius "
                f"{series.spectral_radius_estimate:.6g})"
            )
        return series.converged_value

    return np.array(_map_ordered(one_rb, list(directions), threads))


def _run_amplitude(scene: SceneConfig, threads: int) -> OutputTable:
    directions, theta, phi = _scan_directions(scene)
    values = _amplitude_values(scene, directions, threads)
    tag = scene.scheme.value
    rows = [
        [
            float(theta[i]),
            float(phi[i]),
            float(directions[i, 0]),
            float(directions[i, 1]),
            float(directions[i, 2]),
            values[i].real,
            values[i].imag,
            abs(values[i]) ** 2,
            tag,
        ]
        for i in range(len(directions))
    ]
    return OutputTable(
        "amplitude",
        scene_to_dict(scene),
        ["theta", "phi", "s_x", "s_y", "s_z", "f_re", "f_im", "dcs", "scheme"],
        ["rad", "rad", "-", "-", "-", "length", "length", "length^2/sr", "-"],
        rows,
        {},
    )


def _run_cross_section(scene: SceneConfig, threads: int) -> OutputTable:
    grid = AngularGrid.build(scene.wave.direction, scene.n_polar, scene.n_azimuthal)
    result = solve_for_wave(scene.config(), scene.wave)
    if result is None:
        values = np.zeros(len(grid), dtype=complex)
        forward = 0.0j
    else:
        values = amplitudes_for_directions(result, grid.directions)
        forward = amplitudes_for_directions(
            result, scene.wave.direction.unit[np.newaxis, :]
        )[0]
    dcs = np.abs(values) ** 2
    sigma_total = float(grid.weights @ dcs)
    residual = sigma_total - (4.0 * math.pi / scene.wave.k) * forward.imag
    rows = [
        [
            float(grid.polar[i]),
            float(grid.azimuth[i]),
            float(grid.directions[i, 0]),
            float(grid.directions[i, 1]),
            float(grid.directions[i, 2]),
            float(dcs[i]),
            "exact",
        ]
        for i in range(len(grid))
    ]
    return OutputTable(
        "cross-section",
        scene_to_dict(scene),
        ["theta", "phi", "s_x", "s_y", "s_z", "dcs", "scheme"],
        ["rad", "rad", "-", "-", "-", "length^2/sr", "-"],
        rows,
        {
            "sigma_total[length^2]": sigma_total,
            "optical_residual[length^2]": residual,
        },
    )


def _field_points(scene: SceneConfig) -> np.ndarray:
    scan = scene.scan
    if "line" in scan:
        block = scan["line"]
        start = np.array(block["start"], dtype=float)
        stop = np.array(block["stop"], dtype=float)
        n = int(block["n"])
        if n == 1:
            return start[np.newaxis, :]
        ts = np.linspace(0.0, 1.0, n)
        return start + ts[:, np.newaxis] * (stop - start)
    if "plane" in scan:
        block = scan["plane"]
        origin = np.array(block["origin"], dtype=float)
        span1 = np.array(block["span1"], dtype=float)
        span2 = np.array(block["span2"], dtype=float)
        n1, n2 = int(block["n1"]), int(block["n2"])
        t1 = np.linspace(0.0, 1.0, n1) if n1 > 1 else np.zeros(1)
        t2 = np.linspace(0.0, 1.0, n2) if n2 > 1 else np.zeros(1)
        pts = [origin + a * span1 + b * span2 for a in t1 for b in t2]
        return np.array(pts)
    raise SceneValidationError(["field requires scan.line or scan.plane"])


def _run_field(scene: SceneConfig, threads: int) -> OutputTable:
    points = _field_points(scene)
    result = solve_for_wave(scene.config(), scene.wave)
    if result is None:
        values = scene.wave.field(points)
    else:
        values = total_field_from_solution(result, points)
    incident = scene.wave.field(points)
    rows = [
        [
            float(points[i, 0]),
            float(points[i, 1]),
            float(points[i, 2]),
            values[i].real,
            values[i].imag,
            incident[i].real,
            incident[i].imag,
            "exact",
        ]
        for i in range(len(points))
    ]
    return OutputTable(
        "field",
        scene_to_dict(scene),
        ["x", "y", "z", "u_re", "u_im", "u0_re", "u0_im", "scheme"],
        ["length", "length", "length", "-", "-", "-", "-", "-"],
        rows,
        {},
    )


def _run_compare_rb(scene: SceneConfig, threads: int) -> OutputTable:
    pt = _pt_required(scene, "compare-rb")
    scan = scene.scan
    has_alphas = "alphas" in scan
    has_ks = "ks" in scan
    if has_alphas == has_ks:
        raise SceneValidationError(
            ["compare-rb requires exactly one of scan.alphas or scan.ks"]
        )
    outgoing = (
        Direction.normalized(scan["outgoing"])
        if "outgoing" in scan
        else scene.wave.direction
    )
    a_hat = scene.wave.direction

    if has_alphas:
        sweep = materialize_sweep(scan["alphas"], "scan.alphas")
        points = [(alpha, scene.wave.k) for alpha in sweep]
    else:
        sweep = materialize_sweep(scan["ks"], "scan.ks")
        points = [(pt.alpha, k) for k in sweep]

    def one(point):
        alpha, k = point
        pt_k = PTDoubleDeltaParams(
            r0=pt.r0, alpha=alpha, sigma=pt.sigma, gamma=pt.gamma, k=k
        )
        cfg = pt_to_config(pt_k)
        wave = IncidentWave(k, a_hat)
        f_exact = amplitude_exact(cfg, wave, outgoing).value
        f_born = first_born(cfg, wave, outgoing).value
        rb = far_zone_born_amplitude(
            FarZoneSeriesParams(
                alpha=alpha, sigma=pt.sigma, gamma=pt.gamma, r0=pt.r0, k=k
            ),
            a_hat,
            outgoing,
            scene.max_terms,
            scene.series_tol,
        )
        neumann = neumann_amplitude(cfg, wave, outgoing, scene.max_terms, scene.series_tol)
        f_rb = rb.converged_value if rb.converged_value is not None else complex(math.nan, math.nan)
        f_ne = (
            neumann.converged_value
            if neumann.converged_value is not None
            else complex(math.nan, math.nan)
        )
        return [
            alpha,
            k,
            f_exact.real,
            f_exact.imag,
            f_rb.real,
            f_rb.imag,
            f_ne.real,
            f_ne.imag,
            f_born.real,
            f_born.imag,
            abs(f_rb - f_exact),
            abs(f_ne - f_exact),
            abs(f_born - f_exact),
            int(rb.converged_value is not None),
            int(neumann.converged_value is not None),
            _COMPARE_SCHEME_TAG,
        ]

    rows = _map_ordered(one, points, threads)

    sweep_values = [row[0] if has_alphas else row[1] for row in rows]
    rb_diffs = [row[10] for row in rows]
    pairs = list(zip(sweep_values, rb_diffs))
    try:
        slope = discrepancy_slope(pairs)
    except ValueError:
        slope = math.nan
    return OutputTable(
        "compare-rb",
        scene_to_dict(scene),
        [
            "alpha",
            "k",
            "f_exact_re",
            "f_exact_im",
            "f_rb_re",
            "f_rb_im",
            "f_neumann_re",
            "f_neumann_im",
            "f_born_re",
            "f_born_im",
            "abs_diff_rb",
            "abs_diff_neumann",
            "abs_diff_born",
            "rb_converged",
            "neumann_converged",
            "scheme",
        ],
        [
            "-",
            "1/length",
            "length",
            "length",
            "length",
            "length",
            "length",
            "length",
            "length",
            "length",
            "length",
            "length",
            "length",
            "-",
            "-",
            "-",
        ],
        rows,
        {"rb_discrepancy_loglog_slope": slope},
    )


def _run_renorm_flow(scene: SceneConfig, threads: int) -> OutputTable:
    if scene.scatterers is None or len(scene.scatterers) != 1:
        raise SceneValidationError(
            ["renorm-flow requires a 'scatterers' block with exactly one scatterer"]
        )
    if "lambdas" not in scene.scan:
        raise SceneValidationError(["renorm-flow requires scan.lambdas"])
    cutoffs = materialize_sweep(scene.scan["lambdas"], "scan.lambdas")
    k = scene.wave.k
    bad = [c for c in cutoffs if c <= k]
    if bad:
        raise SceneValidationError(
            [f"scan.lambdas: cutoff {c:.9g} <= k = {k:.9g} (pole not enclosed)" for c in bad]
        )
    z_tilde = scene.scatterers.scatterers[0].coupling
    reference = amplitude_exact(scene.scatterers, scene.wave, scene.wave.direction).value

    def one(cutoff):
        f_cut = cutoff_matched_amplitude(z_tilde, k, cutoff)
        return [
            float(cutoff),
            f_cut.real,
            f_cut.imag,
            reference.real,
            reference.imag,
            abs(f_cut - reference),
            "exact",
        ]

    rows = _map_ordered(one, cutoffs, threads)
    return OutputTable(
        "renorm-flow",
        scene_to_dict(scene),
        ["lambda", "f_cutoff_re", "f_cutoff_im", "f_renorm_re", "f_renorm_im", "deviation", "scheme"],
        ["1/length", "length", "length", "length", "length", "length", "-"],
        rows,
        {},
    )


_DISPATCH = {
    "amplitude": _run_amplitude,
    "cross-section": _run_cross_section,
    "field": _run_field,
    "compare-rb": _run_compare_rb,
    "renorm-flow": _run_renorm_flow,
}


def validate(config_path: str) -> list[str]:
    """Every violated invariant of the scene file (no computation)."""
    return validate_file(config_path)


def run(
    subcommand: str,
    config_path: str,
    output_path: str | None = None,
    *,
    fmt: str = "csv",
    threads: int | None = None,
    tol: float | None = None,
    max_terms: int | None = None,
    grid_polar: int | None = None,
    grid_azimuthal: int | None = None,
) -> int:
    """Execute one subcommand; returns the process exit status."""
    if subcommand not in SUBCOMMANDS:
        sys.stderr.write(
            f"unknown subcommand {subcommand!r}; expected one of {', '.join(SUBCOMMANDS)}\n"
        )
        return 1

    if subcommand == "validate":
        try:
            report = validate(config_path)
        except OSError as exc:
            sys.stderr.write(f"error: cannot read {config_path}: {exc}\n")
            return 2
        text = "".join(line + "\n" for line in report)
        _write_output(text, output_path)
        return 0 if not report else 2

    try:
        scene = load_scene(config_path)
    except OSError as exc:
        sys.stderr.write(f"error: cannot read {config_path}: {exc}\n")
        return 2
    except SceneValidationError as exc:
        for problem in exc.problems:
            sys.stderr.write(f"invalid scene: {problem}\n")
        return 2

    if tol is not None:
        scene.series_tol = float(tol)
    if max_terms is not None:
        scene.max_terms = int(max_terms)
    if grid_polar is not None:
        scene.n_polar = int(grid_polar)
    if grid_azimuthal is not None:
        scene.n_azimuthal = int(grid_azimuthal)
    n_threads = threads if threads is not None else (os.cpu_count() or 1)

    try:
        table = _DISPATCH[subcommand](scene, max(1, int(n_threads)))
    except SceneValidationError as exc:
        for problem in exc.problems:
            sys.stderr.write(f"invalid scene: {problem}\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(f"invalid scene: {exc}\n")
        return 2
    except SpectralSingularityError as exc:
        sys.stderr.write(
            "numerical error: "
            + str(exc)
            + "; offending parameters: "
            + json.dumps(scene_to_dict(scene), sort_keys=True, separators=(",", ":"))
            + "\n"
        )
        return 3
    except _NumericalFailure as exc:
        sys.stderr.write(
            "numerical error: "
            + str(exc)
            + "; offending parameters: "
            + json.dumps(scene_to_dict(scene), sort_keys=True, separators=(",", ":"))
            + "\n"
        )
        return 3

    text = render_csv(table) if fmt == "csv" else render_json(table)
    _write_output(text, output_path)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="scene file (JSON or TOML)")
    common.add_argument("--output", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=None, help="worker threads for scan points")
    common.add_argument("--tol", type=float, default=None, help="series convergence tolerance")
    common.add_argument("--max-terms", type=int, default=None, help="series term cap")
    common.add_argument("--grid-polar", type=int, default=None, help="quadrature polar order")
    common.add_argument("--grid-azimuthal", type=int, default=None, help="quadrature azimuthal order")

    parser = argparse.ArgumentParser(
        prog="deltascat",
        description="Scattering from arrays of renormalized point scatterers.",
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    helps = {
        "amplitude": "far-field amplitude over an outgoing-direction grid",
        "cross-section": "differential cross-section table, sigma_total, optical residual",
        "field": "total field on a line or plane",
        "compare-rb": "exact vs series schemes over an alpha or k sweep",
        "renorm-flow": "cutoff sweep against the renormalized amplitude",
        "validate": "report every violated scene invariant",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage/help; remap its exit code
        return 0 if exc.code in (0, None) else 1
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return 1
    return run(
        args.subcommand,
        args.config,
        args.output,
        fmt=args.format,
        threads=args.threads,
        tol=args.tol,
        max_terms=args.max_terms,
        grid_polar=args.grid_polar,
        grid_azimuthal=args.grid_azimuthal,
    )


if __name__ == "__main__":
    sys.exit(main())
