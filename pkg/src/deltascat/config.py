"""Scene files for the batch CLI: parsing, exhaustive validation, echo.

A scene is one JSON (or TOML) document describing the scatterers -- either
an explicit list or a mirrored conjugate-coupling pair -- the incident
wave, an optional scan block consumed by the subcommand, the amplitude
scheme, quadrature orders, and series tolerances. Validation collects
*every* violated invariant instead of stopping at the first, so the
``validate`` subcommand can print a complete report without running any
computation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .model import (
    Direction,
    IncidentWave,
    PointScatterer,
    PTDoubleDeltaParams,
    ScattererConfig,
    UNIT_NORM_SLACK,
    pt_to_config,
)
from .solver import Scheme

DEFAULT_SERIES_TOL = 1e-10
DEFAULT_MAX_TERMS = 200

_SCAN_KEYS = {
    "directions",
    "directions_list",
    "outgoing",
    "line",
    "plane",
    "alphas",
    "ks",
    "lambdas",
}


class SceneValidationError(ValueError):
    """One or more scene invariants are violated; ``problems`` lists them all."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass
class SceneConfig:
    """A parsed and validated scene."""

    wave: IncidentWave
    scatterers: ScattererConfig | None
    pt: PTDoubleDeltaParams | None
    scheme: Scheme
    scan: dict
    n_polar: int
    n_azimuthal: int
    series_tol: float
    max_terms: int

    def config(self) -> ScattererConfig:
        """The scatterer configuration, expanding the pair block if used."""
        if self.scatterers is not None:
            return self.scatterers
        return pt_to_config(self.pt)


def _is_finite_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_vec3(v, name: str, problems: list[str]) -> bool:
    if not (isinstance(v, (list, tuple)) and len(v) == 3 and all(_is_finite_number(c) for c in v)):
        problems.append(f"{name} must be a list of 3 finite numbers, got {v!r}")
        return False
    return True


def _check_unit_vec(v, name: str, problems: list[str]) -> bool:
    if not _check_vec3(v, name, problems):
        return False
    norm = math.sqrt(sum(float(c) ** 2 for c in v))
    if abs(norm - 1.0) > UNIT_NORM_SLACK:
        problems.append(f"{name} is not a unit vector (norm {norm:.9g})")
        return False
    return True


def _parse_complex(v):
    """Coupling as [re, im] or a plain real number; None when malformed."""
    if _is_finite_number(v):
        return complex(float(v), 0.0)
    if (
        isinstance(v, (list, tuple))
        and len(v) == 2
        and all(_is_finite_number(c) for c in v)
    ):
        return complex(float(v[0]), float(v[1]))
    return None


def materialize_sweep(block, name: str = "sweep") -> list[float]:
    """A sweep is either an explicit list of numbers or
    {start, stop, num, spacing: linear|log}."""
    if isinstance(block, (list, tuple)):
        return [float(v) for v in block]
    if isinstance(block, dict):
        start = float(block["start"])
        stop = float(block["stop"])
        num = int(block["num"])
        spacing = block.get("spacing", "linear")
        if num < 1:
            raise ValueError(f"{name}.num must be >= 1")
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise ValueError(f"{name}: log spacing needs positive endpoints")
            return list(np.geomspace(start, stop, num))
        if spacing == "linear":
            return list(np.linspace(start, stop, num))
        raise ValueError(f"{name}.spacing must be 'linear' or 'log', got {spacing!r}")
    raise ValueError(f"{name} must be a list or a start/stop/num dict")


def _validate_sweep(block, name: str, problems: list[str]) -> list[float] | None:
    try:
        values = materialize_sweep(block, name)
    except (ValueError, KeyError, TypeError) as exc:
        problems.append(f"{name} is malformed: {exc}")
        return None
    if not values:
        problems.append(f"{name} is empty")
        return None
    if not all(math.isfinite(v) for v in values):
        problems.append(f"{name} contains non-finite values")
        return None
    return values


def validate_raw(raw) -> list[str]:
    """All violated invariants of a raw scene document (possibly empty)."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        return ["scene must be a JSON/TOML object at top level"]

    # wave
    k = None
    wave = raw.get("wave")
    if not isinstance(wave, dict):
        problems.append("missing or malformed 'wave' block")
    else:
        if _is_finite_number(wave.get("k")) and wave["k"] > 0:
            k = float(wave["k"])
        else:
            problems.append(f"wave.k must be a positive finite number, got {wave.get('k')!r}")
        _check_unit_vec(wave.get("direction"), "wave.direction", problems)

    # exactly one scatterer source
    has_list = "scatterers" in raw
    has_pt = "pt_double_delta" in raw
    if has_list == has_pt:
        problems.append(
            "exactly one of 'scatterers' or 'pt_double_delta' must be present"
        )

    if has_list:
        entries = raw["scatterers"]
        if not (isinstance(entries, list) and len(entries) >= 1):
            problems.append("'scatterers' must be a non-empty list")
        else:
            positions = []
            for i, entry in enumerate(entries):
                if not isinstance(entry, dict):
                    problems.append(f"scatterers[{i}] must be an object")
                    continue
                ok = _check_vec3(entry.get("position"), f"scatterers[{i}].position", problems)
                if _parse_complex(entry.get("coupling")) is None:
                    problems.append(
                        f"scatterers[{i}].coupling must be a number or [re, im] pair"
                    )
                if ok:
                    positions.append((i, np.array(entry["position"], dtype=float)))
            for a in range(len(positions)):
                for b in range(a + 1, len(positions)):
                    ia, pa = positions[a]
                    ib, pb = positions[b]
                    if np.linalg.norm(pa - pb) == 0.0:
                        problems.append(
                            f"coincident scatterers: {ia} and {ib} both at {pa.tolist()}"
                        )

    if has_pt:
        pt = raw["pt_double_delta"]
        if not isinstance(pt, dict):
            problems.append("'pt_double_delta' must be an object")
        else:
            if _check_vec3(pt.get("r0"), "pt_double_delta.r0", problems):
                if math.sqrt(sum(float(c) ** 2 for c in pt["r0"])) == 0.0:
                    problems.append(
                        "pt_double_delta.r0 = 0: coincident scatterers"
                    )
            for name in ("alpha", "sigma", "gamma"):
                if not _is_finite_number(pt.get(name)):
                    problems.append(
                        f"pt_double_delta.{name} must be a finite number, got {pt.get(name)!r}"
                    )
            if (
                _is_finite_number(pt.get("alpha"))
                and _is_finite_number(pt.get("sigma"))
                and _is_finite_number(pt.get("gamma"))
            ):
                if pt["alpha"] == 0 or (pt["sigma"] == 0 and pt["gamma"] == 0):
                    problems.append(
                        "pt_double_delta couplings are degenerate: "
                        "alpha*(sigma + i gamma) must be nonzero"
                    )

    # scheme
    scheme_name = raw.get("scheme", "exact")
    valid_schemes = {s.value for s in Scheme}
    if scheme_name not in valid_schemes:
        problems.append(f"scheme must be one of {sorted(valid_schemes)}, got {scheme_name!r}")
    elif scheme_name in ("closed_form", "rb_far_zone") and not has_pt:
        problems.append(f"scheme '{scheme_name}' requires the pt_double_delta block")

    # scan
    scan = raw.get("scan", {})
    if not isinstance(scan, dict):
        problems.append("'scan' must be an object")
        scan = {}
    for key in scan:
        if key not in _SCAN_KEYS:
            problems.append(f"unknown scan block '{key}' (known: {sorted(_SCAN_KEYS)})")
    if "directions" in scan:
        block = scan["directions"]
        if not isinstance(block, dict) or not all(
            isinstance(block.get(n), int) and block.get(n) >= 1
            for n in ("n_polar", "n_azimuthal")
        ):
            problems.append("scan.directions needs integer n_polar, n_azimuthal >= 1")
    if "directions_list" in scan:
        block = scan["directions_list"]
        if not (isinstance(block, list) and block):
            problems.append("scan.directions_list must be a non-empty list of 3-vectors")
        else:
            for i, v in enumerate(block):
                _check_unit_vec(v, f"scan.directions_list[{i}]", problems)
    if "outgoing" in scan:
        _check_unit_vec(scan["outgoing"], "scan.outgoing", problems)
    if "line" in scan:
        block = scan["line"]
        if not isinstance(block, dict):
            problems.append("scan.line must be an object")
        else:
            _check_vec3(block.get("start"), "scan.line.start", problems)
            _check_vec3(block.get("stop"), "scan.line.stop", problems)
            if not (isinstance(block.get("n"), int) and block["n"] >= 1):
                problems.append("scan.line.n must be an integer >= 1")
    if "plane" in scan:
        block = scan["plane"]
        if not isinstance(block, dict):
            problems.append("scan.plane must be an object")
        else:
            for fieldname in ("origin", "span1", "span2"):
                _check_vec3(block.get(fieldname), f"scan.plane.{fieldname}", problems)
            for fieldname in ("n1", "n2"):
                if not (isinstance(block.get(fieldname), int) and block[fieldname] >= 1):
                    problems.append(f"scan.plane.{fieldname} must be an integer >= 1")
    for sweep_name in ("alphas", "ks"):
        if sweep_name in scan:
            values = _validate_sweep(scan[sweep_name], f"scan.{sweep_name}", problems)
            if values is not None:
                for v in values:
                    if sweep_name == "alphas" and v == 0.0:
                        problems.append("scan.alphas contains alpha = 0 (no scatterer)")
                    if sweep_name == "ks" and v <= 0.0:
                        problems.append(f"scan.ks contains non-positive wavenumber {v}")
    if "lambdas" in scan:
        values = _validate_sweep(scan["lambdas"], "scan.lambdas", problems)
        if values is not None and k is not None:
            for v in values:
                if v <= k:
                    problems.append(
                        f"scan.lambdas: cutoff {v:.9g} <= k = {k:.9g} (pole not enclosed)"
                    )

    # quadrature and tolerances
    quad = raw.get("quadrature", {})
    if not isinstance(quad, dict):
        problems.append("'quadrature' must be an object")
    else:
        for name in ("n_polar", "n_azimuthal"):
            if name in quad and not (isinstance(quad[name], int) and quad[name] >= 1):
                problems.append(f"quadrature.{name} must be an integer >= 1")
    tols = raw.get("tolerances", {})
    if not isinstance(tols, dict):
        problems.append("'tolerances' must be an object")
    else:
        if "series_tol" in tols and not (
            _is_finite_number(tols["series_tol"]) and tols["series_tol"] > 0
        ):
            problems.append("tolerances.series_tol must be a positive finite number")
        if "max_terms" in tols and not (
            isinstance(tols["max_terms"], int) and tols["max_terms"] >= 1
        ):
            problems.append("tolerances.max_terms must be an integer >= 1")

    return problems


def _load_raw(path: str) -> dict:
    if str(path).endswith(".toml"):
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def validate_file(path: str) -> list[str]:
    """Every violated invariant of the scene at ``path`` (no computation)."""
    try:
        raw = _load_raw(path)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        return [f"cannot parse {path}: {exc}"]
    return validate_raw(raw)


def build_scene(raw: dict) -> SceneConfig:
    """Construct a SceneConfig from an already-validated raw document."""
    wave = IncidentWave(
        float(raw["wave"]["k"]), Direction(*(float(c) for c in raw["wave"]["direction"]))
    )
    scatterers = None
    pt = None
    if "scatterers" in raw:
        scatterers = ScattererConfig(
            tuple(
                PointScatterer(
                    np.array(entry["position"], dtype=float),
                    _parse_complex(entry["coupling"]),
                )
                for entry in raw["scatterers"]
            )
        )
    else:
        block = raw["pt_double_delta"]
        pt = PTDoubleDeltaParams(
            r0=np.array(block["r0"], dtype=float),
            alpha=float(block["alpha"]),
            sigma=float(block["sigma"]),
            gamma=float(block["gamma"]),
            k=wave.k,
        )
    quad = raw.get("quadrature", {})
    tols = raw.get("tolerances", {})
    return SceneConfig(
        wave=wave,
        scatterers=scatterers,
        pt=pt,
        scheme=Scheme(raw.get("scheme", "exact")),
        scan=dict(raw.get("scan", {})),
        n_polar=int(quad.get("n_polar", 64)),
        n_azimuthal=int(quad.get("n_azimuthal", 128)),
        series_tol=float(tols.get("series_tol", DEFAULT_SERIES_TOL)),
        max_terms=int(tols.get("max_terms", DEFAULT_MAX_TERMS)),
    )


def load_scene(path: str) -> SceneConfig:
    """Parse and fully validate a scene file.

    Raises SceneValidationError carrying the complete problem list, or
    OSError when the file cannot be read.
    """
    try:
        raw = _load_raw(path)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise SceneValidationError([f"cannot parse {path}: {exc}"]) from exc
    problems = validate_raw(raw)
    if problems:
        raise SceneValidationError(problems)
    return build_scene(raw)


def scene_to_dict(scene: SceneConfig) -> dict:
    """Normalized echo of a scene; valid as a scene document itself."""
    out: dict = {
        "wave": {
            "k": scene.wave.k,
            "direction": [
                scene.wave.direction.x,
                scene.wave.direction.y,
                scene.wave.direction.z,
            ],
        },
        "scheme": scene.scheme.value,
        "quadrature": {"n_polar": scene.n_polar, "n_azimuthal": scene.n_azimuthal},
        "tolerances": {"series_tol": scene.series_tol, "max_terms": scene.max_terms},
    }
    if scene.scatterers is not None:
        out["scatterers"] = [
            {
                "position": s.position.tolist(),
                "coupling": [s.coupling.real, s.coupling.imag],
            }
            for s in scene.scatterers.scatterers
        ]
    else:
        out["pt_double_delta"] = {
            "r0": scene.pt.r0.tolist(),
            "alpha": scene.pt.alpha,
            "sigma": scene.pt.sigma,
            "gamma": scene.pt.gamma,
        }
    if scene.scan:
        out["scan"] = scene.scan
    return out
