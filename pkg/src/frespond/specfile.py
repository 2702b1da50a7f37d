"""Experiment spec files: strict JSON schema, defaults, config hashing.

Every physical quantity carries its unit in the key name (d_m, freq_hz, ...).
Unknown keys are rejected; error messages carry JSON-pointer paths. Section
defaults reproduce the bundled paper-default experiment.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .antenna import (
    AntennaPattern,
    CosinePowerPattern,
    GaussianBeamPattern,
    IsotropicPattern,
    load_tabulated,
)
from .diffraction import DEFAULT_MAX_PHASE_STEP_RAD, DEFAULT_SAMPLE_BUDGET, QuadratureSpec
from .errors import ValidationError
from .geometry import BodySheet, LinkGeometry, MeasurementGrid, MembershipRule
from .scenario import JitterSpec, NoiseSpec, ScenarioConfig

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"

# Table-I directional antenna preset used by the --model overrides.
DIRECTIONAL_HPBW_AZ_DEG = 60.0
DIRECTIONAL_HPBW_EL_DEG = 76.0
DIRECTIONAL_GAIN_DBI = 9.0
OMNI_GAIN_DBI = 2.0


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated spec: scenario config plus membership rule and provenance."""

    config: ScenarioConfig
    membership: MembershipRule
    seed: int
    config_sha256: str
    source_path: str | None = None


def _err(path: str, message: str) -> ValidationError:
    return ValidationError(f"{path}: {message}")


def _expect_object(node, path, allowed_keys):
    if not isinstance(node, dict):
        raise _err(path, f"expected an object, got {type(node).__name__}")
    unknown = set(node) - set(allowed_keys)
    if unknown:
        raise _err(path, f"unknown keys {sorted(unknown)}; allowed: {sorted(allowed_keys)}")


def _number(node, path, key, default=None, minimum=None, exclusive_min=None):
    if key not in node:
        if default is None:
            raise _err(f"{path}/{key}", "required value is missing")
        return default
    val = node[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise _err(f"{path}/{key}", f"expected a number, got {val!r}")
    if minimum is not None and val < minimum:
        raise _err(f"{path}/{key}", f"must be >= {minimum}, got {val}")
    if exclusive_min is not None and val <= exclusive_min:
        raise _err(f"{path}/{key}", f"must be > {exclusive_min}, got {val}")
    return float(val)


def _integer(node, path, key, default=None, minimum=None):
    if key not in node:
        if default is None:
            raise _err(f"{path}/{key}", "required value is missing")
        return default
    val = node[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise _err(f"{path}/{key}", f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise _err(f"{path}/{key}", f"must be >= {minimum}, got {val}")
    return int(val)


def _parse_pattern(node, path, base_dir) -> AntennaPattern:
    if not isinstance(node, dict):
        raise _err(path, "expected an object")
    kind = node.get("kind")
    if kind == "isotropic":
        _expect_object(node, path, {"kind", "gain_dbi"})
        return IsotropicPattern(gain_dbi=_number(node, path, "gain_dbi", 0.0))
    if kind == "gaussian_beam":
        _expect_object(node, path, {"kind", "hpbw_az_deg", "hpbw_el_deg", "gain_dbi"})
        return GaussianBeamPattern(
            hpbw_az_deg=_number(node, path, "hpbw_az_deg", exclusive_min=0.0),
            hpbw_el_deg=_number(node, path, "hpbw_el_deg", exclusive_min=0.0),
            gain_dbi=_number(node, path, "gain_dbi", 0.0),
        )
    if kind == "cosine_power":
        _expect_object(node, path, {"kind", "n_az", "n_el", "gain_dbi"})
        return CosinePowerPattern(
            n_az=_number(node, path, "n_az", minimum=0.0),
            n_el=_number(node, path, "n_el", minimum=0.0),
            gain_dbi=_number(node, path, "gain_dbi", 0.0),
        )
    if kind == "tabulated":
        _expect_object(node, path, {"kind", "path", "gain_dbi"})
        rel = node.get("path")
        if not isinstance(rel, str):
            raise _err(f"{path}/path", "expected a file path string")
        full = rel if os.path.isabs(rel) else os.path.join(base_dir, rel)
        return load_tabulated(full, gain_dbi=_number(node, path, "gain_dbi", 0.0))
    raise _err(
        f"{path}/kind",
        f"expected one of isotropic|gaussian_beam|cosine_power|tabulated, got {kind!r}",
    )


def _parse_frequencies(node, path) -> tuple[float, ...]:
    if "list_hz" in node:
        _expect_object(node, path, {"list_hz"})
        vals = node["list_hz"]
        if not isinstance(vals, list) or not vals:
            raise _err(f"{path}/list_hz", "expected a non-empty array of frequencies")
        out = []
        for i, v in enumerate(vals):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                raise _err(f"{path}/list_hz/{i}", f"expected a positive frequency, got {v!r}")
            out.append(float(v))
        return tuple(out)
    _expect_object(node, path, {"start_hz", "stop_hz", "count"})
    start = _number(node, path, "start_hz", 2.400e9, exclusive_min=0.0)
    stop = _number(node, path, "stop_hz", 2.500e9, exclusive_min=0.0)
    count = _integer(node, path, "count", 81, minimum=1)
    if stop < start:
        raise _err(f"{path}/stop_hz", f"stop {stop} is below start {start}")
    if count == 1:
        return ((start + stop) / 2.0,)
    return tuple(float(f) for f in np.linspace(start, stop, count))


def _parse_membership(node, path) -> MembershipRule:
    rule = node.get("rule")
    if rule == "explicit":
        _expect_object(node, path, {"rule", "inside_ids", "outside_ids"})
        def ids(key):
            vals = node.get(key)
            if not isinstance(vals, list):
                raise _err(f"{path}/{key}", "expected an array of position IDs")
            out = set()
            for i, v in enumerate(vals):
                if isinstance(v, bool) or not isinstance(v, int):
                    raise _err(f"{path}/{key}/{i}", f"expected an integer ID, got {v!r}")
                out.add(v)
            return frozenset(out)
        return MembershipRule(kind="explicit", inside_ids=ids("inside_ids"), outside_ids=ids("outside_ids"))
    if rule in ("barycenter", "sheet_overlap"):
        _expect_object(node, path, {"rule", "radius_scale", "margin_m"})
        return MembershipRule(
            kind=rule,
            radius_scale=_number(node, path, "radius_scale", 1.0, exclusive_min=0.0),
            margin_m=_number(node, path, "margin_m", 0.0, minimum=0.0),
        )
    raise _err(f"{path}/rule", f"expected barycenter|sheet_overlap|explicit, got {rule!r}")


_TOP_KEYS = {
    "schema",
    "seed",
    "link",
    "body",
    "grid",
    "antennas",
    "frequencies",
    "jitter",
    "quadrature",
    "noise",
    "membership",
}


def parse_spec(doc: dict, base_dir: str = ".", source_path: str | None = None) -> ExperimentSpec:
    """Validate a parsed JSON document into an ExperimentSpec."""
    _expect_object(doc, "", _TOP_KEYS)
    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        raise _err("/schema", f"expected the mandatory value {SCHEMA_VERSION}, got {schema!r}")
    seed = _integer(doc, "", "seed", 0, minimum=0)

    link = doc.get("link", {})
    _expect_object(link, "/link", {"d_m", "h_m"})
    geom = LinkGeometry(
        d_m=_number(link, "/link", "d_m", 4.0, exclusive_min=0.0),
        h_m=_number(link, "/link", "h_m", 0.99, minimum=0.0),
    )

    body = doc.get("body", {})
    _expect_object(body, "/body", {"height_m", "width_m"})
    sheet = BodySheet(
        height_m=_number(body, "/body", "height_m", 2.0, exclusive_min=0.0),
        width_m=_number(body, "/body", "width_m", 0.55, exclusive_min=0.0),
    )

    grid_node = doc.get("grid", {})
    _expect_object(
        grid_node,
        "/grid",
        {"n_along", "n_across", "spacing_along_m", "spacing_across_m", "origin_x_m"},
    )
    try:
        grid = MeasurementGrid(
            n_along=_integer(grid_node, "/grid", "n_along", 15),
            n_across=_integer(grid_node, "/grid", "n_across", 5),
            spacing_along_m=_number(grid_node, "/grid", "spacing_along_m", 0.25, exclusive_min=0.0),
            spacing_across_m=_number(grid_node, "/grid", "spacing_across_m", 0.30, exclusive_min=0.0),
            origin_x_m=_number(grid_node, "/grid", "origin_x_m", 0.25, exclusive_min=0.0),
        )
    except ValidationError as exc:
        raise _err("/grid", str(exc)) from exc

    antennas = doc.get("antennas", {})
    _expect_object(antennas, "/antennas", {"tx", "rx"})
    tx = (
        _parse_pattern(antennas["tx"], "/antennas/tx", base_dir)
        if "tx" in antennas
        else GaussianBeamPattern(
            DIRECTIONAL_HPBW_AZ_DEG, DIRECTIONAL_HPBW_EL_DEG, DIRECTIONAL_GAIN_DBI
        )
    )
    rx = (
        _parse_pattern(antennas["rx"], "/antennas/rx", base_dir)
        if "rx" in antennas
        else GaussianBeamPattern(
            DIRECTIONAL_HPBW_AZ_DEG, DIRECTIONAL_HPBW_EL_DEG, DIRECTIONAL_GAIN_DBI
        )
    )

    freqs = _parse_frequencies(doc.get("frequencies", {}), "/frequencies")

    jitter_node = doc.get("jitter", {})
    _expect_object(jitter_node, "/jitter", {"delta_m", "n_samples"})
    jitter = JitterSpec(
        delta_m=_number(jitter_node, "/jitter", "delta_m", 0.06, minimum=0.0),
        n_samples=_integer(jitter_node, "/jitter", "n_samples", 150, minimum=1),
        seed=seed,
    )

    quad_node = doc.get("quadrature", {})
    _expect_object(quad_node, "/quadrature", {"mode", "step_m", "max_phase_step_rad", "max_samples"})
    mode = quad_node.get("mode", "auto")
    if mode == "fixed":
        quad = QuadratureSpec(
            step_m=_number(quad_node, "/quadrature", "step_m", exclusive_min=0.0),
            max_samples=_integer(quad_node, "/quadrature", "max_samples", DEFAULT_SAMPLE_BUDGET, minimum=1),
        )
    elif mode == "auto":
        if "step_m" in quad_node:
            raise _err("/quadrature/step_m", "step_m is only valid with mode 'fixed'")
        quad = QuadratureSpec(
            max_phase_step_rad=_number(
                quad_node, "/quadrature", "max_phase_step_rad",
                DEFAULT_MAX_PHASE_STEP_RAD, exclusive_min=0.0,
            ),
            max_samples=_integer(quad_node, "/quadrature", "max_samples", DEFAULT_SAMPLE_BUDGET, minimum=1),
        )
    else:
        raise _err("/quadrature/mode", f"expected auto|fixed, got {mode!r}")

    noise_node = doc.get("noise", {})
    _expect_object(noise_node, "/noise", {"sigma0_db", "delta_h_t_db", "delta_sigma_t_db"})
    noise = NoiseSpec(
        sigma0_db=_number(noise_node, "/noise", "sigma0_db", 0.0, minimum=0.0),
        delta_h_t_db=_number(noise_node, "/noise", "delta_h_t_db", 0.0),
        delta_sigma_t_db=_number(noise_node, "/noise", "delta_sigma_t_db", 0.0, minimum=0.0),
    )

    membership_node = doc.get("membership", {"rule": "barycenter"})
    membership = _parse_membership(membership_node, "/membership")

    config = ScenarioConfig(
        geom=geom,
        sheet=sheet,
        grid=grid,
        tx_pattern=tx,
        rx_pattern=rx,
        freqs_hz=freqs,
        jitter=jitter,
        quad=quad,
        noise=noise,
    )
    digest = hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    return ExperimentSpec(
        config=config,
        membership=membership,
        seed=seed,
        config_sha256=digest,
        source_path=source_path,
    )


def load_spec(path) -> ExperimentSpec:
    """Load and validate a spec file; parse errors carry line/column info."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return parse_spec(doc, base_dir=os.path.dirname(os.path.abspath(path)), source_path=str(path))


def model_patterns(model: str) -> tuple[AntennaPattern, AntennaPattern]:
    """TX/RX pattern presets for the --model override."""
    beam = GaussianBeamPattern(
        DIRECTIONAL_HPBW_AZ_DEG, DIRECTIONAL_HPBW_EL_DEG, DIRECTIONAL_GAIN_DBI
    )
    omni = IsotropicPattern(gain_dbi=OMNI_GAIN_DBI)
    if model == "omni":
        return omni, omni
    if model == "dir":
        return beam, beam
    if model == "mixed":
        return beam, omni
    raise ValidationError(f"unknown model {model!r}; expected omni|dir|mixed")


class RunManifest:
    """Record of a command run: config hash, seed, version, outputs."""

    def __init__(self, command: str, config_sha256: str, seed: int):
        self.command = command
        self.config_sha256 = config_sha256
        self.seed = seed
        self.created_utc = datetime.now(timezone.utc).isoformat()
        self.outputs: list[dict] = []

    def add_output(self, path) -> None:
        with open(path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        self.outputs.append({"path": os.path.basename(str(path)), "sha256": digest})

    def write(self, path) -> None:
        doc = {
            "command": self.command,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "tool_version": TOOL_VERSION,
            "created_utc": self.created_utc,
            "outputs": self.outputs,
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
