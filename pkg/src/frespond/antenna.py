"""Normalized antenna radiation patterns and boresight-frame angles.

Patterns return the normalized gain f in [0, 1] with f = 1 on boresight.
Angles are azimuth/elevation relative to the boresight: azimuth is the
horizontal angle off boresight, elevation the angle above the horizontal
plane. Absolute gain (gain_dbi) is carried for reporting only; it cancels
in every field/voltage ratio this package computes.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PatternLoadError

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class Direction:
    """Azimuth/elevation pair in degrees, az in [-180, 180], el in [-90, 90]."""

    azimuth_deg: float
    elevation_deg: float

    def __post_init__(self):
        if not -180.0 <= self.azimuth_deg <= 180.0:
            raise DomainError(f"azimuth out of range: {self.azimuth_deg}")
        if not -90.0 <= self.elevation_deg <= 90.0:
            raise DomainError(f"elevation out of range: {self.elevation_deg}")


@dataclass(frozen=True)
class IsotropicPattern:
    """Unit gain in every direction (reference monopole approximation)."""

    gain_dbi: float = 0.0

    def gain(self, az_deg, el_deg):
        az = np.asarray(az_deg, dtype=float)
        el = np.asarray(el_deg, dtype=float)
        return np.ones(np.broadcast(az, el).shape)


@dataclass(frozen=True)
class GaussianBeamPattern:
    """Separable angular Gaussian pencil beam pinned to both half-power widths.

    f(az, el) = exp(-ln 2 * [(2 az / hpbw_az)^2 + (2 el / hpbw_el)^2]),
    so f equals exactly 0.5 at half the beamwidth on each principal cut.
    """

    hpbw_az_deg: float
    hpbw_el_deg: float
    gain_dbi: float = 0.0

    def __post_init__(self):
        if self.hpbw_az_deg <= 0 or self.hpbw_el_deg <= 0:
            raise DomainError("half-power beamwidths must be > 0")

    def gain(self, az_deg, el_deg):
        az = np.asarray(az_deg, dtype=float)
        el = np.asarray(el_deg, dtype=float)
        ua = 2.0 * az / self.hpbw_az_deg
        ue = 2.0 * el / self.hpbw_el_deg
        return np.exp(-_LN2 * (ua * ua + ue * ue))


@dataclass(frozen=True)
class CosinePowerPattern:
    """cos^n taper per axis, clipped to the forward hemisphere."""

    n_az: float
    n_el: float
    gain_dbi: float = 0.0

    def __post_init__(self):
        if self.n_az < 0 or self.n_el < 0:
            raise DomainError("cosine exponents must be >= 0")

    def gain(self, az_deg, el_deg):
        az = np.radians(np.asarray(az_deg, dtype=float))
        el = np.radians(np.asarray(el_deg, dtype=float))
        ca = np.clip(np.cos(az), 0.0, None)
        ce = np.clip(np.cos(el), 0.0, None)
        return ca**self.n_az * ce**self.n_el


class TabulatedPattern:
    """Bilinear interpolation over a rectangular az x el grid of gain values.

    Values are renormalized so the peak is exactly 1; queries outside the
    tabulated range clamp to the nearest edge.
    """

    def __init__(self, az_deg, el_deg, values, gain_dbi: float = 0.0):
        az = np.asarray(az_deg, dtype=float)
        el = np.asarray(el_deg, dtype=float)
        vals = np.asarray(values, dtype=float)
        if az.ndim != 1 or el.ndim != 1 or vals.shape != (az.size, el.size):
            raise PatternLoadError(
                f"values must be shaped (n_az, n_el) = ({az.size}, {el.size}), "
                f"got {vals.shape}"
            )
        if np.any(np.diff(az) <= 0) or np.any(np.diff(el) <= 0):
            raise PatternLoadError("az/el grid nodes must be strictly increasing")
        if np.any(~np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            raise PatternLoadError(
                f"non-finite pattern value at az index {bad[0]}, el index {bad[1]}"
            )
        if np.any(vals < 0):
            bad = np.argwhere(vals < 0)[0]
            raise PatternLoadError(
                f"negative pattern value at az index {bad[0]}, el index {bad[1]}"
            )
        if not (az.min() <= 0.0 <= az.max() and el.min() <= 0.0 <= el.max()):
            raise PatternLoadError(
                "tabulated grid does not cover the boresight (az=0, el=0): "
                f"az range [{az.min()}, {az.max()}], el range [{el.min()}, {el.max()}]"
            )
        peak = vals.max()
        if peak <= 0:
            raise PatternLoadError("pattern is identically zero")
        self.az_deg = az
        self.el_deg = el
        self.values = np.clip(vals / peak, 0.0, 1.0)
        self.gain_dbi = gain_dbi

    def gain(self, az_deg, el_deg):
        az = np.clip(np.asarray(az_deg, dtype=float), self.az_deg[0], self.az_deg[-1])
        el = np.clip(np.asarray(el_deg, dtype=float), self.el_deg[0], self.el_deg[-1])
        az, el = np.broadcast_arrays(az, el)
        return _bilinear(self.az_deg, self.el_deg, self.values, az, el)

    def __repr__(self):
        digest = hashlib.sha256(
            self.az_deg.tobytes() + self.el_deg.tobytes() + self.values.tobytes()
        ).hexdigest()[:16]
        return (
            f"TabulatedPattern(n_az={self.az_deg.size}, n_el={self.el_deg.size}, "
            f"gain_dbi={self.gain_dbi}, sha256={digest})"
        )


AntennaPattern = IsotropicPattern | GaussianBeamPattern | CosinePowerPattern | TabulatedPattern


def is_isotropic(pattern: AntennaPattern | None) -> bool:
    return pattern is None or isinstance(pattern, IsotropicPattern)


def _bilinear(xg, yg, table, x, y):
    """Bilinear lookup on a rectangular grid; inputs pre-clamped to range."""
    ix = np.clip(np.searchsorted(xg, x, side="right") - 1, 0, max(xg.size - 2, 0))
    iy = np.clip(np.searchsorted(yg, y, side="right") - 1, 0, max(yg.size - 2, 0))
    if xg.size == 1:
        tx = np.zeros_like(np.asarray(x, dtype=float))
        ix1 = ix
    else:
        ix1 = ix + 1
        tx = (x - xg[ix]) / (xg[ix1] - xg[ix])
    if yg.size == 1:
        ty = np.zeros_like(np.asarray(y, dtype=float))
        iy1 = iy
    else:
        iy1 = iy + 1
        ty = (y - yg[iy]) / (yg[iy1] - yg[iy])
    v00 = table[ix, iy]
    v10 = table[ix1, iy]
    v01 = table[ix, iy1]
    v11 = table[ix1, iy1]
    return (
        v00 * (1 - tx) * (1 - ty)
        + v10 * tx * (1 - ty)
        + v01 * (1 - tx) * ty
        + v11 * tx * ty
    )


def _boresight_frame(boresight) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    b = np.asarray(boresight, dtype=float)
    norm = np.linalg.norm(b)
    if norm == 0:
        raise DomainError("boresight vector must be non-zero")
    b = b / norm
    up_world = np.array([0.0, 0.0, 1.0])
    right = np.cross(up_world, b)
    rnorm = np.linalg.norm(right)
    if rnorm < 1e-12:
        raise DomainError("boresight must not be vertical")
    right /= rnorm
    up = np.cross(b, right)
    return b, right, up


def directions_to(antenna_pos, boresight, targets):
    """Vectorized az/el (degrees) of rays antenna -> targets, targets (N, 3)."""
    b, right, up = _boresight_frame(boresight)
    rel = np.asarray(targets, dtype=float) - np.asarray(antenna_pos, dtype=float)
    xb = rel @ b
    yb = rel @ right
    zb = rel @ up
    az = np.degrees(np.arctan2(yb, xb))
    el = np.degrees(np.arctan2(zb, np.hypot(xb, yb)))
    return az, el


def direction_to(antenna_pos, boresight, target) -> Direction:
    """Azimuth/elevation of the ray antenna -> target in the boresight frame."""
    rel = np.asarray(target, dtype=float) - np.asarray(antenna_pos, dtype=float)
    if np.linalg.norm(rel) == 0:
        raise DomainError("target coincides with the antenna position")
    az, el = directions_to(antenna_pos, boresight, np.asarray(target, dtype=float)[None, :])
    return Direction(float(az[0]), float(el[0]))


def normalized_gain(pattern: AntennaPattern, direction: Direction) -> float:
    """Normalized pattern value f in [0, 1] for a single direction."""
    return float(pattern.gain(direction.azimuth_deg, direction.elevation_deg))


def load_tabulated(path, gain_dbi: float = 0.0) -> TabulatedPattern:
    """Load a tabulated pattern from CSV with header az_deg,el_deg,f.

    Rows must form a complete rectangular az x el grid (any row order).
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["az_deg", "el_deg", "f"]:
            raise PatternLoadError(
                f"{path}: expected header 'az_deg,el_deg,f', got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise PatternLoadError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1]), float(row[2])))
            except ValueError as exc:
                raise PatternLoadError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise PatternLoadError(f"{path}: no data rows")

    az_nodes = sorted({r[0] for r in rows})
    el_nodes = sorted({r[1] for r in rows})
    if len(rows) != len(az_nodes) * len(el_nodes):
        raise PatternLoadError(
            f"{path}: {len(rows)} rows do not fill a rectangular "
            f"{len(az_nodes)} x {len(el_nodes)} az x el grid"
        )
    table = np.full((len(az_nodes), len(el_nodes)), np.nan)
    ai = {v: i for i, v in enumerate(az_nodes)}
    ei = {v: i for i, v in enumerate(el_nodes)}
    for az, el, val in rows:
        if not np.isnan(table[ai[az], ei[el]]):
            raise PatternLoadError(f"{path}: duplicate grid node az={az}, el={el}")
        table[ai[az], ei[el]] = val
    return TabulatedPattern(np.array(az_nodes), np.array(el_nodes), table, gain_dbi)
