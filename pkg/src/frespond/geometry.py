"""Link-frame geometry: antenna placement, body sheet, Fresnel zone tests, grid.

Canonical frame: x runs along the line of sight from TX toward RX, y is the
lateral (horizontal) offset, z points up from the floor. The LOS sits at
height h, so TX = (0, 0, h) and RX = (d, 0, h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class LinkGeometry:
    """TX/RX placement: horizontal separation d_m, LOS height h_m."""

    d_m: float
    h_m: float

    def __post_init__(self):
        if not self.d_m > 0:
            raise ValidationError(f"link length d_m must be > 0, got {self.d_m}")
        if self.h_m < 0:
            raise ValidationError(f"LOS height h_m must be >= 0, got {self.h_m}")

    @property
    def tx_pos(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.h_m])

    @property
    def rx_pos(self) -> np.ndarray:
        return np.array([self.d_m, 0.0, self.h_m])


@dataclass(frozen=True)
class BodySheet:
    """Absorbing rectangle standing on the floor, plane orthogonal to the LOS.

    The sheet spans z in [0, height_m] and lateral in [y_m - width_m/2,
    y_m + width_m/2]; (x_m, y_m) is the horizontal projection of the
    barycenter, measured from TX.
    """

    height_m: float
    width_m: float
    x_m: float = 0.0
    y_m: float = 0.0

    def __post_init__(self):
        if not self.height_m > 0:
            raise ValidationError(f"sheet height_m must be > 0, got {self.height_m}")
        if not self.width_m > 0:
            raise ValidationError(f"sheet width_m must be > 0, got {self.width_m}")

    def at(self, x_m: float, y_m: float) -> "BodySheet":
        """Same sheet moved so its barycenter projects to (x_m, y_m)."""
        return BodySheet(self.height_m, self.width_m, x_m, y_m)


def fresnel_radius(geom: LinkGeometry, x_m: float, wavelength_m: float) -> float:
    """First-Fresnel-zone radius at abscissa x_m along the link.

    r = sqrt(lambda * d1 * d2 / d) with d1 = x, d2 = d - x.
    """
    if not 0 < x_m < geom.d_m:
        raise DomainError(
            f"x_m must lie strictly between the antennas (0, {geom.d_m}), got {x_m}"
        )
    if not wavelength_m > 0:
        raise DomainError(f"wavelength_m must be > 0, got {wavelength_m}")
    d1 = x_m
    d2 = geom.d_m - x_m
    return math.sqrt(wavelength_m * d1 * d2 / geom.d_m)


@dataclass(frozen=True)
class MeasurementGrid:
    """Rectangular grid of marked target positions around the LOS.

    IDs run 1..n_along*n_across in column-major order: the first n_across IDs
    form the column closest to TX, lateral index increasing with the ID.
    Lateral offsets are centered on the LOS.
    """

    n_along: int = 15
    n_across: int = 5
    spacing_along_m: float = 0.25
    spacing_across_m: float = 0.30
    origin_x_m: float = 0.25
    explicit_positions: tuple[tuple[int, float, float], ...] | None = None

    def __post_init__(self):
        if self.explicit_positions is not None:
            ids = [p[0] for p in self.explicit_positions]
            if len(ids) != len(set(ids)):
                raise ValidationError("explicit grid positions carry duplicate IDs")
            if not ids:
                raise ValidationError("explicit grid has no positions")
            return
        if self.n_along < 1 or self.n_across < 1:
            raise ValidationError(
                f"grid must be non-empty, got {self.n_along} x {self.n_across}"
            )
        if self.spacing_along_m <= 0 or self.spacing_across_m <= 0:
            raise ValidationError("grid spacings must be > 0")

    @classmethod
    def from_positions(cls, positions) -> "MeasurementGrid":
        """Grid from explicit (id, x_m, y_m) triples (e.g. hand-placed points)."""
        pos = tuple((int(i), float(x), float(y)) for i, x, y in positions)
        return cls(explicit_positions=pos)

    @property
    def size(self) -> int:
        if self.explicit_positions is not None:
            return len(self.explicit_positions)
        return self.n_along * self.n_across

    @property
    def ids(self) -> np.ndarray:
        if self.explicit_positions is not None:
            return np.array([p[0] for p in self.explicit_positions], dtype=int)
        return np.arange(1, self.size + 1)

    @property
    def xs(self) -> np.ndarray:
        if self.explicit_positions is not None:
            return np.array([p[1] for p in self.explicit_positions])
        cols = np.repeat(np.arange(self.n_along), self.n_across)
        return self.origin_x_m + cols * self.spacing_along_m

    @property
    def ys(self) -> np.ndarray:
        if self.explicit_positions is not None:
            return np.array([p[2] for p in self.explicit_positions])
        rows = np.tile(np.arange(self.n_across), self.n_along)
        return (rows - (self.n_across - 1) / 2.0) * self.spacing_across_m

    def positions(self):
        """Ordered (id, x_m, y_m) triples."""
        return list(zip(self.ids.tolist(), self.xs.tolist(), self.ys.tolist()))


@dataclass(frozen=True)
class MembershipSplit:
    """Partition of grid IDs into inside (F1), outside (F0) and excluded sets."""

    inside_ids: frozenset[int]
    outside_ids: frozenset[int]
    excluded_ids: frozenset[int] = frozenset()

    def __post_init__(self):
        overlap = (
            (self.inside_ids & self.outside_ids)
            | (self.inside_ids & self.excluded_ids)
            | (self.outside_ids & self.excluded_ids)
        )
        if overlap:
            raise ValidationError(f"membership sets overlap on IDs {sorted(overlap)}")

    @property
    def counts(self) -> tuple[int, int, int]:
        return (len(self.inside_ids), len(self.outside_ids), len(self.excluded_ids))


@dataclass(frozen=True)
class MembershipRule:
    """Rule assigning grid positions to the inside/outside hypothesis sets.

    kind "barycenter": inside iff |y| < radius_scale * r(x); outside iff
        |y| > radius_scale * r(x) + margin_m; the band between is excluded.
        radius_scale=1, margin_m=0 is the plain barycenter-in-ellipsoid test.
    kind "sheet_overlap": same comparisons applied to |y| - W/2 (the sheet
        edge nearest the LOS) instead of |y|; needs the body width.
    kind "explicit": membership read verbatim from the supplied ID lists.
    """

    kind: str = "barycenter"
    radius_scale: float = 1.0
    margin_m: float = 0.0
    inside_ids: frozenset[int] = frozenset()
    outside_ids: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.kind not in ("barycenter", "sheet_overlap", "explicit"):
            raise ValidationError(f"unknown membership rule kind {self.kind!r}")
        if self.radius_scale <= 0:
            raise ValidationError("radius_scale must be > 0")
        if self.margin_m < 0:
            raise ValidationError("margin_m must be >= 0")


def classify_positions(
    grid: MeasurementGrid,
    geom: LinkGeometry,
    wavelength_m: float,
    rule: MembershipRule,
    body: BodySheet | None = None,
) -> MembershipSplit:
    """Split grid positions into F1 (inside), F0 (outside) and excluded sets."""
    ids = grid.ids
    if ids.size == 0:
        raise ValidationError("cannot classify an empty grid")

    if rule.kind == "explicit":
        known = set(ids.tolist())
        unknown = (set(rule.inside_ids) | set(rule.outside_ids)) - known
        if unknown:
            raise ValidationError(
                f"explicit membership names IDs not on the grid: {sorted(unknown)}"
            )
        inside = frozenset(rule.inside_ids)
        outside = frozenset(rule.outside_ids)
        excluded = frozenset(known - inside - outside)
        return MembershipSplit(inside, outside, excluded)

    if rule.kind == "sheet_overlap" and body is None:
        raise ValidationError("sheet_overlap rule needs the body sheet for its width")

    inside, outside, excluded = set(), set(), set()
    half_width = body.width_m / 2.0 if rule.kind == "sheet_overlap" else 0.0
    for pid, x, y in grid.positions():
        r = rule.radius_scale * fresnel_radius(geom, x, wavelength_m)
        clearance = abs(y) - half_width
        if clearance < r:
            inside.add(pid)
        elif clearance > r + rule.margin_m:
            outside.add(pid)
        else:
            excluded.add(pid)
    return MembershipSplit(frozenset(inside), frozenset(outside), frozenset(excluded))


def sheet_sample_points(sheet: BodySheet, step_m: float):
    """Midpoint-rule sample centers tiling the sheet exactly.

    Returns (points, ds): points is an (N, 3) array of sample centers in the
    canonical frame, ds the (N,) element areas; ds.sum() == H*W up to rounding.
    The lateral/vertical counts are ceil(extent/step) so the requested step is
    never exceeded.
    """
    if not step_m > 0:
        raise DomainError(f"quadrature step must be > 0, got {step_m}")
    n_lat = max(1, math.ceil(sheet.width_m / step_m))
    n_ver = max(1, math.ceil(sheet.height_m / step_m))
    du = sheet.width_m / n_lat
    dv = sheet.height_m / n_ver
    lat = sheet.y_m - sheet.width_m / 2.0 + (np.arange(n_lat) + 0.5) * du
    ver = (np.arange(n_ver) + 0.5) * dv
    yy, zz = np.meshgrid(lat, ver, indexing="ij")
    points = np.column_stack(
        [np.full(yy.size, sheet.x_m), yy.ravel(), zz.ravel()]
    )
    ds = np.full(points.shape[0], du * dv)
    return points, ds


def default_grid() -> MeasurementGrid:
    """The 15 x 5 grid: 0.25 m along, 0.30 m across, first column at 0.25 m."""
    return MeasurementGrid()
