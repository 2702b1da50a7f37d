"""Scalar-diffraction field/voltage ratios over an absorbing sheet.

The receive-side ratio is

    1 - j (d/lambda) * sum_S  sqrt(f_t f_r) / (r1 r2)
                              * exp{-j (2 pi/lambda)(r1 + r2 - d)} dS

evaluated by a midpoint rule over the sheet, where r1, r2 are the sample
distances to TX and RX and f_t, f_r the normalized pattern values toward the
sample. Both patterns isotropic reduces this to the bare free-space-referenced
field ratio; a directional TX with isotropic RX is the single-sided variant.

Sample reduction is chunked with a fixed chunk size and the partial sums are
combined in chunk order, so results are bit-identical regardless of the
worker count used to evaluate the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import fresnel as _fresnel_integrals

from .antenna import AntennaPattern, is_isotropic
from .errors import DomainError, ResourceBudgetError
from .geometry import BodySheet, LinkGeometry

SPEED_OF_LIGHT = 299_792_458.0

DEFAULT_ATTENUATION_CAP_DB = 150.0
DEFAULT_MAX_PHASE_STEP_RAD = math.pi / 8
DEFAULT_SAMPLE_BUDGET = 200_000_000
NEAR_FIELD_DIRECTIONAL_M = 0.25
NEAR_FIELD_OMNI_M = 0.15

# Samples per reduction chunk; fixed so the reduction tree never depends on
# the worker count.
_CHUNK = 262_144


def wavelength_m(freq_hz: float) -> float:
    return SPEED_OF_LIGHT / freq_hz


@dataclass(frozen=True)
class QuadratureSpec:
    """Midpoint-rule sampling control.

    step_m set: fixed sample pitch. step_m None: AUTO, the pitch is chosen so
    the path-excess phase changes by at most max_phase_step_rad between
    adjacent samples anywhere on the sheet, and never exceeds lambda/4.
    max_samples bounds the total sample count of a single evaluation.
    """

    step_m: float | None = None
    max_phase_step_rad: float = DEFAULT_MAX_PHASE_STEP_RAD
    max_samples: int = DEFAULT_SAMPLE_BUDGET

    def __post_init__(self):
        if self.step_m is not None and self.step_m <= 0:
            raise DomainError(f"fixed step must be > 0, got {self.step_m}")
        if self.max_phase_step_rad <= 0:
            raise DomainError("max_phase_step_rad must be > 0")

    def resolve_step(
        self, sheet: BodySheet, geom: LinkGeometry, wavelength: float
    ) -> float:
        """Concrete sample pitch for this sheet/geometry/wavelength."""
        if self.step_m is not None:
            return self.step_m
        # The in-plane gradient of r1 + r2 is (rho/r1 + rho/r2) with rho the
        # in-plane distance from the LOS piercing point; it is maximal at the
        # sheet corner farthest from that point.
        d1 = sheet.x_m
        d2 = geom.d_m - sheet.x_m
        g_max = 0.0
        for yc in (sheet.y_m - sheet.width_m / 2, sheet.y_m + sheet.width_m / 2):
            for zc in (0.0, sheet.height_m):
                rho = math.hypot(yc, zc - geom.h_m)
                r1 = math.hypot(d1, rho)
                r2 = math.hypot(d2, rho)
                g_max = max(g_max, rho / r1 + rho / r2)
        cap = wavelength / 4.0
        if g_max <= 0:
            return cap
        k = 2.0 * math.pi / wavelength
        return min(self.max_phase_step_rad / (k * g_max), cap)


@dataclass(frozen=True)
class FieldRatio:
    """Complex receive ratio plus run metadata for one frequency."""

    value: complex
    near_field: bool = False
    n_samples: int = 0
    step_m: float = float("nan")
    cap_db: float = DEFAULT_ATTENUATION_CAP_DB

    @property
    def attenuation_db(self) -> float:
        return attenuation_db(self.value, cap_db=self.cap_db)


@dataclass(frozen=True)
class FieldSweep:
    """field_ratio evaluated over a frequency list on a shared sample grid."""

    freqs_hz: np.ndarray
    values: np.ndarray
    near_field: bool
    n_samples: int
    step_m: float
    cap_db: float = DEFAULT_ATTENUATION_CAP_DB

    @property
    def attenuation_db(self) -> np.ndarray:
        return attenuation_db(self.values, cap_db=self.cap_db)


def attenuation_db(value, cap_db: float = DEFAULT_ATTENUATION_CAP_DB):
    """Extra-attenuation -10 log10 |value|^2 in dB, capped at cap_db."""
    if isinstance(value, FieldRatio):
        return value.attenuation_db
    mag = np.abs(np.asarray(value))
    with np.errstate(divide="ignore"):
        att = np.where(mag > 0.0, -20.0 * np.log10(np.where(mag > 0, mag, 1.0)), np.inf)
    att = np.minimum(att, cap_db)
    if np.isscalar(value) or np.asarray(value).ndim == 0:
        return float(att)
    return att


def _pattern_weight(pattern, along, lateral, vertical):
    """Normalized gain toward sample offsets in a boresight-aligned frame.

    along is the (scalar) boresight distance to the sheet plane, lateral and
    vertical the in-plane offsets from the antenna's LOS piercing point.
    """
    az = np.degrees(np.arctan2(lateral, along))
    el = np.degrees(np.arctan2(vertical, np.hypot(along, lateral)))
    return pattern.gain(az, el)


def _near_field_limit(pattern) -> float:
    return NEAR_FIELD_OMNI_M if is_isotropic(pattern) else NEAR_FIELD_DIRECTIONAL_M


def field_ratio_sweep(
    geom: LinkGeometry,
    sheet: BodySheet,
    freqs_hz,
    tx_pattern: AntennaPattern | None = None,
    rx_pattern: AntennaPattern | None = None,
    quad: QuadratureSpec = QuadratureSpec(),
    workers: int = 1,
    cap_db: float = DEFAULT_ATTENUATION_CAP_DB,
) -> FieldSweep:
    """Receive ratio at every frequency in freqs_hz over one sample grid.

    The sample pitch is resolved once at the shortest wavelength of the sweep
    (the strictest requirement) and shared by all frequencies. For a uniform
    frequency grid the per-sample phasors are advanced between frequencies by
    a constant complex rotation instead of re-evaluating the exponentials.
    """
    freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=float))
    if freqs.size == 0:
        raise DomainError("frequency list is empty")
    if np.any(freqs <= 0):
        raise DomainError("frequencies must be > 0")
    if not 0.0 < sheet.x_m < geom.d_m:
        raise DomainError(
            f"sheet barycenter x={sheet.x_m} must lie strictly between the "
            f"antennas (0, {geom.d_m})"
        )

    lam_min = wavelength_m(float(freqs.max()))
    step = quad.resolve_step(sheet, geom, lam_min)
    n_lat = max(1, math.ceil(sheet.width_m / step))
    n_ver = max(1, math.ceil(sheet.height_m / step))
    n_samples = n_lat * n_ver
    if n_samples > quad.max_samples:
        raise ResourceBudgetError(
            f"step {step:.6g} m yields {n_samples} sheet samples, over the "
            f"budget of {quad.max_samples}"
        )

    du = sheet.width_m / n_lat
    dv = sheet.height_m / n_ver
    lat = sheet.y_m - sheet.width_m / 2.0 + (np.arange(n_lat) + 0.5) * du
    ver = (np.arange(n_ver) + 0.5) * dv
    ds = du * dv

    d = geom.d_m
    h = geom.h_m
    d1 = sheet.x_m
    d2 = d - sheet.x_m
    k_arr = 2.0 * np.pi * freqs / SPEED_OF_LIGHT

    diffs = np.diff(freqs)
    uniform = freqs.size > 1 and np.allclose(diffs, diffs[0], rtol=1e-9, atol=0.0)

    tx_pat = None if is_isotropic(tx_pattern) else tx_pattern
    rx_pat = None if is_isotropic(rx_pattern) else rx_pattern

    # Chunk along the lateral axis in fixed-size slabs of whole columns.
    cols_per_chunk = max(1, _CHUNK // n_ver)
    starts = list(range(0, n_lat, cols_per_chunk))

    def eval_chunk(start: int):
        y = lat[start : start + cols_per_chunk][:, None]
        z = ver[None, :]
        zc = z - h
        rho2 = y * y + zc * zc
        r1 = np.sqrt(d1 * d1 + rho2)
        r2 = np.sqrt(d2 * d2 + rho2)
        amp = ds / (r1 * r2)
        if tx_pat is not None or rx_pat is not None:
            # RX boresight points back toward TX, so its lateral axis is -y.
            ft = _pattern_weight(tx_pat, d1, y, zc) if tx_pat else 1.0
            fr = _pattern_weight(rx_pat, d2, -y, zc) if rx_pat else 1.0
            amp = amp * np.sqrt(ft * fr)
        excess = r1 + r2 - d
        out = np.empty(freqs.size, dtype=complex)
        if uniform:
            cur = amp * np.exp(-1j * k_arr[0] * excess)
            rot = np.exp(-1j * (k_arr[1] - k_arr[0]) * excess) if freqs.size > 1 else None
            for i in range(freqs.size):
                out[i] = cur.sum()
                if rot is not None and i + 1 < freqs.size:
                    cur *= rot
        else:
            for i in range(freqs.size):
                out[i] = (amp * np.exp(-1j * k_arr[i] * excess)).sum()
        return out, float(r1.min()), float(r2.min())

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(eval_chunk, starts))
    else:
        parts = [eval_chunk(s) for s in starts]

    integral = np.sum(np.array([p[0] for p in parts]), axis=0)
    min_r1 = min(p[1] for p in parts)
    min_r2 = min(p[2] for p in parts)
    near = min_r1 < _near_field_limit(tx_pattern) or min_r2 < _near_field_limit(
        rx_pattern
    )

    values = 1.0 - 1j * (d * freqs / SPEED_OF_LIGHT) * integral
    return FieldSweep(
        freqs_hz=freqs,
        values=values,
        near_field=bool(near),
        n_samples=n_samples,
        step_m=step,
        cap_db=cap_db,
    )


def field_ratio(
    geom: LinkGeometry,
    sheet: BodySheet,
    freq_hz: float,
    tx_pattern: AntennaPattern | None = None,
    rx_pattern: AntennaPattern | None = None,
    quad: QuadratureSpec = QuadratureSpec(),
    workers: int = 1,
    cap_db: float = DEFAULT_ATTENUATION_CAP_DB,
) -> FieldRatio:
    """Single-frequency receive ratio; see field_ratio_sweep."""
    sweep = field_ratio_sweep(
        geom, sheet, [freq_hz], tx_pattern, rx_pattern, quad, workers, cap_db
    )
    return FieldRatio(
        value=complex(sweep.values[0]),
        near_field=sweep.near_field,
        n_samples=sweep.n_samples,
        step_m=sweep.step_m,
        cap_db=cap_db,
    )


def knife_edge_oracle(fresnel_v):
    """Attenuation (dB) of an absorbing half-plane at Fresnel parameter v.

    Independent analytic reference: F(v) = (1+j)/2 * [(1/2 - C(v)) -
    j (1/2 - S(v))] with C, S the Fresnel integrals; returns -20 log10 |F|.
    """
    v = np.asarray(fresnel_v, dtype=float)
    s, c = _fresnel_integrals(v)
    f = (1 + 1j) / 2.0 * ((0.5 - c) - 1j * (0.5 - s))
    att = -20.0 * np.log10(np.abs(f))
    if np.isscalar(fresnel_v) or v.ndim == 0:
        return float(att)
    return att


def fresnel_parameter(
    geom: LinkGeometry, x_m: float, clearance_m: float, wavelength: float
) -> float:
    """Fresnel parameter v of an edge at signed clearance above the LOS.

    v = clearance * sqrt(2 d / (lambda d1 d2)); positive clearance means the
    obstacle edge sits above the LOS (deeper obstruction).
    """
    if not 0 < x_m < geom.d_m:
        raise DomainError(f"x_m must lie in (0, {geom.d_m}), got {x_m}")
    d1 = x_m
    d2 = geom.d_m - x_m
    return clearance_m * math.sqrt(2.0 * geom.d_m / (wavelength * d1 * d2))
