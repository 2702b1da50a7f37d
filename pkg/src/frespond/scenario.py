"""Experiment orchestration: grid sweeps, jitter Monte Carlo, power model, CSV I/O.

Per grid position, the predictor draws small uniform horizontal offsets of the
body around the marked position, evaluates the diffraction attenuation at
every configured frequency for each offset, and averages the dB attenuations.
Offsets come from a per-position substream keyed by (seed, position id), so
maps are reproducible and independent of scheduling order.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .antenna import AntennaPattern, IsotropicPattern
from .diffraction import (
    DEFAULT_ATTENUATION_CAP_DB,
    QuadratureSpec,
    field_ratio_sweep,
)
from .errors import DomainError, IngestionError, ValidationError
from .geometry import BodySheet, LinkGeometry, MeasurementGrid, default_grid

BAND_PERCENTILES = (20.0, 80.0)  # central 60% of the attenuation samples


def default_frequencies_hz() -> tuple[float, ...]:
    """81 points across 2.400-2.500 GHz (1.25 MHz spacing)."""
    return tuple(float(f) for f in np.linspace(2.400e9, 2.500e9, 81))


@dataclass(frozen=True)
class JitterSpec:
    """Uniform body-position jitter: offsets ~ U(-delta/2, +delta/2)^2."""

    delta_m: float = 0.06
    n_samples: int = 150
    seed: int = 0

    def __post_init__(self):
        if self.delta_m < 0:
            raise ValidationError("jitter delta_m must be >= 0")
        if self.n_samples < 1:
            raise ValidationError("jitter n_samples must be >= 1")


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian disturbance terms of the received-power model (dB)."""

    sigma0_db: float = 0.0
    delta_h_t_db: float = 0.0
    delta_sigma_t_db: float = 0.0

    def __post_init__(self):
        if self.sigma0_db < 0 or self.delta_sigma_t_db < 0:
            raise ValidationError("noise deviations must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    geom: LinkGeometry = LinkGeometry(d_m=4.0, h_m=0.99)
    sheet: BodySheet = BodySheet(height_m=2.0, width_m=0.55)
    grid: MeasurementGrid = field(default_factory=default_grid)
    tx_pattern: AntennaPattern = field(default_factory=IsotropicPattern)
    rx_pattern: AntennaPattern = field(default_factory=IsotropicPattern)
    freqs_hz: tuple[float, ...] = field(default_factory=default_frequencies_hz)
    jitter: JitterSpec = JitterSpec()
    quad: QuadratureSpec = QuadratureSpec()
    noise: NoiseSpec = NoiseSpec()
    cap_db: float = DEFAULT_ATTENUATION_CAP_DB

    def with_patterns(self, tx: AntennaPattern, rx: AntennaPattern) -> "ScenarioConfig":
        return replace(self, tx_pattern=tx, rx_pattern=rx)


class AttenuationMap:
    """Per-position attenuation records plus aggregates.

    per_freq_db[l, k] is the jitter-mean attenuation of position l at
    frequency k (for measured maps, the measured per-frequency attenuation);
    aggregate_db[l] the overall mean; band20/80 the percentile band over the
    underlying samples. samples_db, when retained, is (L, n_jitter, K).
    """

    def __init__(
        self,
        ids,
        xs,
        ys,
        freqs_hz,
        per_freq_db,
        aggregate_db,
        band20_db,
        band80_db,
        samples_db=None,
        near_field=None,
        provenance: dict | None = None,
        kind: str = "predicted",
    ):
        self.ids = np.asarray(ids, dtype=int)
        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self.freqs_hz = np.asarray(freqs_hz, dtype=float)
        self.per_freq_db = np.asarray(per_freq_db, dtype=float)
        self.aggregate_db = np.asarray(aggregate_db, dtype=float)
        self.band20_db = np.asarray(band20_db, dtype=float)
        self.band80_db = np.asarray(band80_db, dtype=float)
        self.samples_db = None if samples_db is None else np.asarray(samples_db)
        self.near_field = (
            np.zeros(self.ids.size, dtype=bool)
            if near_field is None
            else np.asarray(near_field, dtype=bool)
        )
        self.provenance = dict(provenance or {})
        self.kind = kind

    @property
    def size(self) -> int:
        return self.ids.size

    def value_for(self, position_id: int) -> float:
        idx = np.nonzero(self.ids == position_id)[0]
        if idx.size == 0:
            raise KeyError(f"position {position_id} not in map")
        return float(self.aggregate_db[idx[0]])

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": self.kind,
            "provenance": self.provenance,
            "freqs_hz": self.freqs_hz.tolist(),
            "positions": [
                {
                    "id": int(self.ids[i]),
                    "x_m": float(self.xs[i]),
                    "y_m": float(self.ys[i]),
                    "a_s_db": float(self.aggregate_db[i]),
                    "band20_db": float(self.band20_db[i]),
                    "band80_db": float(self.band80_db[i]),
                    "near_field": bool(self.near_field[i]),
                    "per_freq_db": self.per_freq_db[i].tolist(),
                }
                for i in range(self.size)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("position_id,x_m,y_m,a_s_db\n")
            for i in range(self.size):
                fh.write(
                    f"{int(self.ids[i])},{float(self.xs[i])!r},"
                    f"{float(self.ys[i])!r},{float(self.aggregate_db[i])!r}\n"
                )


def config_digest(cfg: ScenarioConfig) -> str:
    """Stable digest of the numerical content of a config."""
    blob = repr(cfg).encode()
    return hashlib.sha256(blob).hexdigest()


def _position_offsets(jitter: JitterSpec, position_id: int) -> np.ndarray:
    """(n_samples, 2) uniform offsets from the per-position substream."""
    rng = np.random.default_rng(np.random.SeedSequence([jitter.seed, int(position_id)]))
    half = jitter.delta_m / 2.0
    return rng.uniform(-half, half, size=(jitter.n_samples, 2))


def predict_position_samples(
    cfg: ScenarioConfig, position_id: int, x_m: float, y_m: float
) -> tuple[np.ndarray, bool]:
    """Per-(jitter, frequency) attenuations (n_p, K) in dB for one position."""
    offsets = _position_offsets(cfg.jitter, position_id)
    samples = np.empty((offsets.shape[0], len(cfg.freqs_hz)))
    near = False
    for j, (dx, dy) in enumerate(offsets):
        sheet = cfg.sheet.at(x_m + dx, y_m + dy)
        try:
            sweep = field_ratio_sweep(
                cfg.geom,
                sheet,
                cfg.freqs_hz,
                cfg.tx_pattern,
                cfg.rx_pattern,
                cfg.quad,
                cap_db=cfg.cap_db,
            )
        except DomainError as exc:
            raise DomainError(
                f"position {position_id}, jitter sample {j}: {exc}"
            ) from exc
        samples[j] = sweep.attenuation_db
        near = near or sweep.near_field
    return samples, near


def predict_map(
    cfg: ScenarioConfig,
    keep_samples: bool = False,
    workers: int = 1,
) -> AttenuationMap:
    """Jitter-averaged attenuation map over the configured grid.

    Deterministic for a fixed config: per-position offsets come from the
    (seed, id) substream and per-position results are assembled by grid
    order, so the worker count does not affect the output.
    """
    ids = cfg.grid.ids
    xs = cfg.grid.xs
    ys = cfg.grid.ys
    for pid, x in zip(ids, xs):
        if not 0.0 < x < cfg.geom.d_m:
            raise ValidationError(
                f"grid position {pid} at x={x} is not strictly between the antennas"
            )

    def task(i):
        return predict_position_samples(cfg, int(ids[i]), float(xs[i]), float(ys[i]))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, range(ids.size)))
    else:
        results = [task(i) for i in range(ids.size)]

    n_p = cfg.jitter.n_samples
    n_f = len(cfg.freqs_hz)
    samples = np.empty((ids.size, n_p, n_f))
    near = np.empty(ids.size, dtype=bool)
    for i, (s, nf) in enumerate(results):
        samples[i] = s
        near[i] = nf

    per_freq = samples.mean(axis=1)
    aggregate = samples.reshape(ids.size, -1).mean(axis=1)
    band20, band80 = np.percentile(
        samples.reshape(ids.size, -1), BAND_PERCENTILES, axis=1
    )
    return AttenuationMap(
        ids=ids,
        xs=xs,
        ys=ys,
        freqs_hz=cfg.freqs_hz,
        per_freq_db=per_freq,
        aggregate_db=aggregate,
        band20_db=band20,
        band80_db=band80,
        samples_db=samples if keep_samples else None,
        near_field=near,
        provenance={
            "config_sha256": config_digest(cfg),
            "seed": cfg.jitter.seed,
            "n_jitter": n_p,
        },
        kind="predicted",
    )


def simulate_received_power(
    cfg: ScenarioConfig,
    p0_dbm: float,
    target_at: tuple[float, float] | None = None,
    n_draws: int = 1,
    seed: int = 0,
    per_frequency: bool = False,
):
    """Draws of the received power (dBm) under the stochastic link model.

    Free space: P0 + w0 with w0 ~ N(0, sigma0^2). With a target at (x, y):
    P0 - A_S + w_T with w_T ~ N(delta_h_t, sigma0^2 + delta_sigma_t^2), where
    A_S is the jitter-averaged attenuation at the configured frequencies'
    mean, or per frequency when per_frequency is set (returns (n_draws, K)).
    """
    if n_draws < 1:
        raise ValidationError("n_draws must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    if target_at is None:
        noise = rng.normal(0.0, cfg.noise.sigma0_db, size=n_draws)
        if per_frequency:
            return p0_dbm + noise[:, None] + np.zeros(len(cfg.freqs_hz))
        return p0_dbm + noise

    x, y = target_at
    samples, _ = predict_position_samples(cfg, 0, float(x), float(y))
    sigma_t = float(np.hypot(cfg.noise.sigma0_db, cfg.noise.delta_sigma_t_db))
    noise = rng.normal(cfg.noise.delta_h_t_db, sigma_t, size=n_draws)
    if per_frequency:
        a_s = samples.mean(axis=0)
        return p0_dbm - a_s[None, :] + noise[:, None]
    a_s = samples.mean()
    return p0_dbm - a_s + noise


def write_synthetic_measurements(
    amap: AttenuationMap, p0_dbm: float, power_csv, freespace_csv
) -> None:
    """Noiseless measurement CSVs realizing this map at a flat P0 (dBm).

    Written files round-trip through ingest_measurements.
    """
    with open(freespace_csv, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("freq_hz,p0_dbm\n")
        for f in amap.freqs_hz:
            fh.write(f"{float(f)!r},{float(p0_dbm)!r}\n")
    with open(power_csv, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("position_id,freq_hz,p_dbm\n")
        for i in range(amap.size):
            for k, f in enumerate(amap.freqs_hz):
                p = p0_dbm - amap.per_freq_db[i, k]
                fh.write(f"{int(amap.ids[i])},{float(f)!r},{float(p)!r}\n")


def _read_csv_rows(path, expected_header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != expected_header:
            raise IngestionError(
                f"{path}: expected header {','.join(expected_header)!r}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(expected_header):
                raise IngestionError(
                    f"{path}:{lineno}: expected {len(expected_header)} columns, "
                    f"got {len(row)}"
                )
            yield lineno, row


def ingest_measurements(power_csv, freespace_csv, grid: MeasurementGrid) -> AttenuationMap:
    """Measured attenuation map from power and free-space reference CSVs.

    Attenuation is P0(f) - P(f, l) in dB over the frequency intersection of
    the two files; the per-position aggregate is the frequency mean and the
    band the 20th/80th percentiles of the per-frequency values.
    """
    p0 = {}
    for lineno, row in _read_csv_rows(freespace_csv, ["freq_hz", "p0_dbm"]):
        try:
            f, p = float(row[0]), float(row[1])
        except ValueError as exc:
            raise IngestionError(f"{freespace_csv}:{lineno}: {exc}") from exc
        if f in p0:
            raise IngestionError(f"{freespace_csv}:{lineno}: duplicate frequency {f}")
        p0[f] = p

    power = {}
    for lineno, row in _read_csv_rows(power_csv, ["position_id", "freq_hz", "p_dbm"]):
        try:
            pid, f, p = int(row[0]), float(row[1]), float(row[2])
        except ValueError as exc:
            raise IngestionError(f"{power_csv}:{lineno}: {exc}") from exc
        key = (pid, f)
        if key in power:
            raise IngestionError(
                f"{power_csv}:{lineno}: duplicate row for position {pid}, frequency {f}"
            )
        power[key] = p

    grid_ids = grid.ids.tolist()
    seen_ids = {pid for pid, _ in power}
    unknown = seen_ids - set(grid_ids)
    if unknown:
        raise IngestionError(
            f"{power_csv}: position IDs not on the grid: {sorted(unknown)}"
        )
    missing = set(grid_ids) - seen_ids
    if missing:
        raise IngestionError(f"{power_csv}: grid positions missing: {sorted(missing)}")

    meas_freqs = {f for _, f in power}
    freqs = sorted(meas_freqs & set(p0))
    if not freqs:
        raise IngestionError(
            "no overlap between measured and free-space frequency grids"
        )
    for pid in grid_ids:
        gaps = [f for f in freqs if (pid, f) not in power]
        if gaps:
            raise IngestionError(
                f"{power_csv}: position {pid} lacks frequencies {gaps[:5]}"
                + ("..." if len(gaps) > 5 else "")
            )

    att = np.array([[p0[f] - power[(pid, f)] for f in freqs] for pid in grid_ids])
    band20, band80 = np.percentile(att, BAND_PERCENTILES, axis=1)
    return AttenuationMap(
        ids=grid.ids,
        xs=grid.xs,
        ys=grid.ys,
        freqs_hz=np.array(freqs),
        per_freq_db=att,
        aggregate_db=att.mean(axis=1),
        band20_db=band20,
        band80_db=band80,
        kind="measured",
    )
