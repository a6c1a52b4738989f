"""Context trace data model, file ingestion, and synthetic trace generation.

A trace is an ordered sequence of per-second context observations recorded
along a drive.  Positions are stored in local planar meters, projected from
latitude/longitude with an equirectangular approximation anchored at the
first sample of the trace.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

EARTH_RADIUS_M = 6371000.0

# default column names of a trace file
TRACE_COLUMNS = [
    "timestamp_s", "lat", "lon", "velocity_kmh", "rsrp_dbm", "rsrq_db",
    "sinr_db", "cqi", "ta", "cell_id",
]
OPTIONAL_COLUMNS = ["data_rate_mbits"]


class TraceError(ValueError):
    """Raised when a trace file or trace content violates the data model."""


@dataclass(frozen=True)
class ContextSample:
    """One timestamped observation of network/mobility context."""

    timestamp: float            # seconds since trace start
    position: tuple            # (x, y) planar meters
    velocity: float             # km/h
    rsrp: float                 # dBm
    rsrq: float                 # dB
    sinr: float                 # dB
    cqi: int                    # 0..15
    ta: int                     # timing advance
    cell_id: str
    measured_data_rate: float | None = None   # MBit/s, absent for pure replay


@dataclass(frozen=True)
class SensorPacket:
    generated_at: float     # seconds
    size: int               # bytes


@dataclass(frozen=True)
class Trace:
    samples: tuple
    sample_interval: float = 1.0
    label: str = ""
    anchor: tuple = (51.0, 7.0)     # (lat, lon) used for projection round trips

    def __post_init__(self):
        validate_samples(self.samples)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self):
        return self.samples[-1].timestamp - self.samples[0].timestamp

    def positions(self):
        return np.array([s.position for s in self.samples])

    def measured_rates(self):
        return np.array([s.measured_data_rate for s in self.samples], dtype=float)


def validate_samples(samples):
    if len(samples) == 0:
        raise TraceError("empty trace")
    prev = None
    for i, s in enumerate(samples):
        if s.timestamp < 0:
            raise TraceError(f"negative timestamp at row {i}")
        if prev is not None and s.timestamp <= prev:
            raise TraceError("non-monotonic timestamps")
        if not 0 <= s.cqi <= 15:
            raise TraceError(f"cqi out of range at row {i}: {s.cqi}")
        if s.velocity < 0:
            raise TraceError(f"negative velocity at row {i}")
        prev = s.timestamp


def project(lat, lon, anchor):
    """Equirectangular projection of (lat, lon) degrees to local meters."""
    lat0, lon0 = anchor
    x = math.radians(lon - lon0) * EARTH_RADIUS_M * math.cos(math.radians(lat0))
    y = math.radians(lat - lat0) * EARTH_RADIUS_M
    return (x, y)


def unproject(x, y, anchor):
    lat0, lon0 = anchor
    lon = lon0 + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
    lat = lat0 + math.degrees(y / EARTH_RADIUS_M)
    return (lat, lon)


def load_trace(path, schema=None, sample_interval=1.0, label=""):
    """Load a delimiter-separated trace file into a Trace.

    ``schema`` maps logical column names (see TRACE_COLUMNS) to file column
    names; identity mapping by default.  Rows with unparseable mandatory
    fields reject the whole file.
    """
    schema = schema or {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise TraceError(f"missing trace file: {path}")
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise TraceError(f"empty trace file: {path}")
        colmap = {logical: schema.get(logical, logical)
                  for logical in TRACE_COLUMNS + OPTIONAL_COLUMNS}
        for logical in TRACE_COLUMNS:
            if colmap[logical] not in reader.fieldnames:
                raise TraceError(f"missing column: {colmap[logical]}")
        has_rate = colmap["data_rate_mbits"] in reader.fieldnames
        rows = []
        for i, row in enumerate(reader):
            try:
                rows.append((
                    float(row[colmap["timestamp_s"]]),
                    float(row[colmap["lat"]]),
                    float(row[colmap["lon"]]),
                    float(row[colmap["velocity_kmh"]]),
                    float(row[colmap["rsrp_dbm"]]),
                    float(row[colmap["rsrq_db"]]),
                    float(row[colmap["sinr_db"]]),
                    int(float(row[colmap["cqi"]])),
                    int(float(row[colmap["ta"]])),
                    str(row[colmap["cell_id"]]),
                    float(row[colmap["data_rate_mbits"]])
                    if has_rate and row[colmap["data_rate_mbits"]] not in ("", "nan")
                    else None,
                ))
            except (TypeError, ValueError) as exc:
                raise TraceError(f"unparseable row {i}: {exc}")
    if not rows:
        raise TraceError(f"empty trace: {path}")
    anchor = (rows[0][1], rows[0][2])
    samples = tuple(
        ContextSample(
            timestamp=r[0], position=project(r[1], r[2], anchor),
            velocity=r[3], rsrp=r[4], rsrq=r[5], sinr=r[6],
            cqi=r[7], ta=r[8], cell_id=r[9], measured_data_rate=r[10],
        )
        for r in rows
    )
    return Trace(samples=samples, sample_interval=sample_interval,
                 label=label or str(path), anchor=anchor)


def write_trace(trace, path):
    """Write a Trace back to the delimiter-separated file format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS + OPTIONAL_COLUMNS)
        for s in trace.samples:
            lat, lon = unproject(s.position[0], s.position[1], trace.anchor)
            writer.writerow([
                repr(float(s.timestamp)), repr(float(lat)),
                repr(float(lon)), repr(float(s.velocity)),
                repr(float(s.rsrp)), repr(float(s.rsrq)),
                repr(float(s.sinr)), s.cqi, s.ta, s.cell_id,
                "" if s.measured_data_rate is None
                else repr(float(s.measured_data_rate)),
            ])


def sensor_stream(rate_bytes_per_s, duration):
    """One packet per second; total bytes = rate * floor(duration)."""
    if rate_bytes_per_s <= 0:
        raise ValueError("sensor rate must be positive")
    n = int(math.floor(duration))
    return [SensorPacket(generated_at=float(i), size=int(rate_bytes_per_s))
            for i in range(n)]


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the seeded synthetic trace generator.

    The vehicle drives a straight track at constant speed.  Connectivity
    hotspots are Gaussian SINR bumps planted on the track; the ground-truth
    data rate is a monotone function of SINR/RSRQ plus seeded noise.
    Error zones are regions where the measured rate decorrelates from the
    radio context, planting predictor black spots.
    """

    duration_s: float = 600.0
    sample_interval: float = 1.0
    speed_kmh: float = 72.0
    n_hotspots: int = 6
    hotspot_radius_m: float = 250.0
    hotspot_gain_db: float = 18.0
    valley_sinr_db: float = 1.0
    sinr_noise_std_db: float = 1.5
    rate_scale: float = 3.5             # MBit/s per log2(1 + linear SINR)
    rate_noise_std: float = 0.6         # MBit/s
    n_error_zones: int = 0
    error_zone_radius_m: float = 200.0
    cell_span_m: float = 3000.0
    label: str = "synthetic"


def synthetic_rate(sinr_db, rsrq_db, rate_scale):
    """Documented monotone ground-truth rate model (MBit/s)."""
    shannon = np.log2(1.0 + 10.0 ** (np.asarray(sinr_db) / 10.0))
    load = 1.0 + 0.02 * (np.asarray(rsrq_db) + 10.0)   # mild RSRQ modulation
    return rate_scale * shannon * np.clip(load, 0.5, 1.5)


def generate_synthetic_trace(config, seed):
    """Deterministic synthetic trace for a fixed (config, seed)."""
    if config.duration_s <= 0:
        raise TraceError("non-positive duration")
    rng = np.random.default_rng(seed)
    n = int(config.duration_s / config.sample_interval)
    t = np.arange(n) * config.sample_interval
    speed_ms = config.speed_kmh / 3.6
    x = t * speed_ms
    y = np.zeros(n)
    track_len = x[-1] if n > 1 else 1.0

    hotspot_x = rng.uniform(0.0, track_len, size=config.n_hotspots)
    sinr = np.full(n, config.valley_sinr_db)
    for hx in hotspot_x:
        d = x - hx
        sinr = sinr + config.hotspot_gain_db * np.exp(
            -0.5 * (d / config.hotspot_radius_m) ** 2)
    # AR(1) noise keeps short-term SINR dynamics correlated
    noise = np.zeros(n)
    eps = rng.normal(0.0, config.sinr_noise_std_db, size=n)
    for i in range(1, n):
        noise[i] = 0.8 * noise[i - 1] + eps[i]
    sinr = sinr + noise

    rsrp = -115.0 + 1.2 * sinr + rng.normal(0.0, 1.0, size=n)
    rsrq = -14.0 + 0.25 * sinr + rng.normal(0.0, 0.5, size=n)
    cqi = np.clip(np.rint(1 + (sinr + 10.0) * 14.0 / 40.0), 0, 15).astype(int)
    ta = np.clip(np.rint(2 + rng.normal(0.0, 0.5, size=n)), 0, 63).astype(int)

    rate = synthetic_rate(sinr, rsrq, config.rate_scale)
    rate = rate + rng.normal(0.0, config.rate_noise_std, size=n)

    # error zones: rate decorrelates from the radio context
    zone_x = rng.uniform(0.0, track_len, size=config.n_error_zones)
    for zx in zone_x:
        inside = np.abs(x - zx) <= config.error_zone_radius_m
        rate[inside] = rng.uniform(0.05, 2.0 * config.rate_scale,
                                   size=int(inside.sum()))
    rate = np.maximum(rate, 0.05)

    samples = tuple(
        ContextSample(
            timestamp=float(t[i]), position=(float(x[i]), float(y[i])),
            velocity=config.speed_kmh, rsrp=float(rsrp[i]), rsrq=float(rsrq[i]),
            sinr=float(sinr[i]), cqi=int(cqi[i]), ta=int(ta[i]),
            cell_id=f"cell{int(x[i] // config.cell_span_m)}",
            measured_data_rate=float(rate[i]),
        )
        for i in range(n)
    )
    return Trace(samples=samples, sample_interval=config.sample_interval,
                 label=config.label)
