"""Post-run KPI computation: data rate, AoI, PRB occupancy, energy.

PRB occupancy reverses the CQI -> MCS -> TBS lookup chain: from the CQI at
send time the transport block bits per PRB and TTI are known, and the
smallest PRB count sustaining the achieved rate is charged for every 1 ms
TTI of the transmission.  The power model is an explicitly parametric
stand-in (configuration, not measured truth): a monotone RSRP -> TX-power
stage followed by a piecewise-linear TX-power -> device-power stage.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

TTI_S = 0.001   # LTE transmission time interval


@dataclass(frozen=True)
class TransmissionRecord:
    send_time: float                    # s
    duration: float                     # s
    payload: int                        # bytes
    achieved_rate: float                # MBit/s
    oldest_packet_generated_at: float   # s
    cqi_at_send: int
    rsrp_at_send: float                 # dBm
    s_tilde: float = 0.0                # predicted rate at send, MBit/s

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        expect = self.payload * 8.0 / self.duration / 1e6
        if abs(expect - self.achieved_rate) > 1e-9 * max(1.0, expect):
            raise ValueError("achieved_rate inconsistent with payload/duration")


def aoi(record):
    """Age of the oldest sensor packet at delivery, seconds."""
    if record.oldest_packet_generated_at > record.send_time:
        raise ValueError("oldest packet generated after send time")
    return record.send_time - record.oldest_packet_generated_at


class PrbTables:
    """Embedded CQI/MCS/TBS lookup tables, loadable from an audit file."""

    def __init__(self, cqi_to_mcs, mcs_to_itbs, itbs_bits_per_prb,
                 max_n_prb=110):
        self.cqi_to_mcs = list(cqi_to_mcs)
        self.mcs_to_itbs = list(mcs_to_itbs)
        self.itbs_bits_per_prb = list(itbs_bits_per_prb)
        self.max_n_prb = max_n_prb
        if any(v <= 0 for v in self.itbs_bits_per_prb):
            raise ValueError("TBS base entries must be positive")

    @classmethod
    def parse(cls, text):
        lines = [ln for ln in text.splitlines()
                 if ln.strip() and not ln.startswith("#")]
        if lines[0].strip() != "opptrans-lte-tables v1":
            raise ValueError("unknown LTE table file header")
        fields = {}
        for ln in lines[1:]:
            parts = ln.split()
            fields[parts[0]] = [int(v) for v in parts[1:]]
        return cls(cqi_to_mcs=fields["cqi_to_mcs"],
                   mcs_to_itbs=fields["mcs_to_itbs"],
                   itbs_bits_per_prb=fields["itbs_bits_per_prb"],
                   max_n_prb=fields["max_n_prb"][0])

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    @classmethod
    def default(cls):
        return cls.parse(embedded_table_text())

    def tbs(self, itbs, n_prb):
        """Transport block bits for (TBS index, PRB count)."""
        if not 1 <= n_prb <= self.max_n_prb:
            raise ValueError("n_prb out of range")
        return self.itbs_bits_per_prb[itbs] * n_prb


def embedded_table_text():
    return resources.files("opptrans.data").joinpath(
        "lte_tables.txt").read_text(encoding="utf-8")


def embedded_table_checksum():
    return hashlib.sha256(embedded_table_text().encode()).hexdigest()


def estimate_prbs(record, tables):
    """Total PRBs occupied by a transmission, or None for flagged records.

    CQI 0 marks an out-of-range channel; such records are flagged (None).
    """
    cqi = record.cqi_at_send
    if not 0 <= cqi <= 15:
        raise ValueError("cqi out of range")
    if cqi == 0:
        return None
    mcs = tables.cqi_to_mcs[cqi]
    itbs = tables.mcs_to_itbs[mcs]
    bits_per_tti = record.achieved_rate * 1e6 / 1000.0
    bits_per_prb = tables.itbs_bits_per_prb[itbs]
    n_prb = max(1, math.ceil(bits_per_tti / bits_per_prb))
    n_prb = min(n_prb, tables.max_n_prb)
    return n_prb * record.duration * 1000.0


def prbs_per_megabyte(records, tables):
    """Total PRBs per transmitted megabyte over non-flagged records."""
    total_prbs = 0.0
    total_bytes = 0
    for rec in records:
        prbs = estimate_prbs(rec, tables)
        if prbs is None:
            continue
        total_prbs += prbs
        total_bytes += rec.payload
    if total_bytes == 0:
        raise ValueError("no usable records (all flagged or empty payload)")
    return total_prbs / (total_bytes / 1e6)


@dataclass(frozen=True)
class PowerModelParams:
    """Two monotone stages; values are placeholders treated as configuration."""

    tx_power_min_dbm: float = -10.0
    tx_power_max_dbm: float = 23.0
    tx_power_offset_dbm: float = -40.0  # tx = clamp(offset - rsrp, min, max)
    # (tx power dBm, device power W) breakpoints, monotone non-decreasing
    breakpoints: tuple = ((-10.0, 0.8), (10.0, 1.4), (23.0, 3.2))

    def tx_power(self, rsrp_dbm):
        return min(max(self.tx_power_offset_dbm - rsrp_dbm,
                       self.tx_power_min_dbm), self.tx_power_max_dbm)

    def device_power(self, tx_power_dbm):
        xs = [p for p, _ in self.breakpoints]
        ys = [w for _, w in self.breakpoints]
        return float(np.interp(tx_power_dbm, xs, ys))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("opptrans-power v1\n")
            fh.write(f"tx_power_min_dbm {self.tx_power_min_dbm!r}\n")
            fh.write(f"tx_power_max_dbm {self.tx_power_max_dbm!r}\n")
            fh.write(f"tx_power_offset_dbm {self.tx_power_offset_dbm!r}\n")
            for p, w in self.breakpoints:
                fh.write(f"breakpoint {p!r} {w!r}\n")

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            if fh.readline().strip() != "opptrans-power v1":
                raise ValueError("unknown power model file header")
            kv = {}
            bps = []
            for ln in fh:
                parts = ln.split()
                if parts[0] == "breakpoint":
                    bps.append((float(parts[1]), float(parts[2])))
                else:
                    kv[parts[0]] = float(parts[1])
        return cls(tx_power_min_dbm=kv["tx_power_min_dbm"],
                   tx_power_max_dbm=kv["tx_power_max_dbm"],
                   tx_power_offset_dbm=kv["tx_power_offset_dbm"],
                   breakpoints=tuple(bps))


def transmission_energy(record, params):
    """Joules spent transmitting one record."""
    return params.device_power(params.tx_power(record.rsrp_at_send)) \
        * record.duration


QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def summarize_run(records, config, tables=None, params=None):
    """Run-level KPI report: means, quantiles, efficiencies."""
    from .schemes import efficiency_indicators
    if not records:
        raise ValueError("empty run log")
    tables = tables or PrbTables.default()
    params = params or PowerModelParams()
    rates = np.array([r.achieved_rate for r in records])
    aois = np.array([aoi(r) for r in records])
    energy = np.array([transmission_energy(r, params) for r in records])
    e_s, e_aoi = efficiency_indicators(float(rates.mean()),
                                       float(aois.mean()), config)
    report = {
        "n_transmissions": len(records),
        "mean_rate_mbits": float(rates.mean()),
        "mean_aoi_s": float(aois.mean()),
        "prbs_per_mb": prbs_per_megabyte(records, tables),
        "total_energy_j": float(energy.sum()),
        "mean_energy_j": float(energy.mean()),
        "rate_efficiency": e_s,
        "aoi_efficiency": e_aoi,
    }
    for q in QUANTILES:
        report[f"rate_q{int(q * 100):02d}"] = float(np.quantile(rates, q))
        report[f"aoi_q{int(q * 100):02d}"] = float(np.quantile(aois, q))
    return report


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(report):
            fh.write(f"{key} {report[key]!r}\n")
