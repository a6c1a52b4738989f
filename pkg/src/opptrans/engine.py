"""Trace replay engine: virtual test drives over empirical context traces.

Each second the vehicle generates a sensor packet, the predictor estimates
the achievable rate for the current buffer payload, and the scheme agent
decides IDLE vs TX.  Executed transmissions draw a virtual ground truth
rate from the residual model's posterior; the transmission then occupies
subsequent decision slots for its duration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bandit import TX
from .features import feature_matrix
from .kpi import TransmissionRecord, aoi, estimate_prbs, \
    transmission_energy, PrbTables, PowerModelParams
from .residual import sample_virtual_ground_truth
from .schemes import DecisionContext
from .trace import SensorPacket

MIN_VIRTUAL_RATE = 0.05     # MBit/s floor; keeps durations finite
SENSOR_RATE_BYTES = 50000   # sensor payload per second


@dataclass(frozen=True)
class EpochResult:
    epoch: int
    mean_rate: float        # MBit/s
    mean_aoi: float         # s
    n_transmissions: int
    total_prbs: float
    total_energy: float     # J


class PredictionCache:
    """Per-trace matrix of predictions over buffered-packet counts.

    Buffer payload is always a multiple of the per-second sensor packet
    size, so predictions can be batch-computed once per (trace, predictor)
    and looked up during replay.
    """

    def __init__(self, predictor, encoder, trace, max_packets,
                 packet_bytes=SENSOR_RATE_BYTES):
        self.max_packets = max_packets
        self.packet_bytes = packet_bytes
        n = len(trace.samples)
        rows = []
        for k in range(1, max_packets + 1):
            rows.append(feature_matrix(trace.samples, k * packet_bytes,
                                       encoder))
        X = np.vstack(rows)
        self.table = predictor.predict(X).reshape(max_packets, n)
        self._predictor = predictor
        self._encoder = encoder
        self._trace = trace

    def predict(self, sample_index, n_packets):
        if n_packets <= self.max_packets:
            return float(self.table[n_packets - 1, sample_index])
        x = feature_matrix([self._trace.samples[sample_index]],
                           n_packets * self.packet_bytes, self._encoder)
        return float(self._predictor.predict(x)[0])


def run_epoch(trace, agent, predictor, encoder, residual_model, config,
              rng, epoch_index=0, sensor_rate=SENSOR_RATE_BYTES,
              tables=None, power_params=None, prediction_cache=None):
    """One virtual test drive.  Returns (EpochResult, list of records)."""
    tables = tables or PrbTables.default()
    power_params = power_params or PowerModelParams()
    cache = prediction_cache or PredictionCache(
        predictor, encoder, trace,
        max_packets=int(config.delta_t_max / trace.sample_interval) + 16,
        packet_bytes=sensor_rate)

    buffer = []
    buffer_bytes = 0
    records = []
    in_flight_until = -float("inf")
    agent.start_epoch(trace.samples[0].timestamp)

    def execute_tx(sample, send_time):
        nonlocal buffer, buffer_bytes
        s_tilde = cache.predict(sample_idx, len(buffer))
        s_hat = sample_virtual_ground_truth(residual_model, s_tilde, rng)
        s_hat = max(s_hat, MIN_VIRTUAL_RATE)
        duration = buffer_bytes * 8.0 / (s_hat * 1e6)
        rec = TransmissionRecord(
            send_time=send_time, duration=duration, payload=buffer_bytes,
            achieved_rate=buffer_bytes * 8.0 / duration / 1e6,
            oldest_packet_generated_at=buffer[0].generated_at,
            cqi_at_send=sample.cqi, rsrp_at_send=sample.rsrp,
            s_tilde=s_tilde)
        records.append(rec)
        buffer = []
        buffer_bytes = 0
        return rec, duration

    for sample_idx, sample in enumerate(trace.samples):
        t = sample.timestamp
        buffer.append(SensorPacket(generated_at=t, size=sensor_rate))
        buffer_bytes += sensor_rate
        if t < in_flight_until:
            continue    # transmission in flight; generation continues
        delta_t = t - buffer[0].generated_at
        s_tilde = cache.predict(sample_idx, len(buffer))
        obs = DecisionContext(now=t, delta_t=delta_t,
                              buffer_bytes=buffer_bytes, s_tilde=s_tilde,
                              sinr=sample.sinr, position=sample.position)
        action = agent.decide(obs, rng)
        if delta_t >= config.delta_t_max:
            # deadline forcing is an engine guarantee: data is sent when the
            # buffering deadline expires no matter what the agent decides
            action = TX
        if action == TX:
            rec, duration = execute_tx(sample, t)
            agent.learn(obs, TX, rec.achieved_rate)
            in_flight_until = t + duration
        else:
            agent.learn(obs, action, None)

    if buffer:
        # flush the residual buffer as a forced transmission at trace end;
        # an epoch-boundary artifact, so the agent does not learn from it
        sample_idx = len(trace.samples) - 1
        last = trace.samples[-1]
        execute_tx(last, max(last.timestamp, in_flight_until))

    rates = np.array([r.achieved_rate for r in records])
    aois = np.array([aoi(r) for r in records])
    prbs = [estimate_prbs(r, tables) for r in records]
    energy = sum(transmission_energy(r, power_params) for r in records)
    result = EpochResult(
        epoch=epoch_index,
        mean_rate=float(rates.mean()) if len(records) else 0.0,
        mean_aoi=float(aois.mean()) if len(records) else 0.0,
        n_transmissions=len(records),
        total_prbs=float(sum(p for p in prbs if p is not None)),
        total_energy=float(energy))
    return result, records


def train_epochs(traces, agent, predictor, encoder, residual_model, config,
                 n_epochs, seed, sensor_rate=SENSOR_RATE_BYTES,
                 tables=None, power_params=None):
    """Sequential epochs with persistent agent learning state.

    Traces are cycled; per-epoch rng streams derive from (seed, epoch).
    Returns (list of EpochResult, records of the last epoch).
    """
    if n_epochs < 1:
        raise ValueError("n_epochs must be >= 1")
    tables = tables or PrbTables.default()
    power_params = power_params or PowerModelParams()
    caches = {}
    results = []
    records = []
    for e in range(n_epochs):
        trace = traces[e % len(traces)]
        key = id(trace)
        if key not in caches:
            caches[key] = PredictionCache(
                predictor, encoder, trace,
                max_packets=int(config.delta_t_max / trace.sample_interval)
                + 16,
                packet_bytes=sensor_rate)
        rng = np.random.default_rng(np.random.SeedSequence([seed, e]))
        result, records = run_epoch(
            trace, agent, predictor, encoder, residual_model, config, rng,
            epoch_index=e, sensor_rate=sensor_rate, tables=tables,
            power_params=power_params, prediction_cache=caches[key])
        results.append(result)
    return results, records


RUNLOG_COLUMNS = ["send_time", "duration", "payload", "achieved_rate",
                  "oldest_packet_generated_at", "cqi_at_send",
                  "rsrp_at_send", "s_tilde"]


def write_runlog(records, path):
    """One row per transmission, tab-separated, documented column order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(RUNLOG_COLUMNS) + "\n")
        for r in records:
            fh.write("\t".join([
                repr(float(r.send_time)), repr(float(r.duration)),
                str(int(r.payload)), repr(float(r.achieved_rate)),
                repr(float(r.oldest_packet_generated_at)),
                str(int(r.cqi_at_send)), repr(float(r.rsrp_at_send)),
                repr(float(r.s_tilde)),
            ]) + "\n")


def read_runlog(path):
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split("\t")
        if header != RUNLOG_COLUMNS:
            raise ValueError("unknown run log columns")
        for line in fh:
            v = line.split("\t")
            records.append(TransmissionRecord(
                send_time=float(v[0]), duration=float(v[1]),
                payload=int(v[2]), achieved_rate=float(v[3]),
                oldest_packet_generated_at=float(v[4]),
                cqi_at_send=int(v[5]), rsrp_at_send=float(v[6]),
                s_tilde=float(v[7])))
    return records


def write_epoch_results(results, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch\tmean_rate\tmean_aoi\tn_transmissions\t"
                 "total_prbs\ttotal_energy\n")
        for r in results:
            fh.write(f"{r.epoch}\t{r.mean_rate!r}\t{r.mean_aoi!r}\t"
                     f"{r.n_transmissions}\t{r.total_prbs!r}\t"
                     f"{r.total_energy!r}\n")


def convergence_epoch(values, window, tol):
    """First epoch (1-based) whose moving average stays within a relative
    tolerance band for the rest of the run, or None."""
    if window < 2:
        raise ValueError("window must be >= 2")
    values = np.asarray(values, dtype=float)
    if values.size < window:
        return None
    kernel = np.ones(window) / window
    ma = np.convolve(values, kernel, mode="valid")
    # the final moving-average point alone is trivially stable, so a
    # converged state needs at least one further point inside the band
    for i in range(ma.size - 1):
        ref = ma[i]
        scale = max(abs(ref), 1e-12)
        if np.all(np.abs(ma[i:] - ref) / scale < tol):
            return i + window
    return None
