import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opptrans.trace import (ContextSample, SyntheticConfig, Trace, TraceError,
                            generate_synthetic_trace, load_trace, project,
                            sensor_stream, unproject, write_trace)

HEADER = ("timestamp_s,lat,lon,velocity_kmh,rsrp_dbm,rsrq_db,sinr_db,"
          "cqi,ta,cell_id")


def _write(tmp_path, rows, header=HEADER, name="trace.csv"):
    path = tmp_path / name
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    return path


ROW = "{t},51.0,7.0,50,-95,-10,5,{cqi},2,cellA"


class TestLoadTrace:
    def test_well_formed_file(self, tmp_path):
        rows = [ROW.format(t=t, cqi=8) for t in (0, 1, 2)]
        trace = load_trace(_write(tmp_path, rows))
        assert len(trace) == 3
        assert [s.timestamp for s in trace.samples] == [0.0, 1.0, 2.0]
        assert trace.samples[0].cqi == 8
        assert trace.samples[0].measured_data_rate is None

    def test_non_monotonic_timestamps(self, tmp_path):
        rows = [ROW.format(t=t, cqi=8) for t in (0, 2, 1)]
        with pytest.raises(TraceError, match="non-monotonic"):
            load_trace(_write(tmp_path, rows))

    def test_cqi_out_of_range(self, tmp_path):
        rows = [ROW.format(t=0, cqi=16)]
        with pytest.raises(TraceError, match="cqi out of range"):
            load_trace(_write(tmp_path, rows))

    def test_missing_file(self, tmp_path):
        with pytest.raises(TraceError, match="missing trace file"):
            load_trace(tmp_path / "nope.csv")

    def test_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("timestamp_s,lat\n0,51.0\n")
        with pytest.raises(TraceError, match="missing column"):
            load_trace(path)

    def test_empty_trace(self, tmp_path):
        with pytest.raises(TraceError, match="empty trace"):
            load_trace(_write(tmp_path, []))

    def test_unparseable_row_rejects_file(self, tmp_path):
        rows = [ROW.format(t=0, cqi=8), ROW.format(t="oops", cqi=8)]
        with pytest.raises(TraceError, match="unparseable row"):
            load_trace(_write(tmp_path, rows))

    def test_schema_mapping(self, tmp_path):
        header = HEADER.replace("timestamp_s", "time_sec")
        rows = ["0,51.0,7.0,50,-95,-10,5,8,2,cellA"]
        trace = load_trace(_write(tmp_path, rows, header=header),
                           schema={"timestamp_s": "time_sec"})
        assert len(trace) == 1


class TestRoundTrip:
    def test_write_then_load_preserves_rows(self, tmp_path, small_trace):
        path = tmp_path / "rt.csv"
        write_trace(small_trace, path)
        back = load_trace(path)
        assert len(back) == len(small_trace)
        for a, b in zip(small_trace.samples, back.samples):
            assert a.timestamp == b.timestamp
            assert a.rsrp == b.rsrp
            assert a.rsrq == b.rsrq
            assert a.sinr == b.sinr
            assert a.cqi == b.cqi
            assert a.ta == b.ta
            assert a.cell_id == b.cell_id
            assert a.velocity == b.velocity
            assert a.measured_data_rate == pytest.approx(
                b.measured_data_rate, abs=1e-9)
            assert a.position[0] == pytest.approx(b.position[0], abs=1e-6)
            assert a.position[1] == pytest.approx(b.position[1], abs=1e-6)

    @given(lat=st.floats(50.9, 51.1), lon=st.floats(6.9, 7.1))
    @settings(max_examples=50, deadline=None)
    def test_projection_round_trip(self, lat, lon):
        x, y = project(lat, lon, (51.0, 7.0))
        lat2, lon2 = unproject(x, y, (51.0, 7.0))
        assert lat2 == pytest.approx(lat, abs=1e-9)
        assert lon2 == pytest.approx(lon, abs=1e-9)


class TestValidation:
    def _sample(self, **kw):
        base = dict(timestamp=0.0, position=(0.0, 0.0), velocity=50.0,
                    rsrp=-95.0, rsrq=-10.0, sinr=5.0, cqi=8, ta=2,
                    cell_id="c")
        base.update(kw)
        return ContextSample(**base)

    def test_empty(self):
        with pytest.raises(TraceError, match="empty"):
            Trace(samples=())

    def test_negative_timestamp(self):
        with pytest.raises(TraceError, match="negative timestamp"):
            Trace(samples=(self._sample(timestamp=-1.0),))

    def test_negative_velocity(self):
        with pytest.raises(TraceError, match="negative velocity"):
            Trace(samples=(self._sample(velocity=-1.0),))


class TestSensorStream:
    def test_three_seconds(self):
        packets = sensor_stream(50000, 3)
        assert len(packets) == 3
        assert all(p.size == 50000 for p in packets)

    def test_zero_duration(self):
        assert sensor_stream(50000, 0) == []

    def test_unit_rate(self):
        packets = sensor_stream(1, 120)
        assert len(packets) == 120
        assert sum(p.size for p in packets) == 120

    def test_non_positive_rate(self):
        with pytest.raises(ValueError):
            sensor_stream(0, 10)

    @given(rate=st.integers(1, 10 ** 6), duration=st.floats(0, 500))
    @settings(max_examples=30, deadline=None)
    def test_total_bytes(self, rate, duration):
        packets = sensor_stream(rate, duration)
        assert sum(p.size for p in packets) == rate * math.floor(duration)


class TestSyntheticGeneration:
    def test_determinism(self):
        cfg = SyntheticConfig(duration_s=60)
        a = generate_synthetic_trace(cfg, 9)
        b = generate_synthetic_trace(cfg, 9)
        assert a.samples == b.samples

    def test_different_seeds_differ(self):
        cfg = SyntheticConfig(duration_s=60)
        a = generate_synthetic_trace(cfg, 9)
        b = generate_synthetic_trace(cfg, 10)
        assert a.samples != b.samples

    def test_zero_hotspots_is_stationary_noise(self):
        cfg = SyntheticConfig(duration_s=300, n_hotspots=0,
                              valley_sinr_db=1.0)
        trace = generate_synthetic_trace(cfg, 3)
        sinr = np.array([s.sinr for s in trace.samples])
        half = len(sinr) // 2
        # no planted structure: both halves hover around the valley baseline
        assert abs(sinr[:half].mean() - sinr[half:].mean()) < 3.0

    def test_hotspot_raises_local_sinr(self):
        cfg = SyntheticConfig(duration_s=400, n_hotspots=1,
                              hotspot_radius_m=200)
        trace = generate_synthetic_trace(cfg, 21)
        sinr = np.array([s.sinr for s in trace.samples])
        x = np.array([s.position[0] for s in trace.samples])
        peak_x = x[np.argmax(sinr)]
        inside = np.abs(x - peak_x) <= 200
        assert sinr[inside].mean() > sinr[~inside].mean()

    def test_non_positive_duration(self):
        with pytest.raises(TraceError):
            generate_synthetic_trace(SyntheticConfig(duration_s=0), 1)

    def test_measured_rate_present_and_positive(self, small_trace):
        assert all(s.measured_data_rate is not None and
                   s.measured_data_rate > 0 for s in small_trace.samples)
