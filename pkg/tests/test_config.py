import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opptrans.config import Config, ConfigError, derive_seed


class TestParsing:
    def test_basic_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# comment line\n"
            "trace.duration = 600\n"
            "scheme.w = 0.9   # trailing comment\n"
            "\n"
            "scheme.names = periodic, cat\n")
        cfg = Config.from_file(path)
        assert cfg.getfloat("trace.duration") == 600.0
        assert cfg.getfloat("scheme.w") == 0.9
        assert cfg.getlist("scheme.names") == ["periodic", "cat"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="missing config file"):
            Config.from_file(tmp_path / "nope.cfg")

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("just words\n")
        with pytest.raises(ConfigError, match="line 1"):
            Config.from_file(path)


class TestAccessors:
    CFG = Config({"a": "3", "b": "2.5", "flag": "yes", "off": "0",
                  "items": "x, y ,z", "blank": ""})

    def test_defaults(self):
        assert self.CFG.get("missing") is None
        assert self.CFG.getfloat("missing", 7.0) == 7.0
        assert self.CFG.getint("missing") is None
        assert self.CFG.getbool("missing", True) is True
        assert self.CFG.getlist("missing", ("p",)) == ["p"]

    def test_types(self):
        assert self.CFG.getint("a") == 3
        assert self.CFG.getfloat("b") == 2.5
        assert self.CFG.getbool("flag") is True
        assert self.CFG.getbool("off") is False
        assert self.CFG.getlist("items") == ["x", "y", "z"]

    def test_blank_value_falls_back(self):
        assert self.CFG.getfloat("blank", 1.5) == 1.5

    def test_bad_number(self):
        with pytest.raises(ConfigError, match="expected a number"):
            Config({"k": "abc"}).getfloat("k")

    def test_bad_bool(self):
        with pytest.raises(ConfigError, match="boolean"):
            Config({"k": "maybe"}).getbool("k")

    def test_override_is_non_destructive(self):
        base = Config({"k": "1"})
        new = base.with_override("k", 2)
        assert base.get("k") == "1"
        assert new.get("k") == "2"


class TestSeedDerivation:
    def test_documented_hash(self):
        digest = hashlib.sha256(b"42/train/3").digest()
        expect = int.from_bytes(digest[:8], "big") % (2 ** 63)
        assert derive_seed(42, "train", 3) == expect

    @given(master=st.integers(0, 2 ** 32), stage=st.sampled_from(
        ["train", "eval", "sweep"]), index=st.integers(0, 100))
    @settings(max_examples=60, deadline=None)
    def test_range_and_determinism(self, master, stage, index):
        a = derive_seed(master, stage, index)
        assert 0 <= a < 2 ** 63
        assert a == derive_seed(master, stage, index)

    def test_stages_are_isolated(self):
        seeds = {derive_seed(1, s, i) for s in ("train", "eval")
                 for i in range(50)}
        assert len(seeds) == 100
