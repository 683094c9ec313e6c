"""Configuration grammar, presets, and invariant-naming errors."""

import pytest

from fraclab.config import PRESETS, RunConfig, config_to_text, get_preset, parse_config_text
from fraclab.errors import ConfigError


class TestParsing:
    def test_defaults_valid(self):
        RunConfig().validate()

    def test_all_presets_valid(self):
        for name in PRESETS:
            get_preset(name).validate()

    def test_round_trip(self):
        cfg = get_preset("paper-desk")
        text = config_to_text(cfg)
        cfg2 = parse_config_text(text)
        assert cfg2 == cfg

    def test_override_on_preset(self):
        cfg = parse_config_text("[problem]\nh = 0.03125\n", base=get_preset("paper-desk"))
        assert cfg.h == 0.03125
        assert cfg.t == 0.7

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown configuration key"):
            parse_config_text("[problem]\nbogus = 1\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError, match="invalid value"):
            parse_config_text("[problem]\nt = banana\n")

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            get_preset("nope")


class TestInvariants:
    def test_order_invariant_named(self):
        with pytest.raises(ConfigError, match="0 < s < t < 1"):
            parse_config_text("[problem]\ns = 0.8\nt = 0.7\n")

    def test_geometry_invariant(self):
        with pytest.raises(ConfigError, match="truncation radius"):
            parse_config_text("[problem]\nradius = 0.5\n")

    def test_support_invariant(self):
        with pytest.raises(ConfigError, match="compactly supported"):
            parse_config_text("[coefficients]\nb_edges = -0.999 0.0\nb_values = 1.0\n")

    def test_source_window_invariant(self):
        with pytest.raises(ConfigError, match="source"):
            parse_config_text("[sources]\nwindow_lo = 0.0\nwindow_hi = 0.5\n")

    def test_observation_invariant(self):
        with pytest.raises(ConfigError, match="observation"):
            parse_config_text("[observations]\npoints = 0.5\n")

    def test_runge_demo_names(self):
        with pytest.raises(ConfigError, match="runge demo"):
            parse_config_text("[runge]\ndemos = bogus\n")
