"""Tests for the config module."""

import json
import os
import tempfile

import pytest

from skillgeo import config


class TestConfig:
    """Tests for config loading and defaults."""

    @pytest.fixture(autouse=True)
    def reset_config(self):
        """Reset the cached config and paths around each test."""
        paths = config._CONFIG_PATH, config._JSON_CONFIG_PATH
        config._config = None
        yield
        config._config = None
        config._CONFIG_PATH, config._JSON_CONFIG_PATH = paths

    def _no_files(self):
        config._CONFIG_PATH = "/nonexistent/config.yaml"
        config._JSON_CONFIG_PATH = "/nonexistent/config.json"

    def test_defaults_exist(self):
        """All expected default keys are present."""
        expected_keys = [
            "dedupe_tol",
            "hull_tol",
            "enumeration_cap",
            "misl_tol",
            "active_tol",
            "weights_tol",
            "pwsep_tol",
            "subset_cap",
            "tie_tol",
            "assumption_tol",
            "knn_k",
            "c_stab",
            "n_projections",
            "float_digits",
        ]
        for key in expected_keys:
            assert key in config.DEFAULTS

    def test_default_values(self):
        """Defaults match the documented tolerances and caps."""
        assert config.DEFAULTS["dedupe_tol"] == 1e-8
        assert config.DEFAULTS["hull_tol"] == 1e-7
        assert config.DEFAULTS["enumeration_cap"] == 10**6
        assert config.DEFAULTS["misl_tol"] == 1e-7
        assert config.DEFAULTS["active_tol"] == 1e-4
        assert config.DEFAULTS["subset_cap"] == 10**5
        assert config.DEFAULTS["tie_tol"] == 1e-9
        assert config.DEFAULTS["float_digits"] == 12

    def test_active_tol_looser_than_solver_tol(self):
        assert config.DEFAULTS["active_tol"] > config.DEFAULTS["misl_tol"]

    def test_get_config_returns_defaults_when_no_file(self):
        """get_config returns defaults when no config file exists."""
        self._no_files()

        cfg = config.get_config()
        assert cfg["misl_tol"] == 1e-7
        assert cfg["knn_k"] == 3

    def test_get_config_caches_result(self):
        """get_config returns the same dict on subsequent calls."""
        self._no_files()

        cfg1 = config.get_config()
        cfg2 = config.get_config()
        assert cfg1 is cfg2

    def test_json_config_overrides_defaults(self):
        """JSON config values override defaults."""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".json", delete=False) as f:
            json.dump({"subset_cap": 50, "knn_k": 5}, f)
            f.flush()
            config._CONFIG_PATH = "/nonexistent/config.yaml"
            config._JSON_CONFIG_PATH = f.name

        try:
            cfg = config.get_config()
            assert cfg["subset_cap"] == 50
            assert cfg["knn_k"] == 5
            # Non-overridden values stay default
            assert cfg["tie_tol"] == 1e-9
        finally:
            os.unlink(f.name)

    def test_unknown_keys_ignored(self):
        """Unknown keys in config file are silently ignored."""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".json", delete=False) as f:
            json.dump({"knn_k": 7, "unknown_key": "should_be_ignored"}, f)
            f.flush()
            config._CONFIG_PATH = "/nonexistent/config.yaml"
            config._JSON_CONFIG_PATH = f.name

        try:
            cfg = config.get_config()
            assert cfg["knn_k"] == 7
            assert "unknown_key" not in cfg
        finally:
            os.unlink(f.name)

    def test_get_single_value(self):
        """config.get() returns a single value."""
        self._no_files()

        assert config.get("n_projections") == 64
        assert config.get("c_stab") == 1.0


class TestResolve:
    @pytest.fixture(autouse=True)
    def defaults_only(self):
        paths = config._CONFIG_PATH, config._JSON_CONFIG_PATH
        config._config = None
        config._CONFIG_PATH = "/nonexistent/config.yaml"
        config._JSON_CONFIG_PATH = "/nonexistent/config.json"
        yield
        config._config = None
        config._CONFIG_PATH, config._JSON_CONFIG_PATH = paths

    def test_none_falls_back_to_config(self):
        assert config.resolve(None, "pwsep_tol") == 1e-7

    def test_explicit_value_wins(self):
        assert config.resolve(1e-3, "pwsep_tol") == 1e-3

    def test_zero_is_not_none(self):
        assert config.resolve(0, "knn_k") == 0

    def test_config_feeds_library_defaults(self):
        """A lowered subset cap reaches maximize_wsep through resolve()."""
        from skillgeo.errors import TooLarge
        from skillgeo.scenarios import c3_polytope
        from skillgeo.wdsl import maximize_wsep

        config.get_config()["subset_cap"] = 3
        with pytest.raises(TooLarge):
            maximize_wsep(c3_polytope(), k=2)
