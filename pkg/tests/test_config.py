"""Tests for configuration loading, logging setup and environment-specific behaviour."""

import json
import logging
import os
from pathlib import Path
from unittest.mock import Mock, patch

import pytest
from fastapi import FastAPI

from src.application import create_app, create_fastapi_app, register_routes
from src.config.constants import (
    ApproximationMode,
    DefaultValues,
    Environment,
    HistoryMode,
    OversizePolicy,
)
from src.config.settings import (
    AppConfig,
    ConfigLoader,
    ConfigurationError,
    RateLimitConfig,
    RdConfig,
    SecurityConfig,
    TreeConfig,
)
from src.infrastructure.logging import setup_logging


class TestConfigDefaults:
    """Dataclass defaults."""

    def test_tree_defaults(self):
        """Depth and budget are derived unless set."""
        config = TreeConfig()
        assert config.a == 0.25
        assert config.beta == 1.0
        assert config.depth is None
        assert config.budget is None

    def test_rd_defaults(self):
        """SSDD with suffix-tree histories."""
        config = RdConfig()
        assert config.mode == ApproximationMode.SSDD
        assert config.history == HistoryMode.TST
        assert config.lambda_ == DefaultValues.DEFAULT_LAMBDA
        assert config.max_states == DefaultValues.DEFAULT_MAX_STATES == 2000000

    def test_security_defaults(self):
        """Checks are off and the symbol cap is set."""
        config = SecurityConfig()
        assert config.enable_auth is False
        assert config.enable_request_signature is False
        assert config.max_contour_symbols == 1000000
        assert config.trusted_hosts == ["*"]

    def test_rate_limit_defaults(self):
        """Sixty requests per minute."""
        config = RateLimitConfig()
        assert config.requests_per_minute == 60
        assert config.enabled is True

    def test_app_defaults(self):
        """Nothing secret is configured by default."""
        config = AppConfig()
        assert config.environment == Environment.DEVELOPMENT
        assert config.port == 8000
        assert config.threads == 1
        assert config.api_key is None
        assert config.signing_secret is None
        assert config.codec.oversize_policy == OversizePolicy.FAIL


class TestAppConfigFromDict:
    """Dictionary and environment parsing."""

    def test_minimal(self):
        """An empty dictionary gives defaults."""
        with patch.dict(os.environ, {}, clear=True):
            config = AppConfig.from_dict({})
        assert config.codec.model_path is None
        assert config.security.enable_auth is False

    def test_complete(self):
        """Every section is read and secrets come from the environment."""
        config_dict = {
            "tree": {"a": 0.5, "beta": 0.5, "depth": 6, "budget": 200},
            "rd": {"lambda": 3.0, "d_max": 2.5, "mode": "madd", "history": "full", "max_states": 50000},
            "codec": {"model_path": "models/shapes.ctm", "oversize_policy": "split"},
            "security": {
                "enable_auth": True,
                "enable_request_signature": True,
                "max_contour_symbols": 5000,
                "trusted_hosts": ["localhost"]
            },
            "rate_limiting": {"requests_per_minute": 30, "enabled": False}
        }
        environment = {
            "ENVIRONMENT": "production",
            "PORT": "9000",
            "API_KEY": "test-key",
            "REQUEST_SIGNING_SECRET": "test-secret",
            "CONTOUR_CODEC_THREADS": "4"
        }
        with patch.dict(os.environ, environment, clear=True):
            config = AppConfig.from_dict(config_dict)

        assert (config.tree.a, config.tree.beta, config.tree.depth, config.tree.budget) == (0.5, 0.5, 6, 200)
        assert config.rd.lambda_ == 3.0
        assert config.rd.d_max == 2.5
        assert config.rd.mode == ApproximationMode.MADD
        assert config.rd.history == HistoryMode.FULL
        assert config.rd.max_states == 50000
        assert config.codec.model_path == "models/shapes.ctm"
        assert config.codec.oversize_policy == OversizePolicy.SPLIT
        assert config.security.max_contour_symbols == 5000
        assert config.rate_limiting.enabled is False
        assert config.environment == Environment.PRODUCTION
        assert config.port == 9000
        assert config.threads == 4
        assert config.api_key == "test-key"
        assert config.signing_secret == "test-secret"

    def test_model_path_from_environment(self):
        """CONTOUR_CODEC_MODEL overrides the file setting."""
        with patch.dict(os.environ, {"CONTOUR_CODEC_MODEL": "/srv/model.ctm"}):
            config = AppConfig.from_dict({"codec": {"model_path": "local.ctm"}})
        assert config.codec.model_path == "/srv/model.ctm"

    @pytest.mark.parametrize("variable,value,attribute,expected", [
        ("ENVIRONMENT", "invalid_env", "environment", Environment.DEVELOPMENT),
        ("PORT", "not-a-port", "port", 8000),
        ("PORT", "70000", "port", 8000),
        ("CONTOUR_CODEC_THREADS", "zero", "threads", 1),
        ("CONTOUR_CODEC_THREADS", "-3", "threads", 1),
    ])
    def test_invalid_environment_values(self, variable, value, attribute, expected):
        """Bad values fall back to defaults."""
        with patch.dict(os.environ, {variable: value}):
            config = AppConfig.from_dict({})
        assert getattr(config, attribute) == expected

    def test_invalid_enum_values(self):
        """Unknown modes and policies fall back to defaults."""
        config = AppConfig.from_dict({"rd": {"mode": "fastest"}, "codec": {"oversize_policy": "truncate"}})
        assert config.rd.mode == ApproximationMode.SSDD
        assert config.codec.oversize_policy == OversizePolicy.FAIL

    def test_null_sections(self):
        """null sections are treated as empty."""
        config = AppConfig.from_dict({"tree": None, "security": None})
        assert config.tree.a == 0.25

    def test_to_dict_roundtrip(self):
        """to_dict output reads back into the same settings."""
        original = AppConfig(rd=RdConfig(lambda_=2.0, mode=ApproximationMode.MADD, max_states=1000))
        with patch.dict(os.environ, {}, clear=True):
            restored = AppConfig.from_dict(original.to_dict())
        assert restored.rd == original.rd
        assert restored.tree == original.tree
        assert restored.security == original.security


class TestConfigLoader:
    """File-backed configuration."""

    def test_default_file(self):
        """config.json in the working directory."""
        assert ConfigLoader().config_file == Path(DefaultValues.DEFAULT_CONFIG_FILE)

    def test_load_existing_file(self, tmp_path):
        """Values in the file are applied."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"tree": {"a": 1.0}, "security": {"enable_auth": True}}))
        config = ConfigLoader(str(path)).load()
        assert config.tree.a == 1.0
        assert config.security.enable_auth is True

    def test_missing_file_is_created(self, tmp_path):
        """A default file is written when asked to."""
        path = tmp_path / "config.json"
        config = ConfigLoader(str(path)).load()
        assert isinstance(config, AppConfig)
        assert path.exists()
        assert "tree" in json.loads(path.read_text())

    def test_missing_file_left_alone(self, tmp_path):
        """The service loader does not write files."""
        path = tmp_path / "config.json"
        ConfigLoader(str(path), create_if_missing=False).load()
        assert not path.exists()

    def test_invalid_json_falls_back(self, tmp_path):
        """Broken JSON yields defaults and a warning."""
        path = tmp_path / "config.json"
        path.write_text("{ invalid json }")
        with patch("src.config.settings.logger") as mock_logger:
            config = ConfigLoader(str(path)).load()
        assert config.tree.a == 0.25
        mock_logger.warning.assert_called()

    def test_unwritable_default(self, tmp_path):
        """Failing to write the default file is only a warning."""
        path = tmp_path / "is_directory"
        path.mkdir()
        loader = ConfigLoader(str(path))
        with patch("src.config.settings.logger") as mock_logger:
            config = loader._create_default_config()
        assert isinstance(config, AppConfig)
        mock_logger.warning.assert_called()

    def test_save(self, tmp_path):
        """Saved configuration is valid JSON."""
        path = tmp_path / "saved.json"
        ConfigLoader(str(path)).save(AppConfig())
        saved = json.loads(path.read_text())
        assert saved["rd"]["mode"] == "ssdd"
        assert saved["codec"]["oversize_policy"] == "fail"

    def test_save_error(self, tmp_path):
        """Unwritable paths raise ConfigurationError."""
        loader = ConfigLoader(str(tmp_path / "missing" / "config.json"))
        with pytest.raises(ConfigurationError):
            loader.save(AppConfig())

    @patch("src.config.settings.json.dump")
    def test_save_serialization_error(self, mock_json_dump, tmp_path):
        """Serialization failures raise ConfigurationError."""
        mock_json_dump.side_effect = TypeError("Not serializable")
        with pytest.raises(ConfigurationError):
            ConfigLoader(str(tmp_path / "config.json")).save(AppConfig())

    @patch("src.config.settings.json.load")
    def test_unexpected_error(self, mock_json_load, tmp_path):
        """Anything else surfaces as ConfigurationError."""
        mock_json_load.side_effect = Exception("Unexpected error")
        path = tmp_path / "config.json"
        path.write_text("{}")
        with pytest.raises(ConfigurationError):
            ConfigLoader(str(path)).load()


class TestLoggingSetup:
    """Log levels per environment."""

    @pytest.mark.parametrize("environment,level", [
        (Environment.PRODUCTION, logging.WARNING),
        (Environment.DEVELOPMENT, logging.DEBUG),
        (Environment.TESTING, logging.ERROR),
    ])
    def test_environment_levels(self, environment, level):
        """Each environment has its own default level."""
        with patch("logging.basicConfig") as mock_basic_config:
            setup_logging(environment)
        mock_basic_config.assert_called_once()
        assert mock_basic_config.call_args[1]["level"] == level

    def test_explicit_level_wins(self):
        """--log-level overrides the environment default."""
        with patch("logging.basicConfig") as mock_basic_config:
            setup_logging(Environment.PRODUCTION, log_level="debug")
        assert mock_basic_config.call_args[1]["level"] == logging.DEBUG

    def test_unknown_level_defaults_to_info(self):
        """Unknown names map to INFO."""
        with patch("logging.basicConfig") as mock_basic_config:
            setup_logging(Environment.DEVELOPMENT, log_level="INVALID")
        assert mock_basic_config.call_args[1]["level"] == logging.INFO

    def test_failure_falls_back(self):
        """A failing setup retries with a basic configuration."""
        with patch("logging.basicConfig", side_effect=[Exception("Logging setup failed"), None]) as mock_basic:
            setup_logging(Environment.PRODUCTION)
        assert mock_basic.call_count == 2


class TestApplicationFactory:
    """FastAPI app creation per environment."""

    def test_production_disables_docs(self):
        """No interactive docs in production."""
        app = create_fastapi_app(AppConfig(environment=Environment.PRODUCTION))
        assert app.docs_url is None
        assert app.redoc_url is None

    def test_development_enables_docs(self):
        """Docs are served outside production."""
        app = create_fastapi_app(AppConfig(environment=Environment.DEVELOPMENT))
        assert app.docs_url == "/docs"
        assert app.redoc_url == "/redoc"

    def test_register_routes(self):
        """Health and codec routers are mounted."""
        mock_app = Mock(spec=FastAPI)
        with patch("src.application.create_codec_router") as mock_codec_router:
            mock_codec_router.return_value = Mock()
            register_routes(mock_app, AppConfig(), None)
        mock_codec_router.assert_called_once()
        assert mock_app.include_router.call_count == 2

    def test_create_app_from_file(self, tmp_path):
        """create_app reads the file, sets up logging and wires the pieces."""
        config_file = tmp_path / "production_config.json"
        config_file.write_text(json.dumps({"rate_limiting": {"enabled": True}}))
        with patch.dict(os.environ, {"ENVIRONMENT": "production"}), \
                patch("src.application.setup_logging") as mock_setup_logging, \
                patch("src.application.initialize_dependencies") as mock_init_deps, \
                patch("src.application.setup_middleware") as mock_middleware, \
                patch("src.application.setup_rate_limiting") as mock_rate_limit:
            mock_rate_limit.return_value = None
            app = create_app(config_file=str(config_file))

        assert mock_setup_logging.call_args[0][0] == Environment.PRODUCTION
        mock_init_deps.assert_called_once()
        mock_middleware.assert_called_once()
        mock_rate_limit.assert_called_once()
        assert isinstance(app, FastAPI)
        assert app.docs_url is None
