"""Configuration management."""

import os
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional
from dataclasses import dataclass, field

from .constants import (
    ApproximationMode,
    DefaultValues,
    ConfigKeys,
    EnvironmentVariables,
    ErrorMessages,
    CORSSettings,
    HistoryMode,
    OversizePolicy,
    SecurityConstants,
    Environment
)

logger = logging.getLogger(__name__)


@dataclass
class TreeConfig:
    """Context tree training parameters.

    ``depth`` and ``budget`` left as ``None`` are derived from the training
    size: D = ceil(ln L / ln 3) and K = 3 D^3.
    """
    a: float = DefaultValues.DEFAULT_PRIOR_WEIGHT
    beta: float = DefaultValues.DEFAULT_SMOOTHING
    depth: Optional[int] = None
    budget: Optional[int] = None


@dataclass
class RdConfig:
    """Lossy approximation parameters."""
    lambda_: float = DefaultValues.DEFAULT_LAMBDA
    d_max: float = DefaultValues.DEFAULT_D_MAX
    mode: ApproximationMode = ApproximationMode.SSDD
    history: HistoryMode = HistoryMode.TST
    max_states: int = DefaultValues.DEFAULT_MAX_STATES


@dataclass
class CodecConfig:
    """Container and model settings."""
    model_path: Optional[str] = None
    oversize_policy: OversizePolicy = OversizePolicy.FAIL


@dataclass
class SecurityConfig:
    """Security configuration."""
    enable_auth: bool = False
    enable_request_signature: bool = False
    max_contour_symbols: int = SecurityConstants.MAX_CONTOUR_SYMBOLS
    trusted_hosts: List[str] = field(default_factory=lambda: ["*"])


@dataclass
class RateLimitConfig:
    """Rate limiting configuration."""
    requests_per_minute: int = DefaultValues.DEFAULT_REQUESTS_PER_MINUTE
    enabled: bool = True


@dataclass
class CORSConfig:
    """CORS configuration."""
    allowed_origins: List[str] = field(default_factory=lambda: list(CORSSettings.ALLOWED_ORIGINS))
    allowed_methods: List[str] = field(default_factory=lambda: list(CORSSettings.ALLOWED_METHODS))
    allowed_headers: List[str] = field(default_factory=lambda: list(CORSSettings.ALLOWED_HEADERS))
    allow_credentials: bool = CORSSettings.ALLOW_CREDENTIALS


@dataclass
class AppConfig:
    """Application configuration."""
    tree: TreeConfig = field(default_factory=TreeConfig)
    rd: RdConfig = field(default_factory=RdConfig)
    codec: CodecConfig = field(default_factory=CodecConfig)
    security: SecurityConfig = field(default_factory=SecurityConfig)
    rate_limiting: RateLimitConfig = field(default_factory=RateLimitConfig)
    cors: CORSConfig = field(default_factory=CORSConfig)
    environment: Environment = Environment.DEVELOPMENT
    port: int = DefaultValues.DEFAULT_PORT
    threads: int = DefaultValues.DEFAULT_THREADS
    api_key: Optional[str] = None
    signing_secret: Optional[str] = None

    @classmethod
    def _get_environment(cls) -> Environment:
        """Get environment with graceful handling of invalid values."""
        env_str = os.getenv(EnvironmentVariables.ENVIRONMENT, Environment.DEVELOPMENT)
        try:
            return Environment(env_str)
        except ValueError:
            logger.warning(f"Invalid environment value '{env_str}', defaulting to development")
            return Environment.DEVELOPMENT

    @classmethod
    def _get_port(cls) -> int:
        """Get port with graceful handling of invalid values."""
        port_str = os.getenv(EnvironmentVariables.PORT, str(DefaultValues.DEFAULT_PORT))
        try:
            port = int(port_str)
            if port < 1 or port > 65535:
                logger.warning(f"Invalid port value '{port}', using default {DefaultValues.DEFAULT_PORT}")
                return DefaultValues.DEFAULT_PORT
            return port
        except ValueError:
            logger.warning(f"Invalid port value '{port_str}', using default {DefaultValues.DEFAULT_PORT}")
            return DefaultValues.DEFAULT_PORT

    @classmethod
    def _get_threads(cls) -> int:
        """Get the parallelism cap from CONTOUR_CODEC_THREADS."""
        threads_str = os.getenv(EnvironmentVariables.THREADS, str(DefaultValues.DEFAULT_THREADS))
        try:
            threads = int(threads_str)
        except ValueError:
            logger.warning(f"Invalid thread count '{threads_str}', using {DefaultValues.DEFAULT_THREADS}")
            return DefaultValues.DEFAULT_THREADS
        if threads < 1:
            logger.warning(f"Thread count must be positive, got {threads}; using {DefaultValues.DEFAULT_THREADS}")
            return DefaultValues.DEFAULT_THREADS
        return threads

    @classmethod
    def _enum_value(cls, enum_type, raw, default):
        if raw is None:
            return default
        try:
            return enum_type(raw)
        except ValueError:
            logger.warning(f"Invalid {enum_type.__name__} value '{raw}', using {default.value}")
            return default

    @classmethod
    def from_dict(cls, config_dict: Dict) -> "AppConfig":
        """Create configuration from dictionary."""
        tree_dict = config_dict.get(ConfigKeys.TREE, {}) or {}
        rd_dict = config_dict.get(ConfigKeys.RD, {}) or {}
        codec_dict = config_dict.get(ConfigKeys.CODEC, {}) or {}
        security_dict = config_dict.get(ConfigKeys.SECURITY, {}) or {}
        rate_limit_dict = config_dict.get(ConfigKeys.RATE_LIMITING, {}) or {}

        return cls(
            tree=TreeConfig(
                a=tree_dict.get(ConfigKeys.PRIOR_WEIGHT, DefaultValues.DEFAULT_PRIOR_WEIGHT),
                beta=tree_dict.get(ConfigKeys.SMOOTHING, DefaultValues.DEFAULT_SMOOTHING),
                depth=tree_dict.get(ConfigKeys.DEPTH),
                budget=tree_dict.get(ConfigKeys.BUDGET)
            ),
            rd=RdConfig(
                lambda_=rd_dict.get(ConfigKeys.LAMBDA, DefaultValues.DEFAULT_LAMBDA),
                d_max=rd_dict.get(ConfigKeys.D_MAX, DefaultValues.DEFAULT_D_MAX),
                mode=cls._enum_value(ApproximationMode, rd_dict.get(ConfigKeys.MODE), ApproximationMode.SSDD),
                history=cls._enum_value(HistoryMode, rd_dict.get(ConfigKeys.HISTORY), HistoryMode.TST),
                max_states=rd_dict.get(ConfigKeys.MAX_STATES, DefaultValues.DEFAULT_MAX_STATES)
            ),
            codec=CodecConfig(
                model_path=os.getenv(EnvironmentVariables.MODEL_PATH, codec_dict.get(ConfigKeys.MODEL_PATH)),
                oversize_policy=cls._enum_value(
                    OversizePolicy, codec_dict.get(ConfigKeys.OVERSIZE_POLICY), OversizePolicy.FAIL
                )
            ),
            security=SecurityConfig(
                enable_auth=security_dict.get(ConfigKeys.ENABLE_AUTH, False),
                enable_request_signature=security_dict.get(ConfigKeys.ENABLE_REQUEST_SIGNATURE, False),
                max_contour_symbols=security_dict.get(
                    ConfigKeys.MAX_CONTOUR_SYMBOLS, SecurityConstants.MAX_CONTOUR_SYMBOLS
                ),
                trusted_hosts=security_dict.get(ConfigKeys.TRUSTED_HOSTS, ["*"])
            ),
            rate_limiting=RateLimitConfig(
                requests_per_minute=rate_limit_dict.get(
                    ConfigKeys.REQUESTS_PER_MINUTE, DefaultValues.DEFAULT_REQUESTS_PER_MINUTE
                ),
                enabled=rate_limit_dict.get(ConfigKeys.ENABLED, True)
            ),
            environment=cls._get_environment(),
            port=cls._get_port(),
            threads=cls._get_threads(),
            api_key=os.getenv(EnvironmentVariables.API_KEY),
            signing_secret=os.getenv(EnvironmentVariables.REQUEST_SIGNING_SECRET)
        )

    def to_dict(self) -> Dict:
        """Convert configuration to dictionary for serialization."""
        return {
            ConfigKeys.TREE: {
                ConfigKeys.PRIOR_WEIGHT: self.tree.a,
                ConfigKeys.SMOOTHING: self.tree.beta,
                ConfigKeys.DEPTH: self.tree.depth,
                ConfigKeys.BUDGET: self.tree.budget
            },
            ConfigKeys.RD: {
                ConfigKeys.LAMBDA: self.rd.lambda_,
                ConfigKeys.D_MAX: self.rd.d_max,
                ConfigKeys.MODE: self.rd.mode.value,
                ConfigKeys.HISTORY: self.rd.history.value,
                ConfigKeys.MAX_STATES: self.rd.max_states
            },
            ConfigKeys.CODEC: {
                ConfigKeys.MODEL_PATH: self.codec.model_path,
                ConfigKeys.OVERSIZE_POLICY: self.codec.oversize_policy.value
            },
            ConfigKeys.SECURITY: {
                ConfigKeys.ENABLE_AUTH: self.security.enable_auth,
                ConfigKeys.ENABLE_REQUEST_SIGNATURE: self.security.enable_request_signature,
                ConfigKeys.MAX_CONTOUR_SYMBOLS: self.security.max_contour_symbols,
                ConfigKeys.TRUSTED_HOSTS: self.security.trusted_hosts
            },
            ConfigKeys.RATE_LIMITING: {
                ConfigKeys.REQUESTS_PER_MINUTE: self.rate_limiting.requests_per_minute,
                ConfigKeys.ENABLED: self.rate_limiting.enabled
            }
        }


class ConfigurationError(Exception):
    """Configuration related errors."""
    pass


class ConfigLoader:
    """Configuration loader with proper error handling."""

    def __init__(
        self,
        config_file: str = DefaultValues.DEFAULT_CONFIG_FILE,
        create_if_missing: bool = True
    ):
        self.config_file = Path(config_file)
        self.create_if_missing = create_if_missing

    def load(self) -> AppConfig:
        """Load configuration from file or create default."""
        try:
            if self.config_file.exists():
                return self._load_from_file()
            else:
                return self._create_default_config()
        except Exception as e:
            logger.error(f"{ErrorMessages.CONFIG_LOAD_ERROR}: {e}")
            raise ConfigurationError(f"{ErrorMessages.CONFIG_LOAD_ERROR}: {e}") from e

    def _load_from_file(self) -> AppConfig:
        """Load configuration from existing file."""
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                config_dict = json.load(f)

            config = AppConfig.from_dict(config_dict)
            logger.info(f"Configuration loaded from {self.config_file}")
            return config

        except json.JSONDecodeError as e:
            logger.warning(f"Invalid JSON in config file {self.config_file}: {e}")
            return AppConfig.from_dict({})
        except (IOError, OSError) as e:
            logger.warning(f"Error reading config file {self.config_file}: {e}")
            return AppConfig.from_dict({})

    def _create_default_config(self) -> AppConfig:
        """Create default configuration, saving it when asked to."""
        config = AppConfig.from_dict({})
        if not self.create_if_missing:
            return config

        try:
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(config.to_dict(), f, indent=2)
            logger.info(f"Created default config file: {self.config_file}")
        except (IOError, OSError) as e:
            logger.warning(f"Could not create config file {self.config_file}: {e}")

        return config

    def save(self, config: AppConfig) -> None:
        """Save configuration to file."""
        try:
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(config.to_dict(), f, indent=2)
            logger.info(f"Configuration saved to {self.config_file}")
        except (IOError, OSError) as e:
            logger.error(f"Error saving config file {self.config_file}: {e}")
            raise ConfigurationError(f"Error saving config file: {e}") from e
        except (TypeError, ValueError) as e:
            logger.error(f"JSON serialization error: {e}")
            raise ConfigurationError(f"Configuration serialization failed: {e}") from e
