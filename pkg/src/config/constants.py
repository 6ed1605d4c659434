"""Application constants."""

from enum import Enum


class Environment(str, Enum):
    """Environment types."""
    DEVELOPMENT = "development"
    TESTING = "testing"
    PRODUCTION = "production"


class HTTPStatus(int, Enum):
    """HTTP status codes."""
    OK = 200
    UNAUTHORIZED = 401
    FORBIDDEN = 403
    NOT_FOUND = 404
    UNPROCESSABLE_ENTITY = 422
    INTERNAL_SERVER_ERROR = 500
    SERVICE_UNAVAILABLE = 503


class ExitCode(int, Enum):
    """CLI exit codes."""
    OK = 0
    FAILURE = 1
    INVALID_INPUT = 2


class ApproximationMode(str, Enum):
    """Objective used by the lossy coder."""
    SSDD = "ssdd"
    MADD = "madd"


class HistoryMode(str, Enum):
    """How DP histories are compacted."""
    TST = "tst"
    FULL = "full"


class OversizePolicy(str, Enum):
    """What to do with contours that do not fit the 16-bit length field."""
    FAIL = "fail"
    SPLIT = "split"


class SecurityConstants:
    """Security-related constants."""
    MAX_CONTOUR_SYMBOLS = 1000000
    MAX_UPLOAD_BYTES = 8 * 1024 * 1024
    MAX_CONTOURS_PER_REQUEST = 4096
    MAX_APPROXIMATION_SYMBOLS = 4096


class DefaultValues:
    """Default configuration values."""
    DEFAULT_PORT = 8000
    DEFAULT_REQUESTS_PER_MINUTE = 60
    DEFAULT_CONFIG_FILE = "config.json"
    DEFAULT_PRIOR_WEIGHT = 0.25
    DEFAULT_SMOOTHING = 1.0
    DEFAULT_LAMBDA = 1.0
    DEFAULT_D_MAX = 4.0
    DEFAULT_MAX_STATES = 2000000
    DEFAULT_THREADS = 1
    DEFAULT_SEED = 0
    BUDGET_FACTOR = 3
    SERVICE_NAME = "contour-codec"


class BitstreamFormat:
    """Normative container layout constants (all fields MSB-first)."""
    MAGIC = b"CTC1"
    DIMENSION_BITS = 16
    COUNT_BITS = 16
    MODEL_HASH_BITS = 64
    DIRECTION_BITS = 2
    LENGTH_BITS = 16
    PAYLOAD_LENGTH_BITS = 32
    CRC_BITS = 32
    MAX_CONTOUR_LENGTH = (1 << 16) - 1
    MAX_DIMENSION = (1 << 16) - 1


class CoderPrecision:
    """Arithmetic coder register and frequency widths."""
    STATE_BITS = 32
    FREQUENCY_BITS = 16


class ModelFormat:
    """Binary model and statistics dump layout."""
    MODEL_MAGIC = b"CTM1"
    STATS_MAGIC = b"CTS1"
    PRIOR_WEIGHT_SCALE = 1000
    ROOT_LABEL = 3


class ConfigKeys:
    """Configuration keys."""
    TREE = "tree"
    RD = "rd"
    CODEC = "codec"
    SECURITY = "security"
    RATE_LIMITING = "rate_limiting"
    PRIOR_WEIGHT = "a"
    SMOOTHING = "beta"
    DEPTH = "depth"
    BUDGET = "budget"
    LAMBDA = "lambda"
    D_MAX = "d_max"
    MODE = "mode"
    HISTORY = "history"
    MAX_STATES = "max_states"
    MODEL_PATH = "model_path"
    OVERSIZE_POLICY = "oversize_policy"
    ENABLE_AUTH = "enable_auth"
    ENABLE_REQUEST_SIGNATURE = "enable_request_signature"
    MAX_CONTOUR_SYMBOLS = "max_contour_symbols"
    TRUSTED_HOSTS = "trusted_hosts"
    REQUESTS_PER_MINUTE = "requests_per_minute"
    ENABLED = "enabled"


class EnvironmentVariables:
    """Environment variable names."""
    API_KEY = "API_KEY"
    REQUEST_SIGNING_SECRET = "REQUEST_SIGNING_SECRET"
    ENVIRONMENT = "ENVIRONMENT"
    PORT = "PORT"
    THREADS = "CONTOUR_CODEC_THREADS"
    MODEL_PATH = "CONTOUR_CODEC_MODEL"


class HeaderNames:
    """HTTP header names."""
    REQUEST_SIGNATURE = "X-Request-Signature"
    AUTHORIZATION = "Authorization"
    CONTENT_TYPE = "Content-Type"


class ErrorMessages:
    """Error message constants."""
    API_KEY_REQUIRED = "API key required"
    API_KEY_NOT_CONFIGURED = "API key not configured"
    INVALID_API_KEY = "Invalid API key"
    REQUEST_SIGNATURE_REQUIRED = "Request signature required"
    SIGNING_SECRET_NOT_CONFIGURED = "Request signing secret not configured"
    INVALID_REQUEST_SIGNATURE = "Invalid request signature"
    MODEL_NOT_LOADED = "No context tree model loaded"
    CONTOUR_TOO_LONG = "Contour has too many symbols"
    EMPTY_CORPUS = "Training corpus is empty"
    CORRUPT_STREAM = "Corrupt contour bitstream"
    MODEL_MISMATCH = "Bitstream was coded with a different model"
    INFEASIBLE = "No feasible approximation"
    STATE_BUDGET_EXCEEDED = "Approximation search exceeded its state budget"
    CONFIG_LOAD_ERROR = "Error loading config file"


class CORSSettings:
    """CORS configuration."""
    ALLOWED_ORIGINS = ["http://localhost", "http://127.0.0.1"]
    ALLOWED_METHODS = ["GET", "POST"]
    ALLOWED_HEADERS = ["Content-Type", "Authorization", "X-Request-Signature"]
    ALLOW_CREDENTIALS = False
