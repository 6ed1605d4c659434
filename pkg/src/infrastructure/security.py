"""API key and request signature checks for the codec service."""

import hashlib
import hmac
import logging
from typing import Optional

from fastapi import HTTPException, Request
from fastapi.security import HTTPAuthorizationCredentials

from ..config.constants import HTTPStatus, HeaderNames, ErrorMessages
from ..config.settings import AppConfig

logger = logging.getLogger(__name__)

SIGNATURE_PREFIX = "sha256="


class SecurityError(Exception):
    """Security related errors."""
    pass


def sign_body(secret: str, body: bytes) -> str:
    """Header value a client sends in X-Request-Signature."""
    digest = hmac.new(secret.encode(), body, hashlib.sha256).hexdigest()
    return f"{SIGNATURE_PREFIX}{digest}"


def _unauthorized(detail: str) -> HTTPException:
    return HTTPException(status_code=HTTPStatus.UNAUTHORIZED, detail=detail)


def verify_api_key(config: AppConfig, credentials: Optional[HTTPAuthorizationCredentials]) -> bool:
    """Check the bearer token when authentication is enabled."""
    if not config.security.enable_auth:
        return True

    if not credentials:
        raise _unauthorized(ErrorMessages.API_KEY_REQUIRED)

    if not config.api_key:
        logger.error("Authentication is enabled but API_KEY is not set")
        raise HTTPException(
            status_code=HTTPStatus.INTERNAL_SERVER_ERROR,
            detail=ErrorMessages.API_KEY_NOT_CONFIGURED
        )

    if not hmac.compare_digest(credentials.credentials, config.api_key):
        logger.warning("Rejected request with invalid API key")
        raise _unauthorized(ErrorMessages.INVALID_API_KEY)

    return True


def verify_request_signature(config: AppConfig, request: Request, body: bytes) -> bool:
    """Check the HMAC-SHA256 signature of a request body when signing is enabled."""
    if not config.security.enable_request_signature:
        return True

    signature = request.headers.get(HeaderNames.REQUEST_SIGNATURE)
    if not signature:
        logger.warning(f"Missing {HeaderNames.REQUEST_SIGNATURE} header on {request.url.path}")
        raise _unauthorized(ErrorMessages.REQUEST_SIGNATURE_REQUIRED)

    if not config.signing_secret:
        logger.error("Request signing is enabled but REQUEST_SIGNING_SECRET is not set")
        raise HTTPException(
            status_code=HTTPStatus.INTERNAL_SERVER_ERROR,
            detail=ErrorMessages.SIGNING_SECRET_NOT_CONFIGURED
        )

    if not hmac.compare_digest(sign_body(config.signing_secret, body), signature):
        logger.warning(f"Invalid request signature on {request.url.path}")
        raise _unauthorized(ErrorMessages.INVALID_REQUEST_SIGNATURE)

    return True


class SecurityManager:
    """Bundles the service's request checks around one configuration."""

    def __init__(self, config: AppConfig):
        self._config = config

    def verify_authentication(self, credentials: Optional[HTTPAuthorizationCredentials]) -> bool:
        return verify_api_key(self._config, credentials)

    def verify_signature(self, request: Request, body: bytes) -> bool:
        return verify_request_signature(self._config, request, body)


def create_security_manager(config: AppConfig) -> SecurityManager:
    return SecurityManager(config)
