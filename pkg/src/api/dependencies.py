"""FastAPI dependency injection setup."""

import logging
from typing import Annotated, Optional

from fastapi import Depends
from fastapi.security import HTTPBearer, HTTPAuthorizationCredentials

from ..config.settings import AppConfig
from ..domain.services import (
    ApproximationService,
    CodecService,
    HealthService,
    ModelInfoService,
    ModelRepository,
)
from ..infrastructure.model_store import ModelStore
from ..infrastructure.security import SecurityManager, create_security_manager

logger = logging.getLogger(__name__)


class DependencyContainer:
    """Dependency injection container."""

    def __init__(self, config: AppConfig, model_store: Optional[ModelRepository] = None):
        self.config = config
        self.security_manager = create_security_manager(config)
        self.model_store = model_store if model_store is not None else ModelStore(config.codec.model_path)

        self.codec_service = CodecService(self.model_store, config)
        self.approximation_service = ApproximationService(self.model_store, config)
        self.health_service = HealthService(self.model_store)
        self.model_info_service = ModelInfoService(self.model_store)

        logger.info("Dependencies initialized successfully")


# Container instance (initialized by application factory)
_container: Optional[DependencyContainer] = None


def initialize_dependencies(config: AppConfig, model_store: Optional[ModelRepository] = None) -> None:
    """Initialize dependency container."""
    global _container
    _container = DependencyContainer(config, model_store)


def _require_container() -> DependencyContainer:
    """Return the container or fail if the app factory has not run."""
    if _container is None:
        raise RuntimeError("Dependencies not initialized. Call initialize_dependencies() first.")
    return _container


def get_app_config() -> AppConfig:
    """Get application configuration."""
    return _require_container().config


def get_security_manager() -> SecurityManager:
    """Get security manager."""
    return _require_container().security_manager


def get_codec_service() -> CodecService:
    """Get lossless codec service."""
    return _require_container().codec_service


def get_approximation_service() -> ApproximationService:
    """Get lossy approximation service."""
    return _require_container().approximation_service


def get_health_service() -> HealthService:
    """Get health service."""
    return _require_container().health_service


def get_model_info_service() -> ModelInfoService:
    """Get model info service."""
    return _require_container().model_info_service


# FastAPI security dependency
security = HTTPBearer(auto_error=False)


def verify_authentication(
    credentials: Annotated[Optional[HTTPAuthorizationCredentials], Depends(security)],
    security_manager: Annotated[SecurityManager, Depends(get_security_manager)]
) -> bool:
    """Verify authentication credentials."""
    return security_manager.verify_authentication(credentials)


# Type aliases for cleaner dependency injection
AppConfigDep = Annotated[AppConfig, Depends(get_app_config)]
SecurityManagerDep = Annotated[SecurityManager, Depends(get_security_manager)]
CodecServiceDep = Annotated[CodecService, Depends(get_codec_service)]
ApproximationServiceDep = Annotated[ApproximationService, Depends(get_approximation_service)]
HealthServiceDep = Annotated[HealthService, Depends(get_health_service)]
ModelInfoServiceDep = Annotated[ModelInfoService, Depends(get_model_info_service)]
AuthenticatedDep = Annotated[bool, Depends(verify_authentication)]
