"""Application factory for creating FastAPI app."""

import logging
from typing import Optional

from fastapi import FastAPI
from slowapi import Limiter

from .config.settings import AppConfig, ConfigLoader
from .config.constants import DefaultValues, Environment
from .domain.services import ModelRepository
from .infrastructure.logging import setup_logging
from .api.dependencies import initialize_dependencies
from .api.middleware import setup_middleware, setup_rate_limiting
from .api.routes.codec import create_codec_router
from .api.routes.health import router as health_router

logger = logging.getLogger(__name__)


def create_fastapi_app(config: AppConfig) -> FastAPI:
    """Create FastAPI application with proper configuration."""
    # Disable docs in production
    docs_url = "/docs" if config.environment != Environment.PRODUCTION else None
    redoc_url = "/redoc" if config.environment != Environment.PRODUCTION else None

    return FastAPI(
        title="Contour Codec",
        version="1.0.0",
        description="Context-tree lossless and rate-distortion optimal lossy coding of binary shape contours",
        docs_url=docs_url,
        redoc_url=redoc_url
    )


def register_routes(app: FastAPI, config: AppConfig, limiter: Optional[Limiter]) -> None:
    """Register all application routes."""
    app.include_router(health_router, tags=["health"])
    app.include_router(create_codec_router(config, limiter), tags=["codec"])


def create_app(
    config: Optional[AppConfig] = None,
    config_file: str = DefaultValues.DEFAULT_CONFIG_FILE,
    model_store: Optional[ModelRepository] = None
) -> FastAPI:
    """Create and configure FastAPI application.

    ``config`` wins over ``config_file``; ``model_store`` replaces the
    file-backed store built from ``config.codec.model_path``.
    """
    if config is None:
        config = ConfigLoader(config_file, create_if_missing=False).load()

    setup_logging(config.environment)
    logger.info(f"Starting application in {config.environment.value} environment")

    initialize_dependencies(config, model_store)

    app = create_fastapi_app(config)
    setup_middleware(app, config)
    limiter = setup_rate_limiting(app, config)
    register_routes(app, config, limiter)

    logger.info("Application created and configured successfully")
    return app
