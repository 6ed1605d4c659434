"""Health and model info API endpoints."""

import logging

from fastapi import APIRouter, HTTPException

from ...config.constants import ErrorMessages, HTTPStatus
from ..dependencies import HealthServiceDep, ModelInfoServiceDep

logger = logging.getLogger(__name__)

router = APIRouter()


@router.get("/health")
async def health_check(health_service: HealthServiceDep) -> dict:
    """Health check endpoint."""
    logger.debug("Health check requested")
    status = health_service.get_health_status()
    return {
        "status": status.status,
        "service": status.service,
        "timestamp": status.timestamp,
        "model_loaded": status.model_loaded
    }


@router.get("/model")
async def get_model_info(model_info_service: ModelInfoServiceDep) -> dict:
    """Summary of the context tree the service codes with."""
    logger.debug("Model summary requested")
    summary = model_info_service.get_model_info()
    if summary is None:
        raise HTTPException(status_code=HTTPStatus.SERVICE_UNAVAILABLE, detail=ErrorMessages.MODEL_NOT_LOADED)
    return summary.to_dict()
