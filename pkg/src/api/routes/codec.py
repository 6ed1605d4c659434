"""Tracing, lossless coding and approximation endpoints."""

import base64
import binascii
import logging
from typing import Optional

from fastapi import APIRouter, File, HTTPException, Request, UploadFile
from slowapi import Limiter

from ...config.constants import HTTPStatus, SecurityConstants
from ...config.settings import AppConfig
from ...domain.models import (
    ApproximateRequest,
    ApproximateResponse,
    ContourModel,
    DecodeRequest,
    DecodeResponse,
    EncodeRequest,
    EncodeResponse,
    TraceResponse,
)
from ...infrastructure.pbm import PbmFormatError, parse_pbm
from ..dependencies import (
    ApproximationServiceDep,
    AuthenticatedDep,
    CodecServiceDep,
    SecurityManagerDep,
)
from ..middleware import rate_limit

logger = logging.getLogger(__name__)


def _unprocessable(detail: str) -> HTTPException:
    return HTTPException(status_code=HTTPStatus.UNPROCESSABLE_ENTITY, detail=detail)


def create_codec_router(config: AppConfig, limiter: Optional[Limiter] = None) -> APIRouter:
    """Create the coding router, rate limited when a limiter is given."""
    router = APIRouter()
    limited = limiter.limit(rate_limit(config)) if limiter else (lambda endpoint: endpoint)

    @router.post("/trace", response_model=TraceResponse)
    @limited
    async def trace(
        request: Request,
        codec_service: CodecServiceDep,
        security_manager: SecurityManagerDep,
        authenticated: AuthenticatedDep,
        file: UploadFile = File(...)
    ) -> TraceResponse:
        """Trace the outer boundaries of an uploaded PBM mask."""
        security_manager.verify_signature(request, await request.body())
        data = await file.read(SecurityConstants.MAX_UPLOAD_BYTES + 1)
        if len(data) > SecurityConstants.MAX_UPLOAD_BYTES:
            raise _unprocessable(f"Upload exceeds {SecurityConstants.MAX_UPLOAD_BYTES} bytes")
        try:
            mask = parse_pbm(data)
        except PbmFormatError as e:
            logger.warning(f"Rejected PBM upload {file.filename}: {e}")
            raise _unprocessable(str(e)) from e

        contours = codec_service.trace(mask)
        logger.info(f"Traced {len(contours)} contours from {file.filename}")
        return TraceResponse(
            width=mask.shape[1],
            height=mask.shape[0],
            contours=[ContourModel.from_contour(c) for c in contours]
        )

    @router.post("/encode", response_model=EncodeResponse)
    @limited
    async def encode(
        request: Request,
        encode_request: EncodeRequest,
        codec_service: CodecServiceDep,
        security_manager: SecurityManagerDep,
        authenticated: AuthenticatedDep
    ) -> EncodeResponse:
        """Code the contours of one image into a container."""
        security_manager.verify_signature(request, await request.body())
        result = codec_service.encode(
            [c.to_contour() for c in encode_request.contours],
            encode_request.width,
            encode_request.height,
            encode_request.oversize_policy
        )
        if not result.success:
            return EncodeResponse(success=False, error=result.error)

        stream = result.stream
        return EncodeResponse(
            success=True,
            bitstream=base64.b64encode(stream.data).decode("ascii"),
            total_bits=stream.total_bits,
            header_bits=stream.header_bits,
            payload_bits=stream.payload_bits,
            contour_bits=stream.contour_bits,
            bits_per_symbol=stream.bits_per_symbol,
            contours=[ContourModel.from_contour(c) for c in stream.contours]
        )

    @router.post("/decode", response_model=DecodeResponse)
    @limited
    async def decode(
        request: Request,
        decode_request: DecodeRequest,
        codec_service: CodecServiceDep,
        security_manager: SecurityManagerDep,
        authenticated: AuthenticatedDep
    ) -> DecodeResponse:
        """Decode a base64 container back into contours."""
        security_manager.verify_signature(request, await request.body())
        try:
            data = base64.b64decode(decode_request.bitstream, validate=True)
        except (binascii.Error, ValueError) as e:
            raise _unprocessable(f"Bitstream is not valid base64: {e}") from e

        result = codec_service.decode(data)
        if not result.success:
            return DecodeResponse(success=False, error=result.error)
        return DecodeResponse(
            success=True,
            width=result.image.width,
            height=result.image.height,
            contours=[ContourModel.from_contour(c) for c in result.image.contours]
        )

    @router.post("/approximate", response_model=ApproximateResponse)
    @limited
    async def approximate(
        request: Request,
        approximate_request: ApproximateRequest,
        approximation_service: ApproximationServiceDep,
        security_manager: SecurityManagerDep,
        authenticated: AuthenticatedDep
    ) -> ApproximateResponse:
        """Rate-distortion optimal approximation of one contour."""
        security_manager.verify_signature(request, await request.body())
        params = approximation_service.params(
            mode=approximate_request.mode,
            lambda_=approximate_request.lambda_,
            d_max=approximate_request.d_max,
            history=approximate_request.history,
            reject_self_intersecting=approximate_request.reject_self_intersecting
        )
        outcome = approximation_service.approximate(approximate_request.contour.to_contour(), params)
        if not outcome.success:
            return ApproximateResponse(success=False, error=outcome.error)

        result = outcome.result
        return ApproximateResponse(
            success=True,
            contour=ContourModel.from_contour(result.contour),
            rate_bits=result.rate_bits,
            ssdd=result.ssdd,
            madd=result.madd,
            objective=result.objective,
            states_expanded=result.states_expanded
        )

    return router
