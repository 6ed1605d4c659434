"""Tests for the HTTP service."""

import base64
import json
from unittest.mock import Mock

import numpy as np
import pytest
from fastapi.testclient import TestClient

from src.application import create_app
from src.config.constants import ErrorMessages
from src.config.settings import AppConfig, RateLimitConfig, SecurityConfig
from src.infrastructure.model_store import ModelStore
from src.infrastructure.pbm import format_pbm
from src.infrastructure.security import sign_body

FIG2 = {"x": 10, "y": 10, "direction": "E", "symbols": "srsllsrlrslrssrlss"}


def encode_body(width=64, height=64, contours=None):
    return {"width": width, "height": height, "contours": contours if contours is not None else [FIG2]}


class TestHealthRoutes:
    """/health and /model."""

    def test_health(self, client):
        """Healthy with a model loaded."""
        response = client.get("/health")
        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "healthy"
        assert data["service"] == "contour-codec"
        assert data["model_loaded"] is True

    def test_model_summary(self, client, codec_model):
        """The summary names the model by hash."""
        response = client.get("/model")
        assert response.status_code == 200
        data = response.json()
        assert data["model_hash"] == f"{codec_model.hash:016x}"
        assert data["end_nodes"] == len(codec_model.tree.end_nodes())

    def test_without_model(self, app_config):
        """Degraded health and 503 for the summary."""
        client = TestClient(create_app(app_config, model_store=ModelStore()))
        assert client.get("/health").json()["status"] == "degraded"
        response = client.get("/model")
        assert response.status_code == 503
        assert response.json()["detail"] == ErrorMessages.MODEL_NOT_LOADED


class TestTraceRoute:
    """/trace uploads."""

    def test_trace(self, client):
        """A square traces to one contour."""
        mask = np.zeros((4, 5), dtype=bool)
        mask[1:3, 1:3] = True
        response = client.post("/trace", files={"file": ("mask.pbm", format_pbm(mask), "image/x-portable-bitmap")})
        assert response.status_code == 200
        data = response.json()
        assert (data["width"], data["height"]) == (5, 4)
        assert data["contours"] == [{"x": 1, "y": 1, "direction": "E", "symbols": "srsrsrs"}]

    def test_bad_mask(self, client):
        """Unparseable uploads are 422."""
        response = client.post("/trace", files={"file": ("mask.pbm", b"P2\n1 1\n0\n", "image/x-portable-bitmap")})
        assert response.status_code == 422


class TestCodingRoutes:
    """/encode and /decode."""

    def test_roundtrip(self, client):
        """The returned bitstream decodes to the request's contours."""
        response = client.post("/encode", json=encode_body())
        assert response.status_code == 200
        encoded = response.json()
        assert encoded["success"] is True
        assert encoded["total_bits"] == encoded["header_bits"] + encoded["payload_bits"]
        assert encoded["contours"] == [FIG2]

        decoded = client.post("/decode", json={"bitstream": encoded["bitstream"]}).json()
        assert decoded["success"] is True
        assert (decoded["width"], decoded["height"]) == (64, 64)
        assert decoded["contours"] == [FIG2]

    def test_empty_image(self, client):
        """No contours still gives a valid container."""
        encoded = client.post("/encode", json=encode_body(8, 8, [])).json()
        assert encoded["success"] is True
        decoded = client.post("/decode", json={"bitstream": encoded["bitstream"]}).json()
        assert decoded["contours"] == []

    def test_contour_outside_image(self, client):
        """Geometry errors are reported in the body."""
        data = client.post("/encode", json=encode_body(8, 8)).json()
        assert data["success"] is False
        assert data["error"]

    @pytest.mark.parametrize("contour", [
        {"x": 1, "y": 1, "direction": "X", "symbols": "s"},
        {"x": 1, "y": 1, "direction": "E", "symbols": "sxs"},
        {"x": -1, "y": 1, "direction": "E", "symbols": "s"},
    ])
    def test_invalid_contours(self, client, contour):
        """Malformed contours are 422."""
        assert client.post("/encode", json=encode_body(contours=[contour])).status_code == 422

    def test_invalid_base64(self, client):
        """Non-base64 bitstreams are 422."""
        assert client.post("/decode", json={"bitstream": "!!!!"}).status_code == 422

    def test_corrupt_bitstream(self, client):
        """Valid base64 of a damaged container is an error result."""
        encoded = client.post("/encode", json=encode_body()).json()["bitstream"]
        data = bytearray(base64.b64decode(encoded))
        data[-1] ^= 0xFF
        response = client.post("/decode", json={"bitstream": base64.b64encode(bytes(data)).decode()})
        assert response.status_code == 200
        assert response.json()["success"] is False


class TestApproximateRoute:
    """/approximate."""

    def test_ssdd(self, client):
        """The result stays inside the corridor and reports its cost."""
        response = client.post("/approximate", json={"contour": FIG2, "lambda": 2.0, "d_max": 2.0})
        assert response.status_code == 200
        data = response.json()
        assert data["success"] is True
        assert data["madd"] <= 2.0
        assert data["objective"] == pytest.approx(data["ssdd"] + 2.0 * data["rate_bits"])
        assert data["contour"]["x"] == 10 and data["contour"]["direction"] == "E"
        assert data["states_expanded"] > 0

    def test_madd(self, client):
        """madd minimizes rate alone."""
        data = client.post("/approximate", json={"contour": FIG2, "mode": "madd", "d_max": 1.0}).json()
        assert data["success"] is True
        assert data["objective"] == pytest.approx(data["rate_bits"])

    @pytest.mark.parametrize("body", [
        {"contour": FIG2, "lambda": -1.0},
        {"contour": FIG2, "d_max": 100.0},
        {"contour": FIG2, "mode": "fastest"},
        {"contour": {**FIG2, "symbols": "s" * 5000}},
    ])
    def test_invalid_requests(self, client, body):
        """Out-of-range settings and oversized contours are 422."""
        assert client.post("/approximate", json=body).status_code == 422


class TestAuthentication:
    """Bearer tokens and body signatures."""

    @pytest.fixture
    def secured_client(self, model_store):
        config = AppConfig(
            security=SecurityConfig(enable_auth=True, enable_request_signature=True),
            rate_limiting=RateLimitConfig(enabled=False),
            api_key="test-api-key",
            signing_secret="test-signing-secret"
        )
        return TestClient(create_app(config, model_store=model_store))

    def signed_post(self, client, path, payload, token="test-api-key", secret="test-signing-secret"):
        body = json.dumps(payload).encode()
        headers = {"Content-Type": "application/json", "X-Request-Signature": sign_body(secret, body)}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return client.post(path, content=body, headers=headers)

    def test_health_is_open(self, secured_client):
        """Health checks need no credentials."""
        assert secured_client.get("/health").status_code == 200

    def test_authorized_request(self, secured_client):
        """Correct token and signature pass."""
        response = self.signed_post(secured_client, "/encode", encode_body())
        assert response.status_code == 200
        assert response.json()["success"] is True

    def test_missing_token(self, secured_client):
        """No token, 401."""
        assert self.signed_post(secured_client, "/encode", encode_body(), token=None).status_code == 401

    def test_wrong_token(self, secured_client):
        """Wrong token, 401."""
        assert self.signed_post(secured_client, "/encode", encode_body(), token="nope").status_code == 401

    def test_bad_signature(self, secured_client):
        """Signed with another secret, 401."""
        response = self.signed_post(secured_client, "/encode", encode_body(), secret="other")
        assert response.status_code == 401
        assert response.json()["detail"] == ErrorMessages.INVALID_REQUEST_SIGNATURE

    def test_missing_signature(self, secured_client):
        """Unsigned bodies, 401."""
        response = secured_client.post(
            "/encode", json=encode_body(), headers={"Authorization": "Bearer test-api-key"}
        )
        assert response.status_code == 401


class TestRateLimiting:

    def test_limit_exceeded(self, model_store):
        """Requests past the per-minute budget are refused."""
        config = AppConfig(rate_limiting=RateLimitConfig(requests_per_minute=2, enabled=True))
        client = TestClient(create_app(config, model_store=model_store))
        codes = [client.post("/encode", json=encode_body(8, 8, [])).status_code for _ in range(3)]
        assert codes == [200, 200, 429]


class TestRouteFunctions:
    """Route coroutines called directly with stub services."""

    async def test_health_check(self):
        """The payload mirrors the service's status."""
        from src.api.routes.health import health_check
        from src.domain.models import HealthStatus

        service = Mock()
        service.get_health_status.return_value = HealthStatus(
            status="healthy", service="contour-codec", timestamp="2024-01-15T12:30:45+00:00", model_loaded=True
        )
        result = await health_check(health_service=service)
        assert result == {
            "status": "healthy",
            "service": "contour-codec",
            "timestamp": "2024-01-15T12:30:45+00:00",
            "model_loaded": True
        }

    async def test_model_info_unavailable(self):
        """No summary, 503."""
        from fastapi import HTTPException
        from src.api.routes.health import get_model_info

        service = Mock()
        service.get_model_info.return_value = None
        with pytest.raises(HTTPException) as exc_info:
            await get_model_info(model_info_service=service)
        assert exc_info.value.status_code == 503
