"""Request/response models and domain result objects."""

from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from .context_tree import ContextTree, TotalSuffixTree
from .geometry import DccContour, GridPoint
from .lossless import EncodedImage, EncodedStream
from .lossy import ApproxResult
from .training import CountTrie
from ..config.constants import (
    ApproximationMode,
    BitstreamFormat,
    HistoryMode,
    OversizePolicy,
    SecurityConstants,
)


class ContourModel(BaseModel):
    """One contour on the wire."""

    x: int = Field(..., ge=0, le=BitstreamFormat.MAX_DIMENSION)
    y: int = Field(..., ge=0, le=BitstreamFormat.MAX_DIMENSION)
    direction: str = Field(..., pattern="^[NESW]$")
    symbols: str = Field(default="", max_length=SecurityConstants.MAX_CONTOUR_SYMBOLS, pattern="^[lsr]*$")

    def to_contour(self) -> DccContour:
        return DccContour(GridPoint(self.x, self.y), self.direction, self.symbols)

    @classmethod
    def from_contour(cls, contour: DccContour) -> "ContourModel":
        return cls(x=contour.start.x, y=contour.start.y, direction=contour.initial.value, symbols=contour.symbols)


class EncodeRequest(BaseModel):
    """Contours of one image to code losslessly."""

    width: int = Field(..., ge=0, le=BitstreamFormat.MAX_DIMENSION)
    height: int = Field(..., ge=0, le=BitstreamFormat.MAX_DIMENSION)
    contours: List[ContourModel] = Field(default_factory=list, max_length=SecurityConstants.MAX_CONTOURS_PER_REQUEST)
    oversize_policy: Optional[OversizePolicy] = None


class EncodeResponse(BaseModel):
    success: bool
    error: Optional[str] = None
    bitstream: Optional[str] = None
    total_bits: int = 0
    header_bits: int = 0
    payload_bits: int = 0
    contour_bits: List[int] = Field(default_factory=list)
    bits_per_symbol: float = 0.0
    contours: List[ContourModel] = Field(default_factory=list)


class DecodeRequest(BaseModel):
    """Base64-encoded container."""

    bitstream: str = Field(..., min_length=1, max_length=SecurityConstants.MAX_UPLOAD_BYTES)


class DecodeResponse(BaseModel):
    success: bool
    error: Optional[str] = None
    width: int = 0
    height: int = 0
    contours: List[ContourModel] = Field(default_factory=list)


class ApproximateRequest(BaseModel):
    """One contour and the rate-distortion settings to approximate it with."""

    contour: ContourModel
    mode: ApproximationMode = ApproximationMode.SSDD
    lambda_: Optional[float] = Field(default=None, ge=0, alias="lambda")
    d_max: Optional[float] = Field(default=None, ge=0, le=64)
    history: Optional[HistoryMode] = None
    reject_self_intersecting: bool = False

    model_config = {"populate_by_name": True}

    @field_validator("contour")
    @classmethod
    def validate_length(cls, v: ContourModel) -> ContourModel:
        if len(v.symbols) > SecurityConstants.MAX_APPROXIMATION_SYMBOLS:
            raise ValueError(f"Contour too long to approximate: {len(v.symbols)} symbols")
        return v


class ApproximateResponse(BaseModel):
    success: bool
    error: Optional[str] = None
    contour: Optional[ContourModel] = None
    rate_bits: float = 0.0
    ssdd: float = 0.0
    madd: float = 0.0
    objective: float = 0.0
    states_expanded: int = 0


class TraceResponse(BaseModel):
    width: int
    height: int
    contours: List[ContourModel]


@dataclass
class CodecModel:
    """Loaded model: pruned tree, file hash and total suffix tree."""
    tree: ContextTree
    hash: int
    tst: TotalSuffixTree
    path: Optional[Path] = None


@dataclass
class TrainingReport:
    """Figures reported after training, all recomputable from the dumps."""
    corpus_size: int
    length: int
    depth: int
    budget: int
    a: float
    beta: float
    peak_nodes: int
    initial_nodes: int
    initial_end_nodes: int
    end_nodes: int
    initial_cost: float
    cost: float
    likelihood_cost: float
    prior_cost: float
    tst_end_nodes: int
    model_hash: Optional[str] = None

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class TrainedModel:
    """Everything one training run produces."""
    statistics: CountTrie
    initial: ContextTree
    tree: ContextTree
    tst: TotalSuffixTree
    report: TrainingReport


@dataclass
class ModelSummary:
    """Description of a pruned model."""
    length: int
    depth: int
    budget: int
    a: float
    beta: float
    end_nodes: int
    max_depth: int
    depth_histogram: Dict[int, int]
    cost: float
    likelihood_cost: float
    prior_cost: float
    tst_end_nodes: int
    information_gain: Dict[str, float] = field(default_factory=dict)
    model_hash: Optional[str] = None

    def to_dict(self) -> Dict:
        result = asdict(self)
        result["depth_histogram"] = {str(k): v for k, v in sorted(self.depth_histogram.items())}
        return result


@dataclass
class EncodeResult:
    """Outcome of coding one image."""
    success: bool
    stream: Optional[EncodedStream] = None
    error: Optional[str] = None

    @classmethod
    def success_result(cls, stream: EncodedStream) -> "EncodeResult":
        return cls(success=True, stream=stream)

    @classmethod
    def error_result(cls, error_message: str) -> "EncodeResult":
        return cls(success=False, error=error_message)


@dataclass
class DecodeResult:
    """Outcome of decoding one container."""
    success: bool
    image: Optional[EncodedImage] = None
    error: Optional[str] = None

    @classmethod
    def success_result(cls, image: EncodedImage) -> "DecodeResult":
        return cls(success=True, image=image)

    @classmethod
    def error_result(cls, error_message: str) -> "DecodeResult":
        return cls(success=False, error=error_message)


@dataclass
class ApproximationResult:
    """Outcome of approximating one contour."""
    success: bool
    result: Optional[ApproxResult] = None
    error: Optional[str] = None

    @classmethod
    def success_result(cls, result: ApproxResult) -> "ApproximationResult":
        return cls(success=True, result=result)

    @classmethod
    def error_result(cls, error_message: str) -> "ApproximationResult":
        return cls(success=False, error=error_message)


@dataclass
class SweepRow:
    """One (contour, parameter) cell of a rate-distortion sweep."""
    contour_id: int
    mode: ApproximationMode
    parameter: float
    bits: Optional[float] = None
    ssdd: Optional[float] = None
    madd: Optional[float] = None
    states_expanded: Optional[int] = None

    @property
    def feasible(self) -> bool:
        return self.bits is not None

    def to_csv_row(self) -> Dict[str, str]:
        infeasible = "infeasible"
        return {
            "contour_id": str(self.contour_id),
            "mode": self.mode.value,
            "lambda_or_dmax": f"{self.parameter:g}",
            "bits": f"{self.bits:.6f}" if self.feasible else infeasible,
            "ssdd": f"{self.ssdd:g}" if self.feasible else infeasible,
            "madd": f"{self.madd:.6f}" if self.feasible else infeasible,
            "states_expanded": str(self.states_expanded) if self.feasible else infeasible,
        }


@dataclass
class HealthStatus:
    """Health check status."""
    status: str
    service: str
    timestamp: str
    model_loaded: bool = False

    @classmethod
    def healthy(cls, service_name: str, model_loaded: bool) -> "HealthStatus":
        return cls(
            status="healthy" if model_loaded else "degraded",
            service=service_name,
            timestamp=datetime.now(timezone.utc).isoformat(),
            model_loaded=model_loaded
        )
