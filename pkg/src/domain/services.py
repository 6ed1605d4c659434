"""Use-case services shared by the CLI and the HTTP service."""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Protocol, Sequence, Union

import numpy as np

from .context_tree import ContextTree, TotalSuffixTree, build_tst, kld_prune_delta, prune
from .entropy import CorruptStreamError
from .geometry import ContourError, DccContour, trace_mask
from .lossless import (
    EncodedImage,
    InvalidImageError,
    OversizeContourError,
    decode_image,
    encode_image,
)
from .lossy import InfeasibleApproximationError, RdParams, approximate
from .models import (
    ApproximationResult,
    CodecModel,
    DecodeResult,
    EncodeResult,
    HealthStatus,
    ModelSummary,
    SweepRow,
    TrainedModel,
    TrainingReport,
)
from .training import TrainingCorpus, TrainingError, TreeParams, build_initial_tree, fill_to_full
from ..config.constants import (
    ApproximationMode,
    DefaultValues,
    ErrorMessages,
    HistoryMode,
    OversizePolicy,
)
from ..config.settings import AppConfig, TreeConfig

logger = logging.getLogger(__name__)


class ModelRepository(Protocol):
    """Source of the model used for coding."""

    def get_model(self) -> Optional[CodecModel]:
        """Current model, or None when none is available."""
        ...

    def is_loaded(self) -> bool:
        ...


class TrainingService:
    """Counting, filling and pruning a context tree from a corpus."""

    def __init__(self, config: AppConfig):
        self._config = config

    def train(
        self,
        source: Union[TrainingCorpus, Iterable[DccContour]],
        tree_config: Optional[TreeConfig] = None
    ) -> TrainedModel:
        tree_config = tree_config or self._config.tree
        corpus = source if isinstance(source, TrainingCorpus) else TrainingCorpus.from_contours(source)
        if corpus.size == 0 or corpus.length == 0:
            raise TrainingError(ErrorMessages.EMPTY_CORPUS)

        params = TreeParams.for_length(
            corpus.length,
            a=tree_config.a,
            beta=tree_config.beta,
            depth=tree_config.depth,
            budget=tree_config.budget
        )
        statistics = build_initial_tree(corpus, params)
        initial = ContextTree.from_trie(fill_to_full(statistics))
        tree = prune(initial)
        tst = build_tst(tree)

        report = TrainingReport(
            corpus_size=corpus.size,
            length=corpus.length,
            depth=params.depth,
            budget=params.budget,
            a=params.a,
            beta=params.beta,
            peak_nodes=statistics.peak_nodes,
            initial_nodes=initial.node_count,
            initial_end_nodes=len(initial.end_nodes()),
            end_nodes=len(tree.end_nodes()),
            initial_cost=initial.cost(),
            cost=tree.cost(),
            likelihood_cost=tree.likelihood_cost(),
            prior_cost=tree.prior_cost(),
            tst_end_nodes=len(tst.end_nodes)
        )
        logger.info(
            f"Trained on M={report.corpus_size}, L={report.length}: D={report.depth}, K={report.budget}, "
            f"F(T0)={report.initial_cost:.6f}, F(T*)={report.cost:.6f}, {report.end_nodes} contexts"
        )
        return TrainedModel(statistics=statistics, initial=initial, tree=tree, tst=tst, report=report)


def describe_model(tree: ContextTree, tst: Optional[TotalSuffixTree] = None, model_hash: Optional[int] = None) -> ModelSummary:
    """Summary statistics of a pruned model."""
    tst = tst or build_tst(tree)
    end_nodes = tree.end_nodes()
    gains = {}
    for node in tree.root.iter_preorder():
        if not node.is_leaf and all(child.is_leaf for child in node.children.values()):
            gains[node.context or "<root>"] = -kld_prune_delta(node, tree.length) if tree.length else 0.0

    return ModelSummary(
        length=tree.length,
        depth=tree.params.depth,
        budget=tree.params.budget,
        a=tree.params.a,
        beta=tree.params.beta,
        end_nodes=len(end_nodes),
        max_depth=tree.max_depth,
        depth_histogram=dict(Counter(node.depth for node in end_nodes)),
        cost=tree.cost(),
        likelihood_cost=tree.likelihood_cost(),
        prior_cost=tree.prior_cost(),
        tst_end_nodes=len(tst.end_nodes),
        information_gain=gains,
        model_hash=f"{model_hash:016x}" if model_hash is not None else None
    )


class CodecService:
    """Lossless coding of whole images with the repository's model."""

    def __init__(self, model_repo: ModelRepository, config: AppConfig):
        self._model_repo = model_repo
        self._config = config

    def trace(self, mask: np.ndarray) -> List[DccContour]:
        return trace_mask(mask)

    def encode(
        self,
        contours: Sequence[DccContour],
        width: int,
        height: int,
        oversize_policy: Optional[OversizePolicy] = None
    ) -> EncodeResult:
        model = self._model_repo.get_model()
        if model is None:
            return EncodeResult.error_result(ErrorMessages.MODEL_NOT_LOADED)

        total = sum(len(c) for c in contours)
        if total > self._config.security.max_contour_symbols:
            return EncodeResult.error_result(f"{ErrorMessages.CONTOUR_TOO_LONG}: {total} symbols in total")

        policy = oversize_policy or self._config.codec.oversize_policy
        try:
            image = EncodedImage(width=width, height=height, contours=tuple(contours), model_hash=model.hash)
            stream = encode_image(image, model.tree, policy)
        except (OversizeContourError, InvalidImageError, ContourError) as e:
            logger.warning(f"Encoding rejected: {e}")
            return EncodeResult.error_result(str(e))

        logger.info(f"Encoded {len(stream.contours)} contours into {len(stream.data)} bytes")
        return EncodeResult.success_result(stream)

    def decode(self, data: bytes) -> DecodeResult:
        model = self._model_repo.get_model()
        if model is None:
            return DecodeResult.error_result(ErrorMessages.MODEL_NOT_LOADED)
        try:
            image = decode_image(data, model.tree, model.hash, self._config.security.max_contour_symbols)
        except CorruptStreamError as e:
            logger.warning(f"Decoding failed: {e}")
            return DecodeResult.error_result(str(e))
        return DecodeResult.success_result(image)


class ApproximationService:
    """Lossy approximation and rate-distortion sweeps."""

    def __init__(self, model_repo: ModelRepository, config: AppConfig):
        self._model_repo = model_repo
        self._config = config

    def params(
        self,
        mode: Optional[ApproximationMode] = None,
        lambda_: Optional[float] = None,
        d_max: Optional[float] = None,
        history: Optional[HistoryMode] = None,
        reject_self_intersecting: bool = False
    ) -> RdParams:
        """RdParams with unset values taken from the configuration."""
        rd = self._config.rd
        return RdParams(
            lambda_=rd.lambda_ if lambda_ is None else lambda_,
            d_max=rd.d_max if d_max is None else d_max,
            mode=mode or rd.mode,
            history=history or rd.history,
            reject_self_intersecting=reject_self_intersecting,
            max_states=rd.max_states
        )

    def approximate(self, contour: DccContour, params: RdParams) -> ApproximationResult:
        model = self._model_repo.get_model()
        if model is None:
            return ApproximationResult.error_result(ErrorMessages.MODEL_NOT_LOADED)
        try:
            return ApproximationResult.success_result(approximate(contour, model.tree, model.tst, params))
        except InfeasibleApproximationError as e:
            logger.info(f"Approximation infeasible: {e}")
            return ApproximationResult.error_result(str(e))

    def sweep(
        self,
        contours: Sequence[DccContour],
        mode: ApproximationMode,
        grid: Sequence[float],
        d_max: Optional[float] = None,
        history: Optional[HistoryMode] = None,
        reject_self_intersecting: bool = False,
        threads: Optional[int] = None
    ) -> List[SweepRow]:
        """One row per (contour, grid value), in contour then grid order.

        In ssdd mode the grid holds lambda values and ``d_max`` bounds the
        region; in madd mode the grid holds d_max values.
        """
        if self._model_repo.get_model() is None:
            raise TrainingError(ErrorMessages.MODEL_NOT_LOADED)

        cells = [(index, value) for index in range(len(contours)) for value in grid]

        def run(cell) -> SweepRow:
            index, value = cell
            if mode == ApproximationMode.SSDD:
                params = self.params(mode, lambda_=value, d_max=d_max, history=history,
                                     reject_self_intersecting=reject_self_intersecting)
            else:
                params = self.params(mode, d_max=value, history=history,
                                     reject_self_intersecting=reject_self_intersecting)
            outcome = self.approximate(contours[index], params)
            if not outcome.success:
                return SweepRow(contour_id=index, mode=mode, parameter=value)
            result = outcome.result
            return SweepRow(
                contour_id=index,
                mode=mode,
                parameter=value,
                bits=result.rate_bits,
                ssdd=result.ssdd,
                madd=result.madd,
                states_expanded=result.states_expanded
            )

        workers = max(1, threads or self._config.threads)
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(run, cells))
        infeasible = sum(1 for row in rows if not row.feasible)
        logger.info(f"Swept {len(contours)} contours over {len(grid)} values ({infeasible} infeasible cells)")
        return rows


class HealthService:
    """Service for health checks."""

    def __init__(self, model_repo: ModelRepository, service_name: str = DefaultValues.SERVICE_NAME):
        self._model_repo = model_repo
        self._service_name = service_name

    def get_health_status(self) -> HealthStatus:
        return HealthStatus.healthy(self._service_name, self._model_repo.is_loaded())


class ModelInfoService:
    """Service for model information."""

    def __init__(self, model_repo: ModelRepository):
        self._model_repo = model_repo

    def get_model_info(self) -> Optional[ModelSummary]:
        model = self._model_repo.get_model()
        if model is None:
            return None
        return describe_model(model.tree, model.tst, model.hash)
