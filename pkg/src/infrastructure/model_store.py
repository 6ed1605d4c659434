"""Binary model files (CTM1), statistics dumps (CTS1) and the model repository."""

import hashlib
import logging
import struct
from pathlib import Path
from typing import List, Optional, Union

from .contour_io import atomic_write
from ..config.constants import ModelFormat
from ..domain.context_tree import ContextTree, ContextTreeError, build_tst
from ..domain.geometry import SYMBOLS
from ..domain.models import CodecModel
from ..domain.training import CountNode, CountTrie, TrainingError, TreeParams

logger = logging.getLogger(__name__)

_PARAMS = struct.Struct(">BIIdQI")
_MODEL_NODE = struct.Struct(">BBdddB")
_STATS_HEADER = struct.Struct(">QI")
_STATS_NODE = struct.Struct(">BBddd")


class ModelFileError(ValueError):
    """Unreadable, truncated or inconsistent model file."""
    pass


def model_hash(data: bytes) -> int:
    """First eight bytes of the SHA-256 of a serialized model."""
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "big")


def _label(node: CountNode) -> int:
    return SYMBOLS.index(node.context[-1]) if node.context else ModelFormat.ROOT_LABEL


def serialize_model(tree: ContextTree) -> bytes:
    params = tree.params
    nodes = list(tree.root.iter_preorder())
    parts = [
        ModelFormat.MODEL_MAGIC,
        _PARAMS.pack(
            params.depth,
            params.budget,
            int(round(params.a * ModelFormat.PRIOR_WEIGHT_SCALE)),
            params.beta,
            tree.length,
            len(nodes)
        )
    ]
    for node in nodes:
        parts.append(_MODEL_NODE.pack(node.depth, _label(node), *node.counts, 0 if node.is_leaf else 1))
    return b"".join(parts)


def _rebuild(records, root_counts) -> CountNode:
    """Preorder (depth, label, counts) records back into a trie."""
    root = CountNode("", root_counts)
    path: List[CountNode] = [root]
    for depth, label, counts in records:
        if depth < 1 or depth > len(path) or label >= len(SYMBOLS):
            raise ModelFileError(f"Inconsistent node record: depth {depth}, label {label}")
        del path[depth:]
        parent = path[-1]
        symbol = SYMBOLS[label]
        if symbol in parent.children:
            raise ModelFileError(f"Duplicate node {parent.context + symbol!r}")
        node = CountNode(parent.context + symbol, counts)
        parent.children[symbol] = node
        path.append(node)
    return root


def parse_model(data: bytes) -> ContextTree:
    magic = ModelFormat.MODEL_MAGIC
    if data[:len(magic)] != magic:
        raise ModelFileError(f"Not a model file: magic {data[:4]!r}")
    offset = len(magic)
    try:
        depth, budget, a_millis, beta, length, count = _PARAMS.unpack_from(data, offset)
        offset += _PARAMS.size
        if len(data) != offset + count * _MODEL_NODE.size or count < 1:
            raise ModelFileError(f"Model file size does not match its {count} node records")
        records = []
        root_counts = None
        for index in range(count):
            node_depth, label, l, s, r, _ = _MODEL_NODE.unpack_from(data, offset + index * _MODEL_NODE.size)
            if index == 0:
                if node_depth != 0 or label != ModelFormat.ROOT_LABEL:
                    raise ModelFileError("First model record must be the root")
                root_counts = (l, s, r)
            else:
                records.append((node_depth, label, (l, s, r)))
        params = TreeParams(depth=depth, budget=budget, a=a_millis / ModelFormat.PRIOR_WEIGHT_SCALE, beta=beta)
        return ContextTree(_rebuild(records, root_counts), params, length)
    except struct.error as e:
        raise ModelFileError(f"Truncated model file: {e}") from e
    except (ContextTreeError, TrainingError) as e:
        raise ModelFileError(f"Invalid model: {e}") from e


def model_from_tree(tree: ContextTree, path: Optional[Path] = None) -> CodecModel:
    """Wrap an in-memory tree the same way load_model wraps a file."""
    return CodecModel(tree=tree, hash=model_hash(serialize_model(tree)), tst=build_tst(tree), path=path)


def save_model(path: Union[str, Path], tree: ContextTree) -> int:
    """Write a model file atomically and return its hash."""
    data = serialize_model(tree)
    atomic_write(path, data)
    logger.info(f"Saved model with {len(tree.end_nodes())} contexts to {path}")
    return model_hash(data)


def load_model(path: Union[str, Path]) -> CodecModel:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ModelFileError(f"Cannot read model {path}: {e}") from e
    tree = parse_model(data)
    logger.info(f"Loaded model {path} ({len(tree.end_nodes())} contexts, L={tree.length})")
    return CodecModel(tree=tree, hash=model_hash(data), tst=build_tst(tree), path=path)


def serialize_stats(trie: CountTrie) -> bytes:
    """Canonical binary dump of a count trie: preorder (depth, label, three counts)."""
    nodes = list(trie.root.iter_preorder())
    parts = [ModelFormat.STATS_MAGIC, _STATS_HEADER.pack(trie.length, len(nodes))]
    parts.extend(_STATS_NODE.pack(node.depth, _label(node), *node.counts) for node in nodes)
    return b"".join(parts)


def parse_stats(data: bytes, params: TreeParams) -> CountTrie:
    magic = ModelFormat.STATS_MAGIC
    if data[:len(magic)] != magic:
        raise ModelFileError(f"Not a statistics dump: magic {data[:4]!r}")
    try:
        length, count = _STATS_HEADER.unpack_from(data, len(magic))
        offset = len(magic) + _STATS_HEADER.size
        if len(data) != offset + count * _STATS_NODE.size or count < 1:
            raise ModelFileError(f"Statistics dump size does not match its {count} node records")
        rows = [_STATS_NODE.unpack_from(data, offset + i * _STATS_NODE.size) for i in range(count)]
    except struct.error as e:
        raise ModelFileError(f"Truncated statistics dump: {e}") from e
    root = _rebuild([(d, label, (l, s, r)) for d, label, l, s, r in rows[1:]], rows[0][2:])
    return CountTrie(root=root, params=params, length=length)


def format_stats_text(trie: CountTrie) -> str:
    """Human-readable dump, one node per line, for diffing."""
    lines = [f"# L={trie.length} D={trie.params.depth} K={trie.params.budget}"]
    for node in trie.root.iter_preorder():
        name = node.context or "<root>"
        counts = " ".join(f"{c:.6g}" for c in node.counts)
        lines.append(f"{node.depth}\t{name}\t{counts}")
    return "\n".join(lines) + "\n"


class ModelStore:
    """Repository holding the model the service codes with."""

    def __init__(self, model_path: Optional[Union[str, Path]] = None):
        self._model_path = Path(model_path) if model_path else None
        self._model: Optional[CodecModel] = None

    def get_model(self) -> Optional[CodecModel]:
        """Load lazily; returns None when no usable model is configured."""
        if self._model is None and self._model_path is not None:
            try:
                self._model = load_model(self._model_path)
            except ModelFileError as e:
                logger.error(f"Model unavailable: {e}")
                return None
        return self._model

    def set_model(self, model: CodecModel) -> None:
        self._model = model

    def is_loaded(self) -> bool:
        return self.get_model() is not None
