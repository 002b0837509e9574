"""Model bundle persistence (CXRM01 binary format).

Layout, all integers little-endian:

    magic "CXRM01" (4-byte family tag "CXRM" + 2-digit version)
    u32   model count (always 3)
    per model:
        u8   abnormality tag (0 cardiomegaly, 1 effusion, 2 consolidation)
        f64  threshold
        f64  train accuracy
        f64  test accuracy
        u32  layer count
        per layer:
            u8  layer kind
            per parameter tensor (count fixed by kind: conv2d/dense = 2, others = 0):
                u32 rank, u32 x rank extents, float32 payload
    master text, per abnormality in canonical order:
        u8 tag, u32 byte length + UTF-8 negative sentence,
                u32 byte length + UTF-8 positive sentence

Parameters are stored as float32; loading keeps the quantized values, so a
save/load round trip is bit-stable thereafter.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import neuralnet as nn
from .classifier import ABNORMALITY_TAGS, Abnormality, TrainedModel
from .errors import BadMagic, IncompleteBundle, TruncatedFile, VersionMismatch
from .reportgen import MasterText

MAGIC_FAMILY = b"CXRM"
FORMAT_VERSION = "01"
MAGIC = MAGIC_FAMILY + FORMAT_VERSION.encode("ascii")

_KIND_CODES = {"conv2d": 1, "relu": 2, "maxpool2": 3, "flatten": 4, "dense": 5, "sigmoid": 6}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


@dataclass
class ModelBundle:
    models: dict[str, TrainedModel]  # keyed by abnormality tag
    master_text: MasterText
    format_version: str = FORMAT_VERSION

    def __post_init__(self):
        missing = [t for t in ABNORMALITY_TAGS if t not in self.models]
        if missing:
            raise IncompleteBundle(f"bundle missing models: {', '.join(missing)}")
        for tag, model in self.models.items():
            if model.abnormality.tag != tag:
                raise IncompleteBundle(f"model under key {tag!r} is for {model.abnormality.tag!r}")

    def in_order(self) -> list[TrainedModel]:
        return [self.models[t] for t in ABNORMALITY_TAGS]


def quantize_network(net: nn.Network) -> None:
    """Round all parameters through float32, as persistence does."""
    for p in net.params():
        p[...] = p.astype(np.float32).astype(np.float64)


def _write_tensor(out, arr: np.ndarray) -> None:
    out.write(struct.pack("<I", arr.ndim))
    out.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    out.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", len(ABNORMALITY_TAGS)))
    for idx, model in enumerate(bundle.in_order()):
        out.write(struct.pack("<B", idx))
        out.write(struct.pack("<ddd", model.threshold, model.train_accuracy, model.test_accuracy))
        out.write(struct.pack("<I", len(model.network.layers)))
        for layer in model.network.layers:
            out.write(struct.pack("<B", _KIND_CODES[layer.kind]))
            for p in layer.params():
                _write_tensor(out, p)
    for idx, tag in enumerate(ABNORMALITY_TAGS):
        out.write(struct.pack("<B", idx))
        for sentence in bundle.master_text.sentences[tag]:
            raw = sentence.encode("utf-8")
            out.write(struct.pack("<I", len(raw)))
            out.write(raw)
    Path(path).write_bytes(out.getvalue())


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"need {n} bytes at offset {self.pos}, file ends early")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _read_tensor(r: _Reader) -> np.ndarray:
    (rank,) = r.unpack("<I")
    if rank > 8:
        raise TruncatedFile(f"implausible tensor rank {rank}")
    shape = r.unpack(f"<{rank}I") if rank else ()
    count = int(np.prod(shape)) if shape else 1
    raw = r.take(4 * count)
    return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)


def load_bundle(path: str | Path) -> ModelBundle:
    r = _Reader(Path(path).read_bytes())
    magic = r.take(len(MAGIC))
    if magic[:4] != MAGIC_FAMILY:
        raise BadMagic(f"not a model bundle (magic {magic!r})")
    version = magic[4:].decode("ascii", errors="replace")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"bundle version {version!r}, reader supports {FORMAT_VERSION!r}")
    (n_models,) = r.unpack("<I")
    if n_models != len(ABNORMALITY_TAGS):
        raise IncompleteBundle(f"bundle declares {n_models} models, expected 3")

    models: dict[str, TrainedModel] = {}
    for _ in range(n_models):
        (tag_byte,) = r.unpack("<B")
        if tag_byte >= len(ABNORMALITY_TAGS):
            raise TruncatedFile(f"bad abnormality tag byte {tag_byte}")
        tag = ABNORMALITY_TAGS[tag_byte]
        threshold, train_acc, test_acc = r.unpack("<ddd")
        (n_layers,) = r.unpack("<I")
        layers: list[nn.Layer] = []
        for _ in range(n_layers):
            (kind_code,) = r.unpack("<B")
            kind = _KIND_NAMES.get(kind_code)
            if kind is None:
                raise TruncatedFile(f"unknown layer kind code {kind_code}")
            if kind == "conv2d":
                layers.append(nn.Conv2D(_read_tensor(r), _read_tensor(r)))
            elif kind == "dense":
                layers.append(nn.Dense(_read_tensor(r), _read_tensor(r)))
            elif kind == "relu":
                layers.append(nn.ReLU())
            elif kind == "maxpool2":
                layers.append(nn.MaxPool2())
            elif kind == "flatten":
                layers.append(nn.Flatten())
            else:
                layers.append(nn.Sigmoid())
        models[tag] = TrainedModel(
            abnormality=Abnormality(tag),
            network=nn.Network(layers=layers),
            threshold=threshold,
            train_accuracy=train_acc,
            test_accuracy=test_acc,
        )

    sentences: dict[str, tuple[str, str]] = {}
    for _ in range(len(ABNORMALITY_TAGS)):
        (tag_byte,) = r.unpack("<B")
        if tag_byte >= len(ABNORMALITY_TAGS):
            raise TruncatedFile(f"bad master-text tag byte {tag_byte}")
        pair = []
        for _ in range(2):
            (length,) = r.unpack("<I")
            pair.append(r.take(length).decode("utf-8"))
        sentences[ABNORMALITY_TAGS[tag_byte]] = tuple(pair)
    return ModelBundle(models=models, master_text=MasterText(sentences))
