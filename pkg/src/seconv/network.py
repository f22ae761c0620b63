"""Forward-only evaluation of the full denoising network.

Graph layout (standard, depth 27): seven selective blocks of sizes 3..15,
nineteen ``conv(64, 3x3) -> batch_norm -> relu`` groups, a final
``conv(C, 3x3)`` and the masked output composition
``result = x_pre + O * M`` where ``M`` is the noisy map of the preprocessed
input.  Activations are kept in the unit interval between entry and exit.

Convolution layers use cross-correlation (no kernel flip); weights are stored
as ``[out][in][kh][kw]``.

Weight container (``SCVW``)::

    b"SCVW1\\n" | u64 LE metadata length L | L bytes UTF-8 JSON | float32 LE payloads

The payloads are concatenated in layer order, each array row-major, in the
order listed by the layer's ``arrays`` entry in the metadata.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    LayerShapeError,
    ShapeError,
    TruncatedPayloadError,
    ValidationError,
    WeightFormatError,
)
from .imaging import as_image, noisy_map
from .noise import preprocess
from .selective import RestorationState, SeConvBlockSpec, apply_block, default_eta

MAGIC = b"SCVW1\n"
FORMAT_VERSION = 1
DEFAULT_BN_EPSILON = 1e-3
STANDARD_SIZES = (3, 5, 7, 9, 11, 13, 15)

KINDS = ("seconv", "conv", "batch_norm", "relu", "output_compose")


@dataclass
class LayerSpec:
    """One node of the graph.

    ``params`` holds the scalar hyper-parameters (``size``/``eta`` for seconv,
    ``in_channels``/``out_channels``/``kh``/``kw``/``bias`` for conv,
    ``channels``/``epsilon`` for batch_norm); ``weights`` holds the arrays.
    """

    kind: str
    params: dict = field(default_factory=dict)
    weights: dict[str, np.ndarray] = field(default_factory=dict)

    def array_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        p = self.params
        if self.kind == "seconv":
            return [("kernel", (p["size"], p["size"]))]
        if self.kind == "conv":
            shapes = [("weight", (p["out_channels"], p["in_channels"], p["kh"], p["kw"]))]
            if p.get("bias", False):
                shapes.append(("bias", (p["out_channels"],)))
            return shapes
        if self.kind == "batch_norm":
            c = (p["channels"],)
            return [("gamma", c), ("beta", c), ("moving_mean", c), ("moving_var", c)]
        return []

    def to_meta(self) -> dict:
        meta = {"kind": self.kind, **self.params}
        shapes = self.array_shapes()
        if shapes:
            meta["arrays"] = [{"name": n, "shape": list(s)} for n, s in shapes]
        return meta


def seconv_layer(size: int, kernel=None, eta: int | None = None) -> LayerSpec:
    kernel = np.ones((size, size)) if kernel is None else np.asarray(kernel, dtype=np.float64)
    return LayerSpec("seconv", {"size": size, "eta": default_eta(size) if eta is None else eta}, {"kernel": kernel})


def conv_layer(weight, bias=None) -> LayerSpec:
    weight = np.asarray(weight, dtype=np.float64)
    out_c, in_c, kh, kw = weight.shape
    params = {"in_channels": in_c, "out_channels": out_c, "kh": kh, "kw": kw, "bias": bias is not None}
    weights = {"weight": weight}
    if bias is not None:
        weights["bias"] = np.asarray(bias, dtype=np.float64)
    return LayerSpec("conv", params, weights)


def bn_layer(gamma, beta, moving_mean, moving_var, epsilon: float = DEFAULT_BN_EPSILON) -> LayerSpec:
    arrays = {
        "gamma": np.asarray(gamma, dtype=np.float64),
        "beta": np.asarray(beta, dtype=np.float64),
        "moving_mean": np.asarray(moving_mean, dtype=np.float64),
        "moving_var": np.asarray(moving_var, dtype=np.float64),
    }
    return LayerSpec("batch_norm", {"channels": arrays["gamma"].shape[0], "epsilon": float(epsilon)}, arrays)


def relu_layer() -> LayerSpec:
    return LayerSpec("relu")


def output_layer() -> LayerSpec:
    return LayerSpec("output_compose")


@dataclass
class NetworkGraph:
    layers: list[LayerSpec]
    input_channels: int

    def __post_init__(self):
        self.validate()

    @property
    def depth(self) -> int:
        """Number of seconv plus conv layers (a conv/BN/ReLU group counts once)."""
        return sum(layer.kind in ("seconv", "conv") for layer in self.layers)

    def validate(self) -> None:
        """Check kinds, array shapes and channel flow; raises ``LayerShapeError``."""
        if self.input_channels not in (1, 3):
            raise ValidationError(f"input_channels must be 1 or 3, got {self.input_channels}")
        channels = self.input_channels
        n = len(self.layers)
        for i, layer in enumerate(self.layers):
            if layer.kind not in KINDS:
                raise LayerShapeError(i, f"unknown layer kind {layer.kind!r}")
            try:
                shapes = layer.array_shapes()
            except KeyError as exc:
                raise LayerShapeError(i, f"missing parameter {exc.args[0]!r}") from None
            for name, shape in shapes:
                arr = layer.weights.get(name)
                if arr is None:
                    raise LayerShapeError(i, f"missing array {name!r}")
                if arr.shape != shape:
                    raise LayerShapeError(i, f"{name} has shape {arr.shape}, expected {shape}")
            p = layer.params
            if layer.kind == "seconv":
                s = p["size"]
                if s < 3 or s % 2 == 0:
                    raise LayerShapeError(i, f"seconv size must be odd and >= 3, got {s}")
                if int(p.get("eta", 0)) < 1:
                    raise LayerShapeError(i, "seconv eta must be >= 1")
                if channels != self.input_channels:
                    raise LayerShapeError(i, "seconv blocks must operate on image-shaped tensors")
            elif layer.kind == "conv":
                if p["in_channels"] != channels:
                    raise LayerShapeError(i, f"conv expects {p['in_channels']} input channels, graph has {channels}")
                if p["kh"] % 2 == 0 or p["kw"] % 2 == 0:
                    raise LayerShapeError(i, "conv kernel dims must be odd for same padding")
                channels = p["out_channels"]
            elif layer.kind == "batch_norm":
                if p["channels"] != channels:
                    raise LayerShapeError(i, f"batch_norm over {p['channels']} channels, graph has {channels}")
                if not np.all(layer.weights["moving_var"] > 0):
                    raise LayerShapeError(i, "moving_var entries must be > 0")
            elif layer.kind == "output_compose":
                if i != n - 1:
                    raise LayerShapeError(i, "output_compose must be the last layer")
                if channels != self.input_channels:
                    raise LayerShapeError(i, f"output has {channels} channels, input has {self.input_channels}")
        if not self.layers or self.layers[-1].kind != "output_compose":
            raise LayerShapeError(max(n - 1, 0), "graph must end with output_compose")

    def is_standard(self, depth: int = 27) -> bool:
        kinds = [layer.kind for layer in self.layers]
        groups = depth - 8
        expected = ["seconv"] * 7 + ["conv", "batch_norm", "relu"] * groups + ["conv", "output_compose"]
        if kinds != expected:
            return False
        sizes = [layer.params["size"] for layer in self.layers[:7]]
        return sizes == list(STANDARD_SIZES) and all(
            layer.params["out_channels"] == 64 for layer in self.layers[7:-2] if layer.kind == "conv"
        )


def standard_graph(channels: int = 1, depth: int = 27, width: int = 64, rng: np.random.Generator | None = None) -> NetworkGraph:
    """Build the standard graph.

    Selective blocks get all-ones kernels.  With ``rng`` the conv weights are
    He-normal draws, otherwise zero.  BN layers start as identity maps.
    """
    if depth < 9:
        raise ValidationError("depth must be at least 9 (7 selective blocks, one group, one output conv)")

    def conv(out_c, in_c):
        shape = (out_c, in_c, 3, 3)
        w = np.zeros(shape) if rng is None else rng.normal(0.0, np.sqrt(2.0 / (in_c * 9)), shape)
        return conv_layer(w)

    layers = [seconv_layer(s) for s in STANDARD_SIZES]
    in_c = channels
    for _ in range(depth - 8):
        layers += [conv(width, in_c), bn_layer(np.ones(width), np.zeros(width), np.zeros(width), np.ones(width)), relu_layer()]
        in_c = width
    layers += [conv(channels, in_c), output_layer()]
    return NetworkGraph(layers, channels)


# -- layer kernels ---------------------------------------------------------


def conv2d_xcorr(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """Same-padded, stride-1 cross-correlation of ``(H, W, Cin)`` with ``[out, in, kh, kw]``."""
    h, w, cin = x.shape
    out_c, in_c, kh, kw = weight.shape
    if in_c != cin:
        raise ShapeError(f"conv expects {in_c} input channels, got {cin}")
    ph, pw = kh // 2, kw // 2
    padded = np.pad(x, ((ph, ph), (pw, pw), (0, 0)))
    out = np.zeros((h * w, out_c))
    # Fixed tap order keeps the accumulation sequence independent of threading.
    for dy in range(kh):
        for dx in range(kw):
            tap = np.ascontiguousarray(padded[dy : dy + h, dx : dx + w, :]).reshape(h * w, cin)
            out += tap @ np.ascontiguousarray(weight[:, :, dy, dx].T)
    if bias is not None:
        out += bias
    return out.reshape(h, w, out_c)


def batch_norm_inference(x, gamma, beta, mean, var, epsilon: float = DEFAULT_BN_EPSILON) -> np.ndarray:
    """Per-channel ``gamma * (x - mean) / sqrt(var + epsilon) + beta`` over the last axis."""
    var = np.asarray(var, dtype=np.float64)
    if np.any(var <= 0):
        raise ValidationError("batch-norm variance must be positive")
    x = np.asarray(x, dtype=np.float64)
    return gamma * (x - mean) / np.sqrt(var + epsilon) + beta


def relu(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def forward(graph: NetworkGraph, x_noisy) -> np.ndarray:
    """Denoise a raw u8-scale image; returns a float64 ``(H, W, C)`` u8-scale array.

    Clean coordinates (non-zero after preprocessing) are copied through
    exactly: the composition adds ``O * 0`` there.
    """
    x = as_image(x_noisy)
    if x.shape[2] != graph.input_channels:
        raise ShapeError(f"image has {x.shape[2]} channels, graph expects {graph.input_channels}")
    x_pre = preprocess(x)
    m = noisy_map(x_pre)
    h = x_pre / 255.0
    for layer in graph.layers:
        p, wts = layer.params, layer.weights
        if layer.kind == "seconv":
            block = SeConvBlockSpec(p["size"], wts["kernel"], p["eta"])
            h = apply_block(RestorationState.start(h), block).image
        elif layer.kind == "conv":
            h = conv2d_xcorr(h, wts["weight"], wts.get("bias"))
        elif layer.kind == "batch_norm":
            h = batch_norm_inference(h, wts["gamma"], wts["beta"], wts["moving_mean"], wts["moving_var"], p["epsilon"])
        elif layer.kind == "relu":
            h = relu(h)
        elif layer.kind == "output_compose":
            return x_pre + (h * 255.0) * m
    raise ValidationError("graph has no output_compose layer")


# -- SCVW container ----------------------------------------------------------


def dumps(graph: NetworkGraph) -> bytes:
    meta = {
        "format": "SCVW",
        "version": FORMAT_VERSION,
        "orientation": "cross_correlation",
        "weight_layout": "out,in,kh,kw",
        "scale": "unit",
        "dtype": "float32le",
        "input_channels": graph.input_channels,
        "depth": graph.depth,
        "layers": [layer.to_meta() for layer in graph.layers],
    }
    meta_bytes = json.dumps(meta, separators=(",", ":")).encode("utf-8")
    chunks = [MAGIC, struct.pack("<Q", len(meta_bytes)), meta_bytes]
    for layer in graph.layers:
        for name, _ in layer.array_shapes():
            chunks.append(np.ascontiguousarray(layer.weights[name], dtype="<f4").tobytes())
    return b"".join(chunks)


def save_weights(graph: NetworkGraph, path: str | os.PathLike) -> None:
    Path(path).write_bytes(dumps(graph))


_PARAM_KEYS = {
    "seconv": ("size", "eta"),
    "conv": ("in_channels", "out_channels", "kh", "kw", "bias"),
    "batch_norm": ("channels", "epsilon"),
    "relu": (),
    "output_compose": (),
}


def loads(data: bytes) -> NetworkGraph:
    if data[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
    pos = len(MAGIC)
    if len(data) < pos + 8:
        raise TruncatedPayloadError("file ends inside the metadata length field")
    (meta_len,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    if len(data) < pos + meta_len:
        raise TruncatedPayloadError(f"metadata declares {meta_len} bytes, only {len(data) - pos} present")
    try:
        meta = json.loads(data[pos : pos + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WeightFormatError(f"metadata is not valid UTF-8 JSON: {exc}") from None
    pos += meta_len
    if meta.get("format") != "SCVW" or meta.get("version") != FORMAT_VERSION:
        raise WeightFormatError(f"unsupported container {meta.get('format')!r} v{meta.get('version')!r}")
    if meta.get("orientation", "cross_correlation") != "cross_correlation":
        raise WeightFormatError("only cross_correlation orientation is supported; flip kernels before export")

    layers = []
    channels = meta.get("input_channels")
    for i, entry in enumerate(meta.get("layers", [])):
        kind = entry.get("kind")
        if kind not in _PARAM_KEYS:
            raise LayerShapeError(i, f"unknown layer kind {kind!r}")
        missing = [k for k in _PARAM_KEYS[kind] if k not in entry and not (kind == "conv" and k == "bias")]
        if missing:
            raise LayerShapeError(i, f"missing parameters {missing}")
        params = {k: entry[k] for k in _PARAM_KEYS[kind] if k in entry}
        layer = LayerSpec(kind, params)
        expected = layer.array_shapes()
        declared = [(a.get("name"), tuple(a.get("shape", ()))) for a in entry.get("arrays", [])]
        if declared != expected:
            raise LayerShapeError(i, f"declared arrays {declared} do not match {kind} parameters {expected}")
        # Catch channel-flow errors here so they name the layer instead of surfacing as truncation.
        if kind == "conv":
            if params["in_channels"] != channels:
                raise LayerShapeError(i, f"conv expects {params['in_channels']} input channels, graph has {channels}")
            channels = params["out_channels"]
        elif kind == "batch_norm" and params["channels"] != channels:
            raise LayerShapeError(i, f"batch_norm over {params['channels']} channels, graph has {channels}")
        for name, shape in expected:
            count = int(np.prod(shape))
            nbytes = 4 * count
            if len(data) < pos + nbytes:
                raise TruncatedPayloadError(f"layer {i}: payload for {name!r} truncated")
            layer.weights[name] = np.frombuffer(data, dtype="<f4", count=count, offset=pos).reshape(shape).astype(np.float64)
            pos += nbytes
        layers.append(layer)
    if pos != len(data):
        raise WeightFormatError(f"{len(data) - pos} trailing bytes after the last payload")
    graph = NetworkGraph(layers, int(meta.get("input_channels", 0)))
    if "depth" in meta and meta["depth"] != graph.depth:
        raise WeightFormatError(f"declared depth {meta['depth']} but graph has depth {graph.depth}")
    return graph


def load_weights(path: str | os.PathLike) -> NetworkGraph:
    return loads(Path(path).read_bytes())
