"""Layered binary convolutional networks over bit images.

A network description is a grid input plus a sequence of layers of three
kinds: convolution with a step activation (each filter position is a
threshold unit over its window), max-pooling (which over bits is a plain
disjunction), and dense layers of threshold units.  There is no padding:
windows are placed at stride offsets and must fit; pixels a stride pattern
never covers are reported at load time, not silently padded away.

`forward_eval` is the reference evaluator.  It computes every wire bit
exactly, with real weights interpreted at their printed decimal value, so
it can serve as an oracle for the compiled form.  `compile_network` builds
one canonical diagram per network output over the input pixels: every
neuron is compiled locally over placeholder variables and then composed
with the diagrams of its input wires, pooling wires are disjunctions, and
identical (neuron, input-wires) compositions are shared through a cache.

Model files are JSON; images are ASCII PBM bitmaps (see `formats`).
Dense weights run over the flattened input in channel-major raster order:
channel, then row, then column.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import IO, Sequence, Union

from .neuron import LinearThresholdUnit, compile_pseudo, exact_decimal, quantize
from .obdd import BudgetExceededError, Manager, NodeRef


class ShapeError(ValueError):
    """A layer's declared shape does not match what feeds it."""


@dataclass(frozen=True)
class ConvFilter:
    """One filter: weights indexed [channel][row][col], plus a bias."""

    weights: tuple[tuple[tuple[float, ...], ...], ...]
    bias: float

    def __post_init__(self):
        object.__setattr__(
            self,
            "weights",
            tuple(tuple(tuple(float(v) for v in row) for row in ch) for ch in self.weights),
        )
        object.__setattr__(self, "bias", float(self.bias))
        if not self.weights or not self.weights[0] or not self.weights[0][0]:
            raise ValueError("filter must be nonempty")
        fh = len(self.weights[0])
        fw = len(self.weights[0][0])
        for ch in self.weights:
            if len(ch) != fh or any(len(row) != fw for row in ch):
                raise ValueError("ragged filter weights")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (len(self.weights), len(self.weights[0]), len(self.weights[0][0]))

    def flat_weights(self) -> tuple[float, ...]:
        return tuple(v for ch in self.weights for row in ch for v in row)


@dataclass(frozen=True)
class ConvStep:
    filters: tuple[ConvFilter, ...]
    stride: int

    def __post_init__(self):
        if not self.filters:
            raise ValueError("convolution needs at least one filter")
        if self.stride < 1:
            raise ValueError("stride must be positive")
        first = self.filters[0].shape
        if any(f.shape != first for f in self.filters):
            raise ValueError("all filters in a layer must share one shape")


@dataclass(frozen=True)
class MaxPoolOr:
    window: tuple[int, int]
    stride: int

    def __post_init__(self):
        if len(self.window) != 2 or min(self.window) < 1:
            raise ValueError("window must be a positive (height, width) pair")
        if self.stride < 1:
            raise ValueError("stride must be positive")


@dataclass(frozen=True)
class DenseStep:
    """Threshold units over the flattened previous layer: weights[out][in]."""

    weights: tuple[tuple[float, ...], ...]
    biases: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "weights", tuple(tuple(float(v) for v in row) for row in self.weights)
        )
        object.__setattr__(self, "biases", tuple(float(b) for b in self.biases))
        if not self.weights:
            raise ValueError("dense layer needs at least one unit")
        width = len(self.weights[0])
        if any(len(row) != width for row in self.weights):
            raise ValueError("ragged dense weights")
        if len(self.biases) != len(self.weights):
            raise ValueError("one bias per dense unit required")


Layer = Union[ConvStep, MaxPoolOr, DenseStep]

# a wire shape is ("grid", channels, height, width) or ("flat", width)
Shape = tuple


def _window_count(size: int, window: int, stride: int, what: str, layer: int):
    if window > size:
        raise ShapeError(
            "layer %d: %s window %d exceeds input size %d" % (layer, what, window, size)
        )
    steps = (size - window) // stride + 1
    covered = (steps - 1) * stride + window
    return steps, size - covered


def _trace(input_shape: tuple[int, int], layers: Sequence[Layer]):
    """Shapes after each layer, plus human-readable coverage notes."""
    shapes: list[Shape] = [("grid", 1, input_shape[0], input_shape[1])]
    notes: list[str] = []
    for idx, layer in enumerate(layers, start=1):
        shape = shapes[-1]
        if isinstance(layer, ConvStep):
            if shape[0] != "grid":
                raise ShapeError("layer %d: convolution over a flat input" % idx)
            _, c, h, w = shape
            fc, fh, fw = layer.filters[0].shape
            if fc != c:
                raise ShapeError(
                    "layer %d: filters expect %d channels, input has %d" % (idx, fc, c)
                )
            oh, left_h = _window_count(h, fh, layer.stride, "filter", idx)
            ow, left_w = _window_count(w, fw, layer.stride, "filter", idx)
            if left_h or left_w:
                notes.append(
                    "layer %d leaves %d rows and %d columns uncovered (no padding)"
                    % (idx, left_h, left_w)
                )
            shapes.append(("grid", len(layer.filters), oh, ow))
        elif isinstance(layer, MaxPoolOr):
            if shape[0] != "grid":
                raise ShapeError("layer %d: pooling over a flat input" % idx)
            _, c, h, w = shape
            ph, pw = layer.window
            oh, left_h = _window_count(h, ph, layer.stride, "pool window", idx)
            ow, left_w = _window_count(w, pw, layer.stride, "pool window", idx)
            if left_h or left_w:
                notes.append(
                    "layer %d leaves %d rows and %d columns uncovered (no padding)"
                    % (idx, left_h, left_w)
                )
            shapes.append(("grid", c, oh, ow))
        elif isinstance(layer, DenseStep):
            width = _flat_width(shape)
            if len(layer.weights[0]) != width:
                raise ShapeError(
                    "layer %d: dense units expect %d inputs, previous layer yields %d"
                    % (idx, len(layer.weights[0]), width)
                )
            shapes.append(("flat", len(layer.weights)))
        else:
            raise ShapeError("layer %d: unknown layer type %r" % (idx, type(layer)))
    return shapes, notes


def _flat_width(shape: Shape) -> int:
    if shape[0] == "flat":
        return shape[1]
    return shape[1] * shape[2] * shape[3]


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple[int, int]
    layers: tuple[Layer, ...]
    coverage_notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        h, w = self.input_shape
        if h < 1 or w < 1:
            raise ShapeError("input grid must be at least 1x1")
        shapes, notes = _trace(self.input_shape, self.layers)
        object.__setattr__(self, "coverage_notes", tuple(notes))
        object.__setattr__(self, "_shapes", tuple(shapes))

    @property
    def shapes(self) -> tuple[Shape, ...]:
        """Wire shapes from the input grid through every layer."""
        return self._shapes  # type: ignore[attr-defined]

    @property
    def output_count(self) -> int:
        return _flat_width(self.shapes[-1])

    @property
    def pixel_count(self) -> int:
        return self.input_shape[0] * self.input_shape[1]

    def covered_pixels(self) -> set[int]:
        """Raster indices of input pixels read by the first layer."""
        h, w = self.input_shape
        if not self.layers or isinstance(self.layers[0], DenseStep):
            return set(range(h * w))
        layer = self.layers[0]
        if isinstance(layer, ConvStep):
            _, fh, fw = layer.filters[0].shape
            stride = layer.stride
        else:
            fh, fw = layer.window
            stride = layer.stride
        covered = set()
        for r0 in range(0, h - fh + 1, stride):
            for c0 in range(0, w - fw + 1, stride):
                for i in range(fh):
                    for j in range(fw):
                        covered.add((r0 + i) * w + (c0 + j))
        return covered


# ------------------------------------------------------------ JSON format


def load_spec(text: str) -> NetworkSpec:
    """Parse and validate a JSON model description."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError("model file is not valid JSON: %s" % e)
    if not isinstance(doc, dict) or "input" not in doc or "layers" not in doc:
        raise ValueError("model file needs 'input' and 'layers' fields")
    grid = doc["input"]
    try:
        input_shape = (int(grid["h"]), int(grid["w"]))
    except (TypeError, KeyError):
        raise ValueError("'input' must carry integer fields h and w")
    layers: list[Layer] = []
    for idx, entry in enumerate(doc["layers"], start=1):
        kind = entry.get("type")
        if kind == "conv_step":
            filters = tuple(
                ConvFilter(tuple(tuple(tuple(row) for row in ch) for ch in f["weights"]), f["bias"])
                for f in entry["filters"]
            )
            layers.append(ConvStep(filters, int(entry["stride"])))
        elif kind == "maxpool_or":
            layers.append(
                MaxPoolOr(tuple(int(v) for v in entry["window"]), int(entry["stride"]))
            )
        elif kind == "dense_step":
            layers.append(
                DenseStep(
                    tuple(tuple(row) for row in entry["weights"]),
                    tuple(entry["bias"]),
                )
            )
        else:
            raise ValueError("layer %d has unknown type %r" % (idx, kind))
    spec = NetworkSpec(input_shape, tuple(layers))
    declared = doc.get("outputs")
    if declared is not None and int(declared) != spec.output_count:
        raise ShapeError(
            "model declares %d outputs but the layers yield %d"
            % (int(declared), spec.output_count)
        )
    return spec


def read_spec(src: Union[str, "IO[str]"]) -> NetworkSpec:
    if hasattr(src, "read"):
        return load_spec(src.read())  # type: ignore[union-attr]
    with open(src, "r") as fp:
        return load_spec(fp.read())


# ---------------------------------------------------------------- evaluate


@lru_cache(maxsize=None)
def _exact_filter(f: ConvFilter):
    flat = tuple(exact_decimal(v) for v in f.flat_weights())
    return flat, exact_decimal(f.bias)


@lru_cache(maxsize=None)
def _exact_dense(layer: DenseStep):
    return tuple(
        (tuple(exact_decimal(v) for v in row), exact_decimal(b))
        for row, b in zip(layer.weights, layer.biases)
    )


def forward_eval(spec: NetworkSpec, x: Sequence[int]) -> tuple[int, ...]:
    """Bit-exact reference forward pass over one image (raster bit order)."""
    h, w = spec.input_shape
    if len(x) != h * w:
        raise ValueError("image has %d bits, expected %d" % (len(x), h * w))
    if any(b not in (0, 1) for b in x):
        raise ValueError("image bits must be 0 or 1")
    wires: list = [[[x[r * w + c] for c in range(w)] for r in range(h)]]
    for layer in spec.layers:
        if isinstance(layer, ConvStep):
            fc, fh, fw = layer.filters[0].shape
            ih, iw = len(wires[0]), len(wires[0][0])
            out = []
            for f in layer.filters:
                flat, bias = _exact_filter(f)
                grid = []
                for r0 in range(0, ih - fh + 1, layer.stride):
                    row = []
                    for c0 in range(0, iw - fw + 1, layer.stride):
                        total = bias
                        k = 0
                        for ch in range(fc):
                            plane = wires[ch]
                            for i in range(fh):
                                line = plane[r0 + i]
                                for j in range(fw):
                                    if line[c0 + j]:
                                        total += flat[k]
                                    k += 1
                        row.append(1 if total >= 0 else 0)
                    grid.append(row)
                out.append(grid)
            wires = out
        elif isinstance(layer, MaxPoolOr):
            ph, pw = layer.window
            ih, iw = len(wires[0]), len(wires[0][0])
            out = []
            for plane in wires:
                grid = []
                for r0 in range(0, ih - ph + 1, layer.stride):
                    row = []
                    for c0 in range(0, iw - pw + 1, layer.stride):
                        row.append(
                            1
                            if any(
                                plane[r0 + i][c0 + j]
                                for i in range(ph)
                                for j in range(pw)
                            )
                            else 0
                        )
                    grid.append(row)
                out.append(grid)
            wires = out
        else:  # DenseStep
            flat = _flatten_wires(wires)
            units = _exact_dense(layer)
            wires = [
                1 if sum((wt for wt, b in zip(row, flat) if b), start=Fraction(0)) + bias >= 0 else 0
                for row, bias in units
            ]
    return tuple(_flatten_wires(wires))


def _flatten_wires(wires) -> list:
    if wires and isinstance(wires[0], list):
        return [v for plane in wires for row in plane for v in row]
    return list(wires)


# ----------------------------------------------------------------- compile


@dataclass
class CompiledNetwork:
    """Per-output diagrams over the input pixels, plus the pixel order used."""

    manager: Manager
    outputs: tuple[NodeRef, ...]
    input_order: tuple[int, ...]
    spec: NetworkSpec

    def evaluate(self, x: Sequence[int]) -> tuple[int, ...]:
        if len(x) != len(self.input_order):
            raise ValueError("image width mismatch")
        mapped = [x[p] for p in self.input_order]
        return tuple(self.manager.evaluate(f, mapped) for f in self.outputs)


def _neuron_permutation(policy, arity: int):
    if policy in (None, "identity"):
        return None
    if policy == "reverse":
        return tuple(reversed(range(arity)))
    raise ValueError("unknown neuron order policy %r" % policy)


def compile_network(
    spec: NetworkSpec,
    quantize_digits: int,
    order_policy="raster",
    round_mode: str = "truncate",
    node_budget: int | None = None,
    neuron_order="identity",
    manager: Manager | None = None,
) -> CompiledNetwork:
    """Compile every network output to a canonical diagram over the pixels.

    Each neuron is quantized at ``quantize_digits`` decimal digits, compiled
    locally over placeholder variables, and composed with its input wires.
    ``order_policy`` fixes which pixel each diagram variable stands for:
    ``"raster"`` (row-major, the default) or an explicit permutation of the
    pixel indices.  ``neuron_order`` only permutes the placeholder order
    inside each local neuron compilation and never changes the result.
    Passing a ``manager`` compiles into it (so separate compilations become
    handle-comparable); otherwise a fresh one is created with the budget.

    Raises `BudgetExceededError`, annotated with how far compilation got,
    when the node budget is exhausted.
    """
    pixels = spec.pixel_count
    if order_policy == "raster" or order_policy is None:
        input_order = tuple(range(pixels))
    else:
        input_order = tuple(order_policy)
        if sorted(input_order) != list(range(pixels)):
            raise ValueError("order policy must be a permutation of the pixels")
    if manager is None:
        manager = Manager(pixels, node_budget=node_budget)
    elif manager.num_vars != pixels:
        raise ValueError(
            "manager has %d variables, the input grid has %d pixels"
            % (manager.num_vars, pixels)
        )
    if node_budget is None:
        node_budget = manager.node_budget
    var_of_pixel = [0] * pixels
    for var, pixel in enumerate(input_order):
        var_of_pixel[pixel] = var

    h, w = spec.input_shape
    try:
        wires: list = [
            [
                [manager.literal(var_of_pixel[r * w + c]) for c in range(w)]
                for r in range(h)
            ]
        ]
    except BudgetExceededError as e:
        raise BudgetExceededError("%s while building the input wires" % e) from e
    share: dict = {}

    def compose_unit(neuron_ref: NodeRef, perm, inputs: list[NodeRef], tag) -> NodeRef:
        subs = [inputs[p] for p in perm] if perm else inputs
        key = (tag, tuple(s.i for s in subs))
        out = share.get(key)
        if out is None:
            out = manager.compose(neuron_ref, subs)
            share[key] = out
        return out

    for idx, layer in enumerate(spec.layers, start=1):
        try:
            if isinstance(layer, ConvStep):
                fc, fh, fw = layer.filters[0].shape
                ih, iw = len(wires[0]), len(wires[0][0])
                arity = fc * fh * fw
                perm = _neuron_permutation(neuron_order, arity)
                out = []
                for f_idx, f in enumerate(layer.filters):
                    unit = quantize(
                        LinearThresholdUnit(f.flat_weights(), f.bias),
                        quantize_digits,
                        round_mode,
                    )
                    pmgr = Manager(arity, node_budget=node_budget)
                    neuron_ref = compile_pseudo(unit, pmgr, order=perm)
                    grid = []
                    for r0 in range(0, ih - fh + 1, layer.stride):
                        row = []
                        for c0 in range(0, iw - fw + 1, layer.stride):
                            window = [
                                wires[ch][r0 + i][c0 + j]
                                for ch in range(fc)
                                for i in range(fh)
                                for j in range(fw)
                            ]
                            row.append(
                                compose_unit(neuron_ref, perm, window, (idx, f_idx))
                            )
                        grid.append(row)
                    out.append(grid)
                wires = out
            elif isinstance(layer, MaxPoolOr):
                ph, pw = layer.window
                ih, iw = len(wires[0]), len(wires[0][0])
                out = []
                for plane in wires:
                    grid = []
                    for r0 in range(0, ih - ph + 1, layer.stride):
                        row = []
                        for c0 in range(0, iw - pw + 1, layer.stride):
                            acc = manager.false
                            for i in range(ph):
                                for j in range(pw):
                                    acc = acc | plane[r0 + i][c0 + j]
                            row.append(acc)
                        grid.append(row)
                    out.append(grid)
                wires = out
            else:  # DenseStep
                flat = _flatten_wires(wires)
                arity = len(flat)
                perm = _neuron_permutation(neuron_order, arity)
                out_flat = []
                for u_idx, (row, bias) in enumerate(zip(layer.weights, layer.biases)):
                    unit = quantize(
                        LinearThresholdUnit(row, bias), quantize_digits, round_mode
                    )
                    pmgr = Manager(arity, node_budget=node_budget)
                    neuron_ref = compile_pseudo(unit, pmgr, order=perm)
                    out_flat.append(
                        compose_unit(neuron_ref, perm, flat, (idx, u_idx))
                    )
                wires = out_flat
        except BudgetExceededError as e:
            raise BudgetExceededError(
                "%s while compiling layer %d of %d (%s)"
                % (e, idx, len(spec.layers), type(layer).__name__)
            ) from e

    return CompiledNetwork(manager, tuple(_flatten_wires(wires)), input_order, spec)
