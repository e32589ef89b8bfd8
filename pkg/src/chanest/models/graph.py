"""Layer graphs over the tensor core: shape checking, initialization, forward pass."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from chanest._rng import as_rng
from chanest.errors import ShapeError
from chanest.tensor import Tensor, add_n, bilinear_resize, conv2d, relu, transposed_conv2d

LAYER_OPS = ("conv", "relu", "add_n", "bilinear_resize", "transposed_conv")
INPUT = "input"


@dataclass(frozen=True)
class Layer:
    name: str
    op: str
    inputs: tuple[str, ...]
    kernel: tuple[int, ...] | None = None  # (kh, kw, c_in, c_out) for parameterized ops
    stride: tuple[int, int] | None = None
    target: tuple[int, int] | None = None


@dataclass(frozen=True)
class ModelSpec:
    """Ordered, acyclic layer graph.  The last layer is the output.

    Shapes are per sample, ``(h, w, c)``; a leading batch axis is allowed at
    run time.
    """

    name: str
    layers: tuple[Layer, ...]
    in_shape: tuple[int, int, int]
    out_shape: tuple[int, int, int]
    n_filter: int
    shapes: dict[str, tuple[int, int, int]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "shapes", _infer_shapes(self))
        if self.shapes[self.layers[-1].name] != tuple(self.out_shape):
            raise ShapeError(f"{self.name}: graph output does not match out_shape",
                             self.shapes[self.layers[-1].name], self.out_shape)

    @property
    def output(self) -> str:
        return self.layers[-1].name

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        """Parameter name -> shape, in layer order (kernel then bias)."""
        out = {}
        for layer in self.layers:
            if layer.kernel is not None:
                out[f"{layer.name}.kernel"] = layer.kernel
                out[f"{layer.name}.bias"] = (layer.kernel[-1],)
        return out

    def kernel_names(self) -> list[str]:
        return [n for n in self.param_shapes() if n.endswith(".kernel")]


def _infer_shapes(spec: ModelSpec) -> dict[str, tuple[int, int, int]]:
    shapes = {INPUT: tuple(spec.in_shape)}
    for layer in spec.layers:
        if layer.op not in LAYER_OPS:
            raise ShapeError(f"{layer.name}: unknown op {layer.op!r}")
        if layer.name in shapes:
            raise ShapeError(f"duplicate layer name {layer.name!r}")
        missing = [i for i in layer.inputs if i not in shapes]
        if missing:
            # inputs must be produced earlier, which also rules out cycles
            raise ShapeError(f"{layer.name}: inputs {missing} are not defined before this layer")
        ins = [shapes[i] for i in layer.inputs]
        h, w, c = ins[0]
        if layer.op == "conv":
            if layer.kernel[2] != c:
                raise ShapeError(f"{layer.name}: kernel c_in does not match input", layer.kernel, ins[0])
            shapes[layer.name] = (h, w, layer.kernel[3])
        elif layer.op == "transposed_conv":
            if layer.kernel[2] != c:
                raise ShapeError(f"{layer.name}: kernel c_in does not match input", layer.kernel, ins[0])
            shapes[layer.name] = (*layer.target, layer.kernel[3])
        elif layer.op == "bilinear_resize":
            shapes[layer.name] = (*layer.target, c)
        elif layer.op == "add_n":
            for s in ins[1:]:
                if s != ins[0]:
                    raise ShapeError(f"{layer.name}: add_n operands differ", ins[0], s)
            shapes[layer.name] = ins[0]
        else:
            shapes[layer.name] = ins[0]
    return shapes


def init_weights(spec: ModelSpec, seed=None, dtype=np.float64) -> dict[str, np.ndarray]:
    """He-uniform kernels (bound sqrt(6 / fan_in)) and zero biases."""
    rng = as_rng(seed)
    weights = {}
    for name, shape in spec.param_shapes().items():
        if name.endswith(".kernel"):
            fan_in = shape[0] * shape[1] * shape[2]
            bound = np.sqrt(6.0 / fan_in)
            weights[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
        else:
            weights[name] = np.zeros(shape, dtype=dtype)
    return weights


def zero_weights(spec: ModelSpec, dtype=np.float64) -> dict[str, np.ndarray]:
    return {n: np.zeros(s, dtype=dtype) for n, s in spec.param_shapes().items()}


def check_weights(spec: ModelSpec, weights: Mapping[str, object]) -> None:
    expected = spec.param_shapes()
    if set(weights) != set(expected):
        missing = sorted(set(expected) - set(weights))
        extra = sorted(set(weights) - set(expected))
        raise ShapeError(f"{spec.name}: weight set mismatch (missing {missing}, unexpected {extra})")
    for name, shape in expected.items():
        got = np.shape(weights[name].data if isinstance(weights[name], Tensor) else weights[name])
        if tuple(got) != shape:
            raise ShapeError(f"{spec.name}: weight {name!r} has the wrong shape", got, shape)


def count_parameters(spec: ModelSpec) -> int:
    return int(sum(np.prod(s) for s in spec.param_shapes().values()))


def forward(spec: ModelSpec, weights: Mapping[str, object], x) -> Tensor:
    """Evaluate the graph; ``weights`` may hold Tensors (for training) or arrays."""
    x = x if isinstance(x, Tensor) else Tensor(x)
    if tuple(x.shape[-3:]) != tuple(spec.in_shape):
        raise ShapeError(f"{spec.name}: input shape mismatch", x.shape, spec.in_shape)
    values: dict[str, Tensor] = {INPUT: x}
    for layer in spec.layers:
        ins = [values[i] for i in layer.inputs]
        if layer.op == "conv":
            out = conv2d(ins[0], weights[f"{layer.name}.kernel"], weights[f"{layer.name}.bias"])
        elif layer.op == "transposed_conv":
            out = transposed_conv2d(ins[0], weights[f"{layer.name}.kernel"], weights[f"{layer.name}.bias"],
                                    layer.stride, layer.target)
        elif layer.op == "relu":
            out = relu(ins[0])
        elif layer.op == "add_n":
            out = add_n(ins)
        else:
            out = bilinear_resize(ins[0], layer.target)
        values[layer.name] = out
    return values[spec.output]


def infer(spec: ModelSpec, weights: Mapping[str, np.ndarray], pilot_grid: np.ndarray,
          batch_size: int = 256) -> np.ndarray:
    """Forward pass on packed pilot inputs ``(..., P_sc, P_sym, 2)`` -> ``(..., 72, 14, 2)``."""
    check_weights(spec, weights)
    pilot_grid = np.asarray(pilot_grid)
    dtype = next(iter(weights.values())).dtype
    if pilot_grid.ndim == 3:
        return forward(spec, weights, pilot_grid.astype(dtype)).data
    outs = [forward(spec, weights, pilot_grid[i:i + batch_size].astype(dtype)).data
            for i in range(0, len(pilot_grid), batch_size)]
    return np.concatenate(outs) if outs else np.zeros((0, *spec.out_shape), dtype=dtype)


def to_complex(out: np.ndarray) -> np.ndarray:
    """``(..., N_f, N_t, 2)`` real/imag channels -> complex ``(..., N_f, N_t)``."""
    return out[..., 0].astype(np.float64) + 1j * out[..., 1].astype(np.float64)
