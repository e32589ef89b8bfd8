"""Interpolation-ResNet and the two ReEsNet baseline interpretations."""

from __future__ import annotations

import math

from chanest.errors import ParameterError, ShapeError
from chanest.models.graph import INPUT, Layer, ModelSpec

OUT_SHAPE = (72, 14, 2)
N_BLOCKS = 4
REESNET_FILTERS = 16
REESNET_KERNELS = {"A": 3, "B": 11}


def _check_shapes(in_shape, out_shape):
    if len(in_shape) != 3 or in_shape[2] != 2 or min(in_shape) < 1:
        raise ShapeError("input must be (pilot_subcarriers, pilot_symbols, 2)", in_shape)
    if len(out_shape) != 3 or out_shape[2] != 2 or min(out_shape) < 1:
        raise ShapeError("output must be (subcarriers, symbols, 2)", out_shape)


def _conv(name, src, c_in, c_out, k=(3, 3)):
    return Layer(name, "conv", (src,), kernel=(k[0], k[1], c_in, c_out))


def _residual_blocks(prefix, src, n):
    layers = []
    for i in range(1, N_BLOCKS + 1):
        b = f"{prefix}{i}"
        layers += [
            _conv(f"{b}.conv1", src, n, n),
            Layer(f"{b}.relu", "relu", (f"{b}.conv1",)),
            _conv(f"{b}.conv2", f"{b}.relu", n, n),
            Layer(f"{b}.add", "add_n", (src, f"{b}.conv2")),
        ]
        src = f"{b}.add"
    return layers, src


def build_interpolation_resnet(n_filter: int, in_shape, out_shape=OUT_SHAPE) -> ModelSpec:
    """Four residual neural blocks, a global sum skip, bilinear upsampling and a wide output conv.

    The final kernel spans half the subcarriers and half the symbols of the
    output grid (36 x 7 for a 72 x 14 frame).
    """
    if n_filter < 1:
        raise ParameterError(f"n_filter must be >= 1, got {n_filter}")
    in_shape, out_shape = tuple(in_shape), tuple(out_shape)
    _check_shapes(in_shape, out_shape)
    n = n_filter
    layers = [_conv("conv0", INPUT, 2, n)]
    blocks, last = _residual_blocks("block", "conv0", n)
    layers += blocks
    layers.append(_conv("conv5", last, n, n))
    summands = ("conv0", *(f"block{i}.add" for i in range(1, N_BLOCKS + 1)), "conv5")
    layers.append(Layer("sum", "add_n", summands))
    layers.append(Layer("resize", "bilinear_resize", ("sum",), target=out_shape[:2]))
    final_k = (out_shape[0] // 2, out_shape[1] // 2)
    layers.append(_conv("conv_out", "resize", n, 2, k=final_k))
    return ModelSpec(f"interp-resnet-{n}f", tuple(layers), in_shape, out_shape, n)


def reesnet_stride(in_shape, out_shape=OUT_SHAPE) -> tuple[int, int]:
    return math.ceil(out_shape[0] / in_shape[0]), math.ceil(out_shape[1] / in_shape[1])


def build_reesnet(variant: str, in_shape, out_shape=OUT_SHAPE) -> ModelSpec:
    """ReEsNet with a transposed-conv upsampler (3x3 for ``A``, 11x11 for ``B``)."""
    variant = str(variant).upper()
    if variant not in REESNET_KERNELS:
        raise ParameterError(f"unknown ReEsNet variant {variant!r}; valid: A, B")
    in_shape, out_shape = tuple(in_shape), tuple(out_shape)
    _check_shapes(in_shape, out_shape)
    n, k = REESNET_FILTERS, REESNET_KERNELS[variant]
    layers = [_conv("conv0", INPUT, 2, n)]
    blocks, last = _residual_blocks("resblock", "conv0", n)
    layers += blocks
    layers.append(_conv("conv5", last, n, n))
    layers.append(Layer("skip", "add_n", ("conv0", "conv5")))
    layers.append(Layer("upsample", "transposed_conv", ("skip",), kernel=(k, k, n, n),
                        stride=reesnet_stride(in_shape, out_shape), target=out_shape[:2]))
    layers.append(_conv("conv_out", "upsample", n, 2))
    return ModelSpec(f"reesnet-{variant.lower()}", tuple(layers), in_shape, out_shape, n)


def build_model(kind: str, in_shape, n_filter: int = 8, out_shape=OUT_SHAPE) -> ModelSpec:
    """Dispatch on the model names used by the CLI config."""
    kind = kind.lower()
    if kind == "interp-resnet":
        return build_interpolation_resnet(n_filter, in_shape, out_shape)
    if kind in ("reesnet-a", "reesnet-b"):
        return build_reesnet(kind[-1], in_shape, out_shape)
    raise ParameterError(f"unknown model {kind!r}; valid: interp-resnet, reesnet-a, reesnet-b")
