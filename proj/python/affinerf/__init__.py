"""Transfer of random-forest surrogates between tasks related by an affine
domain shift: the transform (rotation + translation) is fit with CMA-ES over
the flat so(d) parameterization of the rotation group."""

from ._core import (
    AffineTransform,
    ForestModel,
    ForestParams,
    OptimResult,
    TransferInstance,
    TransferOptions,
    __version__,
    benchmark_functions,
    decode_candidate,
    dunn_posthoc,
    eval_function,
    fit_forest,
    kruskal_wallis,
    load_forest,
    load_transform,
    make_instance,
    matrix_exp,
    pack_antisymmetric,
    random_rotation,
    sample_uniform,
    smape,
    smape_diff_percent,
    so_dim,
    tl_cmaes,
    transfer_loss,
    transferred_predict,
    unpack_antisymmetric,
)

__all__ = [
    "AffineTransform",
    "ForestModel",
    "ForestParams",
    "OptimResult",
    "TransferInstance",
    "TransferOptions",
    "__version__",
    "benchmark_functions",
    "decode_candidate",
    "dunn_posthoc",
    "eval_function",
    "fit_forest",
    "kruskal_wallis",
    "load_forest",
    "load_transform",
    "make_instance",
    "matrix_exp",
    "pack_antisymmetric",
    "random_rotation",
    "sample_uniform",
    "smape",
    "smape_diff_percent",
    "so_dim",
    "tl_cmaes",
    "transfer_loss",
    "transferred_predict",
    "unpack_antisymmetric",
]
