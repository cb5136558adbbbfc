from .gradcheck import GradCheckReport, grad_check
from .lstm import LstmWeights, lstm_step
from .optim import AdamState, adam_update, clip_global_norm
from .params import ParamStore
from .tensor import (
    Tensor,
    add,
    as_tensor,
    col_slice,
    concat_cols,
    cross_entropy,
    cross_entropy_rows,
    gather_cols,
    grad_enabled,
    matmul,
    mul,
    no_grad,
    region_weighted_sum,
    repeat_rows,
    reshape,
    row_slice,
    scale,
    sigmoid,
    softmax,
    tanh,
)

__all__ = [
    "AdamState",
    "GradCheckReport",
    "LstmWeights",
    "ParamStore",
    "Tensor",
    "adam_update",
    "add",
    "as_tensor",
    "clip_global_norm",
    "col_slice",
    "concat_cols",
    "cross_entropy",
    "cross_entropy_rows",
    "gather_cols",
    "grad_check",
    "grad_enabled",
    "lstm_step",
    "matmul",
    "mul",
    "no_grad",
    "region_weighted_sum",
    "repeat_rows",
    "reshape",
    "row_slice",
    "scale",
    "sigmoid",
    "softmax",
    "tanh",
]
