"""LSTM cell built from the primitive ops (gradients flow via the tape)."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ShapeError
from . import tensor as T
from .tensor import Tensor


@dataclass
class LstmWeights:
    """Single-cell weights; gate order along columns is i | f | g | o."""

    w_ih: Tensor  # [d_in, 4H]
    w_hh: Tensor  # [H, 4H]
    bias: Tensor  # [4H]

    @property
    def hidden_size(self) -> int:
        return self.w_hh.shape[0]


def lstm_step(x: Tensor, state: tuple[Tensor, Tensor], weights: LstmWeights):
    """One LSTM step. x [B,d_in] (or [d_in]), state (h,c) [B,H] -> (h', c')."""
    h, c = state
    squeeze = x.data.ndim == 1
    if squeeze:
        x = T.reshape(x, (1, x.shape[0]))
        h = T.reshape(h, (1, h.shape[0]))
        c = T.reshape(c, (1, c.shape[0]))
    hs = weights.hidden_size
    if x.shape[1] != weights.w_ih.shape[0] or h.shape[1] != hs or c.shape[1] != hs \
            or weights.w_ih.shape[1] != 4 * hs or weights.bias.shape != (4 * hs,):
        raise ShapeError(
            f"lstm_step shape mismatch: x{x.shape} h{h.shape} c{c.shape} "
            f"w_ih{weights.w_ih.shape} w_hh{weights.w_hh.shape} bias{weights.bias.shape}")

    gates = T.add(T.add(T.matmul(x, weights.w_ih), T.matmul(h, weights.w_hh)), weights.bias)
    i = T.sigmoid(T.col_slice(gates, 0, hs))
    f = T.sigmoid(T.col_slice(gates, hs, 2 * hs))
    g = T.tanh(T.col_slice(gates, 2 * hs, 3 * hs))
    o = T.sigmoid(T.col_slice(gates, 3 * hs, 4 * hs))
    c_new = T.add(T.mul(f, c), T.mul(i, g))
    h_new = T.mul(o, T.tanh(c_new))
    if squeeze:
        h_new = T.reshape(h_new, (hs,))
        c_new = T.reshape(c_new, (hs,))
    return h_new, c_new
