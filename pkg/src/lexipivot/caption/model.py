"""Multi-lingual attention caption model.

One affine+tanh region encoder and one LSTM decoder are shared by every
registered language; each language owns only its embedding matrix, which
is also the output projection (tied weights), so the hidden size equals
the embedding size. The mean-pool variant drops the attention net and
fixes the context vector to the unweighted region mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..corpus.vocab import PAD
from ..errors import ConfigError, InputError, ShapeError
from ..numerics import (
    LstmWeights,
    ParamStore,
    Tensor,
    add,
    col_slice,
    concat_cols,
    cross_entropy_rows,
    gather_cols,
    lstm_step,
    matmul,
    region_weighted_sum,
    repeat_rows,
    reshape,
    row_slice,
    scale,
    softmax,
    tanh,
)
from ..seeding import substream

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelDims:
    feature_dim: int = 32   # raw region feature size fed to the encoder
    embed_dim: int = 64     # D = H: embedding, context, and hidden size
    attn_dim: int = 32      # hidden layer of the attention scorer
    num_regions: int = 9    # K
    max_len: int = 16       # caption length cap including sentinels


@dataclass
class DecodeState:
    h: Tensor
    c: Tensor
    t: int = 0
    emitted: list[int] = field(default_factory=list)


class MultiLingualModel:
    def __init__(self, dims: ModelDims, vocab_sizes: dict[str, int], params: ParamStore,
                 attention: bool = True, dtype=np.float64, freeze_encoder: bool = False):
        self.dims = dims
        self.vocab_sizes = dict(vocab_sizes)
        self.params = params
        self.attention = attention
        self.dtype = np.dtype(dtype).type
        self.freeze_encoder = freeze_encoder
        if freeze_encoder:
            for name in ("encoder.weight", "encoder.bias"):
                params[name].requires_grad = False

    # -- construction -------------------------------------------------------

    @classmethod
    def build(cls, dims: ModelDims, vocab_sizes: dict[str, int], seed: int,
              attention: bool = True, dtype=np.float64,
              freeze_encoder: bool = False) -> "MultiLingualModel":
        if not vocab_sizes:
            raise ConfigError("a caption model needs at least one language")
        d, h, a = dims.embed_dim, dims.embed_dim, dims.attn_dim
        params = ParamStore(rng_seed=seed)

        def init(name, shape, fan_in=None, zero=False):
            if zero:
                data = np.zeros(shape)
            else:
                s = 1.0 / np.sqrt(fan_in if fan_in else shape[0])
                data = substream(seed, f"init:{name}").uniform(-s, s, size=shape)
            params.add(name, Tensor(data.astype(dtype)))

        init("encoder.weight", (dims.feature_dim, d))
        init("encoder.bias", (d,), zero=True)
        init("lstm.w_ih", (2 * d, 4 * h))
        init("lstm.w_hh", (h, 4 * h))
        init("lstm.bias", (4 * h,), zero=True)
        params["lstm.bias"].data[h:2 * h] = 1.0  # forget-gate bias
        if attention:
            init("attn.w1", (h + d, a))
            init("attn.b1", (a,), zero=True)
            init("attn.w2", (a, 1))
            init("attn.b2", (1,), zero=True)
        for lang, n in sorted(vocab_sizes.items()):
            init(f"embed.{lang}", (d, n), fan_in=d)
        return cls(dims, vocab_sizes, params, attention=attention, dtype=dtype,
                   freeze_encoder=freeze_encoder)

    def embedding(self, language: str) -> Tensor:
        name = f"embed.{language}"
        if name not in self.params:
            raise KeyError(f"language {language!r} is not registered with this model")
        return self.params[name]

    def lstm_weights(self) -> LstmWeights:
        return LstmWeights(self.params["lstm.w_ih"], self.params["lstm.w_hh"],
                           self.params["lstm.bias"])

    def trainable_params(self) -> ParamStore:
        sub = ParamStore(rng_seed=self.params.rng_seed)
        for name, p in self.params.items():
            if p.requires_grad:
                sub.add(name, p)
        return sub

    def num_parameters(self) -> int:
        return sum(p.data.size for _, p in self.params.items())

    # -- forward pieces -----------------------------------------------------

    def encode(self, features) -> Tensor:
        """Raw region features [B,K,D_in] (or [K,D_in]) -> regions [B,K,D]."""
        arr = np.asarray(features, dtype=self.dtype)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or arr.shape[1] != self.dims.num_regions \
                or arr.shape[2] != self.dims.feature_dim:
            raise ShapeError(
                f"expected region features [B,{self.dims.num_regions},"
                f"{self.dims.feature_dim}], got {arr.shape}")
        b, k, d_in = arr.shape
        flat = Tensor(arr.reshape(b * k, d_in))
        out = tanh(add(matmul(flat, self.params["encoder.weight"]),
                       self.params["encoder.bias"]))
        return reshape(out, (b, k, self.dims.embed_dim))

    def attention_precompute(self, regions: Tensor) -> Tensor | None:
        """Region half of the attention scores, shared across decode steps."""
        if not self.attention:
            return None
        b, k, d = regions.shape
        flat = reshape(regions, (b * k, d))
        w1_region = row_slice(self.params["attn.w1"], self.dims.embed_dim,
                              self.dims.embed_dim + d)
        return add(matmul(flat, w1_region), self.params["attn.b1"])

    def attend(self, h_prev: Tensor, regions: Tensor,
               region_part: Tensor | None = None) -> tuple[Tensor, Tensor]:
        """Context vector and weights for one step: ([B,D], [B,K])."""
        b, k, d = regions.shape
        if k == 0:
            raise ShapeError("cannot attend over zero regions")
        if not self.attention:
            alpha = Tensor(np.full((b, k), 1.0 / k, dtype=self.dtype))
            return region_weighted_sum(alpha, regions), alpha
        if region_part is None:
            region_part = self.attention_precompute(regions)
        w1_hidden = row_slice(self.params["attn.w1"], 0, self.dims.embed_dim)
        h_part = repeat_rows(matmul(h_prev, w1_hidden), k)
        scores = add(matmul(tanh(add(region_part, h_part)), self.params["attn.w2"]),
                     self.params["attn.b2"])
        alpha = softmax(reshape(scores, (b, k)), axis=-1)
        return region_weighted_sum(alpha, regions), alpha

    def initial_state(self, batch: int) -> tuple[Tensor, Tensor]:
        h = Tensor(np.zeros((batch, self.dims.embed_dim), dtype=self.dtype))
        return h, Tensor(h.data.copy())

    def step(self, language: str, state: tuple[Tensor, Tensor], prev_tokens,
             regions: Tensor, region_part: Tensor | None = None):
        """One teacher-forced step for a batch.

        Returns (logits [B,N], new (h, c), alpha [B,K], context [B,D]).
        """
        embed = self.embedding(language)
        prev = np.asarray(prev_tokens, dtype=np.intp)
        w_prev = gather_cols(embed, prev)
        context, alpha = self.attend(state[0], regions, region_part)
        h_new, c_new = lstm_step(concat_cols([w_prev, context]), state, self.lstm_weights())
        logits = matmul(h_new, embed)
        return logits, (h_new, c_new), alpha, context

    def decode_step(self, language: str, state: DecodeState, prev_token: int,
                    regions: Tensor, region_part: Tensor | None = None):
        """Single-example step; advances and returns the decode state."""
        n = self.vocab_sizes.get(language)
        if n is None:
            raise KeyError(f"language {language!r} is not registered with this model")
        if not 0 <= prev_token < n:
            raise IndexError(f"token {prev_token} out of range for vocabulary of {n}")
        logits, (h, c), alpha, context = self.step(
            language, (state.h, state.c), np.array([prev_token]), regions, region_part)
        new_state = DecodeState(h=h, c=c, t=state.t + 1,
                                emitted=state.emitted + [prev_token])
        return logits, new_state, alpha, context

    # -- losses -------------------------------------------------------------

    def sequence_loss(self, examples, features_by_id) -> tuple[Tensor, int]:
        """Teacher-forced NLL averaged over non-pad target tokens.

        The batch may mix languages; each language is unrolled separately
        and the sums are combined before averaging.
        """
        if not examples:
            raise InputError("sequence_loss needs a non-empty batch")
        by_language: dict[str, list] = {}
        for ex in examples:
            if len(ex.tokens) > self.dims.max_len:
                raise InputError(
                    f"example of {len(ex.tokens)} tokens exceeds the unroll cap "
                    f"{self.dims.max_len}")
            by_language.setdefault(ex.language_id, []).append(ex)

        total: Tensor | None = None
        count = 0
        for language in sorted(by_language):
            group = by_language[language]
            tokens = _pad_tokens(group)
            feats = np.stack([np.asarray(features_by_id[ex.scene_id]) for ex in group])
            regions = self.encode(feats)
            region_part = self.attention_precompute(regions)
            state = self.initial_state(len(group))
            ce_sum: Tensor | None = None
            for t in range(tokens.shape[1] - 1):
                prev, target = tokens[:, t], tokens[:, t + 1]
                mask = (target != PAD).astype(self.dtype)
                if not mask.any():
                    break
                logits, state, _, _ = self.step(language, state, prev, regions, region_part)
                ce = cross_entropy_rows(logits, target, mask)
                ce_sum = ce if ce_sum is None else add(ce_sum, ce)
                count += int(mask.sum())
            total = ce_sum if total is None else add(total, ce_sum)
        return scale(reshape(total, (1, 1)), 1.0 / count), count

    # -- persistence --------------------------------------------------------

    def save_checkpoint(self, prefix, extra: dict | None = None) -> tuple[Path, Path]:
        """Write <prefix>.lxpv plus a <prefix>.json sidecar manifest."""
        prefix = Path(prefix)
        weights_path = prefix.with_suffix(".lxpv")
        manifest_path = prefix.with_suffix(".json")
        self.params.save(weights_path)
        manifest = {
            "checkpoint_version": CHECKPOINT_VERSION,
            "dims": {
                "feature_dim": self.dims.feature_dim,
                "embed_dim": self.dims.embed_dim,
                "attn_dim": self.dims.attn_dim,
                "num_regions": self.dims.num_regions,
                "max_len": self.dims.max_len,
            },
            "languages": {lang: n for lang, n in sorted(self.vocab_sizes.items())},
            "attention": self.attention,
            "dtype": np.dtype(self.dtype).name,
            "freeze_encoder": self.freeze_encoder,
            "seed": self.params.rng_seed,
        }
        manifest.update(extra or {})
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
        return weights_path, manifest_path

    @classmethod
    def load_checkpoint(cls, prefix) -> tuple["MultiLingualModel", dict]:
        prefix = Path(prefix)
        manifest = json.loads(prefix.with_suffix(".json").read_text(encoding="utf-8"))
        dims = ModelDims(**manifest["dims"])
        params = ParamStore.load(prefix.with_suffix(".lxpv"), rng_seed=manifest["seed"])
        dtype = np.dtype(manifest["dtype"]).type
        if dtype != np.float64:
            for _, p in params.items():
                p.data = p.data.astype(dtype)
        model = cls(dims, manifest["languages"], params,
                    attention=manifest["attention"], dtype=dtype,
                    freeze_encoder=manifest.get("freeze_encoder", False))
        return model, manifest


def mean_pool_variant(dims: ModelDims, vocab_sizes: dict[str, int], seed: int,
                      dtype=np.float64, freeze_encoder: bool = False) -> MultiLingualModel:
    """Show-tell-style model: context is always the unweighted region mean."""
    return MultiLingualModel.build(dims, vocab_sizes, seed, attention=False,
                                   dtype=dtype, freeze_encoder=freeze_encoder)


def _pad_tokens(examples) -> np.ndarray:
    width = max(len(ex.tokens) for ex in examples)
    out = np.full((len(examples), width), PAD, dtype=np.intp)
    for i, ex in enumerate(examples):
        out[i, : len(ex.tokens)] = ex.tokens
    return out
