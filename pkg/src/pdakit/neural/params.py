"""Parameter containers, initialization, and checkpoint files for the colorer.

All tensors are float64 numpy arrays.  Shapes are fixed by a ModelConfig:
embedding width d, hidden width h, and the largest row/column counts the
embedding table can address.  The flatten/unflatten pair gives a stable
vector view used by finite-difference checks and gradient clipping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Iterator

import numpy as np

from ..errors import DimensionError, InvalidParameter, ParseError

# Uniform init half-width.  Pointer logits are products of several weight
# tensors, so a much smaller scale starts training on a flat plateau.
INIT_SCALE = 0.5

CHECKPOINT_FORMAT = "pdakit-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    """Widths and addressable grid bounds, fixed at construction."""

    f_max: int
    k_max: int
    embed_dim: int
    hidden_dim: int

    def __post_init__(self):
        for name in ("f_max", "k_max", "embed_dim", "hidden_dim"):
            if getattr(self, name) < 1:
                raise InvalidParameter(f"{name} must be >= 1")


@dataclass
class GruParams:
    """One gate set: reset r, update z, candidate state.

    u_* act on the input, w_* on the previous hidden state, b_* are
    biases.  The candidate carries its own bias.
    """

    u_reset: np.ndarray
    w_reset: np.ndarray
    b_reset: np.ndarray
    u_update: np.ndarray
    w_update: np.ndarray
    b_update: np.ndarray
    u_cand: np.ndarray
    w_cand: np.ndarray
    b_cand: np.ndarray

    @classmethod
    def init(cls, in_dim: int, hidden_dim: int, rng: np.random.Generator) -> "GruParams":
        def u():
            return rng.uniform(-INIT_SCALE, INIT_SCALE, size=(hidden_dim, in_dim))

        def w():
            return rng.uniform(-INIT_SCALE, INIT_SCALE, size=(hidden_dim, hidden_dim))

        def b():
            return rng.uniform(-INIT_SCALE, INIT_SCALE, size=hidden_dim)

        return cls(
            u_reset=u(), w_reset=w(), b_reset=b(),
            u_update=u(), w_update=w(), b_update=b(),
            u_cand=u(), w_cand=w(), b_cand=b(),
        )

    def tensor_items(self, prefix: str) -> Iterator[tuple[str, np.ndarray]]:
        for f in fields(self):
            yield f"{prefix}.{f.name}", getattr(self, f.name)


@dataclass
class ModelParams:
    """Every learnable tensor of the colorer.

    embed maps a row one-hot (f_max slots) stacked with a column one-hot
    (k_max slots) to a d-vector; fwd/bwd are the two encoder directions,
    dec the decoder.  attn_enc/attn_dec/attn_v are the attention weights
    on encoder states, decoder state, and the scoring vector.  start is
    the learned first decoder input.
    """

    config: ModelConfig
    embed: np.ndarray      # (d, f_max + k_max)
    fwd: GruParams         # input d, hidden h
    bwd: GruParams         # input d, hidden h
    dec: GruParams         # input 2h + d, hidden h
    attn_enc: np.ndarray   # (h, 2h)
    attn_dec: np.ndarray   # (h, h)
    attn_v: np.ndarray     # (h,)
    start: np.ndarray      # (d,)

    @classmethod
    def init(cls, config: ModelConfig, seed: int = 0) -> "ModelParams":
        rng = np.random.default_rng(seed)
        d, h = config.embed_dim, config.hidden_dim

        def mat(*shape):
            return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)

        return cls(
            config=config,
            embed=mat(d, config.f_max + config.k_max),
            fwd=GruParams.init(d, h, rng),
            bwd=GruParams.init(d, h, rng),
            dec=GruParams.init(2 * h + d, h, rng),
            attn_enc=mat(h, 2 * h),
            attn_dec=mat(h, h),
            attn_v=mat(h),
            start=mat(d),
        )

    def tensor_items(self) -> list[tuple[str, np.ndarray]]:
        """All tensors in a fixed order; names key checkpoints and grads."""
        items = [("embed", self.embed)]
        items += list(self.fwd.tensor_items("fwd"))
        items += list(self.bwd.tensor_items("bwd"))
        items += list(self.dec.tensor_items("dec"))
        items += [
            ("attn_enc", self.attn_enc),
            ("attn_dec", self.attn_dec),
            ("attn_v", self.attn_v),
            ("start", self.start),
        ]
        return items

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(t) for name, t in self.tensor_items()}

    def flatten(self) -> np.ndarray:
        return np.concatenate([t.ravel() for _, t in self.tensor_items()])

    def unflatten(self, vec: np.ndarray) -> "ModelParams":
        """New params with the same shapes, values taken from vec."""
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.flatten().size,):
            raise DimensionError(
                f"expected a flat vector of {self.flatten().size} values"
            )
        out = self.copy()
        pos = 0
        for _, t in out.tensor_items():
            t[...] = vec[pos : pos + t.size].reshape(t.shape)
            pos += t.size
        return out

    def copy(self) -> "ModelParams":
        def gru_copy(g: GruParams) -> GruParams:
            return GruParams(**{f.name: getattr(g, f.name).copy() for f in fields(g)})

        return ModelParams(
            config=self.config,
            embed=self.embed.copy(),
            fwd=gru_copy(self.fwd),
            bwd=gru_copy(self.bwd),
            dec=gru_copy(self.dec),
            attn_enc=self.attn_enc.copy(),
            attn_dec=self.attn_dec.copy(),
            attn_v=self.attn_v.copy(),
            start=self.start.copy(),
        )

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for _, t in self.tensor_items())

    def apply_step(self, grads: dict[str, np.ndarray], scale: float) -> None:
        """In-place update: tensor += scale * grad, per named tensor."""
        for name, t in self.tensor_items():
            t += scale * grads[name]


def clip_grads(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients together so the global norm is at most max_norm.

    Returns the pre-clip norm.
    """
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    norm = total ** 0.5
    if norm > max_norm and norm > 0:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm


def save_checkpoint(path, params: ModelParams, meta: dict | None = None) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": {
            "f_max": params.config.f_max,
            "k_max": params.config.k_max,
            "embed_dim": params.config.embed_dim,
            "hidden_dim": params.config.hidden_dim,
        },
        "tensors": {
            name: {"shape": list(t.shape), "data": t.ravel().tolist()}
            for name, t in params.tensor_items()
        },
        "meta": dict(meta or {}),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad checkpoint JSON: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ParseError(f"not a checkpoint file: format={doc.get('format')!r}")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ParseError(f"unsupported checkpoint version {doc.get('version')!r}")
    try:
        config = ModelConfig(**{k: int(v) for k, v in doc["config"].items()})
        params = ModelParams.init(config, seed=0)
        for name, t in params.tensor_items():
            entry = doc["tensors"][name]
            data = np.asarray(entry["data"], dtype=float).reshape(entry["shape"])
            if data.shape != t.shape:
                raise ParseError(
                    f"tensor {name} has shape {data.shape}, expected {t.shape}"
                )
            t[...] = data
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad checkpoint structure: {exc}") from exc
    return params, doc.get("meta", {})
