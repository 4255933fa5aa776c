"""Input encoders for the rig regression network.

Content path: an affine projection of the feature matrix to the model
width plus a sinusoidal positional table. Emotion path: a 7-row embedding
refined by two affine layers with a Leaky ReLU between them. The two are
combined by plain rowwise addition, which is the only place the emotion
label enters the network.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .rig import N_EMOTIONS

D_MODEL = 512
LEAKY_SLOPE = 0.2


@dataclass
class EncoderParams:
    """Learnable tensors of the content and emotion encoders."""

    content_w: np.ndarray  # (F, d_model)
    content_b: np.ndarray  # (d_model,)
    emotion_embed: np.ndarray  # (7, d_model)
    emotion_w1: np.ndarray  # (d_model, d_model)
    emotion_b1: np.ndarray
    emotion_w2: np.ndarray  # (d_model, d_model)
    emotion_b2: np.ndarray
    leaky_slope: float = LEAKY_SLOPE

    @property
    def feature_dim(self) -> int:
        return self.content_w.shape[0]

    @property
    def d_model(self) -> int:
        return self.content_w.shape[1]


def init_encoder_params(feature_dim: int, d_model: int = D_MODEL,
                        rng: np.random.Generator | None = None) -> EncoderParams:
    """Glorot-uniform weights, zero biases, small-normal embedding."""
    rng = rng or np.random.default_rng(0)

    def glorot(n_in, n_out):
        bound = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-bound, bound, (n_in, n_out))

    return EncoderParams(
        content_w=glorot(feature_dim, d_model),
        content_b=np.zeros(d_model),
        emotion_embed=rng.normal(0.0, 0.02, (N_EMOTIONS, d_model)),
        emotion_w1=glorot(d_model, d_model),
        emotion_b1=np.zeros(d_model),
        emotion_w2=glorot(d_model, d_model),
        emotion_b2=np.zeros(d_model),
    )


@functools.lru_cache(maxsize=32)
def _positional_encoding_cached(n_frames: int, d_model: int) -> np.ndarray:
    pos = np.arange(n_frames, dtype=np.float64)[:, None]
    two_i = np.arange(0, d_model, 2, dtype=np.float64)
    angles = pos / (10000.0 ** (two_i / d_model))[None, :]
    pe = np.empty((n_frames, d_model))
    pe[:, 0::2] = np.sin(angles)
    pe[:, 1::2] = np.cos(angles)
    pe.setflags(write=False)
    return pe


def positional_encoding(n_frames: int, d_model: int = D_MODEL) -> np.ndarray:
    """Sinusoidal position table: sin(pos / 10000^(2i/d)) on even columns,
    cos of the same angle on the following odd column.

    Cached per (n_frames, d_model); callers must not mutate the result.
    """
    if n_frames < 1:
        raise DataError(f"positional encoding needs n_frames >= 1, got {n_frames}")
    if d_model % 2 != 0 or d_model < 2:
        raise DataError(f"d_model must be a positive even number, got {d_model}")
    return _positional_encoding_cached(int(n_frames), int(d_model))


def leaky_relu(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def encode_content(features: np.ndarray, params: EncoderParams,
                   pos_offset: int = 0) -> np.ndarray:
    """Project features to model width and add the positional table.

    ``pos_offset`` shifts the position index of the first row; chunked
    inference passes the chunk's global start frame so positions stay
    consistent across chunk boundaries.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.feature_dim:
        raise DataError(
            f"feature width {features.shape[1] if features.ndim == 2 else '?'} "
            f"does not match encoder width {params.feature_dim}"
        )
    proj = features @ params.content_w + params.content_b
    pe = positional_encoding(pos_offset + features.shape[0], params.d_model)
    return proj + pe[pos_offset:]


def encode_emotion_table(params: EncoderParams) -> np.ndarray:
    """Encoded vectors for all 7 labels, one row per label."""
    z1 = params.emotion_embed @ params.emotion_w1 + params.emotion_b1
    a1 = leaky_relu(z1, params.leaky_slope)
    return a1 @ params.emotion_w2 + params.emotion_b2


def encode_emotion(label: int, params: EncoderParams) -> np.ndarray:
    """Encoded vector for a single emotion label (0..6)."""
    if not 0 <= int(label) < N_EMOTIONS:
        raise DataError(f"emotion label out of range 0..6: {label}")
    return encode_emotion_table(params)[int(label)]


def combine(content: np.ndarray, emotion: np.ndarray) -> np.ndarray:
    """Add an emotion vector (or per-frame matrix) to every content row."""
    content = np.asarray(content, dtype=np.float64)
    emotion = np.asarray(emotion, dtype=np.float64)
    if emotion.ndim == 1:
        if emotion.shape[0] != content.shape[1]:
            raise DataError(
                f"emotion width {emotion.shape[0]} does not match content width {content.shape[1]}"
            )
        return content + emotion[None, :]
    if emotion.shape != content.shape:
        raise DataError(f"emotion shape {emotion.shape} does not match content {content.shape}")
    return content + emotion
