"""Audio feature ingestion, a spectral fallback extractor, and resampling.

Feature matrices normally come from an external speech-feature exporter
(reference layout: 768 columns at 50 Hz). When only raw audio is
available, a mel-cepstral fallback produces usable stand-in features at
the same 50 Hz clock. Either way the stream is linearly resampled onto
the 60 fps rig timeline before prediction.

Feature file layout (little-endian):

    magic  b"EMOF"
    u32    version (1)
    u32    rows
    u32    cols
    f32    rate_hz
    f32[rows * cols]  row-major payload
"""

from __future__ import annotations

import csv
import struct
import wave
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import DataError, FeatureFileError

FEATURE_MAGIC = b"EMOF"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<4sIIIf")

REFERENCE_FEATURE_RATE = 50.0
REFERENCE_FEATURE_DIM = 768
FALLBACK_FAMILY = "mel-cepstrum-reference"


@dataclass
class FeatureSequence:
    """T x F feature matrix at a stated frame rate."""

    data: np.ndarray
    rate_hz: float
    family: str = "external"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2 or self.data.shape[0] < 1:
            raise DataError(f"feature matrix must be 2-D with T >= 1, got {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise DataError("feature matrix contains non-finite values")
        if self.rate_hz <= 0:
            raise DataError(f"feature rate must be positive, got {self.rate_hz}")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]


@dataclass
class AudioClip:
    """Mono audio samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.samples.size == 0:
            raise DataError("audio clip is empty")
        if self.sample_rate <= 0:
            raise DataError(f"sample rate must be positive, got {self.sample_rate}")


# --- feature files ---------------------------------------------------------


def read_feature_file(path) -> FeatureSequence:
    """Read a binary feature file, checking magic, version, and payload."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise FeatureFileError(f"{path}: too short for a feature header")
    magic, version, rows, cols, rate_hz = _HEADER.unpack_from(blob)
    if magic != FEATURE_MAGIC:
        raise FeatureFileError(f"{path}: bad magic {magic!r}")
    if version != FEATURE_VERSION:
        raise FeatureFileError(f"{path}: unsupported version {version}")
    expected = rows * cols * 4
    payload = blob[_HEADER.size:]
    if len(payload) < expected:
        raise FeatureFileError(
            f"{path}: truncated payload ({len(payload)} bytes, header promises {expected})"
        )
    data = np.frombuffer(payload[:expected], dtype="<f4").reshape(rows, cols)
    if not np.isfinite(data).all():
        raise FeatureFileError(f"{path}: payload contains non-finite values")
    return FeatureSequence(data.copy(), float(rate_hz))


def write_feature_file(path, seq: FeatureSequence) -> None:
    data = np.ascontiguousarray(seq.data, dtype="<f4")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION,
                             seq.n_frames, seq.n_features, seq.rate_hz))
        f.write(data.tobytes())


def read_feature_csv(path, rate_hz: float = REFERENCE_FEATURE_RATE) -> FeatureSequence:
    """Read a headerless T x F CSV of feature values."""
    with open(path, newline="", encoding="utf-8") as f:
        try:
            rows = [[float(v) for v in row] for row in csv.reader(f) if row]
        except ValueError as exc:
            raise FeatureFileError(f"{path}: non-numeric feature CSV: {exc}") from None
    if not rows:
        raise FeatureFileError(f"{path}: empty feature CSV")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise FeatureFileError(f"{path}: ragged feature CSV, row widths {sorted(widths)}")
    return FeatureSequence(np.array(rows, dtype=np.float32), rate_hz)


def load_features(path, rate_hz: float = REFERENCE_FEATURE_RATE) -> FeatureSequence:
    """Load features from either the binary format or a headerless CSV."""
    with open(path, "rb") as f:
        head = f.read(4)
    if head == FEATURE_MAGIC:
        return read_feature_file(path)
    return read_feature_csv(path, rate_hz)


def read_wav(path) -> AudioClip:
    """Read a PCM WAV file as a mono clip scaled to [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as w:
            rate = w.getframerate()
            n_ch = w.getnchannels()
            width = w.getsampwidth()
            raw = w.readframes(w.getnframes())
    except (wave.Error, OSError, EOFError) as exc:
        raise DataError(f"cannot read WAV {path}: {exc}") from None
    if width == 2:
        samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 1:
        samples = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    else:
        raise DataError(f"{path}: unsupported sample width {width} bytes")
    if n_ch > 1:
        samples = samples.reshape(-1, n_ch).mean(axis=1)
    return AudioClip(samples, rate)


# --- fallback extractor ----------------------------------------------------


@dataclass
class FallbackConfig:
    """Mel-cepstral extractor settings.

    frame_hop defaults to sample_rate / 50 so the output clock is 50 Hz,
    matching the reference feature rate. The analysis window spans two
    hops (50% overlap).
    """

    frame_hop: int | None = None
    n_mels: int = 40
    n_coeffs: int = 26

    def hop_for(self, sample_rate: int) -> int:
        if self.frame_hop is not None:
            return int(self.frame_hop)
        return max(1, round(sample_rate / REFERENCE_FEATURE_RATE))


def _mel_filterbank(n_mels: int, n_fft: int, sample_rate: float) -> np.ndarray:
    """Triangular mel filters over the one-sided FFT bins."""

    def to_mel(hz):
        return 2595.0 * np.log10(1.0 + hz / 700.0)

    def to_hz(mel):
        return 700.0 * (10.0 ** (mel / 2595.0) - 1.0)

    n_bins = n_fft // 2 + 1
    mel_pts = np.linspace(to_mel(0.0), to_mel(sample_rate / 2.0), n_mels + 2)
    hz_pts = to_hz(mel_pts)
    bin_hz = np.arange(n_bins) * sample_rate / n_fft
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, mid, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        rise = (bin_hz - lo) / max(mid - lo, 1e-12)
        fall = (hi - bin_hz) / max(hi - mid, 1e-12)
        fb[m] = np.clip(np.minimum(rise, fall), 0.0, None)
    return fb


def extract_fallback_features(clip: AudioClip, cfg: FallbackConfig | None = None) -> FeatureSequence:
    """Mel-cepstral reference features from raw audio at 50 Hz.

    Framing: frame t covers samples [t*hop, t*hop + 2*hop), Hann windowed,
    zero-padded to the next power of two. T = floor(len(samples)/hop)
    frames; trailing frames are zero-padded. Each frame yields n_coeffs
    DCT-II (orthonormal) coefficients of the log mel power spectrum.
    """
    cfg = cfg or FallbackConfig()
    hop = cfg.hop_for(clip.sample_rate)
    window = 2 * hop
    if clip.samples.size < window:
        raise DataError(
            f"clip too short: {clip.samples.size} samples, analysis window is {window}"
        )
    n_frames = clip.samples.size // hop
    n_fft = 1 << (window - 1).bit_length()
    hann = np.hanning(window)
    fb = _mel_filterbank(cfg.n_mels, n_fft, clip.sample_rate)

    padded = np.concatenate([clip.samples, np.zeros(window)])
    frames = np.stack([padded[t * hop:t * hop + window] for t in range(n_frames)])
    spectra = np.fft.rfft(frames * hann, n=n_fft, axis=1)
    power = np.abs(spectra) ** 2
    log_mel = np.log(power @ fb.T + 1e-10)
    coeffs = scipy.fft.dct(log_mel, type=2, norm="ortho", axis=1)[:, :cfg.n_coeffs]
    rate = clip.sample_rate / hop
    return FeatureSequence(coeffs.astype(np.float32), rate, family=FALLBACK_FAMILY)


# --- resampling -------------------------------------------------------------


def resample_features(seq: FeatureSequence, dst_rate: float) -> FeatureSequence:
    """Linearly resample a feature stream onto a new frame rate.

    The output has round(T * dst/src) frames; output frame t samples the
    input at position t*(T-1)/(N-1) (endpoint-aligned), so the first and
    last frames are carried over exactly and no extrapolation occurs.
    Equal rates return the input frames unchanged.
    """
    if dst_rate <= 0:
        raise DataError(f"target rate must be positive, got {dst_rate}")
    n_in = seq.n_frames
    if n_in < 2:
        raise DataError(f"resampling needs at least 2 frames, got {n_in}")
    n_out = max(1, int(np.floor(n_in * dst_rate / seq.rate_hz + 0.5)))
    if n_out == 1:
        return FeatureSequence(seq.data[:1].copy(), dst_rate, seq.family)

    pos = np.arange(n_out) * (n_in - 1) / (n_out - 1)
    lo = np.minimum(pos.astype(np.int64), n_in - 2)
    frac = pos - lo
    data = seq.data.astype(np.float64)
    out = data[lo] + frac[:, None] * (data[lo + 1] - data[lo])
    return FeatureSequence(out.astype(np.float32), dst_rate, seq.family)
