"""Signal-level featurization.

Mel extraction, YIN pitch tracking, linear F0 interpolation, piano-key
quantization and per-singer normalization statistics. Everything here is
pure numpy and safe to call from parallel data-loading workers.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import FeatureConfig
from .errors import (
    AllUnvoiced,
    DoubleNormalize,
    EmptyAudio,
    EmptyCollection,
    MixedSingers,
    NonPositiveF0,
    RateMismatch,
    SingerMismatch,
)

STD_FLOOR = 1e-4


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class MelSpectrogram:
    values: np.ndarray            # (frames, n_mels), natural-log magnitudes
    n_mels: int
    hop_size: int
    normalized: bool = False
    singer_id: Optional[str] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != self.n_mels:
            raise ValueError("values must be (frames, n_mels)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("mel values must be finite")
        if self.normalized and self.singer_id is None:
            raise ValueError("normalized mel must carry its singer_id")

    @property
    def frames(self) -> int:
        return self.values.shape[0]


@dataclass
class F0Contour:
    f0_hz: np.ndarray
    voiced: np.ndarray

    def __post_init__(self):
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64)
        self.voiced = np.asarray(self.voiced, dtype=bool)
        if self.f0_hz.shape != self.voiced.shape:
            raise ValueError("f0 and voiced mask must have equal length")
        if np.any((self.f0_hz > 0) != self.voiced):
            raise ValueError("f0 > 0 must hold exactly on voiced frames")


@dataclass
class LIF0:
    f0_hz: np.ndarray

    def __post_init__(self):
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64)
        if not np.all(np.isfinite(self.f0_hz)) or np.any(self.f0_hz <= 0):
            raise ValueError("interpolated f0 must be strictly positive and finite")


@dataclass
class KeySequence:
    keys: np.ndarray

    def __post_init__(self):
        self.keys = np.asarray(self.keys, dtype=np.int64)
        if self.keys.size and (self.keys.min() < 1 or self.keys.max() > 88):
            raise ValueError("piano keys must lie in [1, 88]")


@dataclass
class SingerStats:
    singer_id: str
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != self.std.shape:
            raise ValueError("mean/std shape mismatch")
        if np.any(self.std <= 0):
            raise ValueError("std must be strictly positive (floored)")


# --- WAV I/O (RIFF PCM16 mono) ---

def read_wav(path) -> Waveform:
    with wave.open(str(path), "rb") as fh:
        if fh.getnchannels() != 1 or fh.getsampwidth() != 2:
            raise ValueError(f"{path}: expected mono PCM16 WAV")
        rate = fh.getframerate()
        raw = fh.readframes(fh.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return Waveform(samples, rate)


def write_wav(path, w: Waveform) -> None:
    pcm = np.clip(np.round(w.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(w.sample_rate)
        fh.writeframes(pcm.tobytes())


# --- framing helpers ---

def n_frames(n_samples: int, hop_size: int) -> int:
    """Frame count under center padding: ceil(samples / hop)."""
    return -(-n_samples // hop_size)


def _frame_signal(x: np.ndarray, frame_length: int, hop: int, pad_mode: str) -> np.ndarray:
    pad = frame_length // 2
    xp = np.pad(x, pad, mode=pad_mode)
    frames = n_frames(x.size, hop)
    idx = np.arange(frames)[:, None] * hop + np.arange(frame_length)[None, :]
    return xp[idx]


def hann_window(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: FeatureConfig) -> tuple[np.ndarray, np.ndarray]:
    """Triangular filters on the mel scale.

    Returns the (n_mels, n_fft // 2 + 1) weight matrix and the filter center
    frequencies in Hz. Peak weight is 1 at each center, so a pure tone lights
    up the band whose center sits closest on the mel axis.
    """
    n_bins = cfg.n_fft // 2 + 1
    bin_hz = np.arange(n_bins) * cfg.sample_rate / cfg.n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2))
    bin_mel = hz_to_mel(bin_hz)
    edge_mel = hz_to_mel(edges)
    fb = np.zeros((cfg.n_mels, n_bins))
    for i in range(cfg.n_mels):
        lo, mid, hi = edge_mel[i], edge_mel[i + 1], edge_mel[i + 2]
        up = (bin_mel - lo) / (mid - lo)
        down = (hi - bin_mel) / (hi - mid)
        fb[i] = np.clip(np.minimum(up, down), 0.0, None)
    return fb, edges[1:-1]


def compute_mel(w: Waveform, cfg: FeatureConfig) -> MelSpectrogram:
    """STFT -> triangular mel filterbank -> natural log with floor.

    Frame count is ceil(samples / hop) under center (reflect) padding.
    """
    if w.samples.size == 0:
        raise EmptyAudio("cannot compute mel of empty audio")
    if w.sample_rate != cfg.sample_rate:
        raise RateMismatch(f"waveform at {w.sample_rate} Hz, config expects {cfg.sample_rate} Hz")
    if w.samples.size < cfg.win_size:
        raise ValueError(f"need at least win_size={cfg.win_size} samples")
    frames = _frame_signal(w.samples, cfg.win_size, cfg.hop_size, "reflect")
    spec = np.abs(np.fft.rfft(frames * hann_window(cfg.win_size), n=cfg.n_fft, axis=1))
    fb, _ = mel_filterbank(cfg)
    mel = spec @ fb.T
    values = np.log(np.maximum(mel, cfg.log_floor))
    return MelSpectrogram(values, cfg.n_mels, cfg.hop_size)


def estimate_f0_yin(w: Waveform, cfg: FeatureConfig) -> F0Contour:
    """Per-frame YIN pitch with the cumulative mean normalized difference.

    One (f0, voiced) pair per mel frame: same hop, same center alignment.
    A frame is voiced when the CMND dips below the absolute threshold at a
    lag inside the [fmin, fmax] search band.
    """
    if w.samples.size == 0:
        raise EmptyAudio("cannot track pitch of empty audio")
    if w.sample_rate != cfg.sample_rate:
        raise RateMismatch(f"waveform at {w.sample_rate} Hz, config expects {cfg.sample_rate} Hz")
    if not 40.0 <= cfg.yin_fmin < cfg.yin_fmax <= 1100.0:
        raise ValueError("f0 search range must sit inside [40, 1100] Hz")

    sr = cfg.sample_rate
    fl = cfg.yin_frame_length
    tau_max = int(sr / cfg.yin_fmin)
    tau_min = max(2, int(np.ceil(sr / cfg.yin_fmax)))
    if tau_max + tau_min >= fl:
        raise ValueError("yin_frame_length too short for the f0 search range")
    win = fl - tau_max  # integration window

    frames = _frame_signal(w.samples, fl, cfg.hop_size, "symmetric")
    n = frames.shape[0]

    # d(tau) = e0 + e_tau - 2 r(tau), correlation via FFT
    nfft = 1 << int(np.ceil(np.log2(fl + win)))
    spec_full = np.fft.rfft(frames, nfft, axis=1)
    spec_win = np.fft.rfft(frames[:, :win], nfft, axis=1)
    corr = np.fft.irfft(spec_full * np.conj(spec_win), nfft, axis=1)[:, : tau_max + 1]
    sq = np.concatenate([np.zeros((n, 1)), np.cumsum(frames**2, axis=1)], axis=1)
    e0 = sq[:, win] - sq[:, 0]
    e_tau = sq[:, win : win + tau_max + 1] - sq[:, : tau_max + 1]
    diff = np.maximum(e0[:, None] + e_tau - 2.0 * corr, 0.0)

    # cumulative mean normalized difference; silent frames stay at 1
    cmnd = np.ones_like(diff)
    denom = np.cumsum(diff[:, 1:], axis=1)
    taus = np.arange(1, tau_max + 1, dtype=np.float64)
    safe = denom > 1e-30
    cmnd[:, 1:][safe] = (diff[:, 1:] * taus[None, :])[safe] / denom[safe]

    f0 = np.zeros(n)
    voiced = np.zeros(n, dtype=bool)
    for t in range(n):
        row = cmnd[t]
        below = np.nonzero(row[tau_min : tau_max + 1] < cfg.yin_threshold)[0]
        if below.size == 0:
            continue
        tau = tau_min + int(below[0])
        while tau + 1 <= tau_max and row[tau + 1] < row[tau]:
            tau += 1
        # parabolic refinement around the minimum
        if 1 <= tau < tau_max:
            a, b, c = row[tau - 1], row[tau], row[tau + 1]
            den = a - 2.0 * b + c
            shift = 0.0 if den <= 0 else np.clip(0.5 * (a - c) / den, -1.0, 1.0)
        else:
            shift = 0.0
        cand = sr / (tau + shift)
        if cfg.yin_fmin <= cand <= cfg.yin_fmax:
            f0[t] = cand
            voiced[t] = True
    return F0Contour(f0, voiced)


def linear_interpolate_f0(c: F0Contour) -> LIF0:
    """Fill unvoiced gaps by linear interpolation; edges hold the nearest voiced value."""
    idx = np.nonzero(c.voiced)[0]
    if idx.size == 0:
        raise AllUnvoiced("no voiced frame to interpolate from")
    filled = np.interp(np.arange(c.f0_hz.size), idx, c.f0_hz[idx])
    return LIF0(filled)


def quantize_to_piano_keys(f: LIF0) -> KeySequence:
    """Nearest equal-tempered piano key (A4 = 440 Hz = key 49), clamped to [1, 88].

    Rounding is half-up, so boundaries sit exactly a quarter tone off center.
    """
    f0 = np.asarray(f.f0_hz, dtype=np.float64)
    if np.any(f0 <= 0):
        raise NonPositiveF0("key quantization needs strictly positive f0")
    semitones = 12.0 * np.log2(f0 / 440.0)
    keys = np.floor(semitones + 0.5).astype(np.int64) + 49
    return KeySequence(np.clip(keys, 1, 88))


def key_to_hz(keys) -> np.ndarray:
    """Center frequency of each piano key (inverse of the quantizer grid)."""
    return 440.0 * 2.0 ** ((np.asarray(keys, dtype=np.float64) - 49.0) / 12.0)


def compute_singer_stats(mels: Sequence[MelSpectrogram], singer_id: str) -> SingerStats:
    """Per-band mean and population std over all frames of one singer."""
    if not mels:
        raise EmptyCollection("need at least one mel spectrogram")
    for m in mels:
        if m.normalized:
            raise DoubleNormalize("stats must be computed on unnormalized mels")
        if m.singer_id is not None and m.singer_id != singer_id:
            raise MixedSingers(f"mel from {m.singer_id!r} mixed into stats of {singer_id!r}")
    data = np.concatenate([m.values for m in mels], axis=0)
    mean = data.mean(axis=0)
    std = np.maximum(data.std(axis=0), STD_FLOOR)
    return SingerStats(singer_id, mean, std)


def normalize_mel(m: MelSpectrogram, s: SingerStats) -> MelSpectrogram:
    if m.normalized:
        raise DoubleNormalize("mel is already normalized")
    if m.singer_id is not None and m.singer_id != s.singer_id:
        raise SingerMismatch(f"mel of {m.singer_id!r} vs stats of {s.singer_id!r}")
    values = (m.values - s.mean[None, :]) / s.std[None, :]
    return MelSpectrogram(values, m.n_mels, m.hop_size, normalized=True, singer_id=s.singer_id)


def denormalize_mel(m: MelSpectrogram, s: SingerStats) -> MelSpectrogram:
    if not m.normalized:
        raise DoubleNormalize("mel is not normalized")
    if m.singer_id != s.singer_id:
        raise SingerMismatch(f"mel of {m.singer_id!r} vs stats of {s.singer_id!r}")
    values = m.values * s.std[None, :] + s.mean[None, :]
    return MelSpectrogram(values, m.n_mels, m.hop_size, normalized=False, singer_id=s.singer_id)


def compute_logf0_stats(lif0s: Sequence[LIF0]) -> tuple[float, float]:
    """Scalar mean/std of log f0, used to normalize the pitch output channel."""
    if not lif0s:
        raise EmptyCollection("need at least one contour")
    data = np.log(np.concatenate([c.f0_hz for c in lif0s]))
    return float(data.mean()), float(max(data.std(), STD_FLOOR))
