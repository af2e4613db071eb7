"""Configuration dataclasses and TOML loading.

A full config file has sections [features], [acoustic], [mrad], [vocoder],
[critics], [train]; every field is optional and defaults to the full-scale
setting. ``desk_scale()`` variants shrink the models enough to train on a
single CPU core.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class FeatureConfig:
    sample_rate: int = 24000
    hop_size: int = 240          # 10 ms frames
    win_size: int = 1024
    n_fft: int = 1024
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 12000.0
    log_floor: float = 1e-5      # magnitude floor before the natural log
    # YIN
    yin_fmin: float = 40.0
    yin_fmax: float = 1100.0
    yin_frame_length: int = 2048
    yin_threshold: float = 0.1   # CMND absolute threshold

    @property
    def hop_ms(self) -> float:
        return 1000.0 * self.hop_size / self.sample_rate


@dataclass
class PostnetConfig:
    kernel_sizes: tuple = (3, 7, 11)   # one per block
    dilations: tuple = (1, 3, 5)       # within each block
    channels: int = 256


@dataclass
class AcousticConfig:
    hidden_size: int = 384
    n_encoder_blocks: int = 6
    n_decoder_blocks: int = 6
    n_heads: int = 2
    conv_kernel: int = 9
    ffn_filter: int = 1024
    dropout: float = 0.1
    postnet: PostnetConfig = field(default_factory=PostnetConfig)
    n_singers: int = 8
    n_phonemes: int = 64
    n_pitches: int = 129          # 128 MIDI pitches + REST
    n_duration_buckets: int = 32  # log-spaced over [1, 512] frames
    max_duration_frames: int = 512
    out_channels: int = 81        # 80 mel bands + 1 log-F0
    duration_kernel: int = 3
    duration_layers: int = 2
    grl_lambda: float = 0.05

    def __post_init__(self):
        if isinstance(self.postnet, dict):
            self.postnet = PostnetConfig(**self.postnet)
        if self.hidden_size % self.n_heads:
            raise ValueError("hidden_size must be divisible by n_heads")
        if self.conv_kernel % 2 == 0:
            raise ValueError("conv kernel sizes must be odd")
        if len(self.postnet.kernel_sizes) != 3 or len(self.postnet.dilations) != 3:
            raise ValueError("post-net is 3 blocks of 3 layers")


# fixed region geometry: heights paired with widths by index
MRAD_HEIGHTS = (20, 30, 40, 50)
MRAD_WIDTHS = (190, 160, 70, 30)


@dataclass
class MradConfig:
    channels: tuple = (32, 64, 128, 128, 128, 1)
    kernel: int = 3
    n_strided: int = 4            # stride-2 on the first four layers
    singer_embed_size: int = 64
    n_singers: int = 8
    conditional: bool = True      # singer embedding into the first layer
    lambda_adv_pretrain: float = 1.0
    lambda_adv_finetune: float = 0.7
    lambda_l1: float = 20.0

    def __post_init__(self):
        if len(self.channels) != 6:
            raise ValueError("each discriminator has exactly 6 conv layers")

    @property
    def heights(self) -> tuple:
        return MRAD_HEIGHTS

    @property
    def widths(self) -> tuple:
        return MRAD_WIDTHS

    @property
    def n_discriminators(self) -> int:
        return 4


@dataclass
class VocoderConfig:
    key_embed_size: int = 16
    n_keys: int = 88
    hidden_channels: int = 256
    upsample_factors: tuple = (8, 6, 5)   # product == hop_size
    upsample_kernels: tuple = (16, 12, 10)
    resblock_kernels: tuple = (3, 7, 11)
    resblock_dilations: tuple = (1, 3, 5)
    resblock_extra_conv: bool = True      # second dilation-1 conv per layer
    pre_kernel: int = 7
    out_kernel: int = 7
    use_key_embedding: bool = True
    hop_size: int = 240

    def __post_init__(self):
        prod = 1
        for f in self.upsample_factors:
            prod *= f
        if prod != self.hop_size:
            raise ValueError("product of upsample_factors must equal hop_size")


@dataclass
class CriticConfig:
    # MSD: raw plus progressively average-pooled audio
    msd_scales: int = 3
    msd_channels: int = 64
    msd_kernel: int = 21
    # MPD
    mpd_periods: tuple = (2, 3, 5, 7, 11)
    mpd_channels: int = 16
    mpd_kernel: int = 5
    # MLD: crops as fractions of the training segment
    mld_crop_fractions: tuple = (0.25, 0.5, 1.0)
    mld_channels: int = 32
    mld_kernel: int = 15
    mld_dilations: tuple = (1, 2, 3, 4, 5)
    singer_embed_size: int = 64
    n_singers: int = 8
    conditional: bool = True
    injection_layer: int = 3      # embedding added after this conv layer
    # reconstruction losses
    stft_resolutions: tuple = ((512, 128, 512), (1024, 256, 1024), (2048, 512, 2048))
    mel_bands: tuple = (40, 80, 80)
    lambda_stft: float = 15.0
    lambda_mel: float = 15.0
    min_length_s: float = 0.25

    def __post_init__(self):
        if len(self.stft_resolutions) < 2:
            raise ValueError("need at least two STFT resolutions")
        if len(self.mel_bands) != len(self.stft_resolutions):
            raise ValueError("one mel band count per STFT resolution")


@dataclass
class TrainConfig:
    phase: str = "pretrain"              # pretrain | finetune
    batch_size: int = 24
    total_steps: int = 1_200_000
    warmup_steps: int = 150_000
    lr_init: float = 8e-4
    lr_final: float = 1e-4
    decay: str = "linear"                # linear | exponential
    lambda_adv: float | None = None      # None: resolved from phase
    target_singer: str | None = None
    p_target: float = 0.7
    seed: int = 1234
    segment_s: float = 0.8               # vocoder training crop
    max_frames: int = 2400               # acoustic batch frame cap
    log_every: int = 1
    checkpoint_every: int = 1000
    adam_betas_am: tuple = (0.9, 0.98)
    adam_betas_voc: tuple = (0.8, 0.99)
    grad_clip: float = 0.0
    experiment_tag: str = "default"
    num_workers: int = 0

    def __post_init__(self):
        if self.phase not in ("pretrain", "finetune"):
            raise ValueError(f"unknown phase {self.phase!r}")
        if not 0 < self.lr_final <= self.lr_init:
            raise ValueError("need 0 < lr_final <= lr_init")
        if not 0 <= self.p_target <= 1:
            raise ValueError("p_target must lie in [0, 1]")
        if self.warmup_steps >= self.total_steps:
            raise ValueError("warmup_steps must be < total_steps")


@dataclass
class PipelineConfig:
    """All sections of a config file, resolved against defaults."""

    features: FeatureConfig = field(default_factory=FeatureConfig)
    acoustic: AcousticConfig = field(default_factory=AcousticConfig)
    mrad: MradConfig = field(default_factory=MradConfig)
    vocoder: VocoderConfig = field(default_factory=VocoderConfig)
    critics: CriticConfig = field(default_factory=CriticConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


_SECTIONS = {
    "features": FeatureConfig,
    "acoustic": AcousticConfig,
    "mrad": MradConfig,
    "vocoder": VocoderConfig,
    "critics": CriticConfig,
    "train": TrainConfig,
}


def _coerce(cls, data: dict):
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[f.name] = value
    unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**kwargs)


def load_config(path) -> PipelineConfig:
    """Read a TOML config file, falling back to defaults for absent fields."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {name: _coerce(cls, raw[name]) for name, cls in _SECTIONS.items() if name in raw}
    return PipelineConfig(**kwargs)


def config_to_dict(cfg) -> dict:
    """Dataclass tree -> plain dict (tuples become lists), for checkpoints."""
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def config_hash(cfg) -> str:
    """Stable digest used to pair checkpoints produced under one feature setup."""
    payload = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=list)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def desk_scale() -> PipelineConfig:
    """Preset small enough to overfit one clip on a single CPU core."""
    cfg = PipelineConfig()
    cfg.acoustic = AcousticConfig(
        hidden_size=128,
        n_encoder_blocks=2,
        n_decoder_blocks=2,
        ffn_filter=128,
        postnet=PostnetConfig(channels=64),
        dropout=0.1,
    )
    cfg.mrad = MradConfig(channels=(8, 16, 32, 32, 32, 1), singer_embed_size=32)
    cfg.vocoder = VocoderConfig(hidden_channels=64, resblock_extra_conv=False)
    cfg.critics = CriticConfig(
        msd_channels=8,
        msd_kernel=15,
        mpd_channels=4,
        mld_channels=8,
        singer_embed_size=32,
    )
    cfg.train = TrainConfig(
        batch_size=4,
        total_steps=10_000,
        warmup_steps=1_000,
        lr_init=2e-4,
        lr_final=1e-4,
        segment_s=0.24,
        seed=1234,
    )
    return cfg
