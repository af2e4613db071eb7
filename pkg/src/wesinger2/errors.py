"""Exception types raised across the synthesis pipeline."""


class WeSinger2Error(Exception):
    """Base class for all pipeline errors."""


# --- feature extraction ---

class EmptyAudio(WeSinger2Error):
    """Waveform contains no samples."""


class RateMismatch(WeSinger2Error):
    """Waveform sample rate differs from the configured rate."""


class AllUnvoiced(WeSinger2Error):
    """F0 contour has no voiced frame to interpolate from."""


class NonPositiveF0(WeSinger2Error):
    """A pitch value expected to be strictly positive is not."""


class EmptyCollection(WeSinger2Error):
    """Statistics requested over an empty set of spectrograms."""


class MixedSingers(WeSinger2Error):
    """Statistics requested over spectrograms from different singers."""


class DoubleNormalize(WeSinger2Error):
    """Normalization applied to an already-normalized spectrogram (or inverse)."""


class SingerMismatch(WeSinger2Error):
    """Spectrogram and statistics belong to different singers."""


# --- score parsing ---

class ParseError(WeSinger2Error):
    """Malformed score file; carries the offending line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class OverlapError(WeSinger2Error):
    """Two score notes overlap in time."""


class UnknownPhoneme(WeSinger2Error):
    """Phoneme not present in the configured inventory."""


# --- models ---

class EmptyInput(WeSinger2Error):
    """Model invoked on an empty token sequence."""


class NonPositiveDuration(WeSinger2Error):
    """Length regulation received a duration < 1."""


class UnknownSinger(WeSinger2Error):
    """Singer id outside the embedding table."""


class ChannelMismatch(WeSinger2Error):
    """Channel count does not match the configured width."""


class ShapeMismatch(WeSinger2Error):
    """Tensor shape violates an operation's contract."""


class LengthMismatch(WeSinger2Error):
    """Two sequences expected to align have different lengths."""


class FrameMismatch(WeSinger2Error):
    """Frame counts of paired features disagree."""


class KeyOutOfRange(WeSinger2Error):
    """Piano key outside [1, 88]."""


class InsufficientFrames(WeSinger2Error):
    """Spectrogram too short for any region size."""


class TooShort(WeSinger2Error):
    """Waveform shorter than the critics' minimum receptive field."""


# --- training / evaluation ---

class StepOutOfRange(WeSinger2Error):
    """Learning-rate query outside [0, total_steps]."""


class NoTargetClips(WeSinger2Error):
    """Adaptation sampler found no clips for the target singer."""


class NoOtherClips(WeSinger2Error):
    """Adaptation sampler found no non-target clips (fallback is target-only)."""


class DataIncomplete(WeSinger2Error):
    """Feature cache is missing records referenced by the manifest."""


class NonFiniteLoss(WeSinger2Error):
    """A training loss became NaN/inf; training aborts with a diagnostic dump."""


class NoVoicedOverlap(WeSinger2Error):
    """No frame is voiced in both signals under comparison."""


class IncompatibleCheckpoints(WeSinger2Error):
    """Acoustic-model and vocoder checkpoints disagree on feature config."""
