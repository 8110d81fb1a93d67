"""Log-mel spectrogram frontend: the pure-acoustic view of an utterance.

The pipeline is deliberately plain DSP with exact contracts: Hann-windowed
frames without centering or padding (frame count is ``1 + (N - win) // hop``),
squared-magnitude real FFT, triangular filters spaced evenly on the mel
scale, and a floored log10.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np

from .exceptions import AudioFormatError, ValidationError


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass
class MelConfig:
    """Frontend parameters. Defaults: 25 ms Hann window, 10 ms hop, 80 mels."""

    sample_rate: int = 16000
    win_length: int = 400
    hop_length: int = 160
    n_fft: int = 512
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float | None = None
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.fmax is None:
            self.fmax = self.sample_rate / 2.0
        if not 0 < self.win_length <= self.n_fft:
            raise ValidationError(
                f"need 0 < win_length <= n_fft, got {self.win_length} / {self.n_fft}"
            )
        if self.hop_length < 1:
            raise ValidationError(f"hop_length must be >= 1, got {self.hop_length}")
        if not self.fmin < self.fmax <= self.sample_rate / 2.0:
            raise ValidationError(
                f"need fmin < fmax <= sample_rate/2, got {self.fmin} / {self.fmax}"
            )
        if self.n_mels < 1:
            raise ValidationError(f"n_mels must be >= 1, got {self.n_mels}")
        if not self.log_floor > 0:
            raise ValidationError(f"log_floor must be positive, got {self.log_floor}")


@dataclass
class Waveform:
    """Mono audio samples in [-1, 1] at a known sample rate."""

    samples: np.ndarray
    sample_rate: int


def read_wav(path) -> Waveform:
    """Read a 16-bit PCM RIFF/WAVE file, averaging channels to mono.

    Samples are scaled by 1/32768 into [-1, 1).
    """
    try:
        with wave.open(str(path), "rb") as wav:
            n_channels = wav.getnchannels()
            sampwidth = wav.getsampwidth()
            framerate = wav.getframerate()
            n_frames = wav.getnframes()
            raw = wav.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"{path}: malformed WAV file: {exc}") from exc
    if sampwidth != 2:
        raise AudioFormatError(
            f"{path}: only 16-bit PCM is supported, got {8 * sampwidth}-bit"
        )
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    return Waveform(samples=data, sample_rate=framerate)


def hann_window(length: int) -> np.ndarray:
    # periodic variant, the standard choice for STFT analysis
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)


def frame_count(n_samples: int, win_length: int, hop_length: int) -> int:
    if n_samples < win_length:
        raise ValidationError(
            f"waveform of {n_samples} samples is shorter than one {win_length}-sample window"
        )
    return 1 + (n_samples - win_length) // hop_length


def stft_power(wave_: Waveform, config: MelConfig) -> np.ndarray:
    """Power spectrogram, shape (frames, n_fft // 2 + 1).

    Frames are Hann-windowed slices of the raw signal, zero-padded to
    ``n_fft``; no centering. Power is the squared magnitude of the
    real-input DFT.
    """
    samples = np.asarray(wave_.samples, dtype=np.float64)
    t = frame_count(samples.shape[0], config.win_length, config.hop_length)
    window = hann_window(config.win_length)
    starts = np.arange(t) * config.hop_length
    idx = starts[:, None] + np.arange(config.win_length)[None, :]
    frames = samples[idx] * window
    spectrum = np.fft.rfft(frames, n=config.n_fft, axis=1)
    return np.abs(spectrum) ** 2


def mel_filterbank(config: MelConfig) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft // 2 + 1).

    Filter centers are equally spaced on the mel scale between ``fmin`` and
    ``fmax``. Raises if the FFT resolution leaves any filter without
    support (all-zero row).
    """
    n_bins = config.n_fft // 2 + 1
    fft_freqs = np.arange(n_bins) * config.sample_rate / config.n_fft
    mel_pts = np.linspace(hz_to_mel(config.fmin), hz_to_mel(config.fmax), config.n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    lower = hz_pts[:-2][:, None]
    center = hz_pts[1:-1][:, None]
    upper = hz_pts[2:][:, None]
    rising = (fft_freqs[None, :] - lower) / (center - lower)
    falling = (upper - fft_freqs[None, :]) / (upper - center)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    dead = np.flatnonzero(fb.sum(axis=1) == 0.0)
    if dead.size:
        raise ValidationError(
            f"n_mels={config.n_mels} too large for n_fft={config.n_fft} at "
            f"{config.sample_rate} Hz: filter(s) {dead.tolist()} have no FFT bin support"
        )
    return fb


def extract_mel(path, config: MelConfig) -> np.ndarray:
    """Log-mel features for one WAV file, shape (frames, n_mels).

    Values are ``log10(max(filterbank @ power, log_floor))``; the floor
    keeps silence finite at exactly ``log10(log_floor)``.
    """
    wave_ = read_wav(path)
    if wave_.sample_rate != config.sample_rate:
        raise ValidationError(
            f"{path}: sample rate {wave_.sample_rate} does not match "
            f"configured {config.sample_rate} (no resampling is performed)"
        )
    power = stft_power(wave_, config)
    fb = mel_filterbank(config)
    mel_energy = power @ fb.T
    return np.log10(np.maximum(mel_energy, config.log_floor))
