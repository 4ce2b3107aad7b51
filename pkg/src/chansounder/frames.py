"""Shared stream datatypes passed between pipeline stages.

An :class:`IqFrame` carries a block of complex baseband samples together
with the sample rate and the absolute index of its first sample, so that
any stage can reconstruct absolute time without extra bookkeeping.  An
:class:`ImpulseResponseFrame` is one correlator output: a delay-domain
snapshot of the channel stamped with its measurement time.  A
:class:`TriggerEvent` marks a receiver fault (buffer overflow or an
external marker) at a known absolute sample index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TRIGGER_KINDS = ("overflow", "external")


@dataclass
class IqFrame:
    """A contiguous block of complex baseband samples.

    Attributes
    ----------
    samples : np.ndarray
        Complex sample vector.
    fs : float
        Sample rate in Hz.  Must be positive.
    f_c : float
        Center frequency in Hz.  Zero for pure baseband work.
    start_index : int
        Absolute index of ``samples[0]`` in the overall stream.
    """

    samples: np.ndarray
    fs: float
    f_c: float = 0.0
    start_index: int = 0

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 1:
            raise ValueError("IqFrame samples must be a 1-d vector")
        if not self.fs > 0:
            raise ValueError(f"sample rate must be positive, got {self.fs}")
        if self.start_index < 0:
            raise ValueError("start_index must be non-negative")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def t0(self) -> float:
        """Absolute time of the first sample in seconds."""
        return self.start_index / self.fs

    @property
    def duration(self) -> float:
        """Frame length in seconds."""
        return len(self.samples) / self.fs

    @property
    def end_index(self) -> int:
        """Absolute index one past the last sample."""
        return self.start_index + len(self.samples)


@dataclass(order=True)
class TriggerEvent:
    """A receiver fault marker anchored to an absolute sample index.

    ``span`` is the number of consecutive samples corrupted by the event;
    the gate drops every sequence period the span touches.
    """

    sample_index: int
    kind: str = field(default="overflow", compare=False)
    span: int = field(default=1, compare=False)
    note: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.sample_index < 0:
            raise ValueError("trigger sample_index must be non-negative")
        if self.kind not in TRIGGER_KINDS:
            raise ValueError(
                f"unknown trigger kind {self.kind!r}, expected one of {TRIGGER_KINDS}"
            )
        if self.span < 1:
            raise ValueError("trigger span must be at least 1 sample")


@dataclass
class ImpulseResponseFrame:
    """One correlator output: h[tau] at a single measurement instant.

    Attributes
    ----------
    h : np.ndarray
        Complex impulse-response vector over the delay axis, one entry
        per sample period, length equal to the sounding sequence length.
    t_i : float
        Measurement timestamp in seconds (end of the sequence period
        that produced this frame, minus one sample period).
    sequence_index : int
        Index of the originating sequence period in the stimulation
        stream (0-based, counting dropped periods too).
    corrected : bool
        True once a forward-transmission correction has been applied.
    """

    h: np.ndarray
    t_i: float
    sequence_index: int
    corrected: bool = False

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h)
        if self.h.ndim != 1:
            raise ValueError("impulse response must be a 1-d vector")
        if self.sequence_index < 0:
            raise ValueError("sequence_index must be non-negative")

    @property
    def n_seq(self) -> int:
        return len(self.h)
