"""The sounding pipeline: stimulate, gate, correlate, normalize, correct.

Stimulation is the infinite (here: finite but long) repetition of one
sounding sequence.  On the correlation side the received stream is cut
at sequence boundaries, periods touched by receiver faults are dropped,
and each surviving period is periodically cross-correlated against the
reference sequence.  Dividing by the sequence length turns the
correlation peak into the channel gain estimate; an optional
forward-transmission profile then removes the measured cable and
front-end response.  Each output frame is stamped with the time

    t_i = (i + 1) * T_seq - T_s

(the instant of the last sample of sequence period ``i``), which is the
natural time axis for Doppler analysis across frames.

All stages are pure functions over immutable frames, so their
composition is deterministic no matter how the stream is chunked or
which process runs which half; the capture file and wire paths quantize
samples to 32-bit floats at the same point to stay bit-identical with
the in-process path.
"""

from __future__ import annotations

from typing import Iterator, Sequence as SequenceType

import numpy as np

from . import chansim
from .calib import CalibrationProfile, remove_dc_bias
from .corrmath import fast_pccf
from .frames import ImpulseResponseFrame, IqFrame, TriggerEvent
from .seqgen import Sequence


def stimulate(
    seq: Sequence,
    n_reps: int,
    fs: float,
    f_c: float = 0.0,
    sequences_per_frame: int | None = None,
) -> Iterator[IqFrame]:
    """Yield frames of whole-sequence repetitions, ``n_reps`` in total.

    Frames carry consecutive start indices beginning at 0, so sequence
    period ``i`` always occupies absolute samples
    ``[i * n_seq, (i + 1) * n_seq)``.
    """
    if n_reps < 1:
        raise ValueError("need at least one sequence repetition")
    if sequences_per_frame is not None and sequences_per_frame < 1:
        raise ValueError("sequences_per_frame must be positive")
    per = n_reps if sequences_per_frame is None else sequences_per_frame
    emitted = 0
    start = 0
    while emitted < n_reps:
        take = min(per, n_reps - emitted)
        samples = np.tile(seq.samples, take)
        yield IqFrame(samples, fs, f_c, start_index=start)
        emitted += take
        start += take * seq.n_seq


def stimulate_capture(seq: Sequence, n_reps: int, fs: float, f_c: float = 0.0) -> IqFrame:
    """One frame holding the full stimulation stream."""
    frames = list(stimulate(seq, n_reps, fs, f_c))
    return frames[0]


def quantize_capture(frame: IqFrame) -> IqFrame:
    """Round samples through 32-bit float precision.

    Capture files and wire chunks carry interleaved 32-bit floats; the
    in-process path applies the same rounding so all three transports
    produce bit-identical correlator input.
    """
    q = np.asarray(frame.samples).astype(np.complex64).astype(np.complex128)
    return IqFrame(q, frame.fs, frame.f_c, frame.start_index)


def sequence_gate(
    frame: IqFrame,
    events: SequenceType[TriggerEvent],
    n_seq: int,
) -> tuple[list[np.ndarray], list[int]]:
    """Cut the stream into sequence periods and drop damaged ones.

    A period is dropped when any trigger event's corrupted span
    ``[sample_index, sample_index + span)`` overlaps it, and also when
    the frame does not cover it completely.  Returns the surviving
    period sample blocks together with their period indices (strictly
    increasing).  Absolute sample index 0 is a period boundary by
    construction of :func:`stimulate`.
    """
    if n_seq < 1:
        raise ValueError("sequence length must be positive")
    lo, hi = frame.start_index, frame.end_index

    first = -(-lo // n_seq)  # first period fully inside the frame
    last = hi // n_seq  # one past the last full period
    tainted: set[int] = set()
    for ev in events:
        span = max(1, ev.span)
        k0 = ev.sample_index // n_seq
        k1 = (ev.sample_index + span - 1) // n_seq
        tainted.update(range(k0, k1 + 1))

    x = np.asarray(frame.samples)
    blocks: list[np.ndarray] = []
    kept: list[int] = []
    for k in range(first, last):
        if k in tainted:
            continue
        a = k * n_seq - lo
        blocks.append(x[a : a + n_seq])
        kept.append(k)
    return blocks, kept


def correlate_sequence(block: np.ndarray, seq: Sequence) -> np.ndarray:
    """Periodic cross-correlation of one period against the reference."""
    block = np.asarray(block)
    if len(block) != seq.n_seq:
        raise ValueError(
            f"period block has {len(block)} samples, sequence needs {seq.n_seq}"
        )
    return fast_pccf(block, seq.samples).values


def normalize(y_corr: np.ndarray, n_seq: int) -> np.ndarray:
    """Scale raw correlation to channel-gain units (divide by N).

    For an MLS this leaves the known ``v_oop / N`` bias floor that
    shrinks with sequence length; for an FZC there is no bias at all.
    """
    if n_seq < 1:
        raise ValueError("sequence length must be positive")
    return np.asarray(y_corr) / n_seq


def measurement_time(sequence_index: int, t_seq: float, t_s: float) -> float:
    """Timestamp of the frame from sequence period ``sequence_index``."""
    return (sequence_index + 1) * t_seq - t_s


def correct_ftt(
    frame: ImpulseResponseFrame, profile: CalibrationProfile | None
) -> ImpulseResponseFrame:
    """Apply a forward-transmission correction profile to one frame.

    With no profile the frame passes through untouched (and keeps its
    uncorrected flag).  Correction is circular convolution with the
    profile filter, done in the frequency domain.
    """
    if profile is None:
        return frame
    if profile.n_seq != frame.n_seq:
        raise ValueError(
            f"profile length {profile.n_seq} does not match frame length {frame.n_seq}"
        )
    h = np.fft.ifft(np.fft.fft(frame.h) * profile.spectrum())
    return ImpulseResponseFrame(
        h=h, t_i=frame.t_i, sequence_index=frame.sequence_index, corrected=True
    )


def frames_from_capture(
    capture: IqFrame,
    seq: Sequence,
    events: SequenceType[TriggerEvent] = (),
    profile: CalibrationProfile | None = None,
    discard_first: bool = True,
    dc_suppression_hz: float = 0.0,
    dc_position: str = "before",
) -> list[ImpulseResponseFrame]:
    """Run the full correlation side over a captured stream.

    ``discard_first`` drops sequence period 0, which a real receiver
    records before the channel is fully rung up (the first period is
    the only one whose delayed multipath replicas come from silence
    rather than from the previous repetition).  ``dc_suppression_hz``
    enables DC-bias removal on every frame; ``dc_position`` chooses
    whether that happens before or after the profile correction.
    """
    if dc_position not in ("before", "after"):
        raise ValueError("dc_position must be 'before' or 'after'")
    n_seq = seq.n_seq
    t_s = 1.0 / capture.fs
    t_seq = n_seq * t_s

    blocks, kept = sequence_gate(capture, events, n_seq)
    out: list[ImpulseResponseFrame] = []
    for block, k in zip(blocks, kept):
        if discard_first and k == 0:
            continue
        h = normalize(correlate_sequence(block, seq), n_seq)
        fr = ImpulseResponseFrame(
            h=h,
            t_i=measurement_time(k, t_seq, t_s),
            sequence_index=k,
            corrected=False,
        )
        if dc_suppression_hz > 0.0 and dc_position == "before":
            fr = remove_dc_bias(fr, dc_suppression_hz, capture.fs)
        fr = correct_ftt(fr, profile)
        if dc_suppression_hz > 0.0 and dc_position == "after":
            fr = remove_dc_bias(fr, dc_suppression_hz, capture.fs)
        out.append(fr)
    return out


def run_sounding(config, model: chansim.ChannelModel | None = None) -> list[ImpulseResponseFrame]:
    """Full single-process sounding run driven by a campaign config.

    Builds the stimulation stream, passes it through the configured (or
    given) channel model, injects any configured trigger faults,
    quantizes to capture precision, and runs the correlation side.
    """
    seq = config.make_sequence()
    fs = config.sample_rate
    n_reps = config.num_sequences()

    x = stimulate_capture(seq, n_reps, fs, config.center_frequency)
    if model is None:
        model = config.channel_model()
    y = chansim.apply_channel(x, model)

    events = config.trigger_events()
    if events:
        y, events = chansim.inject_disruption(y, events, config.corrupt_span)

    y = quantize_capture(y)
    return frames_from_capture(
        y,
        seq,
        events=events,
        profile=config.load_profile(),
        discard_first=config.discard_first,
        dc_suppression_hz=config.dc_suppression_hz,
        dc_position=config.dc_position,
    )
