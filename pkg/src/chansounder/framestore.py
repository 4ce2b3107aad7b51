"""On-disk formats for captures, frame series, trigger logs and profiles.

Capture files are raw interleaved little-endian 32-bit float IQ pairs
(the native format of most recording front ends) with a mandatory text
sidecar ``<path>.meta`` naming the format version, sample rate, center
frequency, start index, stimulation sequence descriptor and seed
provenance.  A capture without its sidecar is not readable.

Frame-series and profile files are small binary containers: a 4-byte
magic, a length-prefixed text header of key=value lines, then fixed
records of little-endian 64-bit float pairs.  Impulse responses are
stored at full double precision because the correlator output spans far
more dynamic range than the raw capture.

All writers are deterministic: identical inputs produce byte-identical
files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .calib import CalibrationProfile
from .frames import ImpulseResponseFrame, IqFrame, TriggerEvent

CAPTURE_VERSION = 1
FRAMES_MAGIC = b"CSF1"
PROFILE_MAGIC = b"CSP1"


def _write_kv(path: str, pairs: list[tuple[str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for key, value in pairs:
            f.write(f"{key}={value}\n")


def _read_kv(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value
    return out


@dataclass
class CaptureMeta:
    """Sidecar contents of a capture file."""

    sample_rate: float
    center_frequency: float
    start_index: int
    sequence_descriptor: str
    seed_note: str
    version: int = CAPTURE_VERSION


def sidecar_path(path: str) -> str:
    return path + ".meta"


def write_capture(
    path: str,
    frame: IqFrame,
    sequence_descriptor: str = "",
    seed_note: str = "",
) -> None:
    """Write an IQ capture: float32 payload plus text sidecar."""
    payload = np.asarray(frame.samples).astype("<c8").tobytes()
    with open(path, "wb") as f:
        f.write(payload)
    _write_kv(
        sidecar_path(path),
        [
            ("format_version", str(CAPTURE_VERSION)),
            ("sample_rate", repr(float(frame.fs))),
            ("center_frequency", repr(float(frame.f_c))),
            ("start_index", str(frame.start_index)),
            ("sequence", sequence_descriptor),
            ("seed_note", seed_note),
        ],
    )


def read_capture(path: str) -> tuple[IqFrame, CaptureMeta]:
    """Read an IQ capture and its mandatory sidecar."""
    try:
        kv = _read_kv(sidecar_path(path))
    except FileNotFoundError:
        raise ValueError(
            f"capture {path} has no sidecar {sidecar_path(path)}; refusing to "
            "guess the sample rate"
        ) from None
    try:
        version = int(kv["format_version"])
        fs = float(kv["sample_rate"])
        f_c = float(kv["center_frequency"])
        start_index = int(kv.get("start_index", "0"))
    except KeyError as exc:
        raise ValueError(f"capture sidecar {sidecar_path(path)} is missing {exc}") from exc
    if version != CAPTURE_VERSION:
        raise ValueError(
            f"unsupported capture format version {version} (supported: {CAPTURE_VERSION})"
        )

    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) % 8 != 0:
        raise ValueError(
            f"capture payload {path} is truncated: {len(raw)} bytes is not a "
            "whole number of float32 IQ pairs"
        )
    samples = np.frombuffer(raw, dtype="<c8").astype(np.complex128)
    meta = CaptureMeta(
        sample_rate=fs,
        center_frequency=f_c,
        start_index=start_index,
        sequence_descriptor=kv.get("sequence", ""),
        seed_note=kv.get("seed_note", ""),
        version=version,
    )
    return IqFrame(samples, fs, f_c, start_index), meta


@dataclass
class FrameSeriesMeta:
    """Header contents of a frame-series file."""

    n_seq: int
    t_s: float
    t_seq: float
    calibration: str
    total_sequences: int


_RECORD_HEAD = struct.Struct("<qdB")


def write_frames(
    path: str,
    frames: list[ImpulseResponseFrame],
    t_s: float,
    calibration: str = "",
    total_sequences: int | None = None,
) -> None:
    """Write an impulse-response series with its grid metadata.

    ``total_sequences`` records how many periods the stimulation run
    contained (including gated-out ones); it defaults to one past the
    highest stored index.
    """
    if not frames:
        raise ValueError("refusing to write an empty frame series")
    n_seq = frames[0].n_seq
    if any(fr.n_seq != n_seq for fr in frames):
        raise ValueError("all frames in a series must share one length")
    if total_sequences is None:
        total_sequences = max(fr.sequence_index for fr in frames) + 1

    header = (
        f"n_records={len(frames)}\n"
        f"n_seq={n_seq}\n"
        f"t_s={t_s!r}\n"
        f"t_seq={n_seq * t_s!r}\n"
        f"calibration={calibration}\n"
        f"total_sequences={total_sequences}\n"
    ).encode("utf-8")

    with open(path, "wb") as f:
        f.write(FRAMES_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for fr in frames:
            f.write(_RECORD_HEAD.pack(fr.sequence_index, fr.t_i, 1 if fr.corrected else 0))
            f.write(np.asarray(fr.h).astype("<c16").tobytes())


def read_frames(path: str) -> tuple[list[ImpulseResponseFrame], FrameSeriesMeta]:
    """Read a frame series written by :func:`write_frames`."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != FRAMES_MAGIC:
        raise ValueError(f"{path} is not a frame-series file (bad magic)")
    if len(blob) < 8:
        raise ValueError(f"{path} is truncated before the header")
    (header_len,) = struct.unpack_from("<I", blob, 4)
    header_end = 8 + header_len
    if len(blob) < header_end:
        raise ValueError(f"{path} is truncated inside the header")
    kv: dict[str, str] = {}
    for line in blob[8:header_end].decode("utf-8").splitlines():
        if line:
            key, _, value = line.partition("=")
            kv[key] = value
    try:
        n_records = int(kv["n_records"])
        n_seq = int(kv["n_seq"])
        t_s = float(kv["t_s"])
        t_seq = float(kv["t_seq"])
        total_sequences = int(kv["total_sequences"])
    except KeyError as exc:
        raise ValueError(f"{path}: frame-series header is missing {exc}") from exc

    record_size = _RECORD_HEAD.size + 16 * n_seq
    frames: list[ImpulseResponseFrame] = []
    off = header_end
    for i in range(n_records):
        if off + record_size > len(blob):
            raise ValueError(f"{path} is truncated at record {i} of {n_records}")
        seq_index, t_i, corrected = _RECORD_HEAD.unpack_from(blob, off)
        h = np.frombuffer(
            blob, dtype="<c16", count=n_seq, offset=off + _RECORD_HEAD.size
        ).astype(np.complex128)
        frames.append(
            ImpulseResponseFrame(
                h=h, t_i=t_i, sequence_index=seq_index, corrected=bool(corrected)
            )
        )
        off += record_size
    if off != len(blob):
        raise ValueError(f"{path} has {len(blob) - off} trailing bytes after the records")

    meta = FrameSeriesMeta(
        n_seq=n_seq,
        t_s=t_s,
        t_seq=t_seq,
        calibration=kv.get("calibration", ""),
        total_sequences=total_sequences,
    )
    return frames, meta


def write_trigger_log(path: str, events: list[TriggerEvent]) -> None:
    """Write trigger events as one text line each."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("# sample_index,kind,span,note\n")
        for ev in sorted(events, key=lambda e: e.sample_index):
            f.write(f"{ev.sample_index},{ev.kind},{ev.span},{ev.note}\n")


def read_trigger_log(path: str) -> list[TriggerEvent]:
    """Read a trigger log, sorted by sample index."""
    events: list[TriggerEvent] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",", 3)
            if len(parts) < 3:
                raise ValueError(
                    f"{path}:{lineno}: expected sample_index,kind,span[,note], got {line!r}"
                )
            try:
                index = int(parts[0])
                span = int(parts[2])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            note = parts[3] if len(parts) > 3 else ""
            try:
                events.append(TriggerEvent(index, parts[1], span, note))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return sorted(events, key=lambda e: e.sample_index)


def write_profile(path: str, profile: CalibrationProfile) -> None:
    """Write a calibration profile (header plus float64 payload)."""
    clamped = ".".join(str(int(b)) for b in profile.clamped_bins)
    header = (
        f"n_seq={profile.n_seq}\n"
        f"source={profile.source}\n"
        f"gain_cap_db={profile.gain_cap_db!r}\n"
        f"created_from={profile.created_from}\n"
        f"clamped_bins={clamped}\n"
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(PROFILE_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        f.write(np.asarray(profile.h_ftt).astype("<c16").tobytes())


def read_profile(path: str) -> CalibrationProfile:
    """Read a calibration profile written by :func:`write_profile`."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != PROFILE_MAGIC:
        raise ValueError(f"{path} is not a calibration-profile file (bad magic)")
    if len(blob) < 8:
        raise ValueError(f"{path} is truncated before the header")
    (header_len,) = struct.unpack_from("<I", blob, 4)
    header_end = 8 + header_len
    if len(blob) < header_end:
        raise ValueError(f"{path} is truncated inside the header")
    kv: dict[str, str] = {}
    for line in blob[8:header_end].decode("utf-8").splitlines():
        if line:
            key, _, value = line.partition("=")
            kv[key] = value
    try:
        n_seq = int(kv["n_seq"])
        source = kv["source"]
        gain_cap_db = float(kv["gain_cap_db"])
        created_from = int(kv["created_from"])
    except KeyError as exc:
        raise ValueError(f"{path}: profile header is missing {exc}") from exc
    clamped_text = kv.get("clamped_bins", "")
    clamped = (
        np.array([int(t) for t in clamped_text.split(".")], dtype=np.int64)
        if clamped_text
        else np.empty(0, dtype=np.int64)
    )
    payload = blob[header_end:]
    if len(payload) != 16 * n_seq:
        raise ValueError(
            f"{path} payload is {len(payload)} bytes, expected {16 * n_seq}"
        )
    h_ftt = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return CalibrationProfile(
        h_ftt=h_ftt,
        source=source,
        gain_cap_db=gain_cap_db,
        created_from=created_from,
        clamped_bins=clamped,
    )
