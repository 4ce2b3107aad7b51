"""TCP wire protocol linking a stimulation process to a correlation process.

Every message is a 4-byte little-endian unsigned length followed by the
message body; the first body byte is the message type:

* HELLO (1): ``<u16 protocol_version> <f64 fs> <f64 f_c>
  <u16 desc_len> <descriptor utf-8>``.  Sent once by the stimulation
  side before any samples; the correlation side aborts on any mismatch
  with its own configuration.
* IQ_CHUNK (2): ``<i64 start_index> <u32 n_samples>`` then the samples
  as interleaved little-endian float32 IQ pairs, exactly the capture
  file payload encoding.  Chunks arrive with strictly increasing,
  gap-free start indices.
* TRIGGER (3): ``<i64 sample_index> <u8 kind> <u32 span>
  <u16 note_len> <note utf-8>``; kind 0 is overflow, 1 external.
* END (4): ``<i64 total_samples>`` closing the stream; the receiver
  cross-checks its sample count.

Anything that does not parse exactly raises :class:`WireProtocolError`
(a handshake disagreement raises the :class:`HelloMismatchError`
subtype), never a bare struct or index error.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass, field

import numpy as np

from . import sounder
from .chansim import apply_channel, inject_disruption
from .frames import IqFrame, TriggerEvent
from .seqgen import descriptor as seq_descriptor
from .seqgen import from_descriptor

PROTOCOL_VERSION = 1
MSG_HELLO = 1
MSG_IQ_CHUNK = 2
MSG_TRIGGER = 3
MSG_END = 4

#: Upper bound on a single message body; anything larger is rejected
#: before allocation.
MAX_MESSAGE_BYTES = 1 << 26

_TRIGGER_KIND_CODES = {"overflow": 0, "external": 1}
_TRIGGER_KIND_NAMES = {v: k for k, v in _TRIGGER_KIND_CODES.items()}

_HELLO_HEAD = struct.Struct("<HddH")
_CHUNK_HEAD = struct.Struct("<qI")
_TRIGGER_HEAD = struct.Struct("<qBIH")
_END_BODY = struct.Struct("<q")
_LENGTH = struct.Struct("<I")


class WireProtocolError(ValueError):
    """A wire message violated the protocol."""


class HelloMismatchError(WireProtocolError):
    """The peers disagree on stream parameters."""


@dataclass
class Hello:
    fs: float
    f_c: float
    sequence_descriptor: str
    protocol_version: int = PROTOCOL_VERSION


@dataclass
class IqChunk:
    start_index: int
    samples: np.ndarray


@dataclass
class End:
    total_samples: int


def _frame(body: bytes) -> bytes:
    return _LENGTH.pack(len(body)) + body


def encode_hello(hello: Hello) -> bytes:
    desc = hello.sequence_descriptor.encode("utf-8")
    body = (
        bytes([MSG_HELLO])
        + _HELLO_HEAD.pack(hello.protocol_version, hello.fs, hello.f_c, len(desc))
        + desc
    )
    return _frame(body)


def encode_iq_chunk(start_index: int, samples: np.ndarray) -> bytes:
    payload = np.asarray(samples).astype("<c8").tobytes()
    body = bytes([MSG_IQ_CHUNK]) + _CHUNK_HEAD.pack(start_index, len(samples)) + payload
    return _frame(body)


def encode_trigger(event: TriggerEvent) -> bytes:
    note = event.note.encode("utf-8")
    body = (
        bytes([MSG_TRIGGER])
        + _TRIGGER_HEAD.pack(
            event.sample_index, _TRIGGER_KIND_CODES[event.kind], event.span, len(note)
        )
        + note
    )
    return _frame(body)


def encode_end(total_samples: int) -> bytes:
    return _frame(bytes([MSG_END]) + _END_BODY.pack(total_samples))


def decode_message(body: bytes) -> "Hello | IqChunk | TriggerEvent | End":
    """Decode one message body (without the length prefix).

    Raises :class:`WireProtocolError` on any structural violation.
    """
    if not isinstance(body, (bytes, bytearray, memoryview)):
        raise WireProtocolError("message body must be bytes")
    body = bytes(body)
    if len(body) == 0:
        raise WireProtocolError("empty message body")
    if len(body) > MAX_MESSAGE_BYTES:
        raise WireProtocolError(f"message of {len(body)} bytes exceeds the size limit")
    mtype = body[0]
    payload = body[1:]

    if mtype == MSG_HELLO:
        if len(payload) < _HELLO_HEAD.size:
            raise WireProtocolError("HELLO body is shorter than its fixed header")
        version, fs, f_c, desc_len = _HELLO_HEAD.unpack_from(payload)
        if version != PROTOCOL_VERSION:
            raise WireProtocolError(
                f"unsupported protocol version {version} (supported: {PROTOCOL_VERSION})"
            )
        desc = payload[_HELLO_HEAD.size :]
        if len(desc) != desc_len:
            raise WireProtocolError(
                f"HELLO descriptor length {desc_len} does not match body ({len(desc)} bytes)"
            )
        if not (fs > 0) or not np.isfinite(fs) or not np.isfinite(f_c):
            raise WireProtocolError(f"HELLO carries invalid stream parameters fs={fs} f_c={f_c}")
        try:
            text = desc.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireProtocolError(f"HELLO descriptor is not valid utf-8: {exc}") from None
        return Hello(fs=fs, f_c=f_c, sequence_descriptor=text, protocol_version=version)

    if mtype == MSG_IQ_CHUNK:
        if len(payload) < _CHUNK_HEAD.size:
            raise WireProtocolError("IQ_CHUNK body is shorter than its fixed header")
        start_index, count = _CHUNK_HEAD.unpack_from(payload)
        if start_index < 0:
            raise WireProtocolError(f"IQ_CHUNK start index {start_index} is negative")
        data = payload[_CHUNK_HEAD.size :]
        if len(data) != 8 * count:
            raise WireProtocolError(
                f"IQ_CHUNK declares {count} samples but carries {len(data)} payload bytes"
            )
        if count == 0:
            raise WireProtocolError("IQ_CHUNK with zero samples")
        samples = np.frombuffer(data, dtype="<c8").astype(np.complex128)
        return IqChunk(start_index=start_index, samples=samples)

    if mtype == MSG_TRIGGER:
        if len(payload) < _TRIGGER_HEAD.size:
            raise WireProtocolError("TRIGGER body is shorter than its fixed header")
        sample_index, kind_code, span, note_len = _TRIGGER_HEAD.unpack_from(payload)
        note = payload[_TRIGGER_HEAD.size :]
        if len(note) != note_len:
            raise WireProtocolError(
                f"TRIGGER note length {note_len} does not match body ({len(note)} bytes)"
            )
        if kind_code not in _TRIGGER_KIND_NAMES:
            raise WireProtocolError(f"unknown trigger kind code {kind_code}")
        if sample_index < 0 or span < 1:
            raise WireProtocolError(
                f"TRIGGER with invalid position {sample_index} or span {span}"
            )
        try:
            note_text = note.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireProtocolError(f"TRIGGER note is not valid utf-8: {exc}") from None
        return TriggerEvent(
            sample_index=sample_index,
            kind=_TRIGGER_KIND_NAMES[kind_code],
            span=span,
            note=note_text,
        )

    if mtype == MSG_END:
        if len(payload) != _END_BODY.size:
            raise WireProtocolError(
                f"END body must be exactly {_END_BODY.size + 1} bytes, got {len(body)}"
            )
        (total,) = _END_BODY.unpack(payload)
        if total < 0:
            raise WireProtocolError(f"END with negative sample count {total}")
        return End(total_samples=total)

    raise WireProtocolError(f"unknown message type {mtype}")


def read_message(stream) -> "Hello | IqChunk | TriggerEvent | End | None":
    """Read one framed message from a binary stream.

    Returns None on a clean end-of-stream at a message boundary; raises
    :class:`WireProtocolError` on truncation or garbage.
    """
    head = stream.read(_LENGTH.size)
    if len(head) == 0:
        return None
    if len(head) < _LENGTH.size:
        raise WireProtocolError("stream ended inside a length prefix")
    (length,) = _LENGTH.unpack(head)
    if length > MAX_MESSAGE_BYTES:
        raise WireProtocolError(f"declared message size {length} exceeds the limit")
    body = stream.read(length)
    if len(body) < length:
        raise WireProtocolError(
            f"stream ended inside a message body ({len(body)} of {length} bytes)"
        )
    return decode_message(body)


@dataclass
class StimulationSummary:
    """What the stimulation side managed to deliver."""

    samples_sent: int
    chunks_sent: int
    triggers_sent: int
    complete: bool
    endpoint: str


@dataclass
class ConsumeSummary:
    """Stream bookkeeping from the correlation side."""

    samples_received: int
    triggers: list[TriggerEvent] = field(default_factory=list)
    hello: Hello | None = None


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint must be host:port, got {text!r}")
    try:
        port_no = int(port)
    except ValueError:
        raise ValueError(f"endpoint port must be an integer, got {port!r}") from None
    if not 0 <= port_no < 65536:
        raise ValueError(f"endpoint port {port_no} is out of range")
    return host, port_no


def _listening_socket(endpoint) -> tuple[socket.socket, bool]:
    if hasattr(endpoint, "accept"):
        return endpoint, False
    host, port = parse_endpoint(endpoint)
    return socket.create_server((host, port)), True


def serve_capture(
    capture: IqFrame,
    sequence_descriptor: str,
    endpoint,
    events: list[TriggerEvent] = (),
    chunk_samples: int = 4096,
    timeout: float = 10.0,
) -> StimulationSummary:
    """Serve one capture to a single correlation peer.

    ``endpoint`` is a ``host:port`` string or an already-listening
    socket (useful for tests on ephemeral ports).  Waits up to
    ``timeout`` seconds for the peer; a peer that disconnects
    mid-stream yields a summary with ``complete=False`` rather than an
    exception.
    """
    if chunk_samples < 1:
        raise ValueError("chunk_samples must be positive")
    lsock, owned = _listening_socket(endpoint)
    name = "%s:%d" % lsock.getsockname()[:2]
    evs = sorted(events, key=lambda e: e.sample_index)
    sent = chunks = triggers = 0
    complete = False
    try:
        lsock.settimeout(timeout)
        try:
            conn, _ = lsock.accept()
        except socket.timeout:
            raise TimeoutError(
                f"no correlation peer connected to {name} within {timeout} s"
            ) from None
        with conn:
            conn.settimeout(timeout)
            try:
                conn.sendall(
                    encode_hello(
                        Hello(
                            fs=capture.fs,
                            f_c=capture.f_c,
                            sequence_descriptor=sequence_descriptor,
                        )
                    )
                )
                x = np.asarray(capture.samples)
                ev_pos = 0
                for a in range(0, len(x), chunk_samples):
                    b = min(a + chunk_samples, len(x))
                    while ev_pos < len(evs) and evs[ev_pos].sample_index < capture.start_index + b:
                        conn.sendall(encode_trigger(evs[ev_pos]))
                        ev_pos += 1
                        triggers += 1
                    conn.sendall(encode_iq_chunk(capture.start_index + a, x[a:b]))
                    chunks += 1
                    sent += b - a
                while ev_pos < len(evs):
                    conn.sendall(encode_trigger(evs[ev_pos]))
                    ev_pos += 1
                    triggers += 1
                conn.sendall(encode_end(sent))
                complete = True
            except (BrokenPipeError, ConnectionResetError, socket.timeout):
                complete = False
    finally:
        if owned:
            lsock.close()
    return StimulationSummary(
        samples_sent=sent,
        chunks_sent=chunks,
        triggers_sent=triggers,
        complete=complete,
        endpoint=name,
    )


def serve_stimulation(config, endpoint=None) -> StimulationSummary:
    """Build the configured stimulation stream and serve it.

    The stream is generated, passed through the configured channel,
    damaged by any configured trigger faults, and quantized to the wire
    sample format before transmission, so the peer receives exactly
    what a capture file of the same campaign would contain.
    """
    seq = config.make_sequence()
    capture = sounder.stimulate_capture(
        seq, config.num_sequences(), config.sample_rate, config.center_frequency
    )
    capture = apply_channel(capture, config.channel_model())
    events = config.trigger_events()
    if events:
        capture, events = inject_disruption(capture, events, config.corrupt_span)
    capture = sounder.quantize_capture(capture)
    return serve_capture(
        capture,
        seq_descriptor(seq),
        endpoint if endpoint is not None else config.endpoint,
        events=events,
        chunk_samples=config.chunk_samples,
        timeout=config.timeout,
    )


def consume_stream(endpoint, timeout: float = 10.0) -> tuple[IqFrame, ConsumeSummary]:
    """Connect to a stimulation peer and collect the whole stream.

    Verifies chunk contiguity and the END sample count.  Returns the
    reassembled capture frame plus the stream summary (handshake and
    trigger events).
    """
    host, port = parse_endpoint(endpoint) if isinstance(endpoint, str) else endpoint
    with socket.create_connection((host, port), timeout=timeout) as sock:
        sock.settimeout(timeout)
        stream = sock.makefile("rb")
        msg = read_message(stream)
        if msg is None:
            raise WireProtocolError("peer closed the stream before HELLO")
        if not isinstance(msg, Hello):
            raise WireProtocolError(f"expected HELLO first, got {type(msg).__name__}")
        hello = msg

        parts: list[np.ndarray] = []
        triggers: list[TriggerEvent] = []
        received = 0
        total = None
        while True:
            msg = read_message(stream)
            if msg is None:
                raise WireProtocolError("stream ended without an END message")
            if isinstance(msg, Hello):
                raise WireProtocolError("duplicate HELLO mid-stream")
            if isinstance(msg, TriggerEvent):
                triggers.append(msg)
                continue
            if isinstance(msg, End):
                total = msg.total_samples
                break
            if msg.start_index != received:
                raise WireProtocolError(
                    f"IQ chunk starts at {msg.start_index}, expected {received}; "
                    "the stream is not contiguous"
                )
            parts.append(msg.samples)
            received += len(msg.samples)
        if total != received:
            raise WireProtocolError(
                f"END declares {total} samples but {received} were delivered"
            )

    samples = np.concatenate(parts) if parts else np.empty(0, dtype=np.complex128)
    frame = IqFrame(samples, hello.fs, hello.f_c, 0)
    return frame, ConsumeSummary(
        samples_received=received, triggers=triggers, hello=hello
    )


def consume_correlation(endpoint, config):
    """Receive a stimulation stream and run the correlation side on it.

    The handshake is validated against the local configuration: sample
    rates must agree, and if the configuration pins a sequence it must
    match the peer's descriptor (otherwise the peer's descriptor is
    adopted).  Returns ``(frames, summary)``.
    """
    capture, summary = consume_stream(endpoint, timeout=config.timeout)
    hello = summary.hello

    if hello.fs != config.sample_rate:
        raise HelloMismatchError(
            f"peer samples at {hello.fs} Hz but the local configuration expects "
            f"{config.sample_rate} Hz"
        )
    local = config.make_sequence()
    if config.sequence_pinned() and seq_descriptor(local) != hello.sequence_descriptor:
        raise HelloMismatchError(
            f"peer stimulates with {hello.sequence_descriptor!r} but the local "
            f"configuration pins {seq_descriptor(local)!r}"
        )
    try:
        seq = from_descriptor(hello.sequence_descriptor) if hello.sequence_descriptor else local
    except ValueError as exc:
        raise HelloMismatchError(f"peer sequence descriptor is unusable: {exc}") from exc

    frames = sounder.frames_from_capture(
        capture,
        seq,
        events=summary.triggers,
        profile=config.load_profile(),
        discard_first=config.discard_first,
        dc_suppression_hz=config.dc_suppression_hz,
        dc_position=config.dc_position,
    )
    return frames, summary
