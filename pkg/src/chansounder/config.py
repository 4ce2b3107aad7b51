"""Campaign configuration.

Campaigns are described by flat ``key = value`` text files.  ``#``
starts a comment, blank lines are ignored, and an ``include = path``
line splices another file in place (relative to the including file);
later assignments win.  Unknown keys are rejected with the file and
line they came from.

The defaults (an unmodified :class:`CampaignConfig`) describe the
scaled-down reference campaign used throughout the test-suite: a
1024-sample polyphase sequence at 1 MSps over a static three-tap
channel with a short cable, 200 repetitions, noise off.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from . import framestore
from .chansim import ChannelModel, ChannelTap
from .frames import TriggerEvent
from .seqgen import Sequence, generate_fzc, generate_mls

_SEQUENCE_KEYS = {
    "sequence.family",
    "sequence.length",
    "sequence.root",
    "sequence.register_length",
    "sequence.taps",
}


@dataclass
class CampaignConfig:
    """Everything needed to run one sounding campaign."""

    family: str = "fzc"
    length: int = 1024
    root: int = 7
    register_length: int = 10
    taps: tuple[int, ...] | None = None

    sample_rate: float = 1_000_000.0
    center_frequency: float = 5.8e9
    n_sequences: int | None = 200
    duration: float | None = None

    channel_taps: list[tuple] = field(
        default_factory=lambda: [(0, 1 + 0j, 0.0), (3, 0.5j, 0.0), (11, -0.2 + 0.1j, 0.0)]
    )
    snr_db: float | None = None
    cfo_hz: float = 0.0
    cable: list[complex] | None = field(default_factory=lambda: [1 + 0j, 0j, 0.25 + 0j])
    seed: int = 0

    triggers: list[tuple[int, str, str]] = field(default_factory=list)
    trigger_log: str | None = None
    corrupt_span: int = 128

    calibration: str | None = None
    gain_cap_db: float = 40.0
    discard_first: bool = True
    dc_suppression_hz: float = 0.0
    dc_position: str = "before"
    downsample_threshold_db: float | None = None
    doppler_zero_fill: bool = False
    bc_threshold: float = 0.5
    max_distance_ref_m: float | None = None

    out: str | None = None
    input: str | None = None
    endpoint: str | None = None
    chunk_samples: int = 4096
    timeout: float = 10.0

    explicit: set = field(default_factory=set, repr=False, compare=False)

    def make_sequence(self) -> Sequence:
        if self.family == "fzc":
            return generate_fzc(self.length, self.root)
        if self.family == "mls":
            return generate_mls(self.register_length, self.taps)
        raise ValueError(f"unknown sequence family {self.family!r}")

    def sequence_pinned(self) -> bool:
        """True when the configuration explicitly names a sequence."""
        return bool(self.explicit & _SEQUENCE_KEYS)

    def num_sequences(self) -> int:
        if self.n_sequences is not None:
            if self.n_sequences < 1:
                raise ValueError("n_sequences must be positive")
            return self.n_sequences
        if self.duration is not None:
            t_seq = self.make_sequence().n_seq / self.sample_rate
            n = int(round(self.duration / t_seq))
            if n < 1:
                raise ValueError(
                    f"duration {self.duration} s is shorter than one sequence period"
                )
            return n
        raise ValueError("either n_sequences or duration must be set")

    def channel_model(self) -> ChannelModel:
        taps = [ChannelTap(int(d), complex(g), float(f)) for d, g, f in self.channel_taps]
        return ChannelModel(
            taps=taps,
            snr_db=self.snr_db,
            cfo_hz=self.cfo_hz,
            cable=self.cable,
            seed=self.seed,
        )

    def trigger_events(self) -> list[TriggerEvent]:
        if self.trigger_log is not None:
            return framestore.read_trigger_log(self.trigger_log)
        return [
            TriggerEvent(sample_index=i, kind=kind, note=note)
            for i, kind, note in self.triggers
        ]

    def load_profile(self):
        if self.calibration is None:
            return None
        return framestore.read_profile(self.calibration)


def _parse_bool(value: str, where: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{where}: expected a boolean, got {value!r}")


def _parse_optional_float(value: str) -> float | None:
    return None if value.strip().lower() in ("", "none") else float(value)


def _parse_channel_taps(value: str, where: str) -> list[tuple]:
    taps = []
    for part in value.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = [p.strip() for p in part.split(":")]
        if len(fields) not in (2, 3):
            raise ValueError(
                f"{where}: channel tap must be delay:gain[:doppler_hz], got {part!r}"
            )
        delay = int(fields[0])
        gain = complex(fields[1])
        doppler = float(fields[2]) if len(fields) == 3 else 0.0
        taps.append((delay, gain, doppler))
    if not taps:
        raise ValueError(f"{where}: channel.taps must name at least one tap")
    return taps


def _parse_triggers(value: str, where: str) -> list[tuple[int, str, str]]:
    out = []
    for part in value.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = part.split(":", 2)
        if len(fields) < 2:
            raise ValueError(f"{where}: trigger must be index:kind[:note], got {part!r}")
        out.append((int(fields[0]), fields[1].strip(), fields[2] if len(fields) > 2 else ""))
    return out


def _apply_key(cfg: CampaignConfig, key: str, value: str, where: str) -> None:
    try:
        if key == "sequence.family":
            v = value.strip().lower()
            if v not in ("fzc", "mls"):
                raise ValueError(f"sequence family must be fzc or mls, got {value!r}")
            cfg.family = v
        elif key == "sequence.length":
            cfg.length = int(value)
        elif key == "sequence.root":
            cfg.root = int(value)
        elif key == "sequence.register_length":
            cfg.register_length = int(value)
        elif key == "sequence.taps":
            cfg.taps = tuple(int(t) for t in value.replace(".", ",").split(",") if t.strip())
        elif key == "sample_rate":
            cfg.sample_rate = float(value)
        elif key == "center_frequency":
            cfg.center_frequency = float(value)
        elif key == "n_sequences":
            cfg.n_sequences = None if value.strip().lower() == "none" else int(value)
        elif key == "duration":
            cfg.duration = _parse_optional_float(value)
            if cfg.duration is not None:
                cfg.n_sequences = None
        elif key == "channel.taps":
            cfg.channel_taps = _parse_channel_taps(value, where)
        elif key == "channel.cable":
            items = [complex(p.strip()) for p in value.split(",") if p.strip()]
            cfg.cable = items if items else None
        elif key == "channel.snr_db":
            cfg.snr_db = _parse_optional_float(value)
        elif key == "channel.cfo_hz":
            cfg.cfo_hz = float(value)
        elif key == "seed":
            cfg.seed = int(value)
        elif key == "triggers":
            cfg.triggers = _parse_triggers(value, where)
        elif key == "trigger_log":
            cfg.trigger_log = value.strip() or None
        elif key == "corrupt_span":
            cfg.corrupt_span = int(value)
        elif key == "calibration":
            cfg.calibration = value.strip() or None
        elif key == "gain_cap_db":
            cfg.gain_cap_db = float(value)
        elif key == "discard_first":
            cfg.discard_first = _parse_bool(value, where)
        elif key == "dc_suppression_hz":
            cfg.dc_suppression_hz = float(value)
        elif key == "dc_position":
            v = value.strip().lower()
            if v not in ("before", "after"):
                raise ValueError(f"dc_position must be before or after, got {value!r}")
            cfg.dc_position = v
        elif key == "downsample_threshold_db":
            cfg.downsample_threshold_db = _parse_optional_float(value)
        elif key == "doppler_zero_fill":
            cfg.doppler_zero_fill = _parse_bool(value, where)
        elif key == "bc_threshold":
            cfg.bc_threshold = float(value)
        elif key == "max_distance_ref_m":
            cfg.max_distance_ref_m = _parse_optional_float(value)
        elif key == "out":
            cfg.out = value.strip() or None
        elif key == "input":
            cfg.input = value.strip() or None
        elif key == "endpoint":
            cfg.endpoint = value.strip() or None
        elif key == "chunk_samples":
            cfg.chunk_samples = int(value)
        elif key == "timeout":
            cfg.timeout = float(value)
        else:
            raise KeyError(key)
    except KeyError:
        raise ValueError(f"{where}: unknown config key {key!r}") from None
    except ValueError as exc:
        raise ValueError(f"{where}: {exc}") from None
    cfg.explicit.add(key)


def _load_into(cfg: CampaignConfig, path: str, seen: tuple[str, ...]) -> None:
    real = os.path.realpath(path)
    if real in seen:
        chain = " -> ".join(seen + (real,))
        raise ValueError(f"config include cycle: {chain}")
    base = os.path.dirname(real)
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            if "=" not in line:
                raise ValueError(f"{where}: expected key = value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "include":
                target = value if os.path.isabs(value) else os.path.join(base, value)
                _load_into(cfg, target, seen + (real,))
            else:
                _apply_key(cfg, key, value, where)


def load_config(path: str) -> CampaignConfig:
    """Load a campaign configuration file, following includes."""
    cfg = CampaignConfig()
    _load_into(cfg, path, ())
    return cfg
