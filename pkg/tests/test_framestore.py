"""Round-trip and corruption tests for the on-disk formats."""

import struct

import numpy as np
import pytest

from chansounder import framestore as fsio
from chansounder.calib import CalibrationProfile, through_calibrate
from chansounder.frames import ImpulseResponseFrame, IqFrame, TriggerEvent


class TestCapture:
    def make_frame(self, rng, n=257):
        x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)).astype(np.complex64)
        return IqFrame(x.astype(np.complex128), fs=1e6, f_c=5.8e9, start_index=1024)

    def test_round_trip_bitwise(self, tmp_path, rng):
        frame = self.make_frame(rng)
        path = str(tmp_path / "a.iq")
        fsio.write_capture(path, frame, sequence_descriptor="fzc:n=1024:u=7", seed_note="seed=0")
        back, meta = fsio.read_capture(path)
        # payload is float32; the original was already float32-representable
        assert np.array_equal(back.samples, frame.samples)
        assert back.fs == 1e6 and back.f_c == 5.8e9
        assert back.start_index == 1024
        assert meta.sequence_descriptor == "fzc:n=1024:u=7"
        assert meta.seed_note == "seed=0"
        assert meta.version == fsio.CAPTURE_VERSION

    def test_write_is_deterministic(self, tmp_path, rng):
        frame = self.make_frame(rng)
        p1, p2 = str(tmp_path / "a.iq"), str(tmp_path / "b.iq")
        fsio.write_capture(p1, frame, "d", "s")
        fsio.write_capture(p2, frame, "d", "s")
        assert open(p1, "rb").read() == open(p2, "rb").read()
        assert open(p1 + ".meta", "rb").read() == open(p2 + ".meta", "rb").read()

    def test_missing_sidecar_rejected(self, tmp_path, rng):
        frame = self.make_frame(rng)
        path = str(tmp_path / "a.iq")
        fsio.write_capture(path, frame)
        (tmp_path / "a.iq.meta").unlink()
        with pytest.raises(ValueError, match="sidecar"):
            fsio.read_capture(path)

    def test_truncated_payload_rejected(self, tmp_path, rng):
        frame = self.make_frame(rng)
        path = str(tmp_path / "a.iq")
        fsio.write_capture(path, frame)
        blob = open(path, "rb").read()
        open(path, "wb").write(blob[:-3])
        with pytest.raises(ValueError, match="truncated"):
            fsio.read_capture(path)

    def test_wrong_version_rejected(self, tmp_path, rng):
        frame = self.make_frame(rng)
        path = str(tmp_path / "a.iq")
        fsio.write_capture(path, frame)
        meta = open(path + ".meta").read().replace("format_version=1", "format_version=9")
        open(path + ".meta", "w").write(meta)
        with pytest.raises(ValueError, match="version 9"):
            fsio.read_capture(path)

    def test_malformed_sidecar_line(self, tmp_path, rng):
        frame = self.make_frame(rng)
        path = str(tmp_path / "a.iq")
        fsio.write_capture(path, frame)
        with open(path + ".meta", "a") as f:
            f.write("no equals sign here\n")
        with pytest.raises(ValueError, match="key=value"):
            fsio.read_capture(path)


class TestFrameSeries:
    def make_series(self, rng, n=8, count=5):
        frames = []
        for i in range(count):
            h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            frames.append(
                ImpulseResponseFrame(h=h, t_i=(i + 1) * 8e-6, sequence_index=i, corrected=(i % 2 == 0))
            )
        return frames

    def test_round_trip_bitwise_values(self, tmp_path, rng):
        frames = self.make_series(rng)
        path = str(tmp_path / "run.frames")
        fsio.write_frames(path, frames, t_s=1e-6, calibration="prof.csp", total_sequences=7)
        back, meta = fsio.read_frames(path)
        assert len(back) == len(frames)
        for a, b in zip(back, frames):
            assert np.array_equal(a.h, b.h)
            assert a.t_i == b.t_i
            assert a.sequence_index == b.sequence_index
            assert a.corrected == b.corrected
        assert meta.n_seq == 8
        assert meta.t_s == 1e-6
        assert meta.t_seq == 8e-6
        assert meta.calibration == "prof.csp"
        assert meta.total_sequences == 7

    def test_total_sequences_defaults_past_highest(self, tmp_path, rng):
        frames = self.make_series(rng)
        frames[-1].sequence_index = 11
        path = str(tmp_path / "run.frames")
        fsio.write_frames(path, frames, t_s=1e-6)
        _, meta = fsio.read_frames(path)
        assert meta.total_sequences == 12

    def test_empty_series_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            fsio.write_frames(str(tmp_path / "x"), [], t_s=1e-6)

    def test_mixed_lengths_rejected(self, tmp_path, rng):
        frames = self.make_series(rng)
        frames[2] = ImpulseResponseFrame(np.zeros(4, dtype=complex), 1.0, 2)
        with pytest.raises(ValueError, match="one length"):
            fsio.write_frames(str(tmp_path / "x"), frames, t_s=1e-6)

    def test_bad_magic_rejected(self, tmp_path, rng):
        frames = self.make_series(rng)
        path = str(tmp_path / "run.frames")
        fsio.write_frames(path, frames, t_s=1e-6)
        blob = bytearray(open(path, "rb").read())
        blob[:4] = b"XXXX"
        open(path, "wb").write(bytes(blob))
        with pytest.raises(ValueError, match="magic"):
            fsio.read_frames(path)

    def test_truncated_record_rejected(self, tmp_path, rng):
        frames = self.make_series(rng)
        path = str(tmp_path / "run.frames")
        fsio.write_frames(path, frames, t_s=1e-6)
        blob = open(path, "rb").read()
        open(path, "wb").write(blob[:-10])
        with pytest.raises(ValueError, match="truncated at record"):
            fsio.read_frames(path)

    def test_trailing_bytes_rejected(self, tmp_path, rng):
        frames = self.make_series(rng)
        path = str(tmp_path / "run.frames")
        fsio.write_frames(path, frames, t_s=1e-6)
        with open(path, "ab") as f:
            f.write(b"\x00" * 7)
        with pytest.raises(ValueError, match="trailing"):
            fsio.read_frames(path)

    def test_write_is_deterministic(self, tmp_path, rng):
        frames = self.make_series(rng)
        p1, p2 = str(tmp_path / "a.frames"), str(tmp_path / "b.frames")
        fsio.write_frames(p1, frames, t_s=1e-6)
        fsio.write_frames(p2, frames, t_s=1e-6)
        assert open(p1, "rb").read() == open(p2, "rb").read()


class TestTriggerLog:
    def test_round_trip_with_commas_in_note(self, tmp_path):
        events = [
            TriggerEvent(900, "external", 5, "marker, with, commas"),
            TriggerEvent(17, "overflow", 128, ""),
        ]
        path = str(tmp_path / "run.triggers")
        fsio.write_trigger_log(path, events)
        back = fsio.read_trigger_log(path)
        assert [e.sample_index for e in back] == [17, 900]
        assert back[0].kind == "overflow" and back[0].span == 128 and back[0].note == ""
        assert back[1].kind == "external" and back[1].span == 5
        assert back[1].note == "marker, with, commas"

    def test_empty_log(self, tmp_path):
        path = str(tmp_path / "run.triggers")
        fsio.write_trigger_log(path, [])
        assert fsio.read_trigger_log(path) == []

    def test_parse_error_carries_line_number(self, tmp_path):
        path = str(tmp_path / "bad.triggers")
        open(path, "w").write("# header\n12,overflow,1,ok\nnot-a-number,overflow,1\n")
        with pytest.raises(ValueError, match=r"bad\.triggers:3"):
            fsio.read_trigger_log(path)

    def test_short_line_rejected(self, tmp_path):
        path = str(tmp_path / "bad.triggers")
        open(path, "w").write("12,overflow\n")
        with pytest.raises(ValueError, match=":1"):
            fsio.read_trigger_log(path)

    def test_bad_kind_rejected_with_line(self, tmp_path):
        path = str(tmp_path / "bad.triggers")
        open(path, "w").write("12,meteor,1,\n")
        with pytest.raises(ValueError, match=":1"):
            fsio.read_trigger_log(path)

    def test_read_sorts_by_index(self, tmp_path):
        path = str(tmp_path / "log.triggers")
        open(path, "w").write("50,external,1,b\n3,overflow,2,a\n")
        back = fsio.read_trigger_log(path)
        assert [e.sample_index for e in back] == [3, 50]


class TestProfile:
    def make_profile(self, rng):
        # real calibration output with clamped bins exercises every field
        h = np.zeros(16, dtype=complex)
        h[0] = 1.0
        spec = np.fft.fft(h)
        spec[5] = 1e-6
        spec[9] = 0.0
        return through_calibrate([np.fft.ifft(spec)], gain_cap_db=40.0)

    def test_round_trip(self, tmp_path, rng):
        prof = self.make_profile(rng)
        path = str(tmp_path / "cal.csp")
        fsio.write_profile(path, prof)
        back = fsio.read_profile(path)
        assert np.array_equal(back.h_ftt, prof.h_ftt)
        assert back.source == prof.source
        assert back.gain_cap_db == prof.gain_cap_db
        assert back.created_from == prof.created_from
        assert np.array_equal(back.clamped_bins, prof.clamped_bins)

    def test_round_trip_no_clamped_bins(self, tmp_path):
        prof = CalibrationProfile(
            h_ftt=np.array([1.0 + 0j, 0.0, 0.0, 0.0]),
            source="identity",
            gain_cap_db=40.0,
            created_from=0,
            clamped_bins=np.empty(0, dtype=np.int64),
        )
        path = str(tmp_path / "id.csp")
        fsio.write_profile(path, prof)
        back = fsio.read_profile(path)
        assert back.clamped_bins.size == 0
        assert np.array_equal(back.h_ftt, prof.h_ftt)

    def test_bad_magic(self, tmp_path, rng):
        path = str(tmp_path / "cal.csp")
        fsio.write_profile(path, self.make_profile(rng))
        blob = bytearray(open(path, "rb").read())
        blob[0] ^= 0xFF
        open(path, "wb").write(bytes(blob))
        with pytest.raises(ValueError, match="magic"):
            fsio.read_profile(path)

    def test_payload_size_checked(self, tmp_path, rng):
        path = str(tmp_path / "cal.csp")
        fsio.write_profile(path, self.make_profile(rng))
        blob = open(path, "rb").read()
        open(path, "wb").write(blob[:-16])
        with pytest.raises(ValueError, match="payload"):
            fsio.read_profile(path)

    def test_frames_magic_rejected_as_profile(self, tmp_path, rng):
        # a frame-series file must not parse as a profile
        frames = [ImpulseResponseFrame(np.ones(4, dtype=complex), 1.0, 0)]
        path = str(tmp_path / "run.frames")
        fsio.write_frames(path, frames, t_s=1e-6)
        with pytest.raises(ValueError, match="magic"):
            fsio.read_profile(path)
