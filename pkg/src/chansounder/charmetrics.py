"""Channel characterization metrics over an impulse-response series.

All metrics consume the frame series produced by the sounding pipeline.
Delay-domain statistics (power delay profile, mean delay, RMS delay
spread, dynamic range) come from averaging |h|^2 over frames.
Frequency-domain statistics (magnitude percentiles, coherence
bandwidth) come from the per-frame transfer functions.  Time-variance
statistics (Doppler map, Doppler spread, coherence time) come from a
DFT across the frame axis, which is only meaningful when the frames sit
on a uniform measurement grid; gaps from gated-out periods must either
be rejected or zero-filled, chosen explicitly by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import ImpulseResponseFrame

#: Propagation speed used for Doppler-to-velocity and distance conversions.
SPEED_OF_LIGHT = 299_792_458.0


def _frame_matrix(frames) -> np.ndarray:
    """Stack a frame series into an (n_frames, n_seq) complex matrix."""
    rows = []
    for fr in frames:
        v = fr.h if isinstance(fr, ImpulseResponseFrame) else np.asarray(fr)
        rows.append(np.asarray(v, dtype=np.complex128))
    if not rows:
        raise ValueError("metric needs at least one impulse-response frame")
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise ValueError("impulse-response frames must share one length")
    return np.stack(rows)


def pdp(frames) -> np.ndarray:
    """Power delay profile: mean of |h[tau]|^2 over the frame series."""
    m = _frame_matrix(frames)
    return np.mean(np.abs(m) ** 2, axis=0)


def mean_delay(pdp_vec: np.ndarray, t_s: float) -> float:
    """Power-weighted mean excess delay in seconds."""
    p = np.asarray(pdp_vec, dtype=np.float64)
    total = p.sum()
    if not total > 0:
        raise ValueError("power delay profile has no energy")
    tau = np.arange(len(p)) * t_s
    return float((tau * p).sum() / total)


def rms_delay_spread(pdp_vec: np.ndarray, t_s: float) -> float:
    """Power-weighted RMS delay spread in seconds."""
    p = np.asarray(pdp_vec, dtype=np.float64)
    total = p.sum()
    if not total > 0:
        raise ValueError("power delay profile has no energy")
    tau = np.arange(len(p)) * t_s
    m1 = (tau * p).sum() / total
    var = ((tau - m1) ** 2 * p).sum() / total
    return float(math.sqrt(max(var, 0.0)))


@dataclass
class FrequencyStats:
    """Pooled transfer-function magnitude statistics.

    ``mean_psd`` is the frame-averaged |H(f)|^2 on the centered
    frequency axis ``freqs_hz``; the percentile levels are taken over
    the pooled per-frame, per-bin magnitudes in dB.
    """

    freqs_hz: np.ndarray
    mean_psd: np.ndarray
    h10_db: float
    h50_db: float
    h90_db: float


def frequency_response_stats(frames, fs: float) -> FrequencyStats:
    """Percentile levels (10/50/90 %) of pooled |H(f)| in dB."""
    m = _frame_matrix(frames)
    spectra = np.fft.fft(m, axis=1)
    mags = np.abs(spectra)
    if not mags.max() > 0:
        raise ValueError("all frames are zero; no magnitude statistics")
    with np.errstate(divide="ignore"):
        pooled_db = 20.0 * np.log10(mags).ravel()
    h10, h50, h90 = np.percentile(pooled_db, [10.0, 50.0, 90.0])
    n = m.shape[1]
    return FrequencyStats(
        freqs_hz=np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / fs)),
        mean_psd=np.fft.fftshift(np.mean(mags**2, axis=0)),
        h10_db=float(h10),
        h50_db=float(h50),
        h90_db=float(h90),
    )


def coherence_bandwidth(
    frames, fs: float, threshold: float = 0.5
) -> tuple[float, bool]:
    """Coherence bandwidth from the frequency autocorrelation.

    The frequency correlation function is the DFT of the power delay
    profile; its magnitude is normalized to one at zero frequency lag
    and scanned outward for the first drop below ``threshold``, with
    linear interpolation between bins.  Returns ``(bandwidth_hz,
    crossed)``; when the correlation never falls below the threshold
    the full half-span ``fs / 2`` is returned with ``crossed=False``.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    p = pdp(frames)
    n = len(p)
    r = np.fft.fft(p)
    r0 = r[0].real
    if not r0 > 0:
        raise ValueError("power delay profile has no energy")
    rho = np.abs(r) / r0

    half = n // 2
    df = fs / n
    prev = rho[0]
    for q in range(1, half + 1):
        cur = rho[q]
        if cur < threshold:
            frac = (prev - threshold) / (prev - cur)
            return (float((q - 1 + frac) * df), True)
        prev = cur
    return (fs / 2.0, False)


@dataclass
class DopplerMap:
    """Delay-Doppler power map.

    ``power[q, tau]`` is |DFT over frames|^2 at Doppler bin ``q``
    (centered axis ``freqs_hz``) and delay bin ``tau``.
    """

    power: np.ndarray
    freqs_hz: np.ndarray
    t_seq: float
    n_frames: int
    zero_filled: int = 0

    @property
    def resolution_hz(self) -> float:
        return 1.0 / (self.n_frames * self.t_seq)

    @property
    def max_hz(self) -> float:
        return 1.0 / (2.0 * self.t_seq)


def doppler_map(frames, t_seq: float, zero_fill: bool = False) -> DopplerMap:
    """DFT across the frame axis on a uniform measurement grid.

    Frames must be in increasing sequence-index order.  Gaps (dropped
    periods) break the uniform grid; with ``zero_fill`` they become
    all-zero rows, otherwise they raise.  The unambiguous Doppler range
    is ``+-1 / (2 * t_seq)`` and the resolution ``1 / capture_length``.
    """
    if not t_seq > 0:
        raise ValueError("sequence period must be positive")
    fr = list(frames)
    if len(fr) < 2:
        raise ValueError("Doppler analysis needs at least two frames")
    idx = [f.sequence_index for f in fr]
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError("frames must be sorted by sequence index, without duplicates")

    m = _frame_matrix(fr)
    span = idx[-1] - idx[0] + 1
    missing = span - len(fr)
    if missing:
        if not zero_fill:
            raise ValueError(
                f"measurement grid has {missing} gap(s); pass zero_fill=True "
                "to analyze anyway"
            )
        full = np.zeros((span, m.shape[1]), dtype=np.complex128)
        full[np.asarray(idx) - idx[0]] = m
        m = full

    spec = np.fft.fftshift(np.fft.fft(m, axis=0), axes=0)
    freqs = np.fft.fftshift(np.fft.fftfreq(m.shape[0], d=t_seq))
    return DopplerMap(
        power=np.abs(spec) ** 2,
        freqs_hz=freqs,
        t_seq=t_seq,
        n_frames=m.shape[0],
        zero_filled=missing,
    )


def doppler_spread(dmap: DopplerMap) -> float:
    """RMS width of the power-weighted Doppler spectrum in Hz."""
    s = dmap.power.sum(axis=1)
    total = s.sum()
    if not total > 0:
        raise ValueError("Doppler map has no energy")
    f = dmap.freqs_hz
    m1 = (f * s).sum() / total
    var = ((f - m1) ** 2 * s).sum() / total
    return float(math.sqrt(max(var, 0.0)))


def coherence_time(spread_hz: float) -> float:
    """Reciprocal Doppler spread; infinite for a static channel."""
    if spread_hz < 0:
        raise ValueError("Doppler spread cannot be negative")
    if spread_hz == 0.0:
        return math.inf
    return 1.0 / spread_hz


def max_doppler(t_seq: float) -> float:
    """Unambiguous Doppler limit of a sounding at period ``t_seq``."""
    if not t_seq > 0:
        raise ValueError("sequence period must be positive")
    return 1.0 / (2.0 * t_seq)


def doppler_resolution(capture_duration_s: float) -> float:
    """Doppler bin width achievable from a capture of the given length."""
    if not capture_duration_s > 0:
        raise ValueError("capture duration must be positive")
    return 1.0 / capture_duration_s


def doppler_to_speed(doppler_hz: float, f_c: float) -> float:
    """Radial speed (m/s) corresponding to a Doppler shift at carrier ``f_c``."""
    if not f_c > 0:
        raise ValueError("carrier frequency must be positive")
    return doppler_hz * SPEED_OF_LIGHT / f_c


def measured_dynamic_range(pdp_vec: np.ndarray) -> float:
    """Peak-to-noise-floor ratio of a power delay profile in dB.

    The floor is the median of the lowest-power decile of PDP bins, a
    robust stand-in for the correlation noise floor.  An all-equal
    profile yields 0 dB; a floor of exactly zero yields ``inf``.
    """
    p = np.asarray(pdp_vec, dtype=np.float64)
    if len(p) == 0 or not p.max() > 0:
        raise ValueError("power delay profile has no energy")
    k = max(1, len(p) // 10)
    floor = float(np.median(np.sort(p)[:k]))
    if floor == 0.0:
        return math.inf
    return float(10.0 * math.log10(p.max() / floor))


def max_distance_estimate(dynamic_range_db: float, d_ref_m: float) -> float:
    """Largest free-space range covered by the measured dynamic range.

    Free-space power falls with 20 dB per distance decade, so a link
    verified at ``d_ref_m`` with ``dynamic_range_db`` of headroom can be
    stretched to ``d_ref * 10**(D / 20)`` before the peak meets the
    floor.
    """
    if not d_ref_m > 0:
        raise ValueError("reference distance must be positive")
    return d_ref_m * 10.0 ** (dynamic_range_db / 20.0)


def ple_estimate(
    distances_m,
    gain_db,
    tx_gain_dbi: float = 0.0,
    rx_gain_dbi: float = 0.0,
) -> float:
    """Path-loss exponent from gain measurements at several distances.

    ``gain_db`` holds the measured end-to-end channel gains (usually
    negative); antenna gains are stripped before the fit.  The exponent
    is the least-squares slope of path loss against ``10 * log10(d)``.
    Needs at least two distinct distances.
    """
    d = np.asarray(distances_m, dtype=np.float64)
    g = np.asarray(gain_db, dtype=np.float64)
    if d.shape != g.shape or d.ndim != 1:
        raise ValueError("distances and gains must be 1-d vectors of equal length")
    if len(d) < 2 or np.unique(d).size < 2:
        raise ValueError("path-loss fit needs at least two distinct distances")
    if not np.all(d > 0):
        raise ValueError("distances must be positive")
    loss = tx_gain_dbi + rx_gain_dbi - g
    x = 10.0 * np.log10(d)
    slope, _ = np.polyfit(x, loss, 1)
    return float(slope)


@dataclass
class CharacterizationReport:
    """Aggregate of the full metric suite for one frame series."""

    n_frames: int
    n_seq: int
    fs: float
    t_seq: float
    pdp: np.ndarray
    mean_delay_s: float
    rms_delay_spread_s: float
    freq_stats: FrequencyStats
    coherence_bw_hz: float
    coherence_bw_crossed: bool
    dynamic_range_db: float
    doppler: DopplerMap | None = None
    doppler_spread_hz: float | None = None
    coherence_time_s: float | None = None
    speed_for_spread_mps: float | None = None
    max_distance_m: float | None = None
    notes: list[str] = field(default_factory=list)


def characterize(
    frames,
    fs: float,
    f_c: float | None = None,
    bc_threshold: float = 0.5,
    doppler_zero_fill: bool = False,
    d_ref_m: float | None = None,
) -> CharacterizationReport:
    """Compute the full metric suite over a frame series.

    Doppler metrics are skipped (with a note) when fewer than two
    frames are available or the grid has gaps and ``doppler_zero_fill``
    is off.  ``d_ref_m`` enables the free-space range estimate;
    ``f_c`` enables the speed conversion of the Doppler spread.
    """
    fr = list(frames)
    p = pdp(fr)
    n_seq = len(p)
    t_s = 1.0 / fs
    t_seq = n_seq * t_s

    stats = frequency_response_stats(fr, fs)
    bc, crossed = coherence_bandwidth(fr, fs, threshold=bc_threshold)
    dr = measured_dynamic_range(p)

    notes: list[str] = []
    dmap = None
    spread = None
    t_c = None
    speed = None
    if len(fr) < 2:
        notes.append("doppler: skipped, fewer than two frames")
    else:
        try:
            dmap = doppler_map(fr, t_seq, zero_fill=doppler_zero_fill)
        except ValueError as exc:
            notes.append(f"doppler: skipped, {exc}")
    if dmap is not None:
        spread = doppler_spread(dmap)
        t_c = coherence_time(spread)
        if f_c is not None:
            speed = doppler_to_speed(spread, f_c)

    return CharacterizationReport(
        n_frames=len(fr),
        n_seq=n_seq,
        fs=fs,
        t_seq=t_seq,
        pdp=p,
        mean_delay_s=mean_delay(p, t_s),
        rms_delay_spread_s=rms_delay_spread(p, t_s),
        freq_stats=stats,
        coherence_bw_hz=bc,
        coherence_bw_crossed=crossed,
        dynamic_range_db=dr,
        doppler=dmap,
        doppler_spread_hz=spread,
        coherence_time_s=t_c,
        speed_for_spread_mps=speed,
        max_distance_m=(
            max_distance_estimate(dr, d_ref_m) if d_ref_m is not None else None
        ),
        notes=notes,
    )


def report_text(report: CharacterizationReport) -> str:
    """Deterministic key = value rendering of a report's scalar metrics."""
    lines = [
        f"frames = {report.n_frames}",
        f"sequence_length = {report.n_seq}",
        f"sample_rate_hz = {report.fs!r}",
        f"sequence_period_s = {report.t_seq!r}",
        f"mean_delay_s = {report.mean_delay_s!r}",
        f"rms_delay_spread_s = {report.rms_delay_spread_s!r}",
        f"h10_db = {report.freq_stats.h10_db!r}",
        f"h50_db = {report.freq_stats.h50_db!r}",
        f"h90_db = {report.freq_stats.h90_db!r}",
        f"coherence_bandwidth_hz = {report.coherence_bw_hz!r}",
        f"coherence_bandwidth_crossed = {report.coherence_bw_crossed}",
        f"dynamic_range_db = {report.dynamic_range_db!r}",
    ]
    if report.doppler is not None:
        lines += [
            f"doppler_resolution_hz = {report.doppler.resolution_hz!r}",
            f"doppler_max_hz = {report.doppler.max_hz!r}",
            f"doppler_spread_hz = {report.doppler_spread_hz!r}",
            f"coherence_time_s = {report.coherence_time_s!r}",
        ]
    if report.speed_for_spread_mps is not None:
        lines.append(f"speed_for_spread_mps = {report.speed_for_spread_mps!r}")
    if report.max_distance_m is not None:
        lines.append(f"max_distance_m = {report.max_distance_m!r}")
    for note in report.notes:
        lines.append(f"note = {note}")
    return "\n".join(lines) + "\n"


def export_csv(report: CharacterizationReport, base_path: str) -> list[str]:
    """Write PDP, PSD and (if present) Doppler-map CSV files.

    Returns the list of paths written.  Numbers are rendered with
    ``repr`` so repeated runs produce byte-identical files.
    """
    written = []
    t_s = 1.0 / report.fs

    path = base_path + ".pdp.csv"
    with open(path, "w", encoding="utf-8") as f:
        f.write("delay_s,power\n")
        for i, v in enumerate(report.pdp):
            f.write(f"{i * t_s!r},{float(v)!r}\n")
    written.append(path)

    path = base_path + ".psd.csv"
    with open(path, "w", encoding="utf-8") as f:
        f.write("freq_hz,power\n")
        for fq, v in zip(report.freq_stats.freqs_hz, report.freq_stats.mean_psd):
            f.write(f"{float(fq)!r},{float(v)!r}\n")
    written.append(path)

    if report.doppler is not None:
        path = base_path + ".doppler.csv"
        dm = report.doppler
        with open(path, "w", encoding="utf-8") as f:
            f.write("delay_s," + ",".join(repr(float(fq)) for fq in dm.freqs_hz) + "\n")
            for tau in range(dm.power.shape[1]):
                row = dm.power[:, tau]
                f.write(f"{tau * t_s!r}," + ",".join(repr(float(v)) for v in row) + "\n")
        written.append(path)

    return written
