"""Seeded EVA/Jakes linear time-varying channels and their banded block matrices.

A realization is a tap tensor h[i, r, l] for symbol i, output sample r and
tap index l, where tap l carries the energy of paths whose delay rounds to
l-1 oversampled samples.  The per-symbol channel matrix places tap l on the
l-1'th subdiagonal, so a single zero-delay unit tap is exactly the identity
(embedded over trailing zero rows).

Generation is pure given (seed, config); realizations are immutable after
construction, so parallel Monte-Carlo trials can each own an independent
generator without shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ModemConfig

SPEED_OF_LIGHT = 299792458.0  # m/s

# Standard Extended Vehicular A power-delay profile (9 taps).
EVA_DELAYS_NS = np.array([0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0])
EVA_POWERS_DB = np.array([0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9])

RRC_ROLLOFF = 0.25
RRC_HALF_SPAN = 4  # samples each side of the pulse peak


class DelaySpanError(ValueError):
    """A path delay maps to a tap index beyond the realized span."""


@dataclass(frozen=True)
class PathSet:
    """Sparse multipath description: complex gains, delays and Doppler shifts."""

    gains: np.ndarray      # complex, unit total mean power after normalization
    delays_s: np.ndarray   # non-negative, ascending
    dopplers_hz: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        t = np.atleast_1d(np.asarray(self.delays_s, dtype=float))
        v = np.atleast_1d(np.asarray(self.dopplers_hz, dtype=float))
        if not (g.size == t.size == v.size):
            raise ValueError("dimension mismatch: gains, delays and dopplers differ in length")
        if np.any(t < 0):
            raise ValueError("path delays must be non-negative")
        if np.any(np.diff(t) < 0):
            raise ValueError("path delays must be sorted ascending")
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "delays_s", t)
        object.__setattr__(self, "dopplers_hz", v)

    @property
    def n_paths(self) -> int:
        return self.gains.size


def max_doppler_hz(v_max_ms: float, f_c_hz: float) -> float:
    """Maximum Doppler shift f_c * v / c."""
    return f_c_hz * v_max_ms / SPEED_OF_LIGHT


def sample_eva_paths(seed, v_max_ms: float, f_c_hz: float) -> PathSet:
    """Draw a 9-tap EVA realization with Jakes-distributed Doppler shifts.

    Per-path gains are circular Gaussians scaled to the profile powers and
    normalized to unit total mean power.  Each Doppler is
    nu_max * cos(theta) with theta uniform on [-pi, pi] from the seeded
    generator, so identical seeds give identical path sets.
    """
    if v_max_ms < 0:
        raise ValueError(f"v_max must be >= 0, got {v_max_ms}")
    if f_c_hz <= 0:
        raise ValueError(f"carrier frequency must be > 0, got {f_c_hz}")
    rng = np.random.default_rng(seed)
    powers = 10.0 ** (EVA_POWERS_DB / 10.0)
    powers = powers / powers.sum()
    p = powers.size
    gains = np.sqrt(powers / 2.0) * (rng.standard_normal(p) + 1j * rng.standard_normal(p))
    theta = rng.uniform(-np.pi, np.pi, p)
    nu_max = max_doppler_hz(v_max_ms, f_c_hz)
    return PathSet(gains=gains, delays_s=EVA_DELAYS_NS * 1e-9, dopplers_hz=nu_max * np.cos(theta))


def ideal_path(gain: complex = 1.0) -> PathSet:
    """Single zero-delay, zero-Doppler path (debug/identity channel)."""
    return PathSet(gains=np.array([gain]), delays_s=np.zeros(1), dopplers_hz=np.zeros(1))


def _pulse_half_span(pulse: str) -> int:
    return 0 if pulse == "ideal" else RRC_HALF_SPAN


def raised_cosine(x: np.ndarray, rolloff: float = RRC_ROLLOFF) -> np.ndarray:
    """Raised-cosine pulse (the TX/RX root-raised-cosine pair convolved), in sample units."""
    x = np.asarray(x, dtype=float)
    denom = 1.0 - (2.0 * rolloff * x) ** 2
    singular = np.isclose(np.abs(denom), 0.0)
    safe = np.where(singular, 1.0, denom)
    out = np.sinc(x) * np.cos(np.pi * rolloff * x) / safe
    return np.where(singular, np.sinc(x) * np.pi / 4.0, out)


def required_l_ch(paths: PathSet, cfg: ModemConfig) -> int:
    """Tap count covering the longest rounded delay plus the pulse half-support."""
    ts = cfg.sample_period_s
    return int(math.ceil(paths.delays_s.max() / ts)) + _pulse_half_span(cfg.pulse) + 1


@dataclass(frozen=True)
class LtvChannelRealization:
    """Materialized taps h[i, r, l] with i = 0..N-1, r = 0..rows-1, l = 0..L_ch-1."""

    taps: np.ndarray          # (n_symbols, rows, l_ch) complex
    sample_period_s: float

    @property
    def n_symbols(self) -> int:
        return self.taps.shape[0]

    @property
    def rows(self) -> int:
        return self.taps.shape[1]

    @property
    def l_ch(self) -> int:
        return self.taps.shape[2]


def materialize_taps(
    paths: PathSet,
    cfg: ModemConfig,
    rows: int,
    n_symbols: int | None = None,
    l_ch: int | None = None,
) -> LtvChannelRealization:
    """Evaluate the per-symbol time-varying taps for every required (i, r, l).

    Tap (i, r, l) sums h_p * g((l-1) - tau_p/Ts) * exp(j2*pi*nu_p*((l + r + i - 1)*Ts - Ts/2))
    over paths, with r and i counted from 1 and g the configured shaping pulse
    (ideal Nyquist rounds each delay to a single unit tap).
    """
    n_sym = cfg.n if n_symbols is None else n_symbols
    ts = cfg.sample_period_s
    span = required_l_ch(paths, cfg)
    if l_ch is None:
        l_ch = span
    elif l_ch < span:
        raise DelaySpanError(
            f"path delays need L_ch >= {span}, got {l_ch}"
        )

    taps = np.zeros((n_sym, rows, l_ch), dtype=complex)
    ell = np.arange(1, l_ch + 1)            # 1-based tap index; delay = ell - 1 samples
    r = np.arange(1, rows + 1)
    half = _pulse_half_span(cfg.pulse)

    for h_p, tau, nu in zip(paths.gains, paths.delays_s, paths.dopplers_hz):
        delay_samples = tau / ts
        if cfg.pulse == "ideal":
            g = np.zeros(l_ch)
            peak = int(round(delay_samples))
            if peak > l_ch - 1:
                raise DelaySpanError(f"delay {tau} s maps beyond L_ch={l_ch}")
            g[peak] = 1.0
        else:
            peak = int(round(delay_samples))
            if peak > l_ch - 1:
                raise DelaySpanError(f"delay {tau} s maps beyond L_ch={l_ch}")
            g = np.zeros(l_ch)
            lo = max(0, peak - half)
            hi = min(l_ch - 1, peak + half)
            d = np.arange(lo, hi + 1)
            g[lo:hi + 1] = raised_cosine(d - delay_samples)
        # phase exp(j2*pi*nu*((ell + r + i - 1)*Ts - Ts/2)), separable in ell, r, i
        ph_ell = np.exp(2j * np.pi * nu * (ell * ts - ts / 2.0))
        ph_r = np.exp(2j * np.pi * nu * r * ts)
        ph_i = np.exp(2j * np.pi * nu * np.arange(n_sym) * ts)
        taps += h_p * np.einsum("i,r,l->irl", ph_i, ph_r, g * ph_ell)
    return LtvChannelRealization(taps=taps, sample_period_s=ts)


@dataclass
class ChannelMatrixSet:
    """Per-symbol banded channel matrices built lazily from a realization.

    Matrix i has shape (cols + L_ch - 1) x cols with entry (r, c) equal to
    h[i, r, r - c + 1] for 0 <= r - c <= L_ch - 1 and zero elsewhere
    (1-based tap indexing; zero-delay taps sit on the main diagonal).
    """

    realization: LtvChannelRealization
    cols: int
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return self.realization.n_symbols

    @property
    def rows(self) -> int:
        return self.cols + self.realization.l_ch - 1

    def matrix(self, i: int) -> np.ndarray:
        if i in self._cache:
            return self._cache[i]
        h = self.realization.taps[i]
        if h.shape[0] < self.rows:
            raise ValueError(
                f"dimension mismatch: realization has {h.shape[0]} rows, need {self.rows}"
            )
        mat = np.zeros((self.rows, self.cols), dtype=complex)
        c = np.arange(self.cols)
        for ell in range(self.realization.l_ch):
            rr = c + ell
            mat[rr, c] = h[rr, ell]
        self._cache[i] = mat
        return mat

    def block_diagonal(self) -> np.ndarray:
        """Full block-diagonal assembly across all symbols (debug scale only)."""
        n = len(self)
        out = np.zeros((n * self.rows, n * self.cols), dtype=complex)
        for i in range(n):
            out[i * self.rows:(i + 1) * self.rows, i * self.cols:(i + 1) * self.cols] = self.matrix(i)
        return out


def channel_matrices(
    real: LtvChannelRealization, cfg: ModemConfig, with_cp: bool
) -> ChannelMatrixSet:
    """Banded per-symbol matrices sized for the CP-bearing or CP-less chain."""
    cols = cfg.k * cfg.o_s + (cfg.n_cp if with_cp else 0)
    mats = ChannelMatrixSet(realization=real, cols=cols)
    if real.rows < mats.rows:
        raise ValueError(
            f"dimension mismatch: realization rows {real.rows} < required {mats.rows}"
        )
    return mats


def realize(paths: PathSet, cfg: ModemConfig, with_cp: bool,
            n_symbols: int | None = None) -> ChannelMatrixSet:
    """One-stop materialization: tap tensor plus matrix set for a modulation."""
    l_ch = required_l_ch(paths, cfg)
    cols = cfg.k * cfg.o_s + (cfg.n_cp if with_cp else 0)
    real = materialize_taps(paths, cfg, rows=cols + l_ch - 1, n_symbols=n_symbols, l_ch=l_ch)
    return channel_matrices(real, cfg, with_cp=with_cp)


# Text export ---------------------------------------------------------------

def export_taps(real: LtvChannelRealization) -> str:
    """Self-describing text dump, one line per (symbol, tap) vector over rows."""
    lines = [
        "# ltv-taps v1",
        f"# symbols={real.n_symbols} rows={real.rows} l_ch={real.l_ch} "
        f"sample_period_s={real.sample_period_s!r}",
    ]
    for i in range(real.n_symbols):
        for ell in range(real.l_ch):
            vals = " ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in real.taps[i, :, ell])
            lines.append(f"{i + 1} {ell + 1} {vals}")
    return "\n".join(lines) + "\n"


def parse_taps(text: str) -> LtvChannelRealization:
    """Inverse of :func:`export_taps`."""
    header = None
    body = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "symbols=" in line:
                header = line
            continue
        body.append(line)
    if header is None:
        raise ValueError("missing taps header")
    fields = dict(part.split("=") for part in header.lstrip("# ").split())
    n_sym, rows, l_ch = int(fields["symbols"]), int(fields["rows"]), int(fields["l_ch"])
    ts = float(fields["sample_period_s"])
    taps = np.zeros((n_sym, rows, l_ch), dtype=complex)
    for line in body:
        parts = line.split()
        i, ell = int(parts[0]) - 1, int(parts[1]) - 1
        vals = np.array([float(v) for v in parts[2:]])
        taps[i, :, ell] = vals[0::2] + 1j * vals[1::2]
    return LtvChannelRealization(taps=taps, sample_period_s=ts)
