"""Linear MMSE detection, SINR / spectral-efficiency accounting, PSD estimation
and the guard-subcarrier search against an out-of-band emission threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal
from scipy.linalg import cho_factor, cho_solve

from .config import ModemConfig
from .otfs import EffectiveChannel


class IllConditionedError(RuntimeError):
    """The MMSE normal matrix is numerically singular (sigma^2 = 0 with rank loss)."""


class GuardSearchError(RuntimeError):
    """No guard count meets the out-of-band threshold."""


def _as_matrix(c) -> np.ndarray:
    return c.matrix if isinstance(c, EffectiveChannel) else np.asarray(c)


@dataclass(frozen=True)
class SinrMap:
    """Per-bin linear SINR on the K x N grid, with a guard-subcarrier count."""

    values: np.ndarray      # (K, N), linear
    n_guard: int = 0

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def guard_mask(self) -> np.ndarray:
        """Boolean (K, N) mask, True on guard bins."""
        mask = np.zeros(self.values.shape, dtype=bool)
        if self.n_guard > 0:
            mask[:self.n_guard, :] = True
            mask[self.k - self.n_guard:, :] = True
        return mask


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated link metrics for one (waveform, channel, noise) evaluation."""

    net_sinr_db: float
    avg_se_bps_hz: float
    nmse: float
    efficiency: float
    n_guard: int
    psd: tuple | None = None   # optional (freq_hz, power_db) samples


def _normal_solve(c: np.ndarray, sigma2: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (C C^H + sigma^2 I) X = rhs for Hermitian positive (semi)definite systems."""
    a = c @ c.conj().T
    a[np.diag_indices_from(a)] += sigma2
    try:
        return cho_solve(cho_factor(a), rhs)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(f"MMSE normal matrix is singular: {exc}") from exc


def mmse_detect(c, y: np.ndarray, sigma2: float) -> np.ndarray:
    """Linear MMSE symbol estimates C^H (C C^H + sigma^2 I)^{-1} y."""
    cm = _as_matrix(c)
    y = np.asarray(y)
    if y.shape[0] != cm.shape[0]:
        raise ValueError(f"dimension mismatch: y has {y.shape[0]} rows, C has {cm.shape[0]}")
    return cm.conj().T @ _normal_solve(cm, sigma2, y)


def sinr_map(c, sigma2: float, cfg: ModemConfig | None = None, n_guard: int = 0) -> SinrMap:
    """Per-bin MMSE output SINR of an effective channel.

    For bin j with detector d_j = (C C^H + sigma^2 I)^{-1} C_j, the SINR is
    |d_j^H C_j|^2 / (sum_{l != j} |d_j^H C_l|^2 + sigma^2 ||d_j||^2).
    Bins whose column is exactly zero (TX-nulled guards) report SINR 0.
    """
    cm = _as_matrix(c)
    dim = cm.shape[0]
    t = _normal_solve(cm, sigma2, cm)          # column j = d_j
    g = t.conj().T @ cm                        # g[j, l] = d_j^H C_l
    diag = np.abs(np.diag(g)) ** 2
    interference = np.sum(np.abs(g) ** 2, axis=1) - diag
    noise = sigma2 * np.sum(np.abs(t) ** 2, axis=0)
    denom = interference + noise
    vals = np.divide(diag, denom, out=np.zeros(dim), where=denom > 0)
    if cfg is not None:
        k, n = cfg.k, cfg.n
    else:
        k, n = dim, 1
    return SinrMap(values=vals.reshape(n, k).T, n_guard=n_guard)


def sinr_map_from_values(values: np.ndarray, n_guard: int = 0) -> SinrMap:
    """Wrap an already computed (K, N) linear SINR grid."""
    return SinrMap(values=np.asarray(values, dtype=float), n_guard=n_guard)


def _interior(map_: SinrMap, n_guard: int | None) -> np.ndarray:
    ng = map_.n_guard if n_guard is None else n_guard
    if 2 * ng >= map_.k:
        raise ValueError(f"invalid guard count: 2*{ng} >= K={map_.k}")
    return map_.values[ng:map_.k - ng, :]


def net_sinr(map_: SinrMap, n_guard: int | None = None) -> float:
    """Linear-domain mean SINR over non-guard bins, reported in dB."""
    return 10.0 * np.log10(_interior(map_, n_guard).mean())


def avg_spectral_efficiency(map_: SinrMap, efficiency: float, n_guard: int | None = None) -> float:
    """Average spectral efficiency (xi / KN) * sum over non-guard bins of log2(1 + SINR).

    Guard bins contribute zero but stay in the K*N normalization.
    """
    interior = _interior(map_, n_guard)
    return efficiency * np.log2(1.0 + interior).sum() / map_.values.size


def normalized_mse(x_hat: np.ndarray, x: np.ndarray) -> float:
    """||x_hat - x||^2 / ||x||^2."""
    x_hat = np.asarray(x_hat)
    x = np.asarray(x)
    if x_hat.shape != x.shape:
        raise ValueError(f"dimension mismatch: {x_hat.shape} vs {x.shape}")
    ref = np.sum(np.abs(x) ** 2)
    if ref == 0:
        raise ValueError("zero reference: ||x|| = 0")
    return float(np.sum(np.abs(x_hat - x) ** 2) / ref)


# Power spectral density ------------------------------------------------------

@dataclass(frozen=True)
class PsdEstimate:
    """Two-sided Welch PSD with the linear density kept for power checks."""

    freqs_hz: np.ndarray
    density: np.ndarray          # linear, V^2/Hz
    sample_rate_hz: float

    def db_rel_peak(self) -> np.ndarray:
        peak = self.density.max()
        return 10.0 * np.log10(np.maximum(self.density, 1e-300) / peak)

    def band_mask(self, band_hz: float) -> np.ndarray:
        """True inside the nominal band [-band/2, band/2]."""
        return np.abs(self.freqs_hz) <= band_hz / 2.0


def qpsk_grid(rng: np.random.Generator, k: int, n: int) -> np.ndarray:
    """Unit-energy QPSK symbols on a K x N grid."""
    bits = rng.integers(0, 2, size=(2, k, n))
    return ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1)) / np.sqrt(2)


def psd_estimate(frame_fn, cfg: ModemConfig, trials: int, seed) -> PsdEstimate:
    """Welch-averaged PSD of seeded random frames from ``frame_fn(rng)``.

    Frames are concatenated and analysed with Hann-windowed segments of
    length 4*K*O_s at 50 percent overlap; the frequency axis spans
    +-K*O_s*delta_f/2.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    frames = [np.asarray(frame_fn(rng)) for _ in range(trials)]
    x = np.concatenate(frames)
    fs = cfg.sample_rate_hz
    nper = min(4 * cfg.k * cfg.o_s, x.size)
    freqs, dens = sp_signal.welch(
        x,
        fs=fs,
        window="hann",
        nperseg=nper,
        noverlap=nper // 2,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    return PsdEstimate(
        freqs_hz=np.fft.fftshift(freqs),
        density=np.fft.fftshift(dens),
        sample_rate_hz=fs,
    )


def oob_level_db(psd: PsdEstimate, band_hz: float) -> float:
    """Maximum out-of-band density relative to the in-band peak, in dB."""
    inband = psd.band_mask(band_hz)
    if not np.any(~inband):
        raise ValueError("PSD grid has no out-of-band samples")
    peak = psd.density[inband].max()
    return 10.0 * np.log10(psd.density[~inband].max() / peak)


def guard_count_for_threshold(
    frame_fn_for_guard,
    cfg: ModemConfig,
    delta_oob_db: float | None = None,
    trials: int = 100,
    seed=0,
    band_hz: float | None = None,
) -> int:
    """Smallest per-edge guard count whose PSD meets the out-of-band threshold.

    ``frame_fn_for_guard(n_guard)`` must return a frame generator with 2*n_guard
    edge subcarriers nulled on the frequency-time grid.  The out-of-band level
    is non-increasing in the guard count, so the first passing count is
    returned; raises :class:`GuardSearchError` when even maximal nulling fails.
    """
    threshold = cfg.delta_oob_db if delta_oob_db is None else delta_oob_db
    band = cfg.bandwidth_hz if band_hz is None else band_hz
    for n_guard in range(cfg.k // 2):
        est = psd_estimate(frame_fn_for_guard(n_guard), cfg, trials, seed)
        if oob_level_db(est, band) <= threshold:
            return n_guard
    raise GuardSearchError(
        f"not achievable: out-of-band level above {threshold} dB at every guard count"
    )
