"""Deterministic matrix and window builders shared by all transceiver chains.

Everything here is a pure function of its arguments and returns freshly
allocated numpy arrays, so results can be shared freely across threads.
The contract is the explicit matrix semantics; no FFT fast paths are used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModemConfig

# Builders are pure, so frequently used matrices are memoized and handed out
# as read-only arrays; copy before mutating.
_CACHE: dict = {}


def _cached(key, builder):
    hit = _CACHE.get(key)
    if hit is None:
        hit = builder()
        if isinstance(hit, np.ndarray):
            hit.flags.writeable = False
        _CACHE[key] = hit
    return hit


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n x n DFT matrix with entry (a, b) = exp(-j2*pi*a*b/n) / sqrt(n)."""
    if n < 1:
        raise ValueError(f"invalid size: DFT order must be >= 1, got {n}")

    def build():
        idx = np.arange(n)
        return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)

    return _cached(("dft", n), build)


def oversampled_dft(k: int, o_s: int) -> np.ndarray:
    """K x (K*O_s) oversampled DFT whose rows are the K centred subcarriers.

    Entry (l, m) = exp(-j2*pi*m*(l - K/2)/(K*O_s)) / sqrt(K*O_s) for
    l = 0..K-1 and m = 0..K*O_s-1.  Rows are orthonormal, so W @ W^H = I_K;
    the conjugate transpose is the oversampled IFFT used by the modulators.
    Requires even K because the subcarrier grid is centred at K/2.
    """
    if k < 2 or k % 2 != 0:
        raise ValueError(f"invalid size: K must be even and >= 2, got {k}")
    if o_s < 1:
        raise ValueError(f"invalid size: O_s must be >= 1, got {o_s}")

    def build():
        m = np.arange(k * o_s)
        freq = np.arange(k) - k // 2
        return np.exp(-2j * np.pi * np.outer(freq, m) / (k * o_s)) / np.sqrt(k * o_s)

    return _cached(("wbar", k, o_s), build)


def isfft(x_dd: np.ndarray) -> np.ndarray:
    """Delay-Doppler grid to frequency-time grid: F_K @ X @ F_N^H."""
    x_dd = np.asarray(x_dd)
    if x_dd.ndim != 2:
        raise ValueError(f"dimension mismatch: expected a K x N grid, got shape {x_dd.shape}")
    k, n = x_dd.shape
    f_k = dft_matrix(k)
    f_n = dft_matrix(n)
    return f_k @ x_dd @ f_n.conj().T


def sfft(y_ft: np.ndarray) -> np.ndarray:
    """Frequency-time grid to delay-Doppler grid: F_K^H @ Y @ F_N (inverse of isfft)."""
    y_ft = np.asarray(y_ft)
    if y_ft.ndim != 2:
        raise ValueError(f"dimension mismatch: expected a K x N grid, got shape {y_ft.shape}")
    k, n = y_ft.shape
    f_k = dft_matrix(k)
    f_n = dft_matrix(n)
    return f_k.conj().T @ y_ft @ f_n


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x).flatten(order="F")


def invec(v: np.ndarray, rows: int) -> np.ndarray:
    """Inverse of :func:`vec` for a known row count."""
    v = np.asarray(v)
    if v.size % rows != 0:
        raise ValueError(f"dimension mismatch: length {v.size} not divisible by {rows} rows")
    return v.reshape(rows, -1, order="F")


@dataclass(frozen=True)
class PrototypeFilter:
    """Real symmetric FIR prototype with a recorded normalization scale.

    ``taps`` sum to one (unit DC gain) so that a subband passes through the
    filter with approximately unit amplitude and the filtered waveform keeps
    the same per-symbol transmit power as the unfiltered multicarrier path.
    ``scale`` is the factor applied to the peak-normalized window.
    """

    taps: np.ndarray
    attenuation_db: float
    scale: float

    @property
    def length(self) -> int:
        return self.taps.size


def chebyshev_window(length: int, attenuation_db: float) -> PrototypeFilter:
    """Dolph-Chebyshev window with equiripple side-lobes ``attenuation_db`` below the peak.

    Built by sampling the Chebyshev polynomial in the frequency domain,
    inverse transforming, and symmetrizing; normalized to unit tap sum.
    """
    if length < 2:
        raise ValueError(f"invalid size: window length must be >= 2, got {length}")
    if attenuation_db <= 0:
        raise ValueError(f"invalid attenuation: must be > 0 dB, got {attenuation_db}")
    key = ("cheb", length, float(attenuation_db))
    hit = _CACHE.get(key)
    if hit is not None:
        return hit

    order = length - 1
    ripple_ratio = 10.0 ** (attenuation_db / 20.0)
    beta = np.cosh(np.arccosh(ripple_ratio) / order)

    x = beta * np.cos(np.pi * np.arange(length) / length)
    # Chebyshev polynomial T_order evaluated on and beyond [-1, 1]
    p = np.empty(length)
    inside = np.abs(x) <= 1.0
    p[inside] = np.cos(order * np.arccos(x[inside]))
    above = x > 1.0
    p[above] = np.cosh(order * np.arccosh(x[above]))
    below = x < -1.0
    p[below] = (2 * (length % 2) - 1) * np.cosh(order * np.arccosh(-x[below]))

    if length % 2:
        w = np.real(np.fft.fft(p))
        half = (length + 1) // 2
        w = np.concatenate((w[half - 1:0:-1], w[:half]))
    else:
        p = p * np.exp(1j * np.pi / length * np.arange(length))
        w = np.real(np.fft.fft(p))
        half = length // 2 + 1
        w = np.concatenate((w[half - 1:0:-1], w[1:half]))

    w = w / w.max()
    w = 0.5 * (w + w[::-1])          # enforce exact symmetry
    scale = 1.0 / w.sum()            # unit DC gain
    taps = w * scale
    taps.flags.writeable = False
    filt = PrototypeFilter(taps=taps, attenuation_db=float(attenuation_db), scale=scale)
    _CACHE[key] = filt
    return filt


def selection_matrix(i: int, b: int, d: int) -> np.ndarray:
    """Diagonal 0/1 matrix selecting subband i (rows i*D .. (i+1)*D-1) out of K = B*D."""
    if not 0 <= i < b:
        raise IndexError(f"subband index {i} out of range for B={b}")
    diag = np.zeros(b * d)
    diag[i * d:(i + 1) * d] = 1.0
    return np.diag(diag)


def modulated_filter_taps(filt: PrototypeFilter, i: int, k: int, o_s: int, d: int) -> np.ndarray:
    """Prototype taps shifted to the centre of subband i.

    The normalized shift is F_i = (D-1)/2 + i*D - K/2 subcarrier spacings,
    applied as g_l * exp(j2*pi*F_i*l / (K*O_s)).
    """
    f_i = (d - 1) / 2.0 + i * d - k / 2.0
    ell = np.arange(filt.length)
    return filt.taps * np.exp(2j * np.pi * f_i * ell / (k * o_s))


def subband_conv_matrix(filt: PrototypeFilter, i: int, k: int, o_s: int, d: int) -> np.ndarray:
    """Tall Toeplitz matrix convolving a K*O_s block with the subband-i filter.

    Output length K*O_s + L - 1; column c carries the modulated taps in rows
    c .. c+L-1.
    """
    if not 0 <= i * d < k:
        raise IndexError(f"subband index {i} out of range")
    taps = modulated_filter_taps(filt, i, k, o_s, d)
    n_in = k * o_s
    mat = np.zeros((n_in + filt.length - 1, n_in), dtype=complex)
    for ell in range(filt.length):
        mat[np.arange(n_in) + ell, np.arange(n_in)] = taps[ell]
    return mat


def prototype_filter(cfg: ModemConfig) -> PrototypeFilter:
    """Configured subband prototype (length-1 filters degenerate to a unit tap)."""
    if cfg.filter_len == 1:
        return PrototypeFilter(taps=np.ones(1), attenuation_db=cfg.filter_att_db, scale=1.0)
    return chebyshev_window(cfg.filter_len, cfg.filter_att_db)


def ufmc_precoder(cfg: ModemConfig) -> np.ndarray:
    """Composite per-symbol filtered-multicarrier precoder.

    Sums the per-subband chains G_i @ W^H @ P_i into a single
    (K*O_s + L - 1) x K matrix applied to a frequency-time column.  Column k
    is the subband-k/D filter convolved with the oversampled IFFT of e_k, so
    it can be formed by direct convolution without materializing G_i.
    """

    def build():
        w_h = oversampled_dft(cfg.k, cfg.o_s).conj().T
        filt = prototype_filter(cfg)
        out = np.zeros((cfg.k * cfg.o_s + cfg.filter_len - 1, cfg.k), dtype=complex)
        for i in range(cfg.b):
            taps = modulated_filter_taps(filt, i, cfg.k, cfg.o_s, cfg.d)
            for col in range(i * cfg.d, (i + 1) * cfg.d):
                out[:, col] = np.convolve(w_h[:, col], taps)
        return out

    return _cached(
        ("ufmc", cfg.k, cfg.o_s, cfg.b, cfg.d, cfg.filter_len, float(cfg.filter_att_db)),
        build,
    )


# Cyclic prefix and tail bookkeeping matrices -------------------------------

def cp_insert_matrix(n_cp: int, block: int) -> np.ndarray:
    """(block + N_CP) x block matrix prepending the last N_CP samples of a block."""
    if n_cp > block:
        raise ValueError(f"dimension mismatch: N_CP={n_cp} longer than block={block}")
    eye = np.eye(block)
    return np.vstack((eye[block - n_cp:, :], eye))


def cp_removal_matrix(n_cp: int, k_o_s: int, l_ch: int) -> np.ndarray:
    """K*O_s x (N_CP + K*O_s + L_ch - 1) matrix dropping the CP and the channel tail."""
    out = np.zeros((k_o_s, n_cp + k_o_s + l_ch - 1))
    out[:, n_cp:n_cp + k_o_s] = np.eye(k_o_s)
    return out


def tail_removal_matrix(k_o_s: int, l_ch: int) -> np.ndarray:
    """K*O_s x (K*O_s + L_ch - 1) matrix dropping the last L_ch - 1 received samples."""
    out = np.zeros((k_o_s, k_o_s + l_ch - 1))
    out[:, :k_o_s] = np.eye(k_o_s)
    return out


def tail_truncation_matrix(n_keep: int, l: int) -> np.ndarray:
    """n_keep x (n_keep + L - 1) matrix dropping the final L - 1 serialized samples."""
    out = np.zeros((n_keep, n_keep + l - 1))
    out[:, :n_keep] = np.eye(n_keep)
    return out
