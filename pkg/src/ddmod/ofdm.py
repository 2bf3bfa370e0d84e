"""Oversampled CP-OFDM modulator plus the two OFDM benchmark receivers.

The modulator here is the frequency-time core shared with the delay-Doppler
chain: data sits directly on the K x N frequency-time grid.  Two receivers
are provided, full multicarrier-multisymbol linear MMSE (via the effective
channel matrix) and classical per-subcarrier one-tap FDE.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelMatrixSet
from .config import ModemConfig
from .transforms import invec, oversampled_dft, vec


def _guard_mask(k: int, n_guard: int) -> np.ndarray:
    """1 on data subcarriers, 0 on the n_guard edge subcarriers each side."""
    mask = np.ones(k)
    if n_guard > 0:
        mask[:n_guard] = 0.0
        mask[k - n_guard:] = 0.0
    return mask


def ofdm_modulate(x_ft: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Serialize a K x N frequency-time grid: oversampled IFFT, CP, columnwise vec."""
    x_ft = np.asarray(x_ft)
    if x_ft.shape != (cfg.k, cfg.n):
        raise ValueError(f"dimension mismatch: expected {(cfg.k, cfg.n)}, got {x_ft.shape}")
    w = oversampled_dft(cfg.k, cfg.o_s)
    s = w.conj().T @ x_ft
    if cfg.n_cp > 0:
        s = np.concatenate((s[-cfg.n_cp:, :], s), axis=0)   # A_cp @ s
    return vec(s)


def apply_channel(
    s: np.ndarray,
    chan: ChannelMatrixSet,
    p_t: float,
    noise_var: float,
    seed=None,
) -> np.ndarray:
    """Push a serialized signal through the per-symbol LTV matrices and add noise.

    Blocks are independent (block-diagonal channel); each output block gains
    L_ch - 1 tail samples.  Noise is circular complex Gaussian with the given
    per-sample variance.
    """
    s = np.asarray(s)
    n_sym = len(chan)
    if s.size != n_sym * chan.cols:
        raise ValueError(
            f"dimension mismatch: signal length {s.size} != {n_sym} x {chan.cols}"
        )
    blocks_in = invec(s, chan.cols)
    out = np.empty((chan.rows, n_sym), dtype=complex)
    for i in range(n_sym):
        out[:, i] = np.sqrt(p_t) * (chan.matrix(i) @ blocks_in[:, i])
    r = vec(out)
    if noise_var > 0:
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(r.size) + 1j * rng.standard_normal(r.size)
        r = r + np.sqrt(noise_var / 2.0) * w
    return r


def ofdm_demodulate(r: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Recover the K x N frequency-time grid: CP and tail removal, oversampled FFT."""
    r = np.asarray(r)
    if r.size % cfg.n != 0:
        raise ValueError(f"dimension mismatch: length {r.size} not divisible by N={cfg.n}")
    block = r.size // cfg.n
    l_ch = block - cfg.k * cfg.o_s - cfg.n_cp + 1
    if l_ch < 1:
        raise ValueError(f"dimension mismatch: received block {block} too short")
    rr = invec(r, block)
    z = rr[cfg.n_cp:cfg.n_cp + cfg.k * cfg.o_s, :]          # R_cp @ rr
    return oversampled_dft(cfg.k, cfg.o_s) @ z


def per_symbol_ft_channel(chan: ChannelMatrixSet, cfg: ModemConfig, i: int) -> np.ndarray:
    """K x K frequency-time channel of symbol i: W @ R_cp @ M_i @ A_cp @ W^H."""
    w = oversampled_dft(cfg.k, cfg.o_s)
    h = cp_core(chan, cfg, i)
    return w @ h @ w.conj().T


def cp_core(chan: ChannelMatrixSet, cfg: ModemConfig, i: int) -> np.ndarray:
    """Time-domain K*O_s x K*O_s map of symbol i after CP insertion and removal."""
    ko = cfg.k * cfg.o_s
    l_ch = chan.realization.l_ch
    m = chan.matrix(i)
    # R_cp @ M selects rows n_cp .. n_cp + ko - 1; A_cp folds the CP columns back
    core = m[cfg.n_cp:cfg.n_cp + ko, :]
    if cfg.n_cp > 0:
        folded = core[:, cfg.n_cp:].copy()
        folded[:, ko - cfg.n_cp:] += core[:, :cfg.n_cp]
        return folded
    return core


def ofdm_full_effective_channel(chan: ChannelMatrixSet, cfg: ModemConfig) -> "EffectiveChannel":
    """Block-diagonal KN x KN input/output map on the frequency-time grid.

    Symbol blocks are sqrt(P_T) * W @ H_i @ W^H; the block-diagonal channel
    model mixes nothing across symbols in this domain.
    """
    from .otfs import EffectiveChannel  # shared container

    k, n = cfg.k, cfg.n
    null = _guard_mask(k, cfg.n_guard if cfg.guard_nulling == "tx" else 0)
    out = np.zeros((k * n, k * n), dtype=complex)
    for i in range(n):
        blk = per_symbol_ft_channel(chan, cfg, i) * null[np.newaxis, :]
        out[i * k:(i + 1) * k, i * k:(i + 1) * k] = np.sqrt(cfg.p_t) * blk
    return EffectiveChannel(matrix=out, p_t=cfg.p_t)


def ofdm_onetap_fde(
    y_ft: np.ndarray,
    chan: ChannelMatrixSet,
    cfg: ModemConfig,
    noise_var: float,
) -> np.ndarray:
    """Per-subcarrier scalar equalization of a received frequency-time grid.

    The scalar channel of bin (k, i) is the diagonal of the symbol-i
    frequency-time matrix; inter-carrier leakage is left as noise.  The MMSE
    scalar shrinks by |c|^2 + sigma^2/P_T, the ZF variant divides by c.
    """
    y_ft = np.asarray(y_ft)
    if y_ft.shape != (cfg.k, cfg.n):
        raise ValueError(f"dimension mismatch: expected {(cfg.k, cfg.n)}, got {y_ft.shape}")
    est = np.empty_like(y_ft, dtype=complex)
    for i in range(cfg.n):
        c = np.diag(per_symbol_ft_channel(chan, cfg, i))
        y = y_ft[:, i] / np.sqrt(cfg.p_t)
        if cfg.onetap == "zf":
            est[:, i] = y / c
        else:
            est[:, i] = np.conj(c) * y / (np.abs(c) ** 2 + noise_var / cfg.p_t)
    return est


def ofdm_onetap_sinr(chan: ChannelMatrixSet, cfg: ModemConfig, noise_var: float) -> np.ndarray:
    """Per-bin SINR of one-tap FDE: diagonal power over row residual plus noise.

    Scalar equalization rescales the whole observation row, so the SINR does
    not depend on the MMSE/ZF choice.
    """
    out = np.empty((cfg.k, cfg.n))
    for i in range(cfg.n):
        blk = np.sqrt(cfg.p_t) * per_symbol_ft_channel(chan, cfg, i)
        sig = np.abs(np.diag(blk)) ** 2
        interference = np.sum(np.abs(blk) ** 2, axis=1) - sig
        out[:, i] = sig / (interference + noise_var)
    return out
