"""Doppler-resilient filtered multicarrier chain: subband-filtered oversampled
modulation with continuous-packet overlap and no cyclic prefix, wrapped in
delay-Doppler pre/post processing.

Consecutive filtered symbols overlap by the filter tail (L - 1 samples) and
the final tail is dropped, so a frame occupies exactly K*O_s*N samples, the
same air time as the CP-bearing chain's payload.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelMatrixSet
from .config import ConfigError, ModemConfig
from .ofdm import _guard_mask, apply_channel
from .otfs import EffectiveChannel
from .transforms import (
    dft_matrix,
    invec,
    isfft,
    oversampled_dft,
    sfft,
    tail_truncation_matrix,
    ufmc_precoder,
    vec,
)


def _precoder_parts(cfg: ModemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Head (rows < K*O_s) and zero-padded tail of the per-symbol precoder."""
    p = ufmc_precoder(cfg)
    ko = cfg.k * cfg.o_s
    head = p[:ko]
    tail = np.zeros((ko, cfg.k), dtype=complex)
    if cfg.filter_len > 1:
        tail[:cfg.filter_len - 1] = p[ko:]
    return head, tail


def overlap_add(x_tilde: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Continuous-packet overlap of per-symbol filtered blocks.

    Column n keeps its first K*O_s rows and absorbs the previous column's
    tail into its first L - 1 rows; the last column's tail is dropped.
    """
    ko = cfg.k * cfg.o_s
    if x_tilde.shape[0] != ko + cfg.filter_len - 1:
        raise ValueError(
            f"dimension mismatch: expected {ko + cfg.filter_len - 1} rows, got {x_tilde.shape[0]}"
        )
    n = x_tilde.shape[1]
    out = x_tilde[:ko, :].copy()
    if cfg.filter_len > 1 and n > 1:
        out[:cfg.filter_len - 1, 1:] += x_tilde[ko:, :n - 1]
    return out


def ufmc_modulate_ft(x_ft: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Serialize a frequency-time grid through the filtered-subband transmitter."""
    x_ft = np.asarray(x_ft)
    if x_ft.shape != (cfg.k, cfg.n):
        raise ValueError(f"dimension mismatch: expected {(cfg.k, cfg.n)}, got {x_ft.shape}")
    if cfg.b * cfg.d != cfg.k:
        raise ConfigError(f"K = B*D violated: K={cfg.k}, B={cfg.b}, D={cfg.d}")
    x_tilde = ufmc_precoder(cfg) @ x_ft
    return vec(overlap_add(x_tilde, cfg))


def drufmc_modulate(x_dd: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Delay-Doppler grid to serialized signal of length K*O_s*N (no CP)."""
    return ufmc_modulate_ft(isfft(x_dd), cfg)


def drufmc_apply_channel(
    s: np.ndarray,
    chan: ChannelMatrixSet,
    p_t: float,
    noise_var: float,
    seed=None,
) -> np.ndarray:
    """Received signal through the CP-less per-symbol channel blocks."""
    return apply_channel(s, chan, p_t, noise_var, seed)


def drufmc_demodulate(r: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Recover the delay-Doppler grid: drop channel tails, oversampled FFT, SFFT."""
    r = np.asarray(r)
    if r.size % cfg.n != 0:
        raise ValueError(f"dimension mismatch: length {r.size} not divisible by N={cfg.n}")
    block = r.size // cfg.n
    ko = cfg.k * cfg.o_s
    if block < ko:
        raise ValueError(f"dimension mismatch: received block {block} shorter than {ko}")
    rr = invec(r, block)
    y_ft = oversampled_dft(cfg.k, cfg.o_s) @ rr[:ko, :]
    return sfft(y_ft)


def ufmc_stacked_precoder(cfg: ModemConfig) -> np.ndarray:
    """(K*O_s*N) x (K*N) matrix sending vec(X_FT) to the serialized signal.

    Built literally: per-symbol precoder blocks placed on a K*O_s row
    stride (tails land in the next block's rows), final L - 1 rows dropped.
    """
    ko = cfg.k * cfg.o_s
    total = ko * cfg.n
    stacked = np.zeros((total + cfg.filter_len - 1, cfg.k * cfg.n), dtype=complex)
    p = ufmc_precoder(cfg)
    for i in range(cfg.n):
        stacked[i * ko:i * ko + ko + cfg.filter_len - 1, i * cfg.k:(i + 1) * cfg.k] += p
    return tail_truncation_matrix(total, cfg.filter_len) @ stacked


def dd_to_ft_kron(cfg: ModemConfig) -> np.ndarray:
    """KN x KN Kronecker factor with vec(F_K X F_N^H) = (F_N^* kron F_K) vec(X)."""
    return np.kron(dft_matrix(cfg.n).conj(), dft_matrix(cfg.k))


def drufmc_effective_channel(chan: ChannelMatrixSet, cfg: ModemConfig) -> EffectiveChannel:
    """Dense KN x KN delay-Doppler map of the filtered CP-less chain.

    Exploits the chain structure instead of forming the KN x (K*O_s*N)
    intermediate: with C_m / D_m the per-symbol head and overlap-tail maps
    brought to the delay domain, the output block (n, n') sums
    exp(-j2*pi*n*m/N) C_m and the shifted tail terms over symbols m, followed
    by the Doppler-side DFT.
    """
    k, n, ko = cfg.k, cfg.n, cfg.k * cfg.o_s
    f_k = dft_matrix(k)
    f_n = dft_matrix(n)
    w = oversampled_dft(cfg.k, cfg.o_s)
    fkh_w = f_k.conj().T @ w

    null = _guard_mask(k, cfg.n_guard if cfg.guard_nulling == "tx" else 0)
    head, tail = _precoder_parts(cfg)
    head = head * null[np.newaxis, :]
    tail = tail * null[np.newaxis, :]

    # Per-symbol maps in the delay domain, times F_K for the input-side DFT
    cf = np.empty((n, k, k), dtype=complex)
    df = np.empty((n, k, k), dtype=complex)
    for m in range(n):
        bt = fkh_w @ chan.matrix(m)[:ko, :]   # F_K^H W (R_tail M_m)
        cf[m] = bt @ (head @ f_k)
        df[m] = bt @ (tail @ f_k)

    theta = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    phi = np.sqrt(n) * f_n.conj()                   # phi[m, col] = exp(+j2*pi*m*col/N)
    # tail of symbol m lands in the head of symbol m+1: shift its phase row
    phi_shift = np.zeros_like(phi)
    phi_shift[1:] = phi[:-1]
    blocks = (
        np.einsum("rm,mc,mkl->rckl", theta, phi, cf)
        + np.einsum("rm,mc,mkl->rckl", theta, phi_shift, df)
    )
    out = blocks.transpose(0, 2, 1, 3).reshape(k * n, k * n) * (np.sqrt(cfg.p_t) / n)
    return EffectiveChannel(matrix=out, p_t=cfg.p_t)
