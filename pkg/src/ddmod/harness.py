"""Experiment runner: config parsing, seeded SNR x speed x waveform sweeps,
PSD / guard-band experiments, and the ``ddmod`` command line interface.

Waveforms at the same (speed, SNR, trial) grid point are evaluated on the
same channel realization, so waveform comparisons are paired and free of
Monte-Carlo noise.  Output rows are sorted deterministically before writing;
rerunning an identical config and seed reproduces the CSV byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from . import drufmc, ofdm, otfs
from .config import ConfigError, ModemConfig, desk_config
from .metrics import (
    MetricsReport,
    avg_spectral_efficiency,
    mmse_detect,
    net_sinr,
    normalized_mse,
    psd_estimate,
    qpsk_grid,
    sinr_map,
    sinr_map_from_values,
    guard_count_for_threshold,
)
from .transforms import invec, isfft, vec

WAVEFORMS = ("otfs", "drufmc", "ofdm-full", "ofdm-onetap")

CSV_HEADER = "waveform,speed_kmh,snr_db,trial,net_sinr_db,avg_se_bps_hz,nmse,runtime_s"

#: Modem keys that the run subcommand swaps for the desk preset unless --full
#: is given or the config file sets them explicitly.
_MODEM_KEYS = (
    "k", "n", "o_s", "b", "d", "filter_len", "filter_att_db", "n_cp",
    "delta_f_hz", "f_c_hz", "p_t", "n_guard", "delta_oob_db", "pulse",
    "guard_nulling", "onetap",
)

_DESK_PRESET = dict(k=32, n=8, o_s=4, b=4, d=8, filter_len=16)


@dataclass
class ExperimentConfig:
    """Sweep description: modem parameters plus experiment axes and seeds."""

    modem: ModemConfig = field(default_factory=ModemConfig)
    waveforms: tuple = WAVEFORMS
    snr_db: tuple = (0.0, 10.0, 20.0, 30.0)
    speeds_kmh: tuple = (50.0, 500.0)
    trials: int = 50
    seed: int = 0
    channel_model: str = "eva"       # "eva" or "ideal" (debug)
    psd_trials: int = 100
    n_guard_by_waveform: dict = field(default_factory=dict)
    explicit_keys: frozenset = frozenset()
    out: str | None = None
    timing: bool = False

    def __post_init__(self):
        if len(self.snr_db) == 0:
            raise ConfigError("SNR grid must be non-empty")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        for wf in self.waveforms:
            if wf not in WAVEFORMS:
                raise ConfigError(f"unknown waveform {wf!r}; expected one of {WAVEFORMS}")
        if self.channel_model not in ("eva", "ideal"):
            raise ConfigError(f"channel must be 'eva' or 'ideal', got {self.channel_model!r}")

    def n_guard_for(self, waveform: str) -> int:
        return self.n_guard_by_waveform.get(waveform, self.modem.n_guard)


_INT_KEYS = {"k", "n", "o_s", "b", "d", "filter_len", "n_cp", "n_guard", "trials", "seed", "psd_trials"}
_FLOAT_KEYS = {"filter_att_db", "delta_f_hz", "f_c_hz", "p_t", "delta_oob_db"}
_STR_KEYS = {"pulse", "guard_nulling", "onetap", "channel", "out"}
_LIST_KEYS = {"waveforms", "snr_db", "speeds_kmh"}


def load_config(path: str) -> ExperimentConfig:
    """Parse a flat ``key = value`` config file with ``#`` comments.

    Unset keys fall back to the full-scale defaults; all invariants are
    validated and violations name the offending constraint.
    """
    raw: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        key = key.replace("-", "_")
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        raw[key] = value
    return config_from_dict(raw, origin=path)


def config_from_dict(raw: dict, origin: str = "<dict>") -> ExperimentConfig:
    """Build and validate an :class:`ExperimentConfig` from string key/values."""
    modem_kwargs = {}
    exp_kwargs: dict = {}
    guard_over = {}
    for key, value in raw.items():
        try:
            if key.startswith("n_guard_"):
                wf = key[len("n_guard_"):].replace("_", "-")
                guard_over[wf] = int(value)
            elif key in _MODEM_KEYS and key in _INT_KEYS:
                modem_kwargs[key] = int(value)
            elif key in _MODEM_KEYS and key in _FLOAT_KEYS:
                modem_kwargs[key] = float(value)
            elif key in _MODEM_KEYS:
                modem_kwargs[key] = str(value)
            elif key in _INT_KEYS:
                exp_kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                exp_kwargs[key] = float(value)
            elif key == "channel":
                exp_kwargs["channel_model"] = value
            elif key == "out":
                exp_kwargs["out"] = value
            elif key in _LIST_KEYS:
                parts = [p.strip() for p in value.split(",") if p.strip()]
                if key == "waveforms":
                    exp_kwargs[key] = tuple(parts)
                else:
                    exp_kwargs[key] = tuple(float(p) for p in parts)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{origin}: bad value for {key!r}: {exc}") from exc
    modem = ModemConfig(**modem_kwargs)
    return ExperimentConfig(
        modem=modem,
        n_guard_by_waveform=guard_over,
        explicit_keys=frozenset(raw.keys()),
        **exp_kwargs,
    )


def _apply_desk_preset(cfg: ExperimentConfig) -> ExperimentConfig:
    """Swap unset modem dimensions for the desk preset (non --full runs)."""
    changes = {k: v for k, v in _DESK_PRESET.items() if k not in cfg.explicit_keys}
    if "n_cp" not in cfg.explicit_keys:
        changes["n_cp"] = None
    if not changes:
        return cfg
    cfg.modem = cfg.modem.with_(**changes)
    return cfg


@dataclass(frozen=True)
class ResultRow:
    waveform: str
    speed_kmh: float
    snr_db: float
    trial: int
    net_sinr_db: float
    avg_se_bps_hz: float
    nmse: float
    runtime_s: float

    def to_csv(self) -> str:
        return (
            f"{self.waveform},{self.speed_kmh:.10g},{self.snr_db:.10g},{self.trial},"
            f"{self.net_sinr_db:.10g},{self.avg_se_bps_hz:.10g},{self.nmse:.10g},"
            f"{self.runtime_s:.3f}"
        )


def channel_seed(base_seed: int, speed_kmh: float, snr_index: int, trial: int):
    """Entropy for the trial channel.

    Neither the waveform nor the speed enters the seed: waveforms at one grid
    point share a realization, and the two speed curves see the same gains,
    delays and ray angles with only the Doppler scale changing, so waveform
    and speed comparisons are both free of Monte-Carlo noise.
    """
    del speed_kmh
    return np.random.SeedSequence((int(base_seed), int(snr_index), int(trial)))


def _trial_paths(cfg: ExperimentConfig, speed_kmh: float, snr_index: int, trial: int) -> ch.PathSet:
    if cfg.channel_model == "ideal":
        return ch.ideal_path()
    seed = channel_seed(cfg.seed, speed_kmh, snr_index, trial)
    return ch.sample_eva_paths(seed, speed_kmh / 3.6, cfg.modem.f_c_hz)


def evaluate_point(
    cfg: ExperimentConfig, waveform: str, speed_kmh: float, snr_index: int, trial: int
) -> ResultRow:
    """Metrics for one (waveform, speed, SNR, trial) grid cell."""
    start = time.perf_counter()
    modem = cfg.modem
    snr_db = cfg.snr_db[snr_index]
    sigma2 = modem.p_t / 10.0 ** (snr_db / 10.0)
    n_guard = cfg.n_guard_for(waveform)
    paths = _trial_paths(cfg, speed_kmh, snr_index, trial)
    with_cp = waveform != "drufmc"
    chan = ch.realize(paths, modem, with_cp=with_cp)

    # deterministic per-cell stream for symbols and noise
    sym_rng, noise_ss = _cell_streams(cfg, waveform, speed_kmh, snr_index, trial)
    x_dd = qpsk_grid(sym_rng, modem.k, modem.n)
    x = vec(x_dd)

    if waveform == "ofdm-onetap":
        smap = sinr_map_from_values(ofdm.ofdm_onetap_sinr(chan, modem, sigma2), n_guard)
        s = ofdm.ofdm_modulate(invec(x, modem.k), modem)
        r = ofdm.apply_channel(s, chan, modem.p_t, sigma2, noise_ss)
        y_ft = ofdm.ofdm_demodulate(r, modem)
        x_hat = vec(ofdm.ofdm_onetap_fde(y_ft, chan, modem, sigma2))
        efficiency = modem.cp_efficiency()
    else:
        if waveform == "otfs":
            eff = otfs.otfs_effective_channel(chan, modem)
            s = otfs.otfs_modulate(x_dd, modem)
            r = otfs.otfs_apply_channel(s, chan, modem.p_t, sigma2, noise_ss)
            y = vec(otfs.otfs_demodulate(r, modem))
            efficiency = modem.cp_efficiency()
        elif waveform == "drufmc":
            eff = drufmc.drufmc_effective_channel(chan, modem)
            s = drufmc.drufmc_modulate(x_dd, modem)
            r = drufmc.drufmc_apply_channel(s, chan, modem.p_t, sigma2, noise_ss)
            y = vec(drufmc.drufmc_demodulate(r, modem))
            efficiency = 1.0
        else:  # ofdm-full
            eff = ofdm.ofdm_full_effective_channel(chan, modem)
            s = ofdm.ofdm_modulate(invec(x, modem.k), modem)
            r = ofdm.apply_channel(s, chan, modem.p_t, sigma2, noise_ss)
            y = vec(ofdm.ofdm_demodulate(r, modem))
            efficiency = modem.cp_efficiency()
        smap = sinr_map(eff, sigma2, modem, n_guard)
        x_hat = mmse_detect(eff, y, sigma2)

    report = MetricsReport(
        net_sinr_db=net_sinr(smap),
        avg_se_bps_hz=avg_spectral_efficiency(smap, efficiency),
        nmse=normalized_mse(x_hat, x),
        efficiency=efficiency,
        n_guard=n_guard,
    )
    return ResultRow(
        waveform=waveform,
        speed_kmh=speed_kmh,
        snr_db=snr_db,
        trial=trial,
        net_sinr_db=report.net_sinr_db,
        avg_se_bps_hz=report.avg_se_bps_hz,
        nmse=report.nmse,
        runtime_s=(time.perf_counter() - start) if cfg.timing else 0.0,
    )


def _cell_streams(cfg, waveform, speed_kmh, snr_index, trial):
    ss = np.random.SeedSequence(
        (int(cfg.seed), 0x5EED, WAVEFORMS.index(waveform),
         int(round(speed_kmh * 1000)), int(snr_index), int(trial))
    )
    sym_ss, noise_ss = ss.spawn(2)
    return np.random.default_rng(sym_ss), noise_ss


def _worker(args):
    cfg, cell = args
    waveform, speed, snr_index, trial = cell
    try:
        return evaluate_point(cfg, waveform, speed, snr_index, trial), None
    except Exception as exc:  # recorded, not fatal for the sweep
        return None, (cell, repr(exc))


def run_sweep(cfg: ExperimentConfig, out_path: str | None = None):
    """Run the full grid; returns (rows, failures) and optionally writes CSV.

    Rows are sorted by (waveform, speed, SNR, trial) before writing so the
    output is independent of execution order; DDMOD_THREADS > 1 enables a
    process pool over grid cells.
    """
    cells = [
        (wf, speed, si, t)
        for wf in cfg.waveforms
        for speed in cfg.speeds_kmh
        for si in range(len(cfg.snr_db))
        for t in range(cfg.trials)
    ]
    workers = int(os.environ.get("DDMOD_THREADS", "1"))
    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, [(cfg, c) for c in cells], chunksize=4))
    else:
        results = [_worker((cfg, c)) for c in cells]

    rows = [r for r, err in results if r is not None]
    failures = [err for r, err in results if err is not None]
    rows.sort(key=lambda r: (r.waveform, r.speed_kmh, r.snr_db, r.trial))

    target = out_path or cfg.out
    if target:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in rows:
                fh.write(row.to_csv() + "\n")
    return rows, failures


# Matrix text export ----------------------------------------------------------

def export_matrix_text(matrix: np.ndarray, label: str = "matrix") -> str:
    """Self-describing text dump of a complex matrix, one row per line."""
    m = np.asarray(matrix)
    lines = [f"# ddmod-matrix v1 label={label} rows={m.shape[0]} cols={m.shape[1]}"]
    for row in m:
        lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix_text(text: str) -> np.ndarray:
    """Inverse of :func:`export_matrix_text`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0]
    if not header.startswith("# ddmod-matrix"):
        raise ValueError("missing matrix header")
    fields = dict(p.split("=") for p in header.lstrip("# ").split() if "=" in p)
    rows, cols = int(fields["rows"]), int(fields["cols"])
    out = np.empty((rows, cols), dtype=complex)
    for i, line in enumerate(lines[1:rows + 1]):
        vals = np.array([float(v) for v in line.split()])
        out[i] = vals[0::2] + 1j * vals[1::2]
    return out


# PSD / guard-band experiment -------------------------------------------------

def _null_rows(x_ft: np.ndarray, n_guard: int) -> np.ndarray:
    if n_guard == 0:
        return x_ft
    out = x_ft.copy()
    out[:n_guard, :] = 0.0
    out[x_ft.shape[0] - n_guard:, :] = 0.0
    return out


def frame_generator(cfg: ExperimentConfig, waveform: str, n_guard: int):
    """Seedable transmit-frame factory with 2*n_guard edge subcarriers nulled."""
    modem = cfg.modem

    def fn(rng):
        x_ft = isfft(qpsk_grid(rng, modem.k, modem.n))
        x_ft = _null_rows(x_ft, n_guard)
        if waveform == "drufmc":
            return drufmc.ufmc_modulate_ft(x_ft, modem)
        return ofdm.ofdm_modulate(x_ft, modem)

    return fn


def run_psd(cfg: ExperimentConfig, out_path: str | None = None):
    """PSD and guard-count summary per waveform family.

    Returns {waveform: (PsdEstimate, n_guard)} and optionally writes a
    ``waveform,freq_hz,power_db`` CSV of the unnulled spectra.
    """
    families = []
    for wf in cfg.waveforms:
        fam = "drufmc" if wf == "drufmc" else "otfs"
        if fam not in families:
            families.append(fam)
    out = {}
    for wf in families:
        est = psd_estimate(frame_generator(cfg, wf, 0), cfg.modem, cfg.psd_trials, cfg.seed)
        n_guard = guard_count_for_threshold(
            lambda ng, wf=wf: frame_generator(cfg, wf, ng),
            cfg.modem,
            trials=cfg.psd_trials,
            seed=cfg.seed,
        )
        out[wf] = (est, n_guard)
    target = out_path or cfg.out
    if target:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("waveform,freq_hz,power_db\n")
            for wf, (est, _) in out.items():
                for f, p in zip(est.freqs_hz, est.db_rel_peak()):
                    fh.write(f"{wf},{f:.10g},{p:.10g}\n")
    return out


# Self test -------------------------------------------------------------------

def selftest() -> int:
    """Fast built-in oracle suite; returns the number of failed checks."""
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"  [{'ok' if ok else 'FAIL'}] {name}")
        if not ok:
            failures += 1

    from .transforms import dft_matrix, oversampled_dft, sfft

    rng = np.random.default_rng(1)
    f8 = dft_matrix(8)
    check("DFT unitarity", np.abs(f8 @ f8.conj().T - np.eye(8)).max() < 1e-12)
    w = oversampled_dft(8, 4)
    check("oversampled DFT row orthonormality", np.abs(w @ w.conj().T - np.eye(8)).max() < 1e-12)
    x = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
    check("sfft(isfft) round trip", np.abs(sfft(isfft(x)) - x).max() < 1e-10)

    cfg = desk_config()
    paths = ch.ideal_path()
    chan = ch.realize(paths, cfg, with_cp=True)
    x_dd = qpsk_grid(rng, cfg.k, cfg.n)
    y = otfs.otfs_demodulate(
        otfs.otfs_apply_channel(otfs.otfs_modulate(x_dd, cfg), chan, 1.0, 0.0), cfg
    )
    check("OTFS ideal-channel loopback", np.abs(y - x_dd).max() < 1e-10)

    paths = ch.sample_eva_paths(3, 500 / 3.6, cfg.f_c_hz)
    chan = ch.realize(paths, cfg, with_cp=True)
    eff = otfs.otfs_effective_channel(chan, cfg)
    j = 17
    e = np.zeros(cfg.k * cfg.n)
    e[j] = 1.0
    probe = vec(otfs.otfs_demodulate(
        otfs.otfs_apply_channel(otfs.otfs_modulate(invec(e, cfg.k), cfg), chan, 1.0, 0.0), cfg
    ))
    rel = np.linalg.norm(probe - eff.matrix[:, j]) / np.linalg.norm(eff.matrix[:, j])
    check("OTFS chain/matrix probe", rel < 1e-9)

    chan_no = ch.realize(paths, cfg, with_cp=False)
    effu = drufmc.drufmc_effective_channel(chan_no, cfg)
    probe = vec(drufmc.drufmc_demodulate(
        drufmc.drufmc_apply_channel(drufmc.drufmc_modulate(invec(e, cfg.k), cfg), chan_no, 1.0, 0.0),
        cfg,
    ))
    rel = np.linalg.norm(probe - effu.matrix[:, j]) / np.linalg.norm(effu.matrix[:, j])
    check("DR-UFMC chain/matrix probe", rel < 1e-9)

    small = desk_config(k=16, o_s=2, b=4, d=4, filter_len=5, n=4)
    x_dd = qpsk_grid(rng, small.k, small.n)
    s1 = drufmc.drufmc_modulate(x_dd, small)
    s2 = drufmc.ufmc_stacked_precoder(small) @ drufmc.dd_to_ft_kron(small) @ vec(x_dd)
    check("DR-UFMC dual construction", np.abs(s1 - s2).max() < 1e-12)

    c = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    yv = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    a_inv = np.linalg.inv(c @ c.conj().T + 0.3 * np.eye(4))
    check("MMSE dense-inverse oracle",
          np.abs(mmse_detect(c, yv, 0.3) - c.conj().T @ a_inv @ yv).max() < 1e-10)
    return failures


# CLI -------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddmod",
        description="Delay-Doppler multicarrier waveform benchmark runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="SNR x speed x waveform metric sweep")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--full", action="store_true",
                       help="run the full-scale configuration instead of the desk preset")
    run_p.add_argument("--out", default=None, help="CSV output path")
    run_p.add_argument("--timing", action="store_true",
                       help="record wall-clock runtimes (breaks byte-level reproducibility)")

    psd_p = sub.add_parser("psd", help="PSD and guard-count experiment")
    psd_p.add_argument("--config", required=True)
    psd_p.add_argument("--out", required=True, help="CSV output path")
    psd_p.add_argument("--trials", type=int, default=None)

    sub.add_parser("selftest", help="run the built-in oracle suite")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "selftest":
        failures = selftest()
        print("selftest:", "ok" if failures == 0 else f"{failures} failures")
        return 0 if failures == 0 else 1

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "run":
        if not args.full:
            cfg = _apply_desk_preset(cfg)
        cfg.timing = args.timing
        try:
            rows, failures = run_sweep(cfg, out_path=args.out)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        for cell, err in failures:
            print(f"row failed {cell}: {err}", file=sys.stderr)
        print(f"{len(rows)} rows" + (f" -> {args.out or cfg.out}" if (args.out or cfg.out) else ""))
        return 1 if failures else 0

    if args.command == "psd":
        if args.trials is not None:
            cfg.psd_trials = args.trials
        try:
            summary = run_psd(cfg, out_path=args.out)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        for wf, (_, n_guard) in summary.items():
            print(f"{wf}: 2N_G = {2 * n_guard} nulled subcarriers for "
                  f"{cfg.modem.delta_oob_db:g} dB out-of-band threshold")
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
