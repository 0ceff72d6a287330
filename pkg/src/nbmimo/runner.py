"""Experiment orchestration: seeded trials, stop rules, and CSV records.

Every frame draws its randomness from an independent stream keyed by
(master seed, purpose, frame index), so results are bit-identical however
trials are scheduled.  Each swept point accumulates frames until the
configured number of frame errors is reached or the frame cap fires; the
record says which rule stopped it.  Monte Carlo standard errors ride along
with every estimate (frame-level variance for BER, binomial for FER).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np
from scipy import stats

from nbmimo import __version__
from nbmimo.channel import (
    CorrelationSpec,
    apply_correlation,
    ergodic_capacity,
    gray_constellation,
    map_codeword,
    perturb_estimate,
    sample_iid,
    snr_to_noise,
    transmit,
)
from nbmimo.code import build_code_spec, lower_rate
from nbmimo.complexity import flops_mmse, flops_proposed
from nbmimo.config import ExperimentConfig
from nbmimo.de import DeConfig, find_threshold
from nbmimo.decoder import decode
from nbmimo.detect import (
    delta_samples,
    mf_detect,
    mf_sinr,
    mf_soft,
    mmse_soft,
    symbol_priors,
)
from nbmimo.galois import build_field

# Purpose tags keep per-frame streams disjoint across run types.
_FRAME, _UNCODED, _CAPACITY, _KSDELTA = 0, 1, 2, 3


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by (master seed, *key)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    )


@dataclass
class SweepSummary:
    detector: str
    gamma_db: float
    est_error_var: float
    rho_t: float
    rho_r: float
    frames: int
    bit_errors: int
    frame_errors: int
    ber: float
    ber_se: float
    fer: float
    fer_se: float
    mean_iterations: float
    mean_bit_errors_per_frame_error: float
    flops_detect: int
    flops_soft: int
    stop_reason: str


def _point_flops(kind: str, n_r: int, m_points: int) -> tuple[int, int]:
    if kind == "mmse":
        return flops_mmse(n_r, m_points)
    return flops_proposed(n_r, m_points)


class _SoftDetector:
    """Per-use soft detection closure for a configured detector kind."""

    def __init__(self, kind: str, es: float, n_t: int, n_r: int, sigma2_n: float,
                 constellation):
        self.kind = kind
        self.es = es
        self.n_t = n_t
        self.sigma2_n = sigma2_n
        self.constellation = constellation
        if kind == "mf-simplified":
            _, _, self.sigma2_k = mf_sinr(
                np.empty((n_r, n_t)), 0, es, n_t, sigma2_n, mode="simplified"
            )

    def __call__(self, h_est: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.kind == "mmse":
            _, block = mmse_soft(
                h_est, y, self.es, self.n_t, 2 * self.sigma2_n, self.constellation
            )
            return block
        mode = "exact" if self.kind == "mf-exact" else "simplified"
        s_hat = mf_detect(h_est, y, mode=mode)
        if self.kind == "mf-simplified":
            sigma2_k = self.sigma2_k
        else:
            _, _, sigma2_k = mf_sinr(
                h_est, None, self.es, self.n_t, self.sigma2_n, mode="exact"
            )
        return mf_soft(s_hat, sigma2_k, self.constellation)


def _stats_from_counts(counts: np.ndarray, bits_per_frame: int):
    frames = len(counts)
    ber = counts.sum() / (bits_per_frame * frames)
    if frames > 1:
        ber_se = counts.std(ddof=1) / (bits_per_frame * np.sqrt(frames))
    else:
        ber_se = 0.0
    frame_errors = int(np.count_nonzero(counts))
    fer = frame_errors / frames
    fer_se = np.sqrt(max(fer * (1 - fer), 0.0) / frames)
    nonzero = counts[counts > 0]
    mean_per_fe = float(nonzero.mean()) if len(nonzero) else 0.0
    return ber, ber_se, frame_errors, fer, fer_se, mean_per_fe


def run_ber(cfg: ExperimentConfig, progress=None) -> list[SweepSummary]:
    """Coded sweep over (detector, estimation error, SNR)."""
    es = 1.0
    field = build_field(cfg.m)
    spec = build_code_spec(cfg.n_symbols, cfg.d_c, field, cfg.construction_seed)
    if cfg.repeat_factor > 1:
        spec = lower_rate(spec, spec.rate / cfg.repeat_factor)
    const = gray_constellation(cfg.modulation, symbol_energy=es / cfg.n_t)
    corr = None
    if cfg.rho_t > 0 or cfg.rho_r > 0:
        corr = CorrelationSpec(cfg.rho_t, cfg.rho_r, cfg.n_t, cfg.n_r)

    n_tx = spec.n_transmit_symbols
    k_bits = spec.k_bits
    out = []
    for kind in cfg.detectors:
        for sigma2_e in cfg.est_error_vars:
            for gamma_db in cfg.gamma_db:
                sigma2_n = snr_to_noise(gamma_db, es)
                detector = _SoftDetector(
                    kind, es, cfg.n_t, cfg.n_r, sigma2_n, const
                )
                counts = []
                iterations = []
                frame = 0
                while True:
                    rng = substream(cfg.master_seed, _FRAME, frame)
                    info = rng.integers(0, field.size, size=spec.k_symbols)
                    x = spec.encode(info)
                    mapped = map_codeword(spec.expand(x), const, field, cfg.n_t)
                    blocks = []
                    h = None
                    for s_vec in mapped.vectors:
                        if h is None or cfg.fading == "per-use":
                            h = sample_iid(cfg.n_t, cfg.n_r, rng)
                            if corr is not None:
                                h = apply_correlation(h, corr)
                            h_est = perturb_estimate(h, sigma2_e, rng)
                        y = transmit(h, s_vec, sigma2_n, rng)
                        blocks.append(detector(h_est, y))
                    rows = np.vstack(blocks)
                    priors = symbol_priors(rows, field)[:n_tx]
                    folded = spec.fold_priors(priors)
                    res = decode(
                        folded, spec.matrix, field, cfg.decoder_iterations
                    )
                    got = field.to_bits(res.hard[spec.info_cols])
                    want = field.to_bits(info)
                    counts.append(int(np.count_nonzero(got != want)))
                    iterations.append(res.iterations_used)
                    frame += 1
                    frame_errors = sum(1 for c in counts if c)
                    if frame_errors >= cfg.min_frame_errors:
                        stop = "frame_errors"
                        break
                    if frame >= cfg.max_frames:
                        stop = "max_frames"
                        break
                counts = np.array(counts)
                ber, ber_se, fe, fer, fer_se, per_fe = _stats_from_counts(
                    counts, k_bits
                )
                fl = _point_flops(kind, cfg.n_r, cfg.modulation)
                out.append(
                    SweepSummary(
                        kind, gamma_db, sigma2_e, cfg.rho_t, cfg.rho_r,
                        int(frame), int(counts.sum()), fe, ber, ber_se, fer,
                        fer_se, float(np.mean(iterations)), per_fe, fl[0],
                        fl[1], stop,
                    )
                )
                if progress:
                    progress(out[-1])
    return out


def run_uncoded(cfg: ExperimentConfig, progress=None) -> list[SweepSummary]:
    """Uncoded sweep: one frame is one channel use, hard-sliced per stream."""
    es = 1.0
    const = gray_constellation(cfg.modulation, symbol_energy=es / cfg.n_t)
    corr = None
    if cfg.rho_t > 0 or cfg.rho_r > 0:
        corr = CorrelationSpec(cfg.rho_t, cfg.rho_r, cfg.n_t, cfg.n_r)
    p = cfg.bits_per_point
    bits_per_frame = p * cfg.n_t
    out = []
    for kind in cfg.detectors:
        for sigma2_e in cfg.est_error_vars:
            for gamma_db in cfg.gamma_db:
                sigma2_n = snr_to_noise(gamma_db, es)
                detector = _SoftDetector(
                    kind, es, cfg.n_t, cfg.n_r, sigma2_n, const
                )
                counts = []
                frame = 0
                while True:
                    rng = substream(cfg.master_seed, _UNCODED, frame)
                    labels = rng.integers(0, cfg.modulation, size=cfg.n_t)
                    s = const.points[labels]
                    h = sample_iid(cfg.n_t, cfg.n_r, rng)
                    if corr is not None:
                        h = apply_correlation(h, corr)
                    h_est = perturb_estimate(h, sigma2_e, rng)
                    y = transmit(h, s, sigma2_n, rng)
                    hard = detector(h_est, y).argmax(axis=1)
                    diff = const.labels_to_bits(hard) ^ const.labels_to_bits(labels)
                    counts.append(int(diff.sum()))
                    frame += 1
                    frame_errors = sum(1 for c in counts if c)
                    if frame_errors >= cfg.min_frame_errors:
                        stop = "frame_errors"
                        break
                    if frame >= cfg.max_frames:
                        stop = "max_frames"
                        break
                counts = np.array(counts)
                ber, ber_se, fe, fer, fer_se, per_fe = _stats_from_counts(
                    counts, bits_per_frame
                )
                fl = _point_flops(kind, cfg.n_r, cfg.modulation)
                out.append(
                    SweepSummary(
                        kind, gamma_db, sigma2_e, cfg.rho_t, cfg.rho_r,
                        int(frame), int(counts.sum()), fe, ber, ber_se, fer,
                        fer_se, 0.0, per_fe, fl[0], fl[1], stop,
                    )
                )
                if progress:
                    progress(out[-1])
    return out


def run_capacity(cfg: ExperimentConfig) -> list[dict]:
    out = []
    for i, rho in enumerate(cfg.capacity_rho):
        corr = (
            CorrelationSpec(rho, rho, cfg.n_t, cfg.n_r) if rho > 0 else None
        )
        for j, gamma_db in enumerate(cfg.gamma_db):
            # Matched seeds across rho values at the same SNR make capacity
            # losses directly comparable.
            rng = substream(cfg.master_seed, _CAPACITY, j)
            cap, se = ergodic_capacity(
                cfg.n_t, cfg.n_r, gamma_db, cfg.capacity_trials, rng, corr=corr
            )
            out.append(
                {
                    "rho": rho,
                    "gamma_db": gamma_db,
                    "trials": cfg.capacity_trials,
                    "capacity_bps_hz": cap,
                    "std_error": se,
                }
            )
    return out


def run_threshold(cfg: ExperimentConfig) -> list[dict]:
    base_rate = Fraction(cfg.n_symbols - 2 * cfg.n_symbols // cfg.d_c, cfg.n_symbols)
    out = []
    for t, gamma0 in zip(cfg.de_repeat_factors, cfg.de_gamma0_db):
        de_cfg = DeConfig(
            n_t=cfg.n_t,
            n_r=cfg.n_r,
            modulation=cfg.modulation,
            detector=cfg.detectors[0],
            d_c=cfg.d_c,
            m=cfg.m,
            repeat_factor=t,
            ensemble_size=cfg.de_ensemble_size,
            max_iterations=cfg.de_max_iterations,
            gamma0_db=gamma0,
            step_db=cfg.de_step_db,
            h_stop=cfg.de_h_stop,
        )
        result = find_threshold(de_cfg, seed=cfg.master_seed + t)
        rate = base_rate / t
        se = float(cfg.bits_per_point * rate * cfg.n_t)
        for row in result.trajectory:
            out.append(
                {
                    "record": "trajectory",
                    "repeat_factor": t,
                    "rate": str(rate),
                    "spectral_efficiency": se,
                    "gamma_db": row["gamma_db"],
                    "iterations": row["iterations"],
                    "entropy": row["entropy"],
                    "decoded": int(row["decoded"]),
                    "threshold_db": "",
                }
            )
        out.append(
            {
                "record": "threshold",
                "repeat_factor": t,
                "rate": str(rate),
                "spectral_efficiency": se,
                "gamma_db": "",
                "iterations": "",
                "entropy": "",
                "decoded": "",
                "threshold_db": result.threshold_db,
            }
        )
    return out


def run_flops(cfg: ExperimentConfig) -> list[dict]:
    out = []
    m = cfg.flops_modulation
    for n_r in cfg.flops_n_r:
        pd, ps = flops_proposed(n_r, m)
        md, ms = flops_mmse(n_r, m)
        out.append(
            {
                "n_r": n_r,
                "modulation": m,
                "proposed_detect": pd,
                "proposed_soft": ps,
                "proposed_total": pd + ps,
                "mmse_detect": md,
                "mmse_soft": ms,
                "mmse_total": md + ms,
                "ratio": (pd + ps) / (md + ms),
            }
        )
    return out


@dataclass
class KsResult:
    statistic: float
    p_value: float
    passed: bool
    significance: float
    n_samples: int
    mean: float
    std: float


def ks_gaussian_test(samples, significance: float = 0.001) -> KsResult:
    """Two-sided KS test against a Gaussian with the sample's mean/variance."""
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < 1000:
        raise ValueError(f"need at least 10^3 samples, got {len(samples)}")
    mean = samples.mean()
    std = samples.std(ddof=1)
    if std == 0:
        raise ValueError("degenerate sample: zero variance")
    stat, p = stats.kstest(samples, "norm", args=(mean, std))
    return KsResult(
        float(stat), float(p), bool(p > significance), significance,
        len(samples), float(mean), float(std),
    )


def run_ksdelta(cfg: ExperimentConfig) -> list[dict]:
    rng = substream(cfg.master_seed, _KSDELTA)
    gamma_db = cfg.gamma_db[0]
    samples = delta_samples(
        cfg.n_t, cfg.n_r, gamma_db, cfg.ks_samples, rng, stream=cfg.ks_stream
    )
    res = ks_gaussian_test(samples, cfg.ks_significance)
    return [
        {
            "n_t": cfg.n_t,
            "n_r": cfg.n_r,
            "gamma_db": gamma_db,
            "samples": res.n_samples,
            "mean": res.mean,
            "std": res.std,
            "ks_statistic": res.statistic,
            "p_value": res.p_value,
            "significance": res.significance,
            "passed": int(res.passed),
        }
    ]


def write_csv(rows, metadata: dict, stream: io.TextIOBase) -> None:
    """RFC-4180 records preceded by '#'-prefixed provenance comments."""
    for key, value in metadata.items():
        stream.write(f"# {key} = {value}\r\n")
    if not rows:
        return
    first = rows[0]
    if isinstance(first, SweepSummary):
        names = [f.name for f in fields(SweepSummary)]
        dict_rows = [
            {name: getattr(r, name) for name in names} for r in rows
        ]
    else:
        names = list(first.keys())
        dict_rows = rows
    writer = csv.DictWriter(stream, fieldnames=names, lineterminator="\r\n")
    writer.writeheader()
    for row in dict_rows:
        writer.writerow(row)


def run_command(cfg: ExperimentConfig, progress=None) -> tuple[list, dict]:
    """Dispatch a validated config; returns (rows, metadata)."""
    meta = {"nbmimo": __version__}
    meta.update(cfg.metadata())
    if cfg.command == "ber":
        rows = run_ber(cfg, progress=progress)
    elif cfg.command == "uncoded":
        rows = run_uncoded(cfg, progress=progress)
    elif cfg.command == "capacity":
        rows = run_capacity(cfg)
    elif cfg.command == "threshold":
        rows = run_threshold(cfg)
    elif cfg.command == "flops":
        rows = run_flops(cfg)
    elif cfg.command == "ksdelta":
        rows = run_ksdelta(cfg)
    else:
        raise ValueError(f"unknown command {cfg.command!r}")
    return rows, meta
