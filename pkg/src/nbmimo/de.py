"""Monte Carlo density evolution for the (2, d_c) ensemble on large MIMO.

The decoding threshold of the infinite-length ensemble is located by
simulating belief propagation on a cycle-free graph: an ensemble of L
variable-node probability vectors is initialized from the equivalent
channel (zero codeword through fading, detection, and prior aggregation)
and repeatedly renewed, each new sample combining one check-node output
(a convolution of d_c - 1 uniformly drawn ensemble members under random
nonzero edge coefficients) with a fresh channel sample.  The ensemble's
average Shannon entropy, in base 2^m, tracks the remaining ambiguity; an
SNR decodes once the entropy falls below the stopping level.  Descending
in fixed dB steps, the threshold is the last SNR that decoded.

Only BPSK supports the zero-codeword trick: rotational symmetry fails for
larger QAM alphabets, so those configurations are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from nbmimo.channel import gray_constellation, sample_iid, snr_to_noise, transmit
from nbmimo.decoder import MSG_FLOOR, fwht
from nbmimo.detect import mf_detect, mf_sinr, mf_soft, mmse_soft, symbol_priors
from nbmimo.galois import FieldTable, build_field


class UnsupportedConfiguration(ValueError):
    pass


class ThresholdSearchError(RuntimeError):
    pass


@dataclass
class DeConfig:
    """Ensemble, iteration, and SNR-descent parameters plus the system."""

    n_t: int = 200
    n_r: int = 200
    modulation: int = 2
    detector: str = "mf-simplified"
    d_c: int = 3
    m: int = 8
    repeat_factor: int = 1
    ensemble_size: int = 100_000
    max_iterations: int = 2000
    gamma0_db: float = -3.0
    step_db: float = 0.05
    h_stop: float = 1e-6
    es: float = 1.0
    max_points: int = 500
    chunk: int = 8192
    field: FieldTable = dc_field(default=None, repr=False)

    def __post_init__(self):
        if self.modulation != 2:
            raise UnsupportedConfiguration(
                "density evolution relies on the zero codeword, which only "
                "binary modulation's rotational symmetry permits"
            )
        if self.step_db <= 0:
            raise ValueError("step_db must be positive")
        if not 0 < self.h_stop < 1:
            raise ValueError("h_stop must lie in (0, 1)")
        if self.detector not in ("mmse", "mf-exact", "mf-simplified"):
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.field is None:
            self.field = build_field(self.m)
        if self.n_t % self.m != 0:
            raise ValueError("n_t must be divisible by q = m for BPSK")


@dataclass
class DeResult:
    threshold_db: float
    trajectory: list
    converged_points: list


def ensemble_entropy(ensemble: np.ndarray, field: FieldTable) -> float:
    """Average Shannon entropy in base 2^m; 0 log 0 reads as 0."""
    p = np.asarray(ensemble, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.maximum(p, 1e-300)), 0.0)
    return float(-terms.sum(axis=1).mean() / field.m)


def _channel_prior_samples(cfg: DeConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent raw symbol priors from the equivalent channel.

    Transmits the zero codeword: every antenna carries the label-0 point.
    Each channel use yields n_t/q coded-symbol priors.  Matched-filter
    detection is batched over channel uses, which keeps the per-iteration
    cost of large ensembles dominated by Gaussian sampling.
    """
    field = cfg.field
    q = field.m  # BPSK: one bit per modulated symbol
    per_use = cfg.n_t // q
    const = gray_constellation(2, symbol_energy=cfg.es / cfg.n_t)
    sigma2_n = snr_to_noise(cfg.gamma0_db, cfg.es)
    point0 = const.points[0]
    out = np.empty((n, field.size))
    done = 0

    if cfg.detector == "mmse":
        s = np.full(cfg.n_t, point0)
        while done < n:
            h = sample_iid(cfg.n_t, cfg.n_r, rng)
            y = transmit(h, s, sigma2_n, rng)
            _, block = mmse_soft(h, y, cfg.es, cfg.n_t, 2 * sigma2_n, const)
            priors = symbol_priors(block, field)
            take = min(per_use, n - done)
            out[done : done + take] = priors[:take]
            done += take
        return out

    # Matched-filter fast path.  Fading and noise are drawn in single
    # precision: the detector statistics are far above float32 resolution
    # and sampling dominates the iteration cost at production ensembles.
    mode = "exact" if cfg.detector == "mf-exact" else "simplified"
    uses_left = -(-n // per_use)
    max_batch = max(1, (1 << 24) // (cfg.n_t * cfg.n_r))
    noise_scale = np.float32(np.sqrt(sigma2_n))
    half = np.float32(np.sqrt(2) / 2)
    sigma2_simplified = sigma2_n / cfg.n_r
    while done < n:
        b = min(max_batch, uses_left)
        uses_left -= b
        shape = (b, cfg.n_r, cfg.n_t)
        h = np.empty(shape, dtype=np.complex64)
        h.real = rng.standard_normal(shape, dtype=np.float32) * half
        h.imag = rng.standard_normal(shape, dtype=np.float32) * half
        # All antennas send the identical zero-symbol point.
        y = np.complex64(point0) * h.sum(axis=2)
        if sigma2_n > 0:
            y.real += noise_scale * rng.standard_normal((b, cfg.n_r), dtype=np.float32)
            y.imag += noise_scale * rng.standard_normal((b, cfg.n_r), dtype=np.float32)
        proj = np.einsum("bij,bi->bj", h.conj(), y).astype(np.complex128)
        if mode == "exact":
            norms = np.real(np.einsum("bij,bij->bj", h.conj(), h)).astype(np.float64)
            s_hat = proj / norms
            sigma2_k = np.empty((b, cfg.n_t))
            for i in range(b):
                _, delta, _ = mf_sinr(
                    h[i].astype(np.complex128), None, cfg.es, cfg.n_t,
                    sigma2_n, mode="exact",
                )
                sigma2_k[i] = delta / 2.0
            block = mf_soft(s_hat.reshape(-1), sigma2_k.reshape(-1), const)
        else:
            s_hat = proj / cfg.n_r
            block = mf_soft(s_hat.reshape(-1), sigma2_simplified, const)
        priors = symbol_priors(block, field)
        take = min(b * per_use, n - done)
        out[done : done + take] = priors[:take]
        done += take
    return out


def _fresh_samples(cfg: DeConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """n folded variable-node channel samples (repetition copies combined)."""
    t = cfg.repeat_factor
    raw = _channel_prior_samples(cfg, n * t, rng)
    if t == 1:
        return raw
    field = cfg.field
    raw = raw.reshape(n, t, field.size)
    coefs = np.ones((n, t), dtype=np.int64)
    coefs[:, 1:] = rng.integers(1, field.size, size=(n, t - 1))
    folded = np.take_along_axis(raw, field.mul_table[coefs], axis=2).prod(axis=1)
    folded = np.maximum(folded, MSG_FLOOR)
    return folded / folded.sum(axis=1, keepdims=True)


def de_initial_ensemble(cfg: DeConfig, rng: np.random.Generator) -> np.ndarray:
    """L variable-node priors from the equivalent channel."""
    return _fresh_samples(cfg, cfg.ensemble_size, rng)


def de_iterate(
    ensemble: np.ndarray, cfg: DeConfig, rng: np.random.Generator
) -> np.ndarray:
    """One renewal of the ensemble: check-node combine plus fresh channel.

    Inputs to each check are drawn uniformly with replacement.  Variable
    nodes have degree 2, so a new sample multiplies exactly one check
    output with a fresh channel prior.
    """
    L = len(ensemble)
    field = cfg.field
    qsize = field.size
    d_in = cfg.d_c - 1
    fresh = _fresh_samples(cfg, L, rng)

    out = np.empty_like(ensemble)
    mt = field.mul_table
    inv = field.inv_table
    for lo in range(0, L, cfg.chunk):
        hi = min(lo + cfg.chunk, L)
        b = hi - lo
        idx = rng.integers(0, L, size=(b, d_in))
        coefs_in = rng.integers(1, qsize, size=(b, d_in))
        coef_out = rng.integers(1, qsize, size=b)
        msgs = ensemble[idx]
        rotated = np.take_along_axis(msgs, mt[inv[coefs_in]], axis=2)
        spectra = fwht(rotated).prod(axis=1)
        conv = fwht(spectra) / qsize
        c2v = np.take_along_axis(conv, mt[coef_out], axis=1)
        c2v = np.maximum(c2v, MSG_FLOOR)
        combined = np.maximum(fresh[lo:hi] * c2v, MSG_FLOOR)
        out[lo:hi] = combined / combined.sum(axis=1, keepdims=True)
    return out


def run_point(cfg: DeConfig, rng: np.random.Generator):
    """(decoded, iterations_used, final_entropy) at cfg.gamma0_db."""
    ensemble = de_initial_ensemble(cfg, rng)
    entropy = ensemble_entropy(ensemble, cfg.field)
    if entropy <= cfg.h_stop:
        return True, 0, entropy
    for it in range(1, cfg.max_iterations + 1):
        ensemble = de_iterate(ensemble, cfg, rng)
        entropy = ensemble_entropy(ensemble, cfg.field)
        if entropy <= cfg.h_stop:
            return True, it, entropy
    return False, cfg.max_iterations, entropy


def find_threshold(cfg: DeConfig, seed: int = 0) -> DeResult:
    """Descend from gamma0 in step_db decrements until decoding fails.

    The declared threshold is the last SNR whose ensemble entropy fell
    below h_stop within the iteration budget.  Fails loudly if the very
    first point does not decode.
    """
    trajectory = []
    converged = []
    previous = None
    for point in range(cfg.max_points):
        gamma = cfg.gamma0_db - point * cfg.step_db
        point_cfg = replace(cfg, gamma0_db=gamma)
        point_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(point,))
        )
        ok, iters, entropy = run_point(point_cfg, point_rng)
        trajectory.append(
            {"gamma_db": gamma, "iterations": iters, "entropy": entropy, "decoded": ok}
        )
        if ok:
            converged.append(gamma)
            previous = gamma
            continue
        if previous is None:
            raise ThresholdSearchError(
                f"starting SNR {cfg.gamma0_db} dB does not decode "
                f"(entropy {entropy:.3g} after {iters} iterations); start higher"
            )
        return DeResult(previous, trajectory, converged)
    raise ThresholdSearchError(
        f"no failure within {cfg.max_points} descent steps; lower gamma0_db "
        "or raise max_points"
    )
