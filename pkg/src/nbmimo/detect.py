"""Soft-output linear detection for spatial-multiplexing MIMO.

Two detector families are provided:

* MMSE: per-stream estimates s_hat_k = W_k^H y with
  W = (N_0 / (E_s/N_t) I + H H^H)^{-1} H, modelled at the output as an
  equivalent AWGN channel s_hat_k = mu_k s_k + z_k with
  mu_k = W_k^H H_k and var(z_k) = (E_s/N_t)(mu_k - mu_k^2).

* Matched filter: W_k = H_k^H / (H_k^H H_k), or the large-array
  simplification W_k = H_k^H / N_r.  The post-detection interference plus
  noise power Delta_k feeds a Gaussian likelihood with variance
  sigma_k^2 = Delta_k / 2; in simplified mode Delta_k reduces to the
  stream-independent constant 2 sigma_n^2 / N_r.

Per-stream likelihood tables are aggregated into GF(2^m) symbol priors by
multiplying the q per-stream likelihoods selected by each symbol's bit
representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from nbmimo.galois import FieldTable

VAR_FLOOR = 1e-15


@dataclass
class StreamEstimates:
    """Per-stream detection output: estimates plus equivalent-noise model."""

    s_hat: np.ndarray
    mu: np.ndarray
    var: np.ndarray
    var_clamped: bool = False


def mmse_weights(h: np.ndarray, es: float, n_t: int, n0: float) -> np.ndarray:
    """Weight matrix W with columns W_k, one positive-definite solve for all k."""
    n_r = h.shape[0]
    gram = h @ h.conj().T
    gram[np.diag_indices(n_r)] += n0 / (es / n_t)
    try:
        factor = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "regularized Gram matrix is not positive definite"
        ) from exc
    return cho_solve(factor, h)


def mmse_soft(
    h: np.ndarray,
    y: np.ndarray,
    es: float,
    n_t: int,
    n0: float,
    constellation,
    weights: np.ndarray | None = None,
) -> tuple[StreamEstimates, np.ndarray]:
    """MMSE estimates and the per-stream likelihood table Pr(s_hat_k | s).

    The likelihood is exp(-|s_hat_k - mu_k s|^2 / eps_k^2) normalized over
    the constellation; it is computed in the log domain with max
    subtraction so the normalization is exact.
    """
    w = mmse_weights(h, es, n_t, n0) if weights is None else weights
    s_hat = w.conj().T @ y
    mu = np.real(np.sum(w.conj() * h, axis=0))
    var = (es / n_t) * (mu - mu**2)
    clamped = bool(np.any(var <= VAR_FLOOR))
    var = np.maximum(var, VAR_FLOOR)
    diff = s_hat[:, None] - mu[:, None] * constellation.points[None, :]
    log_lik = -(np.abs(diff) ** 2) / var[:, None]
    block = _normalize_rows(log_lik)
    return StreamEstimates(s_hat, mu, var, clamped), block


def _normalize_rows(log_lik: np.ndarray) -> np.ndarray:
    log_lik = log_lik - log_lik.max(axis=1, keepdims=True)
    lik = np.exp(log_lik)
    return lik / lik.sum(axis=1, keepdims=True)


def mf_detect(h: np.ndarray, y: np.ndarray, mode: str = "simplified") -> np.ndarray:
    """Matched-filter estimates; `mode` picks the exact or 1/N_r weights."""
    n_r = h.shape[0]
    proj = h.conj().T @ y
    if mode == "exact":
        norms = np.real(np.sum(h.conj() * h, axis=0))
        if np.any(norms == 0):
            raise ValueError("channel has a zero column")
        return proj / norms
    if mode == "simplified":
        return proj / n_r
    raise ValueError(f"unknown matched-filter mode {mode!r}")


def mf_sinr(
    h: np.ndarray,
    k: int | None,
    es: float,
    n_t: int,
    sigma2_n: float,
    mode: str = "simplified",
):
    """(delta_k, Delta_k, sigma2_k) for stream k, or arrays for all streams.

    Exact mode evaluates
    Delta_k = (E_s/N_t) sum_{i != k} |W_k H_i|^2 + 2 sigma_n^2 |W_k|^2
    with W_k = H_k^H / (H_k^H H_k).  Simplified mode returns the
    precomputed constant Delta = 2 sigma_n^2 / N_r for every stream.
    """
    n_r = h.shape[0]
    if mode == "simplified":
        big_delta = 2.0 * sigma2_n / n_r
        delta = (es / n_t) / big_delta
        sigma2_k = big_delta / 2.0
        if k is None:
            ones = np.ones(h.shape[1])
            return delta * ones, big_delta * ones, sigma2_k * ones
        return delta, big_delta, sigma2_k
    if mode != "exact":
        raise ValueError(f"unknown matched-filter mode {mode!r}")

    if k is None:
        g = h.conj().T @ h
        gk = np.real(np.diag(g))
        interference = (np.abs(g) ** 2).sum(axis=1) - gk**2
        big_delta = (es / n_t) * interference / gk**2 + 2.0 * sigma2_n / gk
    else:
        col = h[:, k]
        gk = float(np.real(col.conj() @ col))
        if gk == 0:
            raise ValueError("channel has a zero column")
        cross = col.conj() @ h
        interference = float((np.abs(cross) ** 2).sum() - gk**2)
        big_delta = (es / n_t) * interference / gk**2 + 2.0 * sigma2_n / gk
    delta = (es / n_t) / big_delta
    return delta, big_delta, big_delta / 2.0


def mf_soft(s_hat: np.ndarray, sigma2_k, constellation) -> np.ndarray:
    """Gaussian likelihood rows exp(-|s_hat - s|^2 / (2 sigma_k^2)), normalized."""
    sigma2_k = np.maximum(np.broadcast_to(sigma2_k, s_hat.shape).astype(float), VAR_FLOOR)
    diff = s_hat[:, None] - constellation.points[None, :]
    log_lik = -(np.abs(diff) ** 2) / (2.0 * sigma2_k[:, None])
    return _normalize_rows(log_lik)


class MultiplyCounter:
    """Counts the real multiplications spent aggregating symbol priors."""

    def __init__(self):
        self.real_multiplications = 0


def symbol_priors(
    likelihoods: np.ndarray,
    field: FieldTable,
    counter: MultiplyCounter | None = None,
) -> np.ndarray:
    """Fold q consecutive per-stream likelihood rows into 2^m symbol priors.

    Streams k .. k+q-1 carry one coded symbol; the prior of symbol value x
    is the product of the q likelihoods of the modulated symbols whose
    concatenated labels equal the bit representation of x.  Aggregation
    costs 2^m (q - 1) real multiplications per coded symbol.
    """
    n_streams, m_points = likelihoods.shape
    p = int(np.log2(m_points))
    if 2**p != m_points:
        raise ValueError("likelihood table width must be a power of two")
    if field.m % p != 0:
        raise ValueError(f"{p} bits per stream do not divide m = {field.m}")
    q = field.m // p
    if n_streams % q != 0:
        raise ValueError(
            f"{n_streams} stream rows do not form whole groups of q = {q}"
        )
    n_symbols = n_streams // q

    x = np.arange(field.size)
    shifts = np.arange(q) * p
    label_map = (x[None, :] >> shifts[:, None]) & (m_points - 1)  # (q, 2^m)

    grouped = likelihoods.reshape(n_symbols, q, m_points)
    factors = grouped[:, np.arange(q)[:, None], label_map]  # (n_symbols, q, 2^m)
    priors = np.multiply.reduce(factors, axis=1)
    if counter is not None:
        counter.real_multiplications += n_symbols * (q - 1) * field.size
    return priors / priors.sum(axis=1, keepdims=True)


def delta_samples(
    n_t: int,
    n_r: int,
    gamma_db: float,
    n_samples: int,
    rng: np.random.Generator,
    es: float = 1.0,
    stream: int = 0,
    batch: int = 64,
) -> np.ndarray:
    """Draws of the exact-mode Delta statistic over channel realizations."""
    from nbmimo.channel import sample_iid, snr_to_noise

    sigma2_n = snr_to_noise(gamma_db, es)
    out = np.empty(n_samples)
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        h = np.stack([sample_iid(n_t, n_r, rng) for _ in range(b)])
        col = h[:, :, stream]
        gk = np.real(np.einsum("bi,bi->b", col.conj(), col))
        cross = np.einsum("bi,bij->bj", col.conj(), h)
        interference = (np.abs(cross) ** 2).sum(axis=1) - gk**2
        out[done : done + b] = (es / n_t) * interference / gk**2 + 2 * sigma2_n / gk
        done += b
    return out
