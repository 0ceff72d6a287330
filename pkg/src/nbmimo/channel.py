"""Modulation, MIMO channel sampling, and capacity estimation.

Transmit vectors obey the component-wise power constraint
E[|s_i|^2] = E_s / N_t, and the SNR per receive antenna is
gamma = E_s / N_0 with N_0 = 2 sigma_n^2 (noise variance sigma_n^2 per real
component).  Doubly correlated channels follow the Kronecker model
H = R_r^{1/2} H_iid R_t^{1/2} with exponential correlation matrices
R(rho)[i, j] = rho^|i - j|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nbmimo.galois import FieldTable


@dataclass
class Constellation:
    """Gray-labelled complex constellation with per-point index = label."""

    points: np.ndarray
    bits_per_symbol: int

    @property
    def size(self) -> int:
        return len(self.points)

    def labels_to_bits(self, labels: np.ndarray) -> np.ndarray:
        shifts = np.arange(self.bits_per_symbol)
        return (np.asarray(labels)[..., None] >> shifts) & 1

    def bits_to_labels(self, bits: np.ndarray) -> np.ndarray:
        weights = 1 << np.arange(self.bits_per_symbol)
        return (np.asarray(bits) * weights).sum(axis=-1)


# Per-axis Gray maps: position index along the axis for each bit pattern.
_GRAY_AXIS_2 = np.array([0, 1])            # 1 bit:  0 -> -1, 1 -> +1
_GRAY_AXIS_4 = np.array([0, 1, 3, 2])      # 2 bits: 00,01,11,10 -> -3,-1,+1,+3


def gray_constellation(size: int, symbol_energy: float = 1.0) -> Constellation:
    """BPSK, QPSK, or 16-QAM scaled to mean energy `symbol_energy`.

    Labels are Gray: nearest neighbours differ in exactly one bit.  Bit 0
    of the label is the least significant, matching the bit order of the
    GF(2^m) symbol representation feeding the mapper.
    """
    if size == 2:
        amp = np.sqrt(symbol_energy)
        points = np.array([amp, -amp], dtype=np.complex128)
        return Constellation(points, 1)
    if size == 4:
        amp = np.sqrt(symbol_energy / 2)
        levels = np.array([1.0, -1.0])
        points = np.empty(4, dtype=np.complex128)
        for label in range(4):
            points[label] = amp * (levels[label & 1] + 1j * levels[label >> 1])
        return Constellation(points, 2)
    if size == 16:
        amp = np.sqrt(symbol_energy / 10)
        levels = np.array([-3.0, -1.0, 1.0, 3.0])
        points = np.empty(16, dtype=np.complex128)
        for label in range(16):
            i = levels[_GRAY_AXIS_4[label & 0b11]]
            q = levels[_GRAY_AXIS_4[label >> 2]]
            points[label] = amp * (i + 1j * q)
        return Constellation(points, 4)
    raise ValueError(f"unsupported constellation size {size}; use 2, 4, or 16")


@dataclass
class MappedFrame:
    """A symbol stream packed into transmit vectors.

    vectors has shape (n_uses, n_t); n_pad_symbols zero symbols were
    appended so the final vector is full.  symbols_per_use = n_t / q with
    q modulated symbols per coded symbol.
    """

    vectors: np.ndarray
    n_symbols: int
    n_pad_symbols: int
    symbols_per_use: int
    q: int


def map_codeword(
    symbols: np.ndarray, constellation: Constellation, field: FieldTable, n_t: int
) -> MappedFrame:
    """Demultiplex GF(2^m) symbols into q = m/p modulated symbols each.

    The m bits of each coded symbol fill q consecutive modulated symbols in
    order.  The stream is zero-padded (known zero symbols) up to a whole
    number of transmit vectors.
    """
    p = constellation.bits_per_symbol
    m = field.m
    if m % p != 0:
        raise ValueError(f"bits per modulated symbol {p} must divide m = {m}")
    q = m // p
    if n_t % q != 0:
        raise ValueError(f"n_t = {n_t} must be divisible by q = {q}")
    per_use = n_t // q

    symbols = np.asarray(symbols)
    n_sym = len(symbols)
    n_pad = (-n_sym) % per_use
    padded = np.concatenate([symbols, np.zeros(n_pad, dtype=symbols.dtype)])
    # Label of sub-symbol i is bit slice [i*p, (i+1)*p) of the coded symbol.
    shifts = np.arange(q) * p
    labels = (padded[:, None] >> shifts) & ((1 << p) - 1)
    vectors = constellation.points[labels.reshape(-1, n_t)]
    return MappedFrame(vectors, n_sym, n_pad, per_use, q)


def sample_iid(n_t: int, n_r: int, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh-fading matrix with i.i.d. CN(0, 1) entries."""
    re = rng.standard_normal((n_r, n_t))
    im = rng.standard_normal((n_r, n_t))
    return (re + 1j * im) / np.sqrt(2)


class CorrelationSpec:
    """Exponential transmit/receive correlation with cached matrix roots."""

    def __init__(self, rho_t: float, rho_r: float, n_t: int, n_r: int):
        if not (0 <= rho_t < 1 and 0 <= rho_r < 1):
            raise ValueError("correlation parameters must lie in [0, 1)")
        self.rho_t = rho_t
        self.rho_r = rho_r
        self.r_t = self._exponential(rho_t, n_t)
        self.r_r = self._exponential(rho_r, n_r)
        self.sqrt_t = self._psd_sqrt(self.r_t)
        self.sqrt_r = self._psd_sqrt(self.r_r)

    @staticmethod
    def _exponential(rho: float, n: int) -> np.ndarray:
        idx = np.arange(n)
        return rho ** np.abs(idx[:, None] - idx[None, :])

    @staticmethod
    def _psd_sqrt(r: np.ndarray) -> np.ndarray:
        # Eigendecomposition instead of Cholesky so rho -> 1 degrades
        # gracefully (eigenvalues clipped at zero).
        w, v = np.linalg.eigh(r)
        w = np.clip(w, 0.0, None)
        return (v * np.sqrt(w)) @ v.conj().T

    @property
    def is_identity(self) -> bool:
        return self.rho_t == 0 and self.rho_r == 0


def apply_correlation(h_iid: np.ndarray, corr: CorrelationSpec) -> np.ndarray:
    if corr.is_identity:
        return h_iid
    return corr.sqrt_r @ h_iid @ corr.sqrt_t


def perturb_estimate(
    h: np.ndarray, sigma2_e: float, rng: np.random.Generator
) -> np.ndarray:
    """Receiver-side channel estimate: the true H plus CN(0, sigma2_e) errors."""
    if sigma2_e < 0:
        raise ValueError("estimation error variance must be nonnegative")
    if sigma2_e == 0:
        return h
    scale = np.sqrt(sigma2_e / 2)
    err = scale * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))
    return h + err


def transmit(
    h: np.ndarray, s: np.ndarray, sigma2_n: float, rng: np.random.Generator
) -> np.ndarray:
    """y = H s + n, noise variance sigma2_n per real component."""
    y = h @ s
    if sigma2_n > 0:
        n = np.sqrt(sigma2_n) * (
            rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        )
        y = y + n
    return y


def snr_to_noise(gamma_db: float, es: float = 1.0) -> float:
    """Per-real-component noise variance for an SNR per receive antenna."""
    if es <= 0:
        raise ValueError("signal energy must be positive")
    return es / (2.0 * 10.0 ** (gamma_db / 10.0))


def ergodic_capacity(
    n_t: int,
    n_r: int,
    gamma_db: float,
    trials: int,
    rng: np.random.Generator,
    corr: CorrelationSpec | None = None,
    h_fixed: np.ndarray | None = None,
) -> tuple[float, float]:
    """Monte Carlo mean of log2 det(I + (gamma/N_t) H H^H), with std error.

    `h_fixed` evaluates the closed form on a deterministic matrix (test
    hook); `corr` draws doubly correlated realizations.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    gamma = 10.0 ** (gamma_db / 10.0)
    if h_fixed is not None:
        gram = np.eye(n_r) + (gamma / n_t) * (h_fixed @ h_fixed.conj().T)
        _, logdet = np.linalg.slogdet(gram)
        return logdet / np.log(2.0), 0.0

    vals = np.empty(trials)
    eye = np.eye(n_r)
    for t in range(trials):
        h = sample_iid(n_t, n_r, rng)
        if corr is not None:
            h = apply_correlation(h, corr)
        _, logdet = np.linalg.slogdet(eye + (gamma / n_t) * (h @ h.conj().T))
        vals[t] = logdet / np.log(2.0)
    se = vals.std(ddof=1) / np.sqrt(trials) if trials > 1 else 0.0
    return float(vals.mean()), float(se)


def spectral_efficiency(bits_per_symbol: int, rate, n_t: int) -> float:
    """Transmitted information rate p R N_t in bps/Hz."""
    return float(bits_per_symbol * rate * n_t)
