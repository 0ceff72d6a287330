import itertools

import numpy as np
import pytest

from nbmimo.channel import gray_constellation, sample_iid, snr_to_noise, transmit
from nbmimo.detect import (
    MultiplyCounter,
    delta_samples,
    mf_detect,
    mf_sinr,
    mf_soft,
    mmse_soft,
    mmse_weights,
    symbol_priors,
)
from nbmimo.galois import build_field


class TestMmseWeights:
    def test_scalar_low_noise_limit(self):
        h = np.array([[1.0 + 0j]])
        w = mmse_weights(h, es=1.0, n_t=1, n0=1e-12)
        assert abs(w[0, 0] - 1.0) < 1e-9

    def test_orthogonal_columns_give_scaled_columns(self):
        # Diagonal Gram: W_k = H_k / (reg + |H_k|^2) with reg = N_0/(E_s/N_t).
        h = np.array([[2.0, 0.0], [0.0, 2.0]], dtype=np.complex128)
        w = mmse_weights(h, es=1.0, n_t=2, n0=0.5)
        assert np.allclose(w, (2.0 / 5.0) * np.eye(2), atol=1e-12)

    def test_matches_explicit_inverse(self):
        rng = np.random.default_rng(0)
        h = sample_iid(4, 4, rng)
        es, n_t, n0 = 1.0, 4, 0.4
        w = mmse_weights(h, es, n_t, n0)
        direct = np.linalg.inv((n0 / (es / n_t)) * np.eye(4) + h @ h.conj().T) @ h
        assert np.max(np.abs(w - direct)) < 1e-10


class TestMmseSoft:
    def test_noiseless_scalar_gives_delta(self):
        c = gray_constellation(2)
        h = np.array([[1.0 + 0j]])
        s = c.points[1]
        y = h @ np.array([s])
        _, block = mmse_soft(h, y, es=1.0, n_t=1, n0=1e-9, constellation=c)
        assert block[0, 1] > 1 - 1e-6

    def test_mu_between_zero_and_one(self):
        rng = np.random.default_rng(1)
        n = 200
        h = sample_iid(n, n, rng)
        n0 = 2 * snr_to_noise(-2.0)
        est, _ = mmse_soft(
            h,
            np.zeros(n, dtype=np.complex128),
            es=1.0,
            n_t=n,
            n0=n0,
            constellation=gray_constellation(2, 1 / n),
        )
        assert np.all(est.mu > 0)
        assert np.all(est.mu < 1)

    def test_rows_normalized(self):
        rng = np.random.default_rng(2)
        n = 8
        c = gray_constellation(4, 1 / n)
        h = sample_iid(n, n, rng)
        s = c.points[rng.integers(0, 4, n)]
        sigma2 = snr_to_noise(0.0)
        y = transmit(h, s, sigma2, rng)
        _, block = mmse_soft(h, y, 1.0, n, 2 * sigma2, c)
        assert np.allclose(block.sum(axis=1), 1.0, atol=1e-9)

    def test_likelihoods_close_to_true_mixture_posterior(self):
        # Oracle: the exact conditional density of s_hat_k given s_k,
        # marginalizing the other stream over its discrete prior.  The
        # equivalent-AWGN model should be KL-close to it.
        rng = np.random.default_rng(3)
        n = 2
        c = gray_constellation(2, symbol_energy=1 / n)
        h = sample_iid(n, n, rng)
        es, gamma_db = 1.0, 5.0
        sigma2 = snr_to_noise(gamma_db, es)
        n0 = 2 * sigma2
        w = mmse_weights(h, es, n, n0)
        truth = rng.integers(0, 2, n)
        s = c.points[truth]
        y = transmit(h, s, sigma2, rng)
        est, block = mmse_soft(h, y, es, n, n0, c, weights=w)

        k = 0
        # s_hat_k = w_k^H(H s + n): complex Gaussian with variance
        # 2 sigma^2 ||w_k||^2 around w_k^H H s for each s combination.
        wk = w[:, k]
        noise_var = 2 * sigma2 * np.real(wk.conj() @ wk)
        dens = np.zeros(2)
        for sk in range(2):
            for other in range(2):
                full = np.array(
                    [c.points[sk if j == k else other] for j in range(n)]
                )
                mean = wk.conj() @ (h @ full)
                dens[sk] += 0.5 * np.exp(
                    -np.abs(est.s_hat[k] - mean) ** 2 / noise_var
                ) / (np.pi * noise_var)
        oracle = dens / dens.sum()
        approx = block[k]
        kl = np.sum(oracle * np.log(oracle / approx))
        assert kl < 0.05


class TestMfDetect:
    def test_orthogonal_noiseless_exact_recovery(self):
        c = gray_constellation(4, symbol_energy=0.5)
        h = np.array([[3.0, 0.0], [0.0, 2.0]], dtype=np.complex128)
        s = c.points[[1, 2]]
        y = h @ s
        got = mf_detect(h, y, mode="exact")
        assert np.allclose(got, s, atol=1e-12)

    def test_simplified_is_exact_times_positive_scale(self):
        rng = np.random.default_rng(4)
        h = sample_iid(16, 16, rng)
        y = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        exact = mf_detect(h, y, mode="exact")
        simple = mf_detect(h, y, mode="simplified")
        norms = np.real(np.sum(h.conj() * h, axis=0))
        assert np.allclose(simple * 16 / norms, exact, atol=1e-12)

    def test_single_stream_matches_mmse_direction(self):
        rng = np.random.default_rng(5)
        h = sample_iid(1, 8, rng)
        y = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        mf = mf_detect(h, y, mode="exact")
        w = mmse_weights(h, es=1.0, n_t=1, n0=0.1)
        mmse = w.conj().T @ y
        ratio = mf[0] / mmse[0]
        assert abs(ratio.imag) < 1e-10
        assert ratio.real > 0

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            mf_detect(np.eye(2, dtype=np.complex128), np.zeros(2), mode="zf")


class TestMfSinr:
    def test_orthogonal_equal_norm_columns_force_simplification(self):
        # |H_i|^2 = N_r for all i and zero cross terms: the exact Delta
        # equals the simplified constant.
        n = 4
        h = np.sqrt(n / 2) * (np.eye(n) + 1j * np.eye(n))
        sigma2 = 0.3
        _, exact, _ = mf_sinr(h, 0, es=1.0, n_t=n, sigma2_n=sigma2, mode="exact")
        _, simple, _ = mf_sinr(h, 0, es=1.0, n_t=n, sigma2_n=sigma2, mode="simplified")
        assert exact == pytest.approx(simple, abs=1e-12)
        assert simple == pytest.approx(2 * sigma2 / n)

    def test_exact_matches_bruteforce_sum(self):
        rng = np.random.default_rng(6)
        n = 8
        h = sample_iid(n, n, rng)
        es, sigma2 = 1.0, 0.2
        for k in [0, 3, 7]:
            _, got, sk = mf_sinr(h, k, es, n, sigma2, mode="exact")
            wk = h[:, k].conj() / np.real(h[:, k].conj() @ h[:, k])
            inter = sum(
                np.abs(wk @ h[:, i]) ** 2 for i in range(n) if i != k
            )
            want = (es / n) * inter + 2 * sigma2 * np.real(wk @ wk.conj())
            assert abs(got - want) < 1e-12
            assert sk == pytest.approx(got / 2)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(7)
        h = sample_iid(6, 6, rng)
        _, all_delta, _ = mf_sinr(h, None, 1.0, 6, 0.1, mode="exact")
        for k in range(6):
            _, dk, _ = mf_sinr(h, k, 1.0, 6, 0.1, mode="exact")
            assert all_delta[k] == pytest.approx(dk, rel=1e-12)

    def test_delta_sampler_matches_direct(self):
        rng1 = np.random.default_rng(8)
        rng2 = np.random.default_rng(8)
        got = delta_samples(4, 4, 0.0, 10, rng1, batch=3)
        want = np.empty(10)
        sigma2 = snr_to_noise(0.0)
        for i in range(10):
            h = sample_iid(4, 4, rng2)
            _, want[i], _ = mf_sinr(h, 0, 1.0, 4, sigma2, mode="exact")
        assert np.allclose(got, want, atol=1e-12)


class TestMfSoft:
    def test_tiny_variance_gives_delta_row(self):
        c = gray_constellation(2)
        block = mf_soft(np.array([c.points[1]]), 1e-18, c)
        assert block[0, 1] > 1 - 1e-9

    def test_bpsk_midpoint_is_uniform(self):
        c = gray_constellation(2)
        block = mf_soft(np.array([0.0 + 0j]), 0.25, c)
        assert np.allclose(block[0], [0.5, 0.5], atol=1e-12)

    def test_hand_computed_ratio(self):
        # BPSK +-1, s_hat = 0.3, sigma_k^2 = 0.25:
        # ratio = exp((1.69 - 0.49) / 0.5) = exp(2.4) favoring +1.
        c = gray_constellation(2)
        block = mf_soft(np.array([0.3 + 0j]), 0.25, c)
        assert block[0, 0] / block[0, 1] == pytest.approx(np.exp(2.4), rel=1e-9)


class TestSymbolPriors:
    def test_qpsk_worked_example(self):
        # L(x) = [00 01 11 10] with QPSK: the prior of that symbol is the
        # product of the four per-stream likelihoods at labels (0, 2, 3, 1).
        f = build_field(8)
        rng = np.random.default_rng(9)
        rows = rng.dirichlet(np.ones(4), size=4)
        priors = symbol_priors(rows, f)
        x = f.from_bits([0, 0, 0, 1, 1, 1, 1, 0])
        want = rows[0, 0] * rows[1, 2] * rows[2, 3] * rows[3, 1]
        norm = priors[0, x] / want
        # Same normalization for every entry of the row.
        x2 = f.from_bits([1, 0, 1, 1, 0, 0, 0, 1])
        want2 = rows[0, 1] * rows[1, 3] * rows[2, 0] * rows[3, 2]
        assert priors[0, x2] / want2 == pytest.approx(norm, rel=1e-12)

    def test_exhaustive_enumeration_gf4_bpsk(self):
        f = build_field(2)
        rng = np.random.default_rng(10)
        rows = rng.dirichlet(np.ones(2), size=2)
        priors = symbol_priors(rows, f)
        want = np.zeros(4)
        for bits in itertools.product([0, 1], repeat=2):
            x = f.from_bits(list(bits))
            want[x] = rows[0, bits[0]] * rows[1, bits[1]]
        want /= want.sum()
        assert np.allclose(priors[0], want, atol=1e-14)

    def test_q_equal_one_reindexes_by_labels(self):
        f = build_field(4)
        rng = np.random.default_rng(11)
        rows = rng.dirichlet(np.ones(16), size=3)
        priors = symbol_priors(rows, f)
        assert np.allclose(priors, rows, atol=1e-14)

    def test_rows_normalized(self):
        f = build_field(8)
        rng = np.random.default_rng(12)
        rows = rng.dirichlet(np.ones(2), size=64)
        priors = symbol_priors(rows, f)
        assert priors.shape == (8, 256)
        assert np.allclose(priors.sum(axis=1), 1.0, atol=1e-9)

    def test_scale_invariance(self):
        f = build_field(4)
        rng = np.random.default_rng(13)
        rows = rng.dirichlet(np.ones(4), size=4)
        base = symbol_priors(rows, f)
        scaled = rows.copy()
        scaled[1] *= 37.5
        again = symbol_priors(scaled, f)
        assert np.allclose(base, again, atol=1e-12)
        assert np.array_equal(base.argmax(axis=1), again.argmax(axis=1))

    def test_multiplication_count(self):
        f = build_field(8)
        rng = np.random.default_rng(14)
        rows = rng.dirichlet(np.ones(2), size=8 * 5)
        counter = MultiplyCounter()
        symbol_priors(rows, f, counter=counter)
        assert counter.real_multiplications == 5 * 256 * 7

    def test_group_mismatch_rejected(self):
        f = build_field(8)
        with pytest.raises(ValueError):
            symbol_priors(np.ones((7, 2)) / 2, f)


class TestLowSnrAgreement:
    def test_mmse_and_mf_error_rates_agree_at_low_snr(self):
        # Individual hard decisions may differ on near-zero estimates, but
        # the two detectors deliver the same error rate well below 0 dB.
        rng = np.random.default_rng(15)
        n = 64
        c = gray_constellation(2, symbol_energy=1 / n)
        gamma_db = -8.0
        sigma2 = snr_to_noise(gamma_db)
        counts_mmse = []
        counts_mf = []
        for _ in range(150):
            h = sample_iid(n, n, rng)
            truth = rng.integers(0, 2, n)
            s = c.points[truth]
            y = transmit(h, s, sigma2, rng)
            _, mmse_block = mmse_soft(h, y, 1.0, n, 2 * sigma2, c)
            shat = mf_detect(h, y, mode="simplified")
            _, _, s2k = mf_sinr(h, None, 1.0, n, sigma2, mode="simplified")
            mf_block = mf_soft(shat, s2k, c)
            counts_mmse.append(np.sum(mmse_block.argmax(1) != truth))
            counts_mf.append(np.sum(mf_block.argmax(1) != truth))
        frames = len(counts_mmse)
        ber1 = np.sum(counts_mmse) / (n * frames)
        ber2 = np.sum(counts_mf) / (n * frames)
        se1 = np.std(counts_mmse, ddof=1) / (n * np.sqrt(frames))
        se2 = np.std(counts_mf, ddof=1) / (n * np.sqrt(frames))
        assert abs(ber1 - ber2) < 3 * np.hypot(se1, se2)
