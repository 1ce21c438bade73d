import numpy as np
import pytest

from cfbeam import (NetworkConfig, dft_codebook, draw_realization,
                    effective_channel, mmse_precoder, normalize_hybrid,
                    sinr_and_rates, zf_precoder)
from cfbeam.errors import SingularEffectiveChannel
from cfbeam.precode import dl_power
from cfbeam.search import effective_beams, evaluate_assignment


def _random_h(rng, K, M):
    return (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M)))


class TestZf:
    def test_identity(self):
        np.testing.assert_allclose(zf_precoder(np.eye(2)), np.eye(2))

    def test_inverse_scaling(self):
        np.testing.assert_allclose(zf_precoder(2 * np.eye(2)), 0.5 * np.eye(2))

    def test_zero_forcing_identity_random(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(1000):
            H = _random_h(rng, 3, 5)
            V = zf_precoder(H)
            worst = max(worst, np.abs(H @ V - np.eye(3)).max())
        assert worst < 1e-9

    def test_singular_raises(self):
        H = np.ones((2, 4), complex)  # duplicate rows
        with pytest.raises(SingularEffectiveChannel):
            zf_precoder(H)


class TestMmse:
    def test_identity_case(self):
        # H = I, p/K = 1, sigma^2 = 1 -> V = 0.5 I
        np.testing.assert_allclose(mmse_precoder(np.eye(2), 2.0, 2, 1.0),
                                   0.5 * np.eye(2))

    def test_zero_channel(self):
        np.testing.assert_allclose(mmse_precoder(np.zeros((2, 3)), 1.0, 2, 1.0),
                                   np.zeros((3, 2)))

    def test_zf_limit(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            H = _random_h(rng, 2, 4)
            sigma2 = 1e-12 * np.linalg.norm(H) ** 2
            Vm = mmse_precoder(H, 2.0, 2, sigma2 * 2.0 / 2.0)
            Vz = zf_precoder(H)
            Vm = Vm / np.linalg.norm(Vm, axis=0)
            Vz = Vz / np.linalg.norm(Vz, axis=0)
            # columns agree up to phase; MMSE keeps ZF's phase here
            assert np.abs(Vm - Vz).max() < 1e-6


class TestNormalizeHybrid:
    def test_already_unit(self):
        U = np.eye(2).astype(complex)
        V = np.eye(2).astype(complex)
        hp = normalize_hybrid(U, V)
        np.testing.assert_allclose(hp.composed, np.eye(2))
        assert hp.active.all()

    def test_rescales(self):
        U = np.eye(2).astype(complex)
        V = np.array([[2.0, 0.0], [0.0, 3.0]], complex)
        hp = normalize_hybrid(U, V)
        np.testing.assert_allclose(hp.composed, np.eye(2))

    def test_zero_column_flagged_inactive(self):
        U = np.eye(2).astype(complex)
        V = np.array([[1.0, 0.0], [0.0, 0.0]], complex)
        hp = normalize_hybrid(U, V)
        assert hp.active.tolist() == [True, False]
        np.testing.assert_allclose(hp.composed[:, 1], 0.0)

    def test_unit_norm_property(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            U = dft_codebook(8).beams[:, rng.choice(8, 4, replace=False)]
            V = _random_h(rng, 4, 4)
            hp = normalize_hybrid(U, V)
            norms = np.linalg.norm(hp.composed[:, hp.active], axis=0)
            assert np.abs(norms - 1.0).max() < 1e-9


class TestMetrics:
    def _single_user_setup(self):
        cfg = NetworkConfig(L=1, K=1, M=4, master_seed=0)
        r = draw_realization(cfg, 0)
        return cfg, r

    def test_single_user_no_interference(self):
        cfg, r = self._single_user_setup()
        code = dft_codebook(4)
        U = code.beams[:, [0]]
        V = np.ones((1, 1), complex)
        hp = normalize_hybrid(U, V)
        rep = sinr_and_rates(r, [hp], cfg.p_T_W)
        g = r.h[0, 0].conj() @ hp.composed[:, 0]
        expected = cfg.p_T_W * np.abs(g) ** 2 / r.noise_power_W
        assert rep.sinr[0] == pytest.approx(expected, rel=1e-12)
        assert rep.rates[0] == pytest.approx(np.log2(1 + expected), rel=1e-12)

    def test_rate_formula_holds_exactly(self):
        cfg = NetworkConfig(L=2, K=2, M=4, master_seed=1)
        r = draw_realization(cfg, 0)
        code = dft_codebook(4)
        hybrids = []
        for l in range(2):
            U = code.beams[:, [l, l + 1]]
            H = effective_channel(r, U, l)
            hybrids.append(normalize_hybrid(U, zf_precoder(H)))
        rep = sinr_and_rates(r, hybrids, cfg.p_T_W)
        np.testing.assert_array_equal(rep.rates, np.log2(1 + rep.sinr))
        assert rep.sum_rate == pytest.approx(rep.rates.sum())

    def test_coherent_gain_two_aps(self):
        # equal desired terms from 2 APs -> |2g|^2 = 4|g|^2 in the numerator
        cfg = NetworkConfig(L=2, K=1, M=2, master_seed=0)
        r = draw_realization(cfg, 0)
        g = 0.5 + 0.25j
        # craft composed columns giving h^H u = g at both APs
        hybrids = []
        for l in range(2):
            h = r.h[0, l]
            u = h / np.linalg.norm(h)
            scale = g / (h.conj() @ u)
            u = u * scale / np.abs(scale)  # keep unit norm, rotate phase
            hp = normalize_hybrid(u[:, None], np.ones((1, 1), complex))
            hp.composed = u[:, None] * (g / (h.conj() @ u)) / np.abs(
                g / (h.conj() @ u))
            hybrids.append(hp)
        A = sum(r.h[0, l].conj() @ hybrids[l].composed[:, 0] for l in range(2))
        rep = sinr_and_rates(r, hybrids, cfg.p_T_W)
        expected = cfg.p_T_W * np.abs(A) ** 2 / r.noise_power_W
        assert rep.sinr[0] == pytest.approx(expected, rel=1e-12)

    def test_scale_invariance_of_digital_precoder(self):
        cfg = NetworkConfig(L=2, K=2, M=4, master_seed=5)
        r = draw_realization(cfg, 0)
        code = dft_codebook(4)
        reps = []
        for scale in (1.0, 7.3):
            hybrids = []
            for l in range(2):
                U = code.beams[:, [0, 2]]
                V = zf_precoder(effective_channel(r, U, l)) * scale
                hybrids.append(normalize_hybrid(U, V))
            reps.append(sinr_and_rates(r, hybrids, cfg.p_T_W))
        np.testing.assert_allclose(reps[0].sinr, reps[1].sinr, rtol=1e-12)

    def test_dl_power_aligned_beam(self):
        # beam 0 of the DFT codebook equals a(0): captures M*(p/K)*|beta|^2/alpha
        cfg = NetworkConfig(L=1, K=1, M=4, master_seed=0)
        r = draw_realization(cfg, 0)
        beta = r.beta[0, 0, 0]
        alpha_lin = 10 ** (r.alpha_dB[0, 0, 0] / 10)
        theta0 = np.zeros((1, 1, 1))
        from cfbeam.scenario import assemble_channels
        h = assemble_channels(r.beta, theta0, r.alpha_dB, 4, 0.5)
        r2 = type(r)(run_index=0, beta=r.beta, theta_rad=theta0,
                     alpha_dB=r.alpha_dB, dist_m=r.dist_m, h=h,
                     noise_power_W=r.noise_power_W, config=cfg)
        u = dft_codebook(4).beams[:, 0]
        got = dl_power(r2, u, cfg.p_T_W, 1, 0, 0)
        expected = cfg.p_T_W * 4 * np.abs(beta) ** 2 / alpha_lin
        assert got == pytest.approx(expected, rel=1e-10)

    def test_orthogonal_beam_zero_power(self):
        cfg = NetworkConfig(L=1, K=1, M=4, master_seed=0)
        r = draw_realization(cfg, 0)
        h = r.h[0, 0]
        # build a unit vector orthogonal to h
        u = np.zeros(4, complex)
        u[0], u[1] = -h[1].conj(), h[0].conj()
        u /= np.linalg.norm(u)
        assert dl_power(r, u, cfg.p_T_W, 1, 0, 0) < 1e-20 * cfg.p_T_W


class TestEffectiveChannel:
    def test_trivial_single_antenna(self):
        cfg = NetworkConfig(L=1, K=1, M=1, master_seed=0)
        r = draw_realization(cfg, 0)
        U = np.ones((1, 1), complex)
        H = effective_channel(r, U, 0)
        assert H[0, 0] == pytest.approx(r.h[0, 0, 0].conjugate())

    def test_codebook_column_channel(self):
        # h equal to a codebook column -> effective row is a unit vector
        cfg = NetworkConfig(L=1, K=1, M=2, master_seed=0)
        r = draw_realization(cfg, 0)
        code = dft_codebook(2)
        h = code.beams[:, [0]].T  # (1, 2)
        r2 = type(r)(run_index=0, beta=r.beta, theta_rad=r.theta_rad,
                     alpha_dB=r.alpha_dB, dist_m=r.dist_m,
                     h=h[None, :, :].reshape(1, 1, 2),
                     noise_power_W=r.noise_power_W, config=cfg)
        H = effective_channel(r2, code.beams, 0)
        np.testing.assert_allclose(H, [[1.0, 0.0]], atol=1e-12)

    def test_psd_guard(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            H = _random_h(rng, 3, 6)
            A = H @ H.conj().T
            w = np.linalg.eigvalsh(A)
            assert w.min() >= -1e-12 * np.trace(A).real


class TestEffectiveDomainParity:
    def test_matches_m_domain_pipeline(self):
        # the search-side evaluator and the precode pipeline agree
        cfg = NetworkConfig(L=3, K=2, M=8, master_seed=6)
        code = dft_codebook(8)
        rng = np.random.default_rng(0)
        for run in range(20):
            r = draw_realization(cfg, run)
            idx = np.stack([rng.permutation(8)[:2] for _ in range(3)])
            hybrids = []
            for l in range(3):
                U = code.beams[:, idx[l]]
                V = zf_precoder(effective_channel(r, U, l))
                hybrids.append(normalize_hybrid(U, V))
            rep_m = sinr_and_rates(r, hybrids, cfg.p_T_W)
            G = effective_beams(r, code)
            rep_e = evaluate_assignment(G, code.gram, idx,
                                        np.ones((3, 2), bool),
                                        cfg.p_T_W / 2, r.noise_power_W,
                                        "zf", allow_fallback=False)
            assert rep_e.sum_rate == pytest.approx(rep_m.sum_rate, rel=1e-10)
            np.testing.assert_allclose(rep_e.dl_power_W, rep_m.dl_power_W,
                                       rtol=1e-9)
