"""Geometry, channels, and codebooks.

Channel model: extended Saleh-Valenzuela with P paths per (user, AP) link,

    h_kl = sqrt(M/P) * sum_p  beta_p / sqrt(alpha_p,lin) * a(theta_p),

with log-distance path loss plus log-normal shadowing (dB) per link and a
uniform-linear-array response. The DFT codebook provides the B analog beams.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometry, DataError

# Stream tags keep realization and search randomness on disjoint substreams
# of the master seed.
_CHANNEL_STREAM = 271828
_SEARCH_STREAM = 314159


def path_loss_dB(f_c_Hz, c_mps, n_pl, dist_m, shadow_dB=0.0):
    """Log-distance path loss in dB: 20log10(4 pi f_c / c) + 10 n log10(d) + X."""
    if np.any(np.asarray(dist_m) <= 0) or f_c_Hz <= 0 or c_mps <= 0:
        raise InvalidGeometry("distance, carrier frequency, and c must be positive")
    return (20.0 * np.log10(4.0 * np.pi * f_c_Hz / c_mps)
            + 10.0 * n_pl * np.log10(dist_m) + shadow_dB)


def array_response(theta_rad, M, spacing_wavelengths=0.5):
    """ULA response, element y (1-based): sqrt(1/M) exp(j 2pi (y-1) (d/lambda) sin theta).

    Unit L2 norm by construction.
    """
    if M < 1:
        raise InvalidGeometry("M must be >= 1")
    y = np.arange(M)
    return np.sqrt(1.0 / M) * np.exp(
        1j * 2.0 * np.pi * y * spacing_wavelengths * np.sin(theta_rad))


@dataclass(frozen=True)
class Codebook:
    """B unit-norm analog beams as the columns of an M x B matrix."""

    beams: np.ndarray

    @property
    def M(self):
        return self.beams.shape[0]

    @property
    def B(self):
        return self.beams.shape[1]

    @property
    def gram(self):
        # B x B; identity for a square DFT codebook
        return self.beams.conj().T @ self.beams


def dft_codebook(M, B=None):
    """DFT codebook, D(x, y) = exp(-j 2pi (x-1)(y-1)/M) / sqrt(M), 1-based.

    With B < M the first B columns are used.
    """
    if M < 1:
        raise InvalidGeometry("M must be >= 1")
    B = M if B is None else B
    if not (1 <= B <= M):
        raise InvalidGeometry(f"need 1 <= B <= M, got B={B}")
    x = np.arange(M)[:, None]
    y = np.arange(B)[None, :]
    D = np.exp(-1j * 2.0 * np.pi * x * y / M) / np.sqrt(M)
    return Codebook(beams=D)


def noise_power_W(noise_psd_dBm_Hz, bandwidth_Hz):
    """Thermal noise power over the band, in Watts."""
    if bandwidth_Hz <= 0:
        raise InvalidGeometry("bandwidth must be positive")
    return 10.0 ** ((noise_psd_dBm_Hz + 10.0 * np.log10(bandwidth_Hz) - 30.0) / 10.0)


def assemble_channels(beta, theta_rad, alpha_dB, M, spacing_wavelengths):
    """Build h_kl vectors from per-path gains/AoDs/losses.

    beta, theta_rad, alpha_dB: (K, L, P) arrays. Returns (K, L, M) complex.
    """
    K, L, P = beta.shape
    y = np.arange(M)
    # (K, L, P, M) array responses
    a = np.sqrt(1.0 / M) * np.exp(
        1j * 2.0 * np.pi * y[None, None, None, :] * spacing_wavelengths
        * np.sin(theta_rad)[..., None])
    alpha_lin = 10.0 ** (alpha_dB / 10.0)
    w = beta / np.sqrt(alpha_lin)
    return np.sqrt(M / P) * np.einsum("klp,klpm->klm", w, a)


@dataclass(frozen=True)
class ChannelRealization:
    """One Monte Carlo draw of the network channels.

    All arrays are (K, L, P) except ``dist_m`` (K, L) and ``h`` (K, L, M).
    ``alpha_dB`` includes the shadowing term.
    """

    run_index: int
    beta: np.ndarray
    theta_rad: np.ndarray
    alpha_dB: np.ndarray
    dist_m: np.ndarray
    h: np.ndarray
    noise_power_W: float
    config: "NetworkConfig"

    @property
    def K(self):
        return self.h.shape[0]

    @property
    def L(self):
        return self.h.shape[1]

    @property
    def M(self):
        return self.h.shape[2]

    def strongest_path(self):
        """Index of the strongest path per link: argmax_p |beta|^2 / alpha_lin."""
        power = np.abs(self.beta) ** 2 / 10.0 ** (self.alpha_dB / 10.0)
        return np.argmax(power, axis=2)

    def link_features(self):
        """(path_loss_dB, aod_rad, |beta|) of the strongest path, each (K, L)."""
        p = self.strongest_path()
        k = np.arange(self.K)[:, None]
        l = np.arange(self.L)[None, :]
        return (self.alpha_dB[k, l, p], self.theta_rad[k, l, p],
                np.abs(self.beta[k, l, p]))


def _rician_weights(k_factor_dB, P):
    """Per-path power fractions: LoS gets kappa/(kappa+1), the rest split evenly."""
    kappa = 10.0 ** (k_factor_dB / 10.0)
    w = np.full(P, 1.0 / ((kappa + 1.0) * (P - 1)))
    w[0] = kappa / (kappa + 1.0)
    return w


def draw_realization(config, run_index):
    """Deterministic channel draw for (master_seed, run_index).

    Draw order is fixed (varying-mode scalars, beta, theta, distance,
    shadowing) so all algorithms sharing a run see the same realization.
    """
    rng = np.random.default_rng([config.master_seed, _CHANNEL_STREAM, run_index])
    K, L, P, M = config.K, config.L, config.P, config.M

    n_lo, n_hi = config.n_pl
    n_pl = rng.uniform(n_lo, n_hi) if n_hi > n_lo else n_lo
    s_lo, s_hi = config.shadow_sigma_dB
    sigma = rng.uniform(s_lo, s_hi) if s_hi > s_lo else s_lo

    beta = (rng.standard_normal((K, L, P)) + 1j * rng.standard_normal((K, L, P))) / np.sqrt(2.0)
    if config.k_factor_dB is not None and P > 1:
        w = _rician_weights(config.k_factor_dB, P)
        beta = beta * np.sqrt(P * w)[None, None, :]
    theta = rng.uniform(-np.pi, np.pi, (K, L, P))
    dist = rng.uniform(config.dist_m[0], config.dist_m[1], (K, L))
    shadow = rng.normal(0.0, sigma, (K, L)) if sigma > 0 else np.zeros((K, L))

    alpha_link = path_loss_dB(config.f_c_Hz, config.c_mps, n_pl, dist, shadow)
    alpha_dB = np.broadcast_to(alpha_link[..., None], (K, L, P)).copy()

    h = assemble_channels(beta, theta, alpha_dB, M, config.antenna_spacing_wavelengths)
    return ChannelRealization(
        run_index=run_index, beta=beta, theta_rad=theta, alpha_dB=alpha_dB,
        dist_m=dist, h=h, noise_power_W=config.noise_power_W, config=config)


def search_seed(config, run_index):
    """Seed sequence for search randomness, shared by every cell of a run."""
    return [config.master_seed, _SEARCH_STREAM, run_index]


# ---------------------------------------------------------------------------
# Channel dump: one text record per (run, k, l, p), full double precision.
# Columns: run_index k l p Re(beta) Im(beta) theta_rad alpha_dB
# ---------------------------------------------------------------------------

DUMP_HEADER = "# run_index k l p beta_re beta_im theta_rad alpha_dB"


def write_channel_dump(fh, realization):
    K, L, P = realization.beta.shape
    r = realization.run_index
    for k in range(K):
        for l in range(L):
            for p in range(P):
                fh.write("%d %d %d %d %.17g %.17g %.17g %.17g\n" % (
                    r, k, l, p,
                    realization.beta[k, l, p].real,
                    realization.beta[k, l, p].imag,
                    realization.theta_rad[k, l, p],
                    realization.alpha_dB[k, l, p]))


def read_channel_dump(path, config):
    """Parse a dump file into {run_index: (beta, theta, alpha_dB)} arrays."""
    K, L, P = config.K, config.L, config.P
    runs = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise DataError(f"malformed dump record: {line!r}")
            r, k, l, p = (int(parts[i]) for i in range(4))
            if not (0 <= k < K and 0 <= l < L and 0 <= p < P):
                raise DataError(f"dump indices out of range: {line!r}")
            if r not in runs:
                runs[r] = (np.zeros((K, L, P), complex), np.zeros((K, L, P)),
                           np.zeros((K, L, P)))
            beta, theta, alpha = runs[r]
            beta[k, l, p] = float(parts[4]) + 1j * float(parts[5])
            theta[k, l, p] = float(parts[6])
            alpha[k, l, p] = float(parts[7])
    return runs


def realization_from_dump(run_index, beta, theta, alpha_dB, config):
    """Rebuild a ChannelRealization from dump arrays (bit-identical h)."""
    h = assemble_channels(beta, theta, alpha_dB, config.M,
                          config.antenna_spacing_wavelengths)
    return ChannelRealization(
        run_index=run_index, beta=beta, theta_rad=theta, alpha_dB=alpha_dB,
        dist_m=np.zeros((config.K, config.L)), h=h,
        noise_power_W=config.noise_power_W, config=config)
