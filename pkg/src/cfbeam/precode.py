"""Effective channels, ZF/MMSE digital precoders, and rate/power metrics.

The composed per-user column at AP l is u~_kl = U_l v_kl, rescaled to unit
norm so the digital stage provides no power gain. SINR of user k:

    SINR_k = (p/K) |sum_l h_kl^H u~_kl|^2
             / ( (p/K) sum_{j != k} |sum_l h_kl^H u~_jl|^2 + sigma^2 )

with the cross-AP sum inside the magnitude (coherent transmission).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularEffectiveChannel

COND_LIMIT = 1e12


def effective_channel(realization, U_l, l):
    """K x M_rf effective channel at AP l; row k is h_kl^H U_l."""
    return realization.h[:, l, :].conj() @ U_l


def _check_psd(A):
    """H H^H must be Hermitian PSD up to roundoff before inversion."""
    w = np.linalg.eigvalsh(A)
    tr = np.trace(A).real
    if np.any(w < -1e-12 * max(tr, 1.0)):
        raise SingularEffectiveChannel("effective Gram matrix is not PSD")


def zf_precoder(H, cond_limit=COND_LIMIT):
    """V = H^H (H H^H)^-1, so H V = I before column normalization."""
    H = np.asarray(H)
    A = H @ H.conj().T
    _check_psd(A)
    if not np.isfinite(np.linalg.cond(A)) or np.linalg.cond(A) > cond_limit:
        raise SingularEffectiveChannel(
            "H H^H condition number exceeds %g" % cond_limit)
    # factorized solve; A is Hermitian so (A^-1 H)^H = H^H A^-1
    return np.linalg.solve(A, H).conj().T


def mmse_precoder(H, p_T_W, K, noise_W):
    """V = H^H ((p_T/K) H H^H + sigma^2 I)^-1."""
    H = np.asarray(H)
    A = (p_T_W / K) * (H @ H.conj().T) + noise_W * np.eye(H.shape[0])
    if noise_W <= 0 and np.linalg.cond(A) > COND_LIMIT:
        raise SingularEffectiveChannel("regularizer is zero and H is rank deficient")
    return np.linalg.solve(A, H).conj().T


@dataclass
class HybridPrecoder:
    """Per-AP analog matrix, digital matrix, and normalized composed columns."""

    U: np.ndarray            # M x M_rf, columns from the codebook
    V: np.ndarray            # M_rf x K
    composed: np.ndarray     # M x K, unit-norm columns (zero where inactive)
    active: np.ndarray       # (K,) bool


def normalize_hybrid(U_l, V_l):
    """Compose and rescale each column of U_l V_l to unit norm.

    Zero columns (unreachable users) are flagged inactive and left at zero
    rather than aborting.
    """
    comp = U_l @ V_l
    norms = np.linalg.norm(comp, axis=0)
    active = norms > 0
    out = np.zeros_like(comp)
    out[:, active] = comp[:, active] / norms[active]
    return HybridPrecoder(U=U_l, V=V_l, composed=out, active=active)


@dataclass
class MetricsReport:
    """Per-user SINRs/rates plus the network aggregates."""

    sinr: np.ndarray
    rates: np.ndarray
    sum_rate: float
    dl_power_W: np.ndarray       # (K, L)
    dl_sum_W: float
    evaluation_count: int = 0
    fallback_count: int = 0
    wall_time_s: float = 0.0


def sinr_and_rates(realization, hybrids, p_T_W, evaluation_count=0,
                   fallback_count=0):
    """Network rates from the composed columns of every AP.

    ``hybrids`` is a length-L list of HybridPrecoder.
    """
    K, L = realization.K, realization.L
    q = p_T_W / K
    # A[k, j] = sum_l h_kl^H u~_jl
    A = np.zeros((K, K), complex)
    T = np.zeros((L, K, K), complex)
    for l, hp in enumerate(hybrids):
        T[l] = realization.h[:, l, :].conj() @ hp.composed
        A += T[l]
    desired = np.abs(np.diag(A)) ** 2
    total = np.sum(np.abs(A) ** 2, axis=1)
    interference = total - desired
    sinr = q * desired / (q * interference + realization.noise_power_W)
    rates = np.log2(1.0 + sinr)
    dl = q * np.abs(T[:, np.arange(K), np.arange(K)].T) ** 2  # (K, L)
    return MetricsReport(
        sinr=sinr, rates=rates, sum_rate=float(np.sum(rates)),
        dl_power_W=dl, dl_sum_W=float(np.sum(dl)),
        evaluation_count=evaluation_count, fallback_count=fallback_count)


def dl_power(realization, composed_kl, p_T_W, K, k, l):
    """Received desired power of link (k, l): (p/K) |h_kl^H u~_kl|^2."""
    return (p_T_W / K) * np.abs(realization.h[k, l].conj() @ composed_kl) ** 2
