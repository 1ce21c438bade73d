"""RF-chain shutoff policies: serve fewer users per AP to save power.

The smart policy thresholds each AP's path losses (positive dB
attenuation) at their mean plus the 1/4 power of the (population)
variance; users strictly below the threshold are served, i.e. chains of
users markedly worse than the AP's average are shut off. The naive
policy always keeps a fixed number of chains per AP.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigConflict
from .search import run_search


@dataclass
class RfPolicy:
    mode: str = "full"        # full | naive | smart
    M_rf_fixed: int = None    # required for naive

    def __post_init__(self):
        if self.mode not in ("full", "naive", "smart"):
            raise ConfigConflict(f"unknown RF policy mode {self.mode!r}")
        if self.mode == "naive":
            if self.M_rf_fixed is None or self.M_rf_fixed < 1:
                raise ConfigConflict("naive policy needs M_rf_fixed >= 1")


@dataclass
class RfAdaptResult:
    full: "SearchResult"
    reduced: "SearchResult"
    active: np.ndarray
    power_saving_fraction: float
    sum_rate_loss_fraction: float


def smart_mask(path_losses_dB):
    """Active-user mask for one AP from its K path losses (dB).

    Threshold: mean + var^(1/4) with population variance. Falls back to the
    single best user when nothing clears the threshold (equal losses).
    """
    pl = np.asarray(path_losses_dB, dtype=float)
    tau = pl.mean() + pl.var() ** 0.25
    served = pl < tau
    if not served.any():
        served = np.zeros_like(served)
        served[int(np.argmin(pl))] = True
    return served


def compute_masks(realization, policy):
    """(L, K) bool active-user matrix for the given policy."""
    L, K = realization.L, realization.K
    if policy.mode == "full":
        return np.ones((L, K), dtype=bool)
    pl, _, _ = realization.link_features()   # (K, L)
    masks = np.zeros((L, K), dtype=bool)
    for l in range(L):
        if policy.mode == "smart":
            masks[l] = smart_mask(pl[:, l])
        else:
            n = min(policy.M_rf_fixed, K)
            best = np.argsort(pl[:, l], kind="stable")[:n]
            masks[l, best] = True
    return masks


def apply_policy(realization, codebook, policy, settings, seed=None,
                 full_result=None):
    """Run the search with all chains and with the policy's mask.

    ``full_result`` lets callers reuse an already-computed full-chain run
    when comparing several policies on the same realization.
    """
    if full_result is None:
        full_result = run_search(realization, codebook, settings, seed=seed)
    masks = compute_masks(realization, policy)
    if masks.all():
        reduced = full_result
    else:
        reduced = run_search(realization, codebook, settings, seed=seed,
                             active=masks)
    saving = 1.0 - masks.sum() / masks.size
    full_sr = full_result.report.sum_rate
    loss = 0.0 if full_sr == 0 else 1.0 - reduced.report.sum_rate / full_sr
    return RfAdaptResult(full=full_result, reduced=reduced, active=masks,
                         power_saving_fraction=float(saving),
                         sum_rate_loss_fraction=float(loss))
