"""Network configuration: all physical and experiment constants in one place.

Powers are configured in dBm and converted to Watts at this boundary only;
everything downstream works in linear units.
"""

from dataclasses import dataclass, field, asdict
import math

import yaml

from .errors import ConfigConflict, InvalidGeometry


def _as_range(value):
    """Accept a scalar or a [lo, hi] pair; return (lo, hi) floats."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigConflict(f"range must have two entries, got {value!r}")
        lo, hi = float(value[0]), float(value[1])
        if lo > hi:
            raise ConfigConflict(f"range lo > hi: {value!r}")
        return (lo, hi)
    v = float(value)
    return (v, v)


@dataclass(frozen=True)
class NetworkConfig:
    """Immutable bag of network constants.

    ``n_pl`` and ``shadow_sigma_dB`` may be scalars or [lo, hi] ranges;
    ranges enable the varying-channel mode where one value is drawn per
    realization. ``dist_m`` is always a [lo, hi] range (per-link draws).
    """

    L: int = 3
    K: int = 2
    M: int = 8
    M_rf: int = None          # defaults to K
    B: int = None             # defaults to M
    p_T_dBm: float = 43.0
    noise_psd_dBm_Hz: float = -174.0
    bandwidth_Hz: float = 850e6
    f_c_Hz: float = 28e9
    c_mps: float = 3e8
    n_pl: tuple = (2.0, 2.0)
    shadow_sigma_dB: tuple = (4.0, 4.0)
    dist_m: tuple = (95.0, 105.0)
    P: int = 1
    k_factor_dB: float = None
    antenna_spacing_wavelengths: float = 0.5
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_pl", _as_range(self.n_pl))
        object.__setattr__(self, "shadow_sigma_dB", _as_range(self.shadow_sigma_dB))
        object.__setattr__(self, "dist_m", _as_range(self.dist_m))
        if self.M_rf is None:
            object.__setattr__(self, "M_rf", self.K)
        if self.B is None:
            object.__setattr__(self, "B", self.M)
        if self.L < 1 or self.K < 1:
            raise ConfigConflict("L and K must be >= 1")
        if not (self.M >= self.M_rf >= 1):
            raise ConfigConflict(f"need M >= M_rf >= 1, got M={self.M}, M_rf={self.M_rf}")
        if self.B < 1 or self.B > self.M:
            raise ConfigConflict(f"need 1 <= B <= M, got B={self.B}, M={self.M}")
        if self.P < 1:
            raise ConfigConflict("P must be >= 1")
        for name in ("bandwidth_Hz", "f_c_Hz", "c_mps", "antenna_spacing_wavelengths"):
            if getattr(self, name) <= 0:
                raise InvalidGeometry(f"{name} must be strictly positive")
        if self.dist_m[0] <= 0:
            raise InvalidGeometry("distances must be strictly positive")
        if self.shadow_sigma_dB[0] < 0:
            raise ConfigConflict("shadowing std must be non-negative")

    @property
    def p_T_W(self):
        return 10.0 ** ((self.p_T_dBm - 30.0) / 10.0)

    @property
    def noise_power_W(self):
        from .scenario import noise_power_W
        return noise_power_W(self.noise_psd_dBm_Hz, self.bandwidth_Hz)

    def require_bcc_feasible(self):
        """BCC needs at least one beam per user."""
        if self.B < self.K:
            raise ConfigConflict(
                f"BCC requires B >= K, got B={self.B}, K={self.K}")

    def to_dict(self):
        d = asdict(self)
        for key in ("n_pl", "shadow_sigma_dB", "dist_m"):
            d[key] = list(d[key])
        return d


def config_from_dict(d):
    known = set(NetworkConfig.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ConfigConflict(f"unknown config keys: {sorted(extra)}")
    return NetworkConfig(**d)


def load_config(path):
    """Load a NetworkConfig from a YAML file.

    Accepts either the fields at top level or nested under a ``network:`` key
    (the experiment-file layout).
    """
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    if "network" in raw:
        raw = raw["network"]
    return config_from_dict(raw)


def save_config(cfg, path):
    with open(path, "w") as f:
        yaml.safe_dump({"network": cfg.to_dict()}, f, sort_keys=False)
