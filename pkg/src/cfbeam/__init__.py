"""Joint analog beam selection and digital beamforming for mm-wave
cell-free massive MIMO."""

from .config import NetworkConfig, load_config, save_config
from .errors import (BCCExhausted, CfBeamError, ConfigConflict, DataError,
                     DegenerateColumn, InvalidAssignment, InvalidGeometry,
                     OracleBudgetExceeded, SingularEffectiveChannel)
from .precode import (HybridPrecoder, MetricsReport, effective_channel,
                      mmse_precoder, normalize_hybrid, sinr_and_rates,
                      zf_precoder)
from .rfadapt import RfPolicy, apply_policy, compute_masks, smart_mask
from .scenario import (ChannelRealization, Codebook, array_response,
                       dft_codebook, draw_realization, noise_power_W,
                       path_loss_dB, search_seed)
from .search import (BeamAssignment, CodebookLog, CombinationSet,
                     SearchResult, SearchSettings, complexity_formula,
                     disjoint_linear_dl, exhaustive_search, run_ii, run_iis,
                     run_search, settings_from_name)

__version__ = "0.1.0"
