"""Boosting hard-label attacks with successive halving and TPE resampling."""
from .victim import (
    GbdtModel,
    MlpModel,
    ModelFormatError,
    QueryLedger,
    SyntheticLandscape,
    gen_landscape,
    load_model,
    predict,
    save_model,
)
from .geometry import Env, SearchParams, binary_search_distance, distortion_c, initial_distance
from .attackers import AttackerConfig, Configuration, InitializationError, PreconditionError, attack_single, run_steps
from .tpe import TpeConfig, ei_rank_score, fit_kde, split_archive, tpe_resample
from .bosh import BoshConfig, BoshResult, cut_pool, init_pool, run_bosh

__version__ = "0.1.0"
