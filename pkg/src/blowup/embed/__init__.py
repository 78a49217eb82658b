"""Randomized greedy embedding engine and its free-set oracle."""
from .config import CALIBRATED, EpsSchedule, ParamConfig, ThetaSchedule, calibrated, parse_config_text
from .engine import (BufferInfeasible, Embedding, EngineBug, Failure, FreeState, HypothesisError, Run,
                     Telemetry, apply_embedding, conclude_sdr, embed, good_set, init_state, run_iterative,
                     select_buffer, select_next, validate_embedding)
from .oracle import oracle_free_sets
from .target import Target

__all__ = [
    "CALIBRATED", "BufferInfeasible", "Embedding", "EngineBug", "EpsSchedule", "Failure", "FreeState", "HypothesisError",
    "ParamConfig", "Run", "Target", "Telemetry", "ThetaSchedule", "apply_embedding", "calibrated", "conclude_sdr", "embed",
    "good_set", "init_state", "oracle_free_sets", "parse_config_text", "run_iterative", "select_buffer",
    "select_next", "validate_embedding",
]
