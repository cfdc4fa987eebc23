"""Perfect state transfer in Rydberg atom chains.

Library layout mirrors the pipeline: params (atomic/hardware data) ->
targets (perfect-transport condition) -> inversion (control parameters) ->
evolution (model hierarchy dynamics) -> sweeps (optimization studies) ->
analysis (entanglement distribution limits). The `rydchain` CLI drives the
full study pipelines.
"""

__version__ = "0.1.0"

from .analysis import ChannelAnalysis, concurrence, fit_and_extrapolate
from .errors import (ConfigError, ConvergenceError, InfeasibleGeometryError,
                     RydchainError, SingularityError, TableError)
from .evolution import (FULL, BasisIndex, EvolutionResult, ModelKind, Propagator,
                        QuantumState, apply_decay, basis_index, brute_force_oracle,
                        build_generator, evolve, single_excitation_state,
                        transport_probability_at)
from .inversion import (ChainSolution, EffectiveCouplings, effective_mapping,
                        interaction_matrix, nnn_ratio, solve_chain)
from .params import (HardwareConstraints, ParamTable, PhysicalParams, c6_of,
                     d_er_of, decay_rate, default_table, load_param_table,
                     physical_params, rabi_of)
from .sweeps import (LSweepEntry, NSweepEntry, OptimumSummary, SweepRecord,
                     SweepSettings, detuning_grid, sweep_detuning, sweep_length,
                     sweep_n)
from .targets import (TransportTargets, characteristic_length, coupling_targets,
                      j_max, transport_targets, transport_time)
from .units import angular_to_mhz, mhz_to_angular

__all__ = [name for name in dir() if not name.startswith("_")]
