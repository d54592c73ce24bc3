"""A small Neural Engineering Framework engine built on LIF neurons."""

from .decoders import (DecoderMatrix, Synapse, decode, default_n_eval_points, recurrent_transform,
                       regularized_objective, solve_decoders)
from .export import full_weights, read_network, write_network
from .neurons import LifParams, lif_rate, lif_step
from .population import Population, PopulationSpec, generate_population, sample_ball, sample_sphere
from .simulator import Network, Simulator, simulate_step

__all__ = [
    "DecoderMatrix", "LifParams", "Network", "Population", "PopulationSpec", "Simulator", "Synapse",
    "decode", "default_n_eval_points", "full_weights", "generate_population", "lif_rate", "lif_step",
    "read_network", "recurrent_transform", "regularized_objective", "sample_ball", "sample_sphere", "simulate_step",
    "solve_decoders", "write_network",
]
