"""Random-step Markov representations of stationary processes on finite alphabets."""
from .numeric import EXACT, FLOAT, Backend, backend
from .measure import (Alphabet, Distribution, StationaryWordMeasure, check_stationary, extend_stationary,
                      independent_coupling, markov_coupling, maximal_coupling, tv_distance, tv_norm)
from .models import (ConditionalModel, DominatingMeasure, MarkovModel, iid_model, markov_chain,
                     ratio_coeff, stationary_markov, variation)
from .decompose import (CompleteRMP, LookBackDistribution, RandomMarkovRepresentation, TableFunction,
                        decompose, decompose_finite_expectation, demonstrate_collapse, leftover,
                        verify_representation)
from .determinize import canonical_digits, det_expected_lookback, determinize, f_weight, index_function
from .ratio import ratio_decompose, tau
from .simulate import simulate
from . import catalog

__all__ = [
    "EXACT", "FLOAT", "Backend", "backend",
    "Alphabet", "Distribution", "StationaryWordMeasure", "check_stationary", "extend_stationary",
    "independent_coupling", "markov_coupling", "maximal_coupling", "tv_distance", "tv_norm",
    "ConditionalModel", "DominatingMeasure", "MarkovModel", "iid_model", "markov_chain",
    "ratio_coeff", "stationary_markov", "variation",
    "CompleteRMP", "LookBackDistribution", "RandomMarkovRepresentation", "TableFunction",
    "decompose", "decompose_finite_expectation", "demonstrate_collapse", "leftover", "verify_representation",
    "canonical_digits", "det_expected_lookback", "determinize", "f_weight", "index_function",
    "ratio_decompose", "tau", "simulate", "catalog",
]
