"""Numerical laboratory for weighted ergodic averages.

Linear sequences <T^n x, x'> of power-bounded operators, their split into an
almost-periodic part and a Cesaro-null residual, weighted return-time and
polynomial averages on rotations, and the right-shift counterexample.
"""

from .errors import HypothesisError, InputError
from .seqcore import (AverageTrace, DensityOneSet, TrigPolynomial, Verdict, WeightSequence,
                      cesaro_trace, kvn_extract)
from .linops import (SpectralOperator, VectorPair, linear_sequence, structure_split,
                     validate_rwc)
from .dynsys import DynamicalSystem, IntPolynomial, Observable, correlation_sequence
from .averages import (multiple_rtt_average, universal_family_report, weighted_average,
                       weighted_poly_average_l2)
from .shiftcex import (BoundedFunctional, L1Vector, block_sign_sequence, cex_bound_check,
                       divergence_witness, shift_sequence)

__version__ = "0.1.0"

__all__ = [
    "HypothesisError", "InputError",
    "AverageTrace", "DensityOneSet", "TrigPolynomial", "Verdict", "WeightSequence",
    "cesaro_trace", "kvn_extract",
    "SpectralOperator", "VectorPair", "linear_sequence", "structure_split", "validate_rwc",
    "DynamicalSystem", "IntPolynomial", "Observable", "correlation_sequence",
    "multiple_rtt_average", "universal_family_report", "weighted_average",
    "weighted_poly_average_l2",
    "BoundedFunctional", "L1Vector", "block_sign_sequence", "cex_bound_check",
    "divergence_witness", "shift_sequence",
]
