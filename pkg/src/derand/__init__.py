"""derand: greedy derandomized constructions of small sample spaces.

Builders produce epsilon-bias sets, almost k-wise independent sets in the
L-infinity and L1 norms, epsilon-balanced linear codes, and dense perfect
hash families; exact brute-force verifiers certify every output.
"""

__version__ = "0.1.0"

from .constructions import (  # noqa: F401
    KwiseParams,
    PhfParams,
    build_balanced_code,
    build_bias_set,
    build_kwise_direct,
    build_kwise_l1,
    build_kwise_polytime,
    build_phf,
    compose,
    nn_reduce,
)
from .derandomizer import (  # noqa: F401
    ConstraintSpec,
    Direction,
    EnumeratedSpace,
    PotentialTrace,
    ProductSpace,
    derandomize_conditional,
    derandomize_enumerated,
    step_candidate_potential,
)
from .sampleset import SampleMultiset  # noqa: F401
from .verifier import (  # noqa: F401
    check_bias,
    check_code_balance,
    check_kwise,
    check_phf_density,
    check_trace,
    lower_bound_report,
)
