"""Exact simulation of the equivalent-circuit model of closed timelike curves."""

from ctcsim.qmath import DensityMatrix, QMathError
from ctcsim.states import (
    GlobalInput,
    InputForm,
    PairEnsemble,
    bell_pair,
    build_global_input,
    classical_correlated_pair,
    nonorthogonal_pair,
)
from ctcsim.chain import (
    ChainConfig,
    RetainedPair,
    TwoWireUnitary,
    builtin_unitary,
    ctc_wire_trajectory,
    run_chain,
    run_dense_oracle,
)
from ctcsim.deutsch import (
    FixedPointReport,
    consistency_map,
    deutsch_channel_output,
    fixed_point,
)
from ctcsim.metrics import (
    MetricsRecord,
    classical_mutual_information_zz,
    compute_metrics,
    conditional_discrimination,
    helstrom_success,
    mutual_information,
    trace_distance,
    von_neumann_entropy,
)

__version__ = "0.1.0"
