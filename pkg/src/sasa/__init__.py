"""Statistical adaptive stochastic approximation.

SGM with a learning rate that is cut by a constant factor each time a
stationarity test on the optimizer's own trajectory fires.
"""

from sasa.errors import InsufficientSamples, NumericalError
from sasa.inference import (
    TestReport,
    VarianceEstimate,
    t_quantile,
    test_deterministic,
    test_iid,
    test_markov,
    var_batch_means,
    var_iid,
    var_olbm,
)
from sasa.problems import (
    LogRegProblem,
    QuadraticProblem,
    check_unbiasedness,
    noisy_quadratic,
    synth_logreg_data,
)
from sasa.sgm import (
    Constant,
    ConstantAndCut,
    Poly,
    SgmState,
    sgm_step,
    sgm_step_common,
    step_size_at,
)
from sasa.stationarity import HalfQueue, StatPair, collect, reset_all, running_means

__version__ = "0.1.0"

__all__ = [
    "Constant",
    "ConstantAndCut",
    "HalfQueue",
    "InsufficientSamples",
    "LogRegProblem",
    "NumericalError",
    "Poly",
    "QuadraticProblem",
    "SgmState",
    "StatPair",
    "TestReport",
    "VarianceEstimate",
    "check_unbiasedness",
    "collect",
    "noisy_quadratic",
    "reset_all",
    "running_means",
    "sgm_step",
    "sgm_step_common",
    "step_size_at",
    "synth_logreg_data",
    "t_quantile",
    "test_deterministic",
    "test_iid",
    "test_markov",
    "var_batch_means",
    "var_iid",
    "var_olbm",
]
