"""Optimal integer noise mechanisms for (epsilon, delta) differential privacy.

The public surface is re-exported here; see the submodules for details.
"""

from .bounds import (
    EpsDeltaSeriesParams,
    GapReport,
    gap_report,
    lb_eps_delta,
    lb_multi_eps_delta,
    lb_multi_zero_delta,
    lb_zero_delta,
    ub_laplace,
    ub_laplace_multi,
    ub_uniform_1d,
    ub_uniform_multi,
)
from .certificates import (
    AxisWeights,
    CertificateReport,
    DualCertificate,
    Regime,
    build_cert_eps_delta_1d,
    build_cert_multi_eps_delta_l1,
    build_cert_multi_eps_delta_l2,
    build_cert_multi_l1_zero_delta,
    build_cert_multi_l2_zero_delta,
    build_cert_zero_delta_1d,
    certificate_from_lp_dual,
    l2_growth_root,
    verify_certificate,
)
from .core import (
    L1,
    L2,
    BoundReport,
    CostFn,
    Finite1D,
    FiniteND,
    GeometricLaplace,
    Power,
    PrivacyParams,
    Product,
    Table,
    cost_value,
    expected_cost,
    validate_distribution,
)
from .hypotest import TradeoffRegion, point_feasible, tradeoff_region
from .lp import LpProblem, LpSolution, build_relaxed_lp, lp_lower_bound, solve_lp
from .mechanisms import SampleBatch, discrete_laplace, sample, uniform_mechanism_1d, uniform_mechanism_multi
from .privacy import PrivacyReport, check_dp, tightest_delta_1d, tightest_delta_multi

__version__ = "0.1.0"
