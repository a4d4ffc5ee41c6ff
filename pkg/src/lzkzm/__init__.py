"""Landau-Zener / Kibble-Zurek simulation toolkit.

Exact parabolic-cylinder solutions, the adiabatic-impulse approximation,
gate-level and open-system simulation, readout mitigation and sweeps.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    DomainError,
    InsufficientDataError,
    LZError,
    NotFoundError,
    NumericalError,
    PhysicalConstraintError,
    SchemaError,
    SingularCalibrationError,
    SingularDenominatorError,
    StepSizeError,
    ValidationError,
)
from .special import pcf_d  # noqa: E402
from .analytic import (  # noqa: E402
    AmplitudePair,
    ChiPair,
    QuenchParams,
    chi_anticrossing,
    chi_general,
    classical_lz,
    lz_asymptotic,
    lz_asymptotic_series,
    lz_probability,
    ode_oracle,
)
from .kzm import (  # noqa: E402
    AIFit,
    AIParams,
    AsymptoticEstimate,
    TransitionCurve,
    asymptotic_estimate,
    eta_first_order_match,
    fit_ai,
    jump_time_star,
    lz_jump_time_hat,
    p_ai,
    p_ai_series,
)
