"""Fast-slow SIR, SIRS and SIRWS epidemic models.

Entry-exit maps, singular cycles, Hopf scans and an adaptive orbit engine.
"""
__version__ = "0.1.0"

from .model import (  # noqa: E402
    LogState, ModelKind, ModelParams, SystemState, TimeFrame, endemic_equilibrium, jacobian,
    layer_field, log_field, reduced_field, vector_field,
)
from .conserved import gamma_invariant, pi1_inverse, pi1_map, s_nullcline, w_infinity  # noqa: E402
from .entry_exit import (  # noqa: E402
    EntryExitSolution, SlowFlowCoefficients, exit_time, exit_time_quadrature, generic_entry_exit,
    sir_exit_point, sirws_exit_point, slow_flow_solution,
)
from .orbit import (  # noqa: E402
    EventSpec, IntegratorConfig, Trajectory, integrate, peak_sequences, poincare_return, singular_orbit,
)
from .cycle import SectionJ1, candidate_map, classify_j3, default_section, find_singular_cycle  # noqa: E402
from .bifurcation import (  # noqa: E402
    attractor_classify, equilibrium_spectrum, hopf_scan, lyapunov_l1,
)
