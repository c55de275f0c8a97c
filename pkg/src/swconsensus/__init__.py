"""Output consensus of homogeneous nonlinear agents over switching directed topologies.

Simulation of the Riccati-based high-gain coupling across alternating
connected/disconnected communication graphs, plus a numerical hybrid Lyapunov
certificate with average dwell-time accounting.
"""

from .certificate import CertificateReport, certify_run, estimate_critical_params
from .dynamics import AgentDynamics, builtin_dynamics, drift, output
from .graphs import (
    Laplacian,
    SpectralInfo,
    Topology,
    TopologySet,
    build_laplacian,
    check_connected_reachability,
    spectral_analysis,
    validate_topology_set,
)
from .riccati import (
    GainDesign,
    RiccatiSolution,
    build_gain,
    find_ell,
    solve_riccati,
    verify_lemma1,
)
from .scenario import load_scenario, parse_topology_set, validate_scenario
from .simulate import (
    SimulationConfig,
    Trajectory,
    closed_loop_field,
    consensus_error,
    coupling_input,
    simulate,
)
from .switching import (
    AdtParams,
    SwitchingSignal,
    check_adt,
    check_disconnected_bound,
    generate_signal,
    normalize_alternation,
    tightest_adt,
)
from .transforms import (
    TopologyTransform,
    build_transform,
    evaluate_V,
    from_transformed,
    jump_map,
    to_transformed,
)

__version__ = "0.1.0"
