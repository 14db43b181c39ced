"""Numerical Aubry-Mather toolkit for exact magnetic Lagrangians on the flat 2-torus."""

__version__ = "0.1.0"

from .lagrangian import (  # noqa: E402
    CohomologyClass,
    MagneticLagrangian,
    OneForm,
    PhaseState,
    TorusPoint,
    Velocity,
    XProfile,
    curve_action,
    el_vector_field,
    eval_energy,
    eval_lagrangian,
    magnetic_field,
)
from .graph import GridSpec, PhaseGraph, build_graph, edge_cost, walk_to_path  # noqa: E402
from .critical import (  # noqa: E402
    AlphaTable,
    CycleCertificate,
    alpha_function,
    critical_value_bisection,
    has_negative_cycle,
    min_mean_cycle,
)
from .potential import (  # noqa: E402
    PotentialTable,
    StaticClassPartition,
    aubry_nodes,
    mather_semidistance,
    potential_table,
    static_classes,
)
from .measures import (  # noqa: E402
    ClosedMeasure,
    energy_level_check,
    graph_property_check,
    measure_integrate,
    min_closed_measure,
)
from .flow import Trajectory, energy_drift, integrate  # noqa: E402
