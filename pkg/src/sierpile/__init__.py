"""Sandpile identities and exact potential theory on Sierpinski gasket graphs."""

__version__ = "0.1.0"

from .gasket import (  # noqa: E402
    GasketGraph,
    TriCoord,
    build_gasket,
    cell_map,
    corner_distance,
    nearest_vertex,
    rotate_vertex,
)
from .potential import (  # noqa: E402
    GreenTable,
    convolve_green,
    decompose_check,
    energy,
    green_dirichlet,
    green_series,
    h_field,
    harmonic_extend,
    integral_G,
)
from .sandpile import (  # noqa: E402
    Odometer,
    SandpileConfig,
    group_add,
    identity_creutz,
    identity_recursive,
    is_recurrent,
    laplacian_apply,
    random_recurrent,
    stabilize,
)
from .limits import LimitReport, limit_report  # noqa: E402
