"""multicap: capacity scaling laboratory for random wireless ad hoc networks.

Builds random geometric networks on the unit square, checks transmission-set
feasibility under point-to-point / multi-packet protocol models, constructs
cell-based TDMA schedules and multicast routing trees, simulates multicast
throughput, and measures scaling exponents against the closed-form capacity
laws.
"""

__version__ = "0.1.0"

from .geometry import (
    CommRange,
    NetworkInstance,
    Point,
    connectivity_range,
    distance,
    generate_network,
    nodes_in_disk,
    union_of_disks_area,
)
from .protocol import (
    Link,
    Mode,
    TransmissionSet,
    is_feasible,
    max_feasible_brute,
    taa_upper_bound,
)
from .cells import (
    CellGrid,
    TdmaSchedule,
    build_cell_graph,
    build_grid,
    build_schedule,
    compute_L,
    count_simultaneous_links,
    disk_bipartite_assignment,
)
from .trees import (
    MulticastSession,
    RouteError,
    RoutingTree,
    emst,
    emst_scaling_study,
    mamt_area,
    memtc_count,
    route_session,
)
from .scaling import ScalingResult, fit_loglog
