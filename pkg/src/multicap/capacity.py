"""Multicast throughput simulation and closed-form capacity laws.

``simulate`` runs the cell/TDMA forwarding scheme packet by packet: every
node sources one multicast session, each session keeps ``window`` packets in
flight (closed loop, re-injected on delivery), and packets travel their
session's routing tree hop by hop as the schedule activates cells.  Rates are
delivered packets per session per slot over a measurement window; the scheme
constants are arbitrary but the scaling in ``(n, t, m)`` is what the
theoretical formulas predict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cells import build_cell_graph, build_grid, build_schedule
from .engine.state import build_engine_state
from .geometry import NetworkInstance, generate_network, spawn_rng
from .protocol import Mode
from .trees import MulticastSession, RouteError, _CellBuckets, route_session


@dataclass(frozen=True)
class SimConfig:
    n: int
    t: float
    m: int
    delta: float = 0.0
    slots: int | None = None  # measured slots; default 10 schedule cycles
    seed: int = 0
    every_node_source: bool = True
    window: int = 1  # outstanding packets per session
    warmup_cycles: int = 5  # schedule cycles discarded before measuring

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass
class ThroughputReport:
    mode: Mode
    config: SimConfig
    session_rates: np.ndarray  # delivered packets per slot, one per session
    mean_rate: float
    measured_slots: int
    deliveries: np.ndarray
    injected: np.ndarray
    transmissions: int
    backend: str

    def to_csv(self, path, nc: bool = False) -> None:
        c = self.config
        with open(path, "w", newline="") as fh:
            fh.write("mode,nc,n,t,delta,m,seed,session_id,rate\n")
            for sid, rate in enumerate(self.session_rates):
                fh.write(
                    f"{self.mode.value},{int(nc)},{c.n},{c.t:.12g},"
                    f"{c.delta:.12g},{c.m},{c.seed},{sid},{rate:.12g}\n"
                )


@dataclass
class SimSetup:
    """Network, layout and routed trees shared by several simulate calls."""

    net: NetworkInstance
    grid: object
    schedule: object
    cell_graph: object
    sessions: list
    trees: list


def make_sessions(config: SimConfig) -> tuple[NetworkInstance, list]:
    net = generate_network(config.n, config.seed)
    rng = spawn_rng(config.seed, 1)
    sources = range(config.n) if config.every_node_source else [0]
    sessions = []
    for s in sources:
        others = np.arange(config.n - 1)
        others[s:] += 1  # all node ids except s
        dests = rng.choice(others, size=config.m, replace=False)
        sessions.append(MulticastSession(int(s), tuple(int(d) for d in dests)))
    return net, sessions


def build_sim_setup(config: SimConfig) -> SimSetup:
    """Generate the network, schedule and routing trees for a config."""
    net, sessions = make_sessions(config)
    grid = build_grid(config.t)
    schedule = build_schedule(grid, config.delta)
    cell_graph = build_cell_graph(net, grid)
    if not cell_graph.connected():
        raise RouteError(
            f"cell graph disconnected for n={config.n}, t={config.t}"
        )
    buckets = _CellBuckets(net, grid)
    trees = [
        route_session(sess, net, grid, cell_graph, buckets) for sess in sessions
    ]
    return SimSetup(net, grid, schedule, cell_graph, sessions, trees)


def simulate(
    config: SimConfig,
    mode: Mode,
    setup: SimSetup | None = None,
    record_links: bool = False,
):
    """Run the TDMA forwarding simulation and report per-session rates.

    Returns the :class:`ThroughputReport`, plus the recorded per-slot link
    lists when ``record_links`` is set (for feasibility auditing).
    """
    from .engine import BACKEND, run_slots as engine_run

    if setup is None:
        setup = build_sim_setup(config)
    state = build_engine_state(
        setup.net,
        setup.grid,
        setup.schedule,
        setup.trees,
        mode,
        delta=config.delta,
        window=config.window,
    )
    cycle = setup.schedule.num_slots
    measured = config.slots if config.slots is not None else 10 * cycle
    if measured < cycle:
        raise ValueError(f"slots must be >= L^2 = {cycle}")
    warmup = config.warmup_cycles * cycle
    recorded = engine_run(
        state, warmup + measured, warmup, warmup + measured, record_links
    )
    rates = state.deliveries_window / float(measured)
    report = ThroughputReport(
        mode=mode,
        config=config,
        session_rates=rates,
        mean_rate=float(np.mean(rates)),
        measured_slots=measured,
        deliveries=state.deliveries.copy(),
        injected=state.injected.copy(),
        transmissions=state.transmissions,
        backend=BACKEND,
    )
    if record_links:
        return report, recorded
    return report


def saturation_window(mode: Mode, n: int, t: float, margin: float = 1.5) -> int:
    """Outstanding packets per session needed to keep cells backlogged.

    A cell's activation can serve up to its budget, so saturation wants about
    ``budget * num_cells`` entries in flight; with one frontier entry per
    packet that is ``budget * num_cells / n`` packets per session, padded by
    ``margin``.
    """
    from .engine.state import cell_budget

    cells = build_grid(t).num_cells
    return max(1, math.ceil(margin * cell_budget(mode, n, t) * cells / n))


def theoretical_capacity(mode: Mode, nc: bool, n: int, t: float, m: int) -> float:
    """Order formula for per-session capacity with unit constants.

    Network coding changes nothing for the multi-packet modes; for plain
    point-to-point it removes the 1/sqrt(m) routing factor.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if mode is Mode.PTP:
        if nc:
            return 1.0 / (n * t)
        return 1.0 / (math.sqrt(m) * n * t)
    if mode in (Mode.MPT, Mode.MPR):
        return t
    return n * t ** 3 / math.sqrt(m)


def gain_vs_ptp(n: int, t: float, m: int) -> float:
    """Capacity ratio MPT_MPR over PTP -- equals n^2 * t^4 for any m."""
    from .geometry import connectivity_range

    if t < connectivity_range(n):
        raise ValueError("t below the connectivity range")
    return theoretical_capacity(Mode.MPT_MPR, False, n, t, m) / theoretical_capacity(
        Mode.PTP, False, n, t, m
    )


def aggregate_to_csv(path, rows) -> None:
    """Write ``mode,n,t,m,mean_rate,stderr`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("mode,n,t,m,mean_rate,stderr\n")
        for mode, n, t, m, mean, stderr in rows:
            fh.write(f"{mode.value},{n},{t:.12g},{m},{mean:.12g},{stderr:.12g}\n")
