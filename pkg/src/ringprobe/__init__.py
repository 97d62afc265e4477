"""Link-failure localization in software-defined networks via a logical ring.

A closed walk covering every link is compiled into static forwarding rules
so that a controller can verify the whole network with one probe and, on
failure, bisect the ring with bounce-back probes to find the broken link.

Modules
-------
topology    graphs, loaders, bridges, control domains
walks       postman tours, directed Euler cycles, duplicate-sharing improvement
rules       compiling walks into match/action rule sets
simulator   a deterministic forwarding plane with link failures
diagnosis   verification, localization strategies, cost bounds
evaluation  corpus studies behind the command-line tool
"""
from .diagnosis import (DiagnosisReport, RingView, cost_bounds, locate_bidirectional,
                        locate_multi, locate_parallel, locate_single, ring_fabric, verify)
from .rules import Ring, build_ring, compile_ring, compile_walk
from .simulator import FailureState, build_fabric, inject, set_failures
from .topology import ControlDomain, Topology, find_bridges, load_topology
from .walks import Walk, euler_cycle_directed, improve_walk, solve_cpp, walk_metrics

__version__ = "0.1.0"

__all__ = [
    "ControlDomain", "DiagnosisReport", "FailureState", "Ring", "RingView", "Topology", "Walk",
    "build_fabric", "build_ring", "compile_ring", "compile_walk", "cost_bounds",
    "euler_cycle_directed", "find_bridges", "improve_walk", "inject", "load_topology",
    "locate_bidirectional", "locate_multi", "locate_parallel", "locate_single", "ring_fabric",
    "set_failures", "solve_cpp", "verify", "walk_metrics",
]
