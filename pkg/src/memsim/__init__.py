"""Trace-driven, cycle-accurate DRAM memory-subsystem simulator."""

__version__ = "0.1.0"

from .config import SimConfig, TimingParams, Topology, load_config
from .simulator import Simulation, run_simulation
from .trace_io import MemoryRequest, parse_trace, write_trace

__all__ = [
    "MemoryRequest",
    "SimConfig",
    "Simulation",
    "TimingParams",
    "Topology",
    "load_config",
    "parse_trace",
    "run_simulation",
    "write_trace",
]
