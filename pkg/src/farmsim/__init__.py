"""farmsim: deterministic discrete-event simulator of a fault-adaptive
data-acquisition trigger farm with hierarchical watchdog agents, supervisor
processes, operator-gated mitigation strategies, and a statechart-driven
fault-mitigation language."""

__version__ = "0.1.0"
