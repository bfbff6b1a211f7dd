"""Graph Turing machines."""
from .core import (BudgetExhausted, Configuration, FiniteGraph, GraphMachine, Halted, LazyGraph,
                   NonHalting, RunTrace, lift_input, machine_function, restrict, run, step,
                   validate_machine)

__all__ = [
    "BudgetExhausted", "Configuration", "FiniteGraph", "GraphMachine", "Halted", "LazyGraph",
    "NonHalting", "RunTrace", "lift_input", "machine_function", "restrict", "run", "step",
    "validate_machine",
]
__version__ = "0.1.0"
