"""Blind-motion planning with intermittently scheduled localization scans.

A planner for agents that move on proprioception alone and re-localize by
stopping to scan: the move/scan schedule and the motion are optimized
jointly as a convex mixed-integer linear program with chance constraints
against convex obstacles. Ships with a self-contained MILP solver, a
decoupled two-stage baseline (grid A* + greedy scan scheduling), and a
seeded Monte Carlo benchmark harness.
"""

__version__ = "0.1.0"

from .milp.backend import KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
