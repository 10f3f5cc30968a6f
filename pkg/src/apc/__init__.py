"""Reachability analysis for integer flowgraph programs.

Computes a necessary condition on program inputs for execution to reach a
target location: acyclic backbones are executed symbolically and every loop
met along the way is replaced by a summary (an iterated state plus a
condition on per-backbone iteration counters).  Satisfiability of the
resulting formula is decided by an external SMT solver, either directly or
after a bound-K quantifier elimination, and models yield concrete test
inputs that an interpreter can replay.
"""

__version__ = "0.1.0"
