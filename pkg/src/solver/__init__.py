"""Rate allocation and boundary solvers."""
