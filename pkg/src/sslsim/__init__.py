"""Single-spin quantum-dot logic: layouts, ground-state solvers, clocked simulation."""
