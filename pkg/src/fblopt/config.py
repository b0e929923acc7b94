"""Solver tolerances, iteration caps, and multiplier-method seeds."""

from dataclasses import dataclass


@dataclass(frozen=True)
class SolverConfig:
    # augmented-Lagrangian outer loop
    mu0: float = 1.0
    zeta0: float = 0.15
    mu_cap: float = 1e12
    max_stages: int = 30
    power_tol: float = 1e-6      # inf-norm change of p between stages
    feas_tol: float = 1e-8       # allowed budget violation at convergence
    project_tol: float = 1e-6    # worst violation still projected to feasibility

    # projected-gradient inner solver
    inner_tol: float = 1e-6      # projected-gradient norm target
    inner_max_iter: int = 500
    armijo: float = 1e-4

    # alternating joint loop
    max_alternations: int = 50
    eps_tol: float = 1e-9        # inf-norm change of eps between alternations

    def __post_init__(self):
        if self.mu0 <= 0:
            raise ValueError("mu0 must be positive")
        if self.zeta0 < 0:
            raise ValueError("zeta0 must be nonnegative")
