"""Alternating joint optimization of error probabilities and powers,
normalized objective evaluation, throughput metric, and the exhaustive
grid-search oracle used to validate the solver at small user counts.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import NetworkRealization
from .config import SolverConfig
from .error_assignment import SortedQosProfile, optimal_errors
from .kernels import EPS_FLOOR, achievable_rate, dispersion_coeff, q_inverse
from .power import simplex_grid, solve_power, sr_infinity, water_filling


@dataclass(frozen=True)
class Allocation:
    """A joint decision point: powers and error probabilities, both in
    original user order."""

    p: np.ndarray
    eps: np.ndarray


@dataclass
class SolveReport:
    allocation: Allocation
    objective: float
    u1: float
    u2: float
    sum_rate: float
    max_eps: float
    throughput: float
    iterations: int
    trace: list = field(default_factory=list)
    flags: list = field(default_factory=list)


@dataclass(frozen=True)
class OracleGrid:
    p_points: int = 200
    eps_points: int = 200


def u1(realization, p, eps, sr_inf) -> float:
    """Normalized rate objective: the dispersion-penalized log-rate sum over
    sr_inf. Deliberately excludes the log(L)/L offset, which is constant in
    the decision variables; reported rates include it (see per_user_rates).
    """
    s = realization.gamma * np.asarray(p, dtype=float)
    a = dispersion_coeff(s, realization.block_length)
    qinv = q_inverse(np.maximum(np.asarray(eps, dtype=float), EPS_FLOOR))
    return float(np.sum(np.log1p(s) - a * qinv)) / sr_inf


def u2(eps, eps_max_overall) -> float:
    """Normalized reliability objective (cap_N - max eps) / cap_N."""
    return (eps_max_overall - float(np.max(eps))) / eps_max_overall


def weighted_objective(realization, p, eps, omega, sr_inf, eps_max_overall) -> float:
    return omega * u1(realization, p, eps, sr_inf) + (1.0 - omega) * u2(
        eps, eps_max_overall
    )


def per_user_rates(realization, p, eps) -> np.ndarray:
    """Full normal-approximation rates (including log(L)/L), possibly
    negative; used for reporting and throughput."""
    eps = np.maximum(np.asarray(eps, dtype=float), EPS_FLOOR)
    return achievable_rate(
        realization.gamma * np.asarray(p, dtype=float),
        realization.block_length,
        eps,
    )


def sum_throughput(rates, eps) -> float:
    """Sum of rate * success probability, with negative rates clamped to
    zero (a negative rate is a normal-approximation artifact, not physical
    throughput)."""
    r = np.maximum(np.asarray(rates, dtype=float), 0.0)
    return float(np.sum(r * (1.0 - np.asarray(eps, dtype=float))))


def make_report(
    realization,
    profile,
    p,
    eps,
    omega,
    sr_inf=None,
    iterations=1,
    trace=None,
    flags=None,
) -> SolveReport:
    """Assemble a SolveReport for any feasible allocation."""
    if sr_inf is None:
        sr_inf = sr_infinity(realization.gamma, realization.p_max)
    rates = per_user_rates(realization, p, eps)
    val_u1 = u1(realization, p, eps, sr_inf)
    val_u2 = u2(eps, profile.eps_max_overall)
    return SolveReport(
        allocation=Allocation(p=np.asarray(p, dtype=float), eps=np.asarray(eps, dtype=float)),
        objective=omega * val_u1 + (1.0 - omega) * val_u2,
        u1=val_u1,
        u2=val_u2,
        sum_rate=float(np.sum(rates)),
        max_eps=float(np.max(eps)),
        throughput=sum_throughput(rates, eps),
        iterations=iterations,
        trace=trace or [],
        flags=flags or [],
    )


def _alternate(realization, profile, omega, sr_inf, config, p0):
    """One alternation run from a given initial power vector. Returns
    (best objective, best p, best eps, trace, flags, iterations)."""
    p = np.asarray(p0, dtype=float)
    eps_prev = None
    p_prev = p
    best = None
    trace = []
    flags = []
    converged = False
    iterations = 0

    for t in range(1, config.max_alternations + 1):
        iterations = t
        assign = optimal_errors(realization, p, profile, omega, sr_inf)
        power = solve_power(
            realization, assign.eps, omega, sr_inf, config, p_init=p
        )
        if not power.converged and "power_stage_cap" not in flags:
            flags.append("power_stage_cap")
        p = power.p
        obj = weighted_objective(
            realization, p, assign.eps, omega, sr_inf, profile.eps_max_overall
        )
        d_eps = (
            float(np.max(np.abs(assign.eps - eps_prev)))
            if eps_prev is not None
            else np.inf
        )
        d_p = float(np.max(np.abs(p - p_prev)))
        trace.append((obj, d_eps, d_p))
        if len(trace) > 1 and obj < trace[-2][0] - 1e-6:
            if "objective_decreased" not in flags:
                flags.append("objective_decreased")
        if best is None or obj > best[0]:
            best = (obj, p.copy(), assign.eps.copy())
        eps_prev = assign.eps
        p_prev = p
        if d_eps <= config.eps_tol:
            converged = True
            break

    if not converged:
        flags.append("not_converged")
    return best[0], best[1], best[2], trace, flags, iterations


def solve_joint(realization, profile, omega, config=None) -> SolveReport:
    """Alternate the closed-form error assignment and the augmented-
    Lagrangian power solve until the error vector stalls (inf-norm <=
    eps_tol) or the alternation cap is reached.

    The alternation runs twice, once from water-filling and once from zero
    power: block updates cannot cross between the transmit basin and the
    silent one (where foregoing rate buys the full reliability reward), and
    on weak channels the silent point can win jointly even though each block
    prefers to transmit given the other. The best iterate across both runs
    is returned, not necessarily the last of either.

    omega == 0 is the pure reliability regime: every error probability is
    pinned at the floor and water-filling breaks the power tie.
    """
    config = config or SolverConfig()
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must lie in [0, 1]")
    if profile.n_users != realization.n_users:
        raise ValueError("profile and realization disagree on user count")
    sr_inf = sr_infinity(realization.gamma, realization.p_max)
    n = realization.n_users

    if omega == 0.0:
        caps = profile.caps_original()
        eps = np.minimum(np.full(n, EPS_FLOOR), caps)
        p = water_filling(realization.gamma, realization.p_max)
        return make_report(
            realization, profile, p, eps, omega, sr_inf,
            iterations=1, flags=["omega_zero"],
        )

    wf_run = _alternate(
        realization, profile, omega, sr_inf, config,
        water_filling(realization.gamma, realization.p_max),
    )
    silent_run = _alternate(
        realization, profile, omega, sr_inf, config, np.zeros(n)
    )
    if silent_run[0] > wf_run[0]:
        obj, p_best, eps_best, trace, flags, iterations = silent_run
        flags = flags + ["silent_start"]
    else:
        obj, p_best, eps_best, trace, flags, iterations = wf_run
    return make_report(
        realization, profile, p_best, eps_best, omega, sr_inf,
        iterations=iterations, trace=trace, flags=flags,
    )


def _eps_grids(profile, points):
    """Per-user log grids on (EPS_FLOOR, cap], original user order."""
    return [
        np.geomspace(EPS_FLOOR, cap, points + 1)[1:]
        for cap in profile.caps_original()
    ]


def exhaustive_oracle(realization, profile, omega, grid=None):
    """Best weighted objective over the Cartesian product of a power simplex
    grid and per-user log error grids. Guarded to N <= 3 users.

    The error part is maximized exactly for each power point by sweeping the
    max level z over the union of the user grids: for a given z each user's
    best grid point is the largest one <= z because Qinv is decreasing. The
    sweep provably attains the same maximum as enumerating the full product
    grid (verified against naive enumeration in the tests).

    Returns (Allocation, objective value).
    """
    grid = grid or OracleGrid()
    n = realization.n_users
    if n > 3:
        raise ValueError("exhaustive_oracle is guarded to 3 users or fewer")
    if profile.n_users != n:
        raise ValueError("profile and realization disagree on user count")
    sr_inf = sr_infinity(realization.gamma, realization.p_max)

    grids = _eps_grids(profile, grid.eps_points)
    z_cand = np.unique(np.concatenate(grids))
    nz = z_cand.size
    qbest = np.empty((n, nz))
    idx_per_user = np.empty((n, nz), dtype=int)
    feasible = np.ones(nz, dtype=bool)
    for i, g in enumerate(grids):
        idx = np.searchsorted(g, z_cand, side="right") - 1
        feasible &= idx >= 0
        idx_per_user[i] = np.clip(idx, 0, None)
        qbest[i] = q_inverse(g[idx_per_user[i]])

    # column value pieces independent of p
    z_term = (1.0 - omega) * (1.0 - z_cand / profile.eps_max_overall)
    z_term[~feasible] = -np.inf

    pts = simplex_grid(n, realization.p_max, grid.p_points)
    best_val = -np.inf
    best_p = None
    best_zi = None
    chunk = 4096
    for lo in range(0, pts.shape[0], chunk):
        block = pts[lo : lo + chunk]
        s = block * realization.gamma
        a = dispersion_coeff(s, realization.block_length)
        logsum = np.sum(np.log1p(s), axis=1)
        vals = (omega / sr_inf) * (logsum[:, None] - a @ qbest) + z_term[None, :]
        flat = int(np.argmax(vals))
        row, col = divmod(flat, nz)
        if vals[row, col] > best_val:
            best_val = float(vals[row, col])
            best_p = block[row].copy()
            best_zi = col

    eps = np.array([g[idx_per_user[i][best_zi]] for i, g in enumerate(grids)])
    value = weighted_objective(
        realization, best_p, eps, omega, sr_inf, profile.eps_max_overall
    )
    return Allocation(p=best_p, eps=eps), value
