"""Optimal per-user error probabilities for a fixed power vector.

For fixed powers the weighted objective reduces to minimizing

    (omega/sr_inf) * sum_i a_i * Qinv(eps_i) + ((1-omega)/cap_N) * max(eps)

over 0 < eps_i <= cap_i, where a_i is the dispersion coefficient of user i
and cap_N the largest QoS cap. The problem is convex and admits a closed
form: users with the strictest caps sit at their caps while the rest share a
common level beta_k, found by scanning N candidate branches. A KKT-residual
checker and a log-grid search oracle verify the closed form independently.
"""

from dataclasses import dataclass

import numpy as np

from .channel import NetworkRealization
from .kernels import EPS_FLOOR, dispersion_coeff, q_function, q_inverse

_SQRT_2PI = np.sqrt(2.0 * np.pi)

# absolute tolerance for interval-membership tests at branch endpoints
EDGE_TOL = 1e-12

# absolute tolerance for detecting active constraints in the KKT checker
_ACTIVE_TOL = 1e-11


@dataclass(frozen=True)
class SortedQosProfile:
    """Per-user error caps sorted ascending, with the sort permutation.

    order[j] gives the original index of the user in sorted slot j; ties are
    broken by original index so the sort is deterministic.
    """

    eps_max_sorted: tuple
    order: tuple

    @classmethod
    def from_caps(cls, eps_max):
        caps = np.asarray(eps_max, dtype=float)
        if caps.ndim != 1 or caps.size < 1:
            raise ValueError("eps_max must be a nonempty 1-D sequence")
        if np.any(caps <= 0.0) or np.any(caps >= 0.5):
            raise ValueError("every eps_max must lie in (0, 0.5)")
        order = np.argsort(caps, kind="stable")
        return cls(
            eps_max_sorted=tuple(caps[order]),
            order=tuple(int(i) for i in order),
        )

    @property
    def n_users(self) -> int:
        return len(self.eps_max_sorted)

    @property
    def eps_max_overall(self) -> float:
        return self.eps_max_sorted[-1]

    def caps_original(self) -> np.ndarray:
        """Caps in original user order."""
        return self.to_original(np.asarray(self.eps_max_sorted))

    def to_original(self, sorted_values) -> np.ndarray:
        """Scatter a sorted-order vector back to original user order."""
        out = np.empty(self.n_users)
        out[list(self.order)] = np.asarray(sorted_values, dtype=float)
        return out

    def to_sorted(self, original_values) -> np.ndarray:
        """Gather an original-order vector into sorted-cap order."""
        return np.asarray(original_values, dtype=float)[list(self.order)]


@dataclass(frozen=True)
class ErrorAssignment:
    """Error probabilities in original user order, their max z, and the
    branch index in [1, N+1] that produced them (N+1 = caps fallback)."""

    eps: np.ndarray
    z: float
    branch: int


def _sorted_dispersion_terms(realization, p, profile):
    """sqrt(s^2 + 2s)/(1+s) per user in sorted-cap order, s = gamma*p."""
    s = profile.to_sorted(realization.gamma) * profile.to_sorted(p)
    return np.sqrt(s * (s + 2.0)) / (1.0 + s)


def beta_k(realization, p, profile, omega, sr_inf, k):
    """Candidate shared error level for branch k (1-based, sorted order).

    Returns (value, degenerate). value is None when the logarithm's argument
    falls below 1, so no real candidate exists and the branch test fails.
    When every user from slot k on has zero power the candidate degenerates
    to its limit 0, returned with degenerate=True.
    """
    n = realization.n_users
    if not 1 <= k <= n:
        raise ValueError("branch index k must lie in [1, n_users]")
    terms = _sorted_dispersion_terms(realization, p, profile)
    tail = float(np.sum(terms[k - 1 :]))
    if tail == 0.0:
        return 0.0, True
    num = np.sqrt(realization.block_length) * (1.0 - omega) * sr_inf
    den = profile.eps_max_overall * omega * _SQRT_2PI * tail
    arg = num / den
    if arg < 1.0:
        return None, False
    return float(q_function(np.sqrt(2.0 * np.log(arg)))), False


def _branch_assignment(profile, k, level) -> ErrorAssignment:
    """Caps for sorted slots below k, the constant level from slot k up."""
    caps = np.asarray(profile.eps_max_sorted)
    level = min(max(level, EPS_FLOOR), caps[k - 1])
    eps_sorted = np.concatenate([caps[: k - 1], np.full(profile.n_users - k + 1, level)])
    return ErrorAssignment(
        eps=profile.to_original(eps_sorted),
        z=float(eps_sorted.max()),
        branch=k,
    )


def optimal_errors(realization, p, profile, omega, sr_inf) -> ErrorAssignment:
    """Closed-form minimizer of the fixed-power error subproblem.

    The objective restricted to a common level z on the sorted segment
    (cap_{k-1}, cap_k] is convex with stationary point beta_k, so scanning
    segments in order locates the global minimum: it is either an interior
    beta_k landing in its own segment (caps below slot k, the constant
    beta_k from slot k up), or a saturated level at the cap separating a
    still-decreasing segment from an already-increasing one. With no
    crossing at all, every user sits at its cap.
    """
    if not 0.0 < omega <= 1.0:
        raise ValueError("omega must lie in (0, 1] for the error subproblem")
    if sr_inf <= 0.0:
        raise ValueError("sr_inf must be positive")
    n = realization.n_users
    if profile.n_users != n:
        raise ValueError("profile and realization disagree on user count")
    caps = np.asarray(profile.eps_max_sorted)

    if omega == 1.0:
        # no weight on the error objective; larger eps only helps the rate
        return ErrorAssignment(
            eps=profile.to_original(caps), z=float(caps[-1]), branch=n + 1
        )

    for k in range(1, n + 1):
        b, degenerate = beta_k(realization, p, profile, omega, sr_inf, k)
        if degenerate:
            b = 0.0
        if b is None:
            continue  # objective still decreasing across this whole segment
        lo = 0.0 if k == 1 else caps[k - 2]
        if b > caps[k - 1] + EDGE_TOL:
            continue
        if b > lo - EDGE_TOL:
            return _branch_assignment(profile, k, b)
        # stationary point fell below the segment: the previous cap is the
        # minimizer (decreasing before it, increasing after it)
        if k == 1:
            return _branch_assignment(profile, 1, EPS_FLOOR)
        return _branch_assignment(profile, k - 1, caps[k - 2])

    return ErrorAssignment(
        eps=profile.to_original(caps),
        z=float(caps[-1]),
        branch=n + 1,
    )


def subproblem_objective(realization, p, profile, omega, sr_inf, eps) -> float:
    """Value of the fixed-power error objective at eps (original order)."""
    eps = np.maximum(np.asarray(eps, dtype=float), EPS_FLOOR)
    a = dispersion_coeff(realization.gamma * np.asarray(p), realization.block_length)
    cost = (omega / sr_inf) * float(np.sum(a * q_inverse(eps)))
    return cost + (1.0 - omega) / profile.eps_max_overall * float(eps.max())


def kkt_residual(assignment, realization, p, profile, omega, sr_inf) -> float:
    """Max absolute residual of the subproblem's KKT system at an assignment.

    Multipliers are rebuilt from the active-set structure: lambda_i for the
    eps_i <= z couplings, nu_i for the caps, eta for z <= cap_N. Slots where
    both constraints are active get their stationarity weight split so the
    z-stationarity equation is matched as closely as possible.
    """
    n = realization.n_users
    eps_s = profile.to_sorted(assignment.eps)
    caps = np.asarray(profile.eps_max_sorted)
    z = float(assignment.z)
    a = dispersion_coeff(
        profile.to_sorted(realization.gamma) * profile.to_sorted(p),
        realization.block_length,
    )
    y = q_inverse(np.maximum(eps_s, EPS_FLOOR))
    weight = (omega / sr_inf) * a * _SQRT_2PI * np.exp(0.5 * y * y)

    lam_active = (z - eps_s) <= _ACTIVE_TOL
    nu_active = (caps - eps_s) <= _ACTIVE_TOL
    eta_free = (profile.eps_max_overall - z) <= _ACTIVE_TOL

    lam = np.zeros(n)
    nu = np.zeros(n)
    lam_only = lam_active & ~nu_active
    nu_only = nu_active & ~lam_active
    flexible = lam_active & nu_active
    lam[lam_only] = weight[lam_only]
    nu[nu_only] = weight[nu_only]

    target = (1.0 - omega) / profile.eps_max_overall
    need = target - float(lam.sum())
    for i in np.flatnonzero(flexible):
        take = min(max(need, 0.0), weight[i])
        lam[i] = take
        nu[i] = weight[i] - take
        need -= take
    eta = max(0.0, float(lam.sum()) - target) if eta_free else 0.0

    inactive = ~lam_active & ~nu_active
    residuals = [
        # stationarity in eps: -weight + lam + nu = 0
        float(np.max(np.abs(-weight + lam + nu))) if n else 0.0,
        # stationarity in z
        abs(target - float(lam.sum()) + eta),
        # complementary slackness
        float(np.max(lam * np.abs(z - eps_s))),
        float(np.max(nu * np.abs(caps - eps_s))),
        eta * abs(profile.eps_max_overall - z),
        # primal feasibility
        float(np.max(np.maximum(eps_s - z, 0.0))),
        float(np.max(np.maximum(eps_s - caps, 0.0))),
        max(z - profile.eps_max_overall, 0.0),
        float(np.max(np.maximum(-eps_s, 0.0))),
    ]
    # slots touching neither constraint violate stationarity outright
    if np.any(inactive):
        residuals.append(float(np.max(weight[inactive])))
    return max(residuals)


def grid_search_errors(realization, p, profile, omega, sr_inf, points_per_user=10_000):
    """Brute-force oracle: minimize the error subproblem over per-user log
    grids on (EPS_FLOOR, cap_i].

    The max coupling is handled by sweeping candidate levels z over the union
    of all grids; for each z every user takes its largest grid point <= z,
    which is optimal there because Qinv decreases in eps. The sweep returns
    exactly the best point of the full Cartesian product grid.

    Returns (eps in original order, objective value).
    """
    caps_orig = profile.caps_original()
    a = dispersion_coeff(realization.gamma * np.asarray(p), realization.block_length)
    c = (omega / sr_inf) * a
    d = (1.0 - omega) / profile.eps_max_overall

    grids = [
        np.geomspace(EPS_FLOOR, cap, points_per_user + 1)[1:] for cap in caps_orig
    ]
    qcosts = [c[i] * q_inverse(g) for i, g in enumerate(grids)]

    z_cand = np.unique(np.concatenate(grids))
    total = d * z_cand
    idx_per_user = []
    feasible = np.ones(z_cand.size, dtype=bool)
    for g, qc in zip(grids, qcosts):
        idx = np.searchsorted(g, z_cand, side="right") - 1
        feasible &= idx >= 0
        idx_per_user.append(idx)
        total += qc[np.clip(idx, 0, None)]

    total[~feasible] = np.inf
    best = int(np.argmin(total))
    eps = np.array([g[idx[best]] for g, idx in zip(grids, idx_per_user)])
    return eps, subproblem_objective(realization, p, profile, omega, sr_inf, eps)
