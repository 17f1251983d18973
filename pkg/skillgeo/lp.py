"""
Skillgeo LP - Deterministic linear programming helpers

Every LP in the package goes through solve_lp so that the backend, the
pivoting rule and the failure mapping are the same everywhere. HiGHS dual
simplex is deterministic for a fixed variable order.
"""

from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import OptimizeResult, linprog

from .errors import Infeasible, SolverError

LP_METHOD = "highs-ds"


def solve_lp(
    c: np.ndarray,
    A_ub: Optional[np.ndarray] = None,
    b_ub: Optional[np.ndarray] = None,
    A_eq: Optional[np.ndarray] = None,
    b_eq: Optional[np.ndarray] = None,
    bounds=(0, None),
    what: str = "linear program",
) -> OptimizeResult:
    """
    Minimize ``c @ x`` subject to the given constraints.

    Args:
        c: Objective coefficients
        A_ub, b_ub: Inequality constraints ``A_ub @ x <= b_ub``
        A_eq, b_eq: Equality constraints ``A_eq @ x == b_eq``
        bounds: Variable bounds (default: nonnegative)
        what: Name used in error messages

    Returns:
        scipy OptimizeResult with ``x``, ``fun`` and HiGHS marginals

    Raises:
        Infeasible: the constraints admit no solution
        SolverError: any other non-optimal status
    """
    result = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method=LP_METHOD,
    )
    if result.status == 2:
        raise Infeasible(f"{what} is infeasible: {result.message}")
    if result.status != 0:
        raise SolverError(f"{what} failed (status {result.status}): {result.message}")
    return result


def transport_lp(
    source: np.ndarray, target: np.ndarray, costs: np.ndarray
) -> Tuple[np.ndarray, float, np.ndarray]:
    """
    Exact optimal transport between two histograms.

    Returns:
        (plan, cost, column potentials). The potentials are the duals of the
        target-marginal constraints, i.e. a supergradient of the cost with
        respect to the target histogram (up to an additive constant).
    """
    n, m = costs.shape
    A_eq = np.zeros((n + m, n * m))
    for i in range(n):
        A_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        A_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([source, target * (source.sum() / target.sum())])

    result = solve_lp(
        costs.reshape(-1), A_eq=A_eq, b_eq=b_eq, what="optimal transport"
    )
    plan = np.maximum(result.x.reshape(n, m), 0.0)
    potentials = np.asarray(result.eqlin.marginals[n:], dtype=float)
    return plan, float(result.fun), potentials


def convex_weights(
    vertices: Sequence[np.ndarray], point: np.ndarray
) -> Tuple[np.ndarray, float]:
    """
    Closest convex combination of ``vertices`` to ``point`` in L1.

    Solves min Σ|r| s.t. Σ λ_v p_v + r = point, λ ≥ 0, Σλ = 1 with r split
    into positive and negative parts.

    Returns:
        (weights, L1 residual)
    """
    V = np.column_stack([np.asarray(v, dtype=float) for v in vertices])
    d, k = V.shape
    c = np.concatenate([np.zeros(k), np.ones(2 * d)])
    A_eq = np.zeros((d + 1, k + 2 * d))
    A_eq[:d, :k] = V
    A_eq[:d, k : k + d] = np.eye(d)
    A_eq[:d, k + d :] = -np.eye(d)
    A_eq[d, :k] = 1.0
    b_eq = np.concatenate([np.asarray(point, dtype=float), [1.0]])

    result = solve_lp(c, A_eq=A_eq, b_eq=b_eq, what="convex weights")
    weights = np.maximum(result.x[:k], 0.0)
    weights = weights / weights.sum()
    return weights, float(result.fun)
