"""Brute-force verification: the sampled problem as an explicit dense QP.

The cost is exactly quadratic in the stacked control vector, so the QP data
is reconstructed from O((mN)^2) plain cost evaluations:

    c      = C(0)
    g_j    = (C(e_j) - C(-e_j)) / 2
    Hq_jj  = C(e_j) + C(-e_j) - 2 C(0)
    Hq_jk  = C(e_j + e_k) - C(e_j) - C(e_k) + C(0)     (j != k)

Nothing of the Riccati path is reused: only the simulator produces the cost
values, so agreement between -Hq^{-1} g and the sweep's coefficients is
independent evidence.  Controls are stacked interval-major: component
j = i*m + r is entry r of U_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NonFinite, NotPD, TooLarge
from .problem import LQProblem, SamplingGrid
from .riccati import solve as riccati_solve
from .simulate import costs_of_control_batch

GUARD_MN = 400


@dataclass(frozen=True, eq=False)
class DenseQP:
    """C(u_U) = 1/2 <Hq U, U> + <g, U> + c over stacked control vectors U."""

    Hq: np.ndarray
    g: np.ndarray
    c: float

    def value(self, U: np.ndarray) -> float:
        U = np.asarray(U, dtype=float)
        return float(0.5 * (U @ (self.Hq @ U)) + self.g @ U + self.c)


@dataclass(frozen=True, eq=False)
class CrossCheckReport:
    U_sweep: np.ndarray
    U_qp: np.ndarray
    diffs: np.ndarray
    max_abs_diff: float
    max_rel_diff: float
    cost_sweep: float
    cost_qp: float
    cost_diff: float
    certificate_norm: float

    def to_jsonable(self) -> dict:
        return {
            "U_sweep": self.U_sweep.tolist(),
            "U_qp": self.U_qp.tolist(),
            "diffs": self.diffs.tolist(),
            "max_abs_diff": self.max_abs_diff,
            "max_rel_diff": self.max_rel_diff,
            "cost_sweep": self.cost_sweep,
            "cost_qp": self.cost_qp,
            "cost_diff": self.cost_diff,
            "certificate_norm": self.certificate_norm,
        }


def assemble_qp(p: LQProblem, grid: SamplingGrid, M: int = 64) -> DenseQP:
    """Reconstruct the dense QP from cost evaluations of basis controls."""
    dim = p.m * grid.N
    if dim > GUARD_MN:
        raise TooLarge(f"oracle guard exceeded: mN = {dim} > {GUARD_MN}")
    pairs = [(j, k) for j in range(dim) for k in range(j + 1, dim)]
    batch = np.zeros((1 + 2 * dim + len(pairs), grid.N, p.m))
    flat = batch.reshape(batch.shape[0], dim)
    for j in range(dim):
        flat[1 + j, j] = 1.0
        flat[1 + dim + j, j] = -1.0
    for idx, (j, k) in enumerate(pairs):
        flat[1 + 2 * dim + idx, j] = 1.0
        flat[1 + 2 * dim + idx, k] = 1.0

    costs = costs_of_control_batch(p, grid, batch, M)
    if not np.all(np.isfinite(costs)):
        raise NonFinite("oracle cost evaluations are not finite")
    c = float(costs[0])
    Cp = costs[1 : 1 + dim]
    Cm = costs[1 + dim : 1 + 2 * dim]
    g = 0.5 * (Cp - Cm)
    Hq = np.zeros((dim, dim))
    np.fill_diagonal(Hq, Cp + Cm - 2.0 * c)
    for idx, (j, k) in enumerate(pairs):
        val = costs[1 + 2 * dim + idx] - Cp[j] - Cp[k] + c
        Hq[j, k] = val
        Hq[k, j] = val
    return DenseQP(Hq=Hq, g=g, c=c)


def solve_qp(qp: DenseQP):
    """U_hat = -Hq^{-1} g via symmetric positive-definite factorization."""
    try:
        factor = cho_factor(qp.Hq, lower=True)
    except LinAlgError as exc:
        raise NotPD("Hq", None, float(np.linalg.eigvalsh(qp.Hq)[0])) from exc
    return -cho_solve(factor, qp.g)


def cross_check(p: LQProblem, grid: SamplingGrid, M: int = 64) -> CrossCheckReport:
    """Solve by sweep and by QP, report the disagreement."""
    _, _, sol = riccati_solve(p, grid, M)
    qp = assemble_qp(p, grid, M)
    U_qp = solve_qp(qp)
    U_sweep = sol.U.reshape(-1)
    diffs = np.abs(U_sweep - U_qp)
    max_abs = float(np.max(diffs)) if diffs.size else 0.0
    scale = 1.0 + (float(np.max(np.abs(U_qp))) if U_qp.size else 0.0)
    cost_qp = qp.value(U_qp)
    return CrossCheckReport(
        U_sweep=U_sweep,
        U_qp=U_qp,
        diffs=diffs,
        max_abs_diff=max_abs,
        max_rel_diff=max_abs / scale,
        cost_sweep=float(sol.predicted_cost),
        cost_qp=cost_qp,
        cost_diff=abs(float(sol.predicted_cost) - cost_qp),
        certificate_norm=float(np.linalg.norm(qp.Hq @ U_qp + qp.g)),
    )
