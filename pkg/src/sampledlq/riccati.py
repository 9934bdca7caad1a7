"""Backward Riccati-type recursion and forward synthesis of the optimal control.

The sweep runs i = N-1 .. 0 from the terminal values K_N = S, J_N = 0, Y_N = 0:

    F_i = <K_{i+1} ZO, ZO> + WZOmegaX2 + RV2 + 2 <J_{i+1}, ZO> + Y_{i+1}
    G_i = Z^T K_{i+1} ZO + ZWZOmegaX + Z^T J_{i+1}
    H_i = ZB^T K_{i+1} ZO + ZBWZOmegaX - RV + ZB^T J_{i+1}
    P_i = ZB^T K_{i+1} Z  + ZBWZ
    Q_i = Z^T  K_{i+1} Z  + ZWZ
    T_i = ZB^T K_{i+1} ZB + ZBWZB + Rbar

    K_i = Q_i - P_i^T T_i^{-1} P_i
    J_i = G_i - P_i^T T_i^{-1} H_i
    Y_i = F_i - <T_i^{-1} H_i, H_i>

with Z = Zstep_i, ZB = ZB_i, ZO = ZOmega_i.  The optimal coefficients follow
forward as U_i = -T_i^{-1} (P_i q(s_i) + H_i), and the cost of the optimal
sampled control is 1/2 <K_0 q_a, q_a> + <J_0, q_a> + 1/2 Y_0.

Because the last interval's ZOmega absorbs the -q_b shift, the forward
recursion's final node is the shifted terminal state q(b) - q_b; every stated
identity (value function, costate linearity) then holds verbatim at i = N.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .blocks import compute_all_blocks
from .errors import DimensionMismatch, IndexOutOfRange, TNotPD
from .problem import LQProblem, SamplingGrid


@dataclass(frozen=True, eq=False)
class SweepStep:
    """All recursion quantities for one interval index."""

    i: int
    F: float
    G: np.ndarray   # n
    H: np.ndarray   # m
    P: np.ndarray   # m x n
    Q: np.ndarray   # n x n
    T: np.ndarray   # m x m
    T_factor: tuple
    K: np.ndarray   # n x n, this is K_i
    J: np.ndarray   # n
    Y: float
    gain: np.ndarray    # m x n, -T^{-1} P
    offset: np.ndarray  # m,   -T^{-1} H


@dataclass(frozen=True, eq=False)
class RiccatiSweep:
    steps: tuple
    K_N: np.ndarray
    J_N: np.ndarray
    Y_N: float

    @property
    def N(self) -> int:
        return len(self.steps)


@dataclass(frozen=True, eq=False)
class SampledSolution:
    grid: Optional[SamplingGrid]
    U: np.ndarray        # (N, m)
    q_nodes: np.ndarray  # (N+1, n); the last node is q(b) - q_b
    predicted_cost: float
    simulated_cost: Optional[float] = None

    def with_simulated_cost(self, value: float) -> "SampledSolution":
        return replace(self, simulated_cost=float(value))


def backward_sweep(blocks: list, S: np.ndarray) -> RiccatiSweep:
    """Run the recursion over the given blocks from terminal weight S."""
    if not blocks:
        raise DimensionMismatch("need at least one interval block")
    n = blocks[0].Zstep.shape[0]
    S = np.asarray(S, dtype=float)
    if S.shape != (n, n):
        raise DimensionMismatch(f"S has shape {S.shape}, expected {(n, n)}")
    K_N = 0.5 * (S + S.T)
    J_N = np.zeros(n)
    Y_N = 0.0

    K, J, Y = K_N, J_N, Y_N
    steps = []
    for blk in reversed(blocks):
        Z, ZB, ZO = blk.Zstep, blk.ZB, blk.ZOmega
        KZ = K @ Z
        KZB = K @ ZB
        KZO_J = K @ ZO + J
        F = float(ZO @ (K @ ZO) + blk.WZOmegaX2 + blk.RV2 + 2.0 * (J @ ZO) + Y)
        G = Z.T @ KZO_J + blk.ZWZOmegaX
        H = ZB.T @ KZO_J + blk.ZBWZOmegaX - blk.RV
        P = ZB.T @ KZ + blk.ZBWZ
        Q = Z.T @ KZ + blk.ZWZ
        Q = 0.5 * (Q + Q.T)
        T = ZB.T @ KZB + blk.ZBWZB + blk.Rbar
        T = 0.5 * (T + T.T)
        try:
            factor = cho_factor(T, lower=True)
        except LinAlgError as exc:
            raise TNotPD(blk.i) from exc
        TinvP = cho_solve(factor, P)
        TinvH = cho_solve(factor, H)
        K_new = Q - P.T @ TinvP
        K_new = 0.5 * (K_new + K_new.T)
        J_new = G - P.T @ TinvH
        Y_new = float(F - H @ TinvH)
        steps.append(
            SweepStep(
                i=blk.i,
                F=F,
                G=G,
                H=H,
                P=P,
                Q=Q,
                T=T,
                T_factor=factor,
                K=K_new,
                J=J_new,
                Y=Y_new,
                gain=-TinvP,
                offset=-TinvH,
            )
        )
        K, J, Y = K_new, J_new, Y_new
    steps.reverse()
    return RiccatiSweep(steps=tuple(steps), K_N=K_N, J_N=J_N, Y_N=Y_N)


def forward_synthesis(
    sweep: RiccatiSweep, blocks: list, q_a: np.ndarray, grid: Optional[SamplingGrid] = None
) -> SampledSolution:
    """Optimal coefficients and state samples by forward induction from q_a."""
    if sweep.N != len(blocks):
        raise DimensionMismatch(f"sweep has {sweep.N} steps, blocks {len(blocks)}")
    q = np.asarray(q_a, dtype=float)
    n = q.shape[0]
    if sweep.K_N.shape != (n, n):
        raise DimensionMismatch(f"q_a has dimension {n}, sweep expects {sweep.K_N.shape[0]}")
    q_nodes = [q]
    U = []
    for step, blk in zip(sweep.steps, blocks):
        u = step.gain @ q + step.offset
        q = blk.Zstep @ q + blk.ZB @ u + blk.ZOmega
        U.append(u)
        q_nodes.append(q)
    predicted = value_function(sweep, 0, q_nodes[0])
    return SampledSolution(
        grid=grid,
        U=np.array(U),
        q_nodes=np.array(q_nodes),
        predicted_cost=predicted,
    )


def value_function(sweep: RiccatiSweep, j: int, y: np.ndarray) -> float:
    """V_j(y) = 1/2 <K_j y, y> + <J_j, y> + 1/2 Y_j."""
    if not 0 <= j <= sweep.N:
        raise IndexOutOfRange(f"value function index {j} out of range for N={sweep.N}")
    y = np.asarray(y, dtype=float)
    if j == sweep.N:
        K, J, Y = sweep.K_N, sweep.J_N, sweep.Y_N
    else:
        step = sweep.steps[j]
        K, J, Y = step.K, step.J, step.Y
    return float(0.5 * (y @ (K @ y)) + J @ y + 0.5 * Y)


def closed_loop_gain(sweep: RiccatiSweep, i: int):
    """(gain_i, offset_i) with U_i = gain_i q(s_i) + offset_i."""
    if not 0 <= i < sweep.N:
        raise IndexOutOfRange(f"gain index {i} out of range for N={sweep.N}")
    step = sweep.steps[i]
    return step.gain, step.offset


def solve(p: LQProblem, grid: SamplingGrid, M: int = 64):
    """Full pipeline: blocks, backward sweep, forward synthesis.

    Returns (blocks, sweep, solution).
    """
    blocks = compute_all_blocks(p, grid, M)
    sweep = backward_sweep(blocks, p.S)
    solution = forward_synthesis(sweep, blocks, p.q_a, grid=grid)
    return blocks, sweep, solution
