"""Trajectories, cost evaluation, stationarity residuals, averaged controls.

State and costate use the same fixed-step RK4 scheme and node layout as the
interval propagation (2M half-steps, 2M+1 stored nodes per interval), so the
cost quadrature here and the block quadrature integrate the same discrete
functional.  The costate runs backward from p(b) = -S (q(b) - q_b); RK4
stages falling between stored state nodes use linear interpolation of q.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .blocks import simpson_weights
from .errors import DimensionMismatch, NodeMismatch, NonFinite, ValidationError
from .problem import LQProblem, SamplingGrid


@dataclass(frozen=True, eq=False)
class PiecewiseConstantControl:
    """Control held constant on each sampling interval: coefficients U_i."""

    grid: SamplingGrid
    U: np.ndarray  # (N, m)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        if U.shape[0] != self.grid.N:
            raise DimensionMismatch(f"{U.shape[0]} coefficients for {self.grid.N} intervals")
        if not np.all(np.isfinite(U)):
            raise NonFinite("control coefficients are not finite")
        U.setflags(write=False)
        object.__setattr__(self, "U", U)

    @property
    def m(self) -> int:
        return self.U.shape[1]

    def __call__(self, t: float) -> np.ndarray:
        """Right-continuous evaluation, with u(b) = U_{N-1}."""
        idx = int(np.searchsorted(self.grid.s, t, side="right") - 1)
        idx = min(max(idx, 0), self.grid.N - 1)
        return self.U[idx]


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: SamplingGrid
    times: tuple   # per interval, (2M+1,) node times
    qs: tuple      # per interval, (2M+1, n) states
    q_end: np.ndarray

    @property
    def substeps(self) -> int:
        return (self.times[0].shape[0] - 1) // 2


@dataclass(frozen=True, eq=False)
class CostateTrajectory:
    grid: SamplingGrid
    times: tuple
    ps: tuple
    p_end: np.ndarray

    @property
    def substeps(self) -> int:
        return (self.times[0].shape[0] - 1) // 2


def _same_grid(g1: SamplingGrid, g2: SamplingGrid) -> bool:
    return g1 is g2 or (np.array_equal(g1.s, g2.s))


def _rk4_forward(As, Cs, y0, delta):
    """Nodes of y' = A(t) y + C(t): coefficient values on the half-step grid."""
    steps = (As.shape[0] - 1) // 2
    out = np.empty((steps + 1,) + y0.shape)
    out[0] = y0
    y = y0
    hd = 0.5 * delta
    sixth = delta / 6.0
    for k in range(steps):
        j = 2 * k
        A0, A1, A2 = As[j], As[j + 1], As[j + 2]
        C0, C1, C2 = Cs[j], Cs[j + 1], Cs[j + 2]
        k1 = A0 @ y + C0
        k2 = A1 @ (y + hd * k1) + C1
        k3 = A1 @ (y + hd * k2) + C1
        k4 = A2 @ (y + delta * k3) + C2
        y = y + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        out[k + 1] = y
    return out


def _half_grid(grid: SamplingGrid, i: int, M: int) -> np.ndarray:
    return np.linspace(grid.s[i], grid.s[i + 1], 4 * M + 1)


def simulate_state(p: LQProblem, u: PiecewiseConstantControl, M: int = 64) -> Trajectory:
    """Integrate dq/dt = A q + B U_i + omega from q(a) = q_a."""
    if M < 1:
        raise ValidationError(f"need M >= 1, got {M}")
    grid = u.grid
    q = np.asarray(p.q_a, dtype=float)
    times = []
    qs = []
    for i in range(grid.N):
        half = _half_grid(grid, i, M)
        delta = float(grid.h[i]) / (2 * M)
        As = p.A.eval_many(half)
        Cs = (p.B.eval_many(half) @ u.U[i]) + p.omega.eval_many(half)
        nodes = _rk4_forward(As, Cs, q, delta)
        times.append(half[::2])
        qs.append(nodes)
        q = nodes[-1]
    if not np.all(np.isfinite(q)):
        raise NonFinite("state simulation diverged")
    return Trajectory(grid=grid, times=tuple(times), qs=tuple(qs), q_end=q)


def terminal_cost(p: LQProblem, q_end: np.ndarray) -> float:
    d = q_end - p.q_b
    return float(0.5 * (d @ (p.S @ d)))


def running_costs(p: LQProblem, u: PiecewiseConstantControl, traj: Trajectory) -> np.ndarray:
    """Per-interval values of 1/2 int [<W(q-x), q-x> + <R(U_i-v), U_i-v>]."""
    if not _same_grid(traj.grid, u.grid):
        raise NodeMismatch("trajectory and control use different grids")
    grid = traj.grid
    out = np.empty(grid.N)
    for i in range(grid.N):
        nodes = traj.times[i]
        num = nodes.shape[0]
        w = simpson_weights(num, float(grid.h[i]) / (num - 1))
        Wk = p.W.eval_many(nodes)
        Rk = p.R.eval_many(nodes)
        e = traj.qs[i] - p.x_ref.eval_many(nodes)
        We = (Wk @ e[..., None])[..., 0]
        du = u.U[i] - p.v_ref.eval_many(nodes)
        Rdu = (Rk @ du[..., None])[..., 0]
        out[i] = 0.5 * (
            np.einsum("k,ka,ka->", w, We, e) + np.einsum("k,ka,ka->", w, Rdu, du)
        )
    return out


def evaluate_cost(p: LQProblem, u: PiecewiseConstantControl, traj: Trajectory) -> float:
    """C(u) by composite Simpson on the trajectory nodes plus the terminal term."""
    return float(np.sum(running_costs(p, u, traj)) + terminal_cost(p, traj.q_end))


def _costate_nodes(As, Ws, xs, qs, p_hi, delta):
    """Backward RK4 nodes of dp/dt = -A^T p + W (q - x) on one interval.

    As, Ws, xs are half-grid values; qs are the 2M+1 stored state nodes, and
    q at half-step stages is the average of the adjacent nodes.
    """
    num_half = As.shape[0]
    q_half = np.empty((num_half,) + qs.shape[1:])
    q_half[::2] = qs
    q_half[1::2] = 0.5 * (qs[:-1] + qs[1:])
    forcing = (Ws @ (q_half - xs)[..., None])[..., 0]
    steps = (num_half - 1) // 2
    out = np.empty((steps + 1,) + p_hi.shape)
    out[-1] = p_hi
    pvec = p_hi
    hd = 0.5 * delta
    sixth = delta / 6.0
    for k in range(steps - 1, -1, -1):
        j = 2 * k
        At0, At1, At2 = As[j].T, As[j + 1].T, As[j + 2].T
        g0, g1, g2 = forcing[j], forcing[j + 1], forcing[j + 2]
        k1 = -(At2 @ pvec) + g2
        k2 = -(At1 @ (pvec - hd * k1)) + g1
        k3 = -(At1 @ (pvec - hd * k2)) + g1
        k4 = -(At0 @ (pvec - delta * k3)) + g0
        pvec = pvec - sixth * (k1 + 2.0 * (k2 + k3) + k4)
        out[k] = pvec
    return out


def simulate_costate(p: LQProblem, traj: Trajectory, M: int = 64) -> CostateTrajectory:
    """Integrate the costate backward from p(b) = -S (q(b) - q_b) along traj."""
    if traj.substeps != M:
        raise NodeMismatch(f"trajectory was stored with M={traj.substeps}, asked for M={M}")
    grid = traj.grid
    p_end = -(p.S @ (traj.q_end - p.q_b))
    ps = [None] * grid.N
    p_hi = p_end
    for i in range(grid.N - 1, -1, -1):
        half = _half_grid(grid, i, M)
        delta = float(grid.h[i]) / (2 * M)
        As = p.A.eval_many(half)
        Ws = p.W.eval_many(half)
        xs = p.x_ref.eval_many(half)
        nodes = _costate_nodes(As, Ws, xs, traj.qs[i], p_hi, delta)
        ps[i] = nodes
        p_hi = nodes[0]
    if not np.all(np.isfinite(p_hi)):
        raise NonFinite("costate simulation diverged")
    return CostateTrajectory(grid=grid, times=traj.times, ps=tuple(ps), p_end=p_end)


def pmp_residual_sampled(p: LQProblem, sol, costate: CostateTrajectory) -> np.ndarray:
    """Residuals r_i = U_i - Rbar_i^{-1} (RV_i + int B^T p ds), one row per interval."""
    grid = costate.grid
    if sol.grid is not None and not _same_grid(sol.grid, grid):
        raise NodeMismatch("solution and costate use different grids")
    U = np.asarray(sol.U, dtype=float)
    if U.shape[0] != grid.N:
        raise NodeMismatch(f"{U.shape[0]} coefficients for {grid.N} intervals")
    out = np.empty_like(U)
    for i in range(grid.N):
        nodes = costate.times[i]
        num = nodes.shape[0]
        w = simpson_weights(num, float(grid.h[i]) / (num - 1))
        Rk = p.R.eval_many(nodes)
        Bk = p.B.eval_many(nodes)
        vk = p.v_ref.eval_many(nodes)
        Rbar = np.einsum("k,kij->ij", w, Rk)
        RV = np.einsum("k,kij,kj->i", w, Rk, vk)
        integral = np.einsum("k,kab,ka->b", w, Bk, costate.ps[i])
        rhs = RV + integral
        out[i] = U[i] - cho_solve(cho_factor(0.5 * (Rbar + Rbar.T), lower=True), rhs)
    return out


def _eval_control_function(u_fn: Callable, ts: np.ndarray, m: int) -> np.ndarray:
    vals = np.empty((ts.shape[0], m))
    for k, t in enumerate(ts):
        vals[k] = np.atleast_1d(np.asarray(u_fn(float(t)), dtype=float))
    if not np.all(np.isfinite(vals)):
        raise NonFinite("control function returned non-finite values")
    return vals


def _dense_state(p: LQProblem, u_half: np.ndarray, half: np.ndarray, delta: float) -> np.ndarray:
    As = p.A.eval_many(half)
    Cs = (p.B.eval_many(half) @ u_half[..., None])[..., 0] + p.omega.eval_many(half)
    return _rk4_forward(As, Cs, np.asarray(p.q_a, dtype=float), delta)


def pmp_residual_permanent(p: LQProblem, u_fn: Callable, M: int = 512) -> float:
    """max_t || u(t) - v(t) - R(t)^{-1} B(t)^T p(t) || under the control u_fn.

    State and costate are integrated densely over [a, b] with 2M RK4 steps.
    """
    if M < 1:
        raise ValidationError(f"need M >= 1, got {M}")
    half = np.linspace(p.a, p.b, 4 * M + 1)
    delta = (p.b - p.a) / (2 * M)
    u_half = _eval_control_function(u_fn, half, p.m)
    qs = _dense_state(p, u_half, half, delta)
    if not np.all(np.isfinite(qs[-1])):
        raise NonFinite("state simulation diverged")
    As = p.A.eval_many(half)
    Ws = p.W.eval_many(half)
    xs = p.x_ref.eval_many(half)
    p_hi = -(p.S @ (qs[-1] - p.q_b))
    ps = _costate_nodes(As, Ws, xs, qs, p_hi, delta)

    nodes = half[::2]
    Rn = p.R.eval_many(nodes)
    Bn = p.B.eval_many(nodes)
    vn = p.v_ref.eval_many(nodes)
    rhs = np.einsum("kab,ka->kb", Bn, ps)
    pull = np.linalg.solve(Rn, rhs[..., None])[..., 0]
    res = u_half[::2] - vn - pull
    return float(np.max(np.linalg.norm(res, axis=1)))


def cost_of_permanent(p: LQProblem, u_fn: Callable, M: int = 512) -> float:
    """C(u_fn) for an arbitrary (not piecewise-constant) control, densely simulated."""
    half = np.linspace(p.a, p.b, 4 * M + 1)
    delta = (p.b - p.a) / (2 * M)
    u_half = _eval_control_function(u_fn, half, p.m)
    qs = _dense_state(p, u_half, half, delta)
    nodes = half[::2]
    w = simpson_weights(nodes.shape[0], (p.b - p.a) / (2 * M))
    Wk = p.W.eval_many(nodes)
    Rk = p.R.eval_many(nodes)
    e = qs - p.x_ref.eval_many(nodes)
    We = (Wk @ e[..., None])[..., 0]
    du = u_half[::2] - p.v_ref.eval_many(nodes)
    Rdu = (Rk @ du[..., None])[..., 0]
    running = 0.5 * (np.einsum("k,ka,ka->", w, We, e) + np.einsum("k,ka,ka->", w, Rdu, du))
    return float(running + terminal_cost(p, qs[-1]))


def averaged_control(u_fn: Callable, grid: SamplingGrid, M: int = 64, m: int = 1) -> PiecewiseConstantControl:
    """Interval means U_i = (1/h_i) int u(s) ds by composite Simpson."""
    U = np.empty((grid.N, m))
    for i in range(grid.N):
        nodes = _half_grid(grid, i, M)[::2]
        w = simpson_weights(nodes.shape[0], float(grid.h[i]) / (2 * M))
        vals = _eval_control_function(u_fn, nodes, m)
        U[i] = (w @ vals) / float(grid.h[i])
    return PiecewiseConstantControl(grid=grid, U=U)


def costs_of_control_batch(p: LQProblem, grid: SamplingGrid, Us: np.ndarray, M: int = 64) -> np.ndarray:
    """C(u) for a batch of piecewise-constant controls, shape (L, N, m) -> (L,).

    Column-for-column equivalent to simulate_state + evaluate_cost per
    control; the RK4 steps and Simpson sums are shared across the batch.
    """
    Us = np.asarray(Us, dtype=float)
    if Us.ndim != 3 or Us.shape[1] != grid.N or Us.shape[2] != p.m:
        raise DimensionMismatch(f"control batch has shape {Us.shape}, expected (L, {grid.N}, {p.m})")
    L = Us.shape[0]
    q = np.broadcast_to(np.asarray(p.q_a, dtype=float)[:, None], (p.n, L)).copy()
    run = np.zeros(L)
    for i in range(grid.N):
        half = _half_grid(grid, i, M)
        nodes = half[::2]
        delta = float(grid.h[i]) / (2 * M)
        As = p.A.eval_many(half)
        Ucol = Us[:, i, :].T
        Cs = p.B.eval_many(half) @ Ucol + p.omega.eval_many(half)[..., None]
        qs = _rk4_forward(As, Cs, q, delta)
        q = qs[-1]

        w = simpson_weights(nodes.shape[0], delta)
        Wk = p.W.eval_many(nodes)
        Rk = p.R.eval_many(nodes)
        e = qs - p.x_ref.eval_many(nodes)[..., None]
        We = Wk @ e
        run += np.einsum("k,kal,kal->l", w, We, e)
        du = Ucol[None, :, :] - p.v_ref.eval_many(nodes)[..., None]
        Rdu = Rk @ du
        run += np.einsum("k,kal,kal->l", w, Rdu, du)
    if not np.all(np.isfinite(q)):
        raise NonFinite("state simulation diverged in batch")
    d = q - p.q_b[:, None]
    total = 0.5 * run + 0.5 * np.einsum("al,al->l", p.S @ d, d)
    return total
