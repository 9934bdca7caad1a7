"""Problem data: time-dependent coefficients, the LQ problem record, sampling grids.

The cost functional being minimized over piecewise-constant (zero-order-hold)
controls is

    C(u) = 1/2 <S (q(b) - q_b), q(b) - q_b>
         + 1/2 int_a^b [ <W(t)(q - x), q - x> + <R(t)(u - v), u - v> ] dt

subject to  dq/dt = A(t) q + B(t) u + omega(t),  q(a) = q_a.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    DurationMismatch,
    InvalidInterval,
    NonPositiveDuration,
    NotPD,
    NotPSD,
    ValidationError,
)

TOL_PD = 1e-10
DEFAULT_PROBES = 33

# named coefficient callables usable from problem files: name -> (shape, fn)
_BUILTIN_COEFFICIENTS: dict = {}


def register_coefficient(name: str, shape, fn: Callable) -> None:
    """Register a named pure callable for use as a 'builtin' coefficient."""
    _BUILTIN_COEFFICIENTS[name] = (tuple(shape), fn)


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


class CoefficientFunction:
    """A pure time-dependent matrix or vector coefficient.

    kind is 'constant', 'poly' (per-entry polynomial in t, lowest degree
    first) or 'builtin' (named callable).  Evaluation at equal times is
    bitwise identical; for 'builtin' that purity is the callable's
    responsibility.

    Parameters
    ----------
    kind : str
    shape : tuple
        (rows, cols) for matrices, (n,) for vectors.
    data : ndarray or callable
        Constant value, polynomial coefficient stack of shape (deg+1, *shape),
        or the callable itself.
    """

    __slots__ = ("kind", "shape", "data", "name", "_sym")

    def __init__(self, kind, shape, data, name=None, _sym=False):
        self.kind = kind
        self.shape = tuple(shape)
        self.data = data
        self.name = name
        self._sym = _sym

    @classmethod
    def constant(cls, value) -> "CoefficientFunction":
        arr = _readonly(value)
        return cls("constant", arr.shape, arr)

    @classmethod
    def poly(cls, coeffs) -> "CoefficientFunction":
        """Per-entry polynomial coefficients, lowest degree first.

        coeffs is a nested list matching the target shape, each entry a list
        [c0, c1, ...]; entries are zero-padded to a common degree.
        """
        lists = coeffs.tolist() if isinstance(coeffs, np.ndarray) else coeffs
        shape = _poly_shape(lists)
        flat: list = []
        _poly_flatten(lists, len(shape), flat)
        deg = max(len(c) for c in flat)
        stack = np.zeros((deg,) + shape)
        for idx, c in enumerate(flat):
            loc = np.unravel_index(idx, shape) if shape else ()
            for d, cd in enumerate(c):
                stack[(d,) + loc] = float(cd)
        stack.setflags(write=False)
        return cls("poly", shape, stack)

    @classmethod
    def builtin(cls, name: str) -> "CoefficientFunction":
        if name not in _BUILTIN_COEFFICIENTS:
            raise ValidationError(f"unknown builtin coefficient: {name!r}")
        shape, fn = _BUILTIN_COEFFICIENTS[name]
        return cls("builtin", shape, fn, name=name)

    @classmethod
    def zeros(cls, shape) -> "CoefficientFunction":
        return cls.constant(np.zeros(shape))

    def __call__(self, t: float) -> np.ndarray:
        if self.kind == "constant":
            return self.data
        if self.kind == "poly":
            out = np.array(self.data[-1])
            for d in range(self.data.shape[0] - 2, -1, -1):
                out *= t
                out += self.data[d]
            return out
        out = np.asarray(self.data(t), dtype=float)
        if out.shape != self.shape:
            raise DimensionMismatch(
                f"builtin {self.name!r} returned shape {out.shape}, declared {self.shape}"
            )
        if self._sym:
            out = 0.5 * (out + out.T)
        return out

    def eval_many(self, ts: np.ndarray) -> np.ndarray:
        """Values at all times in ts, stacked along a leading axis."""
        ts = np.asarray(ts, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(self.data, ts.shape + self.shape)
        if self.kind == "poly":
            tcol = ts.reshape(ts.shape + (1,) * len(self.shape))
            out = np.broadcast_to(self.data[-1], ts.shape + self.shape).copy()
            for d in range(self.data.shape[0] - 2, -1, -1):
                out *= tcol
                out += self.data[d]
            return out
        return np.stack([self(t) for t in ts])

    def symmetrized(self) -> "CoefficientFunction":
        """Coefficient with values replaced by their symmetric parts."""
        if self._sym:
            return self
        if len(self.shape) != 2 or self.shape[0] != self.shape[1]:
            raise DimensionMismatch(f"cannot symmetrize shape {self.shape}")
        if self.kind == "constant":
            return CoefficientFunction(
                "constant", self.shape, _readonly(0.5 * (self.data + self.data.T)), _sym=True
            )
        if self.kind == "poly":
            sym = 0.5 * (self.data + np.swapaxes(self.data, 1, 2))
            sym.setflags(write=False)
            return CoefficientFunction("poly", self.shape, sym, _sym=True)
        return CoefficientFunction("builtin", self.shape, self.data, name=self.name, _sym=True)

    def is_zero(self) -> bool:
        """True when the coefficient is structurally zero (constant/poly only)."""
        if self.kind in ("constant", "poly"):
            return not np.any(self.data)
        return False

    def to_jsonable(self):
        if self.kind == "constant":
            return self.data.tolist()
        if self.kind == "poly":
            deg = self.data.shape[0]
            def entry(loc):
                return [self.data[(d,) + loc] for d in range(deg)]
            if len(self.shape) == 1:
                return {"poly": [entry((i,)) for i in range(self.shape[0])]}
            return {
                "poly": [
                    [entry((i, j)) for j in range(self.shape[1])]
                    for i in range(self.shape[0])
                ]
            }
        return {"builtin": self.name}


def _poly_shape(lists) -> tuple:
    """Shape of the entry grid: nesting above the innermost coefficient lists."""
    if not isinstance(lists, list) or not lists:
        raise DimensionMismatch("polynomial coefficient data must be nested lists")
    if all(isinstance(v, (int, float)) for v in lists):
        return ()  # a bare coefficient list: scalar entry
    if all(isinstance(v, list) and v and all(isinstance(c, (int, float)) for c in v) for v in lists):
        return (len(lists),)
    inner = _poly_shape(lists[0])
    return (len(lists),) + inner


def _poly_flatten(lists, levels: int, out: list) -> None:
    if levels == 0:
        out.append([float(c) for c in lists])
        return
    for sub in lists:
        _poly_flatten(sub, levels - 1, out)


def as_coefficient(value, shape) -> CoefficientFunction:
    """Wrap plain arrays/scalars/callables as a CoefficientFunction of  shape."""
    if isinstance(value, CoefficientFunction):
        cf = value
    elif callable(value):
        cf = CoefficientFunction("builtin", tuple(shape), value, name=getattr(value, "__name__", "callable"))
    else:
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            arr = np.full(shape, float(arr))
        cf = CoefficientFunction.constant(arr)
    if cf.shape != tuple(shape):
        raise DimensionMismatch(f"coefficient shape {cf.shape}, expected {tuple(shape)}")
    return cf


@dataclass(frozen=True, eq=False)
class LQProblem:
    """Full data of one LQ problem; immutable once validated."""

    a: float
    b: float
    n: int
    m: int
    A: CoefficientFunction
    B: CoefficientFunction
    W: CoefficientFunction
    R: CoefficientFunction
    S: np.ndarray
    omega: CoefficientFunction
    x_ref: CoefficientFunction
    v_ref: CoefficientFunction
    q_a: np.ndarray
    q_b: np.ndarray
    validated: bool = False
    c_R: Optional[float] = None

    def is_homogeneous(self) -> bool:
        """True when all forcing data (omega, x, v, q_b) is structurally zero."""
        return (
            self.omega.is_zero()
            and self.x_ref.is_zero()
            and self.v_ref.is_zero()
            and not np.any(self.q_b)
        )


def make_problem(a, b, A, B, W, R, S, q_a, omega=None, x=None, v=None, q_b=None) -> LQProblem:
    """Convenience constructor: wraps plain data, fills zero defaults."""
    q_a = np.atleast_1d(np.asarray(q_a, dtype=float))
    n = q_a.shape[0]
    # control dimension comes from B's column count
    if isinstance(B, CoefficientFunction):
        m = B.shape[1]
    elif callable(B):
        m = np.atleast_2d(np.asarray(B(float(a)), dtype=float)).shape[1]
    else:
        arr = np.asarray(B, dtype=float)
        m = 1 if arr.ndim < 2 else arr.shape[1]
        B = arr.reshape(n, m)
    p = LQProblem(
        a=float(a),
        b=float(b),
        n=n,
        m=m,
        A=as_coefficient(_as_matrix(A, n, n), (n, n)),
        B=as_coefficient(B, (n, m)),
        W=as_coefficient(_as_matrix(W, n, n), (n, n)),
        R=as_coefficient(_as_matrix(R, m, m), (m, m)),
        S=_readonly(_as_matrix(S, n, n) if not isinstance(S, CoefficientFunction) else S.data),
        omega=_vector_coefficient(omega, n),
        x_ref=_vector_coefficient(x, n),
        v_ref=_vector_coefficient(v, m),
        q_a=_readonly(q_a),
        q_b=_readonly(np.zeros(n) if q_b is None else np.atleast_1d(np.asarray(q_b, dtype=float))),
    )
    return p


def _as_matrix(value, rows, cols):
    if isinstance(value, CoefficientFunction) or callable(value):
        return value
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        if rows != cols and not (rows == 1 or cols == 1):
            raise DimensionMismatch("scalar shorthand only valid for square or vector shapes")
        out = np.zeros((rows, cols))
        if rows == cols:
            np.fill_diagonal(out, float(arr))
        else:
            out[:] = float(arr)
        return out
    if arr.ndim == 1:
        if rows == 1 or cols == 1:
            return arr.reshape(rows, cols)
        raise DimensionMismatch(f"expected a {rows}x{cols} matrix")
    return arr


def _vector_coefficient(value, dim) -> CoefficientFunction:
    if value is None:
        return CoefficientFunction.zeros((dim,))
    if isinstance(value, CoefficientFunction):
        if value.shape != (dim,):
            raise DimensionMismatch(f"vector coefficient shape {value.shape}, expected ({dim},)")
        return value
    if callable(value):
        return CoefficientFunction("builtin", (dim,), value, name=getattr(value, "__name__", "callable"))
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.shape != (dim,):
        raise DimensionMismatch(f"vector coefficient shape {arr.shape}, expected ({dim},)")
    return CoefficientFunction.constant(arr)


def validate_problem(p: LQProblem, probes: int = DEFAULT_PROBES) -> LQProblem:
    """Check dimensions and definiteness; return the validated problem.

    S, W(t), R(t) are symmetrized as (M + M^T)/2 before the checks.  PSD/PD
    holds only at `probes` equally spaced times; with continuous coefficients
    this is a practical guard, not a proof.
    """
    if probes < 2:
        raise ValidationError("probes must be at least 2")
    if not p.a < p.b:
        raise InvalidInterval(f"need a < b, got a={p.a}, b={p.b}")
    n, m = p.n, p.m
    _expect_shape("A", p.A.shape, (n, n))
    _expect_shape("B", p.B.shape, (n, m))
    _expect_shape("W", p.W.shape, (n, n))
    _expect_shape("R", p.R.shape, (m, m))
    _expect_shape("S", p.S.shape, (n, n))
    _expect_shape("omega", p.omega.shape, (n,))
    _expect_shape("x", p.x_ref.shape, (n,))
    _expect_shape("v", p.v_ref.shape, (m,))
    _expect_shape("q_a", p.q_a.shape, (n,))
    _expect_shape("q_b", p.q_b.shape, (n,))

    S = 0.5 * (p.S + p.S.T)
    W = p.W.symmetrized()
    R = p.R.symmetrized()

    s_min = float(np.linalg.eigvalsh(S)[0])
    if s_min < -TOL_PD:
        raise NotPSD("S", p.a, s_min)

    ts = np.linspace(p.a, p.b, probes)
    c_R = np.inf
    for t in ts:
        for name, cf in (("A", p.A), ("B", p.B), ("omega", p.omega), ("x", p.x_ref), ("v", p.v_ref)):
            val = cf(t)
            if not np.all(np.isfinite(val)):
                raise ValidationError(f"{name}({t}) is not finite")
        w_t = W(t)
        if not np.all(np.isfinite(w_t)):
            raise ValidationError(f"W({t}) is not finite")
        w_min = float(np.linalg.eigvalsh(w_t)[0])
        if w_min < -TOL_PD:
            raise NotPSD("W", t, w_min)
        r_t = R(t)
        if not np.all(np.isfinite(r_t)):
            raise ValidationError(f"R({t}) is not finite")
        r_min = float(np.linalg.eigvalsh(r_t)[0])
        if r_min <= TOL_PD:
            raise NotPD("R", t, r_min)
        c_R = min(c_R, r_min)

    return replace(p, S=_readonly(S), W=W, R=R, validated=True, c_R=float(c_R))


def _expect_shape(name, got, want):
    if tuple(got) != tuple(want):
        raise DimensionMismatch(f"{name} has shape {tuple(got)}, expected {tuple(want)}")


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Subdivision of [a, b]: durations h_i and sample times s_i.

    s[i+1] - s[i] == h[i] holds exactly: h is recomputed from s after the
    final node is snapped to b.
    """

    h: np.ndarray
    s: np.ndarray

    @property
    def N(self) -> int:
        return self.h.shape[0]

    @property
    def a(self) -> float:
        return float(self.s[0])

    @property
    def b(self) -> float:
        return float(self.s[-1])

    @property
    def norm_delta(self) -> float:
        return float(np.max(self.h))

    def tail(self, j: int) -> "SamplingGrid":
        """Sub-grid over [s_j, b], sharing node values bitwise."""
        if not 0 <= j < self.N:
            raise InvalidInterval(f"tail index {j} out of range for N={self.N}")
        return SamplingGrid(h=self.h[j:], s=self.s[j:])


def _grid_from_nodes(s: np.ndarray) -> SamplingGrid:
    h = np.diff(s)
    if np.any(h <= 0):
        raise NonPositiveDuration("sample times must be strictly increasing")
    s.setflags(write=False)
    h.setflags(write=False)
    return SamplingGrid(h=h, s=s)


def uniform_grid(N: int, a: float, b: float) -> SamplingGrid:
    if not a < b:
        raise InvalidInterval(f"need a < b, got a={a}, b={b}")
    if N < 1:
        raise InvalidInterval(f"need N >= 1, got {N}")
    s = np.linspace(float(a), float(b), N + 1)
    return _grid_from_nodes(s)


def grid_from_durations(h, a: float, b: float) -> SamplingGrid:
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(h <= 0):
        raise NonPositiveDuration(f"durations must be positive, got {h.tolist()}")
    if not a < b:
        raise InvalidInterval(f"need a < b, got a={a}, b={b}")
    total = float(np.sum(h))
    span = float(b) - float(a)
    if abs(total - span) > 1e-12 * max(1.0, abs(span)):
        raise DurationMismatch(f"durations sum to {total!r}, interval length is {span!r}")
    s = np.concatenate(([float(a)], float(a) + np.cumsum(h)))
    s[-1] = float(b)
    return _grid_from_nodes(s)


def load_problem(source) -> LQProblem:
    """Build an (unvalidated) problem from a JSON file path or a parsed dict.

    Matrices are nested arrays (constant) or {"poly": [[[c0, c1, ...], ...], ...]}
    with per-entry polynomial coefficients in t, lowest degree first; vectors
    likewise.  Missing omega, x, v, q_b default to zero.
    """
    if isinstance(source, dict):
        doc = source
    else:
        with open(source) as f:
            doc = json.load(f)
    for key in ("a", "b", "n", "m", "A", "B", "W", "R", "S", "qa"):
        if key not in doc:
            raise ValidationError(f"problem file missing field {key!r}")
    n = int(doc["n"])
    m = int(doc["m"])
    if n < 1 or m < 1:
        raise DimensionMismatch(f"need positive dimensions, got n={n}, m={m}")
    if isinstance(doc["S"], dict):
        raise ValidationError("S must be a constant matrix")
    return LQProblem(
        a=float(doc["a"]),
        b=float(doc["b"]),
        n=n,
        m=m,
        A=_coefficient_from_json(doc["A"], (n, n), "A"),
        B=_coefficient_from_json(doc["B"], (n, m), "B"),
        W=_coefficient_from_json(doc["W"], (n, n), "W"),
        R=_coefficient_from_json(doc["R"], (m, m), "R"),
        S=_readonly(np.asarray(doc["S"], dtype=float).reshape(n, n)),
        omega=_coefficient_from_json(doc.get("omega"), (n,), "omega"),
        x_ref=_coefficient_from_json(doc.get("x"), (n,), "x"),
        v_ref=_coefficient_from_json(doc.get("v"), (m,), "v"),
        q_a=_readonly(np.asarray(doc["qa"], dtype=float).reshape(n)),
        q_b=_readonly(np.asarray(doc.get("qb", np.zeros(n)), dtype=float).reshape(n)),
    )


def _coefficient_from_json(value, shape, name) -> CoefficientFunction:
    if value is None:
        return CoefficientFunction.zeros(shape)
    if isinstance(value, dict):
        if "poly" in value:
            cf = CoefficientFunction.poly(value["poly"])
        elif "builtin" in value:
            cf = CoefficientFunction.builtin(value["builtin"])
        else:
            raise ValidationError(f"{name}: expected a nested array, 'poly' or 'builtin' object")
        if cf.shape != tuple(shape):
            raise DimensionMismatch(f"{name} has shape {cf.shape}, expected {tuple(shape)}")
        return cf
    arr = np.asarray(value, dtype=float)
    try:
        arr = arr.reshape(shape)
    except ValueError:
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {tuple(shape)}") from None
    return CoefficientFunction.constant(arr)
