"""Built-in multimodal test functions f1-f10 (maximization convention).

Each function accepts either a single point of shape (d,) or a batch of
shape (m, d).  Single points take a plain-math fast path because drivers
evaluate millions of individual positions; batches are vectorized for the
grid oracles.

Peak finders return every known global optimum.  Where optima are analytic
(f1, f2, f8, f9, f10) they are written down exactly; elsewhere they are
located by coarse scan plus high-precision refinement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError

_LOG2 = math.log(2.0)


# ---------------------------------------------------------------------------
# fitness formulas

def five_uneven_peak_trap(x) -> float | np.ndarray:
    """f1, 1D on [0, 30]: piecewise-linear trap, global maxima 200 at x=0 and x=30."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        c = float(x[0])
        if c < 2.5:
            return 80.0 * (2.5 - c)
        if c < 5.0:
            return 64.0 * (c - 2.5)
        if c < 7.5:
            return 64.0 * (7.5 - c)
        if c < 12.5:
            return 28.0 * (c - 7.5)
        if c < 17.5:
            return 28.0 * (17.5 - c)
        if c < 22.5:
            return 32.0 * (c - 17.5)
        if c < 27.5:
            return 32.0 * (27.5 - c)
        return 80.0 * (c - 27.5)
    c = x[..., 0]
    knots = [2.5, 5.0, 7.5, 12.5, 17.5, 22.5, 27.5]
    pieces = [
        80.0 * (2.5 - c), 64.0 * (c - 2.5), 64.0 * (7.5 - c), 28.0 * (c - 7.5),
        28.0 * (17.5 - c), 32.0 * (c - 17.5), 32.0 * (27.5 - c), 80.0 * (c - 27.5),
    ]
    conditions = [c < knots[0]] + [
        (c >= knots[i]) & (c < knots[i + 1]) for i in range(len(knots) - 1)
    ] + [c >= knots[-1]]
    return np.select(conditions, pieces)


def equal_maxima(x) -> float | np.ndarray:
    """f2, 1D on [0, 1]: sin^6(5 pi x), five equal maxima of 1."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return math.sin(5.0 * math.pi * float(x[0])) ** 6
    return np.sin(5.0 * np.pi * x[..., 0]) ** 6


def uneven_decreasing_maxima(x) -> float | np.ndarray:
    """f3, 1D on [0, 1]: decaying envelope times sin^6, single global maximum."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        c = float(x[0])
        env = math.exp(-2.0 * _LOG2 * ((c - 0.08) / 0.854) ** 2)
        return env * math.sin(5.0 * math.pi * (c ** 0.75 - 0.05)) ** 6
    c = x[..., 0]
    env = np.exp(-2.0 * _LOG2 * ((c - 0.08) / 0.854) ** 2)
    return env * np.sin(5.0 * np.pi * (c ** 0.75 - 0.05)) ** 6


def himmelblau(x) -> float | np.ndarray:
    """f4, 2D on [-6, 6]^2: 200 - Himmelblau, four equal maxima of 200."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        a, b = float(x[0]), float(x[1])
        return 200.0 - (a * a + b - 11.0) ** 2 - (a + b * b - 7.0) ** 2
    a, b = x[..., 0], x[..., 1]
    return 200.0 - (a * a + b - 11.0) ** 2 - (a + b * b - 7.0) ** 2


def six_hump_camel_back(x) -> float | np.ndarray:
    """f5, 2D on [-1.9, 1.9] x [-1.1, 1.1]: inverted six-hump camel, two maxima."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        a, b = float(x[0]), float(x[1])
        a2 = a * a
        b2 = b * b
        return -((4.0 - 2.1 * a2 + a2 * a2 / 3.0) * a2 + a * b + (4.0 * b2 - 4.0) * b2)
    a, b = x[..., 0], x[..., 1]
    a2 = a * a
    b2 = b * b
    return -((4.0 - 2.1 * a2 + a2 * a2 / 3.0) * a2 + a * b + (4.0 * b2 - 4.0) * b2)


def shubert(x) -> float | np.ndarray:
    """f6/f7 on [-10, 10]^d: negated Shubert product, d*3^d global maxima."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        prod = 1.0
        for c in x:
            c = float(c)
            s = 0.0
            for j in range(1, 6):
                s += j * math.cos((j + 1) * c + j)
            prod *= s
        return -prod
    acc = np.zeros_like(x)
    for j in range(1, 6):
        acc += j * np.cos((j + 1) * x + j)
    return -np.prod(acc, axis=-1)


def vincent(x) -> float | np.ndarray:
    """f8/f9 on [0.25, 10]^d: mean of sin(10 ln x_i), 6^d global maxima of 1."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        s = 0.0
        for c in x:
            s += math.sin(10.0 * math.log(float(c)))
        return s / x.shape[0]
    return np.mean(np.sin(10.0 * np.log(x)), axis=-1)


def modified_rastrigin(x, k=(3.0, 4.0)) -> float | np.ndarray:
    """f10, 2D on [0, 1]^2 with wave counts k=(3, 4): 12 global maxima of -2."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        s = 0.0
        for c, ki in zip(x, k):
            s += 10.0 + 9.0 * math.cos(2.0 * math.pi * ki * float(c))
        return -s
    ks = np.asarray(k, dtype=float)
    return -np.sum(10.0 + 9.0 * np.cos(2.0 * np.pi * ks * x), axis=-1)


# ---------------------------------------------------------------------------
# peak finders

def _refine_1d(f: Callable[[float], float], lo: float, hi: float) -> float:
    res = minimize_scalar(
        lambda c: -f(c), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-13},
    )
    return float(res.x)


def _scan_extrema_1d(f, lo, hi, n_grid, kind):
    """Grid-scan f on [lo, hi] and refine every interior local min/max."""
    xs = np.linspace(lo, hi, n_grid)
    v = np.array([f(float(c)) for c in xs])
    sign = 1.0 if kind == "max" else -1.0
    sv = sign * v
    idx = np.where((sv[1:-1] >= sv[:-2]) & (sv[1:-1] >= sv[2:]))[0] + 1
    points = []
    for i in idx:
        res = minimize_scalar(
            lambda c: -sign * f(c), bounds=(xs[i - 1], xs[i + 1]), method="bounded",
            options={"xatol": 1e-13},
        )
        points.append((float(res.x), float(f(float(res.x)))))
    return points


def _newton_2d(grad_hess, x0, iters=60):
    x = np.array(x0, dtype=float)
    for _ in range(iters):
        g, h = grad_hess(x)
        try:
            step = np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            break
        x -= step
        if np.max(np.abs(step)) < 1e-14:
            break
    return x


def _peaks_trap():
    return np.array([[0.0], [30.0]]), np.array([200.0, 200.0])


def _peaks_equal_maxima():
    xs = np.array([[0.1], [0.3], [0.5], [0.7], [0.9]])
    return xs, np.array([equal_maxima(p) for p in xs])


def _peaks_uneven_decreasing():
    f = lambda c: float(uneven_decreasing_maxima(np.array([c])))
    xs = np.linspace(1e-9, 1.0, 20001)
    i = int(np.argmax(uneven_decreasing_maxima(xs[:, None])))
    x = _refine_1d(f, xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)])
    return np.array([[x]]), np.array([f(x)])


def _peaks_himmelblau():
    # Newton on the gradient of (x^2+y-11)^2 + (x+y^2-7)^2 from known basin seeds
    def grad_hess(z):
        a, b = z
        p = a * a + b - 11.0
        q = a + b * b - 7.0
        g = np.array([4.0 * a * p + 2.0 * q, 2.0 * p + 4.0 * b * q])
        h = np.array([
            [12.0 * a * a + 4.0 * b - 42.0, 4.0 * a + 4.0 * b],
            [4.0 * a + 4.0 * b, 4.0 * a + 12.0 * b * b - 26.0],
        ])
        return g, h

    seeds = [(3.0, 2.0), (-2.8, 3.1), (-3.8, -3.3), (3.6, -1.8)]
    pts = np.array([_newton_2d(grad_hess, s) for s in seeds])
    return pts, np.array([himmelblau(p) for p in pts])


def _peaks_six_hump():
    # stationary points of the camel polynomial: grad f = (p'(a) + b, a + q'(b))
    def grad_hess(z):
        a, b = z
        g = np.array([8.0 * a - 8.4 * a ** 3 + 2.0 * a ** 5 + b,
                      a + 16.0 * b ** 3 - 8.0 * b])
        h = np.array([
            [8.0 - 25.2 * a * a + 10.0 * a ** 4, 1.0],
            [1.0, 48.0 * b * b - 8.0],
        ])
        return g, h

    seeds = [(0.09, -0.71), (-0.09, 0.71)]
    pts = np.array([_newton_2d(grad_hess, s) for s in seeds])
    return pts, np.array([six_hump_camel_back(p) for p in pts])


def _shubert_factor(c: float) -> float:
    s = 0.0
    for j in range(1, 6):
        s += j * math.cos((j + 1) * c + j)
    return s


def _shubert_axis_extremes():
    """Global minimizers and maximizers of the 1D Shubert factor on [-10, 10]."""
    mins = _scan_extrema_1d(_shubert_factor, -10.0, 10.0, 40001, "min")
    maxs = _scan_extrema_1d(_shubert_factor, -10.0, 10.0, 40001, "max")
    vmin = min(v for _, v in mins)
    vmax = max(v for _, v in maxs)
    arg_min = sorted(x for x, v in mins if v < vmin + 1e-9)
    arg_max = sorted(x for x, v in maxs if v > vmax - 1e-9)
    return arg_min, arg_max


def _peaks_shubert(dimension: int):
    # The product of 1D factors is most negative with exactly one factor at its
    # global minimum (negative) and the rest at the global maximum, so maxima
    # of the negated product are compositions of those axis extremes.
    arg_min, arg_max = _shubert_axis_extremes()
    pts = []
    def emit(prefix, neg_axis):
        if len(prefix) == dimension:
            pts.append(list(prefix))
            return
        pool = arg_min if len(prefix) == neg_axis else arg_max
        for c in pool:
            emit(prefix + [c], neg_axis)
    for axis in range(dimension):
        emit([], axis)
    positions = np.array(pts)
    return positions, np.array([shubert(p) for p in positions])


def _peaks_vincent(dimension: int):
    axis = [math.exp((math.pi / 2.0 + 2.0 * math.pi * m) / 10.0) for m in range(-2, 4)]
    grids = np.meshgrid(*([axis] * dimension), indexing="ij")
    positions = np.stack([g.ravel() for g in grids], axis=-1)
    return positions, np.array([vincent(p) for p in positions])


def _peaks_modified_rastrigin():
    xs = [(2 * j + 1) / 6.0 for j in range(3)]
    ys = [(2 * j + 1) / 8.0 for j in range(4)]
    positions = np.array([[a, b] for a in xs for b in ys])
    return positions, np.array([modified_rastrigin(p) for p in positions])


# ---------------------------------------------------------------------------
# catalogue

@dataclass(frozen=True)
class FunctionDef:
    id: str
    name: str
    dimension: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    peak_count: int
    fitness: Callable
    find_peaks: Callable[[], tuple[np.ndarray, np.ndarray]]


BUILTINS: dict[str, FunctionDef] = {
    "f1": FunctionDef("f1", "Five-Uneven-Peak Trap", 1, (0.0,), (30.0,), 2,
                      five_uneven_peak_trap, _peaks_trap),
    "f2": FunctionDef("f2", "Equal Maxima", 1, (0.0,), (1.0,), 5,
                      equal_maxima, _peaks_equal_maxima),
    "f3": FunctionDef("f3", "Uneven Decreasing Maxima", 1, (0.0,), (1.0,), 1,
                      uneven_decreasing_maxima, _peaks_uneven_decreasing),
    "f4": FunctionDef("f4", "Himmelblau", 2, (-6.0, -6.0), (6.0, 6.0), 4,
                      himmelblau, _peaks_himmelblau),
    "f5": FunctionDef("f5", "Six-Hump Camel Back", 2, (-1.9, -1.1), (1.9, 1.1), 2,
                      six_hump_camel_back, _peaks_six_hump),
    "f6": FunctionDef("f6", "Shubert 2D", 2, (-10.0, -10.0), (10.0, 10.0), 18,
                      shubert, lambda: _peaks_shubert(2)),
    "f7": FunctionDef("f7", "Shubert 3D", 3, (-10.0,) * 3, (10.0,) * 3, 81,
                      shubert, lambda: _peaks_shubert(3)),
    "f8": FunctionDef("f8", "Vincent 2D", 2, (0.25, 0.25), (10.0, 10.0), 36,
                      vincent, lambda: _peaks_vincent(2)),
    "f9": FunctionDef("f9", "Vincent 3D", 3, (0.25,) * 3, (10.0,) * 3, 216,
                      vincent, lambda: _peaks_vincent(3)),
    "f10": FunctionDef("f10", "Modified Rastrigin", 2, (0.0, 0.0), (1.0, 1.0), 12,
                       modified_rastrigin, _peaks_modified_rastrigin),
}


def builtin_def(function_id: str) -> FunctionDef:
    try:
        return BUILTINS[function_id]
    except KeyError:
        raise ConfigurationError(
            f"unknown function {function_id!r}; built-ins are f1..f10"
        ) from None
